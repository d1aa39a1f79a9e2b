import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tvmi.cointegration import johansen
from tvmi.errors import (
    AlignmentError,
    CollinearityError,
    ConditioningError,
    DegenerateError,
    InsufficientDataError,
    ParameterError,
)
from tvmi.series import LogPanel
from tvmi.synth import _HUB, _OWN, _star_alpha, generate, scenario
from tvmi.vecm import (
    bic_sequence,
    fit_vecm,
    fit_vecm_bivariate,
    hac_se,
    hansen_lc,
    newey_west_lags,
    select_lag_bic,
)


@pytest.fixture(scope="module")
def panel():
    return generate(scenario("constant", seed=21))[0]


def test_layout_and_names(panel):
    fit = fit_vecm(None, panel, 2)
    assert fit.param_names == (
        "dm1(t-1)", "dm2(t-1)", "dm3(t-1)", "dhub(t-1)",
        "const", "m1(t-1)", "m2(t-1)", "m3(t-1)", "hub(t-1)",
    )
    assert fit.params.shape == (9, 4)
    assert fit.gamma.shape == (4, 4) and fit.pi.shape == (4, 5)
    assert fit.nobs == panel.nobs - 2
    assert fit.lc_nparams == 40
    r = fit_vecm(None, panel, 3, beta=scenario("constant").beta)
    assert r.param_names[-3:] == ("ec1(t-1)", "ec2(t-1)", "ec3(t-1)")
    assert r.param_names[:4] == ("dm1(t-1)", "dm2(t-1)", "dm3(t-1)", "dhub(t-1)")
    assert r.params.shape == (11, 4)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_normal_equations_and_decomposition(panel, k):
    fit = fit_vecm(None, panel, k)
    X, E = fit.regressors, fit.residuals
    scale = np.linalg.norm(X, axis=0)[:, None] * np.linalg.norm(E, axis=0)[None, :]
    assert np.max(np.abs(X.T @ E) / scale) <= 1e-8
    assert np.max(np.abs(fit.pi - fit.alpha @ fit.beta.T)) <= 1e-10
    assert np.max(np.abs(E.mean(axis=0))) <= 1e-10
    assert np.all(fit.hac_se > 0)


def test_adjusted_r2_textbook_oracle(panel):
    fit = fit_vecm(None, panel, 2)
    N, p = fit.regressors.shape
    y = fit.fitted + fit.residuals
    for j in range(4):
        ssr = sum(e * e for e in fit.residuals[:, j])
        ybar = sum(y[:, j]) / N
        sst = sum((v - ybar) ** 2 for v in y[:, j])
        r2 = 1.0 - ssr / sst
        adj = 1.0 - (1.0 - r2) * (N - 1) / (N - p)
        assert abs(fit.r2_adj[j] - adj) <= 1e-12


def test_adjusted_r2_matches_statsmodels(panel):
    sm = pytest.importorskip("statsmodels.api")
    fit = fit_vecm(None, panel, 2)
    y = fit.fitted + fit.residuals
    for j in range(4):
        ols = sm.OLS(y[:, j], fit.regressors).fit()
        assert abs(ols.rsquared_adj - fit.r2_adj[j]) <= 1e-10
        assert np.max(np.abs(ols.params - fit.params[:, j])) <= 1e-9


def test_hac_matches_statsmodels(rng):
    sm = pytest.importorskip("statsmodels.api")
    X = np.column_stack([np.ones(200), rng.standard_normal((200, 2))])
    y = X @ [1.0, 0.5, -0.3] + rng.standard_normal(200)
    ols = sm.OLS(y, X).fit()
    hc0 = ols.get_robustcov_results("HC0").bse
    assert np.max(np.abs(hac_se(X, ols.resid, 0) - hc0)) <= 1e-10
    nw = ols.get_robustcov_results("HAC", maxlags=5, use_correction=False).bse
    assert np.max(np.abs(hac_se(X, ols.resid, 5) - nw)) <= 1e-10


def test_hac_zero_lags_is_heteroskedasticity_robust(rng):
    # with zero lags the Bartlett sandwich is White's HC0 estimator, not the
    # classical s^2 (X'X)^-1; the two agree only in expectation
    X = np.column_stack([np.ones(400), rng.standard_normal(400)])
    e = rng.standard_normal(400)
    classical = np.sqrt(np.diag((e @ e) / 400 * np.linalg.inv(X.T @ X)))
    assert np.allclose(hac_se(X, e, 0), classical, rtol=0.15)


def test_newey_west_lags():
    assert newey_west_lags(618) == 5
    assert newey_west_lags(100) == 4


def test_hac_errors(rng):
    X = np.column_stack([np.ones(50), np.zeros(50)])
    with pytest.raises(DegenerateError):
        hac_se(X, rng.standard_normal(50))


def test_scaling_equivariance(panel):
    base = fit_vecm(None, panel, 2)
    scaled = fit_vecm(None, LogPanel(panel.names, panel.start, 2.0 * panel.values), 2)
    m = 4
    # short-run block and slopes are scale free; the constant doubles
    assert np.allclose(scaled.params[:m], base.params[:m], rtol=1e-8, atol=1e-12)
    assert np.allclose(scaled.hac_se[:m], base.hac_se[:m], rtol=1e-8)
    assert np.allclose(scaled.params[m], 2.0 * base.params[m], rtol=1e-8)
    assert np.allclose(scaled.hac_se[m], 2.0 * base.hac_se[m], rtol=1e-8)
    assert np.allclose(scaled.params[m + 1 :], base.params[m + 1 :], rtol=1e-8, atol=1e-12)
    assert np.allclose(scaled.r2_adj, base.r2_adj, rtol=1e-10)


@settings(max_examples=15)
@given(st.integers(0, 3), st.floats(0.05, 20.0))
def test_lc_invariant_to_scaling_one_series(panel, col, c):
    base = fit_vecm(None, panel, 2)
    L = panel.values.copy()
    L[:, col] *= c
    moved = fit_vecm(None, L, 2)
    assert abs(moved.lc_stat - base.lc_stat) <= 1e-8 * max(1.0, base.lc_stat)


def test_lc_conditioning_error(rng):
    X = np.ones((100, 1))
    e = np.where(np.arange(100) % 2 == 0, 1.0, -1.0)  # e^2 constant: variance score is zero
    with pytest.raises(ConditioningError):
        hansen_lc(X, e)


def test_collinearity_names_columns(panel):
    L = panel.values.copy()
    L[:, 3] = L[:, 0] + 0.5
    with pytest.raises(CollinearityError, match="hub"):
        fit_vecm(None, LogPanel(panel.names, panel.start, L), 2)
    with pytest.raises(ParameterError):
        fit_vecm(None, panel, 2, beta=np.ones((3, 1)))


def test_rank_n_refit_consistency(panel):
    fit = fit_vecm(None, panel, 2)
    refit = fit_vecm(None, panel, 2, beta=fit.beta)
    assert np.max(np.abs(refit.fitted - fit.fitted)) <= 1e-8
    assert np.max(np.abs(refit.params[4:].T - fit.alpha)) <= 1e-8


@pytest.mark.slow
def test_coefficient_recovery_against_truth():
    sc = scenario("constant")
    truth = np.vstack([0.1 * np.eye(4), _star_alpha(4, _OWN, _HUB).T])
    est, se = [], []
    for s in range(100):
        f = fit_vecm(None, generate(sc, seed=1000 + s)[0], 2, beta=sc.beta)
        est.append(f.params)
        se.append(f.hac_se)
    est, se = np.array(est), np.array(se)
    rmse = np.sqrt(((est - truth) ** 2).mean(axis=0))
    assert np.all(rmse <= 3.0 * est.std(axis=0, ddof=1))
    assert np.all(rmse <= 3.0 * se.mean(axis=0))


@pytest.mark.slow
def test_hac_coverage_under_ar1_errors():
    rng = np.random.default_rng(8)
    T, hits = 600, 0
    for _ in range(500):
        u = rng.standard_normal((T + 50, 2))
        x = np.zeros(T + 50)
        e = np.zeros(T + 50)
        for t in range(1, T + 50):
            x[t] = 0.5 * x[t - 1] + u[t, 0]
            e[t] = 0.5 * e[t - 1] + u[t, 1]
        X = np.column_stack([np.ones(T), x[50:]])
        y = 1.0 + 0.5 * x[50:] + e[50:]
        b, *_ = np.linalg.lstsq(X, y, rcond=None)
        s = hac_se(X, y - X @ b)[1]
        hits += abs(b[1] - 0.5) <= 1.959964 * s
    assert 0.90 <= hits / 500 <= 0.98


def var1_levels(rng, T):
    A = np.array([[0.5, 0.1], [0.0, 0.4]])
    d = np.zeros((T, 2))
    for t in range(1, T):
        d[t] = A @ d[t - 1] + rng.standard_normal(2)
    return np.cumsum(d, axis=0)


def test_bic_selects_var1_dynamics():
    # a VAR(1) in differences is a VAR(2) in levels: one lagged difference
    rng = np.random.default_rng(4)
    hits = sum(select_lag_bic(None, var1_levels(rng, 400), 6) == 2 for _ in range(200))
    assert hits >= 180


def test_bic_white_noise_differences_smallest_k():
    rng = np.random.default_rng(5)
    picks = [select_lag_bic(None, np.cumsum(rng.standard_normal((400, 2)), axis=0), 5) for _ in range(50)]
    assert np.mean(np.array(picks) == 1) >= 0.9


def test_bic_deterministic(panel):
    a = bic_sequence(None, panel, 4)
    b = bic_sequence(None, panel, 4)
    assert np.array_equal(a, b)
    with pytest.raises(ParameterError):
        bic_sequence(None, panel, 0)


def test_bivariate_cointegrated_case():
    panel, _ = generate(scenario("bivariate", seed=3))
    res = fit_vecm_bivariate(panel.values[:, 0], panel.values[:, 1], names=panel.names)
    assert res.coint.selected_rank == 1
    assert res.fit.params.shape == (5, 2)
    assert res.fit.param_names == ("dzeta(t-1)", "dtelegrams(t-1)", "const", "zeta(t-1)", "telegrams(t-1)")


def test_bivariate_independent_walks_negative_control():
    rng = np.random.default_rng(12)
    zero = 0
    for _ in range(100):
        a, b = np.cumsum(rng.standard_normal((2, 52)), axis=1)
        zero += fit_vecm_bivariate(a, b).coint.selected_rank == 0
    assert zero >= 90


@pytest.mark.slow
def test_bivariate_rank_recovery_rate():
    hits = 0
    for s in range(200):
        panel, _ = generate(scenario("bivariate", seed=s))
        hits += johansen(None, panel, 2).selected_rank == 1
    assert hits >= 160


def test_bivariate_errors():
    with pytest.raises(AlignmentError):
        fit_vecm_bivariate(np.ones(30), np.ones(31))
    with pytest.raises(InsufficientDataError):
        fit_vecm_bivariate(np.ones(15), np.ones(15))
