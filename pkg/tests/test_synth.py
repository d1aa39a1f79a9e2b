import numpy as np
import pytest

from tvmi.cointegration import johansen
from tvmi.errors import InstabilityError, ParameterError, ShapeError
from tvmi.synth import (
    SCENARIOS,
    Scenario,
    Schedule,
    companion,
    default_noise_cov,
    generate,
    scenario,
)


def test_schedules():
    a = np.array([[1.0], [2.0]])
    b = np.array([[3.0], [6.0]])
    assert np.array_equal(Schedule.constant(a).path(3), np.stack([a] * 3))
    ramp = Schedule.ramp(a, b).path(5)
    assert np.array_equal(ramp[0], a) and np.array_equal(ramp[-1], b)
    assert np.allclose(ramp[2], (a + b) / 2)
    step = Schedule.step(a, b, at=0.4).path(10)
    assert np.array_equal(step[3], a) and np.array_equal(step[4], b)
    seq = np.arange(6.0).reshape(3, 2, 1)
    assert np.array_equal(Schedule.sequence(seq).path(3), seq)
    assert Schedule.sequence(seq).shape == (2, 1)
    with pytest.raises(ShapeError):
        Schedule.sequence(seq).path(4)
    with pytest.raises(ParameterError):
        Schedule("spline", start=a)
    with pytest.raises(ParameterError):
        Schedule("ramp", start=a)
    with pytest.raises(ParameterError):
        Schedule.step(a, b, at=1.0)


def test_default_noise_cov():
    C = default_noise_cov(3, 2.0)
    assert np.array_equal(np.diag(C), [4.0, 4.0, 4.0])
    assert C[0, 1] == pytest.approx(1.2)


def test_companion_levels_var():
    G = 0.2 * np.eye(2)
    P = np.array([[-0.3, 0.3], [0.1, -0.1]])
    C = companion(G, P)
    assert np.allclose(C[:2, :2], np.eye(2) + P + G)
    assert np.allclose(C[:2, 2:], -G)
    assert np.allclose(C[2:, :2], np.eye(2))


@pytest.mark.parametrize("name", SCENARIOS)
def test_unit_root_count(name):
    sc = scenario(name)
    spectra = sc.companion_spectra()
    rank = 0 if name == "independent" else sc.r
    unit = np.sum(np.abs(spectra - 1.0) < 1e-6, axis=1)
    assert np.all(unit == sc.n - rank)
    assert np.all(spectra[:, sc.n - rank :] < 1.0)


def test_unstable_alpha_rejected():
    beta = np.array([[0.0], [1.0], [-1.0]])
    with pytest.raises(InstabilityError, match="period 0"):
        Scenario(2, 1, 50, beta, Schedule.constant([[1.5], [-1.5]]), Schedule.constant(np.zeros((2, 2))))
    # ramping into an explosive region fails at the first offending period
    with pytest.raises(InstabilityError, match=r"period [1-9]"):
        Scenario(2, 1, 50, beta, Schedule.ramp([[-0.5], [0.5]], [[1.5], [-1.5]]), Schedule.constant(np.zeros((2, 2))))


def test_scenario_validation():
    beta = np.array([[0.0], [1.0], [-1.0]])
    gam = Schedule.constant(np.zeros((2, 2)))
    with pytest.raises(ShapeError):
        Scenario(2, 1, 50, beta, Schedule.constant(np.zeros((3, 1))), gam)
    with pytest.raises(ParameterError):
        Scenario(2, 1, 50, beta, Schedule.constant([[-0.2], [0.1]]), gam, noise_cov=np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ParameterError):
        Scenario(2, 1, 50, beta, Schedule.constant([[-0.2], [0.1]]), gam, noise_cov=np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(ParameterError):
        scenario("nonesuch")


def test_same_seed_bit_identical():
    a, za = generate(scenario("paperlike", seed=7))
    b, zb = generate(scenario("paperlike", seed=7))
    c, _ = generate(scenario("paperlike", seed=8))
    assert np.array_equal(a.values, b.values) and np.array_equal(za, zb)
    assert not np.array_equal(a.values, c.values)
    d, _ = generate(scenario("paperlike", seed=8), seed=7)
    assert np.array_equal(a.values, d.values)


def test_panel_metadata():
    panel, zeta = generate(scenario("paperlike"))
    assert panel.names == ("m1", "m2", "m3", "hub")
    assert panel.values.shape == (620, 4) and zeta.shape == (620,)
    assert panel.start == (1900, 1)
    bi, _ = generate(scenario("bivariate"))
    assert bi.values.shape == (52, 2) and bi.start == (1880, 1)


def test_constant_scenario_zeta_exactly_constant():
    _, zeta = generate(scenario("constant"))
    assert np.all(zeta == zeta[0])
    _, ramp = generate(scenario("paperlike"))
    assert np.all(np.diff(ramp) > 0)


def test_error_correction_terms_mean_revert():
    sc = scenario("constant", T=4000)
    panel, _ = generate(sc)
    ec = np.column_stack([np.ones(panel.nobs), panel.values]) @ sc.beta
    early, late = ec[:1000].var(axis=0), ec[-1000:].var(axis=0)
    assert np.all(late < 2.0 * early) and np.all(early < 2.0 * late)
    walks = panel.values[:, 3]
    assert walks[-1000:].var() > ec[-1000:].var(axis=0).max()


def test_independent_scenario_negative_control():
    hits = sum(johansen(None, generate(scenario("independent", seed=s))[0], 2).selected_rank == 0 for s in range(40))
    assert hits >= 36


def test_explosion_reports_period(monkeypatch):
    import tvmi.synth as synth

    sc = scenario("constant", T=60)
    monkeypatch.setattr(synth, "LEVEL_BOUND", 1e-3)
    with pytest.raises(InstabilityError, match="burn-in step"):
        synth.generate(sc)
