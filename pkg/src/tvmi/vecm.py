"""Time-invariant VECM: least squares, Newey-West errors, Hansen L_c, BIC."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tvmi._design import names_of, values_of, vecm_design
from tvmi.cointegration import CointegrationResult, johansen
from tvmi.critical_values import lc_critical_value
from tvmi.errors import (
    AlignmentError,
    CollinearityError,
    ConditioningError,
    DegenerateError,
    InsufficientDataError,
    ParameterError,
)


@dataclass(frozen=True, eq=False)
class VecmFit:
    """Equation-by-equation least-squares VECM.

    ``params`` and ``hac_se`` are (p, n): one column per equation, rows in the
    order of ``param_names`` (lagged differences, then the level block with the
    constant first, or the error-correction terms when ``beta`` was given).
    """

    names: tuple[str, ...]
    k: int
    gamma: np.ndarray
    pi: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    params: np.ndarray
    hac_se: np.ndarray
    param_names: tuple[str, ...]
    residuals: np.ndarray
    regressors: np.ndarray
    r2_adj: np.ndarray
    lc_stat: float
    lc_nparams: int
    hac_lags: int
    aic: float
    bic: float
    restricted: bool

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]

    @property
    def fitted(self) -> np.ndarray:
        return self.regressors @ self.params

    @property
    def lc_critical_value(self) -> float:
        return lc_critical_value(self.lc_nparams, 0.05)


def newey_west_lags(nobs: int) -> int:
    """Lag truncation ``floor(4 (T/100)^(2/9))``."""
    return int(math.floor(4.0 * (nobs / 100.0) ** (2.0 / 9.0)))


def _check_rank(X: np.ndarray, names) -> None:
    if X.shape[0] <= X.shape[1]:
        raise InsufficientDataError(f"{X.shape[0]} observations for {X.shape[1]} regressors")
    scale = np.sqrt((X * X).sum(axis=0))
    if np.any(scale == 0):
        bad = [names[i] for i in np.flatnonzero(scale == 0)]
        raise CollinearityError(f"all-zero regressor columns: {bad}")
    Q, R, piv = _qr_pivot(X / scale)
    d = np.abs(np.diag(R))
    tol = d[0] * max(X.shape) * np.finfo(float).eps * 1e3
    if d[-1] <= tol:
        bad = [names[piv[i]] for i in range(len(d)) if d[i] <= tol]
        raise CollinearityError(f"rank-deficient design; collinear columns: {bad}")


def _qr_pivot(X):
    from scipy.linalg import qr

    return qr(X, mode="economic", pivoting=True)


def hac_se(X: np.ndarray, resid: np.ndarray, lags: int | None = None) -> np.ndarray:
    """Newey-West (Bartlett kernel) sandwich standard errors.

    Parameters
    ----------
    X : ndarray, shape (T, p)
    resid : ndarray, shape (T,) or (T, n)
    lags : int, optional
        Truncation lag; defaults to :func:`newey_west_lags`.

    Returns
    -------
    ndarray, shape (p,) or (p, n)
    """
    X = np.asarray(X, dtype=np.float64)
    E = np.asarray(resid, dtype=np.float64)
    squeeze = E.ndim == 1
    if squeeze:
        E = E[:, None]
    T, p = X.shape
    if lags is None:
        lags = newey_west_lags(T)
    if np.any(np.all(X == X[0], axis=0) & (X[0] == 0)):
        raise DegenerateError("zero-variance regressor")
    XtX_inv = np.linalg.inv(X.T @ X)
    out = np.empty((p, E.shape[1]))
    for j in range(E.shape[1]):
        U = X * E[:, j : j + 1]
        S = U.T @ U
        for lag in range(1, lags + 1):
            w = 1.0 - lag / (lags + 1.0)
            G = U[lag:].T @ U[:-lag]
            S += w * (G + G.T)
        V = XtX_inv @ S @ XtX_inv
        out[:, j] = np.sqrt(np.diag(V))
    return out[:, 0] if squeeze else out


def hansen_lc(fit, resid: np.ndarray | None = None) -> float:
    """Hansen's joint L_c statistic, regression coefficients plus variance.

    Scores per equation are ``(x_t e_t, e_t^2 - s^2)``; with cumulative sums
    ``S_t`` and ``V = sum f_t f_t'`` the equation statistic is
    ``tr(V^{-1} sum S_t S_t') / T``. Statistics are summed over equations.

    ``fit`` is a :class:`VecmFit`, or a regressor matrix with ``resid``.
    """
    if resid is None:
        X, E = fit.regressors, fit.residuals
    else:
        X, E = np.asarray(fit, dtype=np.float64), np.asarray(resid, dtype=np.float64)
    if E.ndim == 1:
        E = E[:, None]
    T = X.shape[0]
    total = 0.0
    for j in range(E.shape[1]):
        e = E[:, j]
        f = np.column_stack([X * e[:, None], e * e - (e @ e) / T])
        S = np.cumsum(f, axis=0)
        V = f.T @ f
        if np.linalg.cond(V) > 1e13:
            raise ConditioningError("score covariance is near-singular")
        total += float(np.trace(np.linalg.solve(V, S.T @ S))) / T
    return total


def _adj_r2(y: np.ndarray, resid: np.ndarray, p: int) -> np.ndarray:
    T = y.shape[0]
    sst = ((y - y.mean(axis=0)) ** 2).sum(axis=0)
    ssr = (resid**2).sum(axis=0)
    return 1.0 - (ssr / (T - p)) / (sst / (T - 1))


def _info_criteria(resid: np.ndarray, nparams: int):
    T = resid.shape[0]
    sign, logdet = np.linalg.slogdet(resid.T @ resid / T)
    if sign <= 0:
        raise CollinearityError("singular residual covariance")
    return logdet + 2.0 * nparams / T, logdet + math.log(T) * nparams / T


def fit_vecm(
    diffs,
    levels,
    k: int = 2,
    beta: np.ndarray | None = None,
    hac_lags: int | None = None,
) -> VecmFit:
    """Least-squares VECM with unrestricted ``Pi`` or given ``beta``.

    Parameters
    ----------
    diffs : DiffPanel or ndarray, optional
        Differences of ``levels``; recomputed when ``None``.
    levels : LogPanel or ndarray (T, n)
    k : int
        VAR order in levels (``k - 1`` lagged differences).
    beta : ndarray (n+1, r), optional
        Cointegrating vectors with the constant in row 0. When omitted the
        level block is estimated freely and decomposed with the full-rank
        Johansen vectors.
    hac_lags : int, optional
    """
    L = values_of(levels)
    n = L.shape[1]
    names = names_of(levels, n)
    Z0, Z1, Zk = vecm_design(diffs, levels, k)
    lag_names = [f"d{nm}(t-{i})" for i in range(1, k) for nm in names]
    if beta is None:
        X = np.hstack([Z1, Zk])
        pnames = lag_names + ["const"] + [f"{nm}(t-1)" for nm in names]
    else:
        beta = np.asarray(beta, dtype=np.float64)
        if beta.ndim == 1:
            beta = beta[:, None]
        if beta.shape[0] != n + 1:
            raise ParameterError(f"beta must have {n + 1} rows, got {beta.shape[0]}")
        X = np.hstack([Z1, Zk @ beta])
        pnames = lag_names + [f"ec{j + 1}(t-1)" for j in range(beta.shape[1])]
    _check_rank(X, pnames)
    coef, *_ = np.linalg.lstsq(X, Z0, rcond=None)
    resid = Z0 - X @ coef
    m = Z1.shape[1]
    gamma = coef[:m].T
    if beta is None:
        pi = coef[m:].T
        # Pi has n rows, so the rank-n reduced-rank fit is the OLS fit and
        # the full set of Johansen vectors reproduces it exactly.
        jo = johansen(diffs, levels, k)
        beta_out = jo.beta_for(n)
        alpha = jo.alpha_for(n)
    else:
        alpha = coef[m:].T
        beta_out = beta
        pi = alpha @ beta.T
    p = X.shape[1]
    lags = newey_west_lags(X.shape[0]) if hac_lags is None else int(hac_lags)
    aic, bic = _info_criteria(resid, p * n)
    return VecmFit(
        names=names,
        k=k,
        gamma=gamma,
        pi=pi,
        alpha=alpha,
        beta=beta_out,
        params=coef,
        hac_se=hac_se(X, resid, lags),
        param_names=tuple(pnames),
        residuals=resid,
        regressors=X,
        r2_adj=_adj_r2(Z0, resid, p),
        lc_stat=hansen_lc(X, resid),
        lc_nparams=(p + 1) * n,
        hac_lags=lags,
        aic=aic,
        bic=bic,
        restricted=beta is not None,
    )


def bic_sequence(diffs, levels, max_k: int) -> np.ndarray:
    """System BIC for ``k = 1..max_k`` on the sample common to ``max_k``."""
    if max_k < 1:
        raise ParameterError("max_k must be >= 1")
    L = values_of(levels)
    D = values_of(diffs) if diffs is not None else np.diff(L, axis=0)
    n = L.shape[1]
    Z0, Z1, Zk = vecm_design(D, L, max_k)
    out = np.empty(max_k)
    for k in range(1, max_k + 1):
        X = np.hstack([Z1[:, : n * (k - 1)], Zk])
        coef, *_ = np.linalg.lstsq(X, Z0, rcond=None)
        _, out[k - 1] = _info_criteria(Z0 - X @ coef, X.shape[1] * n)
    return out


def select_lag_bic(diffs, levels, max_k: int) -> int:
    """VAR order in ``1..max_k`` minimizing the system BIC."""
    return int(np.argmin(bic_sequence(diffs, levels, max_k))) + 1


@dataclass(frozen=True, eq=False)
class BivariateResult:
    """Cointegration pre-test and VECM fit for a pair of annual series."""

    coint: CointegrationResult
    fit: VecmFit


def fit_vecm_bivariate(a, b, names=("a", "b"), k: int = 2, level: float = 0.01) -> BivariateResult:
    """Two-variable VECM with restricted-constant Johansen pre-test.

    The level block is estimated unrestricted so that insignificant
    error-correction terms show up as such in the coefficient table.
    """
    a = np.asarray(getattr(a, "values", a), dtype=np.float64).ravel()
    b = np.asarray(getattr(b, "values", b), dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise AlignmentError(f"series lengths differ: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 20:
        raise InsufficientDataError(f"need at least 20 annual observations, have {a.shape[0]}")
    X = np.column_stack([a, b])
    from tvmi.series import LogPanel

    panel = LogPanel(tuple(names), (1, 1), X)
    jo = johansen(None, panel, k, level=level)
    return BivariateResult(jo, fit_vecm(None, panel, k))
