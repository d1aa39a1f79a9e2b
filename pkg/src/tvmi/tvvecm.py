"""Time-varying VECM with random-walk loadings and the integration-speed index.

The cointegrating matrix is held fixed. Short-run coefficients and loadings
follow random walks, and each equation's coefficient path is the minimizer of

    sum_t (y_t - x_t' theta_t)^2 + lambda * sum_t |theta_t - theta_{t-1}|^2,

which is the GLS / fixed-interval smoothing estimate in the equivalent state
space model with innovation-to-noise variance ratio ``1 / lambda``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from tvmi import kernels
from tvmi._design import names_of, values_of, vecm_design
from tvmi.errors import (
    CollinearityError,
    DegenerateError,
    InstabilityError,
    InsufficientDataError,
    ParameterError,
    ShapeError,
)

METHODS = ("recursion", "banded")
LEVEL_BOUND = 1e6


@dataclass(frozen=True, eq=False)
class TvVecmFit:
    """Coefficient paths of a time-varying VECM.

    Attributes
    ----------
    gamma_path : ndarray, shape (N, n, n*(k-1))
    alpha_path : ndarray, shape (N, n, r)
    beta : ndarray, shape (n+1, r)
    residuals : ndarray, shape (N, n)
    regressors : ndarray, shape (N, n*(k-1) + r)
        Lagged differences followed by the error-correction terms.
    loglik : float
        Concentrated diffuse log-likelihood summed over equations, ``nan``
        when unavailable.

    ``N = T - k`` is the effective sample; row ``j`` belongs to period
    ``t = k + j`` of the level panel.
    """

    names: tuple[str, ...]
    k: int
    gamma_path: np.ndarray
    alpha_path: np.ndarray
    beta: np.ndarray
    residuals: np.ndarray
    regressors: np.ndarray
    smoothing_ratio: float
    loglik: float
    method: str

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """Stacked paths, shape (N, n, p), in regressor order."""
        return np.concatenate([self.gamma_path, self.alpha_path], axis=2)

    @property
    def fitted(self) -> np.ndarray:
        return np.einsum("tip,tp->ti", self.theta, self.regressors)


@dataclass(frozen=True, eq=False)
class IntegrationSpeedPath:
    """``zeta`` with optional percentile bands and first difference.

    ``acceleration[0]`` is ``nan``; ``acceleration[t] = zeta[t] - zeta[t-1]``.
    """

    zeta: np.ndarray
    acceleration: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    coverage: float | None = None
    reps: int = 0


def _banded_path(X: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """Same problem as :func:`kernels.rw_smooth` via a banded Cholesky."""
    T, p = X.shape
    u = 2 * p - 1
    N = T * p
    ab = np.zeros((u + 1, N))
    # diagonal blocks: x x' + lam * (number of neighbours) I
    nb = np.full(T, 2.0)
    nb[0] = nb[-1] = 1.0
    if T == 1:
        nb[0] = 0.0
    for a in range(p):
        for b in range(a, p):
            cols = np.arange(T) * p + b
            vals = X[:, a] * X[:, b]
            if a == b:
                vals = vals + lam * nb
            ab[u + a - b, cols] = vals
    # off-diagonal blocks: -lam I between t and t+1
    cols = np.arange(p, N)
    ab[u - p, cols] = -lam
    rhs = (X * y[:, None]).ravel()
    try:
        sol = linalg.solveh_banded(ab, rhs, lower=False, check_finite=False)
    except linalg.LinAlgError:
        raise CollinearityError("normal equations are not positive definite") from None
    return sol.reshape(T, p)


def _concentrated_loglik(ssr_pen: float, logdet: float, T: int, p: int) -> float:
    dof = T - p
    if not (ssr_pen > 0 and dof > 0 and math.isfinite(logdet)):
        return float("nan")
    return -0.5 * dof * (math.log(2.0 * math.pi * ssr_pen / dof) + 1.0) - 0.5 * logdet


def _design(diffs, levels, k: int, beta):
    L = values_of(levels)
    n = L.shape[1]
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim == 1:
        beta = beta[:, None]
    if beta.shape[0] != n + 1:
        raise ShapeError(f"beta must have {n + 1} rows, got {beta.shape[0]}")
    Z0, Z1, Zk = vecm_design(diffs, levels, k)
    if Z0.shape[0] < 30:
        raise InsufficientDataError(f"effective sample {Z0.shape[0]} < 30")
    return Z0, np.hstack([Z1, Zk @ beta]), beta


def fit_tv_vecm(
    diffs,
    levels,
    k: int,
    beta,
    smoothing_ratio: float = 1.0,
    method: str = "recursion",
) -> TvVecmFit:
    """Estimate random-walk coefficient paths with ``beta`` held fixed.

    Parameters
    ----------
    diffs : DiffPanel or ndarray, optional
        Recomputed from ``levels`` when ``None``.
    levels : LogPanel or ndarray (T, n)
    k : int
        VAR order in levels.
    beta : ndarray (n+1, r)
        Cointegrating vectors, constant in row 0.
    smoothing_ratio : float
        ``lambda``: noise variance over parameter-innovation variance.
    method : {"recursion", "banded"}
        Information-form forward/backward recursion (stable for any
        ``lambda``) or a banded Cholesky of the full normal equations.
    """
    lam = float(smoothing_ratio)
    if not (lam > 0 and math.isfinite(lam)):
        raise ParameterError(f"smoothing_ratio must be positive and finite, got {smoothing_ratio}")
    if method not in METHODS:
        raise ParameterError(f"method must be one of {METHODS}, got {method!r}")
    Z0, X, beta = _design(diffs, levels, k, beta)
    N, n = Z0.shape
    p = X.shape[1]
    theta = np.empty((N, n, p))
    loglik = 0.0
    for i in range(n):
        y = Z0[:, i]
        if method == "recursion":
            th, logdet = kernels.rw_smooth(X, y, 1.0 / lam)
            if not np.isfinite(logdet):
                raise CollinearityError("regressors are collinear over the sample; the constant-coefficient limit is not identified")
        else:
            th = _banded_path(X, y, lam)
            logdet = float("nan")
        theta[:, i, :] = th
        e = y - np.einsum("tp,tp->t", X, th)
        pen = float((np.diff(th, axis=0) ** 2).sum())
        loglik += _concentrated_loglik(float(e @ e) + lam * pen, logdet, N, p)
    m = p - beta.shape[1]
    resid = Z0 - np.einsum("tip,tp->ti", theta, X)
    return TvVecmFit(
        names=names_of(levels, n),
        k=k,
        gamma_path=theta[:, :, :m].copy(),
        alpha_path=theta[:, :, m:].copy(),
        beta=beta,
        residuals=resid,
        regressors=X,
        smoothing_ratio=lam,
        loglik=loglik,
        method=method,
    )


def zeta_of(alpha_path: np.ndarray) -> np.ndarray:
    """Square root of the largest eigenvalue of ``alpha_t alpha_t'``."""
    A = np.asarray(alpha_path, dtype=np.float64)
    if A.ndim == 2:
        A = A[None]
    if not np.all(np.isfinite(A)):
        raise DegenerateError("loading path contains non-finite entries")
    # the smaller Gram matrix has the same nonzero spectrum
    G = A.transpose(0, 2, 1) @ A if A.shape[2] <= A.shape[1] else A @ A.transpose(0, 2, 1)
    w = np.linalg.eigvalsh(G)[:, -1]
    return np.sqrt(np.maximum(w, 0.0))


def _speed_path(zeta: np.ndarray, **kw) -> IntegrationSpeedPath:
    acc = np.empty_like(zeta)
    acc[0] = np.nan
    acc[1:] = np.diff(zeta)
    return IntegrationSpeedPath(zeta=zeta, acceleration=acc, **kw)


def integration_speed(fit: TvVecmFit) -> IntegrationSpeedPath:
    """Integration-speed index per period and its first difference."""
    return _speed_path(zeta_of(fit.alpha_path))


def _replicate(args):
    (seeds, levels0, gamma, alpha, beta, E, k, lam, method) = args
    out = np.empty((len(seeds), E.shape[0]))
    for j, (index, seed) in enumerate(seeds):
        rng = np.random.default_rng(seed)
        eps = E[rng.integers(0, E.shape[0], size=E.shape[0])]
        sim, bad = kernels.simulate_vecm(levels0, gamma, alpha, beta, eps, LEVEL_BOUND)
        if bad >= 0:
            raise InstabilityError(f"bootstrap replication {index} exploded at step {bad}")
        fit = fit_tv_vecm(None, sim, k, beta, lam, method)
        out[j] = zeta_of(fit.alpha_path)
    return out


def bootstrap_bands(
    diffs,
    levels,
    k: int,
    beta,
    smoothing_ratio: float = 1.0,
    reps: int = 1000,
    coverage: float = 0.9,
    seed: int = 42,
    n_jobs: int = 1,
    method: str = "recursion",
    fit: TvVecmFit | None = None,
) -> IntegrationSpeedPath:
    """Residual-bootstrap percentile bands for the integration-speed path.

    Centered residual rows are resampled with replacement, data are rebuilt
    through the fitted time-varying system from the observed initial levels,
    and the model is re-estimated with ``beta`` fixed. Replication ``b`` draws
    from the ``b``-th child of ``SeedSequence(seed)``, so results do not depend
    on ``n_jobs``.
    """
    if int(reps) != reps or reps < 100:
        raise ParameterError(f"reps must be an integer >= 100, got {reps}")
    if not 0.0 < coverage < 1.0:
        raise ParameterError(f"coverage must lie in (0, 1), got {coverage}")
    if n_jobs < 1:
        raise ParameterError("n_jobs must be >= 1")
    reps = int(reps)
    if fit is None:
        fit = fit_tv_vecm(diffs, levels, k, beta, smoothing_ratio, method)
    L = values_of(levels)
    E = fit.residuals - fit.residuals.mean(axis=0)
    children = np.random.SeedSequence(seed).spawn(reps)
    jobs = list(enumerate(children))
    common = (L[:k].copy(), fit.gamma_path, fit.alpha_path, fit.beta, E, k, fit.smoothing_ratio, fit.method)
    if n_jobs == 1:
        draws = _replicate((jobs,) + common)
    else:
        n_jobs = min(n_jobs, os.cpu_count() or 1, reps)
        chunks = [jobs[i::n_jobs] for i in range(n_jobs)]
        with ProcessPoolExecutor(n_jobs) as ex:
            parts = list(ex.map(_replicate, [(c,) + common for c in chunks]))
        draws = np.empty((reps, E.shape[0]))
        for i, part in enumerate(parts):
            draws[i::n_jobs] = part
    lo, hi = np.quantile(draws, [(1.0 - coverage) / 2.0, (1.0 + coverage) / 2.0], axis=0)
    return _speed_path(zeta_of(fit.alpha_path), lower=lo, upper=hi, coverage=coverage, reps=reps)


def profile_smoothing_ratio(diffs, levels, k: int, beta, grid=None):
    """Concentrated log-likelihood over a grid of smoothing ratios.

    Returns
    -------
    grid : ndarray
    loglik : ndarray
    best : float
        Grid value with the largest likelihood.
    """
    grid = np.logspace(-2, 8, 21) if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0 or np.any(grid <= 0):
        raise ParameterError("grid must contain positive values")
    ll = np.array([fit_tv_vecm(diffs, levels, k, beta, lam).loglik for lam in grid])
    return grid, ll, float(grid[int(np.nanargmax(ll))])
