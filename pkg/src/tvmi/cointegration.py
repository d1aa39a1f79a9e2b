"""Johansen reduced-rank analysis with a restricted constant."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from tvmi._design import vecm_design
from tvmi.critical_values import JOHANSEN_MAXEIG_CV, JOHANSEN_TRACE_CV, johansen_cv
from tvmi.errors import CollinearityError, InsufficientDataError, ParameterError, ShapeError


@dataclass(frozen=True, eq=False)
class CointegrationResult:
    """Johansen eigen-analysis.

    Attributes
    ----------
    eigenvalues : ndarray, shape (n,)
        Descending, in [0, 1).
    trace_stats, maxeig_stats : ndarray, shape (n,)
        Entry ``r`` tests the null of at most ``r`` cointegrating relations.
    critical_values : dict
        ``{"trace" | "maxeig": {level: ndarray (n,)}}``, nan where untabulated.
    eigenvectors : ndarray, shape (n+1, n)
        All candidate cointegrating vectors, constant in row 0, normalized so
        that ``v' S_kk v = I``.
    s0k : ndarray, shape (n, n+1)
    selected_rank : int
    nobs : int
        Effective sample size.
    """

    eigenvalues: np.ndarray
    trace_stats: np.ndarray
    maxeig_stats: np.ndarray
    critical_values: dict
    eigenvectors: np.ndarray
    s0k: np.ndarray
    selected_rank: int
    nobs: int
    k: int
    level: float
    test: str

    @property
    def beta(self) -> np.ndarray:
        return self.beta_for(self.selected_rank)

    @property
    def alpha(self) -> np.ndarray:
        return self.alpha_for(self.selected_rank)

    def beta_for(self, r: int) -> np.ndarray:
        return self.eigenvectors[:, :r].copy()

    def alpha_for(self, r: int) -> np.ndarray:
        return self.s0k @ self.eigenvectors[:, :r]


def _sign_normalize(V: np.ndarray) -> np.ndarray:
    body = V[1:]
    idx = np.argmax(np.abs(body), axis=0)
    signs = np.sign(body[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _concentrate(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    if W.shape[1] == 0:
        return Z.copy()
    coef, *_ = np.linalg.lstsq(W, Z, rcond=None)
    return Z - W @ coef


def reduced_rank_moments(diffs, levels, k: int):
    """Concentrated moment matrices ``S00, S0k, Skk`` and the sample size."""
    Z0, Z1, Zk = vecm_design(diffs, levels, k)
    T = Z0.shape[0]
    R0 = _concentrate(Z0, Z1)
    Rk = _concentrate(Zk, Z1)
    return R0.T @ R0 / T, R0.T @ Rk / T, Rk.T @ Rk / T, T


def _chol(S: np.ndarray, label: str) -> np.ndarray:
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise CollinearityError(f"{label} is singular") from None
    d = np.diag(L)
    if d.min() < 1e-8 * d.max():
        raise CollinearityError(f"{label} is numerically singular")
    return L


def select_rank(stats: np.ndarray, n: int, test: str = "trace", level: float = 0.01) -> int:
    """Smallest ``r`` whose null is not rejected, testing ``r = 0, 1, ...``."""
    for r in range(n):
        try:
            cv = johansen_cv(test, n - r, level)
        except KeyError as exc:
            raise ParameterError(str(exc)) from None
        if stats[r] < cv:
            return r
    return n


def johansen(diffs, levels, k: int = 2, level: float = 0.01, test: str = "trace") -> CointegrationResult:
    """Johansen trace and maximal-eigenvalue tests, constant restricted to the
    cointegration space.

    Parameters
    ----------
    diffs : DiffPanel or ndarray (T-1, n), optional
        First differences of ``levels``; recomputed when ``None``.
    levels : LogPanel or ndarray (T, n)
    k : int
        VAR order in levels; ``k - 1`` lagged differences are concentrated out.
    level : float
        Significance level for the sequential rank choice (0.01 or 0.05).
    test : {"trace", "maxeig"}
        Statistic used for the sequential rank choice.
    """
    if test not in ("trace", "maxeig"):
        raise ParameterError(f"test must be 'trace' or 'maxeig', got {test!r}")
    S00, S0k, Skk, T = reduced_rank_moments(diffs, levels, k)
    n = S00.shape[0]
    if T < 10 * n:
        raise InsufficientDataError(f"effective sample {T} < 10 n = {10 * n}")
    L0 = _chol(S00, "S00")
    Lk = _chol(Skk, "Skk")
    # S_k0 S00^{-1} S_0k = M' M with M = L0^{-1} S0k
    M = linalg.solve_triangular(L0, S0k, lower=True)
    W = linalg.solve_triangular(Lk, M.T, lower=True)  # Lk^{-1} S_k0 L0^{-T}
    C = W @ W.T
    w, U = np.linalg.eigh(0.5 * (C + C.T))
    order = np.argsort(w)[::-1][:n]
    lam = np.clip(w[order], 0.0, 1.0 - 1e-15)
    V = linalg.solve_triangular(Lk.T, U[:, order], lower=False)
    V = _sign_normalize(V)

    log1m = np.log1p(-lam)
    trace = -T * np.cumsum(log1m[::-1])[::-1]
    maxeig = -T * log1m
    cvs = {
        name: {
            lv: np.array([table[lv][n - r - 1] if n - r <= len(table[lv]) else np.nan for r in range(n)])
            for lv in (0.01, 0.05)
        }
        for name, table in (("trace", JOHANSEN_TRACE_CV), ("maxeig", JOHANSEN_MAXEIG_CV))
    }
    stats = trace if test == "trace" else maxeig
    rank = select_rank(stats, n, test, level)
    return CointegrationResult(
        eigenvalues=lam,
        trace_stats=trace,
        maxeig_stats=maxeig,
        critical_values=cvs,
        eigenvectors=V,
        s0k=S0k,
        selected_rank=rank,
        nobs=T,
        k=k,
        level=level,
        test=test,
    )


def longrun_score(z, beta) -> np.ndarray:
    """Error-correction terms ``beta' (1, X)``.

    ``z`` is one row ``(1, X_t)`` of length n+1 or a stack of such rows.
    """
    z = np.asarray(z, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if beta.ndim == 1:
        beta = beta[:, None]
    if z.shape[-1] != beta.shape[0]:
        raise ShapeError(f"row length {z.shape[-1]} does not match beta rows {beta.shape[0]}")
    return z @ beta


def normalize_beta(beta, alpha=None):
    """Rescale so the first ``r`` variable rows of ``beta`` form the identity.

    ``alpha`` is transformed to leave ``alpha beta'`` unchanged. Returns
    ``beta`` alone or ``(beta, alpha)``.
    """
    beta = np.asarray(beta, dtype=np.float64)
    r = beta.shape[1]
    B = beta[1 : r + 1]
    try:
        Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        raise CollinearityError("leading block of beta is singular; reorder variables") from None
    nb = beta @ Binv
    if alpha is None:
        return nb
    return nb, np.asarray(alpha) @ B.T
