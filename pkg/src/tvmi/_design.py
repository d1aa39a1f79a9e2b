"""Data matrices shared by the VECM estimators."""
import numpy as np

from tvmi.errors import InsufficientDataError, ParameterError, ShapeError


def values_of(x) -> np.ndarray:
    v = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    return v


def names_of(x, n: int) -> tuple[str, ...]:
    names = getattr(x, "names", None)
    return tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(n))


def vecm_design(diffs, levels, k: int):
    """Split a sample into the VECM blocks.

    With ``k`` the VAR order in levels, the regression for ``t = k..T-1`` is
    ``dX_t = sum_{i<k} G_i dX_{t-i} + Pi (1, X_{t-1}) + e_t``.

    Returns
    -------
    Z0 : (T-k, n) differences
    Z1 : (T-k, n*(k-1)) lagged differences, lag 1 first
    Zk : (T-k, n+1) constant then lagged levels
    """
    L = values_of(levels)
    D = values_of(diffs) if diffs is not None else np.diff(L, axis=0)
    T, n = L.shape
    if D.shape != (T - 1, n):
        raise ShapeError(f"differences have shape {D.shape}, expected {(T - 1, n)}")
    if k < 1:
        raise ParameterError("lag order k must be >= 1")
    if T - k < 2 * (n * k + 1):
        raise InsufficientDataError(f"k={k} too large for T={T}")
    Z0 = D[k - 1 :]
    Z1 = np.column_stack([D[k - 1 - i : T - 1 - i] for i in range(1, k)]) if k > 1 else np.empty((T - k, 0))
    Zk = np.column_stack([np.ones(T - k), L[k - 1 : T - 1]])
    return Z0, Z1, Zk
