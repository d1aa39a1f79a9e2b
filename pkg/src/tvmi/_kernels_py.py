"""Pure-NumPy implementations of the sequential kernels.

These mirror ``tvmi._kernels`` (Cython) line for line and are used when the
compiled extension is unavailable or ``TVMI_PURE_PYTHON`` is set.
"""
import numpy as np
from scipy.linalg import cho_factor, cho_solve

# Cholesky diagonal ratio below which the terminal information is singular.
SINGULAR_RATIO = 1e-9


def rw_smooth(X, y, q):
    """Penalized least squares path for random-walk coefficients.

    Minimizes ``sum_t (y_t - x_t' theta_t)**2 + (1/q) sum_t |theta_t - theta_{t-1}|**2``
    with ``theta_1`` unpenalized.

    Parameters
    ----------
    X : ndarray, shape (T, p)
    y : ndarray, shape (T,)
    q : float
        Inverse smoothing ratio (parameter-innovation to noise variance).

    Returns
    -------
    theta : ndarray, shape (T, p)
    logdet : float
        ``sum_{t<T} log det(I + q I_t) + log det I_T``; ``nan`` when the
        terminal information matrix is singular.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    T, p = X.shape
    eye = np.eye(p)
    info = np.zeros((p, p))
    h = np.zeros(p)
    factors = np.empty((max(T - 1, 0), p, p))
    qh = np.empty((max(T - 1, 0), p))
    logdet = 0.0
    for t in range(T):
        x = X[t]
        info += np.outer(x, x)
        h += x * y[t]
        if t < T - 1:
            G = eye + q * info
            c, low = cho_factor(G, lower=True)
            logdet += 2.0 * np.log(np.diag(c)).sum()
            factors[t] = c
            qh[t] = q * h
            info = cho_solve((c, True), info)
            info = 0.5 * (info + info.T)
            h = cho_solve((c, True), h)
    theta = np.empty((T, p))
    try:
        c, low = cho_factor(info, lower=True)
    except np.linalg.LinAlgError:
        return np.full((T, p), np.nan), np.nan
    d = np.diag(c)
    if np.any(d <= 0) or d.min() < SINGULAR_RATIO * d.max():
        return np.full((T, p), np.nan), np.nan
    logdet += 2.0 * np.log(d).sum()
    theta[T - 1] = cho_solve((c, True), h)
    for t in range(T - 2, -1, -1):
        theta[t] = cho_solve((factors[t], True), qh[t] + theta[t + 1])
    return theta, logdet


def simulate_vecm(levels0, gamma_path, alpha_path, beta, eps, bound):
    """Run a (time-varying) VECM forward in levels.

    ``dX_t = sum_i Gamma_{i,t} dX_{t-i} + alpha_t beta'(1, X_{t-1}) + eps_t``.

    Parameters
    ----------
    levels0 : ndarray, shape (k, n)
        Initial levels; ``k - 1`` initial differences are taken from them.
    gamma_path : ndarray, shape (T, n, n*(k-1))
    alpha_path : ndarray, shape (T, n, r)
    beta : ndarray, shape (n+1, r)
        Constant in row 0.
    eps : ndarray, shape (T, n)
    bound : float
        Abort when any |level| exceeds this value.

    Returns
    -------
    levels : ndarray, shape (k + T, n)
    bad : int
        Index of the first step that exceeded ``bound``, or -1.
    """
    levels0 = np.asarray(levels0, dtype=np.float64)
    k, n = levels0.shape
    T = eps.shape[0]
    out = np.empty((k + T, n))
    out[:k] = levels0
    b0 = beta[0]
    bv = beta[1:]
    for t in range(T):
        cur = k - 1 + t
        xprev = out[cur]
        dx = eps[t] + alpha_path[t] @ (b0 + bv.T @ xprev)
        if k > 1:
            lags = (out[cur - np.arange(k - 1)] - out[cur - 1 - np.arange(k - 1)]).ravel()
            dx = dx + gamma_path[t] @ lags
        out[cur + 1] = xprev + dx
        if not np.all(np.abs(out[cur + 1]) <= bound):
            return out, t
    return out, -1


def kalman_filter(y, F, z, Q, h, a0, P0, nskip, want_smooth):
    """Kalman filter with the Durbin-Koopman state smoother, univariate obs.

    Missing observations are ``nan``. The first ``nskip`` observed points are
    excluded from the log-likelihood (approximate diffuse start).

    Returns
    -------
    loglik : float
    smoothed : ndarray, shape (T,) or None
        Smoothed signal ``z' a_{t|T}``.
    """
    T = y.shape[0]
    m = F.shape[0]
    a = a0.copy()
    P = P0.copy()
    loglik = 0.0
    seen = 0
    if want_smooth:
        a_pred = np.empty((T, m))
        P_pred = np.empty((T, m, m))
        v_all = np.zeros(T)
        f_all = np.ones(T)
        K_all = np.zeros((T, m))
        obs = np.zeros(T, dtype=bool)
    for t in range(T):
        if want_smooth:
            a_pred[t] = a
            P_pred[t] = P
        yt = y[t]
        if yt == yt:
            Pz = P @ z
            f = z @ Pz + h
            v = yt - z @ a
            K = (F @ Pz) / f
            L = F - np.outer(K, z)
            a = F @ a + K * v
            P = F @ P @ L.T + Q
            if seen >= nskip:
                loglik -= 0.5 * (np.log(2.0 * np.pi * f) + v * v / f)
            seen += 1
            if want_smooth:
                v_all[t] = v
                f_all[t] = f
                K_all[t] = K
                obs[t] = True
        else:
            a = F @ a
            P = F @ P @ F.T + Q
        P = 0.5 * (P + P.T)
    if not want_smooth:
        return loglik, None
    sm = np.empty(T)
    r = np.zeros(m)
    for t in range(T - 1, -1, -1):
        if obs[t]:
            L = F - np.outer(K_all[t], z)
            r = z * (v_all[t] / f_all[t]) + L.T @ r
        else:
            r = F.T @ r
        sm[t] = z @ (a_pred[t] + P_pred[t] @ r)
    return loglik, sm
