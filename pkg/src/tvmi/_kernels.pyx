# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sequential kernels; see ``tvmi._kernels_py`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, fabs, M_PI

cnp.import_array()

# Cholesky diagonal ratio below which the terminal information is singular.
cdef double SINGULAR_RATIO = 1e-9


cdef int _chol(double[:, ::1] A, Py_ssize_t p) noexcept nogil:
    """In-place lower Cholesky; returns 0 on success."""
    cdef Py_ssize_t i, j, k
    cdef double s
    for j in range(p):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if s <= 0.0:
            return 1
        s = sqrt(s)
        A[j, j] = s
        for i in range(j + 1, p):
            for k in range(j):
                A[i, j] -= A[i, k] * A[j, k]
            A[i, j] /= s
        for i in range(j):
            A[i, j] = 0.0
    return 0


cdef void _chol_solve(double[:, ::1] L, double* b, Py_ssize_t p) noexcept nogil:
    """Solve (L L') x = b in place."""
    cdef Py_ssize_t i, k
    cdef double s
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= L[i, k] * b[k]
        b[i] = s / L[i, i]
    for i in range(p - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, p):
            s -= L[k, i] * b[k]
        b[i] = s / L[i, i]


def rw_smooth(X, y, double q):
    cdef double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t T = Xv.shape[0], p = Xv.shape[1]
    cdef Py_ssize_t t, i, j
    cdef Py_ssize_t nf = T - 1 if T > 1 else 0
    factors_arr = np.zeros((nf, p, p))
    qh_arr = np.zeros((nf, p))
    theta_arr = np.empty((T, p))
    cdef double[:, :, ::1] factors = factors_arr
    cdef double[:, ::1] qh = qh_arr
    cdef double[:, ::1] theta = theta_arr
    cdef double[:, ::1] info = np.zeros((p, p))
    cdef double[::1] h = np.zeros(p)
    cdef double[::1] col = np.zeros(p)
    cdef double[:, ::1] L
    cdef double[:, ::1] Lt = np.zeros((p, p))
    cdef double logdet = 0.0, xi, dmin, dmax
    cdef bint singular = False

    with nogil:
        for t in range(T):
            for i in range(p):
                xi = Xv[t, i]
                h[i] += xi * yv[t]
                for j in range(p):
                    info[i, j] += xi * Xv[t, j]
            if t < T - 1:
                L = factors[t]
                for i in range(p):
                    for j in range(p):
                        L[i, j] = q * info[i, j]
                    L[i, i] += 1.0
                _chol(L, p)
                for i in range(p):
                    logdet += 2.0 * log(L[i, i])
                    qh[t, i] = q * h[i]
                # info <- G^{-1} info, column by column, then symmetrize
                for j in range(p):
                    for i in range(p):
                        col[i] = info[i, j]
                    _chol_solve(L, &col[0], p)
                    for i in range(p):
                        Lt[i, j] = col[i]
                for i in range(p):
                    for j in range(p):
                        info[i, j] = 0.5 * (Lt[i, j] + Lt[j, i])
                _chol_solve(L, &h[0], p)

        for i in range(p):
            for j in range(p):
                Lt[i, j] = info[i, j]
        if _chol(Lt, p) != 0:
            singular = True
        else:
            dmin = Lt[0, 0]
            dmax = Lt[0, 0]
            for i in range(p):
                if Lt[i, i] < dmin:
                    dmin = Lt[i, i]
                if Lt[i, i] > dmax:
                    dmax = Lt[i, i]
            if dmin < SINGULAR_RATIO * dmax:
                singular = True
        if not singular:
            for i in range(p):
                logdet += 2.0 * log(Lt[i, i])
                theta[T - 1, i] = h[i]
            _chol_solve(Lt, &theta[T - 1, 0], p)
            for t in range(T - 2, -1, -1):
                for i in range(p):
                    theta[t, i] = qh[t, i] + theta[t + 1, i]
                _chol_solve(factors[t], &theta[t, 0], p)

    if singular:
        return np.full((T, p), np.nan), np.nan
    return theta_arr, logdet


def simulate_vecm(levels0, gamma_path, alpha_path, beta, eps, double bound):
    cdef double[:, ::1] L0 = np.ascontiguousarray(levels0, dtype=np.float64)
    cdef double[:, :, ::1] G = np.ascontiguousarray(gamma_path, dtype=np.float64)
    cdef double[:, :, ::1] A = np.ascontiguousarray(alpha_path, dtype=np.float64)
    cdef double[:, ::1] B = np.ascontiguousarray(beta, dtype=np.float64)
    cdef double[:, ::1] E = np.ascontiguousarray(eps, dtype=np.float64)
    cdef Py_ssize_t k = L0.shape[0], n = L0.shape[1]
    cdef Py_ssize_t T = E.shape[0], r = B.shape[1]
    cdef Py_ssize_t t, i, j, l, cur, m = n * (k - 1)
    out_arr = np.empty((k + T, n))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] ec = np.zeros(r)
    cdef double[::1] lags = np.zeros(m if m > 0 else 1)
    cdef double s
    cdef Py_ssize_t bad = -1

    for t in range(k):
        for i in range(n):
            out[t, i] = L0[t, i]
    with nogil:
        for t in range(T):
            cur = k - 1 + t
            for j in range(r):
                s = B[0, j]
                for i in range(n):
                    s += B[i + 1, j] * out[cur, i]
                ec[j] = s
            for l in range(k - 1):
                for i in range(n):
                    lags[l * n + i] = out[cur - l, i] - out[cur - l - 1, i]
            for i in range(n):
                s = E[t, i]
                for j in range(r):
                    s += A[t, i, j] * ec[j]
                for j in range(m):
                    s += G[t, i, j] * lags[j]
                out[cur + 1, i] = out[cur, i] + s
            for i in range(n):
                if not (fabs(out[cur + 1, i]) <= bound):
                    bad = t
            if bad >= 0:
                break
    return out_arr, bad


def kalman_filter(y, F, z, Q, double h, a0, P0, Py_ssize_t nskip, bint want_smooth):
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[:, ::1] Fm = np.ascontiguousarray(F, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double[:, ::1] Qm = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t T = yv.shape[0], m = Fm.shape[0]
    cdef double[::1] a = np.array(a0, dtype=np.float64)
    cdef double[:, ::1] P = np.array(P0, dtype=np.float64)
    cdef double[:, ::1] W = np.zeros((m, m))
    cdef double[:, ::1] Lm = np.zeros((m, m))
    cdef double[::1] Pz = np.zeros(m)
    cdef double[::1] K = np.zeros(m)
    cdef double[::1] tmp = np.zeros(m)
    cdef Py_ssize_t nstore = T if want_smooth else 1
    a_pred_arr = np.zeros((nstore, m))
    P_pred_arr = np.zeros((nstore, m, m))
    K_arr = np.zeros((nstore, m))
    v_arr = np.zeros(nstore)
    f_arr = np.ones(nstore)
    obs_arr = np.zeros(nstore, dtype=np.uint8)
    cdef double[:, ::1] a_pred = a_pred_arr
    cdef double[:, :, ::1] P_pred = P_pred_arr
    cdef double[:, ::1] K_all = K_arr
    cdef double[::1] v_all = v_arr
    cdef double[::1] f_all = f_arr
    cdef unsigned char[::1] obs = obs_arr
    cdef double loglik = 0.0, f, v, s, yt
    cdef Py_ssize_t t, i, j, l, seen = 0

    with nogil:
        for t in range(T):
            if want_smooth:
                for i in range(m):
                    a_pred[t, i] = a[i]
                    for j in range(m):
                        P_pred[t, i, j] = P[i, j]
            yt = yv[t]
            if yt == yt:
                f = h
                v = yt
                for i in range(m):
                    s = 0.0
                    for j in range(m):
                        s += P[i, j] * zv[j]
                    Pz[i] = s
                    f += zv[i] * s
                    v -= zv[i] * a[i]
                for i in range(m):
                    s = 0.0
                    for j in range(m):
                        s += Fm[i, j] * Pz[j]
                    K[i] = s / f
                for i in range(m):
                    for j in range(m):
                        Lm[i, j] = Fm[i, j] - K[i] * zv[j]
                # a <- F a + K v
                for i in range(m):
                    s = K[i] * v
                    for j in range(m):
                        s += Fm[i, j] * a[j]
                    tmp[i] = s
                for i in range(m):
                    a[i] = tmp[i]
                # P <- F P L' + Q
                for i in range(m):
                    for j in range(m):
                        s = 0.0
                        for l in range(m):
                            s += Fm[i, l] * P[l, j]
                        W[i, j] = s
                for i in range(m):
                    for j in range(m):
                        s = Qm[i, j]
                        for l in range(m):
                            s += W[i, l] * Lm[j, l]
                        P[i, j] = s
                if seen >= nskip:
                    loglik -= 0.5 * (log(2.0 * M_PI * f) + v * v / f)
                seen += 1
                if want_smooth:
                    v_all[t] = v
                    f_all[t] = f
                    obs[t] = 1
                    for i in range(m):
                        K_all[t, i] = K[i]
            else:
                for i in range(m):
                    s = 0.0
                    for j in range(m):
                        s += Fm[i, j] * a[j]
                    tmp[i] = s
                for i in range(m):
                    a[i] = tmp[i]
                for i in range(m):
                    for j in range(m):
                        s = 0.0
                        for l in range(m):
                            s += Fm[i, l] * P[l, j]
                        W[i, j] = s
                for i in range(m):
                    for j in range(m):
                        s = Qm[i, j]
                        for l in range(m):
                            s += W[i, l] * Fm[j, l]
                        P[i, j] = s
            for i in range(m):
                for j in range(i + 1, m):
                    s = 0.5 * (P[i, j] + P[j, i])
                    P[i, j] = s
                    P[j, i] = s

    if not want_smooth:
        return loglik, None

    sm_arr = np.empty(T)
    cdef double[::1] sm = sm_arr
    cdef double[::1] rv = np.zeros(m)
    with nogil:
        for t in range(T - 1, -1, -1):
            if obs[t]:
                # r <- z v/f + (F - K z')' r
                s = 0.0
                for i in range(m):
                    s += K_all[t, i] * rv[i]
                for j in range(m):
                    f = 0.0
                    for i in range(m):
                        f += Fm[i, j] * rv[i]
                    tmp[j] = zv[j] * (v_all[t] / f_all[t]) + f - zv[j] * s
            else:
                for j in range(m):
                    f = 0.0
                    for i in range(m):
                        f += Fm[i, j] * rv[i]
                    tmp[j] = f
            for i in range(m):
                rv[i] = tmp[i]
            s = 0.0
            for i in range(m):
                f = a_pred[t, i]
                for j in range(m):
                    f += P_pred[t, i, j] * rv[j]
                s += zv[i] * f
            sm[t] = s
    return loglik, sm_arr
