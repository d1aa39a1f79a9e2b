"""Simulated cointegrated systems with known loading and short-run paths."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tvmi import kernels
from tvmi.errors import InstabilityError, ParameterError, ShapeError
from tvmi.series import LogPanel
from tvmi.tvvecm import zeta_of

SCHEDULE_KINDS = ("constant", "ramp", "step", "sequence")
# Standard deviation of each simulated monthly log change.
DEFAULT_NOISE_SCALE = 0.01
DEFAULT_START = (1900, 1)
LEVEL_BOUND = 1e6


@dataclass(frozen=True, eq=False)
class Schedule:
    """A matrix-valued path over the emitted sample.

    ``constant`` holds ``start``; ``ramp`` moves linearly from ``start`` to
    ``end``; ``step`` switches from ``start`` to ``end`` at fraction ``at`` of
    the sample; ``sequence`` uses ``values`` (shape ``(T, ...)``) verbatim.
    """

    kind: str
    start: np.ndarray | None = None
    end: np.ndarray | None = None
    at: float = 0.5
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ParameterError(f"schedule kind must be one of {SCHEDULE_KINDS}, got {self.kind!r}")
        if self.kind == "sequence":
            if self.values is None:
                raise ParameterError("sequence schedule needs values")
        elif self.start is None:
            raise ParameterError(f"{self.kind} schedule needs start")
        if self.kind in ("ramp", "step") and self.end is None:
            raise ParameterError(f"{self.kind} schedule needs end")
        if self.kind == "step" and not 0.0 < self.at < 1.0:
            raise ParameterError("step fraction must lie in (0, 1)")

    @classmethod
    def constant(cls, value) -> "Schedule":
        return cls("constant", start=np.asarray(value, dtype=np.float64))

    @classmethod
    def ramp(cls, start, end) -> "Schedule":
        return cls("ramp", start=np.asarray(start, dtype=np.float64), end=np.asarray(end, dtype=np.float64))

    @classmethod
    def step(cls, start, end, at: float = 0.5) -> "Schedule":
        return cls("step", start=np.asarray(start, dtype=np.float64), end=np.asarray(end, dtype=np.float64), at=at)

    @classmethod
    def sequence(cls, values) -> "Schedule":
        return cls("sequence", values=np.asarray(values, dtype=np.float64))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape[1:] if self.kind == "sequence" else np.shape(self.start)

    def path(self, T: int) -> np.ndarray:
        """Values for periods ``0..T-1``, shape ``(T,) + shape``."""
        if self.kind == "sequence":
            if self.values.shape[0] != T:
                raise ShapeError(f"sequence has {self.values.shape[0]} periods, expected {T}")
            return self.values.copy()
        start = np.asarray(self.start, dtype=np.float64)
        if self.kind == "constant":
            return np.broadcast_to(start, (T,) + start.shape).copy()
        end = np.asarray(self.end, dtype=np.float64)
        if end.shape != start.shape:
            raise ShapeError("schedule start and end shapes differ")
        if self.kind == "ramp":
            w = np.linspace(0.0, 1.0, T).reshape((T,) + (1,) * start.ndim)
            return start + w * (end - start)
        cut = int(round(self.at * T))
        out = np.broadcast_to(start, (T,) + start.shape).copy()
        out[cut:] = end
        return out


def default_noise_cov(n: int, scale: float = DEFAULT_NOISE_SCALE, rho: float = 0.3) -> np.ndarray:
    """``scale**2`` times an equicorrelation matrix."""
    C = np.full((n, n), rho)
    np.fill_diagonal(C, 1.0)
    return scale**2 * C


def companion(gamma: np.ndarray, pi_x: np.ndarray) -> np.ndarray:
    """Companion matrix of the levels VAR implied by ``Gamma`` and ``alpha beta_x'``.

    ``gamma`` is ``n x n(k-1)`` (lag 1 first), ``pi_x`` is ``n x n``.
    """
    n = pi_x.shape[0]
    k = gamma.shape[1] // n + 1
    G = [gamma[:, i * n : (i + 1) * n] for i in range(k - 1)]
    A = []
    for i in range(k):
        Ai = np.zeros((n, n))
        if i == 0:
            Ai += np.eye(n) + pi_x
        if i < k - 1:
            Ai += G[i]
        if i >= 1:
            Ai -= G[i - 1]
        A.append(Ai)
    C = np.zeros((n * k, n * k))
    C[:n] = np.hstack(A)
    if k > 1:
        C[n:, :-n] = np.eye(n * (k - 1))
    return C


@dataclass(frozen=True, eq=False)
class Scenario:
    """Data-generating process for a cointegrated system.

    ``dX_t = sum_i Gamma_{i,t} dX_{t-i} + alpha_t beta'(1, X_{t-1}) + e_t`` with
    Gaussian ``e_t ~ N(0, noise_cov)``. ``alpha_path`` values are ``n x r`` and
    ``gamma_path`` values ``n x n(k-1)``. The first ``burn_in`` simulated
    periods use the schedules' initial values and are discarded.
    """

    n: int
    r: int
    T: int
    beta: np.ndarray
    alpha_path: Schedule
    gamma_path: Schedule
    noise_cov: np.ndarray | None = None
    seed: int = 0
    k: int = 2
    burn_in: int = 200
    initial_level: float = 2.7
    names: tuple[str, ...] | None = None
    start: tuple[int, int] = DEFAULT_START

    def __post_init__(self):
        n, r = self.n, self.r
        if n < 1 or r < 0 or r > n or self.T < 2 * self.k + 2 or self.k < 1 or self.burn_in < self.k:
            raise ParameterError("invalid scenario dimensions")
        beta = np.asarray(self.beta, dtype=np.float64).reshape(n + 1, r)
        object.__setattr__(self, "beta", beta)
        if self.alpha_path.shape != (n, r):
            raise ShapeError(f"alpha schedule has shape {self.alpha_path.shape}, expected {(n, r)}")
        if self.gamma_path.shape != (n, n * (self.k - 1)):
            raise ShapeError(f"gamma schedule has shape {self.gamma_path.shape}, expected {(n, n * (self.k - 1))}")
        cov = default_noise_cov(n) if self.noise_cov is None else np.asarray(self.noise_cov, dtype=np.float64)
        if cov.shape != (n, n) or not np.allclose(cov, cov.T, rtol=0, atol=1e-14):
            raise ParameterError("noise_cov must be a symmetric n x n matrix")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ParameterError("noise_cov must be positive definite") from None
        object.__setattr__(self, "noise_cov", cov)
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(n)))
        self.check_stability()

    def paths(self):
        """Alpha and gamma paths over the emitted sample."""
        return self.alpha_path.path(self.T), self.gamma_path.path(self.T)

    def companion_spectra(self) -> np.ndarray:
        """Companion eigenvalue moduli, sorted descending, one row per period."""
        alpha, gamma = self.paths()
        bx = self.beta[1:]
        C = np.stack([companion(gamma[t], alpha[t] @ bx.T) for t in range(self.T)])
        return np.sort(np.abs(np.linalg.eigvals(C)), axis=1)[:, ::-1]

    def check_stability(self, tol: float = 1e-8) -> None:
        """Require exactly ``n - rank(alpha_t beta')`` unit roots and all other
        companion roots strictly inside the unit circle, at every period."""
        alpha, gamma = self.paths()
        bx = self.beta[1:]
        for t in range(self.T):
            if t and np.array_equal(alpha[t], alpha[t - 1]) and np.array_equal(gamma[t], gamma[t - 1]):
                continue
            pi_x = alpha[t] @ bx.T
            rank = np.linalg.matrix_rank(pi_x, tol=1e-10) if pi_x.size else 0
            ev = np.linalg.eigvals(companion(gamma[t], pi_x))
            unit = np.abs(ev - 1.0) < 1e-6
            if unit.sum() != self.n - rank:
                raise InstabilityError(
                    f"period {t}: {unit.sum()} unit roots, expected {self.n - rank} common trends"
                )
            rest = np.abs(ev[~unit])
            if rest.size and rest.max() >= 1.0 - tol:
                raise InstabilityError(f"period {t}: companion root of modulus {rest.max():.6g} outside the stable region")

    def zeta(self) -> np.ndarray:
        """True integration-speed index per emitted period."""
        return zeta_of(self.alpha_path.path(self.T))


def generate(s: Scenario, seed: int | None = None):
    """Simulate the scenario.

    Returns
    -------
    panel : LogPanel
        ``T`` monthly log levels.
    zeta : ndarray, shape (T,)
        True index, ``zeta[t]`` from the loadings driving ``dX_t``.
    """
    rng = np.random.default_rng(s.seed if seed is None else seed)
    alpha, gamma = s.paths()
    k, burn = s.k, s.burn_in
    steps = burn + s.T - k
    a_full = np.concatenate([np.repeat(alpha[:1], burn - k, axis=0), alpha])
    g_full = np.concatenate([np.repeat(gamma[:1], burn - k, axis=0), gamma])
    eps = rng.multivariate_normal(np.zeros(s.n), s.noise_cov, size=steps, method="cholesky")
    levels0 = np.full((k, s.n), s.initial_level)
    out, bad = kernels.simulate_vecm(levels0, g_full, a_full, s.beta, eps, LEVEL_BOUND)
    if bad >= 0:
        t = bad + k - burn
        where = f"period {t}" if t >= 0 else f"burn-in step {bad + k}"
        raise InstabilityError(f"simulated levels exceeded {LEVEL_BOUND:g} at {where}")
    panel = LogPanel(tuple(s.names), s.start, out[burn:])
    return panel, s.zeta()


def _star_beta(n: int, consts) -> np.ndarray:
    """Columns ``c_j + x_j - x_n``: each series against the last one."""
    r = n - 1
    beta = np.zeros((n + 1, r))
    beta[0] = consts
    beta[1:r + 1] = np.eye(r)
    beta[n] = -1.0
    return beta


def _star_alpha(n: int, own, hub: float) -> np.ndarray:
    a = np.zeros((n, n - 1))
    np.fill_diagonal(a, own)
    a[n - 1] = hub
    return a


# One fast-adjusting market, so the largest singular value is well separated.
_OWN = (-0.4, -0.2, -0.1)
_HUB = 0.05


SCENARIOS = ("paperlike", "independent", "constant", "ramp", "bivariate")


def scenario(name: str, seed: int = 0, T: int | None = None, noise_scale: float = DEFAULT_NOISE_SCALE) -> Scenario:
    """Named scenarios.

    ``paperlike``
        Four markets, three relations against a hub market, all loadings
        doubling in strength over the sample.
    ``independent``
        Four independent random walks.
    ``constant``
        As ``paperlike`` with loadings fixed.
    ``ramp``
        As ``constant`` with the dominant own-adjustment loading ramping from
        -0.2 to -0.7.
    ``bivariate``
        Two annual series with one relation, 52 observations.
    """
    names4 = ("m1", "m2", "m3", "hub")
    gamma4 = Schedule.constant(0.1 * np.eye(4))
    cov4 = default_noise_cov(4, noise_scale)
    beta4 = _star_beta(4, [0.1, -0.05, 0.02])
    if name == "paperlike":
        alpha = Schedule.ramp(_star_alpha(4, np.multiply(_OWN, 0.6), _HUB), _star_alpha(4, np.multiply(_OWN, 1.2), _HUB))
        return Scenario(4, 3, T or 620, beta4, alpha, gamma4, cov4, seed, names=names4)
    if name == "independent":
        return Scenario(
            4, 3, T or 620, beta4, Schedule.constant(np.zeros((4, 3))), Schedule.constant(np.zeros((4, 4))),
            cov4, seed, names=names4,
        )
    if name == "constant":
        return Scenario(4, 3, T or 620, beta4, Schedule.constant(_star_alpha(4, _OWN, _HUB)), gamma4, cov4, seed, names=names4)
    if name == "ramp":
        a0 = _star_alpha(4, _OWN, _HUB)
        a1 = a0.copy()
        a0[0, 0] = -0.2
        a1[0, 0] = -0.7
        return Scenario(4, 3, T or 620, beta4, Schedule.ramp(a0, a1), gamma4, cov4, seed, names=names4)
    if name == "bivariate":
        beta = np.array([[0.0], [1.0], [-1.0]])
        alpha = Schedule.constant(np.array([[-0.8], [0.4]]))
        return Scenario(
            2, 1, T or 52, beta, alpha, Schedule.constant(np.zeros((2, 2))), default_noise_cov(2, 0.1, 0.0), seed,
            names=("zeta", "telegrams"), start=(1880, 1),
        )
    raise ParameterError(f"unknown scenario {name!r}; choose from {SCENARIOS}")
