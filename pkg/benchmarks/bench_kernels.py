"""Time the compiled kernels against the NumPy reference.

Run from the repository root after building the extension::

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is run on inputs of the size used by the estimators (a 618-period
path with seven regressors, a 4-variable simulation with burn-in, a monthly
seasonal filter over 620 observations); the table reports the best of
``--repeat`` timings and the speed-up of the compiled backend.
"""
import argparse
import timeit

import numpy as np

from tvmi import _kernels_py
from tvmi.series import _DIFFUSE, _ucm_system
from tvmi.synth import scenario

try:
    from tvmi import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(rng):
    X = rng.standard_normal((618, 7))
    y = rng.standard_normal(618)
    yield "rw_smooth (T=618, p=7)", "rw_smooth", (X, y, 1.0)

    sc = scenario("constant")
    alpha, gamma = sc.paths()
    steps = sc.burn_in + sc.T - sc.k
    a_full = np.concatenate([np.repeat(alpha[:1], steps - sc.T, axis=0), alpha])
    g_full = np.concatenate([np.repeat(gamma[:1], steps - sc.T, axis=0), gamma])
    eps = 0.01 * rng.standard_normal((steps, 4))
    levels0 = np.full((sc.k, 4), 2.7)
    yield "simulate_vecm (n=4, 818 steps)", "simulate_vecm", (levels0, g_full, a_full, sc.beta, eps, 1e6)

    F, z, Q, h = _ucm_system(12, 0.25, 0.01, 0.001)
    m = F.shape[0]
    ys = np.sin(np.arange(620) * np.pi / 6) + 0.1 * rng.standard_normal(620)
    ys[::37] = np.nan
    yield "kalman_filter (T=620, m=12, smooth)", "kalman_filter", (
        ys, F, z, Q, float(h), np.zeros(m), _DIFFUSE * np.eye(m), m, True,
    )


def best_time(fn, args, repeat):
    number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(*args), number=1), 1e-6)))
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<38}{'python ms':>12}{'cython ms':>12}{'speed-up':>10}")
    for label, name, inputs in cases(rng):
        t_py = best_time(getattr(_kernels_py, name), inputs, args.repeat)
        if _kernels is None:
            print(f"{label:<38}{1e3 * t_py:>12.3f}{'n/a':>12}{'':>10}")
            continue
        t_cy = best_time(getattr(_kernels, name), inputs, args.repeat)
        print(f"{label:<38}{1e3 * t_py:>12.3f}{1e3 * t_cy:>12.3f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
