"""Time the numba kernels against their numpy twins.

Usage: python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Each kernel is called once before timing so numba compilation is excluded.
Outputs are compared so a speedup never hides a wrong answer.
"""

import argparse
import timeit

import numpy as np

from nskgevrey import _accel, kernels


def cases(n, rng):
    xi = rng.uniform(0.05, 16.0, n)
    k = rng.choice([0.1, 0.25, 1.0, 4.0], n)
    mats = [np.asarray(x, dtype=np.complex128) for x in (np.zeros(n), -xi, xi * (1 + k * xi**2), -(xi**2))]
    r = rng.uniform(0.0, 2.0, n)
    vals = rng.random(n)
    shells = rng.integers(0, 512, n)
    m_small = 64
    a = np.zeros((m_small, 2, 2), complex)
    a[:, 0, 1] = -xi[:m_small]
    a[:, 1, 0] = mats[2][:m_small]
    a[:, 1, 1] = mats[3][:m_small]
    y0 = rng.standard_normal((m_small, 2)) + 0j
    times = np.linspace(0.0, 2.0, 9)
    return {
        "expm2": (kernels._expm2_numba, kernels._expm2_numpy, (*mats, 0.7)),
        "chi_profile": (kernels._chi_numba, kernels._chi_numpy, (r,)),
        "shell_max": (kernels._shell_max_numba, kernels._shell_max_numpy, (vals, shells, 512)),
        "rk4_oracle": (kernels._rk4_oracle_numba, kernels._rk4_oracle_numpy, (a, y0, times, 1e-10)),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=1e-9, atol=1e-14)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="problem size for the vectorised kernels")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':12s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}  agree")
    for name, (fast, slow, call_args) in cases(args.n, rng).items():
        out_fast = fast(*call_args)
        out_slow = slow(*call_args)
        t_fast = min(timeit.repeat(lambda: fast(*call_args), number=1, repeat=args.repeat))
        t_slow = min(timeit.repeat(lambda: slow(*call_args), number=1, repeat=args.repeat))
        print(f"{name:12s} {1e3 * t_fast:11.3f} {1e3 * t_slow:11.3f} {t_slow / t_fast:8.2f}  {_same(out_fast, out_slow)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
