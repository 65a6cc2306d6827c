"""Time the compiled kernels against the pure numpy reference.

Run from the repository root:

    python3 benchmarks/bench_backends.py [--repeat 5]

Prints one row per kernel with the best-of-N wall time for each backend and
the speedup. Exits with a note instead of a table when the extension is not
importable (the package still works, it just runs on the numpy paths).
"""

import argparse
import time

import numpy as np

from coopsurface import K0
from coopsurface._kernels import pure

try:
    from coopsurface._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(rng):
    grid = np.mgrid[0:30, 0:30].reshape(2, -1).T * 0.8
    positions = np.column_stack([grid, np.zeros(len(grid))])
    beta = rng.normal(size=(len(positions), 3)) + 1j * rng.normal(
        size=(len(positions), 3))
    pts = rng.uniform(-15, 15, size=(4000, 3))
    pts[:, 2] = rng.uniform(2, 6, size=len(pts))
    n_blocks = 240
    blocks = rng.normal(size=(3 * n_blocks, 3 * n_blocks)) + 1j * rng.normal(
        size=(3 * n_blocks, 3 * n_blocks))
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=n_blocks))
    lattice_pts = (np.mgrid[-260:261, -260:261].reshape(2, -1).T * 0.8)
    lattice_pts = lattice_pts[np.linalg.norm(lattice_pts, axis=1) <= 200.0]
    return [
        ("assemble_coupling (900 emitters)",
         lambda mod: mod.assemble_coupling(positions, K0)),
        ("pair_xx_coupling (900 emitters)",
         lambda mod: mod.pair_xx_coupling(positions, K0)),
        ("scattered_sum (900 x 4000)",
         lambda mod: mod.scattered_sum(positions, beta, pts, K0, 0.05)),
        ("momentum_expectation (720^2 blocks)",
         lambda mod: mod.momentum_expectation(blocks, phases)),
        (f"damped_coupling_sum ({len(lattice_pts)} points)",
         lambda mod: mod.damped_coupling_sum(
             lattice_pts, (0.0, 0.0), (0.3, -0.2), 0.01, K0)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions per kernel (default 5)")
    args = parser.parse_args()

    if _core is None:
        print("compiled extension not importable; nothing to compare "
              "(build it with: pip install -e . --no-build-isolation)")
        return

    rng = np.random.default_rng(0)
    rows = []
    for name, call in workloads(rng):
        t_pure = best_of(lambda: call(pure), args.repeat)
        t_core = best_of(lambda: call(_core), args.repeat)
        rows.append((name, t_pure, t_core))

    width = max(len(name) for name, _, _ in rows)
    print(f"{'kernel':<{width}}  {'pure':>9}  {'compiled':>9}  {'speedup':>7}")
    for name, t_pure, t_core in rows:
        print(f"{name:<{width}}  {t_pure * 1e3:>7.2f}ms  "
              f"{t_core * 1e3:>7.2f}ms  {t_pure / t_core:>6.1f}x")


if __name__ == "__main__":
    main()
