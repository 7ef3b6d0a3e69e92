"""Compare the compiled and numpy trajectory kernels on the same ensemble.

    python benchmarks/bench_kernels.py [--n-traj 2000] [--t-final 15] [--repeat 1]

Prints wall time per backend, the speed-up and the largest difference between
the two ensemble means (they should agree to rounding).
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from tctsim import backend
from tctsim.dispersive import interaction_hamiltonian
from tctsim.lindblad import DensityMatrix
from tctsim.trajectories import DetectionConfig, run_ensemble


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-traj", type=int, default=2000)
    p.add_argument("--t-final", type=float, default=15.0, help="microseconds")
    p.add_argument("--eta", type=float, default=0.8)
    p.add_argument("--g", type=float, default=1.0, help="exchange coupling, MHz")
    p.add_argument("--sample-every", type=int, default=50)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--repeat", type=int, default=1)
    args = p.parse_args()

    cfg = DetectionConfig(args.eta, args.eta, 1.0, 0.3, 0.2, seed=7)
    h = interaction_hamiltonian(args.g)
    rho0 = DensityMatrix.pure(["gg", "ge", "eg", "ee"], "eg")
    results, timings = {}, {}
    for name in backend.available():
        best = np.inf
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            results[name] = run_ensemble(cfg, h, rho0, args.t_final, args.n_traj, args.sample_every,
                                         args.threads, backend=name)
            best = min(best, time.perf_counter() - t0)
        timings[name] = best
        steps = args.n_traj * round(args.t_final * 1e3 / cfg.dt)
        print(f"{name:>7}: {best:8.2f} s  ({best / steps * 1e9:7.1f} ns per trajectory-step)")
    if len(results) == 2:
        diff = np.max(np.abs(results["cython"].mean - results["python"].mean))
        same = results["cython"].clicks == results["python"].clicks
        print(f"speed-up: {timings['python'] / timings['cython']:.2f}x")
        print(f"max |mean difference| = {diff:.2e}, identical click records: {same}")
    else:
        print("compiled extension not available; only the numpy kernel was timed")


if __name__ == "__main__":
    main()
