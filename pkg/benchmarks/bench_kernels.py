"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--episode]

Reports the best per-call time of each kernel under both backends and, with
``--episode``, the wall time of one full 60 s DeePO episode under each
backend (run in a subprocess so the backend switch takes effect at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from deepobike import kernels
from deepobike.plant import BicycleParams

ARGS = BicycleParams().kernel_args


def cases(mod):
    rng = np.random.default_rng(0)
    x = np.array([0.02, -0.1, 0.01, 0.0])
    G = rng.standard_normal((3, 3))
    Phi = G @ G.T + np.eye(3)
    PhiInv = np.linalg.inv(Phi)
    X1 = rng.standard_normal((2, 3))
    phi, xn = rng.standard_normal(3), rng.standard_normal(2)
    A = np.array([[0.5, 0.2], [-0.1, 0.7]])
    Q = np.eye(2)
    return {
        "bicycle_rhs": lambda: mod.bicycle_rhs(0.02, -0.1, 0.01, 0.0, 0.3, *ARGS),
        "bicycle_rk4 (10 substeps)": lambda: mod.bicycle_rk4(x, 0.3, 0.01, 10, *ARGS),
        "fl_input": lambda: mod.fl_input(0.02, -0.1, 0.01, 0.0, 0.0, 0.0, 1.0, 6.0, *ARGS[:-1]),
        # the update is in place; lam = 1 and large t keep the matrices bounded
        "cov_rank_one": lambda: mod.cov_rank_one(Phi, PhiInv, X1, phi, xn, 1.0, 1e9),
        "dlyap_small (n=2)": lambda: mod.dlyap_small(A, Q),
    }


def best(fn, number, repeat):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


EPISODE = ("import time; from deepobike.config import ExperimentConfig; "
           "from deepobike.experiment import prepare, run_episode; "
           "import deepobike; c = ExperimentConfig(); d, p = prepare(c); "
           "t = time.perf_counter(); run_episode(c, p, d); "
           "print(deepobike.BACKEND, time.perf_counter() - t)")


def episode_time(pure):
    env = dict(os.environ, DEEPOBIKE_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", EPISODE], env=env, capture_output=True,
                         text=True, check=True)
    backend, secs = out.stdout.split()
    return backend, float(secs)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--episode", action="store_true", help="also time a full episode")
    args = ap.parse_args(argv)

    if kernels.compiled is None:
        print("compiled extension not available; build with `pip install -e .`")
        return 1
    py, cy = cases(kernels.python), cases(kernels.compiled)
    print(f"{'kernel':28s} {'python [us]':>12s} {'cython [us]':>12s} {'speedup':>8s}")
    for name in py:
        tp = best(py[name], args.number, args.repeat) * 1e6
        tc = best(cy[name], args.number, args.repeat) * 1e6
        print(f"{name:28s} {tp:12.2f} {tc:12.2f} {tp / tc:8.1f}")
    if args.episode:
        for pure in (True, False):
            backend, secs = episode_time(pure)
            print(f"60 s episode, {backend:7s} backend: {secs:.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
