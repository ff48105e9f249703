"""Compare the compiled and NumPy clearing kernels.

Run ``python benchmarks/bench_kernels.py``. Prints the best-of-``repeat``
wall time per kernel and backend, plus the speed-up of the compiled one.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from xhold._backend import available_backends


def workloads(n_paths: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    A2 = rng.uniform(0.05, 3.0, (n_paths, 2))
    n = 5
    ms = rng.uniform(0, 0.15, (n, n))
    md = rng.uniform(0, 0.15, (n, n))
    np.fill_diagonal(ms, 0)
    np.fill_diagonal(md, 0)
    A5 = rng.uniform(0.05, 3.0, (n_paths, n))
    d5 = np.ones(n)
    return {
        "closed_form2_batch": lambda k: k.closed_form2_batch(A2, 0.2, 0.1, 0.5, 0.4, 1.0, 1.0),
        "picard_batch (n=2)": lambda k: k.picard_batch(
            A2, [[0, 0.2], [0.1, 0]], [[0, 0.5], [0.4, 0]], [1.0, 1.0], 1e-12, 10_000),
        "picard_batch (n=5)": lambda k: k.picard_batch(A5, ms, md, d5, 1e-12, 10_000),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--paths", type=int, default=32_768)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    backends = available_backends()
    print(f"paths per call: {args.paths}; backends: {', '.join(sorted(backends))}")
    for name, job in workloads(args.paths).items():
        times = {}
        for label, module in sorted(backends.items()):
            times[label] = min(timeit.repeat(lambda: job(module), number=1, repeat=args.repeat))
        line = "  ".join(f"{label}: {t * 1e3:8.2f} ms" for label, t in times.items())
        if "cython" in times:
            line += f"  speed-up x{times['python'] / times['cython']:.1f}"
        print(f"{name:<22} {line}")


if __name__ == "__main__":
    main()
