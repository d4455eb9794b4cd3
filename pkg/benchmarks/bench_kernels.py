"""Compare the jit and plain-numpy kernel backends on realistic shapes.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeats 9

Each kernel is timed under DIALEVAL_BACKEND=numba and =numpy with the
same inputs.  The jit path is warmed once before timing so compilation
cost is not counted; pass --include-compile to see it.
"""

import argparse
import importlib
import os
import time

import numpy as np

import dialeval.kernels as kernels


def make_workloads(rng):
    a_tok = rng.integers(0, 500, size=400).astype(np.int64)
    b_tok = rng.integers(0, 500, size=380).astype(np.int64)

    a_rows = rng.standard_normal((64, 300))
    b_rows = rng.standard_normal((80, 300))

    n = 200_000
    param = rng.standard_normal(n)
    grad = rng.standard_normal(n)
    m = np.zeros(n)
    v = np.zeros(n)

    return {
        "lcs_length (400x380 tokens)": lambda k: k.lcs_length(a_tok, b_tok),
        "mean_max_rowsim (64x80, dim 300)": lambda k: k.mean_max_rowsim(
            a_rows, b_rows
        ),
        "adam_update (200k params)": lambda k: k.adam_update(
            param.copy(), grad, m.copy(), v.copy(), 1, 1e-3
        ),
    }


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument(
        "--include-compile", action="store_true",
        help="skip the warmup call so jit compilation shows up in the numbers",
    )
    args = parser.parse_args()

    workloads = make_workloads(np.random.default_rng(0))
    results = {}
    for backend in ("numpy", "numba"):
        os.environ["DIALEVAL_BACKEND"] = backend
        mod = importlib.reload(kernels)
        if mod.BACKEND != backend:
            print(f"backend {backend!r} unavailable, skipping")
            continue
        for name, call in workloads.items():
            if backend == "numba" and not args.include_compile:
                call(mod)
            results.setdefault(name, {})[backend] = time_call(
                lambda: call(mod), args.repeats
            )

    width = max(len(name) for name in workloads)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, timings in results.items():
        np_t = timings.get("numpy")
        nb_t = timings.get("numba")
        cols = [
            f"{np_t * 1e3:9.3f}ms" if np_t is not None else f"{'n/a':>10}",
            f"{nb_t * 1e3:9.3f}ms" if nb_t is not None else f"{'n/a':>10}",
        ]
        if np_t and nb_t:
            cols.append(f"{np_t / nb_t:7.1f}x")
        print(f"{name:<{width}}  {cols[0]}  {cols[1]}  {cols[2] if len(cols) > 2 else ''}")

    os.environ.pop("DIALEVAL_BACKEND", None)
    importlib.reload(kernels)


if __name__ == "__main__":
    main()
