"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Three loops dominate runtime: the LCS table fill behind the F-measure on
longest common subsequences, the row-wise max-similarity reductions behind
the greedy/token-matching metrics, and the fused Adam parameter update in
the trainer.  Each has two implementations with identical semantics:

* ``numba``: ``@njit``-compiled loops (compiled on first call, cached on
  disk afterwards).
* ``numpy``: vectorised numpy, no compilation step.

The active backend is chosen once at import time from the
``DIALEVAL_BACKEND`` environment variable ("numba" or "numpy").  Unset,
numba is used when it imports cleanly and numpy otherwise.  See
``benchmarks/bench_kernels.py`` for a side-by-side timing run.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on the environment
    HAS_NUMBA = False


def _pick_backend() -> str:
    requested = os.environ.get("DIALEVAL_BACKEND", "").strip().lower()
    if requested == "numba":
        if not HAS_NUMBA:
            raise RuntimeError(
                "DIALEVAL_BACKEND=numba but numba is not importable"
            )
        return "numba"
    if requested == "numpy":
        return "numpy"
    if requested:
        warnings.warn(
            f"unknown DIALEVAL_BACKEND={requested!r}; falling back to auto",
            RuntimeWarning,
            stacklevel=2,
        )
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _pick_backend()


# ---------------------------------------------------------------------------
# longest common subsequence


def _lcs_length_np(a: np.ndarray, b: np.ndarray) -> int:
    """Two-row LCS DP with a vectorised inner update.

    Uses the identity that, within one row, the new cell is the running
    max of ``prev[j-1] + 1`` over matching positions, or ``prev[j]``.
    """
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, dtype=np.int64)
    cur = np.zeros(m + 1, dtype=np.int64)
    for i in range(n):
        eq = b == a[i]
        cand = np.where(eq, prev[:-1] + 1, 0)
        np.maximum.accumulate(cand, out=cand)
        np.maximum(prev[1:], cand, out=cur[1:])
        prev, cur = cur, prev
    return int(prev[m])


def _mean_max_rowsim_np(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over rows of ``a`` of the max dot product against rows of ``b``."""
    return float((a @ b.T).max(axis=1).mean())


def _adam_update_np(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> None:
    """In-place Adam step on flat arrays; moment buffers updated too."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    mhat = m / (1.0 - beta1**step)
    vhat = v / (1.0 - beta2**step)
    param -= lr * mhat / (np.sqrt(vhat) + eps)


if HAS_NUMBA:

    @njit(cache=True)
    def _lcs_length_nb(a, b):  # pragma: no cover - exercised via dispatch
        n, m = len(a), len(b)
        if n == 0 or m == 0:
            return 0
        prev = np.zeros(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(n):
            for j in range(m):
                if a[i] == b[j]:
                    cur[j + 1] = prev[j] + 1
                elif prev[j + 1] >= cur[j]:
                    cur[j + 1] = prev[j + 1]
                else:
                    cur[j + 1] = cur[j]
            prev, cur = cur, prev
        return prev[m]

    @njit(cache=True)
    def _mean_max_rowsim_nb(a, b):  # pragma: no cover - exercised via dispatch
        n, d = a.shape
        k = b.shape[0]
        total = 0.0
        for i in range(n):
            best = -np.inf
            for j in range(k):
                dot = 0.0
                for c in range(d):
                    dot += a[i, c] * b[j, c]
                if dot > best:
                    best = dot
            total += best
        return total / n

    @njit(cache=True)
    def _adam_update_nb(param, grad, m, v, step, lr, beta1, beta2, eps):
        # pragma: no cover - exercised via dispatch
        n = param.shape[0]
        bc1 = 1.0 - beta1**step
        bc2 = 1.0 - beta2**step
        for i in range(n):
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i]
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]
            param[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + eps)


def lcs_length(a: np.ndarray, b: np.ndarray) -> int:
    """Length of the longest common subsequence of two int64 sequences."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if BACKEND == "numba":
        return int(_lcs_length_nb(a, b))
    return _lcs_length_np(a, b)


def mean_max_rowsim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over rows of ``a`` of the max dot product with any row of ``b``.

    Both inputs must be 2-D with matching second dimension and at least
    one row each.  Callers normalise rows beforehand when cosine
    semantics are wanted.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"incompatible shapes {a.shape} and {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("empty row set")
    if BACKEND == "numba":
        return float(_mean_max_rowsim_nb(a, b))
    return _mean_max_rowsim_np(a, b)


def adam_update(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    step: int,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Apply one bias-corrected Adam step in place.

    ``param``, ``grad``, ``m`` and ``v`` are flat float64 views of one
    parameter tensor; ``step`` is 1-based.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    if BACKEND == "numba":
        _adam_update_nb(param, grad, m, v, step, lr, beta1, beta2, eps)
    else:
        _adam_update_np(param, grad, m, v, step, lr, beta1, beta2, eps)
