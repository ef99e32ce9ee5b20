"""Hot numeric kernels with numba and pure-numpy implementations.

Every public function here scans an ``(n, M)`` point array against ``K``
affine score functions ``score_j(p) = consts[j] + coefs[j] . p`` or reduces
weighted segments. The numba path is used by default; set the environment
variable ``PERSUADE_DISABLE_NUMBA=1`` before import to force the pure-numpy
fallback (same results up to BLAS summation order). ``benchmarks/
kernel_bench.py`` compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_CHUNK = 16384  # rows per numpy chunk; bounds peak memory of the score matrix

DISABLE_NUMBA = os.environ.get("PERSUADE_DISABLE_NUMBA", "").lower() in (
    "1",
    "true",
    "yes",
)

try:
    if DISABLE_NUMBA:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# pure-numpy implementations


def _np_affine_argmax(points, coefs, consts):
    n = points.shape[0]
    labels = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        scores = points[lo:hi] @ coefs.T + consts
        idx = np.argmax(scores, axis=1)
        labels[lo:hi] = idx
        best[lo:hi] = scores[np.arange(hi - lo), idx]
    return labels, best


def _np_segment_reduce(labels, weights, points, k):
    mass = np.bincount(labels, weights=weights, minlength=k)
    m = points.shape[1]
    sums = np.empty((k, m))
    for d in range(m):
        sums[:, d] = np.bincount(labels, weights=weights * points[:, d], minlength=k)
    return mass, sums


# ---------------------------------------------------------------------------
# numba implementations

if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_affine_argmax(points, coefs, consts):
        n, m = points.shape
        k = coefs.shape[0]
        labels = np.empty(n, dtype=np.int64)
        best = np.empty(n, dtype=np.float64)
        for i in range(n):
            bi = -np.inf
            li = 0
            for j in range(k):
                s = consts[j]
                for d in range(m):
                    s += coefs[j, d] * points[i, d]
                if s > bi:  # strict: ties keep the smallest index
                    bi = s
                    li = j
            labels[i] = li
            best[i] = bi
        return labels, best

    @numba.njit(cache=True)
    def _nb_segment_reduce(labels, weights, points, k):
        n, m = points.shape
        mass = np.zeros(k)
        sums = np.zeros((k, m))
        for i in range(n):
            l = labels[i]
            w = weights[i]
            mass[l] += w
            for d in range(m):
                sums[l, d] += w * points[i, d]
        return mass, sums


# ---------------------------------------------------------------------------
# public API, backend selected at import time


def affine_argmax(points, coefs, consts):
    """Row-wise ``argmax_j consts[j] + coefs[j] . points[i]``.

    Returns ``(labels, best)``; ties resolve to the smallest index.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    coefs = np.ascontiguousarray(coefs, dtype=np.float64)
    consts = np.ascontiguousarray(consts, dtype=np.float64)
    if HAVE_NUMBA:
        return _nb_affine_argmax(points, coefs, consts)
    return _np_affine_argmax(points, coefs, consts)


def affine_argmin(points, coefs, consts):
    """Row-wise ``argmin_j consts[j] + coefs[j] . points[i]``."""
    labels, best = affine_argmax(points, -coefs, -consts)
    return labels, -best


def segment_reduce(labels, weights, points, k):
    """Per-label weighted mass and weighted coordinate sums.

    Returns ``(mass, sums)`` with shapes ``(k,)`` and ``(k, M)``.
    """
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    points = np.ascontiguousarray(points, dtype=np.float64)
    if HAVE_NUMBA:
        return _nb_segment_reduce(labels, weights, points, k)
    return _np_segment_reduce(labels, weights, points, k)


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
