"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the ``ZKFAULT_BACKEND``
environment variable ("numba" or "numpy"). Default: numba when importable,
numpy otherwise. ``benchmarks/bench_kernels.py`` compares the two.
"""

import os

import numpy as np

ENV_VAR = "ZKFAULT_BACKEND"

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAS_NUMBA = False


# ---------------------------------------------------------------- numpy path


def _rref_numpy(a, q):
    """Row-reduce ``a`` in place modulo prime q; returns (a, pivots, rank)."""
    k, n = a.shape
    pivots = np.empty(min(k, n), dtype=np.int64)
    r = 0
    for j in range(n):
        if r == k:
            break
        nz = np.nonzero(a[r:, j])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            a[[r, p], j:] = a[[p, r], j:]
        inv = pow(int(a[r, j]), q - 2, q)
        a[r, j:] = a[r, j:] * inv % q
        col = a[:, j].copy()
        col[r] = 0
        a[:, j:] -= np.outer(col, a[r, j:])
        a[:, j:] %= q
        pivots[r] = j
        r += 1
    return a, pivots[:r].copy(), r


def _digest_stats_numpy(supports, values, lo, hi):
    """Per-trial effectiveness and value bitmask for the target leaf range."""
    inmask = (supports >= lo) & (supports < hi)
    inside = inmask.any(axis=1)
    outside = (~inmask).any(axis=1)
    bits = np.where(inmask, np.int64(1) << values, np.int64(0))
    mask = np.bitwise_or.reduce(bits, axis=1)
    return inside & outside, mask


# ---------------------------------------------------------------- numba path

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _pow_mod(base, exp, q):
        result = 1
        b = base % q
        e = exp
        while e > 0:
            if e & 1:
                result = result * b % q
            b = b * b % q
            e >>= 1
        return result

    @njit(cache=True, nogil=True)
    def _rref_numba(a, q):
        k, n = a.shape
        pivots = np.empty(min(k, n), dtype=np.int64)
        r = 0
        for j in range(n):
            if r == k:
                break
            p = -1
            for i in range(r, k):
                if a[i, j] != 0:
                    p = i
                    break
            if p < 0:
                continue
            if p != r:
                for c in range(j, n):
                    t = a[r, c]
                    a[r, c] = a[p, c]
                    a[p, c] = t
            inv = _pow_mod(a[r, j], q - 2, q)
            for c in range(j, n):
                a[r, c] = a[r, c] * inv % q
            for i in range(k):
                f = a[i, j]
                if i != r and f != 0:
                    for c in range(j, n):
                        a[i, c] = (a[i, c] - f * a[r, c]) % q
            pivots[r] = j
            r += 1
        return a, pivots[:r].copy(), r

    @njit(cache=True, nogil=True)
    def _digest_stats_numba(supports, values, lo, hi):
        b, w = supports.shape
        eff = np.zeros(b, dtype=np.bool_)
        mask = np.zeros(b, dtype=np.int64)
        for i in range(b):
            inside = False
            outside = False
            m = np.int64(0)
            for j in range(w):
                p = supports[i, j]
                if lo <= p < hi:
                    inside = True
                    m |= np.int64(1) << values[i, j]
                else:
                    outside = True
            eff[i] = inside and outside
            mask[i] = m
        return eff, mask


BACKENDS = {"numpy": (_rref_numpy, _digest_stats_numpy)}
if HAS_NUMBA:
    BACKENDS["numba"] = (_rref_numba, _digest_stats_numba)


def _select():
    wanted = os.environ.get(ENV_VAR, "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            raise RuntimeError(
                f"{ENV_VAR}={wanted!r} not available; choices: {sorted(BACKENDS)}"
            )
        return wanted
    return "numba" if HAS_NUMBA else "numpy"


ACTIVE = _select()
_rref_kernel, _digest_kernel = BACKENDS[ACTIVE]


def backend_name():
    return ACTIVE


def rref_mod(mat, q):
    """RREF of an integer matrix mod prime q.

    Returns (reduced copy, pivot column indices, rank). Input is not modified.
    """
    a = np.array(mat, dtype=np.int64, order="C") % q
    return _rref_kernel(a, q)


def digest_stats(supports, values, lo, hi):
    """Classify a batch of fixed-weight digests against a target leaf range.

    supports: (B, w) nonzero positions in [0, t); values: (B, w) in [1, s).
    Returns (effective, mask): effective[i] is True when the digest has a
    nonzero position both inside and outside [lo, hi); mask[i] has bit v set
    when value v occurs at a position inside the range.
    """
    supports = np.ascontiguousarray(supports, dtype=np.int64)
    values = np.ascontiguousarray(values, dtype=np.int64)
    return _digest_kernel(supports, values, np.int64(lo), np.int64(hi))
