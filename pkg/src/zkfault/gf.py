"""Prime-field scalar and dense-matrix helpers.

Matrices are numpy int64 arrays holding canonical residues in [0, q); every
operation reduces eagerly. q is a runtime parameter so the full-size schemes
(q = 127) and the small test fields (q = 5, 7) share one code path.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .backend import rref_mod
from .errors import DimensionMismatch, ZeroInverse


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def check_prime_modulus(q: int) -> int:
    if not is_prime(q):
        raise ValueError(f"modulus {q} is not prime")
    return q


@lru_cache(maxsize=None)
def _inv_table(q: int) -> np.ndarray:
    """Inverse table for small q; index 0 is unused (kept 0)."""
    t = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        t[a] = pow(a, q - 2, q)
    return t


def fq_inv(a: int, q: int) -> int:
    """Multiplicative inverse of a mod q."""
    a = int(a) % q
    if a == 0:
        raise ZeroInverse(f"0 has no inverse mod {q}")
    if q <= 1 << 16:
        return int(_inv_table(q)[a])
    return pow(a, q - 2, q)


def fq_inv_vec(a: np.ndarray, q: int) -> np.ndarray:
    """Elementwise inverse; every entry must be nonzero."""
    a = np.asarray(a, dtype=np.int64) % q
    if np.any(a == 0):
        raise ZeroInverse(f"0 has no inverse mod {q}")
    if q <= 1 << 16:
        return _inv_table(q)[a]
    return np.array([pow(int(x), q - 2, q) for x in a.ravel()]).reshape(a.shape)


@dataclass(frozen=True)
class RrefMatrix:
    """A matrix in reduced row-echelon form together with its pivot columns."""

    a: np.ndarray
    q: int
    pivot_cols: tuple

    @property
    def rank(self) -> int:
        return len(self.pivot_cols)

    @property
    def nonpivot_cols(self) -> tuple:
        piv = set(self.pivot_cols)
        return tuple(j for j in range(self.a.shape[1]) if j not in piv)

    def __eq__(self, other):
        return (
            isinstance(other, RrefMatrix)
            and self.q == other.q
            and self.pivot_cols == other.pivot_cols
            and np.array_equal(self.a, other.a)
        )


def rref_with_pivots(m: np.ndarray, q: int) -> RrefMatrix:
    """Unique RREF of m over F_q, with ascending pivot columns."""
    a, piv, _ = rref_mod(m, q)
    return RrefMatrix(a=a, q=q, pivot_cols=tuple(int(j) for j in piv))


def lex_min_col(m: np.ndarray, q: int) -> np.ndarray:
    """Scale each nonzero column so its first nonzero entry is 1."""
    m = np.asarray(m, dtype=np.int64) % q
    if m.size == 0:
        return m.copy()
    nz = m != 0
    has = nz.any(axis=0)
    first = np.argmax(nz, axis=0)
    lead = m[first, np.arange(m.shape[1])]
    scale = np.ones(m.shape[1], dtype=np.int64)
    if has.any():
        scale[has] = fq_inv_vec(lead[has], q)
    return m * scale % q


def lex_sort(m: np.ndarray) -> np.ndarray:
    """Reorder columns into ascending lexicographic order (row 0 primary)."""
    m = np.asarray(m, dtype=np.int64)
    if m.shape[1] <= 1:
        return m.copy()
    order = np.lexsort(m[::-1, :])
    return m[:, order]


def mat_mul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"{a.shape} @ {b.shape}")
    return a.astype(np.int64) @ b.astype(np.int64) % q


def mat_inv(a: np.ndarray, q: int) -> np.ndarray:
    """Inverse of a square matrix over F_q (raises ZeroInverse if singular)."""
    a = np.asarray(a, dtype=np.int64)
    k = a.shape[0]
    if a.shape != (k, k):
        raise DimensionMismatch(f"not square: {a.shape}")
    aug = np.hstack([a % q, np.eye(k, dtype=np.int64)])
    red, piv, rank = rref_mod(aug, q)
    if rank < k or tuple(piv) != tuple(range(k)):
        raise ZeroInverse("matrix is singular")
    return red[:, k:].copy()


def mat_bytes(m: np.ndarray) -> bytes:
    """Canonical serialization used inside commitments (entries < 2^16)."""
    m = np.asarray(m, dtype=np.int64)
    head = m.shape[0].to_bytes(4, "little") + m.shape[1].to_bytes(4, "little")
    return head + m.astype("<u2").tobytes()
