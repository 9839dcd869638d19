"""Monomial and partial monomial matrices as (permutation, coefficients) pairs.

Column-centric convention: perm[j] is the row of the single nonzero entry of
column j, coeffs[j] its value. A transpose therefore converts representation
rather than data layout.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BadIndexSet, DimensionMismatch
from .gf import fq_inv_vec


@dataclass(frozen=True, eq=False)
class MonomialMatrix:
    q: int
    perm: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        n = len(self.perm)
        object.__setattr__(self, "perm", np.asarray(self.perm, dtype=np.int64))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.int64) % self.q)
        if len(self.coeffs) != n:
            raise DimensionMismatch("perm and coeffs lengths differ")
        if np.any(np.sort(self.perm) != np.arange(n)):
            raise BadIndexSet("perm is not a permutation")
        if np.any(self.coeffs == 0):
            raise BadIndexSet("monomial coefficients must be nonzero")

    @property
    def n(self) -> int:
        return len(self.perm)

    def __eq__(self, other):
        return (
            isinstance(other, MonomialMatrix)
            and self.q == other.q
            and np.array_equal(self.perm, other.perm)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=np.int64)
        m[self.perm, np.arange(self.n)] = self.coeffs
        return m

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "perm": [int(x) for x in self.perm],
            "coeffs": [int(x) for x in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict, q: int) -> "MonomialMatrix":
        return cls(q=q, perm=np.array(obj["perm"]), coeffs=np.array(obj["coeffs"]))


@dataclass(frozen=True, eq=False)
class PartialMonomialMatrix:
    """n x k column selection of a monomial matrix (k < n)."""

    q: int
    n: int
    perm: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "perm", np.asarray(self.perm, dtype=np.int64))
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=np.int64) % self.q)
        k = len(self.perm)
        if len(self.coeffs) != k:
            raise DimensionMismatch("perm and coeffs lengths differ")
        if k >= self.n:
            raise BadIndexSet(f"partial monomial needs k < n, got k={k} n={self.n}")
        if np.any(self.perm < 0) or np.any(self.perm >= self.n):
            raise BadIndexSet("row index out of range")
        if len(np.unique(self.perm)) != k:
            raise BadIndexSet("row indices must be distinct")
        if np.any(self.coeffs == 0):
            raise BadIndexSet("monomial coefficients must be nonzero")

    @property
    def k(self) -> int:
        return len(self.perm)

    def __eq__(self, other):
        return (
            isinstance(other, PartialMonomialMatrix)
            and self.q == other.q
            and self.n == other.n
            and np.array_equal(self.perm, other.perm)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.k), dtype=np.int64)
        m[self.perm, np.arange(self.k)] = self.coeffs
        return m

    def zero_rows(self) -> np.ndarray:
        """Rows with no nonzero entry, ascending (n - k of them)."""
        hit = np.zeros(self.n, dtype=bool)
        hit[self.perm] = True
        return np.nonzero(~hit)[0]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "perm": [int(x) for x in self.perm],
            "coeffs": [int(x) for x in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict, q: int) -> "PartialMonomialMatrix":
        return cls(
            q=q, n=obj["n"], perm=np.array(obj["perm"]), coeffs=np.array(obj["coeffs"])
        )


def mono_identity(n: int, q: int) -> MonomialMatrix:
    return MonomialMatrix(q=q, perm=np.arange(n), coeffs=np.ones(n, dtype=np.int64))


def mono_mul(a: MonomialMatrix, b: MonomialMatrix) -> MonomialMatrix:
    """Product a @ b of two monomial matrices."""
    if a.q != b.q or a.n != b.n:
        raise DimensionMismatch("monomial operands differ in n or q")
    return MonomialMatrix(
        q=a.q, perm=a.perm[b.perm], coeffs=a.coeffs[b.perm] * b.coeffs % a.q
    )


def mono_mul_partial(a: MonomialMatrix, b: PartialMonomialMatrix) -> PartialMonomialMatrix:
    """Product a @ b of a monomial with a partial monomial."""
    if a.q != b.q or a.n != b.n:
        raise DimensionMismatch("operands differ in n or q")
    return PartialMonomialMatrix(
        q=a.q, n=a.n, perm=a.perm[b.perm], coeffs=a.coeffs[b.perm] * b.coeffs % a.q
    )


def mono_transpose(a: MonomialMatrix) -> MonomialMatrix:
    perm_inv = np.empty(a.n, dtype=np.int64)
    perm_inv[a.perm] = np.arange(a.n)
    return MonomialMatrix(q=a.q, perm=perm_inv, coeffs=a.coeffs[perm_inv])


def mono_inverse(a: MonomialMatrix) -> MonomialMatrix:
    perm_inv = np.empty(a.n, dtype=np.int64)
    perm_inv[a.perm] = np.arange(a.n)
    return MonomialMatrix(q=a.q, perm=perm_inv, coeffs=fq_inv_vec(a.coeffs[perm_inv], a.q))


def apply_right(g: np.ndarray, a) -> np.ndarray:
    """g @ a for a monomial or partial monomial a (column gather + scale)."""
    g = np.asarray(g, dtype=np.int64)
    if g.shape[1] != a.n:
        raise DimensionMismatch(f"g has {g.shape[1]} cols, a has n={a.n}")
    return g[:, a.perm] * a.coeffs % a.q


def select_columns(a: MonomialMatrix, j_set) -> PartialMonomialMatrix:
    """Restriction of a to the ordered column set j_set."""
    j = np.asarray(j_set, dtype=np.int64)
    if len(j) == 0 or len(j) >= a.n or len(np.unique(j)) != len(j):
        raise BadIndexSet("j_set must be distinct and 0 < |j_set| < n")
    if np.any(j < 0) or np.any(j >= a.n):
        raise BadIndexSet("column index out of range")
    return PartialMonomialMatrix(q=a.q, n=a.n, perm=a.perm[j], coeffs=a.coeffs[j])
