"""Seeded expansion (SHAKE-256) and all deterministic samplers.

Every byte of scheme randomness flows through one of these functions, so a
(master seed, domain tag) pair fully determines keys, signatures and
campaigns. Domain tags are listed in docs/formats.md; changing them is a
breaking format change. Bounded draws take a 64-bit word mod the range, whose
bias (< 2^-57 for the ranges used here) is irrelevant for an attack lab.
"""

import hashlib

import numpy as np

from .errors import BadWeight
from .gf import RrefMatrix, rref_with_pivots
from .monomial import MonomialMatrix

TAG_GSEED = b"gseed"      # RREF generator matrices
TAG_MONO = b"mono"        # monomial matrices
TAG_DIGEST = b"digest"    # fixed-weight digest vectors
TAG_TREE = b"tree"        # seed-tree child derivation
TAG_CMT = b"cmt"          # commitment hash
TAG_MSEED = b"mseed"      # secret-key seed expansion
TAG_ENTROPY = b"entropy"  # per-signature EMSEED/salt derivation
TAG_COIN = b"coin"        # fault-injection coin, separate from scheme RNG
TAG_MC = b"mc"            # Monte Carlo campaign streams
TAG_HASH = b"h"           # generic transcript hashes (CROSS commitments)
TAG_MERKLE = b"mkl"       # Merkle tree internal nodes
TAG_CH1 = b"ch1"          # CROSS first challenge (beta values)
TAG_CH2 = b"ch2"          # CROSS second challenge (binary reveal mask)
TAG_CROSS_SEEDS = b"crs"  # CROSS per-round (u', e') seed split
TAG_CROSS_H = b"crh"      # CROSS parity-check matrix
TAG_CROSS_U = b"cru"      # CROSS masking vector u'
TAG_CROSS_E = b"cre"      # CROSS restricted vector e'


def frame(*parts: bytes) -> bytes:
    out = bytearray()
    for p in parts:
        out += len(p).to_bytes(8, "little")
        out += p
    return bytes(out)


class XofStream:
    """Deterministic byte stream from (seed, domain tag).

    Reads are prefix-consistent: the first m bytes never depend on how much
    is read afterwards. Buffer grows geometrically so long streams stay
    linear in total hashing work.
    """

    def __init__(self, seed: bytes, tag: bytes):
        self._shake = hashlib.shake_256(frame(tag, seed))
        self._buf = b""
        self._off = 0

    def read(self, n: int) -> bytes:
        need = self._off + n
        if need > len(self._buf):
            self._buf = self._shake.digest(max(need, 2 * len(self._buf), 64))
        out = self._buf[self._off : self._off + n]
        self._off += n
        return out

    def u64(self, count: int) -> np.ndarray:
        return np.frombuffer(self.read(8 * count), dtype="<u8")

    def ints_mod(self, count: int, bound: int) -> np.ndarray:
        return (self.u64(count) % bound).astype(np.int64)


def xof_expand(seed: bytes, tag: bytes, n_bytes: int, index: int = None) -> bytes:
    """One-shot expansion; `index` (if given) is bound into the input frame."""
    if index is None:
        data = frame(tag, seed)
    else:
        data = frame(tag, seed, index.to_bytes(8, "little"))
    return hashlib.shake_256(data).digest(n_bytes)


def hash_bytes(tag: bytes, parts, out_bytes: int) -> bytes:
    """Domain-separated hash over length-prefixed parts (order-sensitive)."""
    return hashlib.shake_256(frame(tag, *parts)).digest(out_bytes)


def hash_commit(parts, out_bytes: int) -> bytes:
    """Commitment hash over length-prefixed parts."""
    return hash_bytes(TAG_CMT, parts, out_bytes)


def sample_rref_generator(seed: bytes, k: int, n: int, q: int) -> RrefMatrix:
    """Full-rank k x n generator matrix in RREF, deterministic in seed.

    Uniform matrices are drawn until rank k (failure probability ~ q^(k-n)),
    then reduced.
    """
    stream = XofStream(seed, TAG_GSEED)
    while True:
        m = stream.ints_mod(k * n, q).reshape(k, n)
        r = rref_with_pivots(m, q)
        if r.rank == k:
            return r


def sample_monomial(seed: bytes, n: int, q: int) -> MonomialMatrix:
    """Uniform monomial matrix: Fisher-Yates permutation, coeffs in F_q*."""
    stream = XofStream(seed, TAG_MONO)
    draws = stream.u64(n)
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(draws[n - 1 - i] % np.uint64(i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    coeffs = 1 + stream.ints_mod(n, q - 1)
    return MonomialMatrix(q=q, perm=perm, coeffs=coeffs)


def sample_fixed_weight_digest(seed_or_digest: bytes, t: int, w: int, s: int) -> np.ndarray:
    """Vector d in Z_s^t with exactly w nonzero entries (values in 1..s-1)."""
    if not (0 < w <= t) or s < 2:
        raise BadWeight(f"need 0 < w <= t and s >= 2, got t={t} w={w} s={s}")
    stream = XofStream(seed_or_digest, TAG_DIGEST)
    draws = stream.u64(w)
    slots = np.arange(t, dtype=np.int64)
    for i in range(w):
        j = i + int(draws[i] % np.uint64(t - i))
        slots[i], slots[j] = slots[j], slots[i]
    d = np.zeros(t, dtype=np.int64)
    d[slots[:w]] = 1 + stream.ints_mod(w, s - 1)
    return d


def rng_from_seed(seed: bytes, tag: bytes, index: int = 0) -> np.random.Generator:
    """numpy Generator for Monte Carlo streams (not used for scheme crypto)."""
    raw = xof_expand(seed, tag, 32, index=index)
    return np.random.default_rng(int.from_bytes(raw, "little"))
