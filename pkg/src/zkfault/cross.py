"""Functional CROSS core: restricted vectors, commitment Merkle tree, the
two-challenge signing flow and a transcript consistency checker.

Errors live in the subgroup E = <g> of F_p* with |E| = z, acting on F_p^n by
componentwise multiplication, so quotients are exponent subtractions mod z.
The full-size CROSS parameters are not baked in; the desk set below keeps
exhaustive tests fast and a JSON file can supply official values.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import MalformedSignature, ZkfaultError
from .gf import check_prime_modulus, mat_bytes
from .seedtree import (
    _expand_cover,
    build_seed_tree,
    leaf_count,
    seed_tree_paths,
)
from .xof import (
    TAG_CH1,
    TAG_CH2,
    TAG_CROSS_E,
    TAG_CROSS_H,
    TAG_CROSS_SEEDS,
    TAG_CROSS_U,
    TAG_ENTROPY,
    TAG_HASH,
    TAG_MERKLE,
    XofStream,
    frame,
    hash_bytes,
    sample_fixed_weight_digest,
    xof_expand,
)


@dataclass(frozen=True)
class CrossParams:
    name: str
    p: int
    z: int
    g: int
    n: int
    k: int
    t: int
    w_reveal: int
    lam: int = 128

    def __post_init__(self):
        check_prime_modulus(self.p)
        if (self.p - 1) % self.z != 0:
            raise ValueError("z must divide p-1")
        order = 1
        acc = self.g % self.p
        while acc != 1:
            acc = acc * self.g % self.p
            order += 1
            if order > self.z:
                break
        if order != self.z:
            raise ValueError(f"g={self.g} has order {order}, expected z={self.z}")
        if not (0 < self.k < self.n):
            raise ValueError("need 0 < k < n")
        if not (1 <= self.w_reveal < self.t):
            raise ValueError("need 1 <= w_reveal < t")

    @property
    def l2(self) -> int:
        return leaf_count(self.t)

    @property
    def tree_size(self) -> int:
        return 2 * self.l2 - 1

    @property
    def lam_bytes(self) -> int:
        return self.lam // 8

    @property
    def g_powers(self) -> np.ndarray:
        out = np.ones(self.z, dtype=np.int64)
        for i in range(1, self.z):
            out[i] = out[i - 1] * self.g % self.p
        return out

    def to_json(self) -> dict:
        return {
            "name": self.name, "p": self.p, "z": self.z, "g": self.g, "n": self.n,
            "k": self.k, "t": self.t, "w_reveal": self.w_reveal, "lambda": self.lam,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CrossParams":
        return cls(
            name=obj["name"], p=obj["p"], z=obj["z"], g=obj["g"], n=obj["n"],
            k=obj["k"], t=obj["t"], w_reveal=obj["w_reveal"], lam=obj.get("lambda", 128),
        )


CROSS_PARAM_SETS = {
    p.name: p
    for p in [
        CrossParams("cross-desk", 127, 7, 2, 30, 15, 32, 16, 128),
        CrossParams("cross-tiny", 127, 7, 2, 12, 6, 8, 4, 128),
    ]
}


@dataclass(frozen=True)
class RestrictedVector:
    """Element of E^n in exponent form."""

    exps: np.ndarray

    def __eq__(self, other):
        return isinstance(other, RestrictedVector) and np.array_equal(self.exps, other.exps)

    def value(self, params: CrossParams) -> np.ndarray:
        return params.g_powers[self.exps]


def group_apply(params: CrossParams, sigma: RestrictedVector, x: np.ndarray) -> np.ndarray:
    """Componentwise action of g^sigma on a vector over F_p."""
    return sigma.value(params) * np.asarray(x, dtype=np.int64) % params.p


def group_quotient(params: CrossParams, e: RestrictedVector, e_prime: RestrictedVector) -> RestrictedVector:
    """sigma with sigma(e') = e, i.e. exponentwise e - e' mod z."""
    return RestrictedVector(exps=(e.exps - e_prime.exps) % params.z)


@dataclass(frozen=True)
class CrossKeyPair:
    params: CrossParams
    e: RestrictedVector
    h: np.ndarray
    s: np.ndarray


@dataclass(frozen=True)
class CrossPublicKey:
    params: CrossParams
    h: np.ndarray
    s: np.ndarray


def cross_keygen(params: CrossParams, seed: bytes) -> CrossKeyPair:
    h = XofStream(seed, TAG_CROSS_H).ints_mod((params.n - params.k) * params.n, params.p)
    h = h.reshape(params.n - params.k, params.n)
    e = RestrictedVector(exps=XofStream(seed, TAG_CROSS_E).ints_mod(params.n, params.z))
    s = e.value(params) @ h.T % params.p
    return CrossKeyPair(params=params, e=e, h=h, s=s)


def public_key(keys: CrossKeyPair) -> CrossPublicKey:
    return CrossPublicKey(params=keys.params, h=keys.h, s=keys.s)


# ------------------------------------------------------------------- merkle


class MerkleTree:
    """Binary hash tree over t commitment leaves (padded to a power of two)."""

    def __init__(self, leaves, out_bytes: int):
        self.out_bytes = out_bytes
        self.n_leaves = len(leaves)
        n2 = 1 << max(1, (len(leaves) - 1).bit_length())
        pad = [b"\x00" * out_bytes] * (n2 - len(leaves))
        self.n2 = n2
        nodes = [b""] * (2 * n2 - 1)
        nodes[n2 - 1 :] = list(leaves) + pad
        for i in range(n2 - 2, -1, -1):
            nodes[i] = hash_bytes(TAG_MERKLE, [nodes[2 * i + 1], nodes[2 * i + 2]], out_bytes)
        self.nodes = nodes

    def root(self) -> bytes:
        return self.nodes[0]

    def proof(self, index: int) -> list:
        """Sibling hashes from leaf `index` up to (excluding) the root."""
        pos = self.n2 - 1 + index
        out = []
        while pos != 0:
            sib = pos + 1 if pos % 2 == 1 else pos - 1
            out.append(self.nodes[sib])
            pos = (pos - 1) // 2
        return out


def verify_merkle(root: bytes, leaf: bytes, index: int, proof, n_leaves: int, out_bytes: int) -> bool:
    n2 = 1 << max(1, (n_leaves - 1).bit_length())
    pos = n2 - 1 + index
    cur = leaf
    for sib in proof:
        if pos % 2 == 1:
            cur = hash_bytes(TAG_MERKLE, [cur, sib], out_bytes)
        else:
            cur = hash_bytes(TAG_MERKLE, [sib, cur], out_bytes)
        pos = (pos - 1) // 2
    return pos == 0 and cur == root


# ------------------------------------------------------------------ signing


def _vec_bytes(v: np.ndarray) -> bytes:
    return mat_bytes(np.asarray(v, dtype=np.int64).reshape(1, -1))


@dataclass(frozen=True)
class CrossRound:
    u_prime: np.ndarray
    e_prime: RestrictedVector
    sigma: RestrictedVector
    y: np.ndarray
    c0: bytes
    c1: bytes


@dataclass(frozen=True)
class CrossSignature:
    salt: bytes
    c0: bytes
    c1: bytes
    h: bytes
    seed_path: tuple  # ((node index, seed), ...) covering the revealed rounds
    merkle_proofs: dict  # round -> sibling list, for rounds outside J
    f_list: dict  # round -> (y, sigma, c1_round), for rounds outside J

    def wire_seeds(self) -> tuple:
        return tuple(seed for _, seed in self.seed_path)


def round_seeds(leaf_seed: bytes, lam_bytes: int) -> tuple:
    both = xof_expand(leaf_seed, TAG_CROSS_SEEDS, 2 * lam_bytes)
    return both[:lam_bytes], both[lam_bytes:]


def round_vectors(params: CrossParams, leaf_seed: bytes):
    seed_u, seed_e = round_seeds(leaf_seed, params.lam_bytes)
    u_prime = XofStream(seed_u, TAG_CROSS_U).ints_mod(params.n, params.p)
    e_prime = RestrictedVector(exps=XofStream(seed_e, TAG_CROSS_E).ints_mod(params.n, params.z))
    return u_prime, e_prime


def gen_ch1(params: CrossParams, c0: bytes, c1: bytes, msg: bytes, salt: bytes) -> np.ndarray:
    """First challenge: t values uniform in F_p*."""
    stream = XofStream(frame(c0, c1, msg, salt), TAG_CH1)
    return 1 + stream.ints_mod(params.t, params.p - 1)


def gen_ch2(params: CrossParams, c0: bytes, c1: bytes, betas: np.ndarray, h: bytes, msg: bytes, salt: bytes) -> np.ndarray:
    """Second challenge: binary mask of weight w_reveal (b[i]=1 reveals round i)."""
    seed = frame(c0, c1, _vec_bytes(betas), h, msg, salt)
    return sample_fixed_weight_digest(seed, params.t, params.w_reveal, 2)


@dataclass(frozen=True)
class CrossSignContext:
    salt: bytes
    tree: object
    rounds: tuple
    c0: bytes
    c1: bytes
    h: bytes
    betas: np.ndarray
    b: np.ndarray
    merkle: MerkleTree

    @property
    def hidden_mask(self) -> np.ndarray:
        """LESS-convention mask: 1 = seed stays hidden (round not in J)."""
        return (1 - self.b).astype(np.int8)


def cross_sign_context(keys: CrossKeyPair, msg: bytes, entropy: bytes, force_b=None) -> CrossSignContext:
    p = keys.params
    lam = p.lam_bytes
    blob = xof_expand(entropy, TAG_ENTROPY, 3 * lam)
    mseed, salt = blob[:lam], blob[lam:]  # salt is 2*lambda bits
    tree = build_seed_tree(mseed, salt, p.t)
    out_bytes = 2 * lam
    rounds = []
    for i in range(p.t):
        u_prime, e_prime = round_vectors(p, tree.leaf(i))
        sigma = group_quotient(p, keys.e, e_prime)
        u = group_apply(p, sigma, u_prime)
        s_tilde = u @ keys.h.T % p.p
        c0i = hash_bytes(
            TAG_HASH, [_vec_bytes(s_tilde), _vec_bytes(sigma.exps), salt, i.to_bytes(8, "little")], out_bytes
        )
        c1i = hash_bytes(
            TAG_HASH, [_vec_bytes(u_prime), _vec_bytes(e_prime.exps), salt, i.to_bytes(8, "little")], out_bytes
        )
        rounds.append((u_prime, e_prime, sigma, c0i, c1i))
    merkle = MerkleTree([r[3] for r in rounds], out_bytes)
    c0 = merkle.root()
    c1 = hash_bytes(TAG_HASH, [r[4] for r in rounds], out_bytes)
    betas = gen_ch1(p, c0, c1, msg, salt)
    full_rounds = []
    h_parts = []
    for i, (u_prime, e_prime, sigma, c0i, c1i) in enumerate(rounds):
        y = (u_prime + betas[i] * e_prime.value(p)) % p.p
        h_parts.append(hash_bytes(TAG_HASH, [_vec_bytes(y)], out_bytes))
        full_rounds.append(CrossRound(u_prime=u_prime, e_prime=e_prime, sigma=sigma, y=y, c0=c0i, c1=c1i))
    h = hash_bytes(TAG_HASH, h_parts, out_bytes)
    if force_b is not None:
        b = np.asarray(force_b, dtype=np.int64)
    else:
        b = gen_ch2(p, c0, c1, betas, h, msg, salt)
    return CrossSignContext(
        salt=salt, tree=tree, rounds=tuple(full_rounds), c0=c0, c1=c1, h=h,
        betas=betas, b=b, merkle=merkle,
    )


def _assemble(ctx: CrossSignContext, params: CrossParams, seed_path) -> CrossSignature:
    hidden = [i for i in range(params.t) if ctx.b[i] == 0]
    return CrossSignature(
        salt=ctx.salt,
        c0=ctx.c0,
        c1=ctx.c1,
        h=ctx.h,
        seed_path=tuple(seed_path),
        merkle_proofs={i: ctx.merkle.proof(i) for i in hidden},
        f_list={i: (ctx.rounds[i].y, ctx.rounds[i].sigma, ctx.rounds[i].c1) for i in hidden},
    )


def cross_sign(keys: CrossKeyPair, msg: bytes, entropy: bytes, force_b=None) -> CrossSignature:
    ctx = cross_sign_context(keys, msg, entropy, force_b)
    path = seed_tree_paths(ctx.tree, ctx.hidden_mask)
    return _assemble(ctx, keys.params, path)


def cross_check_response(pub: CrossPublicKey, msg: bytes, sig: CrossSignature, force_b=None) -> bool:
    """Transcript consistency: challenges, Merkle proofs, hash chains and the
    revealed rounds' commitments. Over-disclosure (faulted seed paths) is
    tolerated as long as every revealed round is covered."""
    p = pub.params
    out_bytes = 2 * p.lam_bytes
    try:
        betas = gen_ch1(p, sig.c0, sig.c1, msg, sig.salt)
        if force_b is not None:
            b = np.asarray(force_b, dtype=np.int64)
        else:
            b = gen_ch2(p, sig.c0, sig.c1, betas, sig.h, msg, sig.salt)
        hidden = [i for i in range(p.t) if b[i] == 0]
        if sorted(sig.f_list) != hidden or sorted(sig.merkle_proofs) != hidden:
            raise MalformedSignature("f_list/proofs do not match the challenge")
        leaves = _expand_cover(sig.seed_path, sig.salt, p.l2)
        h_parts = [b""] * p.t
        c1_parts = [b""] * p.t
        for i in range(p.t):
            tag = i.to_bytes(8, "little")
            if b[i] == 1:
                if i not in leaves:
                    raise MalformedSignature(f"revealed round {i} not covered by seed path")
                u_prime, e_prime = round_vectors(p, leaves[i])
                y = (u_prime + betas[i] * e_prime.value(p)) % p.p
                c1_parts[i] = hash_bytes(
                    TAG_HASH, [_vec_bytes(u_prime), _vec_bytes(e_prime.exps), sig.salt, tag], out_bytes
                )
            else:
                y, sigma, c1i = sig.f_list[i]
                c1_parts[i] = c1i
                s_tilde = (group_apply(p, sigma, y) @ pub.h.T - betas[i] * pub.s) % p.p
                c0i = hash_bytes(
                    TAG_HASH, [_vec_bytes(s_tilde), _vec_bytes(sigma.exps), sig.salt, tag], out_bytes
                )
                if not verify_merkle(sig.c0, c0i, i, sig.merkle_proofs[i], p.t, out_bytes):
                    raise MalformedSignature(f"merkle proof for round {i} fails")
            h_parts[i] = hash_bytes(TAG_HASH, [_vec_bytes(y)], out_bytes)
        if hash_bytes(TAG_HASH, h_parts, out_bytes) != sig.h:
            raise MalformedSignature("h chain mismatch")
        if hash_bytes(TAG_HASH, c1_parts, out_bytes) != sig.c1:
            raise MalformedSignature("c1 chain mismatch")
        return True
    except (ZkfaultError, KeyError, IndexError, ValueError):
        return False


# ------------------------------------------------------------- serialization


def cross_sig_to_json(sig: CrossSignature) -> dict:
    return {
        "schema": "zkfault/1",
        "kind": "cross-sig",
        "salt": sig.salt.hex(),
        "c0": sig.c0.hex(),
        "c1": sig.c1.hex(),
        "h": sig.h.hex(),
        "seed_path": [seed.hex() for seed in sig.wire_seeds()],
        "merkle_proofs": {str(i): [x.hex() for x in pr] for i, pr in sig.merkle_proofs.items()},
        "f_list": {
            str(i): {
                "y": [int(v) for v in y],
                "sigma": [int(v) for v in sigma.exps],
                "c1_round": c1i.hex(),
            }
            for i, (y, sigma, c1i) in sig.f_list.items()
        },
    }


def cross_sig_from_json(obj: dict, params: CrossParams) -> CrossSignature:
    """Parse a wire CROSS signature; seed-path indices are recomputed from
    the revealed set implied by the transcript."""
    from .seedtree import assign_wire_seeds, compute_seeds_to_publish

    hidden_rounds = sorted(int(i) for i in obj["f_list"])
    f = np.zeros(params.t, dtype=np.int8)
    f[hidden_rounds] = 1
    x = compute_seeds_to_publish(f, params.l2)
    seeds = tuple(bytes.fromhex(s) for s in obj["seed_path"])
    pairs = tuple(assign_wire_seeds(seeds, x))
    return CrossSignature(
        salt=bytes.fromhex(obj["salt"]),
        c0=bytes.fromhex(obj["c0"]),
        c1=bytes.fromhex(obj["c1"]),
        h=bytes.fromhex(obj["h"]),
        seed_path=pairs,
        merkle_proofs={int(i): [bytes.fromhex(x) for x in pr] for i, pr in obj["merkle_proofs"].items()},
        f_list={
            int(i): (
                np.array(ent["y"], dtype=np.int64),
                RestrictedVector(exps=np.array(ent["sigma"], dtype=np.int64)),
                bytes.fromhex(ent["c1_round"]),
            )
            for i, ent in obj["f_list"].items()
        },
    )
