"""LESS core: parameter registry, key generation, signing, verification.

Sizes follow the published parameter table; two scaled families (small /
tiny) share the code paths and keep exhaustive tests fast.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import MalformedSignature, ZkfaultError
from .gf import (
    RrefMatrix,
    check_prime_modulus,
    lex_min_col,
    lex_sort,
    mat_bytes,
    rref_with_pivots,
)
from .monomial import (
    MonomialMatrix,
    PartialMonomialMatrix,
    apply_right,
    mono_inverse,
    mono_mul_partial,
    mono_transpose,
    select_columns,
)
from .seedtree import (
    SeedTree,
    _expand_cover,
    assign_wire_seeds,
    build_seed_tree,
    compute_seeds_to_publish,
    leaf_count,
    mask_from_digest,
    seed_tree_paths,
)
from .xof import (
    TAG_ENTROPY,
    TAG_MSEED,
    hash_commit,
    sample_fixed_weight_digest,
    sample_monomial,
    sample_rref_generator,
    xof_expand,
)
@dataclass(frozen=True)
class LessParams:
    name: str
    n: int
    k: int
    q: int
    l: int
    t: int
    w: int
    s: int
    lam: int = 128

    def __post_init__(self):
        check_prime_modulus(self.q)
        if not (0 < self.k < self.n):
            raise ValueError("need 0 < k < n")
        if not (1 <= self.w <= self.t):
            raise ValueError("need 1 <= w <= t")
        if self.s < 2:
            raise ValueError("need s >= 2")
        if 2 * self.l != leaf_count(self.t):
            raise ValueError(f"l={self.l} inconsistent with t={self.t}")

    @property
    def l2(self) -> int:
        return 2 * self.l

    @property
    def tree_size(self) -> int:
        return 4 * self.l - 1

    @property
    def lam_bytes(self) -> int:
        return self.lam // 8

    def to_json(self) -> dict:
        return {
            "name": self.name, "n": self.n, "k": self.k, "q": self.q,
            "l": self.l, "t": self.t, "w": self.w, "s": self.s, "lambda": self.lam,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LessParams":
        return cls(
            name=obj["name"], n=obj["n"], k=obj["k"], q=obj["q"], l=obj["l"],
            t=obj["t"], w=obj["w"], s=obj["s"], lam=obj.get("lambda", 128),
        )


PARAM_SETS = {
    p.name: p
    for p in [
        LessParams("less-1b", 252, 126, 127, 128, 247, 30, 2, 128),
        LessParams("less-1i", 252, 126, 127, 128, 244, 20, 4, 128),
        LessParams("less-1s", 252, 126, 127, 128, 198, 17, 8, 128),
        LessParams("less-3b", 400, 200, 127, 512, 759, 33, 2, 192),
        LessParams("less-3s", 400, 200, 127, 512, 895, 26, 3, 192),
        LessParams("less-5b", 548, 274, 127, 1024, 1352, 40, 2, 256),
        LessParams("less-5s", 548, 274, 127, 512, 907, 37, 3, 256),
        # scaled families for fast exhaustive tests
        LessParams("less-small", 10, 5, 7, 8, 16, 4, 2, 128),
        LessParams("less-small-s4", 10, 5, 7, 8, 16, 4, 4, 128),
        LessParams("less-tiny", 10, 5, 7, 4, 8, 4, 2, 128),
        LessParams("less-tiny-s3", 10, 5, 7, 4, 8, 4, 3, 128),
    ]
}

FULL_SIZE_SETS = ("less-1b", "less-1i", "less-1s", "less-3b", "less-3s", "less-5b", "less-5s")


@dataclass(frozen=True)
class LessSecretKey:
    params: LessParams
    mseed_master: bytes
    gseed: bytes
    expanded: tuple  # Q_1..Q_{s-1}
    g0: RrefMatrix


@dataclass(frozen=True)
class LessPublicKey:
    params: LessParams
    gseed: bytes
    g0: RrefMatrix
    mats: tuple  # G_1..G_{s-1}


@dataclass(frozen=True)
class LessSignature:
    """Signature tuple (salt, cmt, TreeNode, rsp).

    tree_nodes holds (node index, seed) pairs in memory; the wire format
    transmits the seeds only and indices are recomputed from the digest on
    load, so a parsed signature is honest-shaped by construction.
    """

    salt: bytes
    cmt: bytes
    tree_nodes: tuple  # ((node_index, seed), ...) ascending node index
    rsp: tuple  # PartialMonomialMatrix per nonzero digest round, round order

    def wire_seeds(self) -> tuple:
        return tuple(seed for _, seed in self.tree_nodes)


def expand_secret_monomials(params: LessParams, mseed_master: bytes) -> tuple:
    lam = params.lam_bytes
    blob = xof_expand(mseed_master, TAG_MSEED, (params.s - 1) * lam)
    return tuple(
        sample_monomial(blob[i * lam : (i + 1) * lam], params.n, params.q)
        for i in range(params.s - 1)
    )


def keygen(params: LessParams, master_entropy: bytes, gseed: bytes):
    """Deterministic keypair from (MSEED, gseed)."""
    g0 = sample_rref_generator(gseed, params.k, params.n, params.q)
    qs = expand_secret_monomials(params, master_entropy)
    mats = tuple(
        rref_with_pivots(apply_right(g0.a, mono_transpose(mono_inverse(qi))), params.q)
        for qi in qs
    )
    sk = LessSecretKey(params, master_entropy, gseed, qs, g0)
    pk = LessPublicKey(params, gseed, g0, mats)
    return sk, pk


def prepare_digest_input(g0: RrefMatrix, q_tilde: MonomialMatrix):
    """(Q_bar, V_bar) for one round.

    J is the pivot set of RREF(G0 Qt^T); Q_bar selects those columns of Qt^T
    and V_bar is the lex-normalized, lex-sorted non-pivot block.
    """
    q = g0.q
    qt = mono_transpose(q_tilde)
    r = rref_with_pivots(apply_right(g0.a, qt), q)
    q_bar = select_columns(qt, r.pivot_cols)
    v_bar = lex_sort(lex_min_col(r.a[:, r.nonpivot_cols], q))
    return q_bar, v_bar


def _commitment(v_bars, msg: bytes, salt: bytes, lam_bytes: int) -> bytes:
    parts = [mat_bytes(v) for v in v_bars]
    parts += [msg, len(msg).to_bytes(8, "little"), salt]
    return hash_commit(parts, 2 * lam_bytes)


@dataclass(frozen=True)
class SignContext:
    """Everything the signer holds right before disclosure assembly."""

    salt: bytes
    tree: SeedTree
    q_tildes: tuple
    q_bars: tuple
    v_bars: tuple
    cmt: bytes
    d: np.ndarray
    f: np.ndarray

    @property
    def reference_tree(self):
        return compute_seeds_to_publish(self.f, self.tree.l2)


def sign_context(sk: LessSecretKey, msg: bytes, entropy: bytes, force_digest=None) -> SignContext:
    """Run the per-round commitments and fix the digest (rounds are
    independent; sequential evaluation keeps the output canonical)."""
    p = sk.params
    blob = xof_expand(entropy, TAG_ENTROPY, 2 * p.lam_bytes)
    emseed, salt = blob[: p.lam_bytes], blob[p.lam_bytes :]
    tree = build_seed_tree(emseed, salt, p.t)
    q_tildes, q_bars, v_bars = [], [], []
    for i in range(p.t):
        qt = sample_monomial(tree.leaf(i), p.n, p.q)
        qb, vb = prepare_digest_input(sk.g0, qt)
        q_tildes.append(qt)
        q_bars.append(qb)
        v_bars.append(vb)
    cmt = _commitment(v_bars, msg, salt, p.lam_bytes)
    if force_digest is not None:
        d = np.asarray(force_digest, dtype=np.int64)
    else:
        d = sample_fixed_weight_digest(cmt, p.t, p.w, p.s)
    return SignContext(
        salt=salt, tree=tree, q_tildes=tuple(q_tildes), q_bars=tuple(q_bars),
        v_bars=tuple(v_bars), cmt=cmt, d=d, f=mask_from_digest(d),
    )


def responses(sk: LessSecretKey, ctx: SignContext) -> tuple:
    out = []
    for i in range(sk.params.t):
        j = int(ctx.d[i])
        if j != 0:
            qj_t = mono_transpose(sk.expanded[j - 1])
            out.append(mono_mul_partial(qj_t, ctx.q_bars[i]))
    return tuple(out)


def sign(sk: LessSecretKey, msg: bytes, entropy: bytes, force_digest=None) -> LessSignature:
    ctx = sign_context(sk, msg, entropy, force_digest)
    nodes = tuple(seed_tree_paths(ctx.tree, ctx.f))
    return LessSignature(salt=ctx.salt, cmt=ctx.cmt, tree_nodes=nodes, rsp=responses(sk, ctx))


def response_v_bar(g_j: RrefMatrix, q_star: PartialMonomialMatrix) -> np.ndarray:
    """Verifier-side V_bar from a response: RREF(G_j Q* | G_j[*, J]) with J
    the zero rows of Q*, then lex-normalize/sort the non-pivot block."""
    q = g_j.q
    zero_rows = q_star.zero_rows()
    g_hat = np.hstack([apply_right(g_j.a, q_star), g_j.a[:, zero_rows]])
    r = rref_with_pivots(g_hat, q)
    return lex_sort(lex_min_col(r.a[:, r.nonpivot_cols], q))


def verify(pk: LessPublicKey, msg: bytes, sig: LessSignature, force_digest=None) -> bool:
    """Appendix-style verification.

    Leaf seeds are regenerated from the carried (index, seed) pairs; the
    disclosure is accepted as long as it covers every zero-digest round, so
    an effective fault (which only over-discloses) does not invalidate the
    signature. Every round's V_bar feeds the recomputed commitment.
    """
    p = pk.params
    try:
        if len(sig.salt) != p.lam_bytes or len(sig.cmt) != 2 * p.lam_bytes:
            raise MalformedSignature("bad salt/cmt length")
        if len(sig.rsp) != p.w:
            raise MalformedSignature(f"expected {p.w} responses")
        prev = -1
        for idx, seed in sig.tree_nodes:
            if not (0 <= idx < p.tree_size) or idx <= prev:
                raise MalformedSignature("disclosed node indices not ascending")
            if len(seed) != p.lam_bytes:
                raise MalformedSignature("bad seed length")
            prev = idx
        if force_digest is not None:
            d = np.asarray(force_digest, dtype=np.int64)
        else:
            d = sample_fixed_weight_digest(sig.cmt, p.t, p.w, p.s)
        f = mask_from_digest(d)
        leaves = _expand_cover(sig.tree_nodes, sig.salt, p.l2)
        v_bars = []
        k_ctr = 0
        for i in range(p.t):
            j = int(d[i])
            if j == 0:
                if i not in leaves:
                    raise MalformedSignature(f"round {i} seed not disclosed")
                qt = sample_monomial(leaves[i], p.n, p.q)
                v_bars.append(prepare_digest_input(pk.g0, qt)[1])
            else:
                q_star = sig.rsp[k_ctr]
                k_ctr += 1
                if q_star.n != p.n or q_star.k != p.k or q_star.q != p.q:
                    raise MalformedSignature("response has wrong shape")
                v_bars.append(response_v_bar(pk.mats[j - 1], q_star))
        cmt2 = _commitment(v_bars, msg, sig.salt, p.lam_bytes)
        return cmt2 == sig.cmt
    except (ZkfaultError, KeyError, IndexError, ValueError):
        return False


# ------------------------------------------------------------- serialization

SCHEMA = "zkfault/1"


def sk_to_json(sk: LessSecretKey) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "less-sk",
        "param": sk.params.to_json(),
        "mseed": sk.mseed_master.hex(),
        "gseed": sk.gseed.hex(),
    }


def sk_from_json(obj: dict) -> LessSecretKey:
    params = LessParams.from_json(obj["param"])
    sk, _ = keygen(params, bytes.fromhex(obj["mseed"]), bytes.fromhex(obj["gseed"]))
    return sk


def _rref_to_json(r: RrefMatrix) -> dict:
    return {"data": r.a.tolist(), "pivot_cols": list(r.pivot_cols)}


def _rref_from_json(obj: dict, q: int) -> RrefMatrix:
    return RrefMatrix(
        a=np.array(obj["data"], dtype=np.int64), q=q, pivot_cols=tuple(obj["pivot_cols"])
    )


def pk_to_json(pk: LessPublicKey) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "less-pk",
        "param": pk.params.to_json(),
        "gseed": pk.gseed.hex(),
        "g0": _rref_to_json(pk.g0),
        "mats": [_rref_to_json(m) for m in pk.mats],
    }


def pk_from_json(obj: dict) -> LessPublicKey:
    params = LessParams.from_json(obj["param"])
    return LessPublicKey(
        params=params,
        gseed=bytes.fromhex(obj["gseed"]),
        g0=_rref_from_json(obj["g0"], params.q),
        mats=tuple(_rref_from_json(m, params.q) for m in obj["mats"]),
    )


def sig_to_json(sig: LessSignature) -> dict:
    return {
        "schema": SCHEMA,
        "kind": "less-sig",
        "salt": sig.salt.hex(),
        "cmt": sig.cmt.hex(),
        "tree_nodes": [seed.hex() for seed in sig.wire_seeds()],
        "rsp": [r.to_json() for r in sig.rsp],
    }


def sig_from_json(obj: dict, params: LessParams) -> LessSignature:
    """Parse a wire signature; node indices are recomputed from the digest.

    Raises PathMismatch when the seed count does not fit the honest
    disclosure implied by the digest (e.g. a stored faulted signature).
    """
    cmt = bytes.fromhex(obj["cmt"])
    seeds = tuple(bytes.fromhex(s) for s in obj["tree_nodes"])
    d = sample_fixed_weight_digest(cmt, params.t, params.w, params.s)
    x = compute_seeds_to_publish(mask_from_digest(d), params.l2)
    pairs = tuple(assign_wire_seeds(seeds, x))
    return LessSignature(
        salt=bytes.fromhex(obj["salt"]),
        cmt=cmt,
        tree_nodes=pairs,
        rsp=tuple(PartialMonomialMatrix.from_json(r, params.q) for r in obj["rsp"]),
    )


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)
