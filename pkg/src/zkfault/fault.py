"""Software fault injection on the reference tree during LESS signing.

All 1->0 data models (store skip, stuck-at-zero, downward bit flip) produce
the same corrupted tree: the node keeps/obtains value 0 and only its
ancestors see the corruption, because the bottom-up pass computes ancestors
after the node. An upward (0->1) flip is modeled too but reveals no pair; a
check skip unconditionally discloses the targeted seed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZkfaultError
from .less import LessSecretKey, LessSignature, responses, sign_context
from .seedtree import (
    ReferenceTree,
    compute_seeds_to_publish,
    faulted_reference_tree,
    mask_from_digest,
    parent,
    published_nodes,
)
from .xof import TAG_COIN, xof_expand

MODELS = ("skip_store", "stuck_at_zero", "bit_flip", "skip_check")

NOT_INJECTED = "not_injected"
INEFFECTIVE_CASE1 = "ineffective_case1"
INEFFECTIVE_CASE2 = "ineffective_case2"
EFFECTIVE = "effective"


@dataclass(frozen=True)
class FaultSpec:
    model: str
    node: int
    p_success: float = 1.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ZkfaultError(f"unknown fault model {self.model!r}")
        if not (0.0 <= self.p_success <= 1.0):
            raise ZkfaultError("p_success must be in [0, 1]")
        if self.node < 0:
            raise ZkfaultError("node must be nonnegative")


@dataclass(frozen=True)
class FaultTruth:
    """Ground-truth digest and trees, for oracle tests only (never on the wire)."""

    d: np.ndarray
    x_honest: ReferenceTree
    x_faulted: ReferenceTree


@dataclass(frozen=True)
class FaultOutcome:
    injected: bool
    outcome_class: str
    signature: LessSignature
    truth: FaultTruth


def _flip_up(x: ReferenceTree, node: int) -> ReferenceTree:
    bits = x.bits.copy()
    bits[node] ^= 1
    i = node
    while i != 0:
        p = parent(i)
        bits[p] = bits[2 * p + 1] | bits[2 * p + 2]
        i = p
    return ReferenceTree(bits=bits)


def classify(d: np.ndarray, node: int, model: str, l2: int) -> str:
    """Outcome class of a successful injection, from the digest alone."""
    x = compute_seeds_to_publish(mask_from_digest(d), l2)
    if model == "skip_check":
        # the targeted seed is published regardless; it leaks a pair iff the
        # subtree holds a nonzero round
        return EFFECTIVE if x.bits[node] == 1 else INEFFECTIVE_CASE1
    if x.bits[node] == 0:
        # nothing hidden below the node (0->1 flips reveal no pair either)
        return INEFFECTIVE_CASE1
    x2 = faulted_reference_tree(x, node)
    return EFFECTIVE if x2.bits[0] == 1 else INEFFECTIVE_CASE2


def faulted_sign(
    sk: LessSecretKey, msg: bytes, spec: FaultSpec, rng: bytes, force_digest=None
) -> FaultOutcome:
    """Sign msg while corrupting one reference-tree node with p_success.

    Only the disclosed tree nodes differ from the honest signature; salt,
    commitment and responses are untouched. The injection coin comes from a
    stream separate from the signing entropy, so p_success = 0 reproduces
    honest signing bit-exactly.
    """
    ctx = sign_context(sk, msg, rng, force_digest)
    coin = int.from_bytes(xof_expand(rng, TAG_COIN, 8), "little")
    injected = spec.p_success > 0 and coin < int(spec.p_success * 2.0**64)
    return faulted_sign_from_context(sk, ctx, spec, injected)


def faulted_sign_from_context(sk, ctx, spec: FaultSpec, injected: bool = True) -> FaultOutcome:
    """Assemble the (possibly corrupted) signature from a finished context.

    Lets sweeps reuse one set of round commitments across many digests and
    fault locations.
    """
    if spec.node >= 4 * sk.params.l - 1:
        raise ZkfaultError(f"node {spec.node} outside tree of size {4 * sk.params.l - 1}")
    x = ctx.reference_tree

    if not injected:
        x2 = x
        cls = NOT_INJECTED
        idxs = published_nodes(x)
    elif spec.model == "skip_check":
        x2 = x
        cls = classify(ctx.d, spec.node, spec.model, sk.params.l2)
        idxs = sorted(set(published_nodes(x)) | {spec.node})
    else:
        if spec.model == "bit_flip":
            x2 = _flip_up(x, spec.node)
        else:  # skip_store / stuck_at_zero: value forced to 0
            x2 = faulted_reference_tree(x, spec.node)
        cls = classify(ctx.d, spec.node, spec.model, sk.params.l2)
        idxs = published_nodes(x2)

    sig = LessSignature(
        salt=ctx.salt,
        cmt=ctx.cmt,
        tree_nodes=tuple((i, ctx.tree.nodes[i]) for i in idxs),
        rsp=responses(sk, ctx),
    )
    return FaultOutcome(
        injected=injected,
        outcome_class=cls,
        signature=sig,
        truth=FaultTruth(d=ctx.d, x_honest=x, x_faulted=x2),
    )
