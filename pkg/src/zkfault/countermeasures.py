"""Both signing countermeasures plus equivalence, resistance and cost tooling.

The flat responder drops the seed tree entirely (bigger signatures). The
single-pass responder walks each leaf's root path exactly once and either
emits the round's monomial response (path all ones) or publishes the highest
zero ancestor and skips its whole subtree, so one corrupted tree node can
never yield both a seed and a response for the same round.
"""

import time
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from .less import LessParams, LessSignature, keygen, responses, sign, sign_context
from .monomial import mono_mul_partial, mono_transpose
from .seedtree import (
    ReferenceTree,
    compute_seeds_to_publish,
    faulted_reference_tree,
    leaf_range,
    mask_from_digest,
    parent,
    published_nodes,
)
from .xof import TAG_MC, xof_expand


@dataclass
class CostCounters:
    n_check: int = 0
    n_mono: int = 0
    n_seed: int = 0


# ------------------------------------------------------- flat countermeasure


def flat_gen_rsp(d: np.ndarray, secrets, q_bars, leaf_seeds) -> list:
    """Tree-less responder: per round either the leaf seed or the response.

    Each digest entry is inspected exactly once; entries are tagged tuples
    ("seed", bytes) / ("mono", PartialMonomialMatrix).
    """
    out = []
    for i in range(len(d)):
        j = int(d[i])
        if j == 0:
            out.append(("seed", leaf_seeds[i]))
        else:
            out.append(("mono", mono_mul_partial(mono_transpose(secrets[j - 1]), q_bars[i])))
    return out


def _mono_bits(params: LessParams) -> int:
    n_bits = (params.n - 1).bit_length()
    c_bits = (params.q - 2).bit_length() if params.q > 2 else 1
    return params.k * (n_bits + c_bits)


def flat_signature_size_bits(params: LessParams) -> int:
    """|cmt| + w*k*(ceil(log n) + ceil(log(q-1))) + (t-w)*lambda bits."""
    return 2 * params.lam + params.w * _mono_bits(params) + (params.t - params.w) * params.lam


def tree_signature_size_bits(params: LessParams, n_disclosed: int) -> int:
    """Same accounting with the seed-tree disclosure instead of t-w seeds."""
    return 2 * params.lam + params.w * _mono_bits(params) + n_disclosed * params.lam


# ------------------------------------------------ single-pass countermeasure


def scan_paths(x: ReferenceTree, l2: int, t: int, counters: CostCounters = None, skip_check_node: int = -1):
    """Left-to-right single-pass traversal of the reference tree.

    Returns (response rounds, published node indices in leaf-scan order).
    The scan continues past the first t leaves so padding-only zero subtrees
    are published exactly as the original disclosure does. skip_check_node
    models a skipped zero-test at one node (the node then never registers as
    a publishable zero).
    """
    rsp_rounds = []
    seed_nodes = []
    bits = x.bits
    depth = l2.bit_length() - 1  # checks per root path, root excluded
    i = 0
    while i < l2:
        c = l2 - 1 + i
        h = 0
        h_pub = 0
        c_pub = -1
        while c != 0:
            if counters is not None:
                counters.n_check += 1
            if c != skip_check_node and bits[c] == 0:
                c_pub = c
                h_pub = h + 1
            c = parent(c)
            h += 1
        if h_pub == 0:
            if i < t:
                rsp_rounds.append(i)
                if counters is not None:
                    counters.n_mono += 1
            i += 1
        else:
            seed_nodes.append(c_pub)
            if counters is not None:
                counters.n_seed += 1
            i += 1 << (h_pub - 1)
    return rsp_rounds, seed_nodes


def gen_rsp_update(d: np.ndarray, secrets, q_bars, seed_tree):
    """Single-pass (rsp, TreeNode) assembly; TreeNode is canonicalized to
    ascending node index so the verifier contract is unchanged."""
    x = compute_seeds_to_publish(mask_from_digest(d), seed_tree.l2)
    rsp_rounds, seed_nodes = scan_paths(x, seed_tree.l2, len(d))
    rsp = tuple(
        mono_mul_partial(mono_transpose(secrets[int(d[i]) - 1]), q_bars[i]) for i in rsp_rounds
    )
    nodes = tuple((i, seed_tree.nodes[i]) for i in sorted(seed_nodes))
    return rsp, nodes


def sign_with_countermeasure(sk, msg: bytes, entropy: bytes, force_digest=None) -> LessSignature:
    """Full signing flow with the single-pass responder; output equals sign()."""
    ctx = sign_context(sk, msg, entropy, force_digest)
    rsp, nodes = gen_rsp_update(ctx.d, sk.expanded, ctx.q_bars, ctx.tree)
    return LessSignature(salt=ctx.salt, cmt=ctx.cmt, tree_nodes=nodes, rsp=rsp)


# ------------------------------------------------------------- cost tracking


def cost_report(pipeline: str, d: np.ndarray, l2: int) -> CostCounters:
    """Instrumented condition/seed/mono tallies for one disclosure run."""
    x = compute_seeds_to_publish(mask_from_digest(d), l2)
    c = CostCounters()
    if pipeline == "original":
        bits = x.bits
        for i in range(len(bits)):
            c.n_check += 2  # x[i] and x[Parent(i)]
            if bits[i] == 0 and bits[parent(i)] == 1:
                c.n_seed += 1
        for i in range(len(d)):
            c.n_check += 1  # d[i] != 0
            if d[i] != 0:
                c.n_mono += 1
    elif pipeline == "countermeasure":
        scan_paths(x, l2, len(d), counters=c)
    else:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    return c


def original_cost_form(l2: int, t: int, r: int, w: int) -> CostCounters:
    """(2N + t) checks, r seed stores, w monomial emissions (N = 2*l2 - 1)."""
    return CostCounters(n_check=2 * (2 * l2 - 1) + t, n_mono=w, n_seed=r)


def countermeasure_cost_form(l2: int, r: int, w: int) -> CostCounters:
    """(r + w) * log2(N) checks with the same seed/mono work."""
    return CostCounters(n_check=(r + w) * (l2.bit_length() - 1), n_mono=w, n_seed=r)


# -------------------------------------------------------------- resistance


def _all_fixed_weight_digests(t: int, w: int, s: int):
    for support in combinations(range(t), w):
        for values in product(range(1, s), repeat=w):
            d = np.zeros(t, dtype=np.int64)
            d[list(support)] = values
            yield d


def _covered_rounds(seed_nodes, l2: int, t: int) -> set:
    out = set()
    for node in seed_nodes:
        lo, hi = leaf_range(node, l2)
        out.update(range(lo, min(hi, t)))
    return out


def _fault_tree(x: ReferenceTree, node: int, model: str) -> ReferenceTree:
    if model == "bit_flip" and x.bits[node] == 0:
        bits = x.bits.copy()
        bits[node] = 1
        i = node
        while i != 0:
            p = parent(i)
            bits[p] = bits[2 * p + 1] | bits[2 * p + 2]
            i = p
        return ReferenceTree(bits=bits)
    return faulted_reference_tree(x, node)


@dataclass
class ProbeReport:
    params: str
    digests: int = 0
    cases: int = 0
    cm_violations: list = field(default_factory=list)
    original_violations: int = 0

    @property
    def ok(self) -> bool:
        return not self.cm_violations and self.original_violations > 0


def resistance_probe(params: LessParams, models=("skip_store", "stuck_at_zero", "bit_flip", "skip_check")) -> ProbeReport:
    """Exhaustive single-fault sweep at small l.

    A violation is a round with a nonzero digest entry whose seed is covered
    by the disclosed nodes while its monomial response is also emitted. The
    original pipeline is swept as a positive control and must violate.
    """
    if params.l > 8:
        raise ValueError("probe is exhaustive; use l <= 8")
    l2, t = params.l2, params.t
    report = ProbeReport(params=params.name)
    for d in _all_fixed_weight_digests(t, params.w, params.s):
        report.digests += 1
        x = compute_seeds_to_publish(mask_from_digest(d), l2)
        nz = set(int(i) for i in np.nonzero(d)[0])
        for node in range(2 * l2 - 1):
            for model in models:
                report.cases += 1
                if model == "skip_check":
                    rsp_rounds, seed_nodes = scan_paths(x, l2, t, skip_check_node=node)
                    orig_nodes = sorted(set(published_nodes(x)) | {node})
                else:
                    x2 = _fault_tree(x, node, model)
                    rsp_rounds, seed_nodes = scan_paths(x2, l2, t)
                    orig_nodes = published_nodes(x2)
                covered = _covered_rounds(seed_nodes, l2, t)
                bad = [j for j in rsp_rounds if j in nz and j in covered]
                if bad:
                    report.cm_violations.append((tuple(d), node, model, tuple(bad)))
                # original pipeline always answers every nonzero round
                orig_covered = _covered_rounds(orig_nodes, l2, t)
                report.original_violations += sum(1 for j in nz if j in orig_covered)
    return report


# ------------------------------------------------------------------- bench


def bench_countermeasure(params: LessParams, iters: int, master_seed: bytes) -> dict:
    """Interleaved wall-clock comparison of both signing pipelines."""
    ent = xof_expand(master_seed, TAG_MC, 2 * params.lam_bytes)
    sk, _ = keygen(params, ent[: params.lam_bytes], ent[params.lam_bytes :])
    t_orig = []
    t_cm = []
    for it in range(iters):
        run = xof_expand(master_seed, TAG_MC + b"/bench", 2 * params.lam_bytes, index=it)
        msg = run[: params.lam_bytes]
        ent_i = run[params.lam_bytes :]
        start = time.perf_counter_ns()
        sig_a = sign(sk, msg, ent_i)
        t_orig.append(time.perf_counter_ns() - start)
        start = time.perf_counter_ns()
        sig_b = sign_with_countermeasure(sk, msg, ent_i)
        t_cm.append(time.perf_counter_ns() - start)
        if it == 0 and (sig_a.tree_nodes != sig_b.tree_nodes or sig_a.rsp != sig_b.rsp):
            raise AssertionError("countermeasure output diverged from the original pipeline")
    mean_orig = float(np.mean(t_orig))
    mean_cm = float(np.mean(t_cm))
    return {
        "schema": "zkfault/1",
        "params": params.name,
        "iters": iters,
        "unit": "ns",
        "mean_cycles_original": mean_orig,
        "mean_cycles_cm": mean_cm,
        "ratio": mean_cm / mean_orig,
    }
