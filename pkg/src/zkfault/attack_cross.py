"""CROSS fault injection, detection and single-fault secret recovery.

CROSS marks published seeds with flag 1, so the damaging corruption is the
0 -> 1 direction: a hidden subtree becomes published. Internally we keep the
LESS convention (1 = hidden), where the same corruption is a 1 -> 0 force on
the hidden-mask tree and all of the LESS tree machinery applies unchanged.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .attack_less import CampaignReport, CampaignRow, write_campaign_csv
from .cross import (
    CrossKeyPair,
    CrossPublicKey,
    CrossSignature,
    RestrictedVector,
    _assemble,
    cross_keygen,
    cross_sign_context,
    gen_ch1,
    gen_ch2,
    public_key,
    round_vectors,
)
from .errors import NoLeakedRound, ZkfaultError
from .fault import EFFECTIVE, INEFFECTIVE_CASE1, INEFFECTIVE_CASE2, NOT_INJECTED
from .seedtree import (
    _expand_cover,
    compute_seeds_to_publish,
    covered_leaves,
    faulted_reference_tree,
    leaf_range,
    published_nodes,
)
from .xof import TAG_COIN, TAG_MC, rng_from_seed, xof_expand


@dataclass(frozen=True)
class CrossFaultSpec:
    """Force the published-flag of `node` from 0 to 1 with p_success."""

    node: int
    p_success: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.p_success <= 1.0):
            raise ZkfaultError("p_success must be in [0, 1]")
        if self.node < 0:
            raise ZkfaultError("node must be nonnegative")


@dataclass(frozen=True)
class CrossFaultOutcome:
    injected: bool
    outcome_class: str
    signature: CrossSignature
    d_truth: np.ndarray  # hidden mask, oracle tests only


def cross_faulted_sign(
    keys: CrossKeyPair, msg: bytes, spec: CrossFaultSpec, rng: bytes, force_b=None
) -> CrossFaultOutcome:
    p = keys.params
    if spec.node >= p.tree_size:
        raise ZkfaultError(f"node {spec.node} outside tree of size {p.tree_size}")
    ctx = cross_sign_context(keys, msg, rng, force_b)
    f = ctx.hidden_mask
    x = compute_seeds_to_publish(f, p.l2)
    coin = int.from_bytes(xof_expand(rng, TAG_COIN, 8), "little")
    injected = spec.p_success > 0 and coin < int(spec.p_success * 2.0**64)
    if not injected:
        x2 = x
        cls = NOT_INJECTED
    else:
        x2 = faulted_reference_tree(x, spec.node)
        if x.bits[spec.node] == 0:
            cls = INEFFECTIVE_CASE1
        elif x2.bits[0] == 0:
            cls = INEFFECTIVE_CASE2
        else:
            cls = EFFECTIVE
    idxs = published_nodes(x2)
    sig = _assemble(ctx, p, tuple((i, ctx.tree.nodes[i]) for i in idxs))
    return CrossFaultOutcome(injected=injected, outcome_class=cls, signature=sig, d_truth=f)


def _hidden_mask_from_transcript(pub: CrossPublicKey, msg: bytes, sig: CrossSignature, force_b=None):
    p = pub.params
    betas = gen_ch1(p, sig.c0, sig.c1, msg, sig.salt)
    if force_b is not None:
        b = np.asarray(force_b, dtype=np.int64)
    else:
        b = gen_ch2(p, sig.c0, sig.c1, betas, sig.h, msg, sig.salt)
    return (1 - b).astype(np.int8)


def recover_secret_cross(
    pub: CrossPublicKey, msg: bytes, sig: CrossSignature, node: int, force_b=None
) -> RestrictedVector:
    """Recover e from a leaked hidden round under `node`: e = sigma(e')."""
    p = pub.params
    f = _hidden_mask_from_transcript(pub, msg, sig, force_b)
    x2 = faulted_reference_tree(compute_seeds_to_publish(f, p.l2), node)
    exp_nodes = published_nodes(x2)
    seeds = sig.wire_seeds()
    if len(exp_nodes) != len(seeds):
        raise NoLeakedRound("seed path size does not match the faulted tree")
    leaves = _expand_cover(list(zip(exp_nodes, seeds)), sig.salt, p.l2)
    lo, hi = leaf_range(node, p.l2)
    for i in range(lo, min(hi, p.t)):
        if f[i] == 1 and i in leaves and i in sig.f_list:
            _, e_prime = round_vectors(p, leaves[i])
            sigma = sig.f_list[i][1]
            e = RestrictedVector(exps=(sigma.exps + e_prime.exps) % p.z)
            if np.array_equal(e.value(p) @ pub.h.T % p.p, pub.s):
                return e
    raise NoLeakedRound(f"no recoverable hidden round under node {node}")


def detect_effective_cross(
    pub: CrossPublicKey, msg: bytes, sig: CrossSignature, node: int, force_b=None
) -> bool:
    """Accept iff sig is an effective faulted signature for `node`.

    Structural steps mirror the LESS detector; the final check recovers a
    candidate secret and validates it against the public syndrome.
    """
    p = pub.params
    f = _hidden_mask_from_transcript(pub, msg, sig, force_b)
    x = compute_seeds_to_publish(f, p.l2)
    if x.bits[node] == 0:
        return False
    x2 = faulted_reference_tree(x, node)
    if x2.bits[0] == 0:
        return False
    if len(published_nodes(x2)) != len(sig.seed_path):
        return False
    try:
        recover_secret_cross(pub, msg, sig, node, force_b)
    except ZkfaultError:
        return False
    return True


# ------------------------------------------------------------------ campaign


def _cross_full_episode(params, node, p_success, master_seed, episode):
    ent = xof_expand(master_seed, TAG_MC, params.lam_bytes, index=episode)
    keys = cross_keygen(params, ent)
    pub = public_key(keys)
    spec = CrossFaultSpec(node=node, p_success=p_success)
    rows = []
    attempt = 0
    while True:
        attempt += 1
        run = xof_expand(
            master_seed, TAG_MC + b"/attempt", 2 * params.lam_bytes,
            index=episode * 1_000_003 + attempt,
        )
        msg = run[: params.lam_bytes]
        out = cross_faulted_sign(keys, msg, spec, run[params.lam_bytes :])
        if detect_effective_cross(pub, msg, out.signature, node):
            e = recover_secret_cross(pub, msg, out.signature, node)
            exact = e == keys.e
            rows.append(CampaignRow(attempt, True, EFFECTIVE, 1, 1, True))
            return 1, [1], rows, exact
        rows.append(CampaignRow(attempt, out.injected, out.outcome_class, 0, 0, False))


def _cross_digest_episode(params, node, p_success, master_seed, episode):
    """Digest-only simulation: sample the reveal mask, classify, recover."""
    p = params
    lo, hi = leaf_range(node, p.l2)
    hi = min(hi, p.t)
    rng = rng_from_seed(master_seed, TAG_MC, episode)
    rows = []
    attempt = 0
    while True:
        attempt += 1
        published = rng.permutation(p.t)[: p.w_reveal]
        hidden = np.ones(p.t, dtype=bool)
        hidden[published] = False
        injected = p_success >= 1.0 or rng.random() < p_success
        if not injected:
            rows.append(CampaignRow(attempt, False, NOT_INJECTED, 0, 0, False))
            continue
        inside = hidden[lo:hi].any()
        outside = hidden[:lo].any() or hidden[hi : p.t].any()
        if inside and outside:
            rows.append(CampaignRow(attempt, True, EFFECTIVE, 1, 1, True))
            return 1, [1], rows
        cls = INEFFECTIVE_CASE1 if not inside else INEFFECTIVE_CASE2
        rows.append(CampaignRow(attempt, True, cls, 0, 0, False))


def run_campaign_cross(
    params,
    node: int,
    p_success: float,
    mode: str,
    trials: int,
    master_seed: bytes,
    threads: int = 1,
    csv_path: str = "",
) -> CampaignReport:
    """CROSS campaign; `trials` counts full-recovery episodes in both modes
    (each episode needs exactly one effective fault)."""
    if mode not in ("digest_only", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    if covered_leaves(node, params.l2, params.t) == 0:
        raise ValueError(f"node {node} covers no rounds")
    episodes = 0
    effective = 0
    xs_all = []
    rows_all = []
    exact = True
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        if mode == "full":
            results = ex.map(
                lambda e: _cross_full_episode(params, node, p_success, master_seed, e),
                range(trials),
            )
            for eff, xs, rows, ok in results:
                episodes += 1
                effective += eff
                xs_all.extend(xs)
                rows_all.extend(rows)
                exact = exact and ok
        else:
            results = ex.map(
                lambda e: _cross_digest_episode(params, node, p_success, master_seed, e),
                range(trials),
            )
            for eff, xs, rows in results:
                episodes += 1
                effective += eff
                xs_all.extend(xs)
                rows_all.extend(rows)
    for i, r in enumerate(rows_all):
        r.trial = i + 1
    if csv_path:
        write_campaign_csv(csv_path, rows_all)
    return CampaignReport(
        schema="zkfault/1",
        scheme="cross",
        params=params.name,
        node=node,
        p_success=p_success,
        mode=mode,
        trials=trials,
        episodes=episodes,
        effective_faults=effective,
        n_avg=effective / episodes,
        mean_x=float(np.mean(xs_all)),
        n_trial=1.0 / p_success,
        n_total=(effective / episodes) / p_success,
        all_exact=exact,
        csv_path=csv_path,
    )
