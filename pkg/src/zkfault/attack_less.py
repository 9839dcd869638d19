"""Attacker side: effective-fault detection, secret recovery, campaigns.

The attacker sees only (message, signature, public key) and the known fault
location; ground-truth fields of FaultOutcome are never read here.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InconsistentPair, AmbiguousMatch, NoMatch
from .fault import FaultSpec, faulted_sign
from .gf import fq_inv_vec, mat_inv, mat_mul, rref_with_pivots, RrefMatrix
from .less import (
    LessParams,
    LessPublicKey,
    LessSignature,
    _commitment,
    keygen,
    prepare_digest_input,
    response_v_bar,
)
from .monomial import MonomialMatrix, PartialMonomialMatrix, apply_right, mono_inverse, mono_transpose
from .seedtree import (
    _expand_cover,
    compute_seeds_to_publish,
    covered_leaves,
    faulted_reference_tree,
    leaf_range,
    mask_from_digest,
    published_nodes,
    seed_tree_update,
)
from .xof import TAG_MC, rng_from_seed, sample_fixed_weight_digest, sample_monomial, xof_expand


@dataclass
class AttackState:
    params: LessParams
    recovered: dict = field(default_factory=dict)  # secret index -> Q_j^T
    faults_used: int = 0

    @property
    def complete(self) -> bool:
        return len(self.recovered) == self.params.s - 1


@dataclass(frozen=True)
class RecoveredPair:
    round: int
    q_tilde: MonomialMatrix
    response: PartialMonomialMatrix
    d_value: int


@dataclass(frozen=True)
class PartialSecret:
    """k recovered columns of Q = (pi, v): pi(rows[i]) = cols[i], v[rows[i]] = coeffs[i]."""

    n: int
    q: int
    rows: np.ndarray
    cols: np.ndarray
    coeffs: np.ndarray


def detect_effective(
    sig: LessSignature, pk: LessPublicKey, msg: bytes, node: int, force_digest=None
) -> bool:
    """Decide whether sig is an effective faulted signature for `node`.

    Step-1 rejects when the honest node value is 0, Step-2 when the forced
    corruption would zero the root, Step-3 compares the disclosed-node count
    against the faulted tree and then re-runs verification under the faulted
    disclosure (seeds are trusted only if the recomputed commitment matches).
    """
    p = pk.params
    if force_digest is not None:
        d = np.asarray(force_digest, dtype=np.int64)
    else:
        d = sample_fixed_weight_digest(sig.cmt, p.t, p.w, p.s)
    x = compute_seeds_to_publish(mask_from_digest(d), p.l2)
    if x.bits[node] == 0:
        return False
    x2 = faulted_reference_tree(x, node)
    if x2.bits[0] == 0:
        return False
    exp_nodes = published_nodes(x2)
    seeds = sig.wire_seeds()
    if len(exp_nodes) != len(seeds):
        return False
    leaves = _expand_cover(list(zip(exp_nodes, seeds)), sig.salt, p.l2)
    leaves = {i: s for i, s in leaves.items() if i < p.t}
    if len(sig.rsp) != p.w:
        return False
    v_bars = []
    k_ctr = 0
    for i in range(p.t):
        j = int(d[i])
        if i in leaves:
            qt = sample_monomial(leaves[i], p.n, p.q)
            v_bars.append(prepare_digest_input(pk.g0, qt)[1])
            if j != 0:
                k_ctr += 1
        else:
            if j == 0:
                return False
            v_bars.append(response_v_bar(pk.mats[j - 1], sig.rsp[k_ctr]))
            k_ctr += 1
    return _commitment(v_bars, msg, sig.salt, p.lam_bytes) == sig.cmt


def recover_columns_from_pair(pair: RecoveredPair, g0: RrefMatrix) -> PartialSecret:
    """Lemma-1 column extraction from (Q_tilde, Q^T Q_bar)."""
    q = g0.q
    q_bar, _ = prepare_digest_input(g0, pair.q_tilde)
    resp = pair.response
    if resp.n != q_bar.n or resp.k != q_bar.k:
        raise InconsistentPair("response shape does not match the round")
    rows = resp.perm.copy()
    if len(np.unique(rows)) != len(rows):
        raise InconsistentPair("response columns do not map injectively")
    cols = q_bar.perm.copy()
    coeffs = resp.coeffs * fq_inv_vec(q_bar.coeffs, q) % q
    return PartialSecret(n=resp.n, q=q, rows=rows, cols=cols, coeffs=coeffs)


def complete_secret(
    partial: PartialSecret, g0: RrefMatrix, g_hat: RrefMatrix
) -> MonomialMatrix:
    """Extend k known columns of Q to the full secret using the public key.

    Recovers the change-of-basis S from the information-set columns, then
    matches every remaining public column g_j against the candidate columns
    S^-1 ghat_i over scalars a in F_q*. Returns Q^T, verified against g_hat.
    """
    q, n = partial.q, partial.n
    g_star = g_hat.a[:, partial.rows]
    g_prime = g0.a[:, partial.cols] * fq_inv_vec(partial.coeffs, q) % q
    s_mat = mat_mul(g_star, mat_inv(g_prime, q), q)
    s_inv = mat_inv(s_mat, q)

    known_rows = set(int(r) for r in partial.rows)
    known_cols = set(int(c) for c in partial.cols)
    rest_rows = np.array([i for i in range(n) if i not in known_rows], dtype=np.int64)
    rest_cols = np.array([j for j in range(n) if j not in known_cols], dtype=np.int64)

    perm = np.empty(n, dtype=np.int64)
    coeffs = np.empty(n, dtype=np.int64)
    perm[partial.rows] = partial.cols
    coeffs[partial.rows] = partial.coeffs

    cand = mat_mul(s_inv, g_hat.a[:, rest_rows], q)  # k x m candidate columns
    nz = cand != 0
    has = nz.any(axis=0)
    first = np.argmax(nz, axis=0)
    used = np.zeros(len(rest_rows), dtype=bool)
    for j in rest_cols:
        gj = g0.a[:, j]
        a_cand = np.zeros(len(rest_rows), dtype=np.int64)
        a_cand[has] = gj[first[has]] * fq_inv_vec(cand[first[has], has], q) % q
        ok = (a_cand != 0) & has & ~used
        ok &= np.all(cand * a_cand % q == gj[:, None], axis=0)
        hits = np.nonzero(ok)[0]
        if len(hits) > 1:
            raise AmbiguousMatch(f"column {j} matches {len(hits)} candidates")
        if len(hits) == 0:
            raise NoMatch(f"column {j} matches no candidate")
        i = hits[0]
        used[i] = True
        perm[rest_rows[i]] = j
        coeffs[rest_rows[i]] = a_cand[i]

    q_mat = MonomialMatrix(q=q, perm=perm, coeffs=coeffs)
    q_t = mono_transpose(q_mat)
    check = rref_with_pivots(apply_right(g0.a, mono_inverse(q_t)), q)
    if check != g_hat:
        raise NoMatch("completed secret fails the public-key relation")
    return q_t


def recover_secret_matrices(
    sig: LessSignature,
    pk: LessPublicKey,
    msg: bytes,
    node: int,
    already=frozenset(),
    force_digest=None,
) -> dict:
    """All newly recoverable secrets (index -> Q_j^T) from one effective fault."""
    p = pk.params
    if force_digest is not None:
        d = np.asarray(force_digest, dtype=np.int64)
    else:
        d = sample_fixed_weight_digest(sig.cmt, p.t, p.w, p.s)
    leaves = seed_tree_update(sig.wire_seeds(), sig.salt, d, node, p.l2)
    rsp_index = np.cumsum(d != 0) - 1
    lo, hi = leaf_range(node, p.l2)
    out = {}
    for r in range(lo, min(hi, p.t)):
        j = int(d[r])
        if j == 0 or j in already or j in out:
            continue
        pair = RecoveredPair(
            round=r,
            q_tilde=sample_monomial(leaves[r], p.n, p.q),
            response=sig.rsp[int(rsp_index[r])],
            d_value=j,
        )
        partial = recover_columns_from_pair(pair, pk.g0)
        out[j] = complete_secret(partial, pk.g0, pk.mats[j - 1])
    return out


# ------------------------------------------------------------------ campaigns


@dataclass
class CampaignRow:
    trial: int
    injected: bool
    outcome_class: str
    n_recovered: int
    cumulative: int
    done: bool


@dataclass
class CampaignReport:
    schema: str
    scheme: str
    params: str
    node: int
    p_success: float
    mode: str
    trials: int
    episodes: int
    effective_faults: int
    n_avg: float
    mean_x: float
    n_trial: float
    n_total: float
    all_exact: bool
    csv_path: str = ""

    def to_json(self) -> dict:
        return {
            "schema": self.schema,
            "scheme": self.scheme,
            "params": self.params,
            "node": self.node,
            "p_success": self.p_success,
            "mode": self.mode,
            "trials": self.trials,
            "episodes": self.episodes,
            "effective_faults": self.effective_faults,
            "n_avg": self.n_avg,
            "mean_x": self.mean_x,
            "n_trial": self.n_trial,
            "n_total": self.n_total,
            "all_exact": self.all_exact,
            "per_trial_csv_path": self.csv_path,
        }


def write_campaign_csv(path: str, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial", "injected", "class", "n_recovered_this_trial", "cumulative_secrets", "done"])
        for r in rows:
            w.writerow(
                [r.trial, int(r.injected), r.outcome_class, r.n_recovered, r.cumulative, int(r.done)]
            )


def _digest_only_episode(params: LessParams, node: int, p_success: float, master_seed: bytes, episode: int):
    """One full-recovery episode simulating only digest + tree logic."""
    from .backend import digest_stats
    from .fault import EFFECTIVE, INEFFECTIVE_CASE1, INEFFECTIVE_CASE2, NOT_INJECTED

    p = params
    lo, hi = leaf_range(node, p.l2)
    hi = min(hi, p.t)
    rng = rng_from_seed(master_seed, TAG_MC, episode)
    have = 0
    target = (1 << p.s) - 2  # bits 1..s-1
    rows = []
    xs = []
    attempts = 0
    effective = 0
    batch = 16
    while True:
        keys = rng.random((batch, p.t))
        supports = np.argpartition(keys, p.w - 1, axis=1)[:, : p.w]
        values = rng.integers(1, p.s, size=(batch, p.w), dtype=np.int64)
        coins = rng.random(batch) if p_success < 1.0 else None
        eff, mask = digest_stats(supports, values, lo, hi)
        for b in range(batch):
            attempts += 1
            injected = coins is None or coins[b] < p_success
            if not injected:
                rows.append(CampaignRow(attempts, False, NOT_INJECTED, 0, bin(have).count("1"), False))
                continue
            if not eff[b]:
                # distinguish case1 (nothing under the node) from case2
                cls = INEFFECTIVE_CASE1 if mask[b] == 0 else INEFFECTIVE_CASE2
                rows.append(CampaignRow(attempts, True, cls, 0, bin(have).count("1"), False))
                continue
            effective += 1
            xs.append(bin(int(mask[b])).count("1"))
            new = int(mask[b]) & ~have
            have |= int(mask[b])
            done = have == target
            rows.append(
                CampaignRow(attempts, True, EFFECTIVE, bin(new).count("1"), bin(have).count("1"), done)
            )
            if done:
                return effective, xs, rows
        batch = min(2 * batch, 4096)


def _full_episode(params: LessParams, node: int, p_success: float, master_seed: bytes, episode: int, fault_model: str):
    """One real keygen/sign/fault/detect/recover episode."""
    from .fault import EFFECTIVE

    p = params
    ent = xof_expand(master_seed, TAG_MC, 2 * p.lam_bytes, index=episode)
    sk, pk = keygen(p, ent[: p.lam_bytes], ent[p.lam_bytes :])
    state = AttackState(params=p)
    spec = FaultSpec(model=fault_model, node=node, p_success=p_success)
    lo, hi = leaf_range(node, p.l2)
    hi = min(hi, p.t)
    rows = []
    xs = []
    attempt = 0
    exact = True
    while not state.complete:
        attempt += 1
        run = xof_expand(master_seed, TAG_MC + b"/attempt", 2 * p.lam_bytes, index=episode * 1_000_003 + attempt)
        msg = run[: p.lam_bytes]
        outcome = faulted_sign(sk, msg, spec, run[p.lam_bytes :])
        sig = outcome.signature
        if not detect_effective(sig, pk, msg, node):
            rows.append(
                CampaignRow(attempt, outcome.injected, outcome.outcome_class, 0, len(state.recovered), False)
            )
            continue
        state.faults_used += 1
        recovered = recover_secret_matrices(sig, pk, msg, node, already=frozenset(state.recovered))
        d = sample_fixed_weight_digest(sig.cmt, p.t, p.w, p.s)
        vals = set(int(v) for v in d[lo:hi] if v != 0)
        xs.append(len(vals))
        for j, mat in recovered.items():
            exact = exact and mat == mono_transpose(sk.expanded[j - 1])
            state.recovered[j] = mat
        rows.append(
            CampaignRow(attempt, True, EFFECTIVE, len(recovered), len(state.recovered), state.complete)
        )
    return state.faults_used, xs, rows, exact


def run_campaign(
    params: LessParams,
    node: int,
    p_success: float,
    mode: str,
    trials: int,
    master_seed: bytes,
    fault_model: str = "skip_store",
    threads: int = 1,
    csv_path: str = "",
) -> CampaignReport:
    """Run fault episodes and aggregate Table-4 style statistics.

    digest_only: episodes are simulated at the digest/tree level until the
    cumulative number of effective faults reaches `trials`. full: `trials`
    complete key-recovery episodes with real signatures. Episodes use
    per-index derived seeds, so results are identical for any thread count.
    """
    if mode not in ("digest_only", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    if covered_leaves(node, params.l2, params.t) == 0:
        raise ValueError(f"node {node} covers no digest positions")

    episodes = 0
    effective = 0
    navg_total = 0
    xs_all = []
    rows_all = []
    exact = True

    def digest_job(e):
        return _digest_only_episode(params, node, p_success, master_seed, e)

    def full_job(e):
        return _full_episode(params, node, p_success, master_seed, e, fault_model)

    if mode == "digest_only":
        wave = max(1, threads) * 4
        with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
            while effective < trials:
                results = list(ex.map(digest_job, range(episodes, episodes + wave)))
                for eff, xs, rows in results:
                    episodes += 1
                    effective += eff
                    navg_total += eff
                    xs_all.extend(xs)
                    rows_all.extend(rows)
                    if effective >= trials:
                        break
    else:
        with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
            for eff, xs, rows, ok in ex.map(full_job, range(trials)):
                episodes += 1
                effective += eff
                navg_total += eff
                xs_all.extend(xs)
                rows_all.extend(rows)
                exact = exact and ok

    for i, r in enumerate(rows_all):
        r.trial = i + 1
    if csv_path:
        write_campaign_csv(csv_path, rows_all)
    n_avg = navg_total / episodes
    n_trial = 1.0 / p_success
    report = CampaignReport(
        schema="zkfault/1",
        scheme="less",
        params=params.name,
        node=node,
        p_success=p_success,
        mode=mode,
        trials=trials,
        episodes=episodes,
        effective_faults=effective,
        n_avg=n_avg,
        mean_x=float(np.mean(xs_all)),
        n_trial=n_trial,
        n_total=n_avg / p_success,
        all_exact=exact,
        csv_path=csv_path,
    )
    return report
