"""Command-line front end.

Subcommands: less keygen/sign/verify, cross keygen/sign/attack, attack run,
stats expected/table4, cm bench/probe. Every run is deterministic in
--master-seed; reports are JSON (schema zkfault/1) plus an optional per-trial
CSV. Exit codes: 0 success, 1 verification/probe/data failure, 2 usage.
"""

import argparse
import os
import sys

from . import attack_cross, attack_less, countermeasures, cross, less, stats
from .errors import ZkfaultError
from .xof import xof_expand

# Table of published simulation results used by `stats table4`:
# name -> (number of secrets, E[X], N_avg)
PAPER_TABLE4 = {
    "less-1b": (1, 1.0, 1.0),
    "less-1i": (3, 2.91, 1.05),
    "less-1s": (7, 5.55, 2.09),
    "less-3b": (1, 1.0, 1.0),
    "less-3s": (2, 2.0, 1.0),
    "less-5b": (1, 1.0, 1.0),
    "less-5s": (2, 2.0, 1.0),
    "cross-desk": (1, 1.0, 1.0),
}


def _seed_arg(value: str) -> bytes:
    if value is None:
        return os.urandom(16)
    try:
        if len(value) % 2:
            value = "0" + value
        return bytes.fromhex(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"master seed must be hex: {exc}")


def _less_params(name_or_path: str) -> less.LessParams:
    if name_or_path in less.PARAM_SETS:
        return less.PARAM_SETS[name_or_path]
    if os.path.exists(name_or_path):
        return less.LessParams.from_json(less.load_json(name_or_path))
    raise ZkfaultError(f"unknown LESS parameter set {name_or_path!r}")


def _cross_params(name_or_path: str) -> cross.CrossParams:
    if name_or_path in cross.CROSS_PARAM_SETS:
        return cross.CROSS_PARAM_SETS[name_or_path]
    if os.path.exists(name_or_path):
        return cross.CrossParams.from_json(less.load_json(name_or_path))
    raise ZkfaultError(f"unknown CROSS parameter set {name_or_path!r}")


def _read_msg(args) -> bytes:
    if args.msg_file:
        with open(args.msg_file, "rb") as fh:
            return fh.read()
    return args.msg.encode()


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("ZKFAULT_THREADS", "1"))


def _write(obj: dict, path: str, label: str) -> None:
    less.dump_json(obj, path)
    print(f"{label}: {path}")


# ------------------------------------------------------------------ less


def cmd_less_keygen(args) -> int:
    params = _less_params(args.param)
    seed = args.master_seed
    ent = xof_expand(seed, b"keygen", 2 * params.lam_bytes)
    sk, pk = less.keygen(params, ent[: params.lam_bytes], ent[params.lam_bytes :])
    os.makedirs(args.out_dir, exist_ok=True)
    _write(less.sk_to_json(sk), os.path.join(args.out_dir, "sk.json"), "secret key")
    _write(less.pk_to_json(pk), os.path.join(args.out_dir, "pk.json"), "public key")
    print(f"param={params.name} master_seed={seed.hex()}")
    return 0


def cmd_less_sign(args) -> int:
    sk = less.sk_from_json(less.load_json(args.sk))
    msg = _read_msg(args)
    sig = less.sign(sk, msg, args.master_seed)
    _write(less.sig_to_json(sig), args.out, "signature")
    return 0


def cmd_less_verify(args) -> int:
    pk = less.pk_from_json(less.load_json(args.pk))
    msg = _read_msg(args)
    try:
        sig = less.sig_from_json(less.load_json(args.sig), pk.params)
    except ZkfaultError as exc:
        print(f"reject: malformed signature ({exc})")
        return 1
    if less.verify(pk, msg, sig):
        print("accept")
        return 0
    print("reject")
    return 1


# ------------------------------------------------------------------ cross


def cmd_cross_keygen(args) -> int:
    params = _cross_params(args.param)
    seed = args.master_seed
    keys = cross.cross_keygen(params, seed)
    os.makedirs(args.out_dir, exist_ok=True)
    _write(
        {"schema": "zkfault/1", "kind": "cross-sk", "param": params.to_json(), "seed": seed.hex()},
        os.path.join(args.out_dir, "cross-sk.json"),
        "secret key",
    )
    _write(
        {
            "schema": "zkfault/1",
            "kind": "cross-pk",
            "param": params.to_json(),
            "h": keys.h.tolist(),
            "s": keys.s.tolist(),
        },
        os.path.join(args.out_dir, "cross-pk.json"),
        "public key",
    )
    return 0


def _cross_keys_from_file(path: str) -> cross.CrossKeyPair:
    obj = less.load_json(path)
    params = cross.CrossParams.from_json(obj["param"])
    return cross.cross_keygen(params, bytes.fromhex(obj["seed"]))


def cmd_cross_sign(args) -> int:
    keys = _cross_keys_from_file(args.sk)
    msg = _read_msg(args)
    sig = cross.cross_sign(keys, msg, args.master_seed)
    _write(cross.cross_sig_to_json(sig), args.out, "signature")
    if not cross.cross_check_response(cross.public_key(keys), msg, sig):
        print("internal consistency check failed")
        return 1
    return 0


# ------------------------------------------------------------------ attack


def cmd_attack_run(args) -> int:
    mode = args.mode.replace("-", "_")
    if args.scheme == "less":
        params = _less_params(args.param)
        report = attack_less.run_campaign(
            params,
            args.fault_node,
            args.p_success,
            mode,
            args.trials,
            args.master_seed,
            fault_model=args.fault_model,
            threads=_threads(args),
            csv_path=args.csv,
        )
    else:
        params = _cross_params(args.param)
        report = attack_cross.run_campaign_cross(
            params,
            args.fault_node,
            args.p_success,
            mode,
            args.trials,
            args.master_seed,
            threads=_threads(args),
            csv_path=args.csv,
        )
    obj = report.to_json()
    obj["master_seed"] = args.master_seed.hex()
    if args.out:
        _write(obj, args.out, "report")
    print(
        f"{report.scheme}/{report.params} node={report.node} mode={report.mode}: "
        f"episodes={report.episodes} effective={report.effective_faults} "
        f"mean_x={report.mean_x:.4f} n_avg={report.n_avg:.4f} "
        f"n_trial={report.n_trial:.1f} n_total={report.n_total:.2f} all_exact={report.all_exact}"
    )
    return 0 if report.all_exact else 1


# ------------------------------------------------------------------ stats


def _node_context(params: less.LessParams, node: int) -> stats.NodeContext:
    from .seedtree import covered_leaves

    ell = covered_leaves(node, params.l2, params.t)
    return stats.NodeContext(t=params.t, w=params.w, s=params.s, ell=ell)


def cmd_stats_expected(args) -> int:
    params = _less_params(args.param)
    ctx = _node_context(params, args.node)
    ex = stats.expected_recovered(ctx)
    ex_eff = stats.expected_recovered_effective(ctx)
    p_eff = stats.effective_probability(ctx)
    bound = float(params.s - 1) / float(ex_eff) if ex_eff else float("inf")
    print(f"param={params.name} node={args.node} ell={ctx.ell} secrets={params.s - 1}")
    print(f"E[X]  = {float(ex):.6f}   (exact {ex})")
    print(f"E[X | effective] = {float(ex_eff):.6f}" if ex_eff is not None else "E[X | effective] undefined")
    print(f"Pr[effective | injected] = {float(p_eff):.6f}")
    print(f"N_avg lower bound (secrets / E[X|eff]) = {bound:.4f}")
    return 0


def cmd_stats_table4(args) -> int:
    rows = []
    names = [n for n in less.FULL_SIZE_SETS] + ["cross-desk"]
    for name in names:
        secrets, paper_x, paper_navg = PAPER_TABLE4[name]
        if name.startswith("less"):
            params = _less_params(name)
            ctx = _node_context(params, args.node)
            closed = float(stats.expected_recovered_effective(ctx))
            if args.trials:
                rep = attack_less.run_campaign(
                    params, args.node, 1.0, "digest_only", args.trials, args.master_seed,
                    threads=_threads(args),
                )
                mc_x, mc_navg = rep.mean_x, rep.n_avg
            else:
                mc_x = mc_navg = float("nan")
        else:
            params = _cross_params(name)
            closed = 1.0
            if args.trials:
                rep = attack_cross.run_campaign_cross(
                    params, args.node, 1.0, "digest_only", args.trials, args.master_seed,
                    threads=_threads(args),
                )
                mc_x, mc_navg = rep.mean_x, rep.n_avg
            else:
                mc_x = mc_navg = float("nan")
        rows.append(
            {
                "params": name,
                "secrets": secrets,
                "e_x_closed_form": closed,
                "e_x_paper": paper_x,
                "mean_x_mc": mc_x,
                "n_avg_mc": mc_navg,
                "n_avg_paper": paper_navg,
            }
        )
    print(f"{'set':<12}{'secrets':>8}{'E[X] cf':>10}{'X mc':>10}{'X paper':>9}{'Navg mc':>10}{'Navg paper':>11}")
    for r in rows:
        print(
            f"{r['params']:<12}{r['secrets']:>8}{r['e_x_closed_form']:>10.4f}"
            f"{r['mean_x_mc']:>10.4f}{r['e_x_paper']:>9.2f}{r['n_avg_mc']:>10.4f}{r['n_avg_paper']:>11.2f}"
        )
    if args.out:
        _write({"schema": "zkfault/1", "kind": "table4", "node": args.node, "rows": rows}, args.out, "table")
    return 0


# --------------------------------------------------------------------- cm


def cmd_cm_bench(args) -> int:
    params = _less_params(args.param)
    res = countermeasures.bench_countermeasure(params, args.iters, args.master_seed)
    print(
        f"{params.name}: original {res['mean_cycles_original']/1e6:.2f} ms, "
        f"countermeasure {res['mean_cycles_cm']/1e6:.2f} ms, ratio {res['ratio']:.4f}"
    )
    if args.out:
        _write(res, args.out, "benchmark")
    return 0


def cmd_cm_probe(args) -> int:
    t = 2 * args.l
    params = less.LessParams(
        name=f"probe-l{args.l}-s{args.s}", n=10, k=5, q=7, l=args.l, t=t,
        w=min(4, t), s=args.s,
    )
    rep = countermeasures.resistance_probe(params)
    print(
        f"probe {params.name}: {rep.digests} digests x {rep.cases // max(rep.digests, 1)} cases -> "
        f"{len(rep.cm_violations)} countermeasure violations, "
        f"{rep.original_violations} original-pipeline revelations"
    )
    if args.out:
        _write(
            {
                "schema": "zkfault/1",
                "kind": "probe",
                "params": params.to_json(),
                "digests": rep.digests,
                "cases": rep.cases,
                "cm_violations": [
                    {"digest": list(d), "node": n, "model": m, "rounds": list(r)}
                    for d, n, m, r in rep.cm_violations
                ],
                "original_violations": rep.original_violations,
            },
            args.out,
            "report",
        )
    return 0 if rep.ok else 1


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zkfault", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def add_seed(p):
        p.add_argument("--master-seed", type=_seed_arg, default=None,
                       help="hex seed; omitted = fresh random")

    def add_threads(p):
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default env ZKFAULT_THREADS or 1)")

    p_less = sub.add_parser("less", help="LESS key lifecycle").add_subparsers(dest="sub", required=True)
    p = p_less.add_parser("keygen")
    p.add_argument("--param", default="less-1b")
    p.add_argument("--out-dir", default="keys")
    add_seed(p)
    p.set_defaults(fn=cmd_less_keygen)
    p = p_less.add_parser("sign")
    p.add_argument("--sk", default="keys/sk.json")
    p.add_argument("--msg", default="")
    p.add_argument("--msg-file", default=None)
    p.add_argument("--out", default="sig.json")
    add_seed(p)
    p.set_defaults(fn=cmd_less_sign)
    p = p_less.add_parser("verify")
    p.add_argument("--pk", default="keys/pk.json")
    p.add_argument("--msg", default="")
    p.add_argument("--msg-file", default=None)
    p.add_argument("--sig", default="sig.json")
    p.set_defaults(fn=cmd_less_verify)

    p_cross = sub.add_parser("cross", help="CROSS key lifecycle").add_subparsers(dest="sub", required=True)
    p = p_cross.add_parser("keygen")
    p.add_argument("--param", default="cross-desk")
    p.add_argument("--out-dir", default="keys")
    add_seed(p)
    p.set_defaults(fn=cmd_cross_keygen)
    p = p_cross.add_parser("sign")
    p.add_argument("--sk", default="keys/cross-sk.json")
    p.add_argument("--msg", default="")
    p.add_argument("--msg-file", default=None)
    p.add_argument("--out", default="cross-sig.json")
    add_seed(p)
    p.set_defaults(fn=cmd_cross_sign)
    p = p_cross.add_parser("attack")
    p.add_argument("--param", default="cross-desk")
    p.add_argument("--fault-node", type=int, default=1)
    p.add_argument("--p-success", type=float, default=1.0)
    p.add_argument("--mode", choices=["full", "digest-only"], default="full")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", default="")
    add_seed(p)
    add_threads(p)
    p.set_defaults(fn=cmd_attack_run, scheme="cross", fault_model="skip_store")

    p = sub.add_parser("attack", help="fault campaigns").add_subparsers(dest="sub", required=True)
    pr = p.add_parser("run")
    pr.add_argument("--scheme", choices=["less", "cross"], default="less")
    pr.add_argument("--param", default="less-1b")
    pr.add_argument("--fault-node", type=int, default=1)
    pr.add_argument("--p-success", type=float, default=1.0)
    pr.add_argument("--mode", choices=["full", "digest-only"], default="digest-only")
    pr.add_argument("--trials", type=int, default=100000)
    pr.add_argument("--fault-model", choices=["skip_store", "stuck_at_zero", "bit_flip", "skip_check"], default="skip_store")
    pr.add_argument("--out", default="report.json")
    pr.add_argument("--csv", default="")
    add_seed(pr)
    add_threads(pr)
    pr.set_defaults(fn=cmd_attack_run)

    p_stats = sub.add_parser("stats", help="closed-form statistics").add_subparsers(dest="sub", required=True)
    p = p_stats.add_parser("expected")
    p.add_argument("--param", default="less-1i")
    p.add_argument("--node", type=int, default=1)
    p.set_defaults(fn=cmd_stats_expected)
    p = p_stats.add_parser("table4")
    p.add_argument("--node", type=int, default=1)
    p.add_argument("--trials", type=int, default=50000,
                   help="Monte Carlo effective faults per set (0 = closed form only)")
    p.add_argument("--out", default="")
    add_seed(p)
    add_threads(p)
    p.set_defaults(fn=cmd_stats_table4)

    p_cm = sub.add_parser("cm", help="countermeasure tooling").add_subparsers(dest="sub", required=True)
    p = p_cm.add_parser("bench")
    p.add_argument("--param", default="less-1b")
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--out", default="")
    add_seed(p)
    p.set_defaults(fn=cmd_cm_bench)
    p = p_cm.add_parser("probe")
    p.add_argument("--l", type=int, default=4)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--out", default="")
    p.set_defaults(fn=cmd_cm_probe)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "master_seed", "missing") is None:
        args.master_seed = os.urandom(16)
        print(f"master_seed={args.master_seed.hex()}")
    try:
        return args.fn(args)
    except ZkfaultError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
