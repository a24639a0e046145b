"""Command line entry point: ``deepobike {collect,init,run,sweep,report,defaults}``.

Exit codes: 0 success, 2 fall, 3 lost excitation / rank deficiency,
4 policy not stabilizing or infeasible, 5 I/O or configuration error.
"""
import argparse
import json
import logging
import math
import os
import sys

from . import config as cfgmod
from .data_pipeline import TrajectoryLog
from .errors import DeepoBikeError, IoError
from .experiment import collect_offline, initial_policy, run_episode, sweep
from .init_policy import load_policy, save_policy
from .report import report_episodes, report_sweep, rerender

log = logging.getLogger("deepobike")


def _config(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.profile(args.profile)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def cmd_defaults(args):
    cfgmod.dump(cfgmod.profile(args.profile), args.out)
    print(args.out)


def cmd_collect(args):
    cfg = _config(args).with_(mode="collect")
    data = collect_offline(cfg)
    data.to_csv(args.out)
    print(f"wrote {data.t} samples to {args.out}")


def cmd_init(args):
    cfg = _config(args)
    try:
        data = TrajectoryLog.from_csv(args.log)
    except (OSError, ValueError) as exc:
        raise IoError(str(exc)) from exc
    policy = initial_policy(cfg, data)
    save_policy(policy, args.out)
    print(f"K = {policy.K.ravel().tolist()}  rho = {policy.rho:.6f}  -> {args.out}")


def cmd_run(args):
    cfg = _config(args)
    mode = "run_fl_only" if args.fl_only else "run_deepo"
    records, labels = [], []
    if mode == "run_deepo":
        try:
            data = TrajectoryLog.from_csv(args.log) if args.log else collect_offline(cfg)
            policy = load_policy(args.policy) if args.policy else initial_policy(cfg, data)
        except OSError as exc:
            raise IoError(str(exc)) from exc
        records.append(run_episode(cfg.with_(mode=mode), policy, data))
        labels.append("deepo")
    if mode == "run_fl_only" or args.baseline:
        records.append(run_episode(cfg.with_(mode="run_fl_only")))
        labels.append("fl_only")
    paths = report_episodes(records, args.out_dir, labels)
    for lab, rec in zip(labels, records):
        s = rec.summary
        print(f"{lab}: ISE_phi={s['ISE_phi']:.4f} deg^2  ISE_phi_dot={s['ISE_phi_dot']:.4f} "
              f"(deg/s)^2  fell={s['fell']}")
    print("\n".join(paths))
    if any(r.summary["fell"] for r in records):
        return 2
    return 0


def _parse_values(raw):
    return [math.inf if v.lower() in ("inf", "infinity") else float(v) for v in raw]


def cmd_sweep(args):
    cfg = _config(args)
    if args.xi is not None:
        axis, values = "xi", [int(v) for v in _parse_values(args.xi)] or None
    else:
        axis, values = "zeta", _parse_values(args.zeta) or None
    rep = sweep(cfg, axis, values, repeats=args.repeats, workers=args.workers,
                include_baseline=not args.no_baseline)
    paths = report_sweep(rep, args.out_dir)
    for row in rep.summary_rows():
        print(json.dumps(row))
    print("\n".join(paths))


def cmd_report(args):
    for p in rerender(args.in_dir, args.out_dir):
        print(p)


def build_parser():
    p = argparse.ArgumentParser(prog="deepobike", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="YAML experiment configuration")
        sp.add_argument("--profile", default="simulation", choices=("simulation", "hardware-like"))
        sp.add_argument("--seed", type=int)

    sp = sub.add_parser("defaults", help="write the default configuration")
    sp.add_argument("--profile", default="simulation", choices=("simulation", "hardware-like"))
    sp.add_argument("--out", default="config.yaml")
    sp.set_defaults(func=cmd_defaults)

    sp = sub.add_parser("collect", help="collect offline excitation data")
    common(sp)
    sp.add_argument("--out", default="offline.csv")
    sp.set_defaults(func=cmd_collect)

    sp = sub.add_parser("init", help="synthesize the initial policy from an offline log")
    common(sp)
    sp.add_argument("--log", required=True)
    sp.add_argument("--out", default="policy.json")
    sp.set_defaults(func=cmd_init)

    sp = sub.add_parser("run", help="run one closed-loop episode")
    common(sp)
    sp.add_argument("--log", help="offline log CSV (collected afresh if omitted)")
    sp.add_argument("--policy", help="policy artifact (synthesized if omitted)")
    sp.add_argument("--fl-only", action="store_true", help="FL baseline only")
    sp.add_argument("--baseline", action="store_true", help="also run the FL baseline")
    sp.add_argument("--out-dir", default="run")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="sweep the gain update interval or forgetting factor")
    common(sp)
    axis = sp.add_mutually_exclusive_group(required=True)
    axis.add_argument("--xi", nargs="*", help="update intervals (default 1 10 50 100)")
    axis.add_argument("--zeta", nargs="*", help="lambda = 1 - 10^-zeta (default inf 2 3 4 5 6)")
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--no-baseline", action="store_true")
    sp.add_argument("--out-dir", default="sweep")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("report", help="re-render plots from CSVs")
    sp.add_argument("--in-dir", required=True)
    sp.add_argument("--out-dir")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except DeepoBikeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
