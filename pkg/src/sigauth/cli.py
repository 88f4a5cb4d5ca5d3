"""Command-line surface: dataset generation, enrollment, verification,
evaluation and benchmarking.

Exit codes: 0 success (or probe accepted), 1 probe rejected, 2 operational
error.  Every command is reproducible from (config file, seed); flags override
config-file values.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .auth import ModelStore, Priority, security_check, threshold_for_priority, verify
from .config import RunConfig
from .errors import SigAuthError
from .metrics import (
    confusion_at,
    eer,
    far,
    far_frr_curve,
    frr,
    sensitivity,
    specificity,
    specificity_paper_eq2,
)
from .pipeline import (
    check_disjoint_splits,
    enroll_all,
    generate_dataset,
    load_dataset,
    score_probes,
    write_dataset,
)
from .sigdata import load_samples

EXIT_OK = 0
EXIT_REJECT = 1
EXIT_ERROR = 2

_PRIORITY_NAMES = {
    "regular-staff": Priority.REGULAR_STAFF,
    "privileged-staff": Priority.PRIVILEGED_STAFF,
    "privileged-patient": Priority.PRIVILEGED_PATIENT,
    "vip-patient": Priority.VIP_PATIENT,
}


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {
        "seed": args.seed,
        "users": getattr(args, "users", None),
        "workers": getattr(args, "workers", None),
        "locals_per_user": getattr(args, "locals", None),
        "hidden": getattr(args, "hidden", None),
        "variance_target": getattr(args, "variance_target", None),
        "store_path": getattr(args, "store", None),
        "repetitions": getattr(args, "reps", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "threshold_policy", None):
        parts = [float(x) for x in args.threshold_policy.split(",")]
        if len(parts) != 4:
            raise ValueError("--threshold-policy needs four comma-separated values")
        cfg.thresholds = tuple(parts)
    cfg.policy()  # validate monotonicity early
    return cfg


def cmd_gen(args) -> int:
    cfg = _load_config(args)
    ds = generate_dataset(cfg)
    manifest = write_dataset(ds, cfg, args.out)
    print(json.dumps({k: manifest[k] for k in ("users", "enroll_samples", "probe_samples", "checksums")}, sort_keys=True))
    print("dataset written to %s" % args.out)
    return EXIT_OK


def cmd_enroll(args) -> int:
    cfg = _load_config(args)
    ds = load_dataset(args.data)
    store = ModelStore(cfg.store_path)
    records = enroll_all(store, ds, cfg)
    for uid in sorted(records):
        rec = records[uid]
        errors = rec.ensemble.local_errors
        print(
            "enrolled %s priority=%d version=%d locals=%d final_err=%s"
            % (uid, int(rec.priority), rec.version, rec.ensemble.n_locals,
               ",".join("%.3g" % e for e in errors))
        )
    print("enrolled %d users into %s" % (len(records), cfg.store_path))
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    store = ModelStore(cfg.store_path)
    samples = load_samples(args.sample_file)
    if not samples:
        raise SigAuthError("sample file %s is empty" % args.sample_file)
    probe = samples[0]
    if args.priority_override:
        tier = _PRIORITY_NAMES[args.priority_override]
        threshold = threshold_for_priority(cfg.policy(), tier)
        decision = verify(store, args.user_id, probe, threshold)
        decision = dataclasses.replace(decision, priority=tier)
    else:
        decision = security_check(store, args.user_id, probe, cfg.policy())
    print(
        json.dumps(
            {
                "user_id": decision.user_id,
                "score": decision.score,
                "threshold": decision.threshold,
                "priority": int(decision.priority) if decision.priority else None,
                "accepted": decision.accepted,
                "reason": decision.reason,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK if decision.accepted else EXIT_REJECT


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    ds = load_dataset(args.data)
    check_disjoint_splits(ds.enroll, ds.probes)
    store = ModelStore(cfg.store_path)
    scored = score_probes(store, ds.probes)
    eer_value, eer_threshold = eer(scored)
    conf = confusion_at(scored, eer_threshold)
    report = {
        "probes": len(scored),
        "eer": eer_value,
        "eer_threshold": eer_threshold,
        "sensitivity": sensitivity(conf),
        "specificity": specificity(conf),
        "far": far(conf),
        "frr": frr(conf),
        "curve": [
            {"threshold": t, "far": a, "frr": r} for t, a, r in far_frr_curve(scored)
        ],
    }
    if args.paper_eq2:
        report["specificity_eq2"] = specificity_paper_eq2(conf)
    out = Path(args.out)
    out.write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    summary = {k: report[k] for k in report if k != "curve"}
    print(json.dumps(summary, sort_keys=True))
    print("evaluation report written to %s" % out)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    worker_counts = [int(x) for x in args.bench_workers.split(",")]
    report = bench_mod.bench_training(cfg, worker_counts, repetitions=cfg.repetitions)
    json_path = Path(args.out)
    text_path = json_path.with_suffix(".txt")
    bench_mod.write_report(report, json_path, text_path)
    print(bench_mod.format_report_table(report), end="")
    print("benchmark report written to %s and %s" % (json_path, text_path))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sigauth",
        description="Dynamic-signature authentication engine and evaluation harness",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--store", help="model store directory")
    parser.add_argument("--workers", type=int, help="worker pool size")
    parser.add_argument("--locals", type=int, help="local networks per user")
    parser.add_argument("--hidden", type=int, help="hidden layer width")
    parser.add_argument("--variance-target", type=float, dest="variance_target",
                        help="spectrum share retained by the projection")
    parser.add_argument(
        "--threshold-policy",
        dest="threshold_policy",
        help="four comma-separated thresholds: low,avg,high,vhigh",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="synthesize a dataset")
    p_gen.add_argument("--users", type=int)
    p_gen.add_argument("--out", default="dataset", help="output directory")
    p_gen.set_defaults(func=cmd_gen)

    p_enroll = sub.add_parser("enroll", help="fit projection and enroll every user")
    p_enroll.add_argument("--data", default="dataset", help="dataset directory")
    p_enroll.set_defaults(func=cmd_enroll)

    p_verify = sub.add_parser("verify", help="verify one probe sample")
    p_verify.add_argument("user_id")
    p_verify.add_argument("sample_file", help="JSONL file; first sample is the probe")
    p_verify.add_argument(
        "--priority-override",
        choices=sorted(_PRIORITY_NAMES),
        help="verify at this tier's threshold instead of the stored one",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_eval = sub.add_parser("eval", help="score held-out probes and report metrics")
    p_eval.add_argument("--data", default="dataset", help="dataset directory")
    p_eval.add_argument("--out", default="eval_report.json")
    p_eval.add_argument(
        "--paper-eq2",
        action="store_true",
        help="also report the alternate specificity variant TF/(TF+TG)",
    )
    p_eval.set_defaults(func=cmd_eval)

    p_bench = sub.add_parser("bench", help="measure training speedup")
    p_bench.add_argument("--users", type=int)
    p_bench.add_argument(
        "--workers", dest="bench_workers", default="1,2,4",
        help="comma-separated worker counts (must include 1)",
    )
    p_bench.add_argument("--reps", type=int, help="repetitions per worker count")
    p_bench.add_argument("--out", default="bench_report.json")
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SigAuthError as exc:
        print("error [%s]: %s" % (exc.code, exc), file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
