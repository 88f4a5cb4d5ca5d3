"""Training-throughput benchmark: wall times, speedup table and quality metrics.

The timed unit is the full per-user training stage (projection, shard
training, ensemble assembly) over a synthetic roster.  Each worker count is
measured ``repetitions`` times (median reported; medians shrug off scheduler
noise) against the mandatory single-worker baseline, and the report carries
the raw measurements plus EER/sensitivity/specificity for each configuration.
"""

from __future__ import annotations

import json
import statistics
import time
from pathlib import Path

import psutil

from .config import RunConfig
from .metrics import Timing, confusion_at, eer, far, frr, sensitivity, specificity, speedup
from .metrics import ScoredProbe
from .pipeline import fit_population_pca, generate_dataset, group_rows_by_user
from .training import WorkerPool, ensemble_score, train_many


def physical_cores() -> int:
    return psutil.cpu_count(logical=False) or psutil.cpu_count() or 1


def workload_descriptor(cfg: RunConfig) -> str:
    return "users=%d,per_user=%d,locals=%d,hidden=%d,epochs=%d,seed=%d" % (
        cfg.users,
        cfg.enroll_per_user(),
        cfg.locals_per_user,
        cfg.hidden,
        cfg.max_epochs,
        cfg.seed,
    )


def time_training(grouped, pca, train_cfg, pool, repetitions: int) -> tuple[list[float], dict]:
    """Run the training stage ``repetitions`` times; returns (raw seconds, models)."""
    raw = []
    ensembles = {}
    for _ in range(repetitions):
        t0 = time.perf_counter()
        ensembles = train_many(grouped, pca, train_cfg, pool=pool)
        raw.append(time.perf_counter() - t0)
    return raw, ensembles


def _score_in_memory(ensembles, pca, probes) -> list[ScoredProbe]:
    return [
        ScoredProbe(
            score=ensemble_score(ensembles[p.user_id], pca, p),
            genuine=p.kind.is_genuine,
        )
        for p in probes
        if p.user_id in ensembles
    ]


def bench_training(
    cfg: RunConfig,
    worker_counts,
    repetitions: int | None = None,
) -> dict:
    """Measure training wall time per worker count and build the report dict."""
    worker_counts = sorted(set(int(w) for w in worker_counts))
    if 1 not in worker_counts:
        raise ValueError("worker counts must include 1 (the speedup baseline)")
    if any(w < 1 for w in worker_counts):
        raise ValueError("worker counts must be >= 1")
    repetitions = cfg.repetitions if repetitions is None else int(repetitions)

    ds = generate_dataset(cfg)
    pca = fit_population_pca(ds.enroll, cfg)
    grouped = group_rows_by_user(ds.enroll)
    workload = workload_descriptor(cfg)

    timings: dict[int, Timing] = {}
    metrics: dict[int, dict] = {}
    for workers in worker_counts:
        train_cfg = cfg.train_config()
        train_cfg.workers = workers
        with WorkerPool(workers) as pool:
            if workers > 1:
                # spin the worker processes up before the timed repetitions
                warm = {k: grouped[k] for k in list(grouped)[:workers]}
                train_many(warm, pca, train_cfg, pool=pool)
            raw, ensembles = time_training(grouped, pca, train_cfg, pool, repetitions)
        timings[workers] = Timing(
            workers=workers,
            seconds=statistics.median(raw),
            workload=workload,
            raw=tuple(raw),
        )
        scored = _score_in_memory(ensembles, pca, ds.probes)
        if scored:
            eer_value, eer_threshold = eer(scored)
            conf = confusion_at(scored, eer_threshold)
            metrics[workers] = {
                "eer": eer_value,
                "eer_threshold": eer_threshold,
                "sensitivity": sensitivity(conf),
                "specificity": specificity(conf),
                "far": far(conf),
                "frr": frr(conf),
            }

    baseline = timings[1]
    report = {
        "workload": workload,
        "repetitions": repetitions,
        "physical_cores": physical_cores(),
        "timings": [
            {
                "workers": w,
                "median_seconds": timings[w].seconds,
                "raw_seconds": list(timings[w].raw),
            }
            for w in worker_counts
        ],
        "speedups": {str(w): speedup(baseline, timings[w]) for w in worker_counts},
        "metrics": {str(w): metrics[w] for w in metrics},
    }
    return report


def format_report_table(report: dict) -> str:
    """Human-readable speedup table for a bench_training report."""
    lines = [
        "workload: %s" % report["workload"],
        "repetitions: %d   physical cores: %d"
        % (report["repetitions"], report["physical_cores"]),
        "",
        "%8s  %14s  %10s" % ("workers", "median_time_s", "speedup"),
    ]
    for entry in report["timings"]:
        w = entry["workers"]
        lines.append(
            "%8d  %14.4f  %10.3f"
            % (w, entry["median_seconds"], report["speedups"][str(w)])
        )
    if report["metrics"]:
        lines.append("")
        lines.append("%8s  %8s  %12s  %12s" % ("workers", "eer", "sensitivity", "specificity"))
        for w, m in report["metrics"].items():
            lines.append(
                "%8s  %8.4f  %12.4f  %12.4f"
                % (w, m["eer"], m["sensitivity"], m["specificity"])
            )
    return "\n".join(lines) + "\n"


def write_report(report: dict, json_path, text_path=None) -> None:
    Path(json_path).write_text(
        json.dumps(report, indent=2, sort_keys=True), encoding="utf-8"
    )
    if text_path is not None:
        Path(text_path).write_text(format_report_table(report), encoding="utf-8")
