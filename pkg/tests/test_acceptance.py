"""Acceptance suite: one test per numbered criterion, printed as a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS/FAIL line per
criterion alongside pytest's own reporting.  Criteria that substitute
desk-scale properties for cluster-scale results (5 and 9) use the calibrated
configuration recorded in benchmark_manifest.json at the repository root.
"""

import json
import statistics
import time
from pathlib import Path

import numpy as np
import psutil
import pytest

from sigauth.auth import (
    ModelStore,
    Priority,
    ThresholdPolicy,
    security_check,
    threshold_for_priority,
    verify,
)
from sigauth.bench import bench_training
from sigauth.config import RunConfig
from sigauth.features import assemble_matrix
from sigauth.mapreduce import covariance_stats, finalize_covariance
from sigauth.metrics import (
    Confusion,
    confusion_at,
    eer,
    far,
    frr,
    sensitivity,
    specificity,
)
from sigauth.nnet import (
    Gradient,
    RpropConfig,
    RpropState,
    TrainStop,
    backprop_gradient,
    netcreate,
    rprop_step,
    sigtrain,
)
from sigauth.pca import build_model, fit_pca
from sigauth.pipeline import (
    check_disjoint_splits,
    enroll_all,
    generate_dataset,
    score_probes,
    write_dataset,
)
from sigauth.pipeline import fit_population_pca, group_rows_by_user
from sigauth.training import train_many

from test_metrics import grid_eer_oracle, random_probe_set
from test_nnet import finite_difference_gradient, max_relative_error, zero_net

REPO_ROOT = Path(__file__).resolve().parent.parent


def report(criterion: int, name: str, ok: bool, detail: str = ""):
    print("ACCEPTANCE %2d %-28s %s  %s" % (criterion, name, "PASS" if ok else "FAIL", detail))
    assert ok, "criterion %d (%s) failed: %s" % (criterion, name, detail)


@pytest.fixture(scope="module")
def default_cfg():
    return RunConfig()  # 50 users x 40 enrollment samples, seed 42


@pytest.fixture(scope="module")
def default_matrix(default_cfg):
    ds = generate_dataset(default_cfg)
    return assemble_matrix(ds.enroll)


@pytest.fixture(scope="module")
def pipeline_run(default_cfg, tmp_path_factory):
    """Full default-benchmark run: dataset on disk, populated store, scores."""
    root = tmp_path_factory.mktemp("accept_run")
    t0 = time.perf_counter()
    ds = generate_dataset(default_cfg)
    write_dataset(ds, default_cfg, root / "dataset")
    check_disjoint_splits(ds.enroll, ds.probes)
    store = ModelStore(root / "store")
    enroll_all(store, ds, default_cfg)
    scored = score_probes(store, ds.probes)
    elapsed = time.perf_counter() - t0
    return {
        "root": root,
        "dataset": ds,
        "store": store,
        "scored": scored,
        "elapsed": elapsed,
    }


def test_criterion_1_mapreduce_covariance(default_matrix):
    rows = default_matrix.values
    assert rows.shape == (2000, 64)
    centered = rows - rows.mean(axis=0)
    oracle = centered.T @ centered / (rows.shape[0] - 1)

    t0 = time.perf_counter()
    worst = 0.0
    for workers in (1, 2, 4, 8):
        cov = finalize_covariance(covariance_stats(rows, workers=workers))
        rel = np.linalg.norm(cov - oracle) / np.linalg.norm(oracle)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - t0
    report(
        1, "mapreduce covariance",
        worst <= 1e-9 and elapsed < 2.0,
        "max rel Frobenius %.2e, runtime %.2fs" % (worst, elapsed),
    )


def test_criterion_2_pca_validity(default_matrix):
    stats = covariance_stats(default_matrix.values, workers=1)
    cov = finalize_covariance(stats)
    mu = stats.sum / stats.n

    model = build_model(mu, cov, variance_target=0.95, max_components=32)
    diag_err = float(np.max(np.abs(np.diag(model.corr) - 1.0)))
    ortho_err = float(np.max(np.abs(model.basis.T @ model.basis - np.eye(model.k))))

    full = build_model(mu, cov, variance_target=1.0, max_components=None)
    recon = full.basis @ np.diag(full.singular_values[: full.k]) @ full.basis.T
    recon_err = float(np.linalg.norm(recon - full.corr))

    _, _, k_rank1 = fit_pca(np.ones((3, 3)), variance_target=0.95)

    ok = diag_err <= 1e-9 and ortho_err <= 1e-8 and recon_err <= 1e-8 and k_rank1 == 1
    report(
        2, "pca validity", ok,
        "diag %.1e, ortho %.1e, recon %.1e, rank-1 k=%d" % (diag_err, ortho_err, recon_err, k_rank1),
    )


def test_criterion_3_gradient_fidelity():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for trial in range(100):
        k = int(rng.integers(2, 7))
        hidden = int(rng.integers(2, 7))
        net = netcreate((k, hidden, 1), int(rng.integers(0, 2**31)))
        batch = [
            (rng.normal(size=k) * 2.0, float(rng.integers(0, 2)))
            for _ in range(int(rng.integers(3, 11)))
        ]
        analytic, _ = backprop_gradient(net, batch)
        numeric = finite_difference_gradient(net, batch, h=1e-5)
        worst = max(worst, max_relative_error(analytic, numeric))
    report(3, "gradient fidelity", worst <= 1e-4, "max rel err %.2e over 100 pairs" % worst)


def test_criterion_4_rprop_conformance():
    cfg = RpropConfig()
    checks = []

    # constants as specified
    checks.append(cfg.eta_plus == 1.2 and cfg.eta_minus == 0.5)
    checks.append(cfg.delta_max == 50.0 and cfg.delta_min == 1e-6)

    net = zero_net(k=2, hidden=2)

    def grad(value):
        return Gradient(*[np.full_like(p, value) for p in net.params()])

    # growth by eta_plus, capped at delta_max
    state = RpropState(
        steps=tuple(np.full_like(p, 49.0) for p in net.params()),
        prev_grad=tuple(np.full_like(p, 1.0) for p in net.params()),
        config=cfg,
    )
    _, grown = rprop_step(net, state, grad(1.0))
    checks.append(all(np.all(s == 50.0) for s in grown.steps))

    state = RpropState.initial(net, cfg)
    n1, s1 = rprop_step(net, state, grad(2.0))            # first step: else branch
    checks.append(all(np.all(s == 0.1) for s in s1.steps))
    checks.append(all(np.all(b - a == 0.1) for a, b in zip(n1.params(), net.params())))
    n2, s2 = rprop_step(n1, s1, grad(1.0))                # agreement: grow to 0.12
    checks.append(all(np.allclose(s, 0.12) for s in s2.steps))

    # sign flip: shrink by eta_minus, zero stored gradient, hold weights
    n3, s3 = rprop_step(n2, s2, grad(-1.0))
    checks.append(all(np.allclose(s, 0.06) for s in s3.steps))
    checks.append(all(np.array_equal(a, b) for a, b in zip(n2.params(), n3.params())))
    checks.append(all(np.all(p == 0.0) for p in s3.prev_grad))

    # shrink floored at delta_min
    state = RpropState(
        steps=tuple(np.full_like(p, 1.5e-6) for p in net.params()),
        prev_grad=tuple(np.full_like(p, 1.0) for p in net.params()),
        config=cfg,
    )
    _, shrunk = rprop_step(net, state, grad(-1.0))
    checks.append(all(np.all(s == 1e-6) for s in shrunk.steps))

    # XOR toy convergence
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0.0, 1.0, 1.0, 0.0])
    _, err = sigtrain(netcreate((2, 4, 1), 1), X, y, stop=TrainStop(max_epochs=500, err_goal=0.0))
    checks.append(err < 0.05)

    report(4, "rprop conformance", all(checks), "branches ok, XOR E=%.4f" % err)


def test_criterion_5_end_to_end_quality(pipeline_run):
    scored = pipeline_run["scored"]
    value, threshold = eer(scored)
    conf = confusion_at(scored, threshold)
    sens = sensitivity(conf)
    spec = specificity(conf)
    elapsed = pipeline_run["elapsed"]

    manifest = json.loads((REPO_ROOT / "benchmark_manifest.json").read_text())
    bounds = manifest["asserted_bounds"]
    ok = (
        value <= bounds["eer_max"]
        and sens >= bounds["sensitivity_min"]
        and spec >= bounds["specificity_min"]
        and elapsed < bounds["runtime_max_seconds"]
    )
    report(
        5, "end-to-end quality", ok,
        "EER %.4f (<=%.2f), sens %.4f, spec %.4f, %.1fs"
        % (value, bounds["eer_max"], sens, spec, elapsed),
    )


def test_criterion_6_eer_oracle_equivalence():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        probes = random_probe_set(rng)
        value, _ = eer(probes)
        worst = max(worst, abs(value - grid_eer_oracle(probes)))
    report(6, "eer oracle equivalence", worst <= 1e-3, "max |sweep-grid| %.2e" % worst)


def test_criterion_7_metric_identities():
    rng = np.random.default_rng(77)
    ok = True
    for _ in range(1000):
        tg, fg, tf, ff = (int(x) for x in rng.integers(0, 500, 4))
        c = Confusion(tg, fg, tf, ff)
        if tg + ff > 0 and sensitivity(c) != 1.0 - frr(c):
            ok = False
        if tf + fg > 0 and specificity(c) != 1.0 - far(c):
            ok = False
    # confusion counts always sum to the probe count
    for _ in range(50):
        probes = random_probe_set(rng)
        if confusion_at(probes, float(rng.uniform(0, 1))).total != len(probes):
            ok = False
    report(7, "metric identities", ok, "exact over 1000 confusions")


def test_criterion_8_priority_gate(pipeline_run):
    rng = np.random.default_rng(88)
    ok = True
    for _ in range(1000):
        cuts = np.sort(rng.uniform(0.01, 0.99, 4))
        if len(np.unique(cuts)) < 4:
            continue
        policy = ThresholdPolicy.from_floats(*cuts)
        score = float(rng.uniform(0, 1))
        accepted = {p: score >= threshold_for_priority(policy, p) for p in Priority}
        for high in Priority:
            if accepted[high]:
                for low in Priority:
                    if low < high and not accepted[low]:
                        ok = False

    # delegation equivalence on the populated store, exact
    store = pipeline_run["store"]
    ds = pipeline_run["dataset"]
    policy = ThresholdPolicy.default()
    for probe in ds.probes[:40]:
        direct = security_check(store, probe.user_id, probe, policy)
        tier = store.load_user(probe.user_id).priority
        expected = verify(
            store, probe.user_id, probe, threshold_for_priority(policy, tier)
        )
        if direct != expected:
            ok = False
    report(8, "priority gate", ok, "monotone over 1000 draws; delegation exact")


def test_criterion_9_speedup():
    logical = psutil.cpu_count() or 1
    physical = psutil.cpu_count(logical=False) or logical
    top = min(8, logical)
    cfg = RunConfig(
        users=200,
        enroll_genuine=6, enroll_skilled=3, enroll_random=1,
        probe_genuine=2, probe_skilled=1, probe_random=1,
        workers=1, locals_per_user=8, hidden=8, max_epochs=40,
        repetitions=15,
    )
    worker_counts = sorted({1, top})
    result = bench_training(cfg, worker_counts, repetitions=15)

    raw_ok = all(len(t["raw_seconds"]) == 15 for t in result["timings"])
    table_ok = list(result["speedups"]) == [str(w) for w in worker_counts]
    s1_exact = result["speedups"]["1"] == 1.0
    s_top = result["speedups"][str(top)]

    ok = raw_ok and table_ok and s1_exact
    report(
        9, "speedup table", ok,
        "S(1)=%.1f exact, S(%d)=%.2f, 15 reps each" % (result["speedups"]["1"], top, s_top),
    )
    if physical < 4:
        pytest.skip(
            "S(min(8,cores)) >= 2.5 bound applies to hosts with >= 4 physical "
            "cores; this host has %d" % physical
        )
    assert s_top >= 2.5, "S(%d) = %.2f below 2.5 on %d-core host" % (top, s_top, physical)


def test_criterion_10_determinism_and_persistence(default_cfg, pipeline_run, tmp_path):
    first_root = pipeline_run["root"]

    ds = generate_dataset(default_cfg)
    write_dataset(ds, default_cfg, tmp_path / "dataset")
    store = ModelStore(tmp_path / "store")
    enroll_all(store, ds, default_cfg)
    scored = score_probes(store, ds.probes)

    dataset_ok = all(
        (first_root / "dataset" / name).read_bytes() == (tmp_path / "dataset" / name).read_bytes()
        for name in ("enroll.jsonl", "probes.jsonl", "manifest.json")
    )
    store_files = sorted(p.name for p in (first_root / "store").iterdir())
    store_ok = store_files == sorted(p.name for p in (tmp_path / "store").iterdir()) and all(
        (first_root / "store" / name).read_bytes() == (tmp_path / "store" / name).read_bytes()
        for name in store_files
    )
    scores_ok = [p.score for p in pipeline_run["scored"]] == [p.score for p in scored]

    # store round trip preserves scores bit-exactly (fresh ModelStore re-reads disk)
    reread = ModelStore(tmp_path / "store")
    rescored = score_probes(reread, ds.probes)
    round_trip_ok = [p.score for p in scored] == [p.score for p in rescored]

    ok = dataset_ok and store_ok and scores_ok and round_trip_ok
    report(
        10, "determinism & persistence", ok,
        "dataset=%s store=%s scores=%s roundtrip=%s"
        % (dataset_ok, store_ok, scores_ok, round_trip_ok),
    )


def test_criterion_11_complexity_scaling():
    sizes = (16, 32, 64)  # users; per-user sample count fixed, so L*M doubles twice
    times = []
    for users in sizes:
        cfg = RunConfig(
            users=users,
            enroll_genuine=12, enroll_skilled=5, enroll_random=3,
            probe_genuine=1, probe_skilled=1, probe_random=1,
            workers=1, locals_per_user=4, hidden=8,
            max_epochs=60, err_goal=0.0,  # exact epoch counts: time scales with rows
        )
        ds = generate_dataset(cfg)
        pca = fit_population_pca(ds.enroll, cfg)
        grouped = group_rows_by_user(ds.enroll)
        train_cfg = cfg.train_config()
        reps = []
        for _ in range(5):
            t0 = time.perf_counter()
            train_many(grouped, pca, train_cfg)
            reps.append(time.perf_counter() - t0)
        times.append(statistics.median(reps))

    slope = float(
        np.polyfit(np.log([s * 20 for s in sizes]), np.log(times), 1)[0]
    )
    report(
        11, "complexity scaling", 0.8 <= slope <= 1.3,
        "times %s, log-log slope %.3f" % (["%.3fs" % t for t in times], slope),
    )
