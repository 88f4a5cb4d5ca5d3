"""End-to-end orchestration: dataset synthesis, population PCA, bulk
enrollment and probe scoring.

Enrollment fits one projection model over all enrollment features (covariance
via the partitioned map-reduce executor), then trains every user's ensemble.
Probes are extra samples generated disjoint from the enrollment set; random
forgery probes replay a different roster member's gesture under the claimed
user's name.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .auth import ModelStore, Priority, UserRecord
from .config import RunConfig
from .errors import OverlappingSplitError
from .features import assemble_matrix
from .mapreduce import covariance_stats, finalize_covariance
from .metrics import ScoredProbe
from .pca import PcaModel, build_model
from .sigdata import (
    SampleKind,
    SignatureSample,
    load_samples,
    make_prototype,
    save_samples,
    synth_sample,
)
from .training import WorkerPool, ensemble_score, train_many

ENROLL_FILE = "enroll.jsonl"
PROBE_FILE = "probes.jsonl"
MANIFEST_FILE = "manifest.json"

# Probe sample seeds start far above enrollment seeds so the two splits can
# never collide even if the per-user counts are reconfigured.
_PROBE_SEED_BASE = 1_000_000


@dataclass(frozen=True)
class Dataset:
    enroll: list[SignatureSample]
    probes: list[SignatureSample]
    priorities: dict[str, Priority]


def user_ids(cfg: RunConfig) -> list[str]:
    return ["u%04d" % i for i in range(cfg.users)]


def priority_for_index(i: int) -> Priority:
    return Priority((i % 4) + 1)


def _user_samples(cfg, protos, idx, kinds_counts, seed_base):
    proto = protos[idx]
    out = []
    for kind, count in kinds_counts:
        for j in range(count):
            forger = None
            if kind is SampleKind.RANDOM_FORGERY:
                # replay another roster member's gesture as this user
                forger = protos[(idx + 1 + j) % len(protos)]
            out.append(
                synth_sample(proto, kind, cfg.noise_level, seed_base + j, forger=forger)
            )
    return out


def generate_dataset(cfg: RunConfig) -> Dataset:
    """Deterministically synthesize the enrollment and probe splits."""
    ids = user_ids(cfg)
    protos = [make_prototype(cfg.seed, uid) for uid in ids]
    enroll, probes = [], []
    for i, uid in enumerate(ids):
        enroll.extend(
            _user_samples(
                cfg, protos, i,
                [
                    (SampleKind.GENUINE, cfg.enroll_genuine),
                    (SampleKind.SKILLED_FORGERY, cfg.enroll_skilled),
                    (SampleKind.RANDOM_FORGERY, cfg.enroll_random),
                ],
                seed_base=0,
            )
        )
        probes.extend(
            _user_samples(
                cfg, protos, i,
                [
                    (SampleKind.GENUINE, cfg.probe_genuine),
                    (SampleKind.SKILLED_FORGERY, cfg.probe_skilled),
                    (SampleKind.RANDOM_FORGERY, cfg.probe_random),
                ],
                seed_base=_PROBE_SEED_BASE,
            )
        )
    priorities = {uid: priority_for_index(i) for i, uid in enumerate(ids)}
    return Dataset(enroll=enroll, probes=probes, priorities=priorities)


def _file_checksum(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_dataset(ds: Dataset, cfg: RunConfig, outdir) -> dict:
    """Write enroll/probe JSONL files plus a manifest; returns the manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    enroll_path = outdir / ENROLL_FILE
    probe_path = outdir / PROBE_FILE
    save_samples(ds.enroll, enroll_path)
    save_samples(ds.probes, probe_path)
    manifest = {
        "config": cfg.to_dict(),
        "users": cfg.users,
        "enroll_samples": len(ds.enroll),
        "probe_samples": len(ds.probes),
        "priorities": {u: int(p) for u, p in ds.priorities.items()},
        "checksums": {
            ENROLL_FILE: _file_checksum(enroll_path),
            PROBE_FILE: _file_checksum(probe_path),
        },
    }
    (outdir / MANIFEST_FILE).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return manifest


def load_dataset(datadir) -> Dataset:
    datadir = Path(datadir)
    manifest = json.loads((datadir / MANIFEST_FILE).read_text(encoding="utf-8"))
    return Dataset(
        enroll=load_samples(datadir / ENROLL_FILE),
        probes=load_samples(datadir / PROBE_FILE),
        priorities={u: Priority(p) for u, p in manifest["priorities"].items()},
    )


def check_disjoint_splits(enroll, probes) -> None:
    """Raise OVERLAPPING_SPLIT if any probe repeats an enrollment sample."""
    seen = {s.content_hash() for s in enroll}
    for i, probe in enumerate(probes):
        if probe.content_hash() in seen:
            raise OverlappingSplitError(
                "probe %d duplicates an enrollment sample for user %s"
                % (i, probe.user_id)
            )


def fit_population_pca(samples, cfg: RunConfig) -> PcaModel:
    """One projection model over all enrollment features (map-reduce covariance)."""
    matrix = assemble_matrix(samples)
    workers = min(cfg.workers, max(1, matrix.n_rows))
    stats = covariance_stats(matrix, workers=workers)
    cov = finalize_covariance(stats)
    mu = stats.sum / stats.n
    return build_model(
        mu, cov,
        variance_target=cfg.variance_target,
        max_components=cfg.max_components,
    )


def group_rows_by_user(samples):
    matrix = assemble_matrix(samples)
    grouped = {}
    for uid in dict.fromkeys(matrix.user_ids):  # first-seen order
        grouped[uid] = matrix.for_user(uid)
    return grouped


def enroll_all(
    store: ModelStore,
    ds: Dataset,
    cfg: RunConfig,
    pool: WorkerPool | None = None,
) -> dict[str, UserRecord]:
    """Fit the shared projection model, then train and persist every user."""
    pca = fit_population_pca(ds.enroll, cfg)
    store.save_pca(pca)
    grouped = group_rows_by_user(ds.enroll)
    ensembles = train_many(grouped, pca, cfg.train_config(), pool=pool)
    records = {}
    for uid, ensemble in ensembles.items():
        n_genuine = int(sum(grouped[uid].labels))
        record = UserRecord(
            user_id=uid,
            priority=ds.priorities.get(uid, Priority.REGULAR_STAFF),
            version=0,
            ensemble=ensemble,
            meta={
                "n_genuine": n_genuine,
                "n_forged": grouped[uid].n_rows - n_genuine,
            },
        )
        records[uid] = store.save_user(record)
    return records


def score_probes(store: ModelStore, probes) -> list[ScoredProbe]:
    """Score every probe against its claimed user's stored ensemble."""
    pca, _ = store.load_pca()
    ensembles = {}
    scored = []
    for probe in probes:
        if probe.user_id not in ensembles:
            ensembles[probe.user_id] = store.load_user(probe.user_id).ensemble
        score = ensemble_score(ensembles[probe.user_id], pca, probe)
        scored.append(ScoredProbe(score=score, genuine=probe.kind.is_genuine))
    return scored
