"""Per-user ensemble training over a bounded worker pool.

Each user's projected rows are split round-robin into shards; every shard
trains its own seeded local network and the ordered collection of locals forms
the user's ensemble, scored by mean fusion.  Shard tasks are pure functions of
their payload, so results are identical for any worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import OneClassError, PcaMismatchError
from .features import LABEL_GENUINE, FeatureMatrix, extract_features
from .mapreduce import round_robin_indices
from .nnet import (
    Network,
    RpropConfig,
    TrainStop,
    forward,
    net_from_dict,
    net_to_dict,
    netcreate,
    sigtrain,
)
from .pca import PcaModel, pca_model_id, project, project_rows
from .seeds import stable_seed
from .sigdata import SignatureSample


@dataclass
class TrainConfig:
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    n_locals: int = 4
    hidden: int = 16
    seed: int = 42
    rprop: RpropConfig = field(default_factory=RpropConfig)
    stop: TrainStop = field(default_factory=TrainStop)

    def __post_init__(self):
        if self.workers < 1 or self.n_locals < 1:
            raise ValueError("workers and n_locals must be >= 1")


@dataclass(frozen=True, eq=False)
class EnsembleNet:
    """Ordered local networks for one user plus their final training errors."""

    user_id: str
    locals_: tuple[Network, ...]
    local_errors: tuple[float, ...]
    trained_on_full: tuple[bool, ...]  # per local: one-class shard fallback hit
    pca_ref: str

    @property
    def n_locals(self) -> int:
        return len(self.locals_)


class WorkerPool:
    """Bounded ordered-map executor; runs inline when workers == 1."""

    def __init__(self, workers: int = 1):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = workers
        self._executor = (
            ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
        )

    def map(self, fn, items):
        items = list(items)
        if self._executor is None or not items:
            return [fn(item) for item in items]
        # small chunks keep the tail balanced across workers
        chunk = max(1, len(items) // (self.workers * 16))
        return list(self._executor.map(fn, items, chunksize=chunk))

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def build_target_vector(rows: FeatureMatrix) -> np.ndarray:
    """Targets aligned with row order: genuine 1.0, forged 0.0.

    Rows containing a single class cannot train a verifier and raise ONE_CLASS.
    """
    labels = np.asarray(rows.labels)
    n_genuine = int((labels == LABEL_GENUINE).sum())
    if labels.size == 0 or n_genuine == 0 or n_genuine == labels.size:
        raise OneClassError(
            "need both genuine and forged rows, got %d genuine of %d"
            % (n_genuine, labels.size)
        )
    return (labels == LABEL_GENUINE).astype(float)


def _local_task(payload: dict) -> dict:
    """Train one shard's local network; module-level so it pickles cleanly."""
    net = netcreate(tuple(payload["layout"]), payload["seed"])
    net, err = sigtrain(
        net,
        payload["inputs"],
        payload["targets"],
        stop=payload["stop"],
        rprop=payload["rprop"],
    )
    return {
        "shard": payload["shard"],
        "params": net.params(),  # ndarrays pickle compactly between processes
        "error": err,
        "full_fallback": payload["full_fallback"],
    }


def _shard_payloads(user_id, projected, targets, cfg: TrainConfig):
    n = projected.shape[0]
    layout = (projected.shape[1], cfg.hidden, 1)
    user_seed = stable_seed(cfg.seed, "train", user_id)
    payloads = []
    for shard, idx in enumerate(round_robin_indices(n, min(cfg.n_locals, n))):
        shard_targets = targets[idx]
        fallback = bool(np.all(shard_targets == 1.0) or np.all(shard_targets == 0.0))
        if fallback:
            # one-class shard: train this local on the full user row set instead
            inputs, outs = projected, targets
        else:
            inputs, outs = projected[idx], shard_targets
        payloads.append(
            {
                "shard": shard,
                "layout": layout,
                "seed": user_seed ^ shard,
                "inputs": inputs,
                "targets": outs,
                "stop": cfg.stop,
                "rprop": cfg.rprop,
                "full_fallback": fallback,
            }
        )
    return payloads


def _assemble(user_id, results, pca_ref) -> EnsembleNet:
    results = sorted(results, key=lambda r: r["shard"])
    return EnsembleNet(
        user_id=user_id,
        locals_=tuple(Network(*r["params"]) for r in results),
        local_errors=tuple(float(r["error"]) for r in results),
        trained_on_full=tuple(bool(r["full_fallback"]) for r in results),
        pca_ref=pca_ref,
    )


def train_user(
    user_id: str,
    rows: FeatureMatrix,
    pca: PcaModel,
    cfg: TrainConfig,
    pool: WorkerPool | None = None,
) -> EnsembleNet:
    """Train one user's ensemble from that user's feature rows."""
    targets = build_target_vector(rows)
    projected = project_rows(pca, rows.values)
    payloads = _shard_payloads(user_id, projected, targets, cfg)
    if pool is None:
        with WorkerPool(cfg.workers) as own_pool:
            results = own_pool.map(_local_task, payloads)
    else:
        results = pool.map(_local_task, payloads)
    return _assemble(user_id, results, pca_model_id(pca))


def train_many(
    rows_by_user: dict[str, FeatureMatrix],
    pca: PcaModel,
    cfg: TrainConfig,
    pool: WorkerPool | None = None,
) -> dict[str, EnsembleNet]:
    """Train every user's ensemble, flattening all shard tasks onto one pool."""
    pca_ref = pca_model_id(pca)
    order = list(rows_by_user)
    all_payloads, owners = [], []
    for user_id in order:
        rows = rows_by_user[user_id]
        targets = build_target_vector(rows)
        projected = project_rows(pca, rows.values)
        for payload in _shard_payloads(user_id, projected, targets, cfg):
            all_payloads.append(payload)
            owners.append(user_id)

    if pool is None:
        with WorkerPool(cfg.workers) as own_pool:
            results = own_pool.map(_local_task, all_payloads)
    else:
        results = pool.map(_local_task, all_payloads)

    grouped: dict[str, list] = {u: [] for u in order}
    for user_id, result in zip(owners, results):
        grouped[user_id].append(result)
    return {u: _assemble(u, grouped[u], pca_ref) for u in order}


def ensemble_score(
    ens: EnsembleNet, pca: PcaModel, sample: SignatureSample, fusion: str = "mean"
) -> float:
    """Fused score of the local networks on the projected sample features.

    ``mean`` (the default and the calibrated path) averages the local scores;
    ``vote`` returns the fraction of locals scoring at least 0.5, nudged into
    the open interval so downstream threshold comparisons stay total.
    """
    if ens.pca_ref != pca_model_id(pca):
        raise PcaMismatchError(
            "ensemble for %s was trained against a different projection model"
            % ens.user_id
        )
    z = project(pca, extract_features(sample).values)
    scores = [forward(net, z) for net in ens.locals_]
    if fusion == "mean":
        return float(sum(scores) / len(scores))
    if fusion == "vote":
        fraction = sum(1 for s in scores if s >= 0.5) / len(scores)
        return float(
            min(max(fraction, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
        )
    raise ValueError("unknown fusion %r (expected 'mean' or 'vote')" % fusion)


def ensemble_to_dict(ens: EnsembleNet) -> dict:
    return {
        "user_id": ens.user_id,
        "locals": [net_to_dict(n) for n in ens.locals_],
        "local_errors": list(ens.local_errors),
        "trained_on_full": list(ens.trained_on_full),
        "pca_ref": ens.pca_ref,
    }


def ensemble_from_dict(d: dict) -> EnsembleNet:
    return EnsembleNet(
        user_id=d["user_id"],
        locals_=tuple(net_from_dict(n) for n in d["locals"]),
        local_errors=tuple(float(e) for e in d["local_errors"]),
        trained_on_full=tuple(bool(b) for b in d["trained_on_full"]),
        pca_ref=d["pca_ref"],
    )
