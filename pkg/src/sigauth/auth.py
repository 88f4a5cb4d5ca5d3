"""Enrollment, verification and the priority-tiered acceptance gate.

Users enroll with genuine and forged signature samples; a per-user ensemble is
trained and persisted in a file-backed store (one checksummed JSON record per
user plus an index).  Verification scores a probe against the stored ensemble
and accepts iff score >= threshold, where the threshold comes from the user's
priority tier: higher-priority users face stricter thresholds.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from types import MappingProxyType

from .errors import (
    CorruptRecordError,
    OneClassError,
    QualityError,
    UnknownUserError,
)
from .features import assemble_matrix
from .pca import PcaModel, pca_model_id
from .seeds import stable_seed
from .sigdata import SampleKind, SignatureSample, check_quality, make_prototype, synth_sample
from .training import (
    EnsembleNet,
    TrainConfig,
    WorkerPool,
    ensemble_from_dict,
    ensemble_score,
    ensemble_to_dict,
    train_user,
)

_USER_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


class Priority(IntEnum):
    REGULAR_STAFF = 1
    PRIVILEGED_STAFF = 2
    PRIVILEGED_PATIENT = 3
    VIP_PATIENT = 4


DEFAULT_THRESHOLDS = MappingProxyType(
    {
        Priority.REGULAR_STAFF: 0.50,
        Priority.PRIVILEGED_STAFF: 0.60,
        Priority.PRIVILEGED_PATIENT: 0.75,
        Priority.VIP_PATIENT: 0.90,
    }
)


@dataclass(frozen=True)
class ThresholdPolicy:
    """Acceptance threshold per priority tier; strictly increasing with tier."""

    thresholds: MappingProxyType

    def __post_init__(self):
        values = [self.thresholds.get(p) for p in Priority]
        if any(v is None for v in values):
            raise ValueError("policy must cover all four priorities")
        if any(not (0.0 < v < 1.0) for v in values):
            raise ValueError("thresholds must lie in (0, 1)")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("thresholds must strictly increase with priority")

    @classmethod
    def default(cls) -> "ThresholdPolicy":
        return cls(DEFAULT_THRESHOLDS)

    @classmethod
    def from_floats(cls, low, avg, high, vhigh) -> "ThresholdPolicy":
        return cls(
            MappingProxyType(
                {
                    Priority.REGULAR_STAFF: float(low),
                    Priority.PRIVILEGED_STAFF: float(avg),
                    Priority.PRIVILEGED_PATIENT: float(high),
                    Priority.VIP_PATIENT: float(vhigh),
                }
            )
        )


def threshold_for_priority(policy: ThresholdPolicy, priority: Priority) -> float:
    """Look up the acceptance threshold for a priority tier (total function)."""
    return float(policy.thresholds[Priority(priority)])


@dataclass(frozen=True, eq=False)
class UserRecord:
    user_id: str
    priority: Priority
    version: int
    ensemble: EnsembleNet
    meta: dict


@dataclass(frozen=True)
class Decision:
    """Verification outcome; accepted iff score >= threshold absent errors."""

    user_id: str
    score: float | None
    threshold: float
    priority: Priority | None
    accepted: bool
    reason: str


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _checksum(payload: dict) -> str:
    return hashlib.sha256(_canonical(payload)).hexdigest()


class ModelStore:
    """One checksummed JSON record per user, plus an index and a shared
    projection-model record.  Records are crash-evident: any byte damage
    surfaces as CORRUPT_RECORD on load."""

    INDEX_NAME = "index"
    PCA_NAME = "pca.model"

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _record_path(self, user_id: str) -> Path:
        if not _USER_ID_RE.match(user_id):
            raise ValueError("user_id must match %s" % _USER_ID_RE.pattern)
        return self.root / ("%s.rec" % user_id)

    def _read_checked(self, path: Path, missing_exc) -> dict:
        if not path.exists():
            raise missing_exc
        try:
            record = json.loads(path.read_text(encoding="utf-8"))
            payload = record["payload"]
            declared = record["checksum"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorruptRecordError("unreadable record %s: %s" % (path.name, exc)) from exc
        if _checksum(payload) != declared:
            raise CorruptRecordError("checksum mismatch in %s" % path.name)
        return payload

    def _write_checked(self, path: Path, payload: dict) -> None:
        record = {"payload": payload, "checksum": _checksum(payload)}
        path.write_text(json.dumps(record, sort_keys=True), encoding="utf-8")

    def _load_index(self) -> dict:
        path = self.root / self.INDEX_NAME
        if not path.exists():
            return {"users": {}}
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CorruptRecordError("store index is unreadable") from exc

    def _save_index(self, index: dict) -> None:
        (self.root / self.INDEX_NAME).write_text(
            json.dumps(index, sort_keys=True), encoding="utf-8"
        )

    def users(self) -> list[str]:
        return sorted(self._load_index()["users"])

    def save_pca(self, model: PcaModel) -> str:
        self._write_checked(self.root / self.PCA_NAME, model.to_dict())
        return pca_model_id(model)

    def load_pca(self) -> tuple[PcaModel, str]:
        payload = self._read_checked(
            self.root / self.PCA_NAME,
            UnknownUserError("store has no projection model"),
        )
        model = PcaModel.from_dict(payload)
        return model, pca_model_id(model)

    def save_user(self, record: UserRecord) -> UserRecord:
        """Persist a record, bumping the stored version (last writer wins)."""
        index = self._load_index()
        version = index["users"].get(record.user_id, 0) + 1
        payload = {
            "user_id": record.user_id,
            "priority": int(record.priority),
            "version": version,
            "meta": record.meta,
            "ensemble": ensemble_to_dict(record.ensemble),
        }
        self._write_checked(self._record_path(record.user_id), payload)
        index["users"][record.user_id] = version
        self._save_index(index)
        return UserRecord(
            user_id=record.user_id,
            priority=record.priority,
            version=version,
            ensemble=record.ensemble,
            meta=record.meta,
        )

    def load_user(self, user_id: str) -> UserRecord:
        payload = self._read_checked(
            self._record_path(user_id),
            UnknownUserError("no enrolled user %r" % user_id),
        )
        return UserRecord(
            user_id=payload["user_id"],
            priority=Priority(payload["priority"]),
            version=int(payload["version"]),
            ensemble=ensemble_from_dict(payload["ensemble"]),
            meta=payload["meta"],
        )


def _synthesize_negatives(user_id: str, n: int, cfg: TrainConfig, noise: float):
    """Deterministic decoy forgeries for callers that supply only genuine samples."""
    negatives = []
    for i in range(n):
        decoy = make_prototype(
            stable_seed(cfg.seed, "enroll-negatives", user_id, i),
            "~neg~%s~%d" % (user_id, i),
        )
        sample = synth_sample(decoy, SampleKind.GENUINE, noise, i)
        negatives.append(
            SignatureSample(
                user_id=user_id,
                kind=SampleKind.RANDOM_FORGERY,
                timestamps=sample.timestamps,
                channels=sample.channels,
            )
        )
    return negatives


def enroll(
    store: ModelStore,
    user_id: str,
    priority: Priority,
    samples,
    cfg: TrainConfig,
    min_enroll: int = 25,
    negative_noise: float = 0.05,
    pool: WorkerPool | None = None,
) -> UserRecord:
    """Quality-check, train and persist one user.

    ``samples`` should contain genuine and forged captures; when only genuine
    ones are supplied, deterministic decoy forgeries are synthesized so the
    verifier still sees two classes.  Nothing is persisted on failure.
    """
    samples = list(samples)
    reports = [check_quality(s) for s in samples]
    failing = [(i, rep) for i, rep in enumerate(reports) if not rep.passed]
    if failing:
        indices = tuple(i for i, _ in failing)
        reasons = tuple(sorted({r for _, rep in failing for r in rep.reasons}))
        raise QualityError(
            "samples at indices %s fail the quality gate" % (indices,),
            indices=indices, reasons=reasons,
        )

    n_genuine = sum(1 for s in samples if s.kind.is_genuine)
    n_forged = len(samples) - n_genuine
    if n_genuine < min_enroll:
        raise OneClassError(
            "enrollment needs >= %d genuine samples, got %d" % (min_enroll, n_genuine)
        )
    if n_forged == 0:
        extra = _synthesize_negatives(
            user_id, max(1, int(math.ceil(0.6 * n_genuine))), cfg, negative_noise
        )
        samples = samples + extra
        n_forged = len(extra)

    pca, _ = store.load_pca()
    rows = assemble_matrix(samples)
    ensemble = train_user(user_id, rows, pca, cfg, pool=pool)
    meta = {
        "n_genuine": n_genuine,
        "n_forged": n_forged,
        "duration_span_s": [
            min(s.duration for s in samples),
            max(s.duration for s in samples),
        ],
    }
    record = UserRecord(
        user_id=user_id, priority=Priority(priority), version=0,
        ensemble=ensemble, meta=meta,
    )
    return store.save_user(record)


def verify(
    store: ModelStore, user_id: str, sample: SignatureSample, threshold: float
) -> Decision:
    """Score a probe against the stored ensemble; accept iff score >= threshold."""
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    record = store.load_user(user_id)
    report = check_quality(sample)
    if not report.passed:
        return Decision(
            user_id=user_id, score=None, threshold=threshold,
            priority=record.priority, accepted=False,
            reason="QUALITY:" + ",".join(report.reasons),
        )
    pca, _ = store.load_pca()
    score = ensemble_score(record.ensemble, pca, sample)
    accepted = score >= threshold
    return Decision(
        user_id=user_id, score=score, threshold=threshold,
        priority=record.priority, accepted=accepted,
        reason="OK" if accepted else "BELOW_THRESHOLD",
    )


def security_check(
    store: ModelStore,
    user_id: str,
    sample: SignatureSample,
    policy: ThresholdPolicy | None = None,
) -> Decision:
    """Verify at the threshold owed to the user's stored priority tier."""
    policy = policy or ThresholdPolicy.default()
    record = store.load_user(user_id)
    threshold = threshold_for_priority(policy, record.priority)
    return verify(store, user_id, sample, threshold)
