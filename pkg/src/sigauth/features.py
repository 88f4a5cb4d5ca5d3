"""Fixed-length feature summaries of variable-length signature samples.

Layout (D = 64): five order statistics per channel -- mean, population std,
min, max, RMS -- over the 12 channels (60 slots), then four whole-gesture
slots: duration in seconds, point count, mean acceleration magnitude and mean
angular-speed magnitude.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QualityError
from .sigdata import CHANNEL_NAMES, SignatureSample, check_quality

CHANNEL_STATS = ("mean", "std", "min", "max", "rms")

FEATURE_NAMES = tuple(
    "%s_%s" % (ch, stat) for ch in CHANNEL_NAMES for stat in CHANNEL_STATS
) + ("duration_s", "n_points", "accel_mag_mean", "gyro_mag_mean")

FEATURE_DIM = len(FEATURE_NAMES)  # 64

LABEL_GENUINE = 1
LABEL_FORGED = 0


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray  # (FEATURE_DIM,)
    label: int          # 1 genuine, 0 forged
    user_id: str


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """N feature rows with aligned labels and user ids (row order = input order)."""

    values: np.ndarray        # (N, FEATURE_DIM)
    labels: np.ndarray        # (N,) ints
    user_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or (v.size and v.shape[1] != FEATURE_DIM):
            raise ValueError("values must be N x %d" % FEATURE_DIM)
        if len(self.labels) != v.shape[0] or len(self.user_ids) != v.shape[0]:
            raise ValueError("labels/user_ids must align with rows")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=int))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def row(self, i: int) -> FeatureVector:
        return FeatureVector(self.values[i], int(self.labels[i]), self.user_ids[i])

    def for_user(self, user_id: str) -> "FeatureMatrix":
        mask = np.array([u == user_id for u in self.user_ids])
        return FeatureMatrix(
            self.values[mask],
            self.labels[mask],
            tuple(u for u in self.user_ids if u == user_id),
        )


def extract_features(sample: SignatureSample) -> FeatureVector:
    """Summarize one quality-passing sample into the 64-slot layout."""
    report = check_quality(sample)
    if not report.passed:
        raise QualityError(
            "sample fails quality gate: %s" % ",".join(report.reasons),
            reasons=report.reasons,
        )
    ch = sample.channels
    per_channel = np.stack(
        [
            ch.mean(axis=0),
            ch.std(axis=0),  # population std: defined even for T=1
            ch.min(axis=0),
            ch.max(axis=0),
            np.sqrt(np.mean(ch * ch, axis=0)),
        ],
        axis=1,
    )  # (12, 5)
    accel_mag = np.sqrt(np.sum(ch[:, 0:3] ** 2, axis=1)).mean()
    gyro_mag = np.sqrt(np.sum(ch[:, 9:12] ** 2, axis=1)).mean()
    values = np.concatenate(
        [
            per_channel.reshape(-1),
            [sample.duration, float(sample.n_points), accel_mag, gyro_mag],
        ]
    )
    label = LABEL_GENUINE if sample.kind.is_genuine else LABEL_FORGED
    return FeatureVector(values=values, label=label, user_id=sample.user_id)


def assemble_matrix(samples) -> FeatureMatrix:
    """Extract features for every sample, preserving order.

    Quality failures are reported with the offending row index.
    """
    rows, labels, users = [], [], []
    for i, sample in enumerate(samples):
        try:
            fv = extract_features(sample)
        except QualityError as exc:
            raise QualityError(
                "sample %d fails quality gate: %s" % (i, ",".join(exc.reasons)),
                indices=(i,), reasons=exc.reasons,
            ) from exc
        rows.append(fv.values)
        labels.append(fv.label)
        users.append(fv.user_id)
    values = np.array(rows, dtype=float) if rows else np.zeros((0, FEATURE_DIM))
    return FeatureMatrix(values=values, labels=np.array(labels, dtype=int),
                         user_ids=tuple(users))


def write_feature_csv(matrix: FeatureMatrix, path) -> None:
    """Dump a feature matrix as CSV: header row, then D values + label + user_id."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(FEATURE_NAMES) + ",label,user_id\n")
        for i in range(matrix.n_rows):
            vals = ",".join(repr(float(v)) for v in matrix.values[i])
            fh.write("%s,%d,%s\n" % (vals, matrix.labels[i], matrix.user_ids[i]))
