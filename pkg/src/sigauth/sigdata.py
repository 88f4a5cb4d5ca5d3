"""Synthetic dynamic-signature data.

A signing gesture is modelled as 12 inertial/orientation channels sampled at
100 Hz: triaxial acceleration (m/s^2), triaxial magnetic field (mT), azimuth/
pitch/roll (degrees) and triaxial angular velocity (rad/s).  Each user owns a
smooth prototype gesture (per channel: offset plus three seeded sinusoids);
genuine samples add small jitter, skilled forgeries additionally distort the
sinusoid amplitudes and phases, and random forgeries replay a different
prototype under the claimed user's name.

Everything here is a pure function of its arguments, so datasets are
reproducible byte-for-byte from a master seed.
"""

from __future__ import annotations

import json
import math
import hashlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import SampleFormatError
from .seeds import stable_seed

SAMPLE_RATE_HZ = 100.0
N_CHANNELS = 12
SINUSOIDS_PER_CHANNEL = 3

CHANNEL_NAMES = (
    "accel_x", "accel_y", "accel_z",
    "mag_x", "mag_y", "mag_z",
    "azimuth", "pitch", "roll",
    "gyro_x", "gyro_y", "gyro_z",
)

# Typical amplitude scale per channel, in channel units.  Chosen so synthetic
# readings stay in a plausible range for hand-held capture; jitter and
# distortion scales below are relative to these.
CHANNEL_SCALES = np.array(
    [2.0, 2.0, 2.0, 0.05, 0.05, 0.05, 45.0, 20.0, 20.0, 1.5, 1.5, 1.5]
)

# Capture-quality gate thresholds.
MIN_POINTS = 32
MIN_DURATION_S = 0.3
MIN_LIVE_CHANNELS = 2

# Skilled forgeries distort amplitude/phase at this multiple of the jitter
# noise level.
FORGERY_DISTORTION_FACTOR = 3.0


class SampleKind(str, Enum):
    GENUINE = "genuine"
    SKILLED_FORGERY = "skilled_forgery"
    RANDOM_FORGERY = "random_forgery"

    @property
    def is_genuine(self) -> bool:
        return self is SampleKind.GENUINE


@dataclass(frozen=True, eq=False)
class SignatureSample:
    """One captured signing gesture: timestamps (s) and a T x 12 channel matrix."""

    user_id: str
    kind: SampleKind
    timestamps: np.ndarray
    channels: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        ch = np.asarray(self.channels, dtype=float)
        if t.ndim != 1 or len(t) < 1:
            raise ValueError("timestamps must be a nonempty 1-D array")
        if ch.ndim != 2 or ch.shape[0] != len(t):
            raise ValueError("channels must be T x %d with T matching timestamps" % N_CHANNELS)
        if ch.shape[1] != N_CHANNELS:
            raise ValueError("expected %d channels, got %d" % (N_CHANNELS, ch.shape[1]))
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "channels", ch)

    @property
    def n_points(self) -> int:
        return len(self.timestamps)

    @property
    def duration(self) -> float:
        return float(self.timestamps[-1] - self.timestamps[0])

    def content_hash(self) -> str:
        """Stable digest of the full sample content; used for split-overlap checks."""
        h = hashlib.sha256()
        h.update(self.user_id.encode("utf-8"))
        h.update(self.kind.value.encode("utf-8"))
        h.update(np.ascontiguousarray(self.timestamps).tobytes())
        h.update(np.ascontiguousarray(self.channels).tobytes())
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class UserPrototype:
    """Seeded parameter set for one user's gesture curve family."""

    user_id: str
    master_seed: int
    duration: float
    offsets: np.ndarray   # (12,)
    amplitudes: np.ndarray  # (12, 3)
    frequencies: np.ndarray  # (12, 3), Hz
    phases: np.ndarray    # (12, 3), radians

    def params_digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.offsets, self.amplitudes, self.frequencies, self.phases):
            h.update(np.ascontiguousarray(a).tobytes())
        h.update(repr(self.duration).encode())
        return h.hexdigest()


@dataclass(frozen=True)
class QualityReport:
    """Outcome of the capture-quality gate; passed iff reasons is empty."""

    passed: bool
    reasons: tuple[str, ...]


def make_prototype(master_seed: int, user_id: str) -> UserPrototype:
    """Build the deterministic gesture prototype for (master_seed, user_id)."""
    rng = np.random.default_rng(stable_seed(master_seed, "prototype", user_id))
    duration = float(rng.uniform(1.2, 3.0))
    offsets = rng.uniform(-1.0, 1.0, N_CHANNELS) * CHANNEL_SCALES
    amplitudes = (
        rng.uniform(0.4, 1.2, (N_CHANNELS, SINUSOIDS_PER_CHANNEL))
        * CHANNEL_SCALES[:, None]
    )
    frequencies = rng.uniform(0.8, 4.0, (N_CHANNELS, SINUSOIDS_PER_CHANNEL))
    phases = rng.uniform(0.0, 2.0 * math.pi, (N_CHANNELS, SINUSOIDS_PER_CHANNEL))
    return UserPrototype(
        user_id=user_id,
        master_seed=int(master_seed),
        duration=duration,
        offsets=offsets,
        amplitudes=amplitudes,
        frequencies=frequencies,
        phases=phases,
    )


def _curve_matrix(proto: UserPrototype, amplitudes, phases) -> tuple[np.ndarray, np.ndarray]:
    n = int(round(proto.duration * SAMPLE_RATE_HZ))
    t = np.arange(max(n, 2)) / SAMPLE_RATE_HZ
    # (T, 12, 3) sinusoid bank summed over the last axis
    arg = 2.0 * math.pi * t[:, None, None] * proto.frequencies[None] + phases[None]
    ch = proto.offsets[None, :] + np.sum(amplitudes[None] * np.sin(arg), axis=2)
    return t, ch


def ideal_curves(proto: UserPrototype) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free gesture curves for a prototype: (timestamps, T x 12 channels)."""
    return _curve_matrix(proto, proto.amplitudes, proto.phases)


def synth_sample(
    proto: UserPrototype,
    kind: SampleKind,
    noise_level: float,
    sample_seed: int,
    forger: UserPrototype | None = None,
) -> SignatureSample:
    """Synthesize one sample of the given kind for ``proto``'s user.

    Genuine samples are the prototype curves plus per-reading Gaussian jitter
    scaled by ``noise_level``.  Skilled forgeries distort sinusoid amplitudes
    and phases at FORGERY_DISTORTION_FACTOR x noise_level before adding the
    same jitter.  Random forgeries replay another prototype's curves under
    this user's name: ``forger`` when given, otherwise a decoy prototype
    derived deterministically from (proto, sample_seed).

    Deterministic in all arguments.
    """
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")
    kind = SampleKind(kind)
    rng = np.random.default_rng(
        stable_seed(proto.master_seed, proto.user_id, kind.value, int(sample_seed))
    )

    if kind is SampleKind.GENUINE:
        source = proto
        amplitudes, phases = proto.amplitudes, proto.phases
    elif kind is SampleKind.SKILLED_FORGERY:
        source = proto
        distortion = FORGERY_DISTORTION_FACTOR * noise_level
        amplitudes = proto.amplitudes * (
            1.0 + distortion * rng.standard_normal(proto.amplitudes.shape)
        )
        phases = proto.phases + distortion * rng.standard_normal(proto.phases.shape)
    else:
        if forger is None:
            forger = make_prototype(
                proto.master_seed, "~decoy~%s~%d" % (proto.user_id, int(sample_seed))
            )
        source = forger
        amplitudes, phases = forger.amplitudes, forger.phases

    t, ch = _curve_matrix(source, amplitudes, phases)
    jitter = noise_level * CHANNEL_SCALES[None, :] * rng.standard_normal(ch.shape)
    return SignatureSample(
        user_id=proto.user_id, kind=kind, timestamps=t, channels=ch + jitter
    )


def check_quality(sample: SignatureSample) -> QualityReport:
    """Run the capture-quality gate.  Failures are reported, never raised."""
    reasons = []
    if sample.n_points < MIN_POINTS:
        reasons.append("TOO_FEW_POINTS")
    if sample.duration < MIN_DURATION_S:
        reasons.append("TOO_SHORT")
    if not np.all(np.isfinite(sample.channels)):
        reasons.append("NON_FINITE")
    else:
        live = np.count_nonzero(np.var(sample.channels, axis=0) > 0.0)
        if live < MIN_LIVE_CHANNELS:
            reasons.append("LOW_VARIANCE")
    return QualityReport(passed=not reasons, reasons=tuple(reasons))


def _sample_to_record(sample: SignatureSample) -> dict:
    return {
        "user_id": sample.user_id,
        "kind": sample.kind.value,
        "t": sample.timestamps.tolist(),
        "ch": sample.channels.T.tolist(),  # 12 channel-major lists
    }


def _record_to_sample(rec: dict, line: int) -> SignatureSample:
    try:
        user_id = rec["user_id"]
        kind = SampleKind(rec["kind"])
        t = rec["t"]
        ch = rec["ch"]
    except (KeyError, TypeError, ValueError) as exc:
        raise SampleFormatError(
            "line %d: missing or invalid field (%s)" % (line, exc),
            code="MALFORMED_ROW", line=line,
        ) from exc
    if not isinstance(ch, list) or len(ch) != N_CHANNELS:
        raise SampleFormatError(
            "line %d: expected %d channels, got %d"
            % (line, N_CHANNELS, len(ch) if isinstance(ch, list) else -1),
            code="CHANNEL_COUNT", line=line,
        )
    try:
        return SignatureSample(
            user_id=user_id,
            kind=kind,
            timestamps=np.asarray(t, dtype=float),
            channels=np.asarray(ch, dtype=float).T,
        )
    except ValueError as exc:
        raise SampleFormatError(
            "line %d: %s" % (line, exc), code="MALFORMED_ROW", line=line
        ) from exc


def save_samples(samples, path) -> None:
    """Write samples as JSON lines (one record per sample, order preserved)."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(_sample_to_record(sample), sort_keys=True))
            fh.write("\n")


def load_samples(path) -> list[SignatureSample]:
    """Read a JSONL sample file; round-trips save_samples, order preserving."""
    path = Path(path)
    if not path.exists():
        raise SampleFormatError("no such sample file: %s" % path, code="MISSING_FILE")
    samples = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SampleFormatError(
                    "line %d: not valid JSON" % line_no,
                    code="MALFORMED_ROW", line=line_no,
                ) from exc
            samples.append(_record_to_sample(rec, line_no))
    return samples
