"""Biometric error rates over scored probes.

Conventions: a probe is accepted iff score >= threshold (ties accept).  With
TG/FF the genuine probes accepted/rejected and FG/TF the forged probes
accepted/rejected:

    sensitivity = TG / (TG + FF)        specificity = TF / (TF + FG)
    FAR         = FG / (FG + TF)        FRR         = FF / (FF + TG)

so sensitivity = 1 - FRR and specificity = 1 - FAR hold exactly.  The equal
error rate is the crossing of FAR (nonincreasing in threshold) with FRR
(nondecreasing), linearly interpolated between sweep knots when no knot hits
the crossing exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricUndefinedError, WorkloadMismatchError


@dataclass(frozen=True)
class ScoredProbe:
    score: float
    genuine: bool


@dataclass(frozen=True)
class Confusion:
    true_genuine: int
    false_genuine: int
    true_forged: int
    false_forged: int

    @property
    def total(self) -> int:
        return (
            self.true_genuine + self.false_genuine
            + self.true_forged + self.false_forged
        )


@dataclass(frozen=True)
class Timing:
    """Wall-time measurement of one workload at one worker count."""

    workers: int
    seconds: float          # median of the raw repetitions
    workload: str
    raw: tuple[float, ...] = ()

    def __post_init__(self):
        if self.workers < 1 or self.seconds <= 0:
            raise ValueError("workers must be >= 1 and seconds positive")


def _split_scores(probes):
    genuine = np.array([p.score for p in probes if p.genuine], dtype=float)
    forged = np.array([p.score for p in probes if not p.genuine], dtype=float)
    for arr in (genuine, forged):
        if arr.size and not np.all(np.isfinite(arr)):
            raise ValueError("probe scores must be finite")
    return genuine, forged


def confusion_at(probes, threshold: float) -> Confusion:
    """Count accept/reject outcomes of every probe at one threshold."""
    probes = list(probes)
    if not probes:
        raise ValueError("need at least one scored probe")
    genuine, forged = _split_scores(probes)
    tg = int(np.count_nonzero(genuine >= threshold))
    fg = int(np.count_nonzero(forged >= threshold))
    return Confusion(
        true_genuine=tg,
        false_genuine=fg,
        true_forged=len(forged) - fg,
        false_forged=len(genuine) - tg,
    )


def far(c: Confusion) -> float:
    if c.false_genuine + c.true_forged == 0:
        raise MetricUndefinedError("no forged probes", code="NO_FORGED_PROBES")
    return c.false_genuine / (c.false_genuine + c.true_forged)


def frr(c: Confusion) -> float:
    if c.false_forged + c.true_genuine == 0:
        raise MetricUndefinedError("no genuine probes", code="NO_GENUINE_PROBES")
    return c.false_forged / (c.false_forged + c.true_genuine)


def sensitivity(c: Confusion) -> float:
    """TG / (TG + FF), computed as 1 - FRR so the identity is bit-exact."""
    return 1.0 - frr(c)


def specificity(c: Confusion) -> float:
    """TF / (TF + FG), computed as 1 - FAR so the identity is bit-exact."""
    return 1.0 - far(c)


def specificity_paper_eq2(c: Confusion) -> float:
    """Alternate published specificity variant TF / (TF + TG).

    Kept for comparison behind the --paper-eq2 report flag; the standard
    definition above is what every headline metric uses.
    """
    if c.true_forged + c.true_genuine == 0:
        raise MetricUndefinedError("no probes counted", code="NO_FORGED_PROBES")
    return c.true_forged / (c.true_forged + c.true_genuine)


def _sweep(probes):
    """FAR/FRR at every distinct score plus the endpoints 0 and 1."""
    genuine, forged = _split_scores(probes)
    if genuine.size == 0:
        raise MetricUndefinedError("no genuine probes", code="NO_GENUINE_PROBES")
    if forged.size == 0:
        raise MetricUndefinedError("no forged probes", code="NO_FORGED_PROBES")
    scores = np.concatenate([genuine, forged])
    thresholds = np.unique(np.concatenate([[0.0], scores, [1.0]]))
    g_sorted = np.sort(genuine)
    f_sorted = np.sort(forged)
    # accepted = count of scores >= t (ties accept)
    acc_g = genuine.size - np.searchsorted(g_sorted, thresholds, side="left")
    acc_f = forged.size - np.searchsorted(f_sorted, thresholds, side="left")
    far_curve = acc_f / forged.size
    frr_curve = (genuine.size - acc_g) / genuine.size
    return thresholds, far_curve, frr_curve


def far_frr_curve(probes) -> list[tuple[float, float, float]]:
    """Raw (threshold, FAR, FRR) triples over the sweep knots."""
    thresholds, far_c, frr_c = _sweep(probes)
    return [(float(t), float(a), float(r)) for t, a, r in zip(thresholds, far_c, frr_c)]


def eer(probes) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Sweeps the distinct scores (plus 0 and 1); if FAR == FRR exactly at a
    knot, that operating point is returned, otherwise the crossing is linearly
    interpolated between the two knots bracketing the sign change of FAR-FRR.
    """
    thresholds, far_c, frr_c = _sweep(probes)
    diff = far_c - frr_c
    exact = np.where(diff == 0.0)[0]
    if exact.size:
        i = int(exact[0])
        return float(far_c[i]), float(thresholds[i])

    # diff starts at +1 (t=0 accepts everything) and ends at -1 (scores < 1),
    # and is nonincreasing, so a sign change always exists for in-range scores.
    i = int(np.where(diff > 0)[0][-1])
    j = i + 1
    if j >= len(thresholds):
        raise ValueError("no FAR/FRR crossing; scores must lie strictly below 1")
    alpha = diff[i] / (diff[i] - diff[j])
    t_star = thresholds[i] + alpha * (thresholds[j] - thresholds[i])
    value = far_c[i] + alpha * (far_c[j] - far_c[i])
    return float(value), float(t_star)


def speedup(t1: Timing, tp: Timing) -> float:
    """Wall-time ratio T(1)/T(P) for the same workload."""
    if t1.workers != 1:
        raise ValueError("baseline timing must use exactly one worker")
    if t1.workload != tp.workload:
        raise WorkloadMismatchError(
            "cannot compare workloads %r and %r" % (t1.workload, tp.workload)
        )
    return t1.seconds / tp.seconds
