"""ISO/IEC 30107-3 error rates over finite score sets.

Decision rule, fixed module-wide: a presentation is classified as an
attack iff score >= tau (scores are attack likelihoods, ties count as
attack classifications). All metrics are exact threshold sweeps over the
observed score values plus sentinels; nothing is binned or approximated
except the D-EER crossing, which is linearly interpolated between
adjacent operating points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, EmptyClass, EmptyList


@dataclass(frozen=True, eq=False)
class ScoreSet:
    attack_scores: np.ndarray
    bonafide_scores: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.attack_scores, dtype=np.float64)
        b = np.asarray(self.bonafide_scores, dtype=np.float64)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise DataError("scores must be finite")
        object.__setattr__(self, "attack_scores", a)
        object.__setattr__(self, "bonafide_scores", b)

    def require_both_classes(self):
        if self.attack_scores.size == 0 or self.bonafide_scores.size == 0:
            raise EmptyClass("both attack and bona fide scores are required")


@dataclass(frozen=True)
class DetPoint:
    threshold: float
    apcer: float
    bpcer: float


@dataclass(frozen=True)
class MetricsReport:
    d_eer: float
    eer_threshold: float
    bpcer10: float
    bpcer20: float
    bpcer100: float
    hter: float
    auc: float
    det: tuple[DetPoint, ...]
    conventions: dict = field(default_factory=dict, compare=False)


def apcer_at(s: ScoreSet, tau: float) -> float:
    """Fraction of attacks wrongly classified as bona fide (score < tau)."""
    if s.attack_scores.size == 0:
        raise EmptyClass("no attack scores")
    return float(np.count_nonzero(s.attack_scores < tau)) / s.attack_scores.size


def bpcer_at(s: ScoreSet, tau: float) -> float:
    """Fraction of bona fide presentations classified as attack (score >= tau)."""
    if s.bonafide_scores.size == 0:
        raise EmptyClass("no bona fide scores")
    return float(np.count_nonzero(s.bonafide_scores >= tau)) / s.bonafide_scores.size


def _thresholds(s: ScoreSet) -> np.ndarray:
    values = np.union1d(s.attack_scores, s.bonafide_scores)
    return np.concatenate([[values[0] - 1.0], values, [values[-1] + 1.0]])


def det_curve(s: ScoreSet) -> tuple[DetPoint, ...]:
    """One operating point per candidate threshold, ordered by threshold.

    Candidates are the sorted union of all observed scores plus one
    sentinel below the minimum (APCER=0 corner) and one above the maximum
    (BPCER=0 corner).
    """
    s.require_both_classes()
    taus = _thresholds(s)
    attacks = np.sort(s.attack_scores)
    bona = np.sort(s.bonafide_scores)
    apcers = np.searchsorted(attacks, taus, side="left") / attacks.size
    bpcers = (bona.size - np.searchsorted(bona, taus, side="left")) / bona.size
    return tuple(
        DetPoint(float(t), float(a), float(b)) for t, a, b in zip(taus, apcers, bpcers)
    )


def d_eer(s: ScoreSet) -> tuple[float, float]:
    """Equal error rate and its threshold.

    Returns the first operating point with an exact APCER = BPCER tie if
    one exists; otherwise interpolates linearly between the adjacent
    points where the sign of (APCER - BPCER) changes.
    """
    points = det_curve(s)
    diffs = [p.apcer - p.bpcer for p in points]
    for p, d in zip(points, diffs):
        if d == 0.0:
            return p.apcer, p.threshold
    for i in range(len(points) - 1):
        if diffs[i] < 0.0 < diffs[i + 1]:
            t = -diffs[i] / (diffs[i + 1] - diffs[i])
            lo, hi = points[i], points[i + 1]
            apcer = lo.apcer + t * (hi.apcer - lo.apcer)
            bpcer = lo.bpcer + t * (hi.bpcer - lo.bpcer)
            tau = lo.threshold + t * (hi.threshold - lo.threshold)
            return 0.5 * (apcer + bpcer), tau
    raise DataError("no APCER/BPCER crossing found")  # unreachable for valid sets


def bpcer_at_apcer(s: ScoreSet, alpha: float) -> float:
    """Minimum BPCER over operating points with APCER <= alpha."""
    if not 0.0 <= alpha <= 1.0:
        raise DataError("alpha must lie in [0, 1]")
    points = det_curve(s)
    return min(p.bpcer for p in points if p.apcer <= alpha)


def hter(s: ScoreSet, tau: float) -> float:
    return 0.5 * (apcer_at(s, tau) + bpcer_at(s, tau))


def auc(s: ScoreSet) -> float:
    """Mann-Whitney statistic: P(attack > bona fide), ties counted 1/2.

    Computed via average ranks, which is exact for ties.
    """
    s.require_both_classes()
    a, b = s.attack_scores, s.bonafide_scores
    combined = np.concatenate([a, b])
    order = np.argsort(combined, kind="mergesort")
    ranks = np.empty(combined.size, dtype=np.float64)
    sorted_vals = combined[order]
    i = 0
    while i < sorted_vals.size:
        j = i
        while j + 1 < sorted_vals.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = float(np.sum(ranks[: a.size]))
    return (rank_sum - a.size * (a.size + 1) / 2.0) / (a.size * b.size)


AGGREGATE_FIELDS = ("d_eer", "bpcer10", "bpcer20", "bpcer100", "hter", "auc")


def aggregate(reports: Sequence[MetricsReport]) -> dict[str, tuple[float, float]]:
    """Per-field arithmetic mean and sample (n-1) standard deviation."""
    if len(reports) == 0:
        raise EmptyList("cannot aggregate an empty report list")
    out = {}
    for name in AGGREGATE_FIELDS:
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        mean = float(values.mean())
        std = float(values.std(ddof=1)) if values.size > 1 else 0.0
        out[name] = (mean, std)
    return out


def compute_report(s: ScoreSet, hter_threshold: Optional[float] = None) -> MetricsReport:
    """Full report for one score set.

    The HTER threshold defaults to the D-EER threshold of this same score
    set (the cross-database convention); pass an explicit tau, e.g. from a
    development set, to override.
    """
    s.require_both_classes()
    eer, tau_star = d_eer(s)
    tau = tau_star if hter_threshold is None else hter_threshold
    return MetricsReport(
        d_eer=eer,
        eer_threshold=tau_star,
        bpcer10=bpcer_at_apcer(s, 0.10),
        bpcer20=bpcer_at_apcer(s, 0.05),
        bpcer100=bpcer_at_apcer(s, 0.01),
        hter=hter(s, tau),
        auc=auc(s),
        det=det_curve(s),
        conventions={
            "decision_rule": "attack iff score >= tau",
            "hter_threshold": "self-eer" if hter_threshold is None else "explicit",
            "bpcer_at_apcer": "min BPCER subject to APCER <= alpha",
            "std_estimator": "sample (n-1)",
        },
    )
