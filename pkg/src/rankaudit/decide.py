"""The decision layer: turn scores into labels under an explicit policy.

Thresholds, quotas, and selection rates live here, deliberately separated
from the prediction model.  All selection is deterministic; boundary ties
are always resolved by ascending instance id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv

import numpy as np

from .dataset import Dataset, GROUP_NAMES, PRIVILEGED, PROTECTED, require_aligned
from .errors import EmptyGroup, RateOutOfRange
from .scorer import ScoreSet

DECIDABLE_KINDS = (
    "fixed-threshold",
    "global-top-rate",
    "per-group-thresholds",
    "per-group-rates",
)
# descriptive kinds recorded by mitigation methods that own their decisions
PASSTHROUGH_KINDS = ("reject-option", "randomized-mixing")

TIE_RULE = "ascending instance_id"


def _check_unit(value: float, what: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise RateOutOfRange(f"{what} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class DecisionPolicy:
    """How scores become labels. kind selects which field applies.

    group_thresholds is duck-typed: anything with t_protected, t_privileged
    and rate attributes (see mitigate.GroupThresholds).
    """

    kind: str
    threshold: float | None = None
    rate: float | None = None
    group_thresholds: object | None = None
    group_rates: tuple[float, float] | None = None
    note: str = ""
    tie_rule: str = TIE_RULE

    def __post_init__(self):
        if self.kind == "fixed-threshold":
            if self.threshold is None:
                raise ValueError("fixed-threshold policy needs a threshold")
            _check_unit(self.threshold, "threshold")
        elif self.kind == "global-top-rate":
            if self.rate is None:
                raise ValueError("global-top-rate policy needs a rate")
            _check_unit(self.rate, "rate")
        elif self.kind == "per-group-thresholds":
            if self.group_thresholds is None:
                raise ValueError("per-group-thresholds policy needs thresholds")
        elif self.kind == "per-group-rates":
            if self.group_rates is None:
                raise ValueError("per-group-rates policy needs two rates")
            for r in self.group_rates:
                _check_unit(r, "group rate")
        elif self.kind not in PASSTHROUGH_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")

    def label(self) -> str:
        """Stable short label used for report keys and file names."""
        if self.kind == "fixed-threshold":
            return f"fixed-threshold-{self.threshold:g}"
        if self.kind == "global-top-rate":
            return f"global-top-rate-{self.rate:g}"
        if self.kind == "per-group-rates":
            a, b = self.group_rates
            return f"per-group-rates-{a:g}-{b:g}"
        if self.kind == "per-group-thresholds":
            return "per-group-thresholds"
        return self.kind

    def describe(self) -> dict:
        doc = {"kind": self.kind, "tie_rule": self.tie_rule}
        if self.threshold is not None:
            doc["threshold"] = self.threshold
        if self.rate is not None:
            doc["rate"] = self.rate
        if self.group_rates is not None:
            doc["group_rates"] = list(self.group_rates)
        if self.group_thresholds is not None:
            gt = self.group_thresholds
            doc["group_thresholds"] = {
                "t_protected": gt.t_protected,
                "t_privileged": gt.t_privileged,
                "rate": gt.rate,
            }
        if self.note:
            doc["note"] = self.note
        return doc


@dataclass(frozen=True)
class DecisionSet:
    """Binary labels plus the decision context that produced them."""

    instance_ids: np.ndarray
    labels: np.ndarray  # int8
    policy: DecisionPolicy
    source_method: str
    realized_pdr: float = field(default=None)  # recomputed on construction

    def __post_init__(self):
        if len(self.labels) != len(self.instance_ids):
            raise ValueError("labels and ids differ in length")
        if not np.isin(self.labels, (0, 1)).all():
            raise ValueError("labels must be 0/1")
        pdr = float(np.mean(self.labels)) if len(self.labels) else 0.0
        if self.realized_pdr is not None and self.realized_pdr != pdr:
            raise ValueError(
                f"realized_pdr {self.realized_pdr} != recomputed {pdr}"
            )
        object.__setattr__(self, "realized_pdr", pdr)

    @property
    def n(self) -> int:
        return len(self.instance_ids)


def _count_nearest(rate: float, n: int) -> int:
    # half-up rounding; the +1e-9 guard absorbs float dust in rate*n
    return min(n, int(np.floor(rate * n + 0.5 + 1e-9)))


def _count_floor(rate: float, n: int) -> int:
    return min(n, int(np.floor(rate * n + 1e-9)))


def _count_ceil(rate: float, n: int) -> int:
    return min(n, int(np.ceil(rate * n - 1e-9)))


def _top_k(scores: np.ndarray, ids: np.ndarray, k: int) -> np.ndarray:
    """Boolean mask selecting the k highest scores, ties by ascending id."""
    mask = np.zeros(len(scores), dtype=bool)
    if k > 0:
        order = np.lexsort((ids, -scores))
        mask[order[:k]] = True
    return mask


def decide(scores: ScoreSet, d: Dataset, policy: DecisionPolicy) -> DecisionSet:
    """Apply a decision policy to a score set.

    fixed-threshold labels score > t.  global-top-rate selects exactly
    floor(r*n) highest scores.  per-group-rates selects the per-group count
    nearest to r_g*n_g.  per-group-thresholds labels score > t_g and then
    fills boundary ties (score == t_g) by ascending id up to ceil(r*n_g)
    when the thresholds carry a target rate.
    """
    pos = d.positions_of(scores.instance_ids)
    s = scores.scores
    ids = scores.instance_ids
    group = d.sensitive[pos]

    if policy.kind == "fixed-threshold":
        labels = s > policy.threshold
    elif policy.kind == "global-top-rate":
        labels = _top_k(s, ids, _count_floor(policy.rate, len(s)))
    elif policy.kind == "per-group-rates":
        labels = np.zeros(len(s), dtype=bool)
        for g, r in ((PROTECTED, policy.group_rates[0]),
                     (PRIVILEGED, policy.group_rates[1])):
            m = group == g
            if m.any():
                labels[m] = _top_k(s[m], ids[m], _count_nearest(r, int(m.sum())))
    elif policy.kind == "per-group-thresholds":
        gt = policy.group_thresholds
        labels = np.zeros(len(s), dtype=bool)
        for g, t in ((PROTECTED, gt.t_protected), (PRIVILEGED, gt.t_privileged)):
            m = group == g
            if not m.any():
                continue
            chosen = s[m] > t
            rate = getattr(gt, "rate", None)
            if rate is not None:
                want = _count_ceil(rate, int(m.sum()))
                short = want - int(chosen.sum())
                if short > 0:
                    boundary_ids = ids[m][s[m] == t]
                    fill = np.isin(ids[m], np.sort(boundary_ids)[:short])
                    chosen = chosen | fill
            labels[m] = chosen
    else:
        raise ValueError(f"policy kind {policy.kind!r} cannot be decided directly")

    return DecisionSet(
        instance_ids=ids,
        labels=labels.astype(np.int8),
        policy=policy,
        source_method=scores.method,
    )


def equalize_rates(scores: ScoreSet, d: Dataset, rate: float) -> DecisionSet:
    """Select the same per-group rate in both groups.

    Group counts round to nearest, so |SPD| <= 1/min(n_g) and the global
    positive rate stays within 1/n of the target.
    """
    _check_unit(rate, "rate")
    pos = d.positions_of(scores.instance_ids)
    group = d.sensitive[pos]
    if not (group == PROTECTED).any() or not (group == PRIVILEGED).any():
        raise EmptyGroup("equalize_rates needs both groups present")
    policy = DecisionPolicy(kind="per-group-rates", group_rates=(rate, rate))
    return decide(scores, d, policy)


def export_decisions(dec: DecisionSet, d: Dataset, scores: ScoreSet,
                     path) -> None:
    """CSV dump: instance_id,group,score,label,method,policy."""
    require_aligned(dec.instance_ids, scores.instance_ids, "decision export")
    pos = d.positions_of(dec.instance_ids)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance_id", "group", "score", "label", "method", "policy"])
        for i in range(dec.n):
            writer.writerow([
                int(dec.instance_ids[i]),
                GROUP_NAMES[int(d.sensitive[pos[i]])],
                repr(float(scores.scores[i])),
                int(dec.labels[i]),
                dec.source_method,
                dec.policy.label(),
            ])
