"""Performance, fairness, and rank-similarity metrics plus the report builder.

AUC and Kendall-Tau are computed by O(n log n) rank algorithms that agree
exactly with brute-force pair enumeration; the test suite holds them to
that oracle.  The report builder assembles, per method: AUC (overall and
per group), accuracy, SPD, EOD, PDR, Kendall-Tau against the baseline
ranking (overall and per group), a pairwise tau matrix, and per-group
quadrant transition counts with scatter dumps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, PROTECTED, require_aligned
from .decide import DecisionPolicy, DecisionSet, decide
from .errors import (
    AuditError,
    EmptyGroup,
    LengthMismatch,
    NoPositivesInGroup,
    SingleClass,
    TooShort,
)
from .scorer import ScoreSet

QUADRANTS = ("kept_negative", "upgraded", "kept_positive", "downgraded")


# --- rank machinery ----------------------------------------------------------

def _dense_ranks(v: np.ndarray) -> np.ndarray:
    return np.unique(v, return_inverse=True)[1]


def _count_inversions(ranks: np.ndarray) -> int:
    """Pairs i < j with ranks[i] > ranks[j].

    Counts each inversion at the highest bit where the two ranks differ:
    per bit level, within blocks of equal higher bits, it accumulates the
    number of (1, 0) patterns in sequence order.  O(n log n) overall.
    """
    r = np.asarray(ranks, dtype=np.int64)
    n = len(r)
    if n < 2:
        return 0
    total = 0
    nbits = max(1, int(r.max()).bit_length())
    for k in range(nbits):
        key = r >> np.int64(k + 1)
        bit = (r >> np.int64(k)) & 1
        idx = np.argsort(key, kind="stable")
        key_s = key[idx]
        bit_s = bit[idx]
        ones_cum = np.cumsum(bit_s)
        starts = np.flatnonzero(np.r_[True, key_s[1:] != key_s[:-1]])
        offsets = np.where(starts > 0, ones_cum[np.maximum(starts - 1, 0)], 0)
        sizes = np.diff(np.r_[starts, n])
        per_pos_offset = np.repeat(offsets, sizes)
        zeros = bit_s == 0
        total += int((ones_cum[zeros] - per_pos_offset[zeros]).sum())
    return total


def _tie_pairs(v: np.ndarray) -> int:
    counts = np.unique(v, return_counts=True)[1].astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def _joint_tie_pairs(x: np.ndarray, y: np.ndarray) -> int:
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    new_run = np.r_[True, (xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1])]
    starts = np.flatnonzero(new_run)
    counts = np.diff(np.r_[starts, len(x)]).astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def _midranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks, tied values sharing the mean rank of their run."""
    order = np.argsort(v, kind="stable")
    sv = v[order]
    n = len(v)
    starts = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1]])
    ends = np.r_[starts[1:], n]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


# --- metrics -------------------------------------------------------------------

def auc(scores, labels) -> float:
    """Probability that a random positive outranks a random negative.

    Rank-based with mid-ranks, so tied scores count one half.  Raises
    SingleClass unless both classes are present.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if len(s) != len(y):
        raise LengthMismatch(f"scores {len(s)} vs labels {len(y)}")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"need both classes, got {n_pos} pos / {n_neg} neg")
    r_pos = float(_midranks(s)[y == 1].sum())
    return (r_pos - n_pos * (n_pos + 1) / 2.0) / (float(n_pos) * float(n_neg))


def kendall_tau(x, y, variant: str = "tau-b") -> float:
    """Rank correlation from concordant/discordant pair counts.

    tau-a divides by all pairs (ties count in neither direction); tau-b
    corrects both denominators for ties.  Discordances are counted by rank
    inversions in O(n log n); results match pair enumeration exactly.
    Returns nan for tau-b when either vector is constant.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(x) != len(y):
        raise LengthMismatch(f"lengths {len(x)} vs {len(y)}")
    n = len(x)
    if n < 2:
        raise TooShort("need at least two observations")
    order = np.lexsort((y, x))
    disc = _count_inversions(_dense_ranks(y[order]))
    n0 = n * (n - 1) // 2
    n1 = _tie_pairs(x)
    n2 = _tie_pairs(y)
    n3 = _joint_tie_pairs(x, y)
    conc = n0 - n1 - n2 + n3 - disc
    if variant == "tau-a":
        return float(conc - disc) / float(n0)
    if variant == "tau-b":
        denom = math.sqrt(float(n0 - n1) * float(n0 - n2))
        if denom == 0.0:
            return float("nan")
        return float(conc - disc) / denom
    raise ValueError(f"unknown variant {variant!r}")


def _group_masks(dec: DecisionSet, d: Dataset):
    pos = d.positions_of(dec.instance_ids)
    prot = d.sensitive[pos] == PROTECTED
    return pos, prot


def spd(dec: DecisionSet, d: Dataset) -> float:
    """Protected positive rate minus privileged positive rate."""
    _, prot = _group_masks(dec, d)
    if not prot.any() or prot.all():
        raise EmptyGroup("SPD needs both groups present")
    labels = dec.labels
    return float(labels[prot].mean() - labels[~prot].mean())


def eod(dec: DecisionSet, d: Dataset) -> float:
    """Protected TPR minus privileged TPR."""
    pos, prot = _group_masks(dec, d)
    truth = d.label[pos]
    rates = []
    for mask, name in ((prot, "protected"), (~prot, "privileged")):
        positives = mask & (truth == 1)
        if not positives.any():
            raise NoPositivesInGroup(f"no positive instances in {name} group")
        rates.append(float(dec.labels[positives].mean()))
    return rates[0] - rates[1]


def accuracy(dec: DecisionSet, d: Dataset) -> float:
    pos, _ = _group_masks(dec, d)
    return float((dec.labels == d.label[pos]).mean())


@dataclass(frozen=True)
class QuadrantCounts:
    """Per-group label transition counts between two decision sets."""

    kept_negative: int
    upgraded: int
    kept_positive: int
    downgraded: int

    @property
    def total(self) -> int:
        return self.kept_negative + self.upgraded + self.kept_positive + self.downgraded

    def to_dict(self) -> dict:
        return {
            "kept_negative": self.kept_negative,
            "upgraded": self.upgraded,
            "kept_positive": self.kept_positive,
            "downgraded": self.downgraded,
        }


def quadrant_analysis(base: DecisionSet, mitigated: DecisionSet, d: Dataset,
                      base_scores: ScoreSet | None = None,
                      mitigated_scores: ScoreSet | None = None):
    """Per-group 2x2 transition counts plus scatter rows for plotting.

    Returns (counts, rows) where counts maps group name to QuadrantCounts
    and rows are (id, group, score_base, score_mitigated, quadrant) tuples
    (empty when score sets are not supplied).
    """
    require_aligned(base.instance_ids, mitigated.instance_ids, "quadrant ids")
    pos = d.positions_of(base.instance_ids)
    prot = d.sensitive[pos] == PROTECTED
    quadrant = np.where(
        base.labels == 0,
        np.where(mitigated.labels == 0, 0, 1),   # kept_negative / upgraded
        np.where(mitigated.labels == 1, 2, 3),   # kept_positive / downgraded
    )
    counts = {}
    for mask, name in ((prot, "protected"), (~prot, "privileged")):
        qc = np.bincount(quadrant[mask], minlength=4)
        counts[name] = QuadrantCounts(int(qc[0]), int(qc[1]), int(qc[2]), int(qc[3]))
    rows = []
    if base_scores is not None and mitigated_scores is not None:
        require_aligned(base.instance_ids, base_scores.instance_ids, "base scores")
        require_aligned(base.instance_ids, mitigated_scores.instance_ids, "mitigated scores")
        for i in range(base.n):
            rows.append((
                int(base.instance_ids[i]),
                "protected" if prot[i] else "privileged",
                float(base_scores.scores[i]),
                float(mitigated_scores.scores[i]),
                QUADRANTS[quadrant[i]],
            ))
    return counts, rows


def method_correlation_matrix(score_sets: list[ScoreSet],
                              variant: str = "tau-b"):
    """Symmetric tau matrix across methods; diagonal is exactly 1.0."""
    if not score_sets:
        return [], np.zeros((0, 0))
    for ss in score_sets[1:]:
        require_aligned(score_sets[0].instance_ids, ss.instance_ids, ss.method)
    names = [ss.method for ss in score_sets]
    k = len(score_sets)
    matrix = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            t = kendall_tau(score_sets[i].scores, score_sets[j].scores, variant)
            matrix[i, j] = matrix[j, i] = t
    return names, matrix


# --- report ---------------------------------------------------------------------

@dataclass
class MethodOutput:
    """One audited method: its score view plus (optionally) its own decisions.

    Postprocessing methods keep the baseline score values under their own
    name; when decisions is None the report derives them from the policy.
    """

    scores: ScoreSet
    decisions: DecisionSet | None = None

    @property
    def name(self) -> str:
        return self.scores.method


@dataclass
class AuditReport:
    provenance: dict
    policy_label: str
    policy: dict
    methods: list
    rows: dict
    tau_vs_baseline: dict
    pairwise_methods: list
    pairwise_tau: list
    quadrants: dict
    scatter: dict = field(default_factory=dict, repr=False)
    scatter_files: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "provenance": self.provenance,
            "policy_label": self.policy_label,
            "policy": self.policy,
            "methods": self.methods,
            "rows": self.rows,
            "tau_vs_baseline": self.tau_vs_baseline,
            "pairwise_tau": {
                "methods": self.pairwise_methods,
                "matrix": self.pairwise_tau,
            },
            "quadrants": self.quadrants,
            "scatter_files": self.scatter_files,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _metrics_row(scores: ScoreSet, dec: DecisionSet, d: Dataset) -> dict:
    pos = d.positions_of(scores.instance_ids)
    truth = d.label[pos]
    prot = d.sensitive[pos] == PROTECTED
    if not prot.any() or prot.all():
        raise EmptyGroup("metrics need both groups in the audited ids")
    return {
        "auc": auc(scores.scores, truth),
        "auc_protected": auc(scores.scores[prot], truth[prot]),
        "auc_privileged": auc(scores.scores[~prot], truth[~prot]),
        "acc": accuracy(dec, d),
        "spd": spd(dec, d),
        "eod": eod(dec, d),
        "pdr": dec.realized_pdr,
    }


def _tau_row(baseline: ScoreSet, other: ScoreSet, d: Dataset,
             variant: str) -> dict:
    pos = d.positions_of(baseline.instance_ids)
    prot = d.sensitive[pos] == PROTECTED
    return {
        "overall": kendall_tau(baseline.scores, other.scores, variant),
        "protected": kendall_tau(baseline.scores[prot], other.scores[prot], variant),
        "privileged": kendall_tau(baseline.scores[~prot], other.scores[~prot], variant),
    }


def build_report(d: Dataset, baseline: ScoreSet, methods: list[MethodOutput],
                 policy: DecisionPolicy, provenance: dict | None = None,
                 tau_variant: str = "tau-b") -> AuditReport:
    """Assemble the full audit for one decision policy.

    Every method's scores must align with the baseline ids.  Methods
    without their own DecisionSet get one from the policy; all metrics are
    recomputed from the raw inputs.
    """
    for mo in methods:
        if mo.scores.method == baseline.method:
            raise ValueError(f"method name {mo.name!r} collides with baseline")
    names = [mo.name for mo in methods]
    if len(set(names)) != len(names):
        raise ValueError("method names must be unique within a run")

    def _with_context(name, exc):
        wrapped = type(exc)(f"{name}: {exc}")
        wrapped.__cause__ = exc
        return wrapped

    baseline_dec = decide(baseline, d, policy)
    rows = {}
    tau_table = {}
    quadrants = {}
    scatter = {}
    try:
        rows[baseline.method] = _metrics_row(baseline, baseline_dec, d)
    except AuditError as exc:
        raise _with_context(baseline.method, exc)
    tau_table[baseline.method] = _tau_row(baseline, baseline, d, tau_variant)

    for mo in methods:
        try:
            require_aligned(baseline.instance_ids, mo.scores.instance_ids, mo.name)
            dec = mo.decisions
            if dec is None:
                dec = decide(mo.scores, d, policy)
            else:
                require_aligned(baseline.instance_ids, dec.instance_ids, mo.name)
            rows[mo.name] = _metrics_row(mo.scores, dec, d)
            tau_table[mo.name] = _tau_row(baseline, mo.scores, d, tau_variant)
            counts, dots = quadrant_analysis(
                baseline_dec, dec, d, base_scores=baseline, mitigated_scores=mo.scores
            )
            quadrants[mo.name] = {g: c.to_dict() for g, c in counts.items()}
            scatter[mo.name] = dots
        except AuditError as exc:
            raise _with_context(mo.name, exc)

    all_sets = [baseline] + [mo.scores for mo in methods]
    pairwise_names, matrix = method_correlation_matrix(all_sets, tau_variant)

    return AuditReport(
        provenance=provenance or {},
        policy_label=policy.label(),
        policy=policy.describe(),
        methods=[baseline.method] + names,
        rows=rows,
        tau_vs_baseline=tau_table,
        pairwise_methods=pairwise_names,
        pairwise_tau=[[float(v) for v in row] for row in matrix],
        quadrants=quadrants,
        scatter=scatter,
    )
