"""Synthetic score worlds for checking when group thresholds suffice.

A FairWorld is a weighted grid of (x, group) points carrying two numbers
each: the assumed-unbiased probability of the favorable outcome, and the
score a model trained on biased data would assign.  On top of it live the
true/false-rate functionals, threshold decisions, Pareto dominance checks,
the within-group monotonicity check (does the score order ever contradict
the fair-probability order inside a group?), and the per-group threshold
decomposition that monotonicity is equivalent to.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, PROTECTED
from .errors import ZeroMassDenominator
from .scorer import ScoreSet

WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FairWorld:
    """Finite weighted grid over (x, group) with fair and biased score maps."""

    x: np.ndarray
    group: np.ndarray          # small integer group codes
    weight: np.ndarray         # nonnegative, sums to 1
    fair_p: np.ndarray         # in [0, 1]
    score_s: np.ndarray        # in [0, 1]
    group_names: dict = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.x)
        for name, vec in (("group", self.group), ("weight", self.weight),
                          ("fair_p", self.fair_p), ("score_s", self.score_s)):
            if len(vec) != m:
                raise ValueError(f"{name} length {len(vec)} != {m}")
        if abs(float(self.weight.sum()) - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"weights sum to {self.weight.sum()}, not 1")
        if self.weight.min(initial=0.0) < 0:
            raise ValueError("weights must be nonnegative")
        for name, vec in (("fair_p", self.fair_p), ("score_s", self.score_s)):
            if len(vec) and (vec.min() < 0.0 or vec.max() > 1.0):
                raise ValueError(f"{name} outside [0, 1]")

    @property
    def m(self) -> int:
        return len(self.x)

    def groups(self) -> list[int]:
        return sorted(int(g) for g in np.unique(self.group))

    def name_of(self, g: int) -> str:
        return self.group_names.get(int(g), f"group{g}")

    def basis_values(self, basis: str) -> np.ndarray:
        if basis == "fair":
            return self.fair_p
        if basis == "unfair":
            return self.score_s
        raise ValueError(f"basis must be 'fair' or 'unfair', got {basis!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "a", "weight", "fair_p", "score_s"])
            for i in range(self.m):
                writer.writerow([
                    repr(float(self.x[i])), self.name_of(int(self.group[i])),
                    repr(float(self.weight[i])), repr(float(self.fair_p[i])),
                    repr(float(self.score_s[i])),
                ])


@dataclass(frozen=True)
class RatePair:
    tpr: float
    tnr: float
    basis: str


def wage_gap_world(grid_size: int = 501) -> FairWorld:
    """Two equally qualified groups; one group's scores scaled down 10%.

    x is a uniform grid on [0, 50], both groups weighted 1/2.  The fair
    favorable probability is x/50 for everyone; scores match it for group
    "male" and are 0.9 * x/50 for group "female".
    """
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = 50.0 * np.arange(grid_size) / (grid_size - 1)
    xs = np.concatenate([x, x])
    group = np.concatenate([
        np.zeros(grid_size, dtype=np.int8),
        np.ones(grid_size, dtype=np.int8),
    ])
    p = xs / 50.0
    s = np.where(group == 1, 0.9 * p, p)
    weight = np.full(2 * grid_size, 1.0 / (2 * grid_size))
    return FairWorld(x=xs, group=group, weight=weight, fair_p=p, score_s=s,
                     group_names={0: "male", 1: "female"})


def anti_monotone_world(grid_size: int = 501) -> FairWorld:
    """wage_gap_world with group "female" scored in reverse of merit."""
    w = wage_gap_world(grid_size)
    s = np.where(w.group == 1, (50.0 - w.x) / 50.0, w.score_s)
    return FairWorld(x=w.x, group=w.group, weight=w.weight, fair_p=w.fair_p,
                     score_s=s, group_names=dict(w.group_names))


def rates(w: FairWorld, decision: np.ndarray, basis: str) -> RatePair:
    """True positive/negative rates of a decision under fair or biased mass."""
    q = w.basis_values(basis)
    dec = np.asarray(decision, dtype=np.float64)
    if len(dec) != w.m:
        raise ValueError("decision length does not match the world grid")
    pos_mass = float((q * w.weight).sum())
    neg_mass = float(((1.0 - q) * w.weight).sum())
    if pos_mass <= 0.0 or neg_mass <= 0.0:
        raise ZeroMassDenominator(
            f"basis {basis!r} has zero mass on one label side"
        )
    tpr = float((dec * q * w.weight).sum()) / pos_mass
    tnr = float(((1.0 - dec) * (1.0 - q) * w.weight).sum()) / neg_mass
    return RatePair(tpr=tpr, tnr=tnr, basis=basis)


def threshold_decision(w: FairWorld, basis: str, tau: float,
                       per_group: dict | None = None) -> np.ndarray:
    """Labels by strict threshold on the chosen basis, optionally per group."""
    q = w.basis_values(basis)
    if per_group is None:
        return (q > tau).astype(np.int8)
    labels = np.zeros(w.m, dtype=np.int8)
    for g in w.groups():
        t_g = per_group.get(g, tau)
        mask = w.group == g
        labels[mask] = (q[mask] > t_g).astype(np.int8)
    return labels


@dataclass(frozen=True)
class ParetoResult:
    maximal: bool
    decision_rates: RatePair
    dominated_by: np.ndarray | None = None
    dominating_rates: RatePair | None = None


def pareto_check(w: FairWorld, decision: np.ndarray, basis: str,
                 tolerance: float = 1e-9) -> ParetoResult:
    """Search threshold-family decisions for one that strictly dominates.

    Candidates are all top-k selections under (basis value desc, grid
    position asc): every strict-threshold decision on the value grid, plus
    the boundary-tie completions that stand in for the measure-zero tie
    splits of the continuous setting.  Dominating means both rates >= and
    at least one greater than `tolerance`.
    """
    q = w.basis_values(basis)
    dec_rates = rates(w, decision, basis)
    pos_mass = float((q * w.weight).sum())
    neg_mass = float(((1.0 - q) * w.weight).sum())

    order = np.lexsort((np.arange(w.m), -q))
    sel_pos = np.concatenate([[0.0], np.cumsum(q[order] * w.weight[order])])
    sel_neg = np.concatenate([[0.0], np.cumsum((1.0 - q[order]) * w.weight[order])])
    tpr_k = sel_pos / pos_mass
    tnr_k = (neg_mass - sel_neg) / neg_mass

    at_least = (tpr_k >= dec_rates.tpr - 1e-12) & (tnr_k >= dec_rates.tnr - 1e-12)
    strictly = (tpr_k > dec_rates.tpr + tolerance) | (tnr_k > dec_rates.tnr + tolerance)
    dominating = np.flatnonzero(at_least & strictly)
    if len(dominating) == 0:
        return ParetoResult(maximal=True, decision_rates=dec_rates)
    k = int(dominating[0])
    labels = np.zeros(w.m, dtype=np.int8)
    labels[order[:k]] = 1
    return ParetoResult(
        maximal=False,
        decision_rates=dec_rates,
        dominated_by=labels,
        dominating_rates=RatePair(tpr=float(tpr_k[k]), tnr=float(tnr_k[k]),
                                  basis=basis),
    )


# --- within-group monotonicity and threshold decomposition ---------------------

def _count_exceeding_pairs(seq: np.ndarray, tol: float) -> int:
    """Pairs i < j with seq[i] > seq[j] + tol, counted by merge passes."""
    n = len(seq)
    if n < 2:
        return 0
    block = 64
    pad = (-n) % block
    s = np.concatenate([np.asarray(seq, dtype=np.float64), np.full(pad, np.inf)])
    blocks = s.reshape(-1, block)
    i_idx = np.arange(block)
    inside = (blocks[:, :, None] > blocks[:, None, :] + tol) \
        & (i_idx[:, None] < i_idx[None, :])
    total = int(inside.sum())
    flat = np.sort(blocks, axis=1).ravel()
    size = block
    m = len(s)
    while size < m:
        pieces = []
        for start in range(0, m, 2 * size):
            left = flat[start:start + size]
            right = flat[start + size:start + 2 * size]
            if len(right):
                found = np.searchsorted(left, right + tol, side="right")
                total += int((len(left) - found).sum())
                pieces.append(np.sort(np.concatenate([left, right])))
            else:
                pieces.append(left)
        flat = np.concatenate(pieces)
        size *= 2
    return total


def _witness_pairs(p: np.ndarray, s: np.ndarray, keys: list,
                   tol: float, limit: int) -> list:
    """Up to `limit` violating (lower-p key, higher-p key) pairs.

    The first key of each pair has strictly lower p but a score more than
    tol above the second's.
    """
    order = np.lexsort((s, p))
    p_o, s_o = p[order], s[order]
    k_o = [keys[i] for i in order]
    witnesses = []
    best_s, best_key = -np.inf, None
    run_start = 0
    for j in range(len(order)):
        if p_o[j] != p_o[run_start]:
            for t in range(run_start, j):  # fold the finished run
                if s_o[t] > best_s:
                    best_s, best_key = s_o[t], k_o[t]
            run_start = j
        if best_key is not None and best_s > s_o[j] + tol:
            witnesses.append((best_key, k_o[j]))
            if len(witnesses) >= limit:
                return witnesses
    return witnesses


@dataclass(frozen=True)
class MonotonicityResult:
    holds: bool
    violation_count: int
    violations_by_group: dict
    witnesses: list  # dicts: {"group", "lower_p", "higher_p"}
    tolerance: float
    grid_size: int
    caveat: str | None = None

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "violation_count": self.violation_count,
            "violations_by_group": self.violations_by_group,
            "witnesses": self.witnesses,
            "tolerance": self.tolerance,
            "grid_size": self.grid_size,
            "caveat": self.caveat,
        }


def _monotonicity_over_groups(groups, tolerance: float,
                              witness_limit: int = 10):
    """groups: iterable of (name, p, s, keys)."""
    total = 0
    by_group = {}
    witnesses = []
    size = 0
    for name, p, s, keys in groups:
        size += len(p)
        order = np.lexsort((s, p))  # tied-p runs ascend in s: never counted
        count = _count_exceeding_pairs(s[order], tolerance)
        by_group[name] = count
        total += count
        if count and len(witnesses) < witness_limit:
            for lo_p_key, hi_p_key in _witness_pairs(
                    p, s, keys, tolerance, witness_limit - len(witnesses)):
                # lo_p_key has the lower fair value but the higher score
                witnesses.append(
                    {"group": name, "lower_p": lo_p_key, "higher_p": hi_p_key}
                )
    return total, by_group, witnesses, size


def monotonicity_check(w: FairWorld, tolerance: float = 0.0) -> MonotonicityResult:
    """Does the score order contradict the fair order inside any group?

    Per group, counts pairs whose fair probability strictly increases while
    the score drops by more than the tolerance.  Pairs tied in fair
    probability are ignored.  Zero violations in every group means any
    fair threshold decision splits into per-group score thresholds.
    """
    groups = []
    for g in w.groups():
        mask = w.group == g
        groups.append((w.name_of(g), w.fair_p[mask], w.score_s[mask],
                       [float(v) for v in w.x[mask]]))
    total, by_group, witnesses, size = _monotonicity_over_groups(groups, tolerance)
    return MonotonicityResult(
        holds=total == 0,
        violation_count=total,
        violations_by_group=by_group,
        witnesses=witnesses,
        tolerance=tolerance,
        grid_size=size,
    )


def monotonicity_check_empirical(baseline: ScoreSet, proxy_fair: ScoreSet,
                                 d: Dataset,
                                 tolerance: float = 0.0) -> MonotonicityResult:
    """The same pairwise check on two empirical score vectors.

    proxy_fair stands in for the fair probabilities and baseline for the
    biased score.  The stand-in is observational: nothing here can verify
    that the proxy is free of estimation noise, hence the caveat field.
    """
    if not np.array_equal(baseline.instance_ids, proxy_fair.instance_ids):
        raise ValueError("score sets must cover identical ids")
    pos = d.positions_of(baseline.instance_ids)
    prot = d.sensitive[pos] == PROTECTED
    groups = []
    for mask, name in ((prot, "protected"), (~prot, "privileged")):
        ids = baseline.instance_ids[mask]
        groups.append((name, proxy_fair.scores[mask], baseline.scores[mask],
                       [int(i) for i in ids]))
    total, by_group, witnesses, size = _monotonicity_over_groups(groups, tolerance)
    return MonotonicityResult(
        holds=total == 0,
        violation_count=total,
        violations_by_group=by_group,
        witnesses=witnesses,
        tolerance=tolerance,
        grid_size=size,
        caveat=("proxy scores are observed estimates; the check assumes they "
                "carry no estimation noise and cannot verify that assumption"),
    )


@dataclass(frozen=True)
class DecompositionResult:
    tau: float
    decomposable: bool
    thresholds: dict   # group name -> threshold or None
    failed_groups: tuple = ()

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "decomposable": self.decomposable,
            "thresholds": self.thresholds,
            "failed_groups": list(self.failed_groups),
        }


def decomposition_check(w: FairWorld, tau: float) -> DecompositionResult:
    """Can the fair threshold decision at tau be rebuilt from score cutoffs?

    For each group, the fair-selected set must be exactly a strictly-above
    set of the group's scores; the reported per-group threshold is the
    largest unselected score (0 when the whole group is selected).
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    fair_dec = w.fair_p > tau
    thresholds = {}
    failed = []
    for g in w.groups():
        mask = w.group == g
        sel = fair_dec[mask]
        s = w.score_s[mask]
        name = w.name_of(g)
        if not sel.any():
            t_g = float(s.max())
        elif sel.all():
            if s.min() > 0.0:
                t_g = 0.0
            else:
                thresholds[name] = None
                failed.append(name)
                continue
        else:
            lo = float(s[~sel].max())
            hi = float(s[sel].min())
            if hi > lo:
                t_g = lo
            else:
                thresholds[name] = None
                failed.append(name)
                continue
        if np.array_equal(s > t_g, sel):
            thresholds[name] = t_g
        else:
            thresholds[name] = None
            failed.append(name)
    return DecompositionResult(
        tau=tau,
        decomposable=not failed,
        thresholds=thresholds,
        failed_groups=tuple(failed),
    )
