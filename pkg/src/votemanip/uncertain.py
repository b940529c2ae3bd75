"""Winning probabilities when some votes are only known as distributions.

Each voter's vote is either a point mass on one order or uniform over all
``m!`` orders. Correlation groups are sets of voters whose draws coincide
with probability one. Only outcomes whose winner set is exactly ``{p}``
count as wins for ``p``.

Distribution file format (voter indices are 0-based in declaration order)::

    protocol: borda
    candidates: a b p
    target: p
    threshold: 1/3
    voter: 1 fixed a > b > p
    voter: 10 uniform
    correlate: 1 2
    manipulator: 0          # optional; makes the file an individual-manipulation query
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Optional, Union

import numpy as np
from scipy.stats import binomtest

from .ballots import (
    PROTOCOLS,
    ElectionFormatError,
    ManipulationInstance,
    Order,
    check_total,
    check_weight,
    format_order_line,
    is_permutation,
    iter_lines,
    parse_order,
    _parse_labels,
    _parse_weight,
)
from .manipulate import DEFAULT_BUDGET, ManipulationAnswer, Verdict
from .protocols import (
    Schedule,
    Tally,
    canonical_schedule,
    check_schedule,
    cup_winners_from_matrix,
    format_schedule,
    parse_schedule,
)

MAX_EXACT_OUTCOMES = 10**7
MAX_UICCWM_CANDIDATES = 5


@dataclass(frozen=True)
class Voter:
    """A voter's weight and its vote: a fixed order, or ``None`` for uniform."""

    weight: int
    order: Optional[Order] = None

    def __post_init__(self):
        check_weight(self.weight)
        if self.order is not None:
            object.__setattr__(self, "order", tuple(self.order))

    @property
    def uniform(self) -> bool:
        return self.order is None


@dataclass(frozen=True)
class UncertainEvaluationInstance:
    labels: tuple[str, ...]
    voters: tuple[Voter, ...]
    protocol: str
    target: int
    threshold: Fraction = Fraction(0)
    correlations: tuple[tuple[int, ...], ...] = ()
    schedule: Schedule = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "voters", tuple(self.voters))
        object.__setattr__(self, "threshold", Fraction(self.threshold))
        object.__setattr__(self, "correlations", tuple(tuple(g) for g in self.correlations))
        m = len(self.labels)
        if m < 1 or len(set(self.labels)) != m:
            raise ValueError("labels must be nonempty and unique")
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.protocol == "cup":
            if self.schedule is None:
                raise ValueError("cup needs a schedule")
            check_schedule(self.schedule, m)
        if not 0 <= self.target < m:
            raise ValueError(f"target {self.target} out of range")
        if not 0 <= self.threshold <= 1:
            raise ValueError("threshold must lie in [0, 1]")
        for v in self.voters:
            if v.order is not None and not is_permutation(v.order, m):
                raise ValueError(f"vote {v.order} is not a permutation of the candidates")
        check_total(v.weight for v in self.voters)
        seen: set[int] = set()
        for group in self.correlations:
            for i in group:
                if not 0 <= i < len(self.voters):
                    raise ValueError(f"correlation refers to unknown voter {i}")
                if i in seen:
                    raise ValueError(f"voter {i} appears in two correlation groups")
                seen.add(i)
            members = [self.voters[i] for i in group]
            if len({(v.weight, v.order) for v in members}) > 1:
                raise ValueError("correlated voters must share weight and distribution")

    @property
    def m(self) -> int:
        return len(self.labels)

    def draws(self) -> tuple[list[tuple[Order, int]], list[int]]:
        """Split into point-mass votes and independent uniform draws (by total weight)."""
        fixed: list[tuple[Order, int]] = []
        uniform: list[int] = []
        grouped = set()
        units = []
        for group in self.correlations:
            grouped.update(group)
            units.append([self.voters[i] for i in group])
        units += [[v] for i, v in enumerate(self.voters) if i not in grouped]
        for members in units:
            w = sum(v.weight for v in members)
            if members[0].uniform:
                uniform.append(w)
            else:
                fixed.append((members[0].order, w))
        return fixed, uniform


@dataclass(frozen=True)
class UncertainManipulationInstance:
    evaluation: UncertainEvaluationInstance
    manipulator_weight: int

    def __post_init__(self):
        check_weight(self.manipulator_weight)


@dataclass(frozen=True)
class Evaluation:
    probability: Fraction
    answer: bool


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    low: float
    high: float
    samples: int
    answer: bool


@dataclass(frozen=True)
class IndividualManipulation:
    best_vote: Order
    probability: Fraction
    answer: bool


def _tally_for(instance: UncertainEvaluationInstance) -> Tally:
    return Tally(instance.protocol, instance.m, instance.schedule)


def _outcome_counts(instance: UncertainEvaluationInstance, tally: Tally):
    """Exact convolution of all uniform draws: tally key -> number of outcomes."""
    m = instance.m
    fixed, uniform = instance.draws()
    outcomes = math.factorial(m) ** len(uniform)
    if outcomes > MAX_EXACT_OUTCOMES:
        raise ValueError(
            f"exact evaluation would enumerate {outcomes} outcomes (limit {MAX_EXACT_OUTCOMES}); "
            "use evaluate_montecarlo"
        )
    base = tally.empty()
    for order, w in fixed:
        base = tally.add(base, order, w)
    states = {base: 1}
    orders = list(permutations(range(m)))
    for w in uniform:
        nxt: dict = defaultdict(int)
        for key, count in states.items():
            for order in orders:
                nxt[tally.add(key, order, w)] += count
        states = nxt
    return states, outcomes


def evaluate_exact(instance: UncertainEvaluationInstance) -> Evaluation:
    """Exact probability that the target is the sole winner, and whether it beats the threshold."""
    tally = _tally_for(instance)
    states, outcomes = _outcome_counts(instance, tally)
    mass = sum((count * tally.win_probability(key, instance.target) for key, count in states.items()),
               Fraction(0))
    prob = mass / outcomes
    return Evaluation(prob, prob > instance.threshold)


def evaluate_montecarlo(
    instance: UncertainEvaluationInstance, samples: int, seed: int
) -> MonteCarloEstimate:
    """Seeded sampling estimate with a 95% Wilson interval.

    Each uniform draw (one per correlation group) is sampled once per sample;
    Randomized Cup also samples a leaf assignment. Instances with no random
    component return their exact value with a zero-width interval.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    m = instance.m
    tally = _tally_for(instance)
    fixed, uniform = instance.draws()
    randomized = instance.protocol == "randomized-cup"
    base = tally.empty()
    for order, w in fixed:
        base = tally.add(base, order, w)
    if not uniform and not randomized:
        p = float(tally.win_probability(base, instance.target))
        return MonteCarloEstimate(p, p, p, samples, p > instance.threshold)

    rng = np.random.default_rng(seed)
    orders = list(permutations(range(m)))
    cols = []
    if uniform:
        cols.append(rng.integers(0, len(orders), size=(samples, len(uniform))))
    if randomized:
        cols.append(np.argsort(rng.random((samples, m)), axis=1))
    draws = np.concatenate(cols, axis=1)
    rows, counts = np.unique(draws, axis=0, return_counts=True)
    wins = 0
    for row, count in zip(rows.tolist(), counts.tolist()):
        key = base
        for w, idx in zip(uniform, row):
            key = tally.add(key, orders[idx], w)
        if randomized:
            leaves = row[len(uniform):]
            ws = cup_winners_from_matrix(tally.matrix(key), canonical_schedule(leaves))
            won = ws == {instance.target}
        else:
            won = tally.win_probability(key, instance.target) == 1
        wins += count if won else 0
    ci = binomtest(wins, samples).proportion_ci(confidence_level=0.95, method="wilson")
    est = wins / samples
    return MonteCarloEstimate(est, float(ci.low), float(ci.high), samples, est > instance.threshold)


def solve_uvcimw(instance: UncertainManipulationInstance) -> IndividualManipulation:
    """Best vote for a single manipulator facing uncertain votes.

    Every one of the ``m!`` orders is scored exactly; ties in probability go
    to the lexicographically smallest order.
    """
    ev = instance.evaluation
    tally = _tally_for(ev)
    states, outcomes = _outcome_counts(ev, tally)
    w = instance.manipulator_weight
    best_order, best = None, Fraction(-1)
    for order in permutations(range(ev.m)):
        mass = sum((count * tally.win_probability(tally.add(key, order, w), ev.target)
                    for key, count in states.items()), Fraction(0))
        prob = mass / outcomes
        if prob > best:
            best_order, best = order, prob
    return IndividualManipulation(best_order, best, best > ev.threshold)


def solve_uiccwm_randomized_cup(
    instance: ManipulationInstance,
    threshold: Union[Fraction, int, str] = 0,
    budget: int = DEFAULT_BUDGET,
) -> ManipulationAnswer:
    """Maximize the target's Randomized Cup win probability over coalition votes.

    Only votes with the target on top are searched: raising it can only
    improve its result in every schedule. The answer is "yes" iff the best
    probability found is strictly above ``threshold``.
    """
    threshold = Fraction(threshold)
    if not 0 <= threshold <= 1:
        raise ValueError("threshold must lie in [0, 1]")
    if instance.mode != "constructive":
        raise ValueError("randomized-cup manipulation needs a constructive instance")
    p = instance.require_target()
    profile = instance.profile
    m = profile.m
    if m > MAX_UICCWM_CANDIDATES:
        raise ValueError(f"randomized-cup manipulation is limited to {MAX_UICCWM_CANDIDATES} candidates")
    tally = Tally("randomized-cup", m)
    types = [(p,) + rest for rest in permutations([c for c in range(m) if c != p])]
    idx = sorted(range(len(instance.coalition_weights)),
                 key=lambda i: (-instance.coalition_weights[i], i))
    weights = [instance.coalition_weights[i] for i in idx]
    n = len(weights)
    memo: dict = {}
    nodes = 0

    class _Budget(Exception):
        pass

    def best(i: int, key, lo: int):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Budget
        if i == n:
            return tally.win_probability(key, p), ()
        state = (i, key, lo)
        hit = memo.get(state)
        if hit is not None:
            return hit
        top, path = Fraction(-1), ()
        same_next = i + 1 < n and weights[i + 1] == weights[i]
        for t in range(lo, len(types)):
            prob, rest = best(i + 1, tally.add(key, types[t], weights[i]), t if same_next else 0)
            if prob > top:
                top, path = prob, (t,) + rest
                if top == 1:
                    break
        memo[state] = (top, path)
        return top, path

    try:
        prob, path = best(0, tally.key(profile.fixed_votes), 0)
    except _Budget:
        return ManipulationAnswer(Verdict.EXHAUSTED, None, nodes)
    witness: list[Optional[Order]] = [None] * n
    for pos, orig in enumerate(idx):
        witness[orig] = types[path[pos]]
    verdict = Verdict.YES if prob > threshold else Verdict.NO
    return ManipulationAnswer(
        verdict, tuple(witness) if verdict is Verdict.YES else None, nodes, probability=prob
    )


# --- file format ---------------------------------------------------------------------


def parse_distribution(text: str) -> Union[UncertainEvaluationInstance, UncertainManipulationInstance]:
    protocol = labels = target = schedule_text = None
    threshold = Fraction(0)
    manipulator = None
    voters_raw: list[tuple[int, int, str]] = []
    groups_raw: list[tuple[int, str]] = []
    for lineno, key, value in iter_lines(text):
        if key == "protocol":
            if value not in PROTOCOLS:
                raise ElectionFormatError(f"unknown protocol {value!r}", lineno)
            protocol = value
        elif key == "candidates":
            labels = _parse_labels(value, lineno)
        elif key == "schedule":
            schedule_text = (value, lineno)
        elif key == "target":
            target = (value, lineno)
        elif key == "threshold":
            try:
                threshold = Fraction(value)
            except (ValueError, ZeroDivisionError):
                raise ElectionFormatError(f"bad threshold {value!r}", lineno) from None
            if not 0 <= threshold <= 1:
                raise ElectionFormatError("threshold must lie in [0, 1]", lineno)
        elif key == "voter":
            weight, _, rest = value.partition(" ")
            voters_raw.append((lineno, _parse_weight(weight, lineno), rest.strip()))
        elif key == "correlate":
            groups_raw.append((lineno, value))
        elif key == "manipulator":
            manipulator = _parse_weight(value, lineno)
        else:
            raise ElectionFormatError(f"unknown key {key!r}", lineno)
    if protocol is None or labels is None or target is None:
        raise ElectionFormatError("distribution files need protocol, candidates and target lines")
    if target[0] not in labels:
        raise ElectionFormatError(f"unknown target candidate {target[0]!r}", target[1])
    voters = []
    for lineno, weight, rest in voters_raw:
        kind, _, order = rest.partition(" ")
        if kind == "uniform" and not order.strip():
            voters.append(Voter(weight, None))
        elif kind == "fixed":
            voters.append(Voter(weight, parse_order(order, labels, lineno)))
        else:
            raise ElectionFormatError(
                "voters look like 'voter: <w> fixed a > b' or 'voter: <w> uniform'", lineno
            )
    groups = []
    for lineno, value in groups_raw:
        try:
            groups.append(tuple(int(t) for t in value.split()))
        except ValueError:
            raise ElectionFormatError(f"bad voter index list {value!r}", lineno) from None
    schedule = None
    if schedule_text is not None:
        if protocol != "cup":
            raise ElectionFormatError("'schedule:' is only valid for protocol 'cup'", schedule_text[1])
        try:
            schedule = parse_schedule(schedule_text[0], labels)
        except ValueError as exc:
            raise ElectionFormatError(str(exc), schedule_text[1]) from None
    try:
        inst = UncertainEvaluationInstance(
            labels, tuple(voters), protocol, labels.index(target[0]), threshold, tuple(groups), schedule
        )
    except (ValueError, OverflowError) as exc:
        raise ElectionFormatError(str(exc)) from None
    if manipulator is not None:
        return UncertainManipulationInstance(inst, manipulator)
    return inst


def serialize_distribution(
    instance: Union[UncertainEvaluationInstance, UncertainManipulationInstance]
) -> str:
    manip = None
    if isinstance(instance, UncertainManipulationInstance):
        manip = instance.manipulator_weight
        instance = instance.evaluation
    labels = instance.labels
    lines = [f"protocol: {instance.protocol}", "candidates: " + " ".join(labels)]
    if instance.schedule is not None:
        lines.append("schedule: " + format_schedule(instance.schedule, labels))
    lines.append(f"target: {labels[instance.target]}")
    lines.append(f"threshold: {instance.threshold}")
    for v in instance.voters:
        if v.uniform:
            lines.append(f"voter: {v.weight} uniform")
        else:
            lines.append(f"voter: {v.weight} fixed {format_order_line(v.order, labels)}")
    for g in instance.correlations:
        lines.append("correlate: " + " ".join(map(str, g)))
    if manip is not None:
        lines.append(f"manipulator: {manip}")
    return "\n".join(lines) + "\n"

