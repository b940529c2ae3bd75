"""PARTITION oracle, reduction gadgets, uncertainty lifts and the equivalence harness."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .ballots import ManipulationInstance, Profile, WeightedVote
from .manipulate import (
    DEFAULT_BUDGET,
    ManipulationAnswer,
    Verdict,
    solve_ccwm_exact,
    solve_dcwm_via_ccwm,
)
from .uncertain import (
    UncertainEvaluationInstance,
    UncertainManipulationInstance,
    Voter,
)

MAX_PARTITION_TOTAL = 10**6

# theorem id -> (protocol, candidate labels)
GADGET_FAMILIES = {
    "borda-ccwm": "borda",
    "copeland-ccwm": "copeland",
    "maximin-ccwm": "maximin",
    "stv-ccwm": "stv",
}
THEOREMS = tuple(GADGET_FAMILIES) + ("stv-dcwm",)


@dataclass(frozen=True)
class PartitionInstance:
    items: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        for k in self.items:
            if isinstance(k, bool) or not isinstance(k, int) or k <= 0:
                raise ValueError(f"partition items must be positive integers, got {k!r}")

    @property
    def total(self) -> int:
        return sum(self.items)

    @property
    def half(self) -> int:
        return self.total // 2


def partition_oracle(instance: PartitionInstance) -> tuple[bool, Optional[tuple[int, ...]]]:
    """Subset-sum reachability over sums ``0..K``.

    Returns ``(answer, witness)`` where the witness lists item indices of one
    half. Odd totals are answered "no" without building the table.
    """
    total = instance.total
    if total > MAX_PARTITION_TOTAL:
        raise ValueError(f"partition total {total} exceeds the table bound {MAX_PARTITION_TOTAL}")
    if total % 2:
        return False, None
    target = total // 2
    mask = (1 << (target + 1)) - 1
    # reach[i] is a bitset of the sums reachable with the first i items.
    reach = [1]
    for k in instance.items:
        reach.append((reach[-1] | (reach[-1] << k)) & mask)
    if not reach[-1] >> target & 1:
        return False, None
    chosen = []
    s = target
    for i in range(len(instance.items), 0, -1):
        if reach[i - 1] >> s & 1:
            continue
        k = instance.items[i - 1]
        chosen.append(i - 1)
        s -= k
    return True, tuple(sorted(chosen))


def build_gadget(theorem: str, partition: PartitionInstance) -> ManipulationInstance:
    """CCWM instance equivalent to ``partition`` for one protocol family."""
    if theorem not in GADGET_FAMILIES:
        raise ValueError(f"unknown gadget family {theorem!r}; choose from {sorted(GADGET_FAMILIES)}")
    total = partition.total
    if total <= 0 or total % 2:
        raise ValueError("gadgets need a partition instance with an even, positive total")
    K = total // 2
    items = partition.items
    if theorem == "borda-ccwm":
        a, b, p = 0, 1, 2
        profile = Profile(("a", "b", "p"), (
            WeightedVote((a, b, p), 6 * K - 1),
            WeightedVote((b, a, p), 6 * K - 1),
        ))
        weights = tuple(6 * k for k in items)
    elif theorem == "copeland-ccwm":
        a, b, c, p = 0, 1, 2, 3
        profile = Profile(("a", "b", "c", "p"), (
            WeightedVote((p, a, b, c), 2 * K + 2),
            WeightedVote((c, p, b, a), 2 * K + 2),
            WeightedVote((a, b, c, p), K + 1),
            WeightedVote((b, a, c, p), K + 1),
        ))
        weights = tuple(items)
    elif theorem == "maximin-ccwm":
        a, b, c, p = 0, 1, 2, 3
        profile = Profile(("a", "b", "c", "p"), (
            WeightedVote((a, b, c, p), 7 * K - 1),
            WeightedVote((b, c, a, p), 7 * K - 1),
            WeightedVote((c, a, b, p), 4 * K - 1),
            WeightedVote((p, c, a, b), 5 * K),
        ))
        weights = tuple(2 * k for k in items)
    else:
        a, b, p = 0, 1, 2
        profile = Profile(("a", "b", "p"), (
            WeightedVote((b, p, a), 6 * K - 1),
            WeightedVote((a, b, p), 4 * K),
            WeightedVote((p, a, b), 4 * K),
        ))
        weights = tuple(2 * k for k in items)
    return ManipulationInstance(profile, weights, "constructive", p)


def build_stv_destructive(ccwm: ManipulationInstance, new_label: str = "h") -> ManipulationInstance:
    """Four-candidate STV destructive instance from a three-candidate STV CCWM one.

    The original candidates keep their indices; ``h`` is appended. The two
    non-target candidates play the roles of ``a`` and ``b`` in declaration
    order.
    """
    profile = ccwm.profile
    if profile.m != 3:
        raise ValueError("build_stv_destructive needs a three-candidate instance")
    if ccwm.mode != "constructive":
        raise ValueError("build_stv_destructive needs a constructive instance")
    if new_label in profile.labels:
        raise ValueError(f"label {new_label!r} already in use")
    p = ccwm.require_target()
    a, b = (c for c in range(3) if c != p)
    h = 3
    W = ccwm.total_weight()
    votes = [WeightedVote(v.order + (h,), v.weight) for v in profile.fixed_votes]
    votes += [
        WeightedVote((a, b, p, h), 1),
        WeightedVote((a, p, b, h), 1),
        WeightedVote((b, a, p, h), 1),
        WeightedVote((b, p, a, h), 1),
        WeightedVote((p, h, a, b), 1),
        WeightedVote((p, h, a, b), 1),
        WeightedVote((h, a, b, p), W + 5),
    ]
    return ManipulationInstance(
        Profile(profile.labels + (new_label,), tuple(votes)),
        ccwm.coalition_weights,
        "destructive",
        h,
    )


def lift_to_uncertain(
    ccwm: ManipulationInstance, protocol: str, schedule=None
) -> UncertainEvaluationInstance:
    """Fixed votes become point masses, colluders become uniform voters, threshold 0."""
    voters = [Voter(v.weight, v.order) for v in ccwm.profile.fixed_votes]
    voters += [Voter(w, None) for w in ccwm.coalition_weights]
    return UncertainEvaluationInstance(
        labels=ccwm.profile.labels,
        voters=tuple(voters),
        protocol=protocol,
        target=ccwm.require_target(),
        schedule=schedule,
    )


def add_null_manipulator(instance: UncertainEvaluationInstance) -> UncertainManipulationInstance:
    return UncertainManipulationInstance(instance, 0)


def unweight_with_correlation(instance: UncertainEvaluationInstance) -> UncertainEvaluationInstance:
    """Replace each weight-k voter by k unit voters drawn as one correlated group.

    Existing correlation groups absorb all unit copies of their members.
    Unit-weight voters outside any group are left alone, so an all-unit
    input comes back unchanged.
    """
    if any(v.weight == 0 for v in instance.voters):
        raise ValueError("weight-0 voters have no unweighted counterpart")
    group_of = {}
    for g, members in enumerate(instance.correlations):
        for i in members:
            group_of[i] = g
    voters: list[Voter] = []
    copies: list[list[int]] = []
    for v in instance.voters:
        idx = list(range(len(voters), len(voters) + v.weight))
        voters.extend(Voter(1, v.order) for _ in range(v.weight))
        copies.append(idx)
    groups = []
    for members in instance.correlations:
        groups.append(tuple(j for i in members for j in copies[i]))
    for i, v in enumerate(instance.voters):
        if i not in group_of and v.weight > 1:
            groups.append(tuple(copies[i]))
    groups.sort()
    return UncertainEvaluationInstance(
        labels=instance.labels,
        voters=tuple(voters),
        protocol=instance.protocol,
        target=instance.target,
        threshold=instance.threshold,
        correlations=tuple(groups),
        schedule=instance.schedule,
    )


# --- equivalence harness ---------------------------------------------------------------


@dataclass(frozen=True)
class Trial:
    index: int
    items: tuple[int, ...]
    oracle: bool
    solver: Verdict
    nodes: int

    @property
    def agree(self) -> bool:
        return self.solver is not Verdict.EXHAUSTED and (self.solver is Verdict.YES) == self.oracle


@dataclass(frozen=True)
class EquivalenceReport:
    theorem: str
    seed: int
    trials: tuple[Trial, ...] = field(default_factory=tuple)

    @property
    def agreement(self) -> float:
        if not self.trials:
            return 1.0
        return sum(t.agree for t in self.trials) / len(self.trials)

    @property
    def exhausted(self) -> int:
        return sum(t.solver is Verdict.EXHAUSTED for t in self.trials)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", "items", "oracle", "solver", "agree", "nodes_expanded"])
        for t in self.trials:
            writer.writerow([
                t.index,
                " ".join(map(str, t.items)),
                "yes" if t.oracle else "no",
                t.solver.value,
                "yes" if t.agree else "no",
                t.nodes,
            ])
        return buf.getvalue()


def sample_partition(
    rng: random.Random, max_items: int, max_value: int, min_items: int = 2
) -> PartitionInstance:
    """Uniform item count and values; one item is redrawn until the total is even."""
    count = rng.randint(min_items, max_items)
    items = [rng.randint(1, max_value) for _ in range(count)]
    while sum(items) % 2:
        items[-1] = rng.randint(1, max_value)
    return PartitionInstance(tuple(items))


def solve_theorem_instance(
    theorem: str, partition: PartitionInstance, budget: int = DEFAULT_BUDGET
) -> ManipulationAnswer:
    """Build the gadget for ``theorem`` and run the matching manipulation solver."""
    if theorem == "stv-dcwm":
        inst = build_stv_destructive(build_gadget("stv-ccwm", partition))
        return solve_dcwm_via_ccwm(inst, "stv", budget=budget)
    if theorem not in GADGET_FAMILIES:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {list(THEOREMS)}")
    return solve_ccwm_exact(build_gadget(theorem, partition), GADGET_FAMILIES[theorem], budget=budget)


def verify_theorem(
    theorem: str,
    trials: int,
    seed: int,
    max_items: int = 8,
    max_value: int = 10,
    min_items: int = 2,
    budget: int = DEFAULT_BUDGET,
    extra: Sequence[PartitionInstance] = (),
) -> EquivalenceReport:
    """Sample PARTITION instances and compare the oracle with the manipulation solver.

    ``extra`` instances are appended after the sampled ones. The run is fully
    determined by ``seed``.
    """
    if theorem not in THEOREMS:
        raise ValueError(f"unknown theorem {theorem!r}; choose from {list(THEOREMS)}")
    rng = random.Random(seed)
    instances = [sample_partition(rng, max_items, max_value, min_items) for _ in range(trials)]
    instances += list(extra)
    out = []
    for i, part in enumerate(instances):
        oracle, _ = partition_oracle(part)
        ans = solve_theorem_instance(theorem, part, budget)
        out.append(Trial(i, part.items, oracle, ans.verdict, ans.nodes))
    return EquivalenceReport(theorem, seed, tuple(out))
