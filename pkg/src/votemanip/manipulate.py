"""Coalitional manipulation solvers.

Four routes:

* :func:`solve_unweighted_coalition` enumerates vote multiplicities for a
  coalition of unit-weight voters (polynomial for a fixed number of
  candidates).
* :func:`solve_ccwm_exact` decides weighted constructive manipulation by
  exhaustive search with memoization and a node budget.
* :func:`solve_cup_ccwm` is the polynomial potential-winner recursion for
  Cup with a known schedule.
* :func:`solve_dcwm_monotone` and :func:`solve_dcwm_via_ccwm` handle the
  destructive problem.

A constructive answer is "yes" only if the winner set is exactly ``{p}``;
a destructive answer is "yes" only if ``h`` is outside the winner set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from itertools import permutations
from typing import Iterator, Optional, Sequence

from .ballots import ManipulationInstance, Order, WeightedVote, pairwise_matrix
from .protocols import SCORE_PROTOCOLS, Schedule, Tally, check_schedule, winners

DEFAULT_BUDGET = 5_000_000
MAX_UNWEIGHTED_CANDIDATES = 5


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    EXHAUSTED = "exhausted"


@dataclass(frozen=True)
class ManipulationAnswer:
    """Outcome of a manipulation query.

    ``witness`` holds one vote order per coalition voter, aligned with the
    instance's ``coalition_weights``, and is only set on "yes".
    """

    verdict: Verdict
    witness: Optional[tuple[Order, ...]] = None
    nodes: int = 0
    probability: Optional[Fraction] = None
    potential_winners: Optional[dict] = None

    @property
    def decision(self) -> Optional[bool]:
        if self.verdict is Verdict.EXHAUSTED:
            return None
        return self.verdict is Verdict.YES


class _Exhausted(Exception):
    pass


def vote_types(m: int) -> list[Order]:
    """All ``m!`` orders in lexicographic order."""
    return list(permutations(range(m)))


def meets_goal(instance: ManipulationInstance, winner_set) -> bool:
    target = instance.require_target()
    if instance.mode == "constructive":
        return winner_set == {target}
    return target not in winner_set


def witness_votes(instance: ManipulationInstance, witness: Sequence[Order]) -> list[WeightedVote]:
    return [WeightedVote(o, w) for o, w in zip(witness, instance.coalition_weights)]


def _check_protocol(protocol: str, schedule: Schedule, m: int):
    if protocol == "randomized-cup":
        raise ValueError("use uncertain.solve_uiccwm_randomized_cup for randomized-cup")
    if protocol == "cup":
        if schedule is None:
            raise ValueError("cup needs a schedule")
        check_schedule(schedule, m)


# --- unweighted coalitions ---------------------------------------------------------


def multiplicity_vectors(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """Nonnegative ``k``-vectors summing to ``n``, in ascending lexicographic order."""
    if k < 1:
        if n == 0:
            yield ()
        return
    v = [0] * k
    v[-1] = n
    while True:
        yield tuple(v)
        z = k - 1
        while z > 0 and v[z] == 0:
            z -= 1
        if z == 0:
            return
        i = z - 1
        tail = sum(v[i + 1:]) - 1
        v[i] += 1
        for j in range(i + 1, k):
            v[j] = 0
        v[-1] = tail


def count_multiplicity_vectors(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def solve_unweighted_coalition(
    instance: ManipulationInstance, protocol: str, schedule: Schedule = None
) -> ManipulationAnswer:
    """Try every multiplicity vector over the ``m!`` vote types.

    Only the multiplicities matter when all colluders weigh 1, so there are
    ``C(n + m! - 1, m! - 1)`` candidates to evaluate. The first successful
    vector in lexicographic order is returned.
    """
    profile = instance.profile
    instance.require_target()
    _check_protocol(protocol, schedule, profile.m)
    if profile.m > MAX_UNWEIGHTED_CANDIDATES:
        raise ValueError(
            f"unweighted enumeration is limited to {MAX_UNWEIGHTED_CANDIDATES} candidates; "
            "use solve_ccwm_exact instead"
        )
    if any(w != 1 for w in instance.coalition_weights):
        raise ValueError("unweighted enumeration needs every coalition weight to be 1")
    types = vote_types(profile.m)
    nodes = 0
    for vec in multiplicity_vectors(len(instance.coalition_weights), len(types)):
        nodes += 1
        extra = [WeightedVote(t, k) for t, k in zip(types, vec) if k]
        if meets_goal(instance, winners(protocol, profile, extra, schedule)):
            witness = tuple(t for t, k in zip(types, vec) for _ in range(k))
            return ManipulationAnswer(Verdict.YES, witness, nodes)
    return ManipulationAnswer(Verdict.NO, None, nodes)


# --- exact weighted constructive search ----------------------------------------------


def solve_ccwm_exact(
    instance: ManipulationInstance,
    protocol: str,
    schedule: Schedule = None,
    budget: int = DEFAULT_BUDGET,
) -> ManipulationAnswer:
    """Decide constructive coalitional weighted manipulation exactly.

    Colluders are assigned in descending weight order. For Borda, Copeland,
    Maximin and Cup only votes with ``p`` on top are tried (raising ``p``
    never hurts it in these protocols) and failed states are memoized on the
    protocol's additive tally. STV gets its own lazy search, see
    :func:`_solve_stv`.

    Returns a "exhausted" verdict instead of an answer once more than
    ``budget`` search nodes have been expanded.
    """
    if instance.mode != "constructive":
        raise ValueError("solve_ccwm_exact needs a constructive instance")
    instance.require_target()
    _check_protocol(protocol, schedule, instance.profile.m)
    order = sorted(range(len(instance.coalition_weights)),
                   key=lambda i: (-instance.coalition_weights[i], i))
    weights = [instance.coalition_weights[i] for i in order]
    if protocol == "stv":
        verdict, assigned, nodes = _solve_stv(instance, weights, budget)
    else:
        verdict, assigned, nodes = _solve_tally(instance, protocol, schedule, weights, budget)
    if verdict is not Verdict.YES:
        return ManipulationAnswer(verdict, None, nodes)
    witness: list[Optional[Order]] = [None] * len(order)
    for pos, idx in enumerate(order):
        witness[idx] = assigned[pos]
    return ManipulationAnswer(Verdict.YES, tuple(witness), nodes)


def _suffix_sums(weights: Sequence[int]) -> list[int]:
    out = [0] * (len(weights) + 1)
    for i in range(len(weights) - 1, -1, -1):
        out[i] = out[i + 1] + weights[i]
    return out


def _solve_tally(instance, protocol, schedule, weights, budget):
    profile = instance.profile
    m, p = profile.m, instance.target
    tally = Tally(protocol, m, schedule)
    others = [c for c in range(m) if c != p]
    types = [(p,) + rest for rest in permutations(others)]
    n = len(weights)
    remaining = _suffix_sums(weights)
    failed: set = set()
    leaf_cache: dict = {}
    choice: list[int] = [0] * n
    nodes = 0

    def dfs(i: int, key, lo: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Exhausted
        if i == n:
            hit = leaf_cache.get(key)
            if hit is None:
                hit = leaf_cache[key] = tally.winners(key) == {p}
            return hit
        state = (i, key, lo)
        if state in failed:
            return False
        if tally.doomed(key, p, remaining[i]):
            failed.add(state)
            return False
        w = weights[i]
        same_next = i + 1 < n and weights[i + 1] == w
        for t in range(lo, len(types)):
            # Equal-weight neighbours are interchangeable: keep their type indices non-decreasing.
            if dfs(i + 1, tally.add(key, types[t], w), t if same_next else 0):
                choice[i] = t
                return True
        failed.add(state)
        return False

    try:
        found = dfs(0, tally.key(profile.fixed_votes), 0)
    except _Exhausted:
        return Verdict.EXHAUSTED, None, nodes
    if not found:
        return Verdict.NO, None, nodes
    return Verdict.YES, [types[t] for t in choice], nodes


def _solve_stv(instance, weights, budget):
    """Lazy search over colluder orders for STV.

    Each colluder's order is revealed one position at a time, only when an
    elimination forces the vote to move on. Tie rounds spawn several branch
    states (remaining-candidate sets) that must all end with ``p`` alone, and
    they share the colluders' revealed prefixes so the final orders are
    consistent across branches. Candidates dead in every pending branch are
    never revealed, since their place in an order cannot matter any more.
    """
    profile = instance.profile
    m, p = profile.m, instance.target
    n = len(weights)
    pbit = 1 << p
    fixed = [(v.order, v.weight) for v in profile.fixed_votes if v.weight]
    reveal_order = [p] + [c for c in range(m) if c != p]
    groups = []
    start = 0
    for i in range(1, n + 1):
        if i == n or weights[i] != weights[start]:
            groups.append((start, i))
            start = i
    fixed_cache: dict[int, list[int]] = {}
    prefixes: list[tuple[int, ...]] = [()] * n
    failed: set = set()
    nodes = 0

    def fixed_scores(R: int) -> list[int]:
        hit = fixed_cache.get(R)
        if hit is None:
            hit = [0] * m
            for order, w in fixed:
                for c in order:
                    if R >> c & 1:
                        hit[c] += w
                        break
            fixed_cache[R] = hit
        return hit

    def solve(pending: tuple[int, ...]) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _Exhausted
        while pending and pending[-1] == pbit:
            pending = pending[:-1]
        if not pending:
            return True
        key = (tuple(tuple(sorted(prefixes[a:b])) for a, b in groups), pending)
        if key in failed:
            return False
        R = pending[-1]
        scores = list(fixed_scores(R))
        need = None
        undecided = 0
        for i in range(n):
            for c in prefixes[i]:
                if R >> c & 1:
                    scores[c] += weights[i]
                    break
            else:
                undecided += weights[i]
                if need is None:
                    need = i
        alive = [c for c in range(m) if R >> c & 1]
        ok = False
        if need is None:
            low = min(scores[c] for c in alive)
            if scores[p] != low:
                nxt = set(pending[:-1])
                nxt.update(R & ~(1 << c) for c in alive if scores[c] == low)
                ok = solve(tuple(sorted(nxt)))
        elif scores[p] + undecided > min(scores[c] for c in alive if c != p):
            live = 0
            for mask in pending:
                live |= mask
            pre = prefixes[need]
            for c in reveal_order:
                if live >> c & 1 and c not in pre:
                    prefixes[need] = pre + (c,)
                    if solve(pending):
                        ok = True
                        break
            if not ok:
                prefixes[need] = pre
        if not ok:
            failed.add(key)
        return ok

    try:
        found = solve(((1 << m) - 1,))
    except _Exhausted:
        return Verdict.EXHAUSTED, None, nodes
    if not found:
        return Verdict.NO, None, nodes
    # Unrevealed positions never mattered; fill them target-first.
    orders = [pre + tuple(c for c in reveal_order if c not in pre) for pre in prefixes]
    return Verdict.YES, orders, nodes


# --- Cup with a known schedule ---------------------------------------------------------


def solve_cup_ccwm(instance: ManipulationInstance, schedule: Schedule) -> ManipulationAnswer:
    """Potential winners of every subtree of a known Cup schedule.

    A candidate can win a node iff it can win its own child and strictly beat
    some potential winner of the sibling when all colluders rank it above
    that opponent. The witness has every colluder cast the same order: at
    each node the half containing the chosen winner is ranked above the other
    half.
    """
    if instance.mode != "constructive":
        raise ValueError("solve_cup_ccwm needs a constructive instance")
    p = instance.require_target()
    profile = instance.profile
    check_schedule(schedule, profile.m)
    fixed = pairwise_matrix(profile)
    coalition = sum(instance.coalition_weights)
    pw: dict = {}
    beaten: dict = {}

    def strict_beat(c: int, h: int) -> bool:
        return fixed[c][h] + coalition > fixed[h][c]

    def visit(node) -> frozenset[int]:
        if isinstance(node, int):
            res = frozenset([node])
        else:
            left, right = visit(node[0]), visit(node[1])
            res = set()
            for mine, theirs in ((left, right), (right, left)):
                for c in sorted(mine):
                    for h in sorted(theirs):
                        if strict_beat(c, h):
                            res.add(c)
                            beaten[(node, c)] = h
                            break
            res = frozenset(res)
        pw[node] = res
        return res

    root = visit(schedule)
    if p not in root:
        return ManipulationAnswer(Verdict.NO, None, len(pw), potential_winners=pw)

    def build(node, c: int) -> list[int]:
        if isinstance(node, int):
            return [c]
        h = beaten[(node, c)]
        mine, theirs = (node[0], node[1]) if _contains(node[0], c) else (node[1], node[0])
        return build(mine, c) + build(theirs, h)

    vote = tuple(build(schedule, p))
    witness = tuple(vote for _ in instance.coalition_weights)
    return ManipulationAnswer(Verdict.YES, witness, len(pw), potential_winners=pw)


def _contains(node, c: int) -> bool:
    if isinstance(node, int):
        return node == c
    return _contains(node[0], c) or _contains(node[1], c)


# --- destructive -----------------------------------------------------------------------


def solve_dcwm_monotone(instance: ManipulationInstance, protocol: str) -> ManipulationAnswer:
    """Polynomial destructive manipulation for monotone score protocols.

    For each candidate ``a`` other than ``h`` every colluder votes ``a``
    first, ``h`` last and the rest in declaration order; ``h`` can be stopped
    iff one of these ``m - 1`` elections leaves it out of the winner set.
    """
    if instance.mode != "destructive":
        raise ValueError("solve_dcwm_monotone needs a destructive instance")
    if protocol not in SCORE_PROTOCOLS:
        raise ValueError(f"monotone destructive solver covers {SCORE_PROTOCOLS}, not {protocol!r}")
    h = instance.require_target()
    profile = instance.profile
    nodes = 0
    for a in range(profile.m):
        if a == h:
            continue
        nodes += 1
        vote = (a,) + tuple(c for c in range(profile.m) if c not in (a, h)) + (h,)
        extra = [WeightedVote(vote, w) for w in instance.coalition_weights]
        if h not in winners(protocol, profile, extra):
            return ManipulationAnswer(Verdict.YES, tuple(vote for _ in extra), nodes)
    return ManipulationAnswer(Verdict.NO, None, nodes)


def solve_dcwm_via_ccwm(
    instance: ManipulationInstance,
    protocol: str,
    schedule: Schedule = None,
    budget: int = DEFAULT_BUDGET,
) -> ManipulationAnswer:
    """Destructive manipulation by trying to make each other candidate the sole winner.

    This is a sufficient test: "yes" means some ``p != h`` can be made the
    only winner. An instance where ``h`` can only be pushed into a tie that
    excludes it, but never below a single rival, is answered "no".
    """
    if instance.mode != "destructive":
        raise ValueError("solve_dcwm_via_ccwm needs a destructive instance")
    h = instance.require_target()
    nodes = 0
    exhausted = False
    for p in range(instance.profile.m):
        if p == h:
            continue
        sub = replace(instance, mode="constructive", target=p)
        ans = solve_ccwm_exact(sub, protocol, schedule, budget)
        nodes += ans.nodes
        if ans.verdict is Verdict.YES:
            return ManipulationAnswer(Verdict.YES, ans.witness, nodes)
        if ans.verdict is Verdict.EXHAUSTED:
            exhausted = True
    return ManipulationAnswer(Verdict.EXHAUSTED if exhausted else Verdict.NO, None, nodes)
