"""Winner determination for Borda, Copeland, Maximin, STV, Cup and Randomized Cup.

Ties are never broken by a hidden rule. Every function returns the *set* of
candidates that win under at least one resolution of every tie met along the
way, so "p wins against adversarial tie-breaking" is ``winners == {p}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Iterable, Optional, Sequence, Union

from .ballots import (
    PROTOCOLS,
    Order,
    Profile,
    WeightedVote,
    check_total,
    is_permutation,
    pairwise_matrix,
)

SCORE_PROTOCOLS = ("borda", "copeland", "maximin")
PAIRWISE_PROTOCOLS = ("copeland", "maximin", "cup", "randomized-cup")
MAX_RANDOMIZED_CUP_CANDIDATES = 8

# A schedule is a nested pair structure whose leaves are candidate indices.
Schedule = Union[int, tuple]


# --- cup schedules -----------------------------------------------------------


def schedule_leaves(schedule: Schedule) -> list[int]:
    if isinstance(schedule, int):
        return [schedule]
    out = []
    for child in schedule:
        out.extend(schedule_leaves(child))
    return out


def check_schedule(schedule: Schedule, m: int) -> Schedule:
    """Validate that ``schedule`` is a balanced tree over candidates ``0..m-1``."""

    def size(node) -> int:
        if isinstance(node, bool):
            raise ValueError("schedule leaves must be candidate indices")
        if isinstance(node, int):
            return 1
        if not isinstance(node, tuple) or len(node) != 2:
            raise ValueError("every internal schedule node must have exactly two children")
        left, right = size(node[0]), size(node[1])
        s = left + right
        if sorted((left, right)) != [s // 2, s - s // 2]:
            raise ValueError(f"unbalanced schedule node with children of {left} and {right} leaves")
        return s

    size(schedule)
    if sorted(schedule_leaves(schedule)) != list(range(m)):
        raise ValueError("schedule must contain every candidate exactly once")
    return schedule


def canonical_schedule(leaves: Sequence[int]) -> Schedule:
    """Balanced tree over ``leaves``: ceil(s/2) leaves left, floor(s/2) right."""
    leaves = tuple(leaves)
    if not leaves:
        raise ValueError("a schedule needs at least one candidate")
    if len(leaves) == 1:
        return leaves[0]
    half = (len(leaves) + 1) // 2
    return (canonical_schedule(leaves[:half]), canonical_schedule(leaves[half:]))


def parse_schedule(text: str, labels: Sequence[str]) -> Schedule:
    """Parse ``((a b) (c p))`` into a validated nested-tuple schedule."""
    tokens = text.replace("(", " ( ").replace(")", " ) ").split()
    index = {lab: i for i, lab in enumerate(labels)}
    pos = 0

    def node():
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("schedule ends unexpectedly")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            children = []
            while pos < len(tokens) and tokens[pos] != ")":
                children.append(node())
            if pos >= len(tokens):
                raise ValueError("unbalanced parentheses in schedule")
            pos += 1
            if len(children) == 1:
                return children[0]
            if len(children) != 2:
                raise ValueError("schedule nodes must pair exactly two entries")
            return tuple(children)
        if tok == ")":
            raise ValueError("unexpected ')' in schedule")
        if tok not in index:
            raise ValueError(f"unknown candidate {tok!r} in schedule")
        return index[tok]

    tree = node()
    if pos != len(tokens):
        raise ValueError("trailing tokens after schedule")
    return check_schedule(tree, len(labels))


def format_schedule(schedule: Schedule, labels: Sequence[str]) -> str:
    if isinstance(schedule, int):
        return labels[schedule]
    return "(" + " ".join(format_schedule(c, labels) for c in schedule) + ")"


# --- score protocols -----------------------------------------------------------


def _votes(profile: Profile, extra_votes: Iterable[WeightedVote]) -> list[WeightedVote]:
    votes = list(profile.fixed_votes) + list(extra_votes)
    for v in votes:
        if not is_permutation(v.order, profile.m):
            raise ValueError(f"vote {v.order} is not a permutation of the candidates")
    check_total(v.weight for v in votes)
    return votes


def borda_scores(m: int, votes: Iterable[WeightedVote]) -> tuple[int, ...]:
    scores = [0] * m
    for v in votes:
        for pos, c in enumerate(v.order):
            scores[c] += v.weight * (m - 1 - pos)
    return tuple(scores)


def copeland_from_matrix(matrix) -> tuple[int, ...]:
    m = len(matrix)
    out = []
    for i in range(m):
        s = 0
        for j in range(m):
            if i != j:
                if matrix[i][j] > matrix[j][i]:
                    s += 1
                elif matrix[i][j] < matrix[j][i]:
                    s -= 1
        out.append(s)
    return tuple(out)


def maximin_from_matrix(matrix) -> tuple[int, ...]:
    m = len(matrix)
    if m == 1:
        return (0,)
    return tuple(min(matrix[i][j] for j in range(m) if j != i) for i in range(m))


def argmax_set(scores: Sequence[int]) -> frozenset[int]:
    best = max(scores)
    return frozenset(i for i, s in enumerate(scores) if s == best)


def score_winners(
    protocol: str, profile: Profile, extra_votes: Iterable[WeightedVote] = ()
) -> tuple[tuple[int, ...], frozenset[int]]:
    """Score table and winner set for Borda, Copeland or Maximin.

    Copeland counts wins minus losses over all pairwise elections; Maximin is
    the lowest pairwise support of a candidate against any opponent.
    """
    extra_votes = list(extra_votes)
    votes = _votes(profile, extra_votes)
    if protocol == "borda":
        scores = borda_scores(profile.m, votes)
    elif protocol == "copeland":
        scores = copeland_from_matrix(pairwise_matrix(profile, extra_votes))
    elif protocol == "maximin":
        scores = maximin_from_matrix(pairwise_matrix(profile, extra_votes))
    else:
        raise ValueError(f"{protocol!r} is not a score protocol")
    return scores, argmax_set(scores)


# --- STV -----------------------------------------------------------------------


def stv_winners_from_votes(m: int, votes: Sequence[tuple[Order, int]]) -> frozenset[int]:
    """STV winner set, branching on every elimination tie.

    Remaining candidates are tracked as bitmasks; each reachable remaining
    set is expanded once.
    """
    votes = [(order, w) for order, w in votes if w]
    memo: dict[int, frozenset[int]] = {}

    def solve(remaining: int) -> frozenset[int]:
        if remaining & (remaining - 1) == 0:
            return frozenset([remaining.bit_length() - 1])
        hit = memo.get(remaining)
        if hit is not None:
            return hit
        scores = {c: 0 for c in range(m) if remaining >> c & 1}
        for order, w in votes:
            for c in order:
                if remaining >> c & 1:
                    scores[c] += w
                    break
        low = min(scores.values())
        out: frozenset[int] = frozenset()
        for c, s in scores.items():
            if s == low:
                out |= solve(remaining & ~(1 << c))
        memo[remaining] = out
        return out

    return solve((1 << m) - 1)


def stv_winners(profile: Profile, extra_votes: Iterable[WeightedVote] = ()) -> frozenset[int]:
    votes = _votes(profile, extra_votes)
    return stv_winners_from_votes(profile.m, [(v.order, v.weight) for v in votes])


def stv_round_scores(
    m: int, votes: Iterable[WeightedVote], remaining: Optional[Iterable[int]] = None
) -> dict[int, int]:
    """Plurality weight of each remaining candidate."""
    alive = set(range(m)) if remaining is None else set(remaining)
    scores = {c: 0 for c in sorted(alive)}
    for v in votes:
        for c in v.order:
            if c in alive:
                scores[c] += v.weight
                break
    return scores


# --- Cup -----------------------------------------------------------------------


def cup_winners_from_matrix(matrix, schedule: Schedule) -> frozenset[int]:
    """Bottom-up evaluation; a pairwise tie lets either side advance."""
    if isinstance(schedule, int):
        return frozenset([schedule])
    left = cup_winners_from_matrix(matrix, schedule[0])
    right = cup_winners_from_matrix(matrix, schedule[1])
    out = set()
    for a in left:
        row = matrix[a]
        for b in right:
            if row[b] >= matrix[b][a]:
                out.add(a)
            if matrix[b][a] >= row[b]:
                out.add(b)
    return frozenset(out)


def cup_winners(
    profile: Profile, extra_votes: Iterable[WeightedVote] = (), schedule: Schedule = None
) -> frozenset[int]:
    if schedule is None:
        raise ValueError("cup needs a schedule")
    check_schedule(schedule, profile.m)
    return cup_winners_from_matrix(pairwise_matrix(profile, extra_votes), schedule)


@dataclass(frozen=True)
class CupDistribution:
    """Exact winner distribution of Randomized Cup.

    ``probabilities[c]`` is the share of leaf assignments whose winner set is
    exactly ``{c}``; assignments with several possible winners go to
    ``ambiguous``.
    """

    probabilities: tuple[Fraction, ...]
    ambiguous: Fraction

    def total(self) -> Fraction:
        return sum(self.probabilities, Fraction(0)) + self.ambiguous


def randomized_cup_from_matrix(matrix) -> CupDistribution:
    m = len(matrix)
    if m > MAX_RANDOMIZED_CUP_CANDIDATES:
        raise ValueError(
            f"randomized cup enumeration is capped at {MAX_RANDOMIZED_CUP_CANDIDATES} candidates"
        )
    # Sub-brackets depend only on their ordered leaf tuple, so memoize on it.
    memo: dict[tuple, frozenset[int]] = {}

    def bracket(leaves: tuple) -> frozenset[int]:
        if len(leaves) == 1:
            return frozenset(leaves)
        hit = memo.get(leaves)
        if hit is not None:
            return hit
        half = (len(leaves) + 1) // 2
        left, right = bracket(leaves[:half]), bracket(leaves[half:])
        out = set()
        for a in left:
            for b in right:
                if matrix[a][b] >= matrix[b][a]:
                    out.add(a)
                if matrix[b][a] >= matrix[a][b]:
                    out.add(b)
        res = frozenset(out)
        memo[leaves] = res
        return res

    counts = [0] * m
    ambiguous = 0
    for perm in permutations(range(m)):
        ws = bracket(perm)
        if len(ws) == 1:
            counts[next(iter(ws))] += 1
        else:
            ambiguous += 1
    n = math.factorial(m)
    return CupDistribution(tuple(Fraction(c, n) for c in counts), Fraction(ambiguous, n))


def randomized_cup_distribution(
    profile: Profile, extra_votes: Iterable[WeightedVote] = ()
) -> CupDistribution:
    if profile.m > MAX_RANDOMIZED_CUP_CANDIDATES:
        raise ValueError(
            f"randomized cup enumeration is capped at {MAX_RANDOMIZED_CUP_CANDIDATES} candidates"
        )
    return randomized_cup_from_matrix(pairwise_matrix(profile, extra_votes))


# --- dispatch --------------------------------------------------------------------


def winners(
    protocol: str,
    profile: Profile,
    extra_votes: Iterable[WeightedVote] = (),
    schedule: Schedule = None,
) -> frozenset[int]:
    """Winner set for any deterministic protocol."""
    if protocol in SCORE_PROTOCOLS:
        return score_winners(protocol, profile, extra_votes)[1]
    if protocol == "stv":
        return stv_winners(profile, extra_votes)
    if protocol == "cup":
        return cup_winners(profile, extra_votes, schedule)
    if protocol == "randomized-cup":
        raise ValueError("randomized-cup has no single winner set; use randomized_cup_distribution")
    raise ValueError(f"unknown protocol {protocol!r}")


class Tally:
    """Additive summary of a multiset of votes that still decides the winner.

    Borda keeps the score vector, the pairwise protocols keep the flattened
    pairwise matrix, and STV keeps the merged multiset of orders. Keys are
    hashable, so solvers can memoize on them: two vote multisets with equal
    keys have the same outcome under every completion.
    """

    def __init__(self, protocol: str, m: int, schedule: Schedule = None):
        if protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {protocol!r}")
        if protocol == "cup":
            if schedule is None:
                raise ValueError("cup needs a schedule")
            check_schedule(schedule, m)
        if protocol == "randomized-cup" and m > MAX_RANDOMIZED_CUP_CANDIDATES:
            raise ValueError(
                f"randomized cup enumeration is capped at {MAX_RANDOMIZED_CUP_CANDIDATES} candidates"
            )
        self.protocol = protocol
        self.m = m
        self.schedule = schedule
        self._cup_cache: dict = {}

    def empty(self):
        if self.protocol == "borda":
            return (0,) * self.m
        if self.protocol == "stv":
            return ()
        return (0,) * (self.m * self.m)

    def key(self, votes: Iterable[WeightedVote]):
        k = self.empty()
        for v in votes:
            k = self.add(k, v.order, v.weight)
        return k

    def add(self, key, order: Order, weight: int):
        m = self.m
        if self.protocol == "borda":
            out = list(key)
            for pos, c in enumerate(order):
                out[c] += weight * (m - 1 - pos)
            return tuple(out)
        if self.protocol == "stv":
            if not weight:
                return key
            merged = dict(key)
            merged[order] = merged.get(order, 0) + weight
            return tuple(sorted(merged.items()))
        out = list(key)
        for a in range(m):
            base = order[a] * m
            for b in range(a + 1, m):
                out[base + order[b]] += weight
        return tuple(out)

    def matrix(self, key):
        m = self.m
        return [key[i * m:(i + 1) * m] for i in range(m)]

    def scores(self, key) -> Optional[tuple[int, ...]]:
        if self.protocol == "borda":
            return key
        if self.protocol == "copeland":
            return copeland_from_matrix(self.matrix(key))
        if self.protocol == "maximin":
            return maximin_from_matrix(self.matrix(key))
        return None

    def winners(self, key) -> frozenset[int]:
        if self.protocol == "stv":
            return stv_winners_from_votes(self.m, key)
        if self.protocol == "cup":
            return cup_winners_from_matrix(self.matrix(key), self.schedule)
        if self.protocol == "randomized-cup":
            raise ValueError("randomized-cup has no single winner set")
        return argmax_set(self.scores(key))

    def distribution(self, key) -> CupDistribution:
        hit = self._cup_cache.get(key)
        if hit is None:
            hit = randomized_cup_from_matrix(self.matrix(key))
            self._cup_cache[key] = hit
        return hit

    def win_probability(self, key, target: int) -> Fraction:
        """Probability that ``target`` is the sole winner (0 or 1 unless randomized)."""
        if self.protocol == "randomized-cup":
            return self.distribution(key).probabilities[target]
        return Fraction(1) if self.winners(key) == {target} else Fraction(0)

    def doomed(self, key, target: int, remaining: int) -> bool:
        """True if ``target`` cannot end as sole winner once ``remaining`` more
        weight is added, every added vote ranking ``target`` first.

        Only a bound for the score protocols; other protocols never prune.
        """
        m = self.m
        if self.protocol == "borda":
            best = key[target] + (m - 1) * remaining
            return any(key[c] >= best for c in range(m) if c != target)
        if self.protocol == "maximin":
            if m == 1:
                return False
            best = min(key[target * m + j] + remaining for j in range(m) if j != target)
            for c in range(m):
                if c != target:
                    # Pairwise supports only grow, so the current maximin is a floor.
                    if min(key[c * m + j] for j in range(m) if j != c) >= best:
                        return True
            return False
        if self.protocol == "copeland":
            p_score = 0
            for j in range(m):
                if j != target:
                    mine, theirs = key[target * m + j] + remaining, key[j * m + target]
                    p_score += (mine > theirs) - (mine < theirs)
            for c in range(m):
                if c == target:
                    continue
                # Worst case for c: all remaining weight ranks each opponent above c.
                low = 0
                for j in range(m):
                    if j != c:
                        mine, theirs = key[c * m + j], key[j * m + c] + remaining
                        low += (mine > theirs) - (mine < theirs)
                if low >= p_score:
                    return True
            return False
        return False
