import itertools
import random

import pytest

from votemanip.ballots import ManipulationInstance, Profile, WeightedVote
from votemanip.manipulate import meets_goal
from votemanip.protocols import canonical_schedule, winners

LABELS = "abcdefgh"

# Lines collected by the acceptance module, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def brute_force_manipulation(instance, protocol, schedule=None):
    """Try every assignment of the m! orders to the colluders (no pruning, no memo)."""
    m = instance.profile.m
    orders = list(itertools.permutations(range(m)))
    for combo in itertools.product(orders, repeat=len(instance.coalition_weights)):
        extra = [WeightedVote(o, w) for o, w in zip(combo, instance.coalition_weights)]
        if meets_goal(instance, winners(protocol, instance.profile, extra, schedule)):
            return True
    return False


def brute_force_partition(items):
    total = sum(items)
    if total % 2:
        return False
    return any(
        sum(sub) * 2 == total
        for r in range(len(items) + 1)
        for sub in itertools.combinations(items, r)
    )


def naive_stv(m, votes):
    """STV by expanding every vote into unit ballots and recursing without memo."""
    ballots = [list(v.order) for v in votes for _ in range(v.weight)]

    def rec(alive):
        if len(alive) == 1:
            return set(alive)
        scores = {c: 0 for c in alive}
        for b in ballots:
            top = next(c for c in b if c in alive)
            scores[top] += 1
        low = min(scores.values())
        out = set()
        for c in alive:
            if scores[c] == low:
                out |= rec([x for x in alive if x != c])
        return out

    return rec(list(range(m)))


def random_schedule(rng, m):
    """Balanced tree over a random leaf order, with children randomly swapped."""

    def flip(node):
        if isinstance(node, int):
            return node
        a, b = flip(node[0]), flip(node[1])
        return (b, a) if rng.random() < 0.5 else (a, b)

    return flip(canonical_schedule(rng.sample(range(m), m)))


def random_instance(rng, m, max_fixed=4, max_weight=4, max_coalition=3, mode="constructive",
                    min_weight=0):
    fixed = [
        WeightedVote(tuple(rng.sample(range(m), m)), rng.randint(min_weight, max_weight))
        for _ in range(rng.randint(0, max_fixed))
    ]
    coalition = tuple(rng.randint(min_weight, max_weight) for _ in range(rng.randint(0, max_coalition)))
    return ManipulationInstance(Profile(tuple(LABELS[:m]), fixed), coalition, mode, rng.randrange(m))


@pytest.fixture
def rng():
    return random.Random(20240607)
