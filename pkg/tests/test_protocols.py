import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from votemanip.ballots import Profile, WeightedVote, pairwise_matrix
from votemanip.gadgets import PartitionInstance, build_gadget
from votemanip.manipulate import witness_votes
from votemanip.protocols import (
    Tally,
    borda_scores,
    canonical_schedule,
    check_schedule,
    cup_winners,
    format_schedule,
    parse_schedule,
    randomized_cup_distribution,
    schedule_leaves,
    score_winners,
    stv_round_scores,
    stv_winners,
    winners,
)

from conftest import naive_stv, random_schedule


def V(order, w=1):
    return WeightedVote(tuple(order), w)


A, B, C, P = 0, 1, 2, 3

# a beats b, b beats c, c beats a, each by 2 to 1.
CYCLE = Profile(("a", "b", "c"), (V((0, 1, 2)), V((1, 2, 0)), V((2, 0, 1))))


def test_borda_gadget_k2_witness_scores():
    inst = build_gadget("borda-ccwm", PartitionInstance((1, 1, 2)))
    # Labels are a b p; halves {1,1} and {2}.
    witness = [(2, 0, 1), (2, 0, 1), (2, 1, 0)]
    scores, ws = score_winners("borda", inst.profile, witness_votes(inst, witness))
    assert scores == (45, 45, 48)
    assert ws == {2}


def test_copeland_cycle_all_tie():
    scores, ws = score_winners("copeland", CYCLE)
    assert scores == (0, 0, 0)
    assert ws == {0, 1, 2}


def test_maximin_gadget_k1():
    inst = build_gadget("maximin-ccwm", PartitionInstance((1, 1)))
    extra = witness_votes(inst, [(P, A, B, C), (P, B, C, A)])
    scores, ws = score_winners("maximin", inst.profile, extra)
    assert scores == (8, 8, 8, 9)
    assert ws == {P}


def test_score_winners_rejects_other_protocols():
    with pytest.raises(ValueError):
        score_winners("stv", CYCLE)


def test_stv_gadget_k1_rounds():
    inst = build_gadget("stv-ccwm", PartitionInstance((1, 1)))
    a, b, p = 0, 1, 2
    extra = witness_votes(inst, [(a, p, b), (p, a, b)])
    votes = list(inst.profile.fixed_votes) + extra
    assert stv_round_scores(3, votes) == {a: 6, b: 5, p: 6}
    assert stv_round_scores(3, votes, remaining=(a, p)) == {a: 6, p: 11}
    assert stv_winners(inst.profile, extra) == {p}


def test_stv_degenerate_cases():
    assert stv_winners(Profile(("x",))) == {0}
    assert stv_winners(Profile(("x", "y"), (V((0, 1), 2), V((1, 0), 2)))) == {0, 1}
    assert stv_winners(Profile(("x", "y"))) == {0, 1}


def test_stv_matches_unit_ballot_oracle():
    rng = random.Random(11)
    for _ in range(300):
        m = rng.randint(1, 5)
        votes = [V(rng.sample(range(m), m), rng.randint(0, 4)) for _ in range(rng.randint(0, 5))]
        assert stv_winners(Profile(tuple("abcde"[:m]), votes)) == naive_stv(m, votes)


def test_cup_cycle_schedule():
    sched = parse_schedule("((b c) a)", CYCLE.labels)
    assert sched == ((1, 2), 0)
    assert cup_winners(CYCLE, (), sched) == {0}


def test_cup_condorcet_winner_every_schedule():
    prof = Profile(("a", "b", "c", "d"), (V((2, 0, 1, 3), 2), V((0, 2, 3, 1), 1)))
    for leaves in itertools.permutations(range(4)):
        assert cup_winners(prof, (), canonical_schedule(leaves)) == {2}


def test_cup_two_way_tie():
    prof = Profile(("a", "b"), (V((0, 1), 3), V((1, 0), 3)))
    assert cup_winners(prof, (), (0, 1)) == {0, 1}


def test_cup_odd_weight_gives_singleton():
    rng = random.Random(5)
    for _ in range(200):
        m = rng.randint(2, 6)
        votes = [V(rng.sample(range(m), m), rng.randint(1, 5)) for _ in range(rng.randint(1, 4))]
        if sum(v.weight for v in votes) % 2 == 0:
            votes.append(V(rng.sample(range(m), m), 1))
        prof = Profile(tuple("abcdef"[:m]), votes)
        assert len(cup_winners(prof, (), random_schedule(rng, m))) == 1


def test_schedule_helpers():
    tree = canonical_schedule(range(7))
    assert format_schedule(tree, "abcdefg") == "(((a b) (c d)) ((e f) g))"
    assert schedule_leaves(tree) == list(range(7))
    assert parse_schedule("(((a b) (c d)) ((e f) g))", "abcdefg") == tree
    with pytest.raises(ValueError):
        check_schedule(((0, 1), 1), 3)
    with pytest.raises(ValueError):
        check_schedule((((0, 1), 2), 3), 4)


def test_randomized_cup_cycle():
    dist = randomized_cup_distribution(CYCLE)
    assert dist.probabilities == (Fraction(1, 3),) * 3
    assert dist.ambiguous == 0


def test_randomized_cup_condorcet_and_single():
    prof = Profile(("a", "b", "c"), (V((1, 0, 2), 1),))
    assert randomized_cup_distribution(prof).probabilities == (0, 1, 0)
    assert randomized_cup_distribution(Profile(("a",))).probabilities == (1,)


def test_randomized_cup_cap():
    with pytest.raises(ValueError):
        randomized_cup_distribution(Profile(tuple("abcdefghi")))


def test_randomized_cup_matches_schedule_enumeration():
    rng = random.Random(8)
    for _ in range(30):
        m = rng.randint(2, 5)
        votes = [V(rng.sample(range(m), m), rng.randint(0, 3)) for _ in range(3)]
        prof = Profile(tuple("abcde"[:m]), votes)
        dist = randomized_cup_distribution(prof)
        counts = [0] * m
        amb = 0
        perms = list(itertools.permutations(range(m)))
        for perm in perms:
            ws = cup_winners(prof, (), canonical_schedule(perm))
            if len(ws) == 1:
                counts[next(iter(ws))] += 1
            else:
                amb += 1
        assert dist.probabilities == tuple(Fraction(c, len(perms)) for c in counts)
        assert dist.ambiguous == Fraction(amb, len(perms))


@st.composite
def profiles(draw, max_m=5):
    m = draw(st.integers(1, max_m))
    votes = draw(st.lists(
        st.tuples(st.permutations(range(m)), st.integers(0, 6)).map(lambda t: V(t[0], t[1])),
        max_size=6,
    ))
    return Profile(tuple("abcdefgh"[:m]), votes)


@settings(max_examples=150, deadline=None)
@given(profiles())
def test_borda_conservation(prof):
    scores = borda_scores(prof.m, prof.fixed_votes)
    assert sum(scores) == prof.total_weight() * prof.m * (prof.m - 1) // 2


@settings(max_examples=150, deadline=None)
@given(profiles(), st.sampled_from(["borda", "copeland", "maximin", "stv"]))
def test_winner_set_nonempty_and_weight_splitting(prof, protocol):
    ws = winners(protocol, prof)
    assert ws and all(0 <= c < prof.m for c in ws)
    split = Profile(prof.labels, [V(v.order) for v in prof.fixed_votes for _ in range(v.weight)])
    assert winners(protocol, split) == ws


@settings(max_examples=100, deadline=None)
@given(profiles(max_m=6))
def test_randomized_cup_conservation(prof):
    assert randomized_cup_distribution(prof).total() == 1


@settings(max_examples=100, deadline=None)
@given(profiles(), st.sampled_from(["borda", "copeland", "maximin", "stv", "cup"]), st.randoms())
def test_tally_key_decides_winner(prof, protocol, r):
    sched = canonical_schedule(range(prof.m)) if protocol == "cup" else None
    tally = Tally(protocol, prof.m, sched)
    votes = list(prof.fixed_votes)
    r.shuffle(votes)
    key = tally.key(votes)
    assert key == tally.key(prof.fixed_votes)
    assert tally.winners(key) == winners(protocol, prof, (), sched)
    if protocol in ("copeland", "maximin", "cup"):
        assert tally.matrix(key) == [tuple(row) for row in pairwise_matrix(prof)]


def test_tally_doomed_is_sound():
    # If doomed says p cannot win, no p-top completion may make p the sole winner.
    rng = random.Random(2)
    for protocol in ("borda", "copeland", "maximin"):
        for _ in range(150):
            m = rng.randint(2, 4)
            prof = Profile(tuple("abcd"[:m]), [V(rng.sample(range(m), m), rng.randint(0, 4)) for _ in range(3)])
            tally = Tally(protocol, m)
            key = tally.key(prof.fixed_votes)
            w = rng.randint(0, 3)
            p = rng.randrange(m)
            if not tally.doomed(key, p, w):
                continue
            tops = [o for o in itertools.permutations(range(m)) if o[0] == p]
            for o in tops:
                assert tally.winners(tally.add(key, o, w)) != {p}
