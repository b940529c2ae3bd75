import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from votemanip.ballots import ElectionFormatError, ManipulationInstance, Profile, WeightedVote
from votemanip.gadgets import add_null_manipulator
from votemanip.manipulate import Verdict
from votemanip.protocols import canonical_schedule, randomized_cup_distribution, winners
from votemanip.uncertain import (
    UncertainEvaluationInstance,
    UncertainManipulationInstance,
    Voter,
    evaluate_exact,
    evaluate_montecarlo,
    parse_distribution,
    serialize_distribution,
    solve_uiccwm_randomized_cup,
    solve_uvcimw,
)

ONE_THIRD = UncertainEvaluationInstance(("a", "b", "p"), (Voter(1, (0, 1, 2)), Voter(10)), "borda", 2)


def brute_probability(inst, extra=()):
    """Average the target's sole-win indicator over every joint draw, one order per draw unit."""
    fixed, uniform = inst.draws()
    m = len(inst.labels)
    prof = Profile(inst.labels, [WeightedVote(o, w) for o, w in fixed] + list(extra))
    orders = list(itertools.permutations(range(m)))
    total = Fraction(0)
    combos = list(itertools.product(orders, repeat=len(uniform)))
    for combo in combos:
        drawn = [WeightedVote(o, w) for o, w in zip(combo, uniform)]
        if inst.protocol == "randomized-cup":
            total += randomized_cup_distribution(prof, drawn).probabilities[inst.target]
        else:
            ws = winners(inst.protocol, prof, drawn, inst.schedule)
            total += ws == {inst.target}
    return total / len(combos)


def random_uncertain(rng, protocols=("borda", "copeland", "maximin", "stv", "cup", "randomized-cup")):
    m = rng.randint(2, 3)
    protocol = rng.choice(protocols)
    voters = []
    for _ in range(rng.randint(1, 4)):
        w = rng.randint(0, 3)
        voters.append(Voter(w, None if rng.random() < 0.5 else tuple(rng.sample(range(m), m))))
    sched = canonical_schedule(rng.sample(range(m), m)) if protocol == "cup" else None
    return UncertainEvaluationInstance(tuple("abc"[:m]), tuple(voters), protocol, rng.randrange(m),
                                       schedule=sched)


def test_one_third_example():
    res = evaluate_exact(ONE_THIRD)
    assert res.probability == Fraction(1, 3)
    assert res.answer


def test_exact_matches_enumeration():
    rng = random.Random(12)
    for _ in range(80):
        inst = random_uncertain(rng)
        assert evaluate_exact(inst).probability == brute_probability(inst)


def test_all_degenerate_is_deterministic():
    rng = random.Random(13)
    for _ in range(50):
        m = 3
        votes = [(tuple(rng.sample(range(m), m)), rng.randint(1, 3)) for _ in range(3)]
        inst = UncertainEvaluationInstance(("a", "b", "c"), tuple(Voter(w, o) for o, w in votes), "maximin", 1)
        expected = winners("maximin", Profile(("a", "b", "c"), [WeightedVote(o, w) for o, w in votes])) == {1}
        assert evaluate_exact(inst).probability == int(expected)


def test_correlated_group_draws_once():
    # Two correlated unit voters behave like one weight-2 voter.
    grouped = UncertainEvaluationInstance(("a", "p"), (Voter(1, (0, 1)), Voter(1), Voter(1)), "borda", 1,
                                          correlations=((1, 2),))
    merged = UncertainEvaluationInstance(("a", "p"), (Voter(1, (0, 1)), Voter(2)), "borda", 1)
    independent = UncertainEvaluationInstance(("a", "p"), (Voter(1, (0, 1)), Voter(1), Voter(1)), "borda", 1)
    assert evaluate_exact(grouped).probability == evaluate_exact(merged).probability == Fraction(1, 2)
    assert evaluate_exact(independent).probability == Fraction(1, 4)


def test_threshold_is_strict():
    inst = UncertainEvaluationInstance(ONE_THIRD.labels, ONE_THIRD.voters, "borda", 2, Fraction(1, 3))
    assert not evaluate_exact(inst).answer


def test_enumeration_bound():
    inst = UncertainEvaluationInstance(tuple("abcde"), tuple(Voter(1) for _ in range(5)), "borda", 0)
    with pytest.raises(ValueError, match="evaluate_montecarlo"):
        evaluate_exact(inst)


@pytest.mark.parametrize("bad", [
    dict(correlations=((0, 1),)),
    dict(correlations=((0,), (0,))),
    dict(correlations=((5,),)),
    dict(threshold=Fraction(3, 2)),
    dict(target=7),
    dict(protocol="cup"),
])
def test_instance_validation(bad):
    args = dict(labels=("a", "b"), voters=(Voter(1, (0, 1)), Voter(1)), protocol="borda", target=0)
    args.update(bad)
    with pytest.raises(ValueError):
        UncertainEvaluationInstance(**args)


# --- Monte Carlo ---------------------------------------------------------------------


def test_montecarlo_one_third():
    res = evaluate_montecarlo(ONE_THIRD, 100_000, seed=1)
    assert res.low <= 1 / 3 <= res.high
    assert abs(res.estimate - 1 / 3) < 0.01


def test_montecarlo_deterministic_instance():
    inst = UncertainEvaluationInstance(("a", "p"), (Voter(3, (1, 0)),), "copeland", 1)
    res = evaluate_montecarlo(inst, 50, seed=0)
    assert (res.estimate, res.low, res.high) == (1.0, 1.0, 1.0)


def test_montecarlo_same_seed_same_result():
    inst = UncertainEvaluationInstance(("a", "b", "p"), (Voter(2), Voter(1), Voter(1, (0, 2, 1))), "randomized-cup", 2)
    assert evaluate_montecarlo(inst, 5000, seed=4) == evaluate_montecarlo(inst, 5000, seed=4)


def test_montecarlo_interval_coverage():
    inst = UncertainEvaluationInstance(("a", "b", "p"), (Voter(2, (0, 1, 2)), Voter(1), Voter(2)), "stv", 2)
    exact = float(evaluate_exact(inst).probability)
    hits = sum(
        (lambda r: r.low <= exact <= r.high)(evaluate_montecarlo(inst, 2000, seed=s)) for s in range(100)
    )
    assert hits >= 90


def test_montecarlo_randomized_cup_close_to_exact():
    inst = UncertainEvaluationInstance(("a", "b", "c", "p"), (Voter(1), Voter(2), Voter(1, (3, 0, 1, 2))),
                                       "randomized-cup", 3)
    res = evaluate_montecarlo(inst, 20_000, seed=9)
    assert res.low <= float(evaluate_exact(inst).probability) <= res.high


def test_montecarlo_rejects_zero_samples():
    with pytest.raises(ValueError):
        evaluate_montecarlo(ONE_THIRD, 0, seed=1)


# --- individual manipulator -------------------------------------------------------------


def test_null_manipulator_matches_evaluation():
    rng = random.Random(14)
    for _ in range(40):
        inst = random_uncertain(rng)
        res = solve_uvcimw(add_null_manipulator(inst))
        assert res.probability == evaluate_exact(inst).probability
        assert res.best_vote == tuple(range(inst.m))


def test_uvcimw_heavy_borda_manipulator():
    ev = UncertainEvaluationInstance(("a", "b", "p"), (Voter(1, (0, 1, 2)), Voter(1), Voter(1)), "borda", 2)
    res = solve_uvcimw(UncertainManipulationInstance(ev, 10))
    assert res.best_vote[0] == 2
    assert res.probability == 1
    baseline = evaluate_exact(ev).probability
    for rest in itertools.permutations((0, 1)):
        vote = Voter(10, (2,) + rest)
        assert evaluate_exact(UncertainEvaluationInstance(ev.labels, ev.voters + (vote,), "borda", 2)).probability >= baseline


def test_uvcimw_matches_order_enumeration():
    rng = random.Random(15)
    for _ in range(25):
        ev = random_uncertain(rng)
        w = rng.randint(0, 3)
        res = solve_uvcimw(UncertainManipulationInstance(ev, w))
        probs = [brute_probability(ev, [WeightedVote(o, w)]) for o in itertools.permutations(range(ev.m))]
        assert res.probability == max(probs)


def test_uvcimw_threshold_one_always_no():
    ev = UncertainEvaluationInstance(("a", "p"), (Voter(1, (1, 0)),), "borda", 1, Fraction(1))
    res = solve_uvcimw(UncertainManipulationInstance(ev, 5))
    assert res.probability == 1 and not res.answer


# --- randomized cup coalition ---------------------------------------------------------


def test_uiccwm_condorcet_vote():
    inst = ManipulationInstance(Profile(("a", "b", "p")), (1,), "constructive", 2)
    ans = solve_uiccwm_randomized_cup(inst, Fraction(9, 10))
    assert ans.verdict is Verdict.YES
    assert ans.probability == 1
    assert ans.witness[0][0] == 2


def test_uiccwm_unbreakable_cycle():
    prof = Profile(("a", "b", "p"), (WeightedVote((0, 1, 2), 2), WeightedVote((1, 2, 0), 2), WeightedVote((2, 0, 1), 2)))
    inst = ManipulationInstance(prof, (1,), "constructive", 2)
    ans = solve_uiccwm_randomized_cup(inst, Fraction(1, 3))
    assert ans.verdict is Verdict.NO
    assert ans.probability == Fraction(1, 3)
    assert solve_uiccwm_randomized_cup(inst, 0).verdict is Verdict.YES


def test_uiccwm_matches_brute_force():
    rng = random.Random(16)
    for _ in range(40):
        m = rng.randint(2, 4)
        fixed = [WeightedVote(tuple(rng.sample(range(m), m)), rng.randint(0, 3)) for _ in range(rng.randint(0, 3))]
        coalition = tuple(rng.randint(0, 3) for _ in range(rng.randint(0, 2)))
        p = rng.randrange(m)
        inst = ManipulationInstance(Profile(tuple("abcd"[:m]), fixed), coalition, "constructive", p)
        ans = solve_uiccwm_randomized_cup(inst)
        orders = list(itertools.permutations(range(m)))
        best = max(
            randomized_cup_distribution(inst.profile, [WeightedVote(o, w) for o, w in zip(combo, coalition)]).probabilities[p]
            for combo in itertools.product(orders, repeat=len(coalition))
        )
        assert ans.probability == best
        if ans.verdict is Verdict.YES:
            extra = [WeightedVote(o, w) for o, w in zip(ans.witness, coalition)]
            assert randomized_cup_distribution(inst.profile, extra).probabilities[p] == best


def test_uiccwm_budget():
    prof = Profile(("a", "b", "c", "p"), (WeightedVote((0, 1, 2, 3), 9),))
    inst = ManipulationInstance(prof, (1, 2, 3), "constructive", 3)
    assert solve_uiccwm_randomized_cup(inst, 0, budget=3).verdict is Verdict.EXHAUSTED


# --- file format ---------------------------------------------------------------------


def test_distribution_file_example():
    text = """
    protocol: borda
    candidates: a b p
    target: p
    threshold: 1/4
    voter: 1 fixed a > b > p
    voter: 10 uniform
    """
    inst = parse_distribution(text)
    assert inst.voters == ONE_THIRD.voters
    assert inst.threshold == Fraction(1, 4)
    assert evaluate_exact(inst).answer


def test_distribution_file_round_trip():
    rng = random.Random(18)
    for _ in range(40):
        inst = random_uncertain(rng)
        assert parse_distribution(serialize_distribution(inst)) == inst
        manip = UncertainManipulationInstance(inst, rng.randint(0, 4))
        assert parse_distribution(serialize_distribution(manip)) == manip


@pytest.mark.parametrize("line", [
    "voter: 2 sometimes",
    "voter: -1 uniform",
    "threshold: 2",
    "correlate: 0 x",
    "correlate: 0 1",
    "mystery: 1",
])
def test_distribution_file_errors(line):
    base = "protocol: borda\ncandidates: a p\ntarget: p\nvoter: 1 uniform\nvoter: 2 uniform\n"
    with pytest.raises(ElectionFormatError):
        parse_distribution(base + line + "\n")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_unweighting_preserves_probability(seed):
    from votemanip.gadgets import unweight_with_correlation

    rng = random.Random(seed)
    inst = random_uncertain(rng)
    inst = UncertainEvaluationInstance(inst.labels, tuple(Voter(max(v.weight, 1), v.order) for v in inst.voters),
                                       inst.protocol, inst.target, schedule=inst.schedule)
    assert evaluate_exact(unweight_with_correlation(inst)).probability == evaluate_exact(inst).probability


def test_outcome_count_denominator():
    # Probabilities live on the grid 1/(m!)^u.
    inst = UncertainEvaluationInstance(("a", "b", "p"), (Voter(1), Voter(2)), "copeland", 2)
    prob = evaluate_exact(inst).probability
    assert (prob * math.factorial(3) ** 2).denominator == 1
