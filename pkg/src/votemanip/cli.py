"""Command-line front end.

Every command prints ``key: value`` lines. Exit status: 0 = yes / computed,
1 = no, 2 = input error, 3 = search budget exhausted.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import gadgets, manipulate, protocols, uncertain
from .ballots import Election, ElectionFormatError, parse_election, serialize_election
from .manipulate import Verdict

EXIT_YES, EXIT_NO, EXIT_INPUT, EXIT_EXHAUSTED = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path: Optional[str], text: str, out) -> None:
    if path is None:
        out.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")
    print(f"out: {path}", file=out)


def _labelled(labels, values, order=None) -> str:
    idx = range(len(labels)) if order is None else order
    return " ".join(f"{labels[i]}={values[i]}" for i in idx)


def _winner_line(labels, ws) -> str:
    return " ".join(labels[c] for c in sorted(ws))


def cmd_winner(args, out) -> int:
    election = parse_election(_read(args.election))
    profile = election.profile
    labels = profile.labels
    proto = election.protocol
    print(f"protocol: {proto}", file=out)
    if proto in protocols.SCORE_PROTOCOLS:
        scores, ws = protocols.score_winners(proto, profile)
        ranked = sorted(range(profile.m), key=lambda c: (-scores[c], c))
        print("scores: " + _labelled(labels, scores, ranked), file=out)
    elif proto == "stv":
        first = protocols.stv_round_scores(profile.m, profile.fixed_votes)
        print("first-round: " + _labelled(labels, first), file=out)
        ws = protocols.stv_winners(profile)
    elif proto == "cup":
        print("schedule: " + protocols.format_schedule(election.schedule, labels), file=out)
        ws = protocols.cup_winners(profile, (), election.schedule)
    else:
        dist = protocols.randomized_cup_distribution(profile)
        print("probabilities: " + _labelled(labels, dist.probabilities), file=out)
        print(f"ambiguous: {dist.ambiguous}", file=out)
        return EXIT_YES
    print("winners: " + _winner_line(labels, ws), file=out)
    print("unique: " + ("yes" if len(ws) == 1 else "no"), file=out)
    return EXIT_YES


def _pick_method(election: Election, method: str) -> str:
    inst = election.instance
    if method != "auto":
        return method
    if election.protocol == "randomized-cup":
        return "randomized-cup"
    if inst.mode == "constructive":
        return "cup" if election.protocol == "cup" else "exact"
    if election.protocol in protocols.SCORE_PROTOCOLS:
        return "monotone"
    return "via-ccwm"


def cmd_manipulate(args, out) -> int:
    election = parse_election(_read(args.election))
    inst = election.instance
    if inst.target is None:
        raise UsageError("election file needs a 'target:' line for manipulation")
    labels = inst.profile.labels
    proto = election.protocol
    method = _pick_method(election, args.method)
    if method == "exact":
        ans = manipulate.solve_ccwm_exact(inst, proto, election.schedule, args.budget)
    elif method == "unweighted":
        ans = manipulate.solve_unweighted_coalition(inst, proto, election.schedule)
    elif method == "cup":
        if proto != "cup":
            raise UsageError("--method cup needs protocol cup")
        ans = manipulate.solve_cup_ccwm(inst, election.schedule)
    elif method == "monotone":
        ans = manipulate.solve_dcwm_monotone(inst, proto)
    elif method == "via-ccwm":
        ans = manipulate.solve_dcwm_via_ccwm(inst, proto, election.schedule, args.budget)
    else:
        if proto != "randomized-cup":
            raise UsageError("--method randomized-cup needs protocol randomized-cup")
        ans = uncertain.solve_uiccwm_randomized_cup(inst, args.threshold, args.budget)
    print(f"protocol: {proto}", file=out)
    print(f"mode: {inst.mode}", file=out)
    print(f"target: {labels[inst.target]}", file=out)
    print(f"method: {method}", file=out)
    if ans.probability is not None:
        print(f"threshold: {Fraction(args.threshold)}", file=out)
        print(f"probability: {ans.probability}", file=out)
    print(f"answer: {ans.verdict.value}", file=out)
    print(f"nodes: {ans.nodes}", file=out)
    if ans.verdict is Verdict.YES:
        for order, w in zip(ans.witness, inst.coalition_weights):
            print(f"witness: {inst.profile.format_order(order)} weight {w}", file=out)
    return {Verdict.YES: EXIT_YES, Verdict.NO: EXIT_NO, Verdict.EXHAUSTED: EXIT_EXHAUSTED}[ans.verdict]


def cmd_evaluate(args, out) -> int:
    inst = uncertain.parse_distribution(_read(args.dist))
    if (args.samples is None) != (args.seed is None):
        raise UsageError("Monte Carlo needs both --samples and --seed")
    if isinstance(inst, uncertain.UncertainManipulationInstance):
        if args.samples is not None:
            raise UsageError("individual manipulation is evaluated exactly; drop --samples")
        res = uncertain.solve_uvcimw(inst)
        ev = inst.evaluation
        print("method: exact", file=out)
        print(f"manipulator-weight: {inst.manipulator_weight}", file=out)
        print("best-vote: (" + ",".join(ev.labels[c] for c in res.best_vote) + ")", file=out)
        print(f"probability: {res.probability}", file=out)
        print(f"threshold: {ev.threshold}", file=out)
        print("answer: " + ("yes" if res.answer else "no"), file=out)
        return EXIT_YES if res.answer else EXIT_NO
    if args.samples is not None:
        res = uncertain.evaluate_montecarlo(inst, args.samples, args.seed)
        print("method: montecarlo", file=out)
        print(f"samples: {res.samples}", file=out)
        print(f"seed: {args.seed}", file=out)
        print(f"estimate: {res.estimate:.6f}", file=out)
        print(f"ci95: {res.low:.6f} {res.high:.6f}", file=out)
    else:
        res = uncertain.evaluate_exact(inst)
        print("method: exact", file=out)
        print(f"probability: {res.probability}", file=out)
    print(f"threshold: {inst.threshold}", file=out)
    print("answer: " + ("yes" if res.answer else "no"), file=out)
    return EXIT_YES if res.answer else EXIT_NO


def _parse_partition(text: str) -> gadgets.PartitionInstance:
    try:
        items = tuple(int(t) for t in text.replace(",", " ").split())
        return gadgets.PartitionInstance(items)
    except ValueError as exc:
        raise UsageError(f"bad partition {text!r}: {exc}") from None


def cmd_gadget(args, out) -> int:
    part = _parse_partition(args.partition)
    if args.theorem == "stv-dcwm":
        inst = gadgets.build_stv_destructive(gadgets.build_gadget("stv-ccwm", part))
        proto = "stv"
    else:
        inst = gadgets.build_gadget(args.theorem, part)
        proto = gadgets.GADGET_FAMILIES[args.theorem]
    text = serialize_election(Election(proto, inst))
    if args.out is None:
        out.write(text)
        return EXIT_YES
    answer, _ = gadgets.partition_oracle(part)
    print(f"theorem: {args.theorem}", file=out)
    print("partition: " + ("yes" if answer else "no"), file=out)
    _write(args.out, text, out)
    return EXIT_YES


def cmd_lift(args, out) -> int:
    text = _read(args.input)
    if args.theorem == "uvcwe":
        election = parse_election(text)
        inst = election.instance
        if inst.target is None or inst.mode != "constructive":
            raise UsageError("uvcwe lift needs a constructive target")
        lifted = gadgets.lift_to_uncertain(inst, election.protocol, election.schedule)
    else:
        dist = uncertain.parse_distribution(text)
        if isinstance(dist, uncertain.UncertainManipulationInstance):
            raise UsageError("lift input must be an evaluation instance without a manipulator")
        if args.theorem == "uvcimw":
            lifted = gadgets.add_null_manipulator(dist)
        else:
            lifted = gadgets.unweight_with_correlation(dist)
    _write(args.out, uncertain.serialize_distribution(lifted), out)
    return EXIT_YES


def cmd_verify(args, out) -> int:
    report = gadgets.verify_theorem(
        args.theorem,
        args.trials,
        args.seed,
        max_items=args.max_items,
        max_value=args.max_value,
        min_items=args.min_items,
        budget=args.budget,
    )
    print(f"theorem: {report.theorem}", file=out)
    print(f"trials: {len(report.trials)}", file=out)
    print(f"seed: {report.seed}", file=out)
    print(f"yes-instances: {sum(t.oracle for t in report.trials)}", file=out)
    print(f"exhausted: {report.exhausted}", file=out)
    print(f"agreement: {report.agreement:.3f}", file=out)
    if args.csv:
        _write(args.csv, report.to_csv(), out)
    return EXIT_YES if report.agreement == 1.0 else EXIT_NO


def cmd_cup_schedule(args, out) -> int:
    if args.election:
        labels = parse_election(_read(args.election)).profile.labels
    elif args.candidates:
        labels = tuple(args.candidates.split())
    else:
        raise UsageError("give --election or --candidates")
    tree = protocols.canonical_schedule(range(len(labels)))
    print(f"candidates: {len(labels)}", file=out)
    print("schedule: " + protocols.format_schedule(tree, labels), file=out)
    return EXIT_YES


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="votemanip", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("winner", help="winner set and scores of an election file")
    p.add_argument("--election", required=True)
    p.set_defaults(func=cmd_winner)

    p = sub.add_parser("manipulate", help="decide coalitional manipulation for an election file")
    p.add_argument("--election", required=True)
    p.add_argument("--method", default="auto",
                   choices=["auto", "exact", "unweighted", "cup", "monotone", "via-ccwm", "randomized-cup"])
    p.add_argument("--budget", type=int, default=manipulate.DEFAULT_BUDGET)
    p.add_argument("--threshold", type=Fraction, default=Fraction(0),
                   help="probability threshold for randomized-cup")
    p.set_defaults(func=cmd_manipulate)

    p = sub.add_parser("evaluate", help="winning probability under vote uncertainty")
    p.add_argument("--dist", required=True)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gadget", help="write the reduction instance for a PARTITION instance")
    p.add_argument("--theorem", required=True, choices=list(gadgets.THEOREMS))
    p.add_argument("--partition", required=True, help='items, e.g. "1,1,4"')
    p.add_argument("--out")
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("lift", help="uncertainty reductions between file formats")
    p.add_argument("--theorem", required=True, choices=["uvcwe", "uvcimw", "unweight"])
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("verify", help="random gadget-vs-oracle equivalence run")
    p.add_argument("--theorem", required=True, choices=list(gadgets.THEOREMS))
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-items", type=int, default=8)
    p.add_argument("--max-value", type=int, default=10)
    p.add_argument("--min-items", type=int, default=2)
    p.add_argument("--budget", type=int, default=manipulate.DEFAULT_BUDGET)
    p.add_argument("--csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cup-schedule", help="print the canonical balanced cup tree")
    p.add_argument("--show", action="store_true")
    p.add_argument("--election")
    p.add_argument("--candidates", help='labels, e.g. "a b c d e f g"')
    p.set_defaults(func=cmd_cup_schedule)
    return parser


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (UsageError, ElectionFormatError, ValueError, OverflowError, KeyError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())
