"""Core election types, the election file format, and the pairwise matrix.

Votes are total orders over candidate indices (highest-ranked first) with a
nonnegative integer weight. A weight-``k`` vote is interchangeable with ``k``
identical unit votes everywhere in the package.

Election file format (line oriented, ``#`` starts a comment)::

    protocol: borda|copeland|maximin|stv|cup|randomized-cup
    candidates: a b p
    schedule: ((a b) p)                # cup only
    fixed: 5 : b > p > a
    coalition: 2
    target: constructive p             # optional
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

PROTOCOLS = ("borda", "copeland", "maximin", "stv", "cup", "randomized-cup")
MODES = ("constructive", "destructive")

MAX_CANDIDATES = 26
MAX_LABEL_LENGTH = 8
# Every weight and every sum of weights in one election must fit a signed 63-bit integer.
MAX_WEIGHT = 2**63 - 1

_LABEL_RE = re.compile(r"^[A-Za-z0-9]+$")
_INT_RE = re.compile(r"^[0-9]+$")

Order = tuple[int, ...]


class ElectionFormatError(ValueError):
    """Raised for malformed election or distribution documents."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Candidate(NamedTuple):
    index: int
    label: str


@dataclass(frozen=True)
class WeightedVote:
    order: Order
    weight: int = 1

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(self.order))
        check_weight(self.weight)


def check_weight(weight) -> int:
    if isinstance(weight, bool) or not isinstance(weight, int):
        raise TypeError(f"weights must be integers, got {weight!r}")
    if weight < 0:
        raise ValueError(f"negative weight {weight}")
    if weight > MAX_WEIGHT:
        raise OverflowError(f"weight {weight} exceeds the 63-bit range")
    return weight


def check_total(weights: Iterable[int]) -> int:
    """Sum weights, refusing totals that leave the 63-bit range."""
    total = 0
    for w in weights:
        total += w
        if total > MAX_WEIGHT:
            raise OverflowError("total vote weight exceeds the 63-bit range")
    return total


def is_permutation(order: Sequence[int], m: int) -> bool:
    return len(order) == m and sorted(order) == list(range(m))


@dataclass(frozen=True)
class Profile:
    """Candidate labels plus the fixed (already cast) weighted votes."""

    labels: tuple[str, ...]
    fixed_votes: tuple[WeightedVote, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "fixed_votes", tuple(self.fixed_votes))
        m = len(self.labels)
        if m < 1:
            raise ValueError("an election needs at least one candidate")
        if m > MAX_CANDIDATES:
            raise ValueError(f"at most {MAX_CANDIDATES} candidates are supported")
        for label in self.labels:
            if not _LABEL_RE.match(label) or len(label) > MAX_LABEL_LENGTH:
                raise ValueError(f"bad candidate label {label!r}")
        if len(set(self.labels)) != m:
            raise ValueError("duplicate candidate labels")
        for vote in self.fixed_votes:
            if not is_permutation(vote.order, m):
                raise ValueError(f"vote {vote.order} is not a permutation of the candidates")
        check_total(v.weight for v in self.fixed_votes)

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def candidates(self) -> tuple[Candidate, ...]:
        return tuple(Candidate(i, lab) for i, lab in enumerate(self.labels))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown candidate {label!r}") from None

    def total_weight(self) -> int:
        return check_total(v.weight for v in self.fixed_votes)

    def format_order(self, order: Sequence[int]) -> str:
        return "(" + ",".join(self.labels[c] for c in order) + ")"

    def with_votes(self, extra: Iterable[WeightedVote]) -> "Profile":
        return Profile(self.labels, self.fixed_votes + tuple(extra))


@dataclass(frozen=True)
class ManipulationInstance:
    """A profile plus open coalition weights, a mode and a target candidate.

    ``target`` is the preferred candidate in constructive mode and the hated
    one in destructive mode. It may be left as ``None`` for files that only
    describe an election.
    """

    profile: Profile
    coalition_weights: tuple[int, ...] = ()
    mode: str = "constructive"
    target: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "coalition_weights", tuple(self.coalition_weights))
        for w in self.coalition_weights:
            check_weight(w)
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.target is not None and not 0 <= self.target < self.profile.m:
            raise ValueError(f"target {self.target} out of range")
        check_total(
            [v.weight for v in self.profile.fixed_votes] + list(self.coalition_weights)
        )

    def require_target(self) -> int:
        if self.target is None:
            raise ValueError("instance has no target candidate")
        return self.target

    def total_weight(self) -> int:
        return check_total(
            [v.weight for v in self.profile.fixed_votes] + list(self.coalition_weights)
        )


@dataclass(frozen=True)
class Election:
    """Everything one election file holds."""

    protocol: str
    instance: ManipulationInstance
    schedule: object = field(default=None)

    @property
    def profile(self) -> Profile:
        return self.instance.profile


def _parse_weight(text: str, lineno: int) -> int:
    text = text.strip()
    if text.startswith("-"):
        raise ElectionFormatError(f"negative weight {text!r}", lineno)
    if not _INT_RE.match(text):
        raise ElectionFormatError(f"weight must be a nonnegative integer, got {text!r}", lineno)
    w = int(text)
    if w > MAX_WEIGHT:
        raise ElectionFormatError(f"weight {text} overflows the 63-bit range", lineno)
    return w


def parse_order(text: str, labels: Sequence[str], lineno: Optional[int] = None) -> Order:
    """Parse ``a > b > c`` into candidate indices; must be a full permutation."""
    names = [s.strip() for s in text.split(">")]
    index = {lab: i for i, lab in enumerate(labels)}
    try:
        order = tuple(index[n] for n in names)
    except KeyError as exc:
        raise ElectionFormatError(f"unknown candidate {exc.args[0]!r}", lineno) from None
    if not is_permutation(order, len(labels)):
        raise ElectionFormatError(f"vote {text.strip()!r} is not a permutation", lineno)
    return order


def format_order_line(order: Sequence[int], labels: Sequence[str]) -> str:
    return " > ".join(labels[c] for c in order)


def iter_lines(text: str):
    """Yield ``(lineno, key, value)`` for every non-blank line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition(":")
        if not sep:
            raise ElectionFormatError(f"expected 'key: value', got {line!r}", lineno)
        yield lineno, key.strip().lower(), value.strip()


def _parse_labels(value: str, lineno: int) -> tuple[str, ...]:
    labels = tuple(value.split())
    if not labels:
        raise ElectionFormatError("no candidates declared", lineno)
    if len(labels) > MAX_CANDIDATES:
        raise ElectionFormatError(f"at most {MAX_CANDIDATES} candidates are supported", lineno)
    seen = set()
    for lab in labels:
        if not _LABEL_RE.match(lab) or len(lab) > MAX_LABEL_LENGTH:
            raise ElectionFormatError(f"bad candidate label {lab!r}", lineno)
        if lab in seen:
            raise ElectionFormatError(f"duplicate candidate label {lab!r}", lineno)
        seen.add(lab)
    return labels


def parse_election(text: str) -> Election:
    """Parse an election document.

    Raises:
        ElectionFormatError: on any malformed line, duplicate label,
            non-permutation vote, bad weight, unknown protocol, or a
            ``schedule:`` line that does not match the protocol.
    """
    from .protocols import parse_schedule

    protocol = None
    labels = None
    schedule_text = None
    fixed_raw: list[tuple[int, int, str]] = []
    coalition: list[int] = []
    target_raw = None

    for lineno, key, value in iter_lines(text):
        if key == "protocol":
            if protocol is not None:
                raise ElectionFormatError("protocol declared twice", lineno)
            if value not in PROTOCOLS:
                raise ElectionFormatError(f"unknown protocol {value!r}", lineno)
            protocol = value
        elif key == "candidates":
            if labels is not None:
                raise ElectionFormatError("candidates declared twice", lineno)
            labels = _parse_labels(value, lineno)
        elif key == "schedule":
            if schedule_text is not None:
                raise ElectionFormatError("schedule declared twice", lineno)
            schedule_text = (value, lineno)
        elif key == "fixed":
            weight, sep, order = value.partition(":")
            if not sep:
                raise ElectionFormatError("fixed votes look like 'fixed: <weight> : a > b'", lineno)
            fixed_raw.append((lineno, _parse_weight(weight, lineno), order))
        elif key == "coalition":
            coalition.append(_parse_weight(value, lineno))
        elif key == "target":
            if target_raw is not None:
                raise ElectionFormatError("target declared twice", lineno)
            parts = value.split()
            if len(parts) != 2 or parts[0] not in MODES:
                raise ElectionFormatError(
                    "target looks like 'constructive <label>' or 'destructive <label>'", lineno
                )
            target_raw = (parts[0], parts[1], lineno)
        else:
            raise ElectionFormatError(f"unknown key {key!r}", lineno)

    if protocol is None:
        raise ElectionFormatError("missing 'protocol:' line")
    if labels is None:
        raise ElectionFormatError("missing 'candidates:' line")

    fixed = tuple(
        WeightedVote(parse_order(order, labels, lineno), weight)
        for lineno, weight, order in fixed_raw
    )
    mode, target = "constructive", None
    if target_raw is not None:
        mode, label, lineno = target_raw
        if label not in labels:
            raise ElectionFormatError(f"unknown target candidate {label!r}", lineno)
        target = labels.index(label)

    schedule = None
    if protocol == "cup":
        if schedule_text is None:
            raise ElectionFormatError("protocol 'cup' needs a 'schedule:' line")
        try:
            schedule = parse_schedule(schedule_text[0], labels)
        except ValueError as exc:
            raise ElectionFormatError(str(exc), schedule_text[1]) from None
    elif schedule_text is not None:
        raise ElectionFormatError(
            f"'schedule:' is only valid for protocol 'cup', not {protocol!r}", schedule_text[1]
        )

    try:
        instance = ManipulationInstance(Profile(labels, fixed), tuple(coalition), mode, target)
    except (ValueError, OverflowError) as exc:
        raise ElectionFormatError(str(exc)) from None
    return Election(protocol, instance, schedule)


def serialize_election(election: Election) -> str:
    from .protocols import format_schedule

    inst = election.instance
    labels = inst.profile.labels
    lines = [f"protocol: {election.protocol}", "candidates: " + " ".join(labels)]
    if election.schedule is not None:
        lines.append("schedule: " + format_schedule(election.schedule, labels))
    for vote in inst.profile.fixed_votes:
        lines.append(f"fixed: {vote.weight} : {format_order_line(vote.order, labels)}")
    for w in inst.coalition_weights:
        lines.append(f"coalition: {w}")
    if inst.target is not None:
        lines.append(f"target: {inst.mode} {labels[inst.target]}")
    return "\n".join(lines) + "\n"


def pairwise_matrix(
    profile: Profile, extra_votes: Iterable[WeightedVote] = ()
) -> tuple[tuple[int, ...], ...]:
    """Entry ``[i][j]`` is the total weight of votes ranking ``i`` above ``j``."""
    votes = list(profile.fixed_votes) + list(extra_votes)
    m = profile.m
    for v in votes:
        if not is_permutation(v.order, m):
            raise ValueError(f"vote {v.order} is not a permutation of the candidates")
    check_total(v.weight for v in votes)
    grid = [[0] * m for _ in range(m)]
    for v in votes:
        if not v.weight:
            continue
        order = v.order
        for a in range(m):
            row = grid[order[a]]
            for b in range(a + 1, m):
                row[order[b]] += v.weight
    return tuple(tuple(row) for row in grid)
