"""Problem instances and finite-horizon trace predicates.

Three problems are covered:

* oscillating configurations (4 robots cycle I, II, III, II, I, ...);
* the two-stage pattern formation ``-IL`` (3 robots form II, then III, then stop);
* independent oscillation (two end robots of a line alternate between distance
  ``x`` and ``2x`` from a stationary middle robot).

Predicates look at *stationary* states, where no robot is mid-move.  A robot
that has looked but not yet published its light has not moved, so it counts
as stationary.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

from .engine import Program, Trace, Transform, WorldState, take_snapshot
from .geometry import (
    DegenerateConfiguration,
    Point,
    equidistant_index,
    find_similarity,
    point,
    pythagorean_unit,
    rotate90_cw,
    scalar_to_str,
    squared_distance,
    strictly_between,
    to_scalar,
)

OTHER = "Other"
CONFIG_NAMES = ("I", "II", "III")


class InstanceError(ValueError):
    pass


def recognize(points: Sequence[Point], templates: dict[str, tuple[Point, ...]]):
    """Name of the template ``points`` is similar to, with the template->points map."""
    for name, template in templates.items():
        found = find_similarity(template, points)
        if found is not None:
            return name, found[0]
    return OTHER, None


def _similar(a: Sequence[Point], b: Sequence[Point]) -> bool:
    return find_similarity(a, b) is not None


# -- oscillating configurations -------------------------------------------------


@dataclass(frozen=True)
class OCInstance:
    """Three fixed robots plus one robot visiting ``hub``, ``near`` and ``far``.

    Robot ids 0-2 sit on ``triangle``; robot 3 starts at ``hub``.
    """

    triangle: tuple[Point, Point, Point] = (point(1, 0), point(-1, 0), point(0, 1))
    hub: Point = point(0, 0)
    near: Point = point(0, Fraction(1, 2))
    far: Point = point(0, Fraction(3, 4))

    def __post_init__(self) -> None:
        tri = self.triangle
        try:
            if equidistant_index([*tri, self.hub]) != 3:
                raise InstanceError("hub must be the only point equidistant from the other three")
            for name in ("II", "III"):
                if equidistant_index(self.configuration(name)) is not None:
                    raise InstanceError(f"configuration {name} must not contain an equidistant point")
        except DegenerateConfiguration as exc:
            raise InstanceError(str(exc)) from None
        if len({self.hub, self.near, self.far}) != 3:
            raise InstanceError("hub, near and far must be distinct")
        apex = _right_angle_vertex(tri)
        if apex is None:
            raise InstanceError("triangle needs exactly one right angle")
        if not (strictly_between(self.near, self.hub, apex) and strictly_between(self.far, self.near, apex)):
            raise InstanceError("near and far must lie in order on the segment from hub to the right-angle vertex")
        confs = [self.configuration(n) for n in CONFIG_NAMES]
        for i in range(3):
            for j in range(i + 1, 3):
                if _similar(confs[i], confs[j]):
                    raise InstanceError(f"configurations {CONFIG_NAMES[i]} and {CONFIG_NAMES[j]} are similar")

    def configuration(self, name: str) -> tuple[Point, ...]:
        fourth = {"I": self.hub, "II": self.near, "III": self.far}[name]
        return (*self.triangle, fourth)

    def templates(self) -> dict[str, tuple[Point, ...]]:
        return {n: self.configuration(n) for n in CONFIG_NAMES}

    def initial_world(self) -> WorldState:
        return WorldState.initial(self.configuration("I"))

    def to_json(self) -> dict:
        return {
            "problem": "oc",
            "triangle": [p.to_json() for p in self.triangle],
            "hub": self.hub.to_json(),
            "near": self.near.to_json(),
            "far": self.far.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> OCInstance:
        return cls(
            tuple(Point.from_json(p) for p in data["triangle"]),
            Point.from_json(data["hub"]),
            Point.from_json(data["near"]),
            Point.from_json(data["far"]),
        )


def _right_angle_vertex(tri: Sequence[Point]) -> Optional[Point]:
    hits = [
        p for i, p in enumerate(tri)
        if (tri[(i + 1) % 3] - p).dot(tri[(i + 2) % 3] - p) == 0
    ]
    return hits[0] if len(hits) == 1 else None


@lru_cache(maxsize=4096)
def _classify_oc_points(instance: OCInstance, points: tuple[Point, ...]) -> str:
    try:
        return recognize(points, instance.templates())[0]
    except DegenerateConfiguration:
        return OTHER


def classify_oc(world: WorldState, instance: OCInstance) -> str:
    return _classify_oc_points(instance, world.positions())


# -- -IL ----------------------------------------------------------------------


@dataclass(frozen=True)
class ILInstance:
    """Robot 0 (``mover``) turns a quarter clockwise about robot 1 (``pivot``)
    to ``mover_target``; robot 1 then leaves for ``pivot_target``.  Robot 2
    (``anchor``) never moves."""

    mover: Point = point(0, -1)
    pivot: Point = point(0, 0)
    anchor: Point = point(2, 0)
    mover_target: Point = point(-1, 0)
    pivot_target: Point = point(2, 1)

    def __post_init__(self) -> None:
        if rotate90_cw(self.mover, self.pivot) != self.mover_target:
            raise InstanceError("mover_target must be the mover turned a quarter clockwise about the pivot")
        if not strictly_between(self.pivot, self.mover_target, self.anchor):
            raise InstanceError("in configuration II the pivot must lie strictly between the others")
        confs = [self.configuration(n) for n in CONFIG_NAMES]
        try:
            for i in range(3):
                for j in range(i + 1, 3):
                    if _similar(confs[i], confs[j]):
                        raise InstanceError(f"configurations {CONFIG_NAMES[i]} and {CONFIG_NAMES[j]} are similar")
        except DegenerateConfiguration as exc:
            raise InstanceError(str(exc)) from None
        two = confs[1]
        movers = []
        for idx, p in enumerate(confs[0]):
            turned = list(confs[0])
            turned[idx] = rotate90_cw(p, self.pivot)
            if len(set(turned)) == 3 and _similar(turned, two):
                movers.append(idx)
        if movers != [0]:
            raise InstanceError("the mover must be the only robot whose quarter turn about the pivot gives II")
        if _path_meets_line(self.mover, self.mover_target, self.pivot, self.anchor) != [Fraction(1)]:
            raise InstanceError("the mover's path may meet the pivot-anchor line only at its target")

    def configuration(self, name: str) -> tuple[Point, ...]:
        return {
            "I": (self.mover, self.pivot, self.anchor),
            "II": (self.mover_target, self.pivot, self.anchor),
            "III": (self.mover_target, self.pivot_target, self.anchor),
        }[name]

    def templates(self) -> dict[str, tuple[Point, ...]]:
        return {n: self.configuration(n) for n in CONFIG_NAMES}

    def initial_world(self) -> WorldState:
        return WorldState.initial(self.configuration("I"))

    def to_json(self) -> dict:
        return {
            "problem": "il",
            **{k: getattr(self, k).to_json() for k in ("mover", "pivot", "anchor", "mover_target", "pivot_target")},
        }

    @classmethod
    def from_json(cls, data: dict) -> ILInstance:
        keys = ("mover", "pivot", "anchor", "mover_target", "pivot_target")
        return cls(**{k: Point.from_json(data[k]) for k in keys})


def _path_meets_line(start: Point, end: Point, a: Point, b: Point) -> list[Fraction]:
    """Parameters ``t`` in [0, 1] where start + t(end - start) lies on line ab."""
    d = end - start
    ab = b - a
    denom = d.cross(ab)
    num = (a - start).cross(ab)
    if denom == 0:
        return [] if num != 0 else [Fraction(0), Fraction(1)]
    t = num / denom
    return [t] if 0 <= t <= 1 else []


@lru_cache(maxsize=4096)
def _classify_il_points(instance: ILInstance, points: tuple[Point, ...]) -> str:
    try:
        return recognize(points, instance.templates())[0]
    except DegenerateConfiguration:
        return OTHER


def classify_il(world: WorldState, instance: ILInstance) -> str:
    return _classify_il_points(instance, world.positions())


# -- independent oscillation ----------------------------------------------------


@dataclass(frozen=True)
class IOPInstance:
    """Robots 0 and 2 at ``middle - gaps[0] * direction`` and
    ``middle + gaps[1] * direction``; robot 1 is the middle robot."""

    direction: Point = point(1, 0)
    middle: Point = point(0, 0)
    gaps: tuple[Fraction, Fraction] = (Fraction(1), Fraction(3, 2))

    def __post_init__(self) -> None:
        object.__setattr__(self, "gaps", tuple(to_scalar(g) for g in self.gaps))
        if self.direction.norm2() != 1:
            raise InstanceError("direction must be a rational unit vector")
        if len(self.gaps) != 2 or any(g <= 0 for g in self.gaps):
            raise InstanceError("both gaps must be positive")

    def positions(self) -> tuple[Point, Point, Point]:
        u = self.direction
        return (self.middle - u.scaled(self.gaps[0]), self.middle, self.middle + u.scaled(self.gaps[1]))

    def initial_world(self) -> WorldState:
        return WorldState.initial(self.positions())

    def scaled(self, first: Fraction = Fraction(1), second: Fraction = Fraction(1)) -> IOPInstance:
        return IOPInstance(self.direction, self.middle, (self.gaps[0] * first, self.gaps[1] * second))

    def to_json(self) -> dict:
        return {
            "problem": "iop",
            "direction": self.direction.to_json(),
            "middle": self.middle.to_json(),
            "gaps": [scalar_to_str(g) for g in self.gaps],
        }

    @classmethod
    def from_json(cls, data: dict) -> IOPInstance:
        return cls(
            Point.from_json(data["direction"]),
            Point.from_json(data["middle"]),
            tuple(to_scalar(g) for g in data["gaps"]),
        )


MIDDLE = 1
TERMINALS = (0, 2)


def random_iop_instance(rng: random.Random) -> IOPInstance:
    while True:
        p, q = rng.randint(0, 6), rng.randint(0, 6)
        if p or q:
            break
    u = Point(*pythagorean_unit(p, q))
    middle = point(Fraction(rng.randint(-20, 20), rng.randint(1, 7)), Fraction(rng.randint(-20, 20), rng.randint(1, 7)))
    gaps = (Fraction(rng.randint(1, 12), rng.randint(1, 5)), Fraction(rng.randint(1, 12), rng.randint(1, 5)))
    return IOPInstance(u, middle, gaps)


def default_instances() -> tuple[OCInstance, ILInstance, IOPInstance]:
    return OCInstance(), ILInstance(), IOPInstance()


def instance_from_json(data: dict):
    kind = data.get("problem")
    cls = {"oc": OCInstance, "il": ILInstance, "iop": IOPInstance}.get(kind)
    if cls is None:
        raise InstanceError(f"unknown problem {kind!r}")
    return cls.from_json(data)


# -- verdicts -------------------------------------------------------------------


@dataclass(frozen=True)
class PredicateViolation:
    index: int
    rule: str
    detail: str = ""


@dataclass(frozen=True)
class Verdict:
    passed: bool
    cycles: dict[str, int] = field(default_factory=dict)
    violation: Optional[PredicateViolation] = None
    sequence: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.passed and self.violation is None:
            raise ValueError("a failing verdict must say where it failed")

    @property
    def horizon_limited(self) -> bool:
        """The only failure is not enough progress within the trace."""
        return self.violation is not None and self.violation.rule in LIVENESS_RULES

    def to_json(self) -> dict:
        v = self.violation
        return {
            "passed": self.passed,
            "cycles": dict(self.cycles),
            "sequence": list(self.sequence),
            "violation": None if v is None else {"index": v.index, "rule": v.rule, "detail": v.detail},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


LIVENESS_RULES = frozenset({"min-cycles", "incomplete"})

_OC_PERIOD = ("I", "II", "III", "II")


def check_oc(trace: Trace, instance: OCInstance, min_cycles: int = 1) -> Verdict:
    seq: list[str] = []

    def fail(index, rule, detail):
        return Verdict(False, {"periods": max(0, (len(seq) - 1) // 4)}, PredicateViolation(index, rule, detail), tuple(seq))

    for world in trace.worlds():
        if not world.stationary:
            continue
        name = classify_oc(world, instance)
        if name == OTHER:
            return fail(world.event_index, "other-at-rest", "robots at rest outside configurations I, II, III")
        if seq and seq[-1] == name:
            continue
        expected = _OC_PERIOD[len(seq) % 4]
        if name != expected:
            return fail(world.event_index, "order", f"reached {name} where {expected} was required")
        seq.append(name)
    periods = max(0, (len(seq) - 1) // 4)
    if periods < min_cycles:
        return fail(trace.final.event_index, "min-cycles", f"{periods} full periods, {min_cycles} required")
    return Verdict(True, {"periods": periods}, None, tuple(seq))


def _quiescence_frames() -> list[tuple[Fraction, Fraction]]:
    return [
        (Fraction(1), Fraction(0)),
        (Fraction(0), Fraction(1)),
        (Fraction(-3), Fraction(4)),
        (Fraction(5, 13), Fraction(-12, 13)),
    ]


def is_quiescent(world: WorldState, program: Program) -> Optional[int]:
    """Id of a robot that would still act, or ``None`` if every cycle is null."""
    for r in world.robots:
        for mult in _quiescence_frames():
            frame = Transform.centered(mult, r.position)
            action = program(take_snapshot(world, r.id, program.model, frame))
            if not action.is_null(r.light):
                return r.id
    return None


def check_il(trace: Trace, instance: ILInstance, program: Optional[Program] = None) -> Verdict:
    if program is None:
        from .algorithms import comil_program

        program = comil_program(instance)
    seq: list[str] = []

    def fail(index, rule, detail):
        return Verdict(False, {"stages": len(seq)}, PredicateViolation(index, rule, detail), tuple(seq))

    for world in trace.worlds():
        if not world.stationary:
            continue
        name = classify_il(world, instance)
        if seq and seq[-1] == name:
            continue
        if len(seq) >= 3 or name != CONFIG_NAMES[len(seq)]:
            want = CONFIG_NAMES[len(seq)] if len(seq) < 3 else "nothing further"
            return fail(world.event_index, "order", f"reached {name} where {want} was required")
        seq.append(name)
    final = trace.final
    if len(seq) < 3:
        return fail(final.event_index, "incomplete", f"stopped after {' '.join(seq)}")
    if not final.all_idle:
        return fail(final.event_index, "not-quiescent", "trace ends with a cycle in progress")
    busy = is_quiescent(final, program)
    if busy is not None:
        return fail(final.event_index, "not-quiescent", f"robot {busy} would still act")
    return Verdict(True, {"stages": 3}, None, tuple(seq))


def check_iop(trace: Trace, instance: IOPInstance, min_cycles: int = 1) -> Verdict:
    """Milestone check for both end robots.

    Distances are compared squared.  Each end robot's base distance is taken
    from the first state of the trace, so the check does not depend on the
    coordinate system the trace is written in.
    """
    worlds = trace.worlds()
    first = worlds[0]
    mid0 = first.robot(MIDDLE).position
    base = {i: squared_distance(first.robot(i).position, mid0) for i in TERMINALS}
    top = {i: 4 * base[i] for i in TERMINALS}
    rising = {i: True for i in TERMINALS}
    prev = dict(base)
    milestones = {i: 0 for i in TERMINALS}
    peak = {i: base[i] for i in TERMINALS}

    def cycles():
        out = {f"r{i}": milestones[i] // 2 for i in TERMINALS}
        out.update({f"r{i}_peak_ratio2": peak[i] / base[i] for i in TERMINALS})
        return {k: (str(v) if isinstance(v, Fraction) else v) for k, v in out.items()}

    def fail(index, rule, detail):
        return Verdict(False, cycles(), PredicateViolation(index, rule, detail))

    for world in worlds:
        mid = world.robot(MIDDLE).position
        if mid != mid0:
            return fail(world.event_index, "middle-moved", f"middle robot left {mid0}")
        for i in TERMINALS:
            d = squared_distance(world.robot(i).position, mid)
            peak[i] = max(peak[i], d)
            if d > top[i]:
                return fail(world.event_index, "overshoot", f"robot {i} beyond twice its base distance")
            if rising[i]:
                if d < prev[i]:
                    return fail(world.event_index, "monotonicity", f"robot {i} approached while it should move away")
                if d == top[i]:
                    milestones[i] += 1
                    rising[i] = False
            else:
                if d > prev[i]:
                    return fail(world.event_index, "monotonicity", f"robot {i} receded while it should approach")
                if d < base[i]:
                    return fail(world.event_index, "undershoot", f"robot {i} closer than its base distance")
                if d == base[i]:
                    milestones[i] += 1
                    rising[i] = True
            prev[i] = d
    short = [i for i in TERMINALS if milestones[i] < 2 * min_cycles]
    if short:
        return fail(trace.final.event_index, "min-cycles", f"robots {short} alternated fewer than {2 * min_cycles} times")
    return Verdict(True, cycles())
