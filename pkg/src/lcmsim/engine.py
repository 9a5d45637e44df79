"""World state, per-model snapshots and Look-Compute-Move execution.

An asynchronous execution is a sequence of three event kinds:

* ``Activate`` -- the instantaneous Look plus the (invisible) computation;
* ``FinishCompute`` -- the computed light becomes visible and motion starts;
* ``Progress`` -- the robot advances a fraction of its straight-line move.

Synchronous executions use ``Round`` events, where every active robot looks at
the same world and then all lights and moves are applied atomically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, TextIO, Union

from .geometry import (
    ORIGIN,
    Point,
    Transform,
    lerp,
    parse_scalar,
    scalar_to_str,
    to_scalar,
)

NIL = "NIL"


class Model(str, Enum):
    OBLOT = "OBLOT"
    FSTA = "FSTA"
    FCOM = "FCOM"
    LUMI = "LUMI"

    @property
    def sees_own_light(self) -> bool:
        return self in (Model.FSTA, Model.LUMI)

    @property
    def sees_other_lights(self) -> bool:
        return self in (Model.FCOM, Model.LUMI)


class SimulationError(RuntimeError):
    def __init__(self, message: str, event_index: Optional[int] = None):
        super().__init__(message)
        self.event_index = event_index


class IllegalEvent(SimulationError):
    pass


class CollisionError(SimulationError):
    pass


class FrameError(ValueError):
    pass


class SnapshotShapeError(ValueError):
    """A program received a snapshot its model does not allow it to read."""


# -- phases -----------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Idle:
    position: Point

    @property
    def current(self) -> Point:
        return self.position


@dataclass(frozen=True, slots=True)
class PendingCompute:
    position: Point
    light: str
    destination: Point

    @property
    def current(self) -> Point:
        return self.position


@dataclass(frozen=True, slots=True)
class Moving:
    start: Point
    dest: Point
    progress: Fraction = Fraction(0)

    @property
    def current(self) -> Point:
        if self.progress == 0:
            return self.start
        return lerp(self.start, self.dest, self.progress)


Phase = Union[Idle, PendingCompute, Moving]


@dataclass(frozen=True, slots=True)
class RobotState:
    id: int
    phase: Phase
    light: str = NIL

    @property
    def position(self) -> Point:
        return self.phase.current


@dataclass(frozen=True)
class WorldState:
    robots: tuple[RobotState, ...]
    event_index: int = 0

    def __post_init__(self) -> None:
        ids = [r.id for r in self.robots]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate robot ids: {ids}")

    @classmethod
    def initial(cls, positions: Iterable[Point], light: str = NIL) -> WorldState:
        return cls(tuple(RobotState(i, Idle(p), light) for i, p in enumerate(positions)))

    def robot(self, robot_id: int) -> RobotState:
        for r in self.robots:
            if r.id == robot_id:
                return r
        raise KeyError(f"no robot with id {robot_id}")

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.robots)

    def positions(self) -> tuple[Point, ...]:
        return tuple(r.position for r in self.robots)

    def lights(self) -> tuple[str, ...]:
        return tuple(r.light for r in self.robots)

    @property
    def stationary(self) -> bool:
        """No robot is in the middle of a move."""
        return not any(type(r.phase) is Moving for r in self.robots)

    @property
    def all_idle(self) -> bool:
        return all(type(r.phase) is Idle for r in self.robots)

    def with_robot(self, new: RobotState) -> WorldState:
        robots = tuple(new if r.id == new.id else r for r in self.robots)
        return WorldState(robots, self.event_index + 1)

    def advanced(self) -> WorldState:
        return WorldState(self.robots, self.event_index + 1)

    def collisions(self) -> list[tuple[int, int]]:
        seen: dict[Point, int] = {}
        clashes = []
        for r in self.robots:
            p = r.position
            if p in seen:
                clashes.append((seen[p], r.id))
            else:
                seen[p] = r.id
        return clashes


# -- snapshots and programs -------------------------------------------------


@dataclass(frozen=True, slots=True)
class Observation:
    position: Point
    light: Optional[str] = None


@dataclass(frozen=True)
class Snapshot:
    model: Model
    others: tuple[Observation, ...]
    own_light: Optional[str] = None

    @property
    def self_position(self) -> Point:
        return ORIGIN

    def points(self) -> list[Point]:
        """Own position (origin) followed by the others' positions."""
        return [ORIGIN, *(o.position for o in self.others)]

    def other_lights(self) -> list[Optional[str]]:
        return [o.light for o in self.others]


@dataclass(frozen=True, slots=True)
class Action:
    """Light command and destination, in the robot's local frame.

    ``light=None`` keeps the current light.
    """

    light: Optional[str]
    destination: Point

    def is_null(self, current_light: Optional[str] = None) -> bool:
        keeps = self.light is None or self.light == current_light
        return keeps and self.destination == ORIGIN


NULL_ACTION = Action(None, ORIGIN)


@dataclass(frozen=True)
class Program:
    name: str
    model: Model
    palette: frozenset[str]
    rule: Callable[[Snapshot], Action] = field(repr=False, compare=False)

    def __call__(self, snapshot: Snapshot) -> Action:
        if snapshot.model is not self.model:
            raise SnapshotShapeError(
                f"program {self.name} is written for {self.model.value}, "
                f"got a {snapshot.model.value} snapshot"
            )
        action = self.rule(snapshot)
        if action.light is not None and action.light not in self.palette:
            raise ValueError(f"program {self.name} produced light {action.light!r} outside its palette")
        return action


ProgramSpec = Union[Program, Mapping[int, Program]]


def _program_for(programs: ProgramSpec, robot_id: int) -> Program:
    if isinstance(programs, Program):
        return programs
    return programs[robot_id]


def take_snapshot(world: WorldState, robot_id: int, model: Model, frame: Transform) -> Snapshot:
    me = world.robot(robot_id)
    if frame(me.position) != ORIGIN:
        raise FrameError(f"frame does not place robot {robot_id} at the origin")
    show_others = model.sees_other_lights
    others = tuple(
        Observation(frame(r.position), r.light if show_others else None)
        for r in world.robots
        if r.id != robot_id
    )
    return Snapshot(model, others, me.light if model.sees_own_light else None)


def _compute(world, robot_id, program, model, frame) -> tuple[str, Point]:
    me = world.robot(robot_id)
    action = program(take_snapshot(world, robot_id, model, frame))
    light = me.light if action.light is None else action.light
    if action.destination == ORIGIN:
        dest = me.position
    else:
        dest = frame.inverse()(action.destination)
    return light, dest


def apply_activate(
    world: WorldState, robot_id: int, program: Program, model: Model, frame: Transform
) -> WorldState:
    me = world.robot(robot_id)
    if type(me.phase) is not Idle:
        raise IllegalEvent(f"robot {robot_id} activated while not idle", world.event_index + 1)
    light, dest = _compute(world, robot_id, program, model, frame)
    return world.with_robot(replace(me, phase=PendingCompute(me.position, light, dest)))


def apply_finish_compute(world: WorldState, robot_id: int) -> WorldState:
    me = world.robot(robot_id)
    phase = me.phase
    if type(phase) is not PendingCompute:
        raise IllegalEvent(f"robot {robot_id} finished a computation it never started", world.event_index + 1)
    if phase.destination == phase.position:
        new_phase: Phase = Idle(phase.position)
    else:
        new_phase = Moving(phase.position, phase.destination, Fraction(0))
    return world.with_robot(RobotState(me.id, new_phase, phase.light))


def apply_progress(world: WorldState, robot_id: int, delta) -> WorldState:
    me = world.robot(robot_id)
    phase = me.phase
    delta = to_scalar(delta)
    if type(phase) is not Moving:
        raise IllegalEvent(f"robot {robot_id} cannot progress while not moving", world.event_index + 1)
    if not (0 < delta <= 1 - phase.progress):
        raise IllegalEvent(
            f"progress {delta} out of range for robot {robot_id} at {phase.progress}",
            world.event_index + 1,
        )
    progress = phase.progress + delta
    if progress == 1:
        new_phase: Phase = Idle(phase.dest)
    else:
        new_phase = Moving(phase.start, phase.dest, progress)
    return world.with_robot(RobotState(me.id, new_phase, me.light))


def apply_round(
    world: WorldState,
    active_set: Iterable[int],
    programs: ProgramSpec,
    model: Model,
    frames: Mapping[int, Transform],
) -> WorldState:
    active = sorted(set(active_set))
    if not active:
        raise IllegalEvent("a round needs at least one active robot", world.event_index + 1)
    if not world.all_idle:
        raise IllegalEvent("a round can only start when every robot is idle", world.event_index + 1)
    # every Look happens against the pre-round world
    results = {
        rid: _compute(world, rid, _program_for(programs, rid), model, frames[rid]) for rid in active
    }
    robots = []
    for r in world.robots:
        if r.id in results:
            light, dest = results[r.id]
            robots.append(RobotState(r.id, Idle(dest), light))
        else:
            robots.append(r)
    return WorldState(tuple(robots), world.event_index + 1)


# -- events and traces --------------------------------------------------------


@dataclass(frozen=True)
class Activate:
    robot: int
    multiplier: tuple[Fraction, Fraction] = (Fraction(1), Fraction(0))
    kind = "activate"


@dataclass(frozen=True)
class FinishCompute:
    robot: int
    kind = "finish_compute"


@dataclass(frozen=True)
class Progress:
    robot: int
    delta: Fraction
    kind = "progress"


@dataclass(frozen=True)
class Round:
    active: tuple[int, ...]
    multipliers: Mapping[int, tuple[Fraction, Fraction]] = field(default_factory=dict)
    kind = "round"

    def multiplier_for(self, robot_id: int) -> tuple[Fraction, Fraction]:
        return self.multipliers.get(robot_id, (Fraction(1), Fraction(0)))


Event = Union[Activate, FinishCompute, Progress, Round]


def event_to_json(event: Event) -> dict:
    if isinstance(event, Activate):
        return {"kind": event.kind, "robot": event.robot, "frame": [scalar_to_str(v) for v in event.multiplier]}
    if isinstance(event, FinishCompute):
        return {"kind": event.kind, "robot": event.robot}
    if isinstance(event, Progress):
        return {"kind": event.kind, "robot": event.robot, "delta": scalar_to_str(event.delta)}
    if isinstance(event, Round):
        return {
            "kind": event.kind,
            "active_set": list(event.active),
            "frames": {str(r): [scalar_to_str(v) for v in event.multiplier_for(r)] for r in event.active},
        }
    raise TypeError(f"unknown event {event!r}")


def _multiplier(data) -> tuple[Fraction, Fraction]:
    return (to_scalar(data[0]), to_scalar(data[1]))


def event_from_json(data: dict) -> Event:
    kind = data["kind"]
    if kind == "activate":
        return Activate(int(data["robot"]), _multiplier(data.get("frame", ["1", "0"])))
    if kind == "finish_compute":
        return FinishCompute(int(data["robot"]))
    if kind == "progress":
        return Progress(int(data["robot"]), to_scalar(data["delta"]))
    if kind == "round":
        frames = {int(k): _multiplier(v) for k, v in data.get("frames", {}).items()}
        return Round(tuple(int(r) for r in data["active_set"]), frames)
    raise ValueError(f"unknown event kind {kind!r}")


@dataclass(frozen=True)
class TraceEntry:
    event: Optional[Event]
    world: WorldState


@dataclass
class Trace:
    entries: list[TraceEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[TraceEntry]:
        return iter(self.entries)

    def worlds(self) -> list[WorldState]:
        return [e.world for e in self.entries]

    @property
    def initial(self) -> WorldState:
        return self.entries[0].world

    @property
    def final(self) -> WorldState:
        return self.entries[-1].world

    def transformed(self, T: Transform) -> Trace:
        """The same execution seen through one global similarity."""
        return Trace([TraceEntry(e.event, transform_world(e.world, T)) for e in self.entries])

    def to_jsonl(self, fh: TextIO) -> None:
        for entry in self.entries:
            fh.write(json.dumps(entry_to_record(entry), sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, fh: TextIO) -> Trace:
        entries = []
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: malformed JSON ({exc})") from None
            if record.get("kind") == "error":
                raise ValueError(f"line {lineno}: trace ends with a simulation error: {record.get('error')}")
            entry = record_to_entry(record)
            expected = len(entries)
            if entry.world.event_index != expected:
                raise ValueError(f"line {lineno}: event_index {entry.world.event_index}, expected {expected}")
            entries.append(entry)
        if not entries:
            raise ValueError("empty trace")
        return cls(entries)


def transform_world(world: WorldState, T: Transform) -> WorldState:
    def phase(p: Phase) -> Phase:
        if type(p) is Idle:
            return Idle(T(p.position))
        if type(p) is PendingCompute:
            return PendingCompute(T(p.position), p.light, T(p.destination))
        return Moving(T(p.start), T(p.dest), p.progress)

    return WorldState(tuple(RobotState(r.id, phase(r.phase), r.light) for r in world.robots), world.event_index)


def _phase_to_json(p: Phase) -> dict:
    if type(p) is Idle:
        return {"kind": "idle"}
    if type(p) is PendingCompute:
        return {"kind": "pending", "light": p.light, "dest": p.destination.to_json()}
    return {"kind": "moving", "start": p.start.to_json(), "dest": p.dest.to_json(), "progress": scalar_to_str(p.progress)}


def _phase_from_json(data: dict, position: Point) -> Phase:
    kind = data["kind"]
    if kind == "idle":
        return Idle(position)
    if kind == "pending":
        return PendingCompute(position, data["light"], Point.from_json(data["dest"]))
    if kind == "moving":
        moving = Moving(Point.from_json(data["start"]), Point.from_json(data["dest"]), parse_scalar(data["progress"]))
        if moving.current != position:
            raise ValueError("moving robot's recorded position disagrees with its progress")
        return moving
    raise ValueError(f"unknown phase kind {kind!r}")


def entry_to_record(entry: TraceEntry) -> dict:
    world = entry.world
    if entry.event is None:
        record: dict = {"kind": "init"}
    else:
        record = event_to_json(entry.event)
    record["event_index"] = world.event_index
    record["positions"] = {str(r.id): r.position.to_json() for r in world.robots}
    record["lights"] = {str(r.id): r.light for r in world.robots}
    record["phases"] = {str(r.id): _phase_to_json(r.phase) for r in world.robots}
    return record


def record_to_entry(record: dict) -> TraceEntry:
    ids = sorted(int(k) for k in record["positions"])
    robots = []
    for rid in ids:
        key = str(rid)
        pos = Point.from_json(record["positions"][key])
        robots.append(RobotState(rid, _phase_from_json(record["phases"][key], pos), record["lights"][key]))
    world = WorldState(tuple(robots), int(record["event_index"]))
    event = None if record["kind"] == "init" else event_from_json(record)
    return TraceEntry(event, world)


# -- driver -------------------------------------------------------------------


def iter_run(world0: WorldState, programs: ProgramSpec, model: Model, schedule) -> Iterator[TraceEntry]:
    """Execute ``schedule`` from ``world0``, yielding one entry per event.

    A cycle whose computed destination is the robot's own position never
    enters the moving phase; the schedule's progress events for such a cycle
    are consumed without effect.
    """
    world = world0
    clashes = world.collisions()
    if clashes:
        raise CollisionError(f"robots {clashes} start on the same point", world.event_index)
    yield TraceEntry(None, world)
    absorbing: dict[int, Fraction] = {}
    for event in schedule.events:
        index = world.event_index + 1
        if isinstance(event, Round):
            frames = {
                rid: Transform.centered(event.multiplier_for(rid), world.robot(rid).position)
                for rid in event.active
            }
            world = apply_round(world, event.active, programs, model, frames)
        elif isinstance(event, Activate):
            me = world.robot(event.robot)
            frame = Transform.centered(event.multiplier, me.position)
            world = apply_activate(world, event.robot, _program_for(programs, event.robot), model, frame)
        elif isinstance(event, FinishCompute):
            world = apply_finish_compute(world, event.robot)
            if type(world.robot(event.robot).phase) is Idle:
                absorbing[event.robot] = Fraction(1)
        elif isinstance(event, Progress):
            left = absorbing.get(event.robot, Fraction(0))
            if left > 0 and type(world.robot(event.robot).phase) is Idle:
                if not (0 < event.delta <= left):
                    raise IllegalEvent(f"progress {event.delta} out of range for robot {event.robot}", index)
                absorbing[event.robot] = left - event.delta
                world = world.advanced()
            else:
                world = apply_progress(world, event.robot, event.delta)
        else:
            raise IllegalEvent(f"unknown event {event!r}", index)
        # only progress and rounds move anyone
        if isinstance(event, Progress):
            moved = world.robot(event.robot)
            at = moved.position
            clashes = [(r.id, moved.id) for r in world.robots if r.id != moved.id and r.position == at]
        elif isinstance(event, Round):
            clashes = world.collisions()
        else:
            clashes = []
        if clashes:
            raise CollisionError(f"robots {clashes} occupy the same point", world.event_index)
        yield TraceEntry(event, world)


def run(world0: WorldState, programs: ProgramSpec, model: Model, schedule) -> Trace:
    return Trace(list(iter_run(world0, programs, model, schedule)))
