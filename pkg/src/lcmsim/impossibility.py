"""Replayable witnesses for the two negative results.

``oc_oblot_witness`` is universal: the two ways of arriving at configuration
II give every robot an identical lightless view, so any deterministic
oblivious program moves the same way from both, while the oscillation
requires III after one and I after the other.

``iop_fcom_search`` is a bounded adversarial search over SSYNC schedules and a
few rescaled instances; it is not a proof for arbitrary programs.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .engine import (
    NIL,
    CollisionError,
    Model,
    Moving,
    Program,
    RobotState,
    Round,
    SnapshotShapeError,
    Trace,
    TraceEntry,
    Transform,
    WorldState,
    apply_progress,
    entry_to_record,
    run,
    take_snapshot,
)
from .geometry import exact_sqrt, scalar_to_str, squared_distance
from .problems import (
    MIDDLE,
    TERMINALS,
    IOPInstance,
    OCInstance,
    Verdict,
    check_iop,
    classify_oc,
)
from .schedulers import Schedule, SchedulerKind, random_multiplier, validate_schedule


class ModelMismatchError(ValueError):
    pass


class NondeterministicProgram(RuntimeError):
    pass


class BrokenInstance(AssertionError):
    pass


@dataclass
class Witness:
    kind: str
    program: str
    scenario: dict
    outputs: dict
    violations: list[dict]
    traces: dict[str, Trace] = field(default_factory=dict)
    schedule: Optional[Schedule] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "program": self.program,
            "scenario": self.scenario,
            "outputs": self.outputs,
            "violations": self.violations,
            "schedule": None if self.schedule is None else self.schedule.to_json(),
            "traces": {name: [entry_to_record(e) for e in tr] for name, tr in self.traces.items()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


# -- oscillating configurations under OBLOT^F ---------------------------------------

DEFAULT_CASE_FRAMES: tuple[tuple[Fraction, Fraction], ...] = (
    (Fraction(1), Fraction(0)),
    (Fraction(0), Fraction(2)),
    (Fraction(-3, 5), Fraction(4, 5)),
    (Fraction(5), Fraction(-12)),
)

CASE_NAMES = ("arrived-from-I", "arrived-from-III")


def _arrive(instance: OCInstance, start) -> WorldState:
    fixed = WorldState.initial(instance.triangle).robots
    world = WorldState((*fixed, RobotState(3, Moving(start, instance.near), NIL)))
    arrived = apply_progress(world, 3, Fraction(1))
    # the case world is the start of its own trace
    return WorldState(arrived.robots, 0)


def oc_case_pair(
    instance: Optional[OCInstance] = None,
    frames: Sequence[tuple[Fraction, Fraction]] = DEFAULT_CASE_FRAMES,
) -> tuple[WorldState, WorldState, tuple[str, str]]:
    """Configuration II reached from I and from III, with what must come next.

    Asserts that every robot's lightless snapshot is identical in both worlds
    under each of ``frames``.
    """
    inst = instance or OCInstance()
    from_one = _arrive(inst, inst.hub)
    from_three = _arrive(inst, inst.far)
    for world in (from_one, from_three):
        if classify_oc(world, inst) != "II":
            raise BrokenInstance("constructed world is not configuration II")
    for r in from_one.robots:
        for mult in frames:
            frame = Transform.centered(mult, r.position)
            if take_snapshot(from_one, r.id, Model.OBLOT, frame) != take_snapshot(from_three, r.id, Model.OBLOT, frame):
                raise BrokenInstance(f"robot {r.id} can tell the two cases apart")
    return from_one, from_three, ("III", "I")


def _one_round(world: WorldState, program: Program, multipliers) -> tuple[Optional[Trace], Optional[str]]:
    active = tuple(r.id for r in world.robots)
    schedule = Schedule(SchedulerKind.FSYNC, (Round(active, multipliers),), 1)
    try:
        return run(world, program, Model.OBLOT, schedule), None
    except CollisionError as exc:
        return None, str(exc)


def oc_oblot_witness(
    program: Program,
    instance: Optional[OCInstance] = None,
    multipliers: Optional[dict[int, tuple[Fraction, Fraction]]] = None,
) -> Witness:
    if program.model is not Model.OBLOT:
        raise ModelMismatchError(f"{program.name} is written for {program.model.value}, not OBLOT")
    inst = instance or OCInstance()
    from_one, from_three, required = oc_case_pair(inst)
    if multipliers is None:
        multipliers = {r.id: DEFAULT_CASE_FRAMES[r.id % len(DEFAULT_CASE_FRAMES)] for r in from_one.robots}

    outputs: dict[str, dict] = {}
    for r in from_one.robots:
        frame = Transform.centered(multipliers[r.id], r.position)
        snaps = [take_snapshot(w, r.id, Model.OBLOT, frame) for w in (from_one, from_three)]
        acts = [program(snaps[0]), program(snaps[0]), program(snaps[1])]
        if acts[0] != acts[1]:
            raise NondeterministicProgram(f"{program.name} answered differently on the same snapshot")
        if snaps[0] != snaps[1]:
            raise BrokenInstance("snapshots differ between the two cases")
        if acts[0] != acts[2]:
            raise NondeterministicProgram(f"{program.name} answered differently on equal snapshots")
        outputs[str(r.id)] = {
            "light": acts[0].light,
            "destination": frame.inverse()(acts[0].destination).to_json(),
        }

    traces: dict[str, Trace] = {}
    successors: list[str] = []
    positions = []
    for name, world in zip(CASE_NAMES, (from_one, from_three)):
        trace, crash = _one_round(world, program, multipliers)
        if trace is None:
            successors.append("collision")
            positions.append(None)
            continue
        traces[name] = trace
        successors.append(classify_oc(trace.final, inst))
        positions.append(trace.final.positions())
    if positions[0] != positions[1] or successors[0] != successors[1]:
        raise BrokenInstance("equal snapshots led to different successors")

    violations = []
    for name, got, want in zip(CASE_NAMES, successors, required):
        if got == want:
            continue
        if got == "II":
            clause = "no progress: an oblivious FSYNC team repeats the same round forever"
        elif got == "collision":
            clause = "robots collide"
        else:
            clause = f"configuration after II must be {want}"
        violations.append({"case": name, "required": want, "reached": got, "clause": clause})
    if not violations:
        raise BrokenInstance("both cases satisfied; required successors must differ")
    scenario = {
        "instance": inst.to_json(),
        "cases": {
            name: {"required_next": want, "world": entry_to_record(TraceEntry(None, world))}
            for name, want, world in zip(CASE_NAMES, required, (from_one, from_three))
        },
        "frames": {str(k): [scalar_to_str(v) for v in m] for k, m in sorted(multipliers.items())},
        "successor": successors[0],
    }
    return Witness("oc-oblot", program.name, scenario, outputs, violations, traces)


def replay_oc_witness(witness: Witness, program: Program, instance: Optional[OCInstance] = None) -> bool:
    frames = {int(k): tuple(Fraction(v) for v in m) for k, m in witness.scenario["frames"].items()}
    again = oc_oblot_witness(program, instance, frames)
    return again.dumps() == witness.dumps()


# -- independent oscillation under FCOM^S -------------------------------------------

SAFETY_RULES = frozenset({"overshoot", "monotonicity", "undershoot", "middle-moved", "collision"})
UNIT = (Fraction(1), Fraction(0))


def _round_world(world: WorldState, program: Program, active, mults) -> WorldState:
    sched = Schedule(SchedulerKind.SSYNC, (Round(tuple(active), mults),), 1)
    return run(world, program, Model.FCOM, sched).final


def _first_mover_strategy(instance: IOPInstance, program: Program, depth: int) -> tuple[list[Round], dict]:
    """Activate everybody until robot 0 is about to move for the first time,
    then activate robot 0 alone twice, rescaling its frame on the second round
    so the middle robot appears where it did on the first."""
    world = instance.initial_world()
    everyone = tuple(r.id for r in world.robots)
    target = TERMINALS[0]
    rounds: list[Round] = []
    k = None
    while len(rounds) < depth:
        me = world.robot(target)
        frame = Transform.centered(UNIT, me.position)
        if not program(take_snapshot(world, target, Model.FCOM, frame)).is_null(me.light):
            k = len(rounds)
            break
        rnd = Round(everyone, {})
        rounds.append(rnd)
        world = _round_world(world, program, everyone, {})
    if k is not None:
        gap_k = squared_distance(world.robot(target).position, world.robot(MIDDLE).position)
        rounds.append(Round((target,), {target: UNIT}))
        try:
            world = _round_world(world, program, (target,), {target: UNIT})
        except CollisionError:
            return rounds, {"strategy": "first-mover-twice", "k": k}
        gap_next = squared_distance(world.robot(target).position, world.robot(MIDDLE).position)
        ratio = exact_sqrt(gap_k / gap_next) or Fraction(1)
        rounds.append(Round((target,), {target: (ratio, Fraction(0))}))
    while len(rounds) < depth:
        rounds.append(Round(everyone, {}))
    return rounds[:depth], {"strategy": "first-mover-twice", "k": k}


def _candidate_schedules(instance: IOPInstance, program: Program, depth: int, seeds: int):
    n = 3
    everyone = tuple(range(n))
    rounds, info = _first_mover_strategy(instance, program, depth)
    yield rounds, info
    yield [Round(everyone, {}) for _ in range(depth)], {"strategy": "fsync"}
    yield [Round((t % n,), {}) for t in range(depth)], {"strategy": "round-robin"}
    for seed in range(seeds):
        rng = random.Random(seed)
        out = []
        for _ in range(depth):
            active = tuple(r for r in everyone if rng.random() < 0.5) or (rng.randrange(n),)
            out.append(Round(active, {r: random_multiplier(rng) for r in active}))
        yield out, {"strategy": "random", "seed": seed}


def _distance_ratio(trace: Trace, robot: int, upto: Optional[int] = None) -> dict:
    """Peak distance over base distance for ``robot``, up to event ``upto``."""
    first = trace.initial
    base = squared_distance(first.robot(robot).position, first.robot(MIDDLE).position)
    worlds = [w for w in trace.worlds() if upto is None or w.event_index <= upto]
    peak = max(squared_distance(w.robot(robot).position, w.robot(MIDDLE).position) for w in worlds)
    ratio2 = peak / base
    exact = exact_sqrt(ratio2)
    return {"peak_ratio_squared": scalar_to_str(ratio2), "peak_ratio": None if exact is None else scalar_to_str(exact)}


def iop_fcom_search(
    program: Program,
    instance: Optional[IOPInstance] = None,
    depth: int = 12,
    scalings: int = 3,
    min_cycles: int = 1,
    random_schedules: int = 20,
) -> Optional[Witness]:
    """Look for an SSYNC schedule under which ``program`` breaks the
    independent oscillation.

    Definite violations (overshoot, reversal, a moving middle robot) are
    preferred; failing that, the first schedule that only runs out of rounds
    is reported as a bounded-horizon failure.
    """
    if program.model is not Model.FCOM:
        raise ModelMismatchError(f"{program.name} is written for {program.model.value}, not FCOM")
    base = instance or IOPInstance()
    world0 = base.initial_world()
    for r in world0.robots:
        try:
            program(take_snapshot(world0, r.id, Model.FCOM, Transform.centered(UNIT, r.position)))
        except SnapshotShapeError as exc:
            raise ModelMismatchError(f"{program.name} cannot run on FCOM snapshots: {exc}") from None
    if depth <= 0:
        return None

    fallback: Optional[Witness] = None
    for level in range(scalings):
        inst = base.scaled(Fraction(2) ** level)
        for rounds, info in _candidate_schedules(inst, program, depth, random_schedules):
            schedule = Schedule(SchedulerKind.SSYNC, tuple(rounds), max(depth, 3))
            if validate_schedule(schedule, 3):
                continue
            try:
                trace = run(inst.initial_world(), program, Model.FCOM, schedule)
                verdict = check_iop(trace, inst, min_cycles)
            except CollisionError as exc:
                trace, verdict = None, None
                crash = {"rule": "collision", "detail": str(exc), "index": exc.event_index}
            if verdict is not None and verdict.passed:
                continue
            if verdict is not None:
                v = verdict.violation
                violation = {"rule": v.rule, "index": v.index, "detail": v.detail, "bounded_horizon": verdict.horizon_limited}
            else:
                violation = {**crash, "bounded_horizon": False}
            witness = Witness(
                "iop-fcom",
                program.name,
                {**info, "instance": inst.to_json(), "scaling": level, "depth": depth, "min_cycles": min_cycles},
                {f"r{i}": _distance_ratio(trace, i, violation["index"]) for i in TERMINALS} if trace is not None else {},
                [violation],
                {"run": trace} if trace is not None else {},
                schedule,
            )
            if violation["rule"] in SAFETY_RULES:
                return witness
            if fallback is None:
                fallback = witness
    return fallback


def replay_iop_witness(witness: Witness, program: Program) -> bool:
    inst = IOPInstance.from_json(witness.scenario["instance"])
    trace = run(inst.initial_world(), program, Model.FCOM, witness.schedule)
    verdict: Verdict = check_iop(trace, inst, witness.scenario["min_cycles"])
    v = witness.violations[0]
    return (not verdict.passed) and verdict.violation.rule == v["rule"] and verdict.violation.index == v["index"]
