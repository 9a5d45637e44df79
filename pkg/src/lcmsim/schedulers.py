"""FSYNC / SSYNC / ASYNC schedules: seeded generation, validation, conversion.

Fairness over a finite horizon is bounded fairness: every robot starts a
cycle at least once in every window of ``fairness_window`` consecutive events
(ASYNC) or rounds (SSYNC/FSYNC).

A schedule fixes only the rotation/scale part of each local frame; the
translation is forced by the rule that a robot sees itself at the origin.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence

from .engine import Activate, Event, FinishCompute, Progress, Round, event_from_json, event_to_json
from .geometry import pythagorean_unit

Multiplier = tuple[Fraction, Fraction]


class SchedulerKind(str, Enum):
    FSYNC = "FSYNC"
    SSYNC = "SSYNC"
    ASYNC = "ASYNC"

    @property
    def synchronous(self) -> bool:
        return self is not SchedulerKind.ASYNC


class FramePolicy(str, Enum):
    FIXED = "fixed-per-robot"
    FRESH = "fresh-per-activation"


@dataclass(frozen=True)
class AdversaryParams:
    seed: int = 0
    horizon: int = 200
    fairness_window: int = 40
    max_progress_splits: int = 3
    frame_policy: FramePolicy = FramePolicy.FRESH

    def __post_init__(self) -> None:
        object.__setattr__(self, "frame_policy", FramePolicy(self.frame_policy))

    def check(self, robot_count: int) -> None:
        if robot_count < 1:
            raise ValueError("need at least one robot")
        if self.fairness_window < robot_count:
            raise ValueError(f"fairness window {self.fairness_window} is smaller than the robot count {robot_count}")
        if self.horizon < self.fairness_window:
            raise ValueError(f"horizon {self.horizon} is shorter than the fairness window {self.fairness_window}")
        if self.max_progress_splits < 1:
            raise ValueError("max_progress_splits must be positive")

    def to_json(self) -> dict:
        data = asdict(self)
        data["frame_policy"] = self.frame_policy.value
        return data

    @classmethod
    def from_json(cls, data: dict) -> AdversaryParams:
        return cls(**data)


@dataclass(frozen=True)
class Schedule:
    kind: SchedulerKind
    events: tuple[Event, ...]
    fairness_window: int
    params: Optional[AdversaryParams] = None

    def __len__(self) -> int:
        return len(self.events)

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "fairness_window": self.fairness_window,
            "params": None if self.params is None else self.params.to_json(),
            "events": [event_to_json(e) for e in self.events],
        }

    @classmethod
    def from_json(cls, data: dict) -> Schedule:
        params = data.get("params")
        return cls(
            SchedulerKind(data["kind"]),
            tuple(event_from_json(e) for e in data["events"]),
            int(data["fairness_window"]),
            None if params is None else AdversaryParams.from_json(params),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class Violation:
    index: int
    rule: str
    message: str = field(default="", compare=False)


def random_multiplier(rng: random.Random) -> Multiplier:
    """A random rotation (Pythagorean angle times a quarter turn) and scale."""
    while True:
        p, q = rng.randint(0, 7), rng.randint(0, 7)
        if p or q:
            break
    c, s = pythagorean_unit(p, q)
    for _ in range(rng.randint(0, 3)):
        c, s = -s, c
    scale = Fraction(rng.randint(1, 9), rng.randint(1, 9))
    return (c * scale, s * scale)


def _random_deltas(rng: random.Random, k: int) -> list[Fraction]:
    grid = max(12, 2 * k)
    cuts = sorted(rng.sample(range(1, grid), k - 1))
    bounds = [0, *cuts, grid]
    return [Fraction(b - a, grid) for a, b in zip(bounds, bounds[1:])]


def min_async_window(robot_count: int, max_progress_splits: int) -> int:
    """Smallest fairness window the ASYNC generator accepts."""
    return robot_count * (max_progress_splits + 2) + robot_count * (max_progress_splits + 1)


def generate_async(params: AdversaryParams, robot_count: int) -> Schedule:
    """Seeded fair ASYNC adversary.

    Events are drawn uniformly among the robots' next legal events, except
    that an earliest-deadline-first rule takes over whenever the pending
    activation deadlines would otherwise become infeasible.  After
    ``params.horizon`` events no new cycle starts and open cycles are closed.
    """
    params.check(robot_count)
    n, s = robot_count, params.max_progress_splits
    if params.fairness_window < min_async_window(n, s):
        raise ValueError(
            f"fairness window {params.fairness_window} too small for {n} robots with up to "
            f"{s} progress splits (need >= {min_async_window(n, s)})"
        )
    # slack reserved so the closing tail cannot break the last windows
    window = params.fairness_window - n * (s + 1)
    rng = random.Random(params.seed)
    fixed = [random_multiplier(rng) for _ in range(n)]

    phase = ["idle"] * n
    deltas: list[list[Fraction]] = [[] for _ in range(n)]
    deadline = [window - 1] * n
    events: list[Event] = []

    def need(r: int) -> int:
        if phase[r] == "idle":
            return 1
        if phase[r] == "pending":
            return 2 + len(deltas[r])
        return 1 + len(deltas[r])

    def step(r: int, t: int) -> None:
        if phase[r] == "idle":
            mult = fixed[r] if params.frame_policy is FramePolicy.FIXED else random_multiplier(rng)
            events.append(Activate(r, mult))
            deltas[r] = _random_deltas(rng, rng.randint(1, s))
            phase[r] = "pending"
            deadline[r] = t + window
        elif phase[r] == "pending":
            events.append(FinishCompute(r))
            phase[r] = "moving"
        else:
            events.append(Progress(r, deltas[r].pop(0)))
            if not deltas[r]:
                phase[r] = "idle"

    for t in range(params.horizon):
        order = sorted(range(n), key=lambda r: (deadline[r], r))
        forced = None
        total = 0
        for r in order:
            total += need(r)
            if deadline[r] < params.horizon and total > deadline[r] - t:
                forced = order[0]
                break
        step(forced if forced is not None else rng.randrange(n), t)

    t = params.horizon
    while True:
        open_ = [r for r in range(n) if phase[r] != "idle"]
        if not open_:
            break
        step(rng.choice(open_), t)
        t += 1
    return Schedule(SchedulerKind.ASYNC, tuple(events), params.fairness_window, params)


def generate_ssync(params: AdversaryParams, robot_count: int, fsync: bool = False) -> Schedule:
    params.check(robot_count)
    n = robot_count
    rng = random.Random(params.seed)
    fixed = [random_multiplier(rng) for _ in range(n)]
    last = [-1] * n
    events: list[Event] = []
    for t in range(params.horizon):
        if fsync:
            active = set(range(n))
        else:
            active = {r for r in range(n) if rng.random() < 0.5}
            active |= {r for r in range(n) if t - last[r] >= params.fairness_window}
            if not active:
                active = {rng.randrange(n)}
        for r in active:
            last[r] = t
        order = tuple(sorted(active))
        if params.frame_policy is FramePolicy.FIXED:
            mults = {r: fixed[r] for r in order}
        else:
            mults = {r: random_multiplier(rng) for r in order}
        events.append(Round(order, mults))
    kind = SchedulerKind.FSYNC if fsync else SchedulerKind.SSYNC
    return Schedule(kind, tuple(events), params.fairness_window, params)


def generate_fsync(params: AdversaryParams, robot_count: int) -> Schedule:
    return generate_ssync(params, robot_count, fsync=True)


def ssync_to_async(schedule: Schedule, robot_count: int) -> Schedule:
    """Rewrite each round as Activate*, FinishCompute*, full Progress*.

    All Looks of a round precede every light change and move, so the ASYNC
    execution passes through the same stationary configurations.
    """
    if not schedule.kind.synchronous:
        raise ValueError("schedule is already asynchronous")
    events: list[Event] = []
    for rnd in schedule.events:
        events.extend(Activate(r, rnd.multiplier_for(r)) for r in rnd.active)
        events.extend(FinishCompute(r) for r in rnd.active)
        events.extend(Progress(r, Fraction(1)) for r in rnd.active)
    window = schedule.fairness_window * 3 * robot_count
    return Schedule(SchedulerKind.ASYNC, tuple(events), window, schedule.params)


def _fairness(starts: Sequence[list[int]], length: int, window: int) -> list[Violation]:
    out = []
    if length < window:
        return out
    for r, idxs in enumerate(starts):
        if not idxs:
            out.append(Violation(window - 1, "fairness", f"robot {r} never starts a cycle"))
            continue
        if idxs[0] > window - 1:
            out.append(Violation(window - 1, "fairness", f"robot {r} idle through the first window"))
        for a, b in zip(idxs, idxs[1:]):
            if b - a > window:
                out.append(Violation(a + window, "fairness", f"robot {r} not started within events {a + 1}..{a + window}"))
        if idxs[-1] < length - window:
            out.append(Violation(idxs[-1] + window, "fairness", f"robot {r} not started in the final window"))
    return out


def _valid_multiplier(m) -> bool:
    try:
        a, b = m
    except (TypeError, ValueError):
        return False
    return isinstance(a, Fraction) and isinstance(b, Fraction) and (a != 0 or b != 0)


def validate_schedule(schedule: Schedule, robot_count: int) -> list[Violation]:
    violations: list[Violation] = []
    W = schedule.fairness_window
    if W < 1:
        return [Violation(0, "fairness", "fairness window must be positive")]
    starts: list[list[int]] = [[] for _ in range(robot_count)]

    if schedule.kind.synchronous:
        for i, ev in enumerate(schedule.events):
            if not isinstance(ev, Round):
                violations.append(Violation(i, "event-kind", f"{ev.kind} event in a synchronous schedule"))
                continue
            if not ev.active:
                violations.append(Violation(i, "phase-legality", "round activates nobody"))
            bad = [r for r in ev.active if not 0 <= r < robot_count]
            if bad:
                violations.append(Violation(i, "robot-id", f"unknown robots {bad}"))
            if len(set(ev.active)) != len(ev.active):
                violations.append(Violation(i, "phase-legality", "robot listed twice in one round"))
            if schedule.kind is SchedulerKind.FSYNC and set(ev.active) != set(range(robot_count)):
                violations.append(Violation(i, "fsync-full", "FSYNC round does not activate every robot"))
            for r in ev.active:
                if r in ev.multipliers and not _valid_multiplier(ev.multipliers[r]):
                    violations.append(Violation(i, "frame", f"inadmissible frame for robot {r}"))
                if 0 <= r < robot_count:
                    starts[r].append(i)
        violations.extend(_fairness(starts, len(schedule.events), W))
        return sorted(violations, key=lambda v: v.index)

    phase = ["idle"] * robot_count
    remaining = [Fraction(0)] * robot_count
    for i, ev in enumerate(schedule.events):
        if isinstance(ev, Round):
            violations.append(Violation(i, "event-kind", "round event in an ASYNC schedule"))
            continue
        r = ev.robot
        if not 0 <= r < robot_count:
            violations.append(Violation(i, "robot-id", f"unknown robot {r}"))
            continue
        if isinstance(ev, Activate):
            if phase[r] != "idle":
                violations.append(Violation(i, "phase-legality", f"robot {r} activated while {phase[r]}"))
                continue
            if not _valid_multiplier(ev.multiplier):
                violations.append(Violation(i, "frame", f"inadmissible frame for robot {r}"))
            phase[r] = "pending"
            starts[r].append(i)
        elif isinstance(ev, FinishCompute):
            if phase[r] != "pending":
                violations.append(Violation(i, "phase-legality", f"robot {r} finishes compute while {phase[r]}"))
                continue
            phase[r] = "moving"
            remaining[r] = Fraction(1)
        elif isinstance(ev, Progress):
            if phase[r] != "moving":
                violations.append(Violation(i, "phase-legality", f"robot {r} progresses while {phase[r]}"))
                continue
            if not (0 < ev.delta <= remaining[r]):
                violations.append(Violation(i, "progress-range", f"delta {ev.delta} with {remaining[r]} left"))
                continue
            remaining[r] -= ev.delta
            if remaining[r] == 0:
                phase[r] = "idle"
    end = len(schedule.events)
    for r in range(robot_count):
        if phase[r] != "idle":
            violations.append(Violation(end, "cycle-completion", f"robot {r} still {phase[r]} at the end"))
    violations.extend(_fairness(starts, end, W))
    return sorted(violations, key=lambda v: v.index)
