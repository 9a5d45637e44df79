from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcmsim.algorithms import alg_oc_program, algo_iop_program, comil_program
from lcmsim.engine import Activate, FinishCompute, Model, Progress, Round, run
from lcmsim.problems import ILInstance, IOPInstance, OCInstance, classify_oc
from lcmsim.schedulers import (
    AdversaryParams,
    FramePolicy,
    Schedule,
    SchedulerKind,
    generate_async,
    generate_fsync,
    generate_ssync,
    min_async_window,
    ssync_to_async,
    validate_schedule,
)

UNIT = (Fraction(1), Fraction(0))


def rules(violations):
    return {v.rule for v in violations}


def test_async_example_validates():
    s = generate_async(AdversaryParams(seed=1, horizon=200, fairness_window=40), 4)
    assert s.kind is SchedulerKind.ASYNC
    assert validate_schedule(s, 4) == []


def test_async_is_deterministic_in_seed():
    p = AdversaryParams(seed=5, horizon=300, fairness_window=40)
    assert generate_async(p, 4).dumps() == generate_async(p, 4).dumps()
    assert generate_async(p, 4).dumps() != generate_async(AdversaryParams(seed=6, horizon=300), 4).dumps()


def test_single_split_moves_complete_in_one_progress():
    s = generate_async(AdversaryParams(seed=2, horizon=200, fairness_window=40, max_progress_splits=1), 4)
    assert validate_schedule(s, 4) == []
    assert all(e.delta == 1 for e in s.events if isinstance(e, Progress))


def test_async_cycles_are_interleaved():
    s = generate_async(AdversaryParams(seed=3, horizon=400, fairness_window=40), 4)
    travelled: dict[int, Fraction] = {}
    overlapped = False
    for e in s.events:
        if isinstance(e, Activate):
            overlapped |= bool(travelled)
            travelled[e.robot] = Fraction(0)
        elif isinstance(e, Progress):
            travelled[e.robot] += e.delta
            if travelled[e.robot] == 1:
                del travelled[e.robot]
    assert overlapped


def test_async_moves_are_split_within_bounds():
    s = generate_async(AdversaryParams(seed=4, horizon=400, fairness_window=40, max_progress_splits=3), 4)
    per_cycle: dict[int, list[Fraction]] = {}
    for e in s.events:
        if isinstance(e, Activate):
            per_cycle[e.robot] = []
        elif isinstance(e, Progress):
            per_cycle[e.robot].append(e.delta)
            if sum(per_cycle[e.robot]) == 1:
                assert 1 <= len(per_cycle[e.robot]) <= 3


def test_async_window_too_small_is_rejected():
    need = min_async_window(4, 3)
    with pytest.raises(ValueError):
        generate_async(AdversaryParams(seed=1, horizon=200, fairness_window=need - 1), 4)


def test_fixed_frame_policy_reuses_frames():
    s = generate_async(AdversaryParams(seed=8, horizon=200, fairness_window=40, frame_policy=FramePolicy.FIXED), 4)
    frames: dict[int, set] = {}
    for e in s.events:
        if isinstance(e, Activate):
            frames.setdefault(e.robot, set()).add(e.multiplier)
    assert all(len(v) == 1 for v in frames.values())


def test_fresh_frame_policy_varies_frames():
    s = generate_async(AdversaryParams(seed=8, horizon=200, fairness_window=40), 4)
    mults = {e.multiplier for e in s.events if isinstance(e, Activate)}
    assert len(mults) > 4


def test_fsync_flag_activates_everyone():
    s = generate_ssync(AdversaryParams(seed=1, horizon=50, fairness_window=4), 4, fsync=True)
    assert s.kind is SchedulerKind.FSYNC
    assert all(set(e.active) == {0, 1, 2, 3} for e in s.events)
    assert validate_schedule(s, 4) == []
    assert generate_fsync(AdversaryParams(seed=1, horizon=50, fairness_window=4), 4).dumps() == s.dumps()


def test_ssync_deterministic_and_valid():
    p = AdversaryParams(seed=12, horizon=100, fairness_window=6)
    a, b = generate_ssync(p, 4), generate_ssync(p, 4)
    assert a.dumps() == b.dumps()
    assert validate_schedule(a, 4) == []
    assert all(len(e.active) >= 1 for e in a.events)


def test_ssync_round_robin_singletons_meet_tight_window():
    events = tuple(Round((t % 4,), {t % 4: UNIT}) for t in range(40))
    assert validate_schedule(Schedule(SchedulerKind.SSYNC, events, 4), 4) == []
    s = generate_ssync(AdversaryParams(seed=3, horizon=60, fairness_window=4), 4)
    assert validate_schedule(s, 4) == []


def test_progress_before_activate_is_phase_violation():
    s = Schedule(SchedulerKind.ASYNC, (Progress(0, Fraction(1)),), 10)
    v = validate_schedule(s, 1)
    assert v and v[0].index == 0 and v[0].rule == "phase-legality"


def test_starved_robot_is_fairness_violation():
    events = []
    for _ in range(10):
        for r in (0, 1):
            events += [Activate(r, UNIT), FinishCompute(r), Progress(r, Fraction(1))]
    v = validate_schedule(Schedule(SchedulerKind.ASYNC, tuple(events), 12), 3)
    assert "fairness" in rules(v)


def test_unfinished_cycle_is_reported():
    events = (Activate(0, UNIT), FinishCompute(0), Progress(0, Fraction(1, 2)))
    v = validate_schedule(Schedule(SchedulerKind.ASYNC, events, 10), 1)
    assert "cycle-completion" in rules(v)


def test_overshooting_progress_is_reported():
    events = (Activate(0, UNIT), FinishCompute(0), Progress(0, Fraction(3, 4)), Progress(0, Fraction(1, 2)))
    v = validate_schedule(Schedule(SchedulerKind.ASYNC, events, 10), 1)
    assert "progress-range" in rules(v)


def test_bad_frame_and_robot_id_are_reported():
    events = (Activate(0, (Fraction(0), Fraction(0))), FinishCompute(0), Progress(0, Fraction(1)), Activate(7, UNIT))
    assert {"frame", "robot-id"} <= rules(validate_schedule(Schedule(SchedulerKind.ASYNC, events, 10), 1))


def test_fsync_schedule_must_be_full():
    s = Schedule(SchedulerKind.FSYNC, (Round((0,), {}),), 2)
    assert "fsync-full" in rules(validate_schedule(s, 2))


def test_schedule_json_round_trip():
    s = generate_async(AdversaryParams(seed=21, horizon=120, fairness_window=40), 3)
    back = Schedule.from_json(json.loads(s.dumps()))
    assert back == s


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=2**32),
    st.integers(min_value=2, max_value=5),
    st.integers(min_value=1, max_value=4),
)
def test_generated_async_always_validates(seed, n, splits):
    w = min_async_window(n, splits) + seed % 7
    s = generate_async(AdversaryParams(seed=seed, horizon=w + 50, fairness_window=w, max_progress_splits=splits), n)
    assert validate_schedule(s, n) == []


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=1, max_value=5))
def test_generated_ssync_always_validates(seed, n):
    s = generate_ssync(AdversaryParams(seed=seed, horizon=30, fairness_window=n + seed % 3), n)
    assert validate_schedule(s, n) == []


def _idle_sequence(trace, classify):
    seq = []
    for w in trace.worlds():
        if w.all_idle:
            name = classify(w)
            if not seq or seq[-1] != name:
                seq.append(name)
    return seq


@pytest.mark.parametrize("seed", range(5))
def test_converter_preserves_idle_configurations(seed):
    oc = OCInstance()
    prog = alg_oc_program(oc)
    s = generate_ssync(AdversaryParams(seed=seed, horizon=60, fairness_window=6), 4)
    conv = ssync_to_async(s, 4)
    assert conv.kind is SchedulerKind.ASYNC
    assert validate_schedule(conv, 4) == []
    a = run(oc.initial_world(), prog, Model.FSTA, s)
    b = run(oc.initial_world(), prog, Model.FSTA, conv)
    classify = lambda w: classify_oc(w, oc)  # noqa: E731
    assert _idle_sequence(a, classify) == _idle_sequence(b, classify)
    # every round lands on the same world
    assert [w.positions() for w in a.worlds()][-1] == [w.positions() for w in b.worlds()][-1]


@pytest.mark.parametrize(
    "program, model, instance",
    [
        (comil_program(ILInstance()), Model.FCOM, ILInstance()),
        (algo_iop_program(), Model.FSTA, IOPInstance()),
    ],
)
def test_valid_schedules_never_raise_illegal_event(program, model, instance):
    n = len(instance.initial_world().robots)
    for seed in range(10):
        s = generate_async(AdversaryParams(seed=seed, horizon=150, fairness_window=min_async_window(n, 3)), n)
        run(instance.initial_world(), program, model, s)
