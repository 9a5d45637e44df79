from __future__ import annotations

import json
import random
from fractions import Fraction
from itertools import count

import pytest

from lcmsim.algorithms import IOP_PALETTE, OBLOT_PALETTE, algo_iop, fcom_candidates, oblivious_candidates
from lcmsim.engine import NIL, NULL_ACTION, Action, Model, Program, take_snapshot
from lcmsim.geometry import ORIGIN, Transform, find_similarity, point, squared_distance, strictly_between
from lcmsim.impossibility import (
    CASE_NAMES,
    SAFETY_RULES,
    ModelMismatchError,
    NondeterministicProgram,
    iop_fcom_search,
    oc_case_pair,
    oc_oblot_witness,
    replay_iop_witness,
    replay_oc_witness,
)
from lcmsim.problems import IOPInstance, OCInstance, check_iop, classify_oc
from lcmsim.schedulers import validate_schedule

OC = OCInstance()


def _by_name(programs, name):
    return next(p for p in programs if p.name == name)


# -- OC under OBLOT^F ------------------------------------------------------------------


def test_case_pair_positions_identical():
    w1, w2, required = oc_case_pair(OC)
    assert sorted(w1.positions(), key=lambda p: (p.x, p.y)) == sorted(w2.positions(), key=lambda p: (p.x, p.y))
    assert required == ("III", "I")
    assert classify_oc(w1, OC) == classify_oc(w2, OC) == "II"


def test_required_successors_are_not_similar():
    assert find_similarity(OC.configuration("III"), OC.configuration("I")) is None


def test_case_pair_snapshots_equal_under_fuzzed_frames():
    rng = random.Random(3)
    w1, w2, _ = oc_case_pair(OC)
    for _ in range(100):
        mult = (Fraction(rng.randint(-20, 20), rng.randint(1, 20)), Fraction(rng.randint(1, 20), rng.randint(1, 20)))
        for r in w1.robots:
            frame = Transform.centered(mult, r.position)
            assert take_snapshot(w1, r.id, Model.OBLOT, frame) == take_snapshot(w2, r.id, Model.OBLOT, frame)


def test_mimic_fails_case_two():
    w = oc_oblot_witness(_by_name(oblivious_candidates(OC), "mimic_alg_oc"), OC)
    assert [v["case"] for v in w.violations] == ["arrived-from-III"]
    assert w.violations[0]["reached"] == "III" and w.violations[0]["required"] == "I"


def test_always_null_fails_both_cases():
    w = oc_oblot_witness(_by_name(oblivious_candidates(OC), "always_null"), OC)
    assert [v["case"] for v in w.violations] == list(CASE_NAMES)
    assert all(v["reached"] == "II" for v in w.violations)


@pytest.mark.parametrize("program", oblivious_candidates(OC), ids=lambda p: p.name)
def test_every_corpus_program_gets_a_replayable_witness(program):
    w = oc_oblot_witness(program, OC)
    assert w.violations
    assert replay_oc_witness(w, program, OC)
    # serialisable and equal outputs in both cases by construction
    json.loads(w.dumps())
    for name in w.traces:
        assert w.traces[name].final.event_index == 1


def test_witness_rejects_non_oblivious_program():
    with pytest.raises(ModelMismatchError):
        oc_oblot_witness(fcom_candidates()[0], OC)


def test_nondeterministic_program_is_detected():
    ticks = count()
    flaky = Program(
        "flaky",
        Model.OBLOT,
        OBLOT_PALETTE,
        lambda s: NULL_ACTION if next(ticks) % 2 else Action(None, point(0, Fraction(1, 100))),
    )
    with pytest.raises(NondeterministicProgram):
        oc_oblot_witness(flaky, OC)


def test_witness_with_other_frames_still_found():
    mults = {0: (Fraction(2), Fraction(1)), 1: (Fraction(0), Fraction(-1)), 2: (Fraction(5), Fraction(0)), 3: (Fraction(1, 3), Fraction(1, 7))}
    for program in oblivious_candidates(OC):
        w = oc_oblot_witness(program, OC, mults)
        assert w.violations and replay_oc_witness(w, program, OC)


# -- IOP under FCOM^S --------------------------------------------------------------------


def _lightless():
    return _by_name(fcom_candidates(), "lightless_move_away")


def test_lightless_mimic_overshoots_to_four_times():
    w = iop_fcom_search(_lightless(), IOPInstance())
    assert w is not None
    assert w.violations[0]["rule"] == "overshoot"
    assert w.outputs["r0"]["peak_ratio"] == "4/1"
    trace = w.traces["run"]
    first, at = trace.initial, trace.entries[w.violations[0]["index"]].world
    m = first.robot(1).position
    assert squared_distance(at.robot(0).position, m) == 16 * squared_distance(first.robot(0).position, m)


def test_witness_schedule_validates_and_replays():
    inst = IOPInstance()
    w = iop_fcom_search(_lightless(), inst)
    assert validate_schedule(w.schedule, 3) == []
    assert replay_iop_witness(w, _lightless())
    v = check_iop(w.traces["run"], IOPInstance.from_json(w.scenario["instance"]), w.scenario["min_cycles"])
    assert not v.passed and v.violation.rule in SAFETY_RULES


def test_search_is_deterministic():
    assert iop_fcom_search(_lightless(), IOPInstance()).dumps() == iop_fcom_search(_lightless(), IOPInstance()).dumps()


def test_always_null_is_bounded_horizon_failure():
    w = iop_fcom_search(_by_name(fcom_candidates(), "fcom_always_null"), IOPInstance())
    assert w is not None
    assert w.violations[0]["rule"] == "min-cycles"
    assert w.violations[0]["bounded_horizon"] is True


def test_signalling_variant_also_defeated():
    w = iop_fcom_search(_by_name(fcom_candidates(), "signal_move_away"), IOPInstance())
    assert w is not None and w.violations[0]["rule"] in SAFETY_RULES


def test_fsta_program_posing_as_fcom_rejected():
    wrapped = Program("algo_iop_as_fcom", Model.FCOM, IOP_PALETTE, algo_iop)
    with pytest.raises(ModelMismatchError):
        iop_fcom_search(wrapped, IOPInstance())


def test_non_fcom_program_rejected():
    with pytest.raises(ModelMismatchError):
        iop_fcom_search(oblivious_candidates(OC)[0], IOPInstance())


def test_zero_depth_finds_nothing():
    assert iop_fcom_search(_lightless(), IOPInstance(), depth=0) is None


def test_light_reading_fcom_program_still_loses():
    # moves away when every visible light is NIL, approaches otherwise
    def rule(s):
        a, b = (o.position for o in s.others)
        if strictly_between(ORIGIN, a, b):
            return NULL_ACTION
        mid = a if strictly_between(a, ORIGIN, b) else b
        if all(o.light == NIL for o in s.others):
            return Action(None, -mid)
        return Action(None, mid.scaled(Fraction(1, 2)))

    prog = Program("light_reader", Model.FCOM, IOP_PALETTE, rule)
    w = iop_fcom_search(prog, IOPInstance())
    assert w is not None and not w.violations[0]["bounded_horizon"]
