"""Robot programs.

Each rule maps a :class:`Snapshot` (own position at the origin, local frame)
to an :class:`Action`.  Configurations are recognised by exact similarity
matching against the instance templates; the matching transform then carries
the template's special points into the robot's own frame.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional

from .engine import NIL, NULL_ACTION, Action, Model, Program, Snapshot, SnapshotShapeError
from .geometry import ORIGIN, Point, collinear, find_similarity, strictly_between
from .problems import ILInstance, IOPInstance, OCInstance, recognize

RED, BLUE = "RED", "BLUE"
M, F = "M", "F"

OC_PALETTE = frozenset({NIL, RED, BLUE})
IL_PALETTE = frozenset({NIL, M, F})
IOP_PALETTE = frozenset({NIL, RED})
OBLOT_PALETTE = frozenset({NIL})


def _require(snapshot: Snapshot, model: Model, others: int) -> None:
    if snapshot.model is not model:
        raise SnapshotShapeError(f"expected a {model.value} snapshot, got {snapshot.model.value}")
    if len(snapshot.others) != others:
        raise SnapshotShapeError(f"expected {others} other robots, saw {len(snapshot.others)}")
    if model.sees_own_light and snapshot.own_light is None:
        raise SnapshotShapeError("own light missing")
    if not model.sees_own_light and snapshot.own_light is not None:
        raise SnapshotShapeError("own light visible in a model that hides it")
    lights_seen = [o.light is not None for o in snapshot.others]
    if model.sees_other_lights and not all(lights_seen):
        raise SnapshotShapeError("another robot's light is missing")
    if not model.sees_other_lights and any(lights_seen):
        raise SnapshotShapeError("another robot's light is visible in a model that hides it")


# -- oscillating configurations -------------------------------------------------


# the moving robot leads each template and the observer leads each snapshot,
# so the matcher only anchors on the observer
_LABELS = (True, False, False, False)


@lru_cache(maxsize=64)
def _oc_template(instance: OCInstance, name: str) -> tuple[Point, ...]:
    *triangle, moving = instance.configuration(name)
    return (moving, *triangle)


def _observer_at(snapshot: Snapshot, instance: OCInstance, name: str):
    """Map from configuration ``name`` onto the snapshot that sends the moving
    robot's spot to the observer, if there is one."""
    found = find_similarity(_oc_template(instance, name), snapshot.points(), _LABELS, _LABELS)
    return None if found is None else found[0]


def alg_oc(snapshot: Snapshot, instance: OCInstance) -> Action:
    _require(snapshot, Model.FSTA, 3)
    light = snapshot.own_light
    if light == NIL:
        T = _observer_at(snapshot, instance, "I")
        if T is not None:
            return Action(RED, T(instance.near))
    elif light == RED:
        T = _observer_at(snapshot, instance, "II")
        if T is not None:
            return Action(BLUE, T(instance.far))
    elif light == BLUE:
        T = _observer_at(snapshot, instance, "III")
        if T is not None:
            return Action(None, T(instance.near))
        T = _observer_at(snapshot, instance, "II")
        if T is not None:
            return Action(NIL, T(instance.hub))
    return NULL_ACTION


def alg_oc_program(instance: Optional[OCInstance] = None) -> Program:
    inst = instance or OCInstance()
    return Program("alg_oc", Model.FSTA, OC_PALETTE, lambda s: alg_oc(s, inst))


# -- -IL --------------------------------------------------------------------------


def comil(snapshot: Snapshot, instance: ILInstance) -> Action:
    _require(snapshot, Model.FCOM, 2)
    lights = snapshot.other_lights()
    if F in lights:
        return NULL_ACTION
    name, T = recognize(snapshot.points(), instance.templates())
    if M in lights:
        a, b = (o.position for o in snapshot.others)
        if name == "II" and strictly_between(ORIGIN, a, b):
            return Action(F, T(instance.pivot_target))
        return NULL_ACTION
    if name == "I" and T(instance.mover) == ORIGIN:
        return Action(M, T(instance.mover_target))
    return NULL_ACTION


def comil_program(instance: Optional[ILInstance] = None) -> Program:
    inst = instance or ILInstance()
    return Program("comil", Model.FCOM, IL_PALETTE, lambda s: comil(s, inst))


# -- independent oscillation ----------------------------------------------------


def _line_roles(snapshot: Snapshot) -> Optional[Point]:
    """Middle robot's position, or ``None`` when the observer is the middle one."""
    a, b = (o.position for o in snapshot.others)
    if not collinear(ORIGIN, a, b):
        raise SnapshotShapeError("the three robots are not collinear")
    if strictly_between(ORIGIN, a, b):
        return None
    return a if strictly_between(a, ORIGIN, b) else b


def algo_iop(snapshot: Snapshot) -> Action:
    _require(snapshot, Model.FSTA, 2)
    mid = _line_roles(snapshot)
    if mid is None:
        return NULL_ACTION
    if snapshot.own_light == NIL:
        # away from the middle robot by the current gap
        return Action(RED, -mid)
    # halve the gap
    return Action(NIL, mid.scaled(Fraction(1, 2)))


def algo_iop_program(instance: Optional[IOPInstance] = None) -> Program:
    return Program("algo_iop", Model.FSTA, IOP_PALETTE, algo_iop)


# -- oblivious corpus -------------------------------------------------------------


def _centroid(snapshot: Snapshot) -> Point:
    pts = snapshot.points()
    n = len(pts)
    return Point(sum((p.x for p in pts), Fraction(0)) / n, sum((p.y for p in pts), Fraction(0)) / n)


def _mimic_oc(instance: OCInstance, back_to_hub: bool) -> Callable[[Snapshot], Action]:
    def rule(snapshot: Snapshot) -> Action:
        _require(snapshot, Model.OBLOT, 3)
        name, T = recognize(snapshot.points(), instance.templates())
        if name == "I" and T(instance.hub) == ORIGIN:
            return Action(None, T(instance.near))
        if name == "II" and T(instance.near) == ORIGIN:
            return Action(None, T(instance.hub if back_to_hub else instance.far))
        if name == "III" and T(instance.far) == ORIGIN:
            return Action(None, T(instance.near))
        return NULL_ACTION

    return rule


def _always_null(snapshot: Snapshot) -> Action:
    return NULL_ACTION


def _half_to_centroid(snapshot: Snapshot) -> Action:
    return Action(None, _centroid(snapshot).scaled(Fraction(1, 2)))


def _expand_from_centroid(snapshot: Snapshot) -> Action:
    return Action(None, -_centroid(snapshot))


def _rotate_about_centroid(snapshot: Snapshot) -> Action:
    g = _centroid(snapshot)
    # quarter turn counter-clockwise of the origin about g
    return Action(None, Point(g.x + g.y, g.y - g.x))


def oblivious_candidates(instance: Optional[OCInstance] = None) -> list[Program]:
    """Deterministic lightless programs for four robots."""
    inst = instance or OCInstance()
    make = lambda name, rule: Program(name, Model.OBLOT, OBLOT_PALETTE, rule)  # noqa: E731
    return [
        make("always_null", _always_null),
        make("mimic_alg_oc", _mimic_oc(inst, back_to_hub=False)),
        make("mimic_alg_oc_backward", _mimic_oc(inst, back_to_hub=True)),
        make("half_to_centroid", _half_to_centroid),
        make("expand_from_centroid", _expand_from_centroid),
        make("rotate_about_centroid", _rotate_about_centroid),
    ]


# -- FCOM candidates for the independent oscillation problem --------------------


def _lightless_move_away(snapshot: Snapshot) -> Action:
    _require(snapshot, Model.FCOM, 2)
    mid = _line_roles(snapshot)
    return NULL_ACTION if mid is None else Action(None, -mid)


def _signal_move_away(snapshot: Snapshot) -> Action:
    # raises RED after moving away; others can see it, the mover cannot
    _require(snapshot, Model.FCOM, 2)
    mid = _line_roles(snapshot)
    return NULL_ACTION if mid is None else Action(RED, -mid)


def fcom_candidates() -> list[Program]:
    return [
        Program("lightless_move_away", Model.FCOM, IOP_PALETTE, _lightless_move_away),
        Program("signal_move_away", Model.FCOM, IOP_PALETTE, _signal_move_away),
        Program("fcom_always_null", Model.FCOM, IOP_PALETTE, _always_null),
    ]


# -- registry -----------------------------------------------------------------------

# name -> (problem the program is written for, factory taking that problem's instance)
REGISTRY: dict[str, tuple[str, Callable[..., Program]]] = {
    "alg_oc": ("oc", alg_oc_program),
    "comil": ("il", comil_program),
    "algo_iop": ("iop", algo_iop_program),
}
for _p in oblivious_candidates():
    REGISTRY[_p.name] = ("oc", lambda inst=None, _n=_p.name: {q.name: q for q in oblivious_candidates(inst)}[_n])
for _p in fcom_candidates():
    REGISTRY[_p.name] = ("iop", lambda inst=None, _n=_p.name: {q.name: q for q in fcom_candidates()}[_n])


def get_program(name: str, instance=None) -> Program:
    try:
        _, factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown program {name!r}; known: {sorted(REGISTRY)}") from None
    return factory(instance)


def program_problem(name: str) -> str:
    return REGISTRY[name][0]
