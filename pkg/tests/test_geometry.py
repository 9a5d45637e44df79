from __future__ import annotations

import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcmsim.geometry import (
    ORIGIN,
    DegenerateConfiguration,
    Point,
    Transform,
    apply_transform,
    brute_force_similar,
    collinear,
    equidistant_index,
    exact_sqrt,
    find_similarity,
    match_up_to_similarity,
    point,
    rotate90_cw,
    strictly_between,
    to_scalar,
)

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
points = st.builds(Point, rationals, rationals)
multipliers = st.tuples(rationals, rationals).filter(lambda m: m != (0, 0))
transforms = st.builds(lambda m, t: Transform(m, t), multipliers, points)


# -- scalars and points -------------------------------------------------------


def test_floats_are_rejected():
    with pytest.raises(TypeError):
        to_scalar(0.5)
    with pytest.raises(TypeError):
        Point(0.5, 1)
    with pytest.raises(ValueError):
        to_scalar("0.5")


def test_string_scalars_parse_exactly():
    assert to_scalar("3/4") == Fraction(3, 4)
    assert to_scalar(-2) == Fraction(-2)


def test_point_hash_agrees_with_equality():
    assert Point(Fraction(2, 4), 1) == Point(Fraction(1, 2), Fraction(3, 3))
    assert hash(Point(Fraction(2, 4), 1)) == hash(Point(Fraction(1, 2), Fraction(3, 3)))
    assert len({point(1, 2), point("2/2", "4/2"), point(2, 1)}) == 2


def test_exact_sqrt():
    assert exact_sqrt(Fraction(16, 9)) == Fraction(4, 3)
    assert exact_sqrt(Fraction(2)) is None
    assert exact_sqrt(Fraction(-1)) is None


# -- transforms -----------------------------------------------------------------


@pytest.mark.parametrize(
    "T, p, expected",
    [
        (Transform.identity(), point(3, 4), point(3, 4)),
        (Transform((0, 1)), point(1, 0), point(0, 1)),
        (Transform((2, 0), point(1, 1)), point(Fraction(1, 2), 0), point(2, 1)),
    ],
)
def test_apply_transform_examples(T, p, expected):
    assert apply_transform(T, p) == expected


def test_zero_multiplier_rejected():
    with pytest.raises(ValueError):
        Transform((0, 0))


@given(transforms, points)
def test_inverse_round_trip(T, p):
    assert T.inverse()(T(p)) == p
    assert T(T.inverse()(p)) == p


@given(transforms, transforms, points)
def test_compose_matches_sequential_application(S, T, p):
    assert S.compose(T)(p) == S(T(p))


@given(multipliers, points)
def test_centered_sends_point_to_origin(m, p):
    assert Transform.centered(m, p)(p) == ORIGIN


@given(transforms)
def test_json_round_trip(T):
    assert Transform.from_json(T.to_json()) == T


@given(transforms, points, points)
def test_transforms_scale_squared_distances_uniformly(T, p, q):
    d_before = (p - q).norm2()
    d_after = (T(p) - T(q)).norm2()
    assert d_after == T.scale2 * d_before


# -- rotation -------------------------------------------------------------------


@pytest.mark.parametrize(
    "p, c, expected",
    [
        (point(0, -1), ORIGIN, point(-1, 0)),
        (point(5, 7), point(5, 7), point(5, 7)),
        (point(2, 0), ORIGIN, point(0, -2)),
    ],
)
def test_rotate90_cw_examples(p, c, expected):
    assert rotate90_cw(p, c) == expected


@given(points, points)
def test_four_quarter_turns_are_identity(p, c):
    q = p
    for _ in range(4):
        q = rotate90_cw(q, c)
    assert q == p


# -- equidistant index ---------------------------------------------------------------


def _equidistant_oracle(pts):
    """Direct check of every candidate with exact squared distances."""
    hits = []
    for i in range(len(pts)):
        d = [(pts[i].x - pts[j].x) ** 2 + (pts[i].y - pts[j].y) ** 2 for j in range(len(pts)) if j != i]
        if all(v == d[0] for v in d):
            hits.append(i)
    return hits[0] if len(hits) == 1 else None


@pytest.mark.parametrize(
    "pts, expected",
    [
        ([point(1, 0), point(-1, 0), point(0, 1), point(0, 0)], 3),
        ([point(0, 0), point(1, 0), point(2, 0), point(3, 0)], None),
        ([point(1, 0), point(-1, 0), point(0, 1), point(0, Fraction(1, 2))], None),
    ],
)
def test_equidistant_index_examples(pts, expected):
    assert equidistant_index(pts) == expected
    assert _equidistant_oracle(pts) == expected


def test_equidistant_index_rejects_duplicates():
    with pytest.raises(DegenerateConfiguration):
        equidistant_index([point(0, 0), point(0, 0), point(1, 0), point(0, 1)])


def test_equidistant_index_against_oracle_1000_random():
    rng = random.Random(2024)
    checked = 0
    while checked < 1000:
        # small grid so equidistant configurations actually occur
        pts = [point(rng.randint(-3, 3), Fraction(rng.randint(-6, 6), 2)) for _ in range(4)]
        if len(set(pts)) < 4:
            continue
        if rng.random() < 0.3:
            # plant a centre equidistant from three points of a square around it
            c = pts[0]
            r = Fraction(rng.randint(1, 4), rng.randint(1, 3))
            pts = [c, c + point(r, 0), c + point(0, r), c + point(-r, 0)]
        assert equidistant_index(pts) == _equidistant_oracle(pts)
        checked += 1


# -- betweenness ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "p, expected",
    [(point(0, 0), True), (point(2, 0), False), (point(0, 1), False), (point(3, 0), False)],
)
def test_strictly_between_examples(p, expected):
    assert strictly_between(p, point(-1, 0), point(2, 0)) is expected


def test_strictly_between_degenerate_segment():
    with pytest.raises(DegenerateConfiguration):
        strictly_between(point(0, 0), point(1, 1), point(1, 1))


@given(points, points, st.fractions(min_value=0, max_value=1, max_denominator=20))
def test_strictly_between_on_interpolated_points(a, b, t):
    if a == b:
        return
    p = Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
    assert collinear(p, a, b)
    assert strictly_between(p, a, b) is (0 < t < 1)


# -- similarity matching --------------------------------------------------------------


def test_match_self_is_identity():
    pts = [point(1, 0), point(-1, 0), point(0, 1), point(0, Fraction(1, 2))]
    assert match_up_to_similarity(pts, pts) == Transform.identity()


def test_two_point_match_is_forced():
    T = match_up_to_similarity([point(0, 0), point(1, 0)], [point(0, 0), point(0, 2)])
    assert T is not None and T.multiplier == (0, 2)


def test_mirror_image_not_matched_in_order():
    A = [point(0, 0), point(1, 0), point(0, 1)]
    B = [point(0, 0), point(1, 0), point(0, -1)]
    # as ordered, labelled lists the only candidate map is a reflection
    assert find_similarity(A, B, [0, 1, 2], [0, 1, 2]) is None
    # as sets, the mirrored right isosceles triangle is a quarter turn of the original
    found = find_similarity(A, B)
    assert found is not None and found[0].multiplier == (0, -1)


def test_scalene_mirror_image_never_matches():
    A = [point(0, 0), point(2, 0), point(0, 1)]
    B = [point(0, 0), point(2, 0), point(0, -1)]
    assert find_similarity(A, B) is None
    assert brute_force_similar(A, B) is False


def test_size_mismatch_rejected():
    with pytest.raises(ValueError):
        find_similarity([point(0, 0)], [point(0, 0), point(1, 1)])


def test_labels_constrain_correspondence():
    A = [point(0, 0), point(1, 0), point(2, 0)]
    B = [point(0, 0), point(1, 0), point(2, 0)]
    found = find_similarity(A, B, ["x", "y", "z"], ["z", "y", "x"])
    assert found is not None
    T, sigma = found
    assert sigma == (2, 1, 0)
    assert T.multiplier == (-1, 0)


@settings(max_examples=200)
@given(st.lists(points, min_size=3, max_size=5, unique=True), transforms, st.randoms(use_true_random=False))
def test_transformed_shuffled_copy_is_found(pts, T, rnd):
    image = [T(p) for p in pts]
    rnd.shuffle(image)
    found = find_similarity(pts, image)
    assert found is not None
    S, sigma = found
    assert all(S(p) == image[sigma[i]] for i, p in enumerate(pts))


@settings(max_examples=200)
@given(st.lists(points, min_size=3, max_size=4, unique=True), st.lists(points, min_size=3, max_size=4, unique=True))
def test_find_similarity_agrees_with_brute_force(A, B):
    if len(A) != len(B):
        return
    assert (find_similarity(A, B) is not None) == brute_force_similar(A, B)


def test_brute_force_agrees_on_small_grid():
    grid = [point(x, y) for x in range(3) for y in range(2)]
    triples = list(itertools.combinations(grid, 3))
    rng = random.Random(5)
    for _ in range(300):
        A, B = rng.choice(triples), rng.choice(triples)
        if collinear(*A) or collinear(*B):
            continue
        assert (find_similarity(A, B) is not None) == brute_force_similar(A, B)
