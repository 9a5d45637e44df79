"""Exact rational plane geometry.

Every coordinate is a :class:`fractions.Fraction`.  Floats are rejected at the
boundary so no value in the package is ever rounded.  Local coordinate frames
are chirality-preserving similarities ``p -> m * p + t`` where ``m`` is a
nonzero rational complex number; reflections cannot be expressed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Optional, Sequence, Union

Scalar = Fraction
ScalarLike = Union[int, Fraction, str]


class DegenerateConfiguration(ValueError):
    """Raised when points that must be distinct coincide."""


def to_scalar(value: ScalarLike) -> Fraction:
    if type(value) is Fraction:
        return value
    if isinstance(value, bool) or isinstance(value, float):
        raise TypeError(f"refusing inexact or boolean scalar {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_scalar(value)
    raise TypeError(f"cannot interpret {value!r} as a rational scalar")


def parse_scalar(text: str) -> Fraction:
    text = text.strip()
    if any(ch in text for ch in ".eE"):
        raise ValueError(f"scalar must be written as num/den, got {text!r}")
    return Fraction(text)


def scalar_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True, slots=True)
class Point:
    x: Fraction
    y: Fraction

    def __post_init__(self) -> None:
        if type(self.x) is not Fraction:
            object.__setattr__(self, "x", to_scalar(self.x))
        if type(self.y) is not Fraction:
            object.__setattr__(self, "y", to_scalar(self.y))

    def __hash__(self) -> int:
        # Fractions are normalised, so this agrees with equality and skips
        # the modular inverse inside Fraction.__hash__
        x, y = self.x, self.y
        return hash((x.numerator, x.denominator, y.numerator, y.denominator))

    def __add__(self, other: Point) -> Point:
        return Point(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Point) -> Point:
        return Point(self.x - other.x, self.y - other.y)

    def __neg__(self) -> Point:
        return Point(-self.x, -self.y)

    def scaled(self, factor: ScalarLike) -> Point:
        f = to_scalar(factor)
        return Point(self.x * f, self.y * f)

    def dot(self, other: Point) -> Fraction:
        return self.x * other.x + self.y * other.y

    def cross(self, other: Point) -> Fraction:
        return self.x * other.y - self.y * other.x

    def norm2(self) -> Fraction:
        return self.x * self.x + self.y * self.y

    def to_json(self) -> list[str]:
        return [scalar_to_str(self.x), scalar_to_str(self.y)]

    @classmethod
    def from_json(cls, data: Sequence[ScalarLike]) -> Point:
        if len(data) != 2:
            raise ValueError(f"a point needs two coordinates, got {data!r}")
        return cls(to_scalar(data[0]), to_scalar(data[1]))

    def __repr__(self) -> str:
        return f"Point({self.x}, {self.y})"


ORIGIN = Point(Fraction(0), Fraction(0))


def point(x: ScalarLike, y: ScalarLike) -> Point:
    return Point(to_scalar(x), to_scalar(y))


def squared_distance(p: Point, q: Point) -> Fraction:
    dx = p.x - q.x
    dy = p.y - q.y
    return dx * dx + dy * dy


def lerp(start: Point, end: Point, t: Fraction) -> Point:
    return Point(start.x + t * (end.x - start.x), start.y + t * (end.y - start.y))


def exact_sqrt(value: Fraction) -> Optional[Fraction]:
    """Rational square root of ``value`` if it has one."""
    if value < 0:
        return None
    n, d = value.numerator, value.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


@dataclass(frozen=True, slots=True)
class Transform:
    """``p -> multiplier * p + translation`` with complex multiplication.

    ``multiplier`` is the pair ``(a, b)`` standing for ``a + b i``: a rotation
    composed with a uniform positive scaling.
    """

    multiplier: tuple[Fraction, Fraction]
    translation: Point = ORIGIN
    # (A, B, m, tx_num, tx_den, ty_num, ty_den) with multiplier == (A/m, B/m)
    _ints: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        a, b = self.multiplier
        if type(a) is not Fraction or type(b) is not Fraction:
            a, b = to_scalar(a), to_scalar(b)
        if a == 0 and b == 0:
            raise ValueError("transform multiplier must be nonzero")
        object.__setattr__(self, "multiplier", (a, b))
        if not isinstance(self.translation, Point):
            object.__setattr__(self, "translation", Point.from_json(self.translation))
        t = self.translation
        m = a.denominator * b.denominator // math.gcd(a.denominator, b.denominator)
        ints = (
            a.numerator * (m // a.denominator),
            b.numerator * (m // b.denominator),
            m,
            t.x.numerator,
            t.x.denominator,
            t.y.numerator,
            t.y.denominator,
        )
        object.__setattr__(self, "_ints", ints)

    @classmethod
    def identity(cls) -> Transform:
        return cls((Fraction(1), Fraction(0)))

    @classmethod
    def centered(cls, multiplier: tuple[ScalarLike, ScalarLike], at: Point) -> Transform:
        """The frame with the given rotation/scale that sends ``at`` to the origin."""
        a, b = to_scalar(multiplier[0]), to_scalar(multiplier[1])
        image = Point(a * at.x - b * at.y, a * at.y + b * at.x)
        return cls((a, b), -image)

    def __call__(self, p: Point) -> Point:
        # integer form of a*p + t: one normalisation per coordinate
        A, B, m, txn, txd, tyn, tyd = self._ints
        xn, xd, yn, yd = p.x.numerator, p.x.denominator, p.y.numerator, p.y.denominator
        den = m * xd * yd
        rx = (A * xn * yd - B * yn * xd) * txd + txn * den
        ry = (A * yn * xd + B * xn * yd) * tyd + tyn * den
        return Point(Fraction(rx, den * txd), Fraction(ry, den * tyd))

    def compose(self, inner: Transform) -> Transform:
        """``self ∘ inner``."""
        a, b = self.multiplier
        c, d = inner.multiplier
        return Transform((a * c - b * d, a * d + b * c), self(inner.translation))

    def inverse(self) -> Transform:
        a, b = self.multiplier
        n = a * a + b * b
        inv = (a / n, -b / n)
        t = self.translation
        ia, ib = inv
        return Transform(inv, Point(-(ia * t.x - ib * t.y), -(ia * t.y + ib * t.x)))

    @property
    def scale2(self) -> Fraction:
        a, b = self.multiplier
        return a * a + b * b

    def to_json(self) -> dict:
        return {
            "multiplier": [scalar_to_str(v) for v in self.multiplier],
            "translation": self.translation.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> Transform:
        return cls(
            tuple(to_scalar(v) for v in data["multiplier"]),
            Point.from_json(data.get("translation", ["0", "0"])),
        )


def apply_transform(T: Transform, p: Point) -> Point:
    return T(p)


def rotate90_cw(p: Point, center: Point) -> Point:
    dx = p.x - center.x
    dy = p.y - center.y
    return Point(center.x + dy, center.y - dx)


def _check_distinct(points: Sequence[Point]) -> None:
    if len(set(points)) != len(points):
        raise DegenerateConfiguration(f"points are not pairwise distinct: {list(points)}")


def equidistant_index(points: Sequence[Point]) -> Optional[int]:
    """Index of the unique point whose squared distances to all others agree."""
    _check_distinct(points)
    hits = []
    for i, p in enumerate(points):
        dists = {squared_distance(p, q) for j, q in enumerate(points) if j != i}
        if len(dists) == 1:
            hits.append(i)
    return hits[0] if len(hits) == 1 else None


def collinear(p: Point, q: Point, r: Point) -> bool:
    return (q - p).cross(r - p) == 0


def strictly_between(p: Point, a: Point, b: Point) -> bool:
    if a == b:
        raise DegenerateConfiguration("segment endpoints coincide")
    ab = b - a
    if (p - a).cross(ab) != 0:
        return False
    return (p - a).dot(ab) > 0 and (p - b).dot(a - b) > 0


# -- similarity matching ----------------------------------------------------
#
# Points are lifted to Gaussian integers over a common denominator; the map
# sending A[0] -> B[j], A[1] -> B[k] is then checked on the remaining points
# by cross-multiplication, so no division happens until a match is found.


def _ratios(points: Sequence[Point]) -> list[tuple[int, int, int, int]]:
    out = []
    for p in points:
        xn, xd = p.x.as_integer_ratio()
        yn, yd = p.y.as_integer_ratio()
        out.append((xn, xd, yn, yd))
    if len(set(out)) != len(out):
        raise DegenerateConfiguration(f"points are not pairwise distinct: {list(points)}")
    return out


def _gaussian(ratios: list[tuple[int, int, int, int]], den: int) -> list[tuple[int, int]]:
    return [(xn * (den // xd), yn * (den // yd)) for xn, xd, yn, yd in ratios]


def _cmul(u: tuple[int, int], v: tuple[int, int]) -> tuple[int, int]:
    return (u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0])


def _two_point_map(a0: Point, a1: Point, b0: Point, b1: Point) -> Transform:
    ux, uy = a1.x - a0.x, a1.y - a0.y
    vx, vy = b1.x - b0.x, b1.y - b0.y
    n = ux * ux + uy * uy
    m = ((vx * ux + vy * uy) / n, (vy * ux - vx * uy) / n)
    image = Point(m[0] * a0.x - m[1] * a0.y, m[0] * a0.y + m[1] * a0.x)
    return Transform(m, b0 - image)


def find_similarity(
    A: Sequence[Point],
    B: Sequence[Point],
    labels_a: Optional[Sequence] = None,
    labels_b: Optional[Sequence] = None,
) -> Optional[tuple[Transform, tuple[int, ...]]]:
    """Find ``T`` and a correspondence ``sigma`` with ``T(A[i]) == B[sigma[i]]``.

    Labels, when given, must agree under the correspondence.  Candidates are
    tried in lexicographic order of the images of ``A[0]`` and ``A[1]``, so a
    list always matches itself through the identity.
    """
    n = len(A)
    if n != len(B):
        raise ValueError(f"point lists differ in size: {n} vs {len(B)}")
    if (labels_a is None) != (labels_b is None):
        raise ValueError("labels must be given for both lists or neither")
    if labels_a is not None and (len(labels_a) != n or len(labels_b) != n):
        raise ValueError("one label per point is required")
    ra = _ratios(A)
    rb = _ratios(B)
    la = labels_a if labels_a is not None else [None] * n
    lb = labels_b if labels_b is not None else [None] * n
    if n == 0:
        return Transform.identity(), ()
    if n == 1:
        if la[0] != lb[0]:
            return None
        return Transform((Fraction(1), Fraction(0)), B[0] - A[0]), (0,)

    den = math.lcm(*(r[1] for r in ra), *(r[3] for r in ra), *(r[1] for r in rb), *(r[3] for r in rb))
    ga = _gaussian(ra, den)
    gb = _gaussian(rb, den)
    a0 = ga[0]
    u = (ga[1][0] - a0[0], ga[1][1] - a0[1])
    rel_a = [(p[0] - a0[0], p[1] - a0[1]) for p in ga]
    for j in range(n):
        if lb[j] != la[0]:
            continue
        bj = gb[j]
        # image of each B point in the "A[1]-A[0] scaled" coordinates
        scaled_b = {}
        for idx, q in enumerate(gb):
            scaled_b[_cmul((q[0] - bj[0], q[1] - bj[1]), u)] = idx
        for k in range(n):
            if k == j or lb[k] != la[1]:
                continue
            v = (gb[k][0] - bj[0], gb[k][1] - bj[1])
            sigma = []
            for i in range(n):
                idx = scaled_b.get(_cmul(rel_a[i], v))
                if idx is None or lb[idx] != la[i]:
                    break
                sigma.append(idx)
            else:
                return _two_point_map(A[0], A[1], B[j], B[k]), tuple(sigma)
    return None


def match_up_to_similarity(
    A: Sequence[Point],
    B: Sequence[Point],
    labels_a: Optional[Sequence] = None,
    labels_b: Optional[Sequence] = None,
) -> Optional[Transform]:
    found = find_similarity(A, B, labels_a, labels_b)
    return None if found is None else found[0]


def brute_force_similar(A: Sequence[Point], B: Sequence[Point]) -> bool:
    """Slow reference check: try every bijection and solve from two points."""
    n = len(A)
    if n != len(B):
        return False
    if n <= 1:
        return True
    for perm in permutations(range(n)):
        T = _two_point_map(A[0], A[1], B[perm[0]], B[perm[1]])
        if all(T(A[i]) == B[perm[i]] for i in range(n)):
            return True
    return False


def pythagorean_unit(p: int, q: int) -> tuple[Fraction, Fraction]:
    """Rational point on the unit circle from the integer pair ``(p, q)``."""
    n = p * p + q * q
    if n == 0:
        raise ValueError("p and q cannot both be zero")
    return Fraction(p * p - q * q, n), Fraction(2 * p * q, n)
