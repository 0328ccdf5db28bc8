"""Exact 2D primitives: vertices, edges, segment intersection, polylines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from netlint.errors import DataError

DEFAULT_QUANTUM = 1e-9

# Relative error bound for the float orientation determinant; below it the
# sign is recomputed with rationals.
_ORIENT_EPS = 1e-14


@dataclass(frozen=True, slots=True)
class Vertex:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise DataError(f"non-finite coordinate ({self.x}, {self.y})")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class Edge:
    a: Vertex
    b: Vertex

    def __post_init__(self):
        if self.a == self.b:
            raise DataError(f"zero-length edge at ({self.a.x}, {self.a.y})")

    def canonical(self) -> "Edge":
        """The same segment with endpoints in lexicographic order."""
        if self.a.as_tuple() <= self.b.as_tuple():
            return self
        return Edge(self.b, self.a)


@dataclass(frozen=True, slots=True)
class Intersection:
    """Solution set of two segment equations: empty, one point, or a shared sub-segment."""

    kind: str  # "none" | "point" | "overlap"
    point: Optional[Vertex] = None
    overlap: Optional[Edge] = None

    def __bool__(self) -> bool:
        return self.kind != "none"


NO_INTERSECTION = Intersection("none")


@dataclass(frozen=True, slots=True)
class LineFeature:
    """A directed polyline: the network element.

    ``direction_code`` is 1 when flow follows the vertex order, -1 when it
    runs against it and 0 when the feature is passable both ways.
    """

    id: str
    vertices: tuple[Vertex, ...]
    weight: int
    direction_code: int = 1
    attributes: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 2:
            raise DataError(f"feature {self.id!r}: a line needs at least 2 vertices, got {len(verts)}")
        seen = set()
        for i in range(len(verts) - 1):
            a, b = verts[i], verts[i + 1]
            if a == b:
                raise DataError(
                    f"feature {self.id!r}: duplicate consecutive vertex ({a.x}, {a.y}) at position {i}"
                )
            key = frozenset((a, b))
            if key in seen:
                raise DataError(
                    f"feature {self.id!r}: edge ({a.x}, {a.y})-({b.x}, {b.y}) repeated at position {i}"
                )
            seen.add(key)
        if isinstance(self.weight, bool) or not isinstance(self.weight, int):
            raise DataError(f"feature {self.id!r}: weight must be an integer, got {self.weight!r}")
        if self.weight < 1:
            raise DataError(f"feature {self.id!r}: weight must be >= 1, got {self.weight}")
        if self.direction_code not in (-1, 0, 1):
            raise DataError(
                f"feature {self.id!r}: direction must be one of -1, 0, 1, got {self.direction_code!r}"
            )

    @property
    def start(self) -> Vertex:
        return self.vertices[0]

    @property
    def end(self) -> Vertex:
        return self.vertices[-1]

    def edges(self) -> list[Edge]:
        v = self.vertices
        return [Edge(v[i], v[i + 1]) for i in range(len(v) - 1)]


@dataclass(frozen=True, slots=True)
class PointFeature:
    id: str
    v: Vertex


def line(fid: str, coords, weight: int = 1, direction_code: int = 1) -> LineFeature:
    """Shorthand constructor from a sequence of ``(x, y)`` pairs."""
    return LineFeature(fid, tuple(Vertex(float(x), float(y)) for x, y in coords), weight, direction_code)


def endpoints(f: LineFeature) -> tuple[Vertex, Vertex]:
    return f.vertices[0], f.vertices[-1]


def grid_key(v: Vertex, quantum: float = DEFAULT_QUANTUM) -> tuple[int, int]:
    """Grid cell of ``v`` at resolution ``quantum`` (round half up)."""
    return (math.floor(v.x / quantum + 0.5), math.floor(v.y / quantum + 0.5))


def vertices_equal(a: Vertex, b: Vertex, quantum: float = DEFAULT_QUANTUM) -> bool:
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    return grid_key(a, quantum) == grid_key(b, quantum)


def orientation(a: Vertex, b: Vertex, c: Vertex) -> int:
    """Sign of the turn a -> b -> c: 1 counter-clockwise, -1 clockwise, 0 collinear.

    Exact: falls back to rational arithmetic when the float determinant is
    too close to zero to trust its sign.
    """
    l = (b.x - a.x) * (c.y - a.y)
    r = (b.y - a.y) * (c.x - a.x)
    det = l - r
    bound = _ORIENT_EPS * (abs(l) + abs(r))
    if det > bound:
        return 1
    if det < -bound:
        return -1
    ax, ay = Fraction(a.x), Fraction(a.y)
    exact = (Fraction(b.x) - ax) * (Fraction(c.y) - ay) - (Fraction(b.y) - ay) * (Fraction(c.x) - ax)
    return (exact > 0) - (exact < 0)


def _boxes_overlap(p: Vertex, p2: Vertex, q: Vertex, q2: Vertex) -> bool:
    return not (
        max(p.x, p2.x) < min(q.x, q2.x)
        or max(q.x, q2.x) < min(p.x, p2.x)
        or max(p.y, p2.y) < min(q.y, q2.y)
        or max(q.y, q2.y) < min(p.y, p2.y)
    )


def exact_intersection(p: Vertex, p2: Vertex, q: Vertex, q2: Vertex):
    """Intersection of segments p-p2 and q-q2 with exact coordinates.

    Returns ``None``, ``("point", (x, y))`` or ``("overlap", lo, hi)``.
    Point coordinates are floats when the point is an input vertex and
    Fractions for proper crossings, so comparisons stay exact.
    """
    if not _boxes_overlap(p, p2, q, q2):
        return None
    o1 = orientation(p, p2, q)
    o2 = orientation(p, p2, q2)
    if o1 == 0 and o2 == 0:
        # Collinear: lexicographic order is a linear order along the line.
        a_lo, a_hi = sorted((p.as_tuple(), p2.as_tuple()))
        b_lo, b_hi = sorted((q.as_tuple(), q2.as_tuple()))
        lo = max(a_lo, b_lo)
        hi = min(a_hi, b_hi)
        if lo > hi:
            return None
        if lo == hi:
            return ("point", lo)
        return ("overlap", lo, hi)
    o3 = orientation(q, q2, p)
    o4 = orientation(q, q2, p2)
    if o1 * o2 > 0 or o3 * o4 > 0:
        return None
    if o1 == 0:
        return ("point", q.as_tuple())
    if o2 == 0:
        return ("point", q2.as_tuple())
    if o3 == 0:
        return ("point", p.as_tuple())
    if o4 == 0:
        return ("point", p2.as_tuple())
    px, py = Fraction(p.x), Fraction(p.y)
    rx, ry = Fraction(p2.x) - px, Fraction(p2.y) - py
    qx, qy = Fraction(q.x), Fraction(q.y)
    sx, sy = Fraction(q2.x) - qx, Fraction(q2.y) - qy
    t = ((qx - px) * sy - (qy - py) * sx) / (rx * sy - ry * sx)
    return ("point", (px + t * rx, py + t * ry))


def segment_intersection(e1: Edge, e2: Edge) -> Intersection:
    res = exact_intersection(e1.a, e1.b, e2.a, e2.b)
    if res is None:
        return NO_INTERSECTION
    if res[0] == "point":
        x, y = res[1]
        return Intersection("point", point=Vertex(float(x), float(y)))
    return Intersection("overlap", overlap=Edge(Vertex(*res[1]), Vertex(*res[2])))


def point_on_segment(pt, a: Vertex, b: Vertex) -> bool:
    """True if ``pt`` (an ``(x, y)`` pair, floats or Fractions) lies on closed segment a-b."""
    x, y = pt
    if not (min(a.x, b.x) <= x <= max(a.x, b.x) and min(a.y, b.y) <= y <= max(a.y, b.y)):
        return False
    if isinstance(x, float) and isinstance(y, float):
        return orientation(a, b, Vertex(x, y)) == 0
    ax, ay = Fraction(a.x), Fraction(a.y)
    return (Fraction(b.x) - ax) * (y - ay) == (Fraction(b.y) - ay) * (x - ax)
