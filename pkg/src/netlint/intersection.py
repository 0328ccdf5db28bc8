"""9-Intersection matrices for points and lines, and the line self-intersection triple.

Interiors and boundaries follow the arc-node object model: the boundary of a
line is its first and last vertex, the interior is the rest of the polyline,
and a point has a boundary (its vertex) but no interior.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from netlint.geometry import (
    DEFAULT_QUANTUM,
    LineFeature,
    PointFeature,
    Vertex,
    exact_intersection,
    point_on_segment,
    vertices_equal,
)

Cell = Optional[bool]

_CHARS = {True: "1", False: "0", None: "-"}
_VALUES = {"1": True, "0": False, "-": None}


@dataclass(frozen=True)
class IntersectionMatrix:
    """3x3 emptiness matrix; rows/columns are interior, boundary, exterior.

    ``None`` marks a cell that cannot be defined for the object dimensions.
    """

    cells: tuple[tuple[Cell, Cell, Cell], ...]

    def __post_init__(self):
        if len(self.cells) != 3 or any(len(r) != 3 for r in self.cells):
            raise ValueError("an intersection matrix is 3x3")

    def __getitem__(self, rc):
        r, c = rc
        return self.cells[r][c]

    def __str__(self) -> str:
        return "".join(_CHARS[c] for row in self.cells for c in row)

    @classmethod
    def from_string(cls, s: str) -> "IntersectionMatrix":
        s = s.replace(",", "").replace(";", "").replace(" ", "")
        if len(s) != 9 or any(ch not in _VALUES for ch in s):
            raise ValueError(f"bad matrix string {s!r}")
        vals = [_VALUES[ch] for ch in s]
        return cls((tuple(vals[0:3]), tuple(vals[3:6]), tuple(vals[6:9])))

    def transpose(self) -> "IntersectionMatrix":
        return IntersectionMatrix(tuple(tuple(self.cells[r][c] for r in range(3)) for c in range(3)))


@dataclass(frozen=True)
class SelfIntersectionTriple:
    boundary_loop: bool
    interior_cross: bool
    boundary_on_interior: bool

    def any(self) -> bool:
        return self.boundary_loop or self.interior_cross or self.boundary_on_interior

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in (self.boundary_loop, self.interior_cross, self.boundary_on_interior))


def _boundary(l: LineFeature) -> set:
    return {l.vertices[0].as_tuple(), l.vertices[-1].as_tuple()}


def _on_line(pt, l: LineFeature) -> bool:
    v = l.vertices
    return any(point_on_segment(pt, v[i], v[i + 1]) for i in range(len(v) - 1))


def _covered(l1: LineFeature, l2: LineFeature) -> bool:
    """True if every point of l1 lies on l2."""
    v2 = l2.vertices
    for i in range(len(l1.vertices) - 1):
        a, b = l1.vertices[i], l1.vertices[i + 1]
        start, stop = sorted((a.as_tuple(), b.as_tuple()))
        pieces = []
        for j in range(len(v2) - 1):
            res = exact_intersection(a, b, v2[j], v2[j + 1])
            if res is not None and res[0] == "overlap":
                pieces.append((res[1], res[2]))
        pieces.sort()
        reach = start
        for lo, hi in pieces:
            if lo > reach:
                return False
            reach = max(reach, hi)
        if reach < stop:
            return False
    return True


def nine_intersection_lines(l1: LineFeature, l2: LineFeature) -> IntersectionMatrix:
    b1, b2 = _boundary(l1), _boundary(l2)
    v1, v2 = l1.vertices, l2.vertices
    ii = False
    for i in range(len(v1) - 1):
        for j in range(len(v2) - 1):
            res = exact_intersection(v1[i], v1[i + 1], v2[j], v2[j + 1])
            if res is None:
                continue
            # An overlap holds infinitely many points; at most four are boundary.
            if res[0] == "overlap" or (res[1] not in b1 and res[1] not in b2):
                ii = True
                break
        if ii:
            break
    b2_on_1 = {p for p in b2 if _on_line(p, l1)}
    b1_on_2 = {p for p in b1 if _on_line(p, l2)}
    ib = any(p not in b1 for p in b2_on_1)
    bi = any(p not in b2 for p in b1_on_2)
    bb = bool(b1 & b2)
    ie = not _covered(l1, l2)
    ei = not _covered(l2, l1)
    be = len(b1_on_2) < len(b1)
    eb = len(b2_on_1) < len(b2)
    return IntersectionMatrix(((ii, ib, ie), (bi, bb, be), (ei, eb, True)))


def nine_intersection_point_line(p: PointFeature, l: LineFeature) -> IntersectionMatrix:
    pt = p.v.as_tuple()
    b = _boundary(l)
    on_boundary = pt in b
    on_interior = not on_boundary and _on_line(pt, l)
    outside = not on_boundary and not on_interior
    return IntersectionMatrix(
        (
            (None, None, None),
            (on_interior, on_boundary, outside),
            (True, b != {pt}, True),
        )
    )


def nine_intersection_line_point(l: LineFeature, p: PointFeature) -> IntersectionMatrix:
    return nine_intersection_point_line(p, l).transpose()


def nine_intersection_points(p1: PointFeature, p2: PointFeature) -> IntersectionMatrix:
    same = p1.v == p2.v
    return IntersectionMatrix(((None, None, None), (None, same, not same), (None, not same, True)))


def classify_self_intersection(l: LineFeature, quantum: float = DEFAULT_QUANTUM) -> SelfIntersectionTriple:
    """Boundary loop, interior crossing and boundary-on-interior flags of ``l``.

    Adjacent edges are never tested against each other. A boundary vertex
    touching a non-adjacent edge counts unless the touch is the closure of
    a ring (start and end vertex coinciding).
    """
    v = l.vertices
    m = len(v)
    if m <= 3:
        return SelfIntersectionTriple(False, False, False)
    loop = vertices_equal(v[0], v[-1], quantum)
    b = _boundary(l)

    cross = False
    for i in range(m - 1):
        for j in range(i + 2, m - 1):
            res = exact_intersection(v[i], v[i + 1], v[j], v[j + 1])
            if res is None:
                continue
            if res[0] == "overlap" or res[1] not in b:
                cross = True
                break
        if cross:
            break

    on_interior = False
    ends = {0, m - 1}
    for own, vi in ((0, 0), (m - 2, m - 1)):
        pt = v[vi].as_tuple()
        for j in range(m - 1):
            if abs(j - own) < 2 or not point_on_segment(pt, v[j], v[j + 1]):
                continue
            closure = (j in ends and pt == v[j].as_tuple()) or (j + 1 in ends and pt == v[j + 1].as_tuple())
            if not closure:
                on_interior = True
                break
        if on_interior:
            break
    return SelfIntersectionTriple(loop, cross, on_interior)


def assert_no_self_intersection(l: LineFeature, quantum: float = DEFAULT_QUANTUM) -> bool:
    return not classify_self_intersection(l, quantum).any()


__all__ = [
    "IntersectionMatrix",
    "SelfIntersectionTriple",
    "nine_intersection_lines",
    "nine_intersection_point_line",
    "nine_intersection_line_point",
    "nine_intersection_points",
    "classify_self_intersection",
    "assert_no_self_intersection",
    "Vertex",
]
