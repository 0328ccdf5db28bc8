"""Read-only spatial index over endpoint records.

Box queries go through an R-tree packed with sort-tile-recursive bulk
loading. Point equality (the spatial join predicate) is answered from a hash
of grid keys so that it never depends on floating-point box tolerances.
"""

from __future__ import annotations

import math
from functools import cached_property
from operator import itemgetter
from typing import Generic, Iterable, Iterator, Optional, Sequence, TypeVar

from netlint.errors import DataError
from netlint.geometry import DEFAULT_QUANTUM, Vertex, grid_key
from netlint.network import EndpointRecord

T = TypeVar("T")

DEFAULT_CAPACITY = 16

_identity = itemgetter(0, 1)  # (feature_id, end_role)


class _Node:
    __slots__ = ("xmin", "ymin", "xmax", "ymax", "children", "leaf")

    def __init__(self, children, leaf: bool):
        self.children = children
        self.leaf = leaf
        if leaf:
            xs = [c[0] for c in children]
            ys = [c[1] for c in children]
            self.xmin, self.xmax = min(xs), max(xs)
            self.ymin, self.ymax = min(ys), max(ys)
        else:
            self.xmin = min(c.xmin for c in children)
            self.ymin = min(c.ymin for c in children)
            self.xmax = max(c.xmax for c in children)
            self.ymax = max(c.ymax for c in children)


class PointRTree(Generic[T]):
    """Static R-tree over ``(x, y, item)`` triples, STR bulk-loaded."""

    def __init__(self, entries: Iterable[tuple[float, float, T]], capacity: int = DEFAULT_CAPACITY):
        if capacity < 2:
            raise ValueError("node capacity must be at least 2")
        self.capacity = capacity
        self.entries = list(entries)
        self.root = self._pack(self.entries) if self.entries else None

    def _str_groups(self, items: list, key_x, key_y) -> list[list]:
        cap = self.capacity
        n_pages = math.ceil(len(items) / cap)
        n_slices = math.ceil(math.sqrt(n_pages))
        per_slice = n_slices * cap
        items = sorted(items, key=key_x)
        groups = []
        for s in range(0, len(items), per_slice):
            chunk = sorted(items[s : s + per_slice], key=key_y)
            groups.extend(chunk[i : i + cap] for i in range(0, len(chunk), cap))
        return groups

    def _pack(self, entries: list) -> _Node:
        level = [
            _Node(g, leaf=True)
            for g in self._str_groups(entries, lambda e: (e[0], e[1]), lambda e: (e[1], e[0]))
        ]
        while len(level) > 1:
            level = [
                _Node(g, leaf=False)
                for g in self._str_groups(
                    level,
                    lambda n: n.xmin + n.xmax,
                    lambda n: n.ymin + n.ymax,
                )
            ]
        return level[0]

    def __len__(self):
        return len(self.entries)

    def depth(self) -> int:
        d, node = 0, self.root
        while node is not None:
            d += 1
            node = None if node.leaf else node.children[0]
        return d

    def query(self, xmin: float, ymin: float, xmax: float, ymax: float) -> Iterator[tuple[float, float, T]]:
        """Entries inside the closed box."""
        if self.root is None:
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.xmax < xmin or node.xmin > xmax or node.ymax < ymin or node.ymin > ymax:
                continue
            if node.leaf:
                for e in node.children:
                    if xmin <= e[0] <= xmax and ymin <= e[1] <= ymax:
                        yield e
            else:
                stack.extend(node.children)


class EndpointIndex:
    """Endpoint records hashed by grid cell, with an R-tree for box queries.

    ``keys`` may supply the grid cell of each record when the caller already
    has them at this quantum (a built network does).
    """

    def __init__(
        self,
        records: Sequence[EndpointRecord],
        quantum: float = DEFAULT_QUANTUM,
        capacity: int = DEFAULT_CAPACITY,
        keys: Optional[Sequence[tuple[int, int]]] = None,
    ):
        self.entries = tuple(records)
        self.quantum = quantum
        self.capacity = capacity
        cells: dict[tuple[int, int], list[EndpointRecord]] = {}
        if keys is None:
            floor = math.floor
            keys = [(floor(r.coord.x / quantum + 0.5), floor(r.coord.y / quantum + 0.5)) for r in self.entries]
        elif len(keys) != len(self.entries):
            raise ValueError("one grid key per record required")
        self.keys = keys
        get = cells.get
        for r, key in zip(self.entries, keys):
            bucket = get(key)
            if bucket is None:
                cells[key] = [r]
            else:
                bucket.append(r)
        self.cells = cells
        if len(set(map(_identity, self.entries))) != len(self.entries):
            seen = set()
            for r in self.entries:
                if (r.feature_id, r.end_role) in seen:
                    raise DataError(f"duplicate endpoint record {r.feature_id!r}/{r.end_role}")
                seen.add((r.feature_id, r.end_role))

    def __len__(self):
        return len(self.entries)

    @cached_property
    def tree(self) -> PointRTree[EndpointRecord]:
        # Built on first box query: the equality join never needs it.
        return PointRTree(((r.coord.x, r.coord.y, r) for r in self.entries), self.capacity)


def bulk_build(
    records: Iterable[EndpointRecord],
    quantum: float = DEFAULT_QUANTUM,
    capacity: int = DEFAULT_CAPACITY,
    keys: Optional[Sequence[tuple[int, int]]] = None,
) -> EndpointIndex:
    return EndpointIndex(list(records), quantum, capacity, keys)


def query_point(idx: EndpointIndex, v: Vertex) -> list[EndpointRecord]:
    return list(idx.cells.get(grid_key(v, idx.quantum), ()))


def query_box(idx: EndpointIndex, lo: Vertex, hi: Vertex) -> list[EndpointRecord]:
    if lo.x > hi.x or lo.y > hi.y:
        raise ValueError("query box needs lo <= hi componentwise")
    return [e[2] for e in idx.tree.query(lo.x, lo.y, hi.x, hi.y)]


def spatial_join(left: EndpointIndex, right: EndpointIndex) -> list[tuple[EndpointRecord, EndpointRecord]]:
    """All (left, right) record pairs sharing a quantized coordinate."""
    if left.quantum != right.quantum:
        raise ValueError("cannot join indexes built at different quanta")
    small, large = (left, right) if len(left.cells) <= len(right.cells) else (right, left)
    out = []
    for key, recs in small.cells.items():
        other = large.cells.get(key)
        if other is None:
            continue
        if small is left:
            out.extend((l, r) for l in recs for r in other)
        else:
            out.extend((l, r) for l in other for r in recs)
    return out


def unmatched(left: EndpointIndex, right: EndpointIndex, among: Optional[Iterable[int]] = None) -> list[int]:
    """Positions in ``left.entries`` with no co-located record of another feature in ``right``.

    An anti-join; ``among`` restricts the probe to the given positions.
    """
    miss = []
    cells = right.cells
    entries, keys = left.entries, left.keys
    for i in range(len(entries)) if among is None else among:
        other = cells.get(keys[i])
        if other is None:
            miss.append(i)
            continue
        fid = entries[i].feature_id
        for o in other:
            if o.feature_id != fid:
                break
        else:
            miss.append(i)
    return miss
