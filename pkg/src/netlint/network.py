"""Hierarchical network model: rule configuration, node formation, special-case reductions.

Throughout, a smaller weight is a higher category, so "same or higher
category" means ``neighbour.weight <= own.weight``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, NamedTuple, Optional

from netlint.errors import ConfigError, DataError
from netlint.geometry import DEFAULT_QUANTUM, LineFeature, Vertex, grid_key

START = "start"
END = "end"


@dataclass(frozen=True)
class RuleConfig:
    k: int
    rule3_weights: frozenset = frozenset()
    prohibited_pair: Optional[tuple[int, int]] = None
    quantum: float = DEFAULT_QUANTUM

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "rule3_weights", frozenset(self.rule3_weights))
        bad = sorted(w for w in self.rule3_weights if not 1 <= w <= self.k)
        if bad:
            raise ConfigError(f"rule-3 weights {bad} outside [1, {self.k}]")
        if self.prohibited_pair is None:
            object.__setattr__(self, "prohibited_pair", (1, self.k))
        else:
            p, q = sorted(int(w) for w in self.prohibited_pair)
            if not (1 <= p <= self.k and 1 <= q <= self.k):
                raise ConfigError(f"prohibited pair {self.prohibited_pair} outside [1, {self.k}]")
            object.__setattr__(self, "prohibited_pair", (p, q))
        if not self.quantum > 0:
            raise ConfigError(f"quantum must be positive, got {self.quantum!r}")

    @classmethod
    def from_threshold(cls, k: int, a: int, **kw) -> "RuleConfig":
        """Weights ``>= a`` follow rule 3, the rest rule 1."""
        if not 1 <= a <= k:
            raise ConfigError(f"a must satisfy 1 <= a <= k, got a={a}, k={k}")
        return cls(k, frozenset(range(a, k + 1)), **kw)

    @property
    def rule2_active(self) -> bool:
        p, q = self.prohibited_pair
        return p != q

    def echo(self) -> dict:
        return {
            "k": self.k,
            "rule3_weights": sorted(self.rule3_weights),
            "prohibited_pair": list(self.prohibited_pair),
            "quantum": self.quantum,
        }


def rule_of(weight: int, cfg: RuleConfig) -> str:
    return "rule3" if weight in cfg.rule3_weights else "rule1"


class EndpointRecord(NamedTuple):
    """A line endpoint produced by the geometrical reduction."""

    feature_id: str
    end_role: str
    node: str
    coord: Vertex
    weight: int


@dataclass
class Network:
    """Features plus the node structure formed by their endpoints.

    ``nodes`` maps grid cells to node ids; ``ends`` maps feature id to its
    (start node, end node).
    """

    features: dict[str, LineFeature]
    nodes: dict[tuple[int, int], str]
    incidence: dict[str, tuple[tuple[str, str], ...]]
    ends: dict[str, tuple[str, str]]
    quantum: float = DEFAULT_QUANTUM
    node_keys: dict[str, tuple[int, int]] = field(default_factory=dict)
    node_vertices: dict[str, Vertex] = field(default_factory=dict)

    def __len__(self):
        return len(self.features)

    def node_coord(self, node: str) -> Vertex:
        """An input endpoint at the node (from the smallest feature id), else the grid point."""
        v = self.node_vertices.get(node)
        if v is not None:
            return v
        kx, ky = self.node_keys[node]
        return Vertex(kx * self.quantum, ky * self.quantum)

    def ordered_ids(self) -> list[str]:
        return sorted(self.features)

    def endpoint_records(self) -> list[EndpointRecord]:
        out = []
        for fid in self.ordered_ids():
            f = self.features[fid]
            s, e = self.ends[fid]
            out.append(EndpointRecord(fid, START, s, f.start, f.weight))
            out.append(EndpointRecord(fid, END, e, f.end, f.weight))
        return out

    def component_of(self) -> dict[str, int]:
        return component_labels(self.ends)


def build_network(features: Iterable[LineFeature], cfg: Optional[RuleConfig] = None, quantum: Optional[float] = None) -> Network:
    if quantum is None:
        quantum = cfg.quantum if cfg is not None else DEFAULT_QUANTUM
    feats: dict[str, LineFeature] = {}
    for f in features:
        if f.id in feats:
            raise DataError(f"duplicate feature id {f.id!r}")
        if cfg is not None and not 1 <= f.weight <= cfg.k:
            raise ConfigError(f"feature {f.id!r}: weight {f.weight} outside [1, {cfg.k}]")
        feats[f.id] = f

    keyed = {fid: (grid_key(f.start, quantum), grid_key(f.end, quantum)) for fid, f in feats.items()}
    keys = sorted({k for pair in keyed.values() for k in pair})
    nodes = {k: f"n{i}" for i, k in enumerate(keys)}
    ends = {fid: (nodes[s], nodes[e]) for fid, (s, e) in keyed.items()}
    inc: dict[str, list] = {}
    where: dict[str, Vertex] = {}
    for fid in sorted(ends):
        s, e = ends[fid]
        inc.setdefault(s, []).append((fid, START))
        inc.setdefault(e, []).append((fid, END))
        where.setdefault(s, feats[fid].start)
        where.setdefault(e, feats[fid].end)
    return Network(
        features=feats,
        nodes=nodes,
        incidence={n: tuple(v) for n, v in inc.items()},
        ends=ends,
        quantum=quantum,
        node_keys={n: k for k, n in nodes.items()},
        node_vertices=where,
    )


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        root = parent.setdefault(x, x)
        while root != parent[root]:
            root = parent[root]
        while x != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def component_labels(ends: Mapping[str, tuple]) -> dict[str, int]:
    """Component index per feature; numbered in order of each component's smallest feature id."""
    uf = _UnionFind()
    for s, e in ends.values():
        uf.union(s, e)
    labels: dict = {}
    out = {}
    for fid in sorted(ends):
        root = uf.find(ends[fid][0])
        out[fid] = labels.setdefault(root, len(labels))
    return out


def connected_components(net: Network) -> list[Network]:
    labels = component_labels(net.ends)
    groups: dict[int, list[str]] = {}
    for fid, c in labels.items():
        groups.setdefault(c, []).append(fid)
    out = []
    for c in sorted(groups):
        fids = groups[c]
        node_set = {n for fid in fids for n in net.ends[fid]}
        out.append(
            Network(
                features={fid: net.features[fid] for fid in fids},
                nodes={k: n for k, n in net.nodes.items() if n in node_set},
                incidence={n: net.incidence[n] for n in node_set},
                ends={fid: net.ends[fid] for fid in fids},
                quantum=net.quantum,
                node_keys={n: net.node_keys[n] for n in node_set},
                node_vertices={n: net.node_vertices[n] for n in node_set if n in net.node_vertices},
            )
        )
    return out


def combined_weight(w1: int, w2: int, g: int) -> int:
    return (w1 - 1) * g + w2


def combine_attributes(
    features: Iterable[LineFeature],
    attr1: Mapping[str, int],
    attr2: Mapping[str, int],
    k: int,
    g: int,
) -> list[LineFeature]:
    """Re-weight features by the pair of two categorisations (``k`` x ``g`` categories)."""
    out = []
    for f in features:
        if f.id not in attr1 or f.id not in attr2:
            raise DataError(f"feature {f.id!r}: missing attribute for combined categorisation")
        w1, w2 = attr1[f.id], attr2[f.id]
        if not (1 <= w1 <= k and 1 <= w2 <= g):
            raise ConfigError(f"feature {f.id!r}: weights ({w1}, {w2}) outside [1, {k}] x [1, {g}]")
        out.append(replace(f, weight=combined_weight(w1, w2, g)))
    return out


def apply_direction_weights(features: Iterable[LineFeature]) -> list[LineFeature]:
    """Turn features into flow arcs oriented along the permitted direction.

    Code -1 reverses the vertex order; code 0 yields two arcs with ids
    ``<id>@fwd`` and ``<id>@rev``.
    """
    out = []
    for f in features:
        code = f.direction_code
        if code == 1:
            out.append(f)
        elif code == -1:
            out.append(replace(f, vertices=f.vertices[::-1], direction_code=1))
        elif code == 0:
            out.append(replace(f, id=f"{f.id}@fwd", direction_code=1))
            out.append(replace(f, id=f"{f.id}@rev", vertices=f.vertices[::-1], direction_code=1))
        else:
            raise DataError(f"feature {f.id!r}: direction must be one of -1, 0, 1, got {code!r}")
    return out


@dataclass(frozen=True)
class EndTask:
    """Validation of one end role of the selected features against allowed neighbour weights.

    Features listed in ``bidirectional`` are checked against ``union`` instead.
    """

    role: str
    allowed: frozenset
    records: tuple[EndpointRecord, ...]
    union: frozenset = frozenset()
    bidirectional: frozenset = frozenset()

    def violations(self, net: Network) -> list[str]:
        bad = []
        for rec in self.records:
            allowed = self.union if rec.feature_id in self.bidirectional else self.allowed
            ok = any(
                fid != rec.feature_id and net.features[fid].weight in allowed
                for fid, _ in net.incidence[rec.node]
            )
            if not ok:
                bad.append(rec.feature_id)
        return bad


def split_per_end_specs(
    net: Network,
    start_allowed: Iterable[int],
    end_allowed: Iterable[int],
    weights: Optional[Iterable[int]] = None,
) -> tuple[EndTask, EndTask]:
    """Treat the start and the end of each selected arc as separate features.

    Only features whose weight is in ``weights`` (all when ``None``) are
    checked. A bidirectional feature (direction code 0) has no designated
    start, so both of its ends are checked against the union of the specs.
    """
    start_allowed, end_allowed = frozenset(start_allowed), frozenset(end_allowed)
    sel = None if weights is None else frozenset(weights)
    starts, finishes = [], []
    bidir = set()
    for rec in net.endpoint_records():
        f = net.features[rec.feature_id]
        if sel is not None and f.weight not in sel:
            continue
        if f.direction_code == 0:
            bidir.add(f.id)
        # Against-the-arc features swap which geometric end is the flow start.
        flow_start = (rec.end_role == START) != (f.direction_code == -1)
        if flow_start:
            starts.append(rec)
        else:
            finishes.append(rec)
    union = start_allowed | end_allowed
    bidir = frozenset(bidir)
    return (
        EndTask(START, start_allowed, tuple(starts), union, bidir),
        EndTask(END, end_allowed, tuple(finishes), union, bidir),
    )
