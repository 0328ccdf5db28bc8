"""Connection-error detectors.

``detect_exhaustive`` compares every feature of the attribute table with
every other. ``detect_spatialjoin`` reduces lines to their endpoints, stores
them per category and joins each category only against the categories it
needs. Both produce the same errors; the first serves as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from netlint.errors import DataError
from netlint.geometry import grid_key
from netlint.intersection import classify_self_intersection
from netlint.network import END, START, EndpointRecord, Network, RuleConfig, component_labels, rule_of
from netlint.spatial_index import PointRTree, bulk_build, query_point, spatial_join, unmatched

KINDS = ("rule1", "rule2", "rule3", "no_flow", "self_intersection", "near_node")


@dataclass(frozen=True, order=True)
class ValidationError:
    kind: str
    feature_ids: tuple[str, ...]
    nodes: tuple[str, ...] = ()
    component: Optional[int] = field(default=None, compare=False)
    detail: str = field(default="", compare=False)

    def key(self) -> tuple[str, tuple[str, ...]]:
        return (self.kind, self.feature_ids)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "feature_ids": list(self.feature_ids),
            "nodes": list(self.nodes),
            "component": self.component,
            "detail": self.detail,
        }


def error_keys(errors: Iterable[ValidationError]) -> set:
    return {e.key() for e in errors}


# Constructors shared by both connection detectors so that their records match field for field.


def rule1_error(fid: str, failing: list[tuple[str, str]], component: int) -> ValidationError:
    where = " and ".join(f"{role} at {node}" for role, node in failing)
    verb = "lacks" if len(failing) == 1 else "lack"
    return ValidationError(
        "rule1",
        (fid,),
        tuple(node for _, node in failing),
        component,
        f"{where} {verb} a same-or-higher category neighbour",
    )


def rule3_error(fid: str, s: str, e: str, component: int) -> ValidationError:
    nodes = (s,) if s == e else (s, e)
    return ValidationError(
        "rule3",
        (fid,),
        nodes,
        component,
        f"no same-or-higher category neighbour at either end ({', '.join(nodes)})",
    )


def rule2_error(fid: str, weight: int, other: int, partners: set, component: int) -> ValidationError:
    ordered = sorted(partners)
    return ValidationError(
        "rule2",
        (fid, ordered[0][0]),
        tuple(sorted({node for _, node in ordered})),
        component,
        f"weight {weight} connected to prohibited weight {other}: "
        + ", ".join(f"{pid} at {node}" for pid, node in ordered),
    )


class _LazyComponents:
    """Component labels computed on first lookup; clean networks never pay for them."""

    def __init__(self, ends):
        self.ends = ends
        self.labels = None

    def __getitem__(self, fid: str) -> int:
        if self.labels is None:
            self.labels = component_labels(self.ends)
        return self.labels[fid]


@dataclass(frozen=True)
class TableRow:
    id: str
    start_node: str
    end_node: str
    weight: int
    extra: dict = field(default_factory=dict, compare=False)


@dataclass
class AttributeTable:
    """One row per feature: id, start node, end node, weight (plus opaque extras)."""

    rows: list[TableRow]

    def __post_init__(self):
        ids = [r.id for r in self.rows]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate feature ids in table: {dup}")

    def __len__(self):
        return len(self.rows)

    @classmethod
    def from_network(cls, net: Network) -> "AttributeTable":
        return cls(
            [TableRow(fid, *net.ends[fid], net.features[fid].weight) for fid in net.ordered_ids()]
        )

    def ends(self) -> dict[str, tuple[str, str]]:
        return {r.id: (r.start_node, r.end_node) for r in self.rows}


def detect_exhaustive(table: AttributeTable, cfg: RuleConfig, engine: str = "numpy") -> list[ValidationError]:
    """All-pairs search over the attribute table, O(n^2).

    ``engine="python"`` runs the nested loops literally; ``"numpy"``
    evaluates the same pairwise comparisons a block of rows at a time.
    """
    rows = sorted(table.rows, key=lambda r: r.id)
    comp = _LazyComponents({r.id: (r.start_node, r.end_node) for r in rows})
    if engine == "python":
        found = _exhaustive_loops(rows, cfg, comp)
    elif engine == "numpy":
        # The default 8192-element ufunc buffer puts rows shorter than it on a
        # ~3x slower broadcast path, which would skew cost per pair with n.
        old = np.setbufsize(1024)
        try:
            found = _exhaustive_blocks(rows, cfg, comp)
        finally:
            np.setbufsize(old)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return sorted(found)


def _exhaustive_loops(rows: list[TableRow], cfg: RuleConfig, comp) -> list[ValidationError]:
    p, q = cfg.prohibited_pair
    out = []
    n = len(rows)
    for i in range(n):
        ri = rows[i]
        if cfg.rule2_active and ri.weight in (p, q):
            other = p + q - ri.weight
            partners = set()
            for j in range(n):
                rj = rows[j]
                if i == j or rj.weight != other:
                    continue
                for node in (ri.start_node, ri.end_node):
                    if node in (rj.start_node, rj.end_node):
                        partners.add((rj.id, node))
            if partners:
                out.append(rule2_error(ri.id, ri.weight, other, partners, comp[ri.id]))
        start = end = False
        for j in range(n):
            rj = rows[j]
            if i == j or rj.weight > ri.weight:
                continue
            if ri.start_node in (rj.start_node, rj.end_node):
                start = True
            if ri.end_node in (rj.start_node, rj.end_node):
                end = True
        if rule_of(ri.weight, cfg) == "rule1":
            if not (start and end):
                failing = [(role, node) for role, node, ok in ((START, ri.start_node, start), (END, ri.end_node, end)) if not ok]
                out.append(rule1_error(ri.id, failing, comp[ri.id]))
        elif not (start or end):
            out.append(rule3_error(ri.id, ri.start_node, ri.end_node, comp[ri.id]))
    return out


def _exhaustive_blocks(rows: list[TableRow], cfg: RuleConfig, comp) -> list[ValidationError]:
    n = len(rows)
    if n == 0:
        return []
    node_ids: dict[str, int] = {}
    S = np.fromiter((node_ids.setdefault(r.start_node, len(node_ids)) for r in rows), dtype=np.int64, count=n)
    E = np.fromiter((node_ids.setdefault(r.end_node, len(node_ids)) for r in rows), dtype=np.int64, count=n)
    W = np.fromiter((r.weight for r in rows), dtype=np.int64, count=n)
    names = {v: k for k, v in node_ids.items()}
    p, q = cfg.prohibited_pair
    rule3 = np.fromiter((w in cfg.rule3_weights for w in W.tolist()), dtype=bool, count=n)
    if cfg.rule2_active:
        other = np.where(W == p, q, np.where(W == q, p, -1))
    else:
        other = np.full(n, -1)

    out = []
    block = max(1, (1 << 20) // n)
    Sj, Ej, Wj = S[None, :], E[None, :], W[None, :]
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        b = i1 - i0
        si, ei, wi = S[i0:i1, None], E[i0:i1, None], W[i0:i1, None]
        touch_s = (Sj == si) | (Ej == si)
        touch_e = (Sj == ei) | (Ej == ei)
        diag = (np.arange(b), np.arange(i0, i1))
        touch_s[diag] = False
        touch_e[diag] = False
        ok = Wj <= wi
        start_ok = (touch_s & ok).any(axis=1)
        end_ok = (touch_e & ok).any(axis=1)
        oth = other[i0:i1, None]
        bad2_s = touch_s & (Wj == oth)
        bad2_e = touch_e & (Wj == oth)
        has2 = bad2_s.any(axis=1) | bad2_e.any(axis=1)
        for r in range(b):
            i = i0 + r
            ri = rows[i]
            c = comp[ri.id]
            if has2[r]:
                partners = {(rows[j].id, ri.start_node) for j in np.flatnonzero(bad2_s[r])}
                partners |= {(rows[j].id, ri.end_node) for j in np.flatnonzero(bad2_e[r])}
                out.append(rule2_error(ri.id, ri.weight, int(other[i]), partners, c))
            if rule3[i]:
                if not (start_ok[r] or end_ok[r]):
                    out.append(rule3_error(ri.id, names[S[i]], names[E[i]], c))
            elif not (start_ok[r] and end_ok[r]):
                failing = []
                if not start_ok[r]:
                    failing.append((START, ri.start_node))
                if not end_ok[r]:
                    failing.append((END, ri.end_node))
                out.append(rule1_error(ri.id, failing, c))
    return out


BOTH = "both"


def reduce_features(net: Network, cfg: RuleConfig) -> dict[tuple[int, str], list[EndpointRecord]]:
    """Endpoint datasets per category.

    Rule-1 categories need each end checked on its own, so they get separate
    start and end datasets keyed ``(w, "start")`` / ``(w, "end")``; rule-3
    categories only need one satisfied end and get a single ``(w, "both")``.
    """
    return {key: recs for key, (recs, _) in _reduce(net, cfg).items()}


def _reduce(net: Network, cfg: RuleConfig) -> dict[tuple[int, str], tuple[list, list]]:
    # One pass over the features, collecting each record's grid cell alongside it.
    sets: dict[tuple[int, str], tuple[list, list]] = {}
    node_keys, features, r3 = net.node_keys, net.features, cfg.rule3_weights
    for fid, (s, e) in net.ends.items():
        f = features[fid]
        w = f.weight
        vs = f.vertices
        rs = EndpointRecord(fid, START, s, vs[0], w)
        re = EndpointRecord(fid, END, e, vs[-1], w)
        if w in r3:
            both = sets.get((w, BOTH))
            if both is None:
                both = sets[(w, BOTH)] = ([], [])
            both[0].extend((rs, re))
            both[1].extend((node_keys[s], node_keys[e]))
        else:
            first = sets.get((w, START))
            if first is None:
                first = sets[(w, START)] = ([], [])
                sets[(w, END)] = ([], [])
            last = sets[(w, END)]
            first[0].append(rs)
            first[1].append(node_keys[s])
            last[0].append(re)
            last[1].append(node_keys[e])
    return sets


def detect_spatialjoin(net: Network, cfg: RuleConfig) -> list[ValidationError]:
    indexes = {key: bulk_build(recs, net.quantum, keys=keys) for key, (recs, keys) in _reduce(net, cfg).items()}
    by_weight: dict[int, list] = {}
    for key in sorted(indexes):
        by_weight.setdefault(key[0], []).append(key)
    weights = sorted(by_weight)
    comp = _LazyComponents(net.ends)

    # Endpoints never meeting a same-or-higher category endpoint of another feature.
    unsatisfied: dict[str, set] = {}
    for i in weights:
        # Own category first: in a clean network it satisfies almost every endpoint.
        targets = [indexes[k] for j in [i] + [j for j in weights if j < i] for k in by_weight[j]]
        for key in by_weight[i]:
            idx = indexes[key]
            pending = None
            for t in targets:
                pending = unmatched(idx, t, pending)
                if not pending:
                    break
            for h in pending:
                rec = idx.entries[h]
                unsatisfied.setdefault(rec.feature_id, set()).add(rec.end_role)

    out = []
    for fid in sorted(unsatisfied):
        f = net.features[fid]
        s, e = net.ends[fid]
        missing = unsatisfied[fid]
        if rule_of(f.weight, cfg) == "rule1":
            failing = [(role, node) for role, node in ((START, s), (END, e)) if role in missing]
            out.append(rule1_error(fid, failing, comp[fid]))
        elif len(missing) == 2:
            out.append(rule3_error(fid, s, e, comp[fid]))

    if cfg.rule2_active:
        p, q = cfg.prohibited_pair
        partners: dict[str, set] = {}
        for kp in by_weight.get(p, ()):
            for kq in by_weight.get(q, ()):
                for a, b in spatial_join(indexes[kp], indexes[kq]):
                    partners.setdefault(a.feature_id, set()).add((b.feature_id, a.node))
                    partners.setdefault(b.feature_id, set()).add((a.feature_id, b.node))
        for fid, ps in partners.items():
            w = net.features[fid].weight
            out.append(rule2_error(fid, w, p + q - w, ps, comp[fid]))
    return sorted(out)


def detect_point_no_flow(net: Network, exempt_terminals: bool = False) -> list[ValidationError]:
    """Nodes where flow is blocked: arcs only arrive (no outflow) or only leave (no inflow).

    Features are taken as already oriented along their flow direction.
    """
    records = net.endpoint_records()
    tails = bulk_build([r for r in records if r.end_role == START], net.quantum)
    heads = bulk_build([r for r in records if r.end_role == END], net.quantum)
    blocked: dict[str, str] = {}
    for r in tails.entries:
        if not query_point(heads, r.coord):
            blocked[r.node] = "no inflow"
    for r in heads.entries:
        if not query_point(tails, r.coord):
            blocked[r.node] = "no outflow"
    comp = _LazyComponents(net.ends)
    out = []
    for node, why in blocked.items():
        inc = net.incidence[node]
        if exempt_terminals and len(inc) == 1:
            continue
        fids = tuple(sorted({fid for fid, _ in inc}))
        out.append(
            ValidationError(
                "no_flow",
                fids,
                (node,),
                comp[fids[0]],
                f"{why} at {node} ({len(inc)} incident arc ends)",
            )
        )
    return sorted(out)


def detect_self_intersection(net: Network, mode: str = "paper") -> list[ValidationError]:
    """``paper`` flags features whose two endpoints coincide; ``full`` adds interior self-crossings."""
    if mode not in ("paper", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    comp = _LazyComponents(net.ends)
    out = []
    q = net.quantum
    for fid in net.ordered_ids():
        f = net.features[fid]
        s, e = net.ends[fid]
        loop = grid_key(f.start, q) == grid_key(f.end, q)
        if mode == "full":
            triple = classify_self_intersection(f, q)
            if triple.any():
                out.append(
                    ValidationError(
                        "self_intersection",
                        (fid,),
                        (s,) if triple.boundary_loop else (),
                        comp[fid],
                        f"self-intersection triple {triple}",
                    )
                )
        elif loop:
            out.append(
                ValidationError("self_intersection", (fid,), (s,), comp[fid], f"start and end coincide at {s}")
            )
    return out


def detect_near_nodes(net: Network, epsilon: float) -> list[ValidationError]:
    """Pairs of distinct nodes closer than ``epsilon`` (likely missed connections)."""
    if not epsilon > net.quantum:
        raise ValueError(f"epsilon must exceed the quantum ({net.quantum}), got {epsilon}")
    coords = {node: net.node_coord(node) for node in sorted(net.incidence)}
    tree = PointRTree((v.x, v.y, node) for node, v in coords.items())
    comp = _LazyComponents(net.ends)
    first = {node: min(fid for fid, _ in inc) for node, inc in net.incidence.items()}
    out = []
    for a, va in coords.items():
        for _, _, b in tree.query(va.x - epsilon, va.y - epsilon, va.x + epsilon, va.y + epsilon):
            if b <= a:
                continue
            vb = coords[b]
            d = math.hypot(va.x - vb.x, va.y - vb.y)
            if 0 < d <= epsilon:
                ca, cb = comp[first[a]], comp[first[b]]
                out.append(
                    ValidationError(
                        "near_node",
                        (first[a], first[b]),
                        (a, b),
                        ca if ca == cb else None,
                        f"nodes {a} and {b} are {d:.9g} apart",
                    )
                )
    return sorted(out)
