"""Synthetic hierarchical networks with recorded, injected connection defects.

The clean part of a generated network is made of same-category cycles laid
out in separate grid cells, plus spurs (one end attached) for rule-3
categories and bridges (both ends attached) for rule-1 categories, always
attached to nodes of the same or a higher category. Such a network
validates clean.

Each injected defect gets host nodes of its own, so defects never satisfy
or break one another and the ground truth is exact.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from netlint.detectors import ValidationError, rule1_error, rule2_error, rule3_error
from netlint.errors import ConfigError
from netlint.geometry import LineFeature, Vertex
from netlint.network import END, START, RuleConfig, build_network, component_labels, rule_of

CELL = 10.0


@dataclass
class GeneratedNetwork:
    features: list[LineFeature]
    cfg: RuleConfig
    truth: list[ValidationError]
    params: dict


def default_threshold(k: int) -> int:
    return k // 2 + 1


class _Layout:
    """Hands out grid cells and fresh, never-reused node positions."""

    def __init__(self, rng: random.Random, columns: int):
        self.rng = rng
        self.columns = columns
        self.next_cell = 0
        self.used: set[tuple[float, float]] = set()
        self.spokes: dict[int, int] = {}

    def cell(self) -> int:
        c = self.next_cell
        self.next_cell += 1
        return c

    def center(self, c: int) -> tuple[float, float]:
        return ((c % self.columns) * CELL, (c // self.columns) * CELL)

    def point(self, x: float, y: float) -> Vertex:
        return Vertex(round(x, 6), round(y, 6))

    def claim(self, v: Vertex) -> Vertex:
        self.used.add((v.x, v.y))
        return v

    def fresh(self, c: int) -> Vertex:
        """A new endpoint position inside cell ``c``, away from its cycle."""
        cx, cy = self.center(c)
        while True:
            i = self.spokes.get(c, 0)
            self.spokes[c] = i + 1
            r = 2.8 + 0.15 * (i % 12)
            ang = self.rng.uniform(0, 2 * math.pi)
            v = self.point(cx + r * math.cos(ang), cy + r * math.sin(ang))
            if (v.x, v.y) not in self.used:
                return self.claim(v)


def _bend(a: Vertex, b: Vertex, rng: random.Random, layout: _Layout) -> Vertex:
    """An interior vertex off the chord a-b."""
    mx, my = (a.x + b.x) / 2, (a.y + b.y) / 2
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    off = rng.uniform(0.2, 0.6) * rng.choice((-1, 1))
    return layout.point(mx - dy / norm * off, my + dx / norm * off)


def generate_network(
    n: int,
    k: int,
    seed: int,
    a: Optional[int] = None,
    rule3_weights=None,
    prohibited_pair=None,
    inject_rule1: float = 0.0,
    inject_rule2: float = 0.0,
    inject_rule3: float = 0.0,
    attach_fraction: float = 0.3,
) -> GeneratedNetwork:
    """Generate ``n`` clean features in ``k`` categories plus injected defects.

    Injection rates are fractions of ``n``; each rule-1 or rule-3 defect is
    one extra feature, each rule-2 defect is a prohibited-category bridge
    over a dedicated two-feature host cycle (three rule-2 errors).
    """
    if n < 1 or k < 1:
        raise ConfigError("n and k must be >= 1")
    if rule3_weights is None:
        cfg = RuleConfig.from_threshold(k, a if a is not None else default_threshold(k), prohibited_pair=prohibited_pair)
    else:
        cfg = RuleConfig(k, frozenset(rule3_weights), prohibited_pair)
    if n < 2 * k:
        raise ConfigError(f"infeasible: each of the {k} categories needs at least 2 features, n={n}")
    for name, rate in (("rule1", inject_rule1), ("rule2", inject_rule2), ("rule3", inject_rule3)):
        if rate < 0:
            raise ConfigError(f"injection rate for {name} must be >= 0")
    counts = {name: round(rate * n) for name, rate in (("rule1", inject_rule1), ("rule2", inject_rule2), ("rule3", inject_rule3))}
    rule1_ws = [w for w in range(1, k + 1) if rule_of(w, cfg) == "rule1"]
    rule3_ws = [w for w in range(1, k + 1) if rule_of(w, cfg) == "rule3"]
    if counts["rule1"] and not rule1_ws:
        raise ConfigError("cannot inject rule-1 defects: no category follows rule 1")
    if counts["rule3"] and not rule3_ws:
        raise ConfigError("cannot inject rule-3 defects: no category follows rule 3")
    if counts["rule2"] and not cfg.rule2_active:
        raise ConfigError("cannot inject rule-2 defects: the prohibited pair is a single category")

    rng = random.Random(seed)
    layout = _Layout(rng, max(1, math.ceil(math.sqrt(n))))
    p, q = cfg.prohibited_pair
    features: list[LineFeature] = []
    # host nodes: (weight, vertex, cell)
    hosts: list[tuple[int, Vertex, int]] = []

    def prohibited(w1: int, w2: int) -> bool:
        return cfg.rule2_active and {w1, w2} == {p, q}

    def add(prefix: str, verts, w: int) -> str:
        fid = f"{prefix}{len(features):07d}"
        features.append(LineFeature(fid, tuple(verts), w))
        return fid

    def cycle(w: int, length: int, prefix: str = "f") -> tuple[list[Vertex], list[str]]:
        c = layout.cell()
        cx, cy = layout.center(c)
        base = rng.uniform(0, 2 * math.pi)
        step = 2 * math.pi / length
        nodes = [
            layout.claim(layout.point(cx + 2 * math.cos(base + i * step), cy + 2 * math.sin(base + i * step)))
            for i in range(length)
        ]
        fids = []
        for i in range(length):
            ang = base + (i + 0.5) * step
            if length == 2:
                ang = base + (0.5 if i == 0 else 1.5) * math.pi
            mid = layout.point(cx + 2.4 * math.cos(ang), cy + 2.4 * math.sin(ang))
            fids.append(add(prefix, (nodes[i], mid, nodes[(i + 1) % length]), w))
        return nodes, fids

    def split_lengths(total: int) -> list[int]:
        out = []
        while total:
            if total <= 3:
                out.append(total)
                break
            L = rng.choice([L for L in (2, 3, 4, 5) if total - L >= 2 or total == L])
            out.append(L)
            total -= L
        return out

    per = [n // k + (1 if w <= n % k else 0) for w in range(1, k + 1)]
    for w, count in zip(range(1, k + 1), per):
        attached = min(count - 2, int(count * rng.uniform(0, attach_fraction)))
        for L in split_lengths(count - attached):
            nodes, _ = cycle(w, L)
            c = layout.next_cell - 1
            hosts.extend((w, v, c) for v in nodes)
        eligible = [(v, c) for hw, v, c in hosts if hw <= w and not prohibited(hw, w)]
        for _ in range(attached):
            if rule_of(w, cfg) == "rule3":
                v, c = rng.choice(eligible)
                tip = layout.fresh(c)
                verts = (v, _bend(v, tip, rng, layout), tip) if rng.random() < 0.5 else (tip, _bend(tip, v, rng, layout), v)
            else:
                (v1, _), (v2, _) = rng.sample(eligible, 2)
                verts = (v1, _bend(v1, v2, rng, layout), v2)
            add("f", verts, w)

    # Injection: every defect takes host nodes nobody else uses.
    free = list(hosts)
    rng.shuffle(free)
    truth_specs = []

    def take_host(pred) -> Optional[tuple[int, Vertex, int]]:
        for i, h in enumerate(free):
            if pred(h[0]):
                return free.pop(i)
        return None

    for _ in range(counts["rule1"]):
        w = rng.choice(rule1_ws)
        h = take_host(lambda hw: hw <= w and not prohibited(hw, w))
        if h is None:
            nodes, _ = cycle(w, 2)
            h = (w, nodes[0], layout.next_cell - 1)
        _, v, c = h
        tip = layout.fresh(c)
        if rng.random() < 0.5:
            fid = add("x", (v, _bend(v, tip, rng, layout), tip), w)
            truth_specs.append(("rule1", fid, END))
        else:
            fid = add("x", (tip, _bend(tip, v, rng, layout), v), w)
            truth_specs.append(("rule1", fid, START))

    for _ in range(counts["rule3"]):
        w = rng.choice(rule3_ws)
        h = take_host(lambda hw: hw > w and not prohibited(hw, w)) if rng.random() < 0.5 else None
        if h is None:
            c = layout.cell()
            s, e = layout.fresh(c), layout.fresh(c)
        else:
            _, s, c = h
            e = layout.fresh(c)
        fid = add("x", (s, _bend(s, e, rng, layout), e), w)
        truth_specs.append(("rule3", fid, None))

    for _ in range(counts["rule2"]):
        nodes, host_ids = cycle(p, 2, prefix="x")
        v1, v2 = nodes
        fid = add("x", (v1, _bend(v1, v2, rng, layout), v2), q)
        truth_specs.append(("rule2", fid, host_ids))

    net = build_network(features, cfg)
    comp = component_labels(net.ends)
    truth = []
    for kind, fid, extra in truth_specs:
        s, e = net.ends[fid]
        if kind == "rule1":
            truth.append(rule1_error(fid, [(extra, s if extra == START else e)], comp[fid]))
        elif kind == "rule3":
            truth.append(rule3_error(fid, s, e, comp[fid]))
        else:
            truth.append(rule2_error(fid, q, p, {(h, node) for h in extra for node in (s, e)}, comp[fid]))
            for h in extra:
                truth.append(rule2_error(h, p, q, {(fid, n_) for n_ in net.ends[h]}, comp[h]))
    params = {
        "n": n,
        "k": k,
        "seed": seed,
        "config": cfg.echo(),
        "inject": counts,
    }
    return GeneratedNetwork(features, cfg, sorted(truth), params)
