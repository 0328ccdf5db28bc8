import math
import random

import pytest

from netlint.detectors import (
    AttributeTable,
    ValidationError,
    detect_exhaustive,
    detect_near_nodes,
    detect_point_no_flow,
    detect_self_intersection,
    detect_spatialjoin,
    error_keys,
    reduce_features,
)
from netlint.errors import DataError
from netlint.geometry import line
from netlint.network import RuleConfig, apply_direction_weights, build_network
from oracles import connection_oracle, flow_oracle, random_network


def both(features, cfg):
    net = build_network(features, cfg)
    ex = detect_exhaustive(AttributeTable.from_network(net), cfg)
    sj = detect_spatialjoin(net, cfg)
    return net, ex, sj


def exact(v):
    return (v.x, v.y)


def test_chain_fixture():
    cfg = RuleConfig.from_threshold(2, 2)
    feats = [line("A", [(0, 0), (1, 0)], 1), line("B", [(1, 0), (2, 0)], 2)]
    net, ex, sj = both(feats, cfg)
    # B (weight 2) is a lower category, so it satisfies neither end of A.
    want = [
        ValidationError("rule1", ("A",), ("n0", "n1")),
        ValidationError("rule2", ("A", "B"), ("n1",)),
        ValidationError("rule2", ("B", "A"), ("n1",)),
    ]
    assert ex == want
    assert sj == want
    assert [e.detail for e in ex] == [e.detail for e in sj]
    assert "start at n0 and end at n1" in ex[0].detail


def test_triangle_is_clean():
    cfg = RuleConfig.from_threshold(1, 1)
    feats = [line("a", [(0, 0), (1, 0)]), line("b", [(1, 0), (0, 1)]), line("c", [(0, 1), (0, 0)])]
    _, ex, sj = both(feats, cfg)
    assert ex == sj == []


def test_isolated_feature_violates_rule3():
    cfg = RuleConfig.from_threshold(1, 1)
    _, ex, sj = both([line("solo", [(0, 0), (1, 0)])], cfg)
    assert ex == sj == [ValidationError("rule3", ("solo",), ("n0", "n1"))]


def test_empty_network():
    cfg = RuleConfig(3)
    _, ex, sj = both([], cfg)
    assert ex == sj == []


def test_ring_does_not_satisfy_itself():
    cfg = RuleConfig(2)
    ring = line("r", [(0, 0), (1, 0), (0, 1), (0, 0)], 1)
    _, ex, sj = both([ring], cfg)
    assert ex == sj == [ValidationError("rule1", ("r",), ("n0", "n0"))]
    # One qualifying neighbour at the shared node satisfies both ends.
    _, ex, sj = both([ring, line("s", [(0, 0), (-1, 0)], 1)], cfg)
    assert [e.key() for e in ex] == [e.key() for e in sj] == [("rule1", ("s",))]


def test_rule2_one_error_per_offender():
    cfg = RuleConfig(3)  # rule 1 everywhere, prohibited pair (1, 3)
    feats = [
        line("hub", [(0, 0), (1, 0)], 1),
        line("x1", [(1, 0), (2, 0)], 3),
        line("x2", [(1, 0), (1, 1)], 3),
        line("x3", [(0, 0), (0, -1)], 3),
    ]
    _, ex, sj = both(feats, cfg)
    r2 = [e for e in ex if e.kind == "rule2"]
    assert [e.feature_ids for e in r2] == [("hub", "x1"), ("x1", "hub"), ("x2", "hub"), ("x3", "hub")]
    assert r2[0].detail.endswith("x1 at n2, x2 at n2, x3 at n1")
    assert [e for e in sj if e.kind == "rule2"] == r2


def test_rule2_vacuous_for_single_category():
    cfg = RuleConfig.from_threshold(1, 1)
    feats = [line("a", [(0, 0), (1, 0)]), line("b", [(1, 0), (2, 0)])]
    _, ex, sj = both(feats, cfg)
    assert not any(e.kind == "rule2" for e in ex + sj)


def test_engines_agree_on_messy_networks():
    rng = random.Random(5)
    for trial in range(40):
        k = rng.randint(1, 6)
        cfg = RuleConfig.from_threshold(k, rng.randint(1, k))
        feats = random_network(rng, rng.randint(0, 120), k, grid=10)
        net = build_network(feats, cfg)
        table = AttributeTable.from_network(net)
        py = detect_exhaustive(table, cfg, engine="python")
        assert detect_exhaustive(table, cfg) == py
        assert detect_spatialjoin(net, cfg) == py
        assert error_keys(py) == connection_oracle(feats, cfg.rule3_weights, cfg.prohibited_pair, exact)
        assert [e.detail for e in detect_spatialjoin(net, cfg)] == [e.detail for e in py]


def test_arbitrary_rule3_sets_and_pairs():
    rng = random.Random(6)
    for trial in range(30):
        k = rng.randint(2, 7)
        r3 = {w for w in range(1, k + 1) if rng.random() < 0.5}
        pair = tuple(rng.sample(range(1, k + 1), 2))
        cfg = RuleConfig(k, r3, pair)
        feats = random_network(rng, 100, k, grid=9)
        net, ex, sj = both(feats, cfg)
        assert ex == sj
        assert error_keys(ex) == connection_oracle(feats, cfg.rule3_weights, cfg.prohibited_pair, exact)


def test_components_reported():
    cfg = RuleConfig.from_threshold(1, 1)
    feats = [line("a", [(0, 0), (1, 0)]), line("b", [(5, 5), (6, 5)])]
    _, ex, sj = both(feats, cfg)
    assert [e.component for e in ex] == [e.component for e in sj] == [0, 1]


def test_unknown_engine():
    with pytest.raises(ValueError):
        detect_exhaustive(AttributeTable([]), RuleConfig(1), engine="gpu")


def test_attribute_table_rejects_duplicates():
    from netlint.detectors import TableRow

    with pytest.raises(DataError):
        AttributeTable([TableRow("a", "n0", "n1", 1), TableRow("a", "n1", "n2", 1)])


def test_rule3_relaxation_is_monotone():
    rng = random.Random(7)
    for trial in range(40):
        k = rng.randint(2, 6)
        r3 = {w for w in range(1, k + 1) if rng.random() < 0.4}
        feats = random_network(rng, 80, k, grid=9)
        w = rng.randint(1, k)
        before_cfg = RuleConfig(k, r3 - {w})
        after_cfg = RuleConfig(k, r3 | {w})
        net = build_network(feats, before_cfg)
        before = {e.feature_ids[0] for e in detect_spatialjoin(net, before_cfg) if e.kind != "rule2"}
        after = {e.feature_ids[0] for e in detect_spatialjoin(net, after_cfg) if e.kind != "rule2"}
        of_w = {f.id for f in feats if f.weight == w}
        assert (after & of_w) <= (before & of_w)
        assert after - of_w == before - of_w


def test_reduce_features_counts():
    rng = random.Random(8)
    feats = random_network(rng, 200, 5)
    cfg = RuleConfig.from_threshold(5, 3)
    sets = reduce_features(build_network(feats, cfg), cfg)
    assert sum(len(v) for v in sets.values()) == 400
    for w in range(1, 6):
        n_w = sum(f.weight == w for f in feats)
        if w < 3:
            assert len(sets.get((w, "start"), [])) == len(sets.get((w, "end"), [])) == n_w
            assert (w, "both") not in sets
        else:
            assert len(sets.get((w, "both"), [])) == 2 * n_w
            assert {r.weight for r in sets.get((w, "both"), [])} <= {w}
    single = RuleConfig(1)
    uniform = [line(f"u{i}", [(i, 0), (i + 1, 0)]) for i in range(10)]
    sets = reduce_features(build_network(uniform, single), single)
    assert sorted(sets) == [(1, "end"), (1, "start")]
    assert len(sets[(1, "start")]) == len(sets[(1, "end")]) == 10


# Flow


def _flow(feats, **kw):
    return detect_point_no_flow(build_network(apply_direction_weights(feats)), **kw)


def test_flow_chain():
    net = build_network([line("A", [(0, 0), (1, 0)]), line("B", [(1, 0), (2, 0)])])
    errs = detect_point_no_flow(net)
    assert [(e.nodes, e.feature_ids, e.detail.split(" at")[0]) for e in errs] == [
        (("n0",), ("A",), "no inflow"),
        (("n2",), ("B",), "no outflow"),
    ]


def test_flow_cycle_is_clean():
    assert _flow([line("a", [(0, 0), (1, 0)]), line("b", [(1, 0), (0, 1)]), line("c", [(0, 1), (0, 0)])]) == []


def test_flow_two_heads():
    errs = _flow([line("a", [(0, 0), (1, 0)]), line("b", [(2, 0), (1, 0)])])
    assert {e.nodes for e in errs} == {("n0",), ("n1",), ("n2",)}
    mid = next(e for e in errs if e.nodes == ("n1",))
    assert mid.feature_ids == ("a", "b") and mid.detail.startswith("no outflow")


def test_flow_exempt_terminals():
    errs = _flow([line("A", [(0, 0), (1, 0)]), line("B", [(1, 0), (2, 0)])], exempt_terminals=True)
    assert errs == []
    errs = _flow([line("a", [(0, 0), (1, 0)]), line("b", [(2, 0), (1, 0)])], exempt_terminals=True)
    assert [e.feature_ids for e in errs] == [("a", "b")]


def test_flow_bidirectional_feature_passes_flow():
    errs = _flow([line("a", [(0, 0), (1, 0)], direction_code=0)])
    assert errs == []


def test_flow_matches_degree_oracle():
    rng = random.Random(9)
    for _ in range(30):
        feats = apply_direction_weights(random_network(rng, 60, 1, grid=8))
        net = build_network(feats)
        want = flow_oracle([(exact(f.start), exact(f.end)) for f in feats])
        got = {net.node_coord(e.nodes[0]).as_tuple() for e in detect_point_no_flow(net)}
        assert got == want


# Self-intersection


def test_self_intersection_modes():
    ring = line("ring", [(0, 0), (1, 0), (1, 1), (0, 1), (0, 0)])
    eight = line("eight", [(0, 0), (2, 2), (2, 0), (0, 2)])
    simple = line("simple", [(5, 5), (6, 5), (7, 6)])
    net = build_network([ring, eight, simple])
    assert [e.feature_ids for e in detect_self_intersection(net, "paper")] == [("ring",)]
    full = detect_self_intersection(net, "full")
    assert [e.feature_ids for e in full] == [("eight",), ("ring",)]
    assert full[0].detail.endswith("010") and full[1].detail.endswith("100")
    with pytest.raises(ValueError):
        detect_self_intersection(net, "strict")


def test_default_mode_is_endpoint_coincidence():
    rng = random.Random(10)
    feats = random_network(rng, 300, 1, grid=6)
    net = build_network(feats)
    flagged = {e.feature_ids[0] for e in detect_self_intersection(net)}
    assert flagged == {f.id for f in feats if f.start == f.end}


# Near nodes


def test_near_nodes_examples():
    net = build_network([line("a", [(0, 0), (0, 0.5)])])
    errs = detect_near_nodes(net, 1.0)
    assert [(e.nodes, e.feature_ids) for e in errs] == [(("n0", "n1"), ("a", "a"))]
    net = build_network([line("a", [(0, 0), (3, 4)])])
    assert detect_near_nodes(net, 1.0) == []
    with pytest.raises(ValueError):
        detect_near_nodes(net, 1e-12)


def test_near_nodes_matches_all_pairs():
    rng = random.Random(11)
    for _ in range(10):
        feats = [
            line(f"f{i}", [(rng.uniform(0, 20), rng.uniform(0, 20)), (rng.uniform(0, 20), rng.uniform(0, 20))])
            for i in range(150)
        ]
        eps = rng.uniform(0.2, 1.5)
        net = build_network(feats)
        pts = {n: net.node_coord(n) for n in net.incidence}
        want = {
            (a, b)
            for a in pts
            for b in pts
            if a < b and 0 < math.hypot(pts[a].x - pts[b].x, pts[a].y - pts[b].y) <= eps
        }
        assert {e.nodes for e in detect_near_nodes(net, eps)} == want


def test_detectors_are_deterministic():
    rng = random.Random(12)
    feats = random_network(rng, 150, 4)
    cfg = RuleConfig.from_threshold(4, 2)
    net = build_network(feats, cfg)
    assert detect_spatialjoin(net, cfg) == detect_spatialjoin(build_network(feats, cfg), cfg)
    assert detect_point_no_flow(net) == detect_point_no_flow(net)
