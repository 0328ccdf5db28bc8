import json

import pytest

from netlint.detectors import ValidationError, detect_spatialjoin
from netlint.errors import DataError
from netlint.generate import generate_network
from netlint.geometry import Vertex, grid_key, line
from netlint.io import (
    cross_check_table,
    emit_report,
    input_hash,
    load_report,
    parse_attribute_table,
    parse_geojson,
    serialize_geojson,
    summarize,
)
from netlint.network import RuleConfig, build_network


def fc(*features):
    return json.dumps({"type": "FeatureCollection", "features": list(features)})


def feat(coords, geom_type="LineString", **props):
    return {"type": "Feature", "properties": props, "geometry": {"type": geom_type, "coordinates": coords}}


def test_parse_one_line():
    (f,) = parse_geojson(fc(feat([[0, 0], [1, 1]], weight=2)))
    assert f.id == "f0" and f.weight == 2 and f.vertices == (Vertex(0, 0), Vertex(1, 1))
    assert f.direction_code == 1


def test_parse_keeps_extra_properties():
    (f,) = parse_geojson(fc(feat([[0, 0], [1, 1]], id="r7", weight=1, direction=-1, name="Main St")))
    assert f.id == "r7" and f.direction_code == -1 and f.attributes == {"name": "Main St"}


@pytest.mark.parametrize(
    "doc, needle",
    [
        (fc(feat([[[0, 0], [1, 0], [0, 1], [0, 0]]], "Polygon", id="p1", weight=1)), "'p1'"),
        (fc(feat([[0, 0], [1, 1]], weight="high")), "weight"),
        (fc(feat([[0, 0], [1, 1]])), "missing 'weight'"),
        (fc(feat([[0, 0], [0, 0]], weight=1)), "feature #0"),
        (fc(feat([[0, 0]], weight=1)), "at least 2"),
        (fc(feat([[0, 0], [1, "x"]], weight=1)), "not a number"),
        (fc(feat([[0, 0], [1, 1]], weight=1, direction=2)), "direction"),
        (fc(feat([[0, 0], [1, 1]], id="a", weight=1), feat([[1, 1], [2, 2]], id="a", weight=1)), "duplicate"),
        ('{"type": "FeatureCollection", "features": [', "line 1"),
        ('{"type": "Feature"}', "FeatureCollection"),
    ],
)
def test_parse_rejections(doc, needle):
    with pytest.raises(DataError, match=needle):
        parse_geojson(doc)


def test_malformed_json_reports_position():
    with pytest.raises(DataError, match=r"line 3, column \d+"):
        parse_geojson('{\n "type": "FeatureCollection",\n "features": [}\n')


def test_parse_table():
    t = parse_attribute_table(b"id,start_node,end_node,weight\na,n1,n2,1\nb,n2,n3,2\nc,n3,n1,2\n")
    assert [r.id for r in t.rows] == ["a", "b", "c"]
    assert t.rows[1].weight == 2


def test_table_extra_columns_preserved():
    t = parse_attribute_table("id,start_node,end_node,weight,class,lanes\na,n1,n2,1,A,2\n")
    assert t.rows[0].extra == {"class": "A", "lanes": "2"}


@pytest.mark.parametrize(
    "text, needle",
    [
        ("id,start_node,end_node,weight\na,n1,n2,1\na,n2,n3,1\n", "duplicate"),
        ("id,start_node,weight\na,n1,1\n", "header"),
        ("id,start_node,end_node,weight\na,n1,n2,x\n", "not an integer"),
        ("id,start_node,end_node,weight\na,n1,,1\n", "empty field"),
        ("id,start_node,end_node,weight\na,n1,n2\n", "number of fields"),
    ],
)
def test_table_rejections(text, needle):
    with pytest.raises(DataError, match=needle):
        parse_attribute_table(text)


def test_cross_check():
    net = build_network([line("a", [(0, 0), (1, 0)], 1), line("b", [(1, 0), (2, 0)], 2)])
    good = parse_attribute_table("id,start_node,end_node,weight\na,X,Y,1\nb,Y,Z,2\n")
    assert cross_check_table(good, net) == []
    bad = parse_attribute_table("id,start_node,end_node,weight\na,X,Y,1\nb,W,Z,3\nc,Q,R,1\n")
    problems = cross_check_table(bad, net)
    assert any("only present in the table" in p for p in problems)
    assert any("weight 3" in p for p in problems)
    assert any("does not match" in p for p in problems)


def test_empty_report():
    doc = json.loads(emit_report([]))
    assert doc["errors"] == [] and set(doc["summary"].values()) == {0}
    assert set(doc["summary"]) == {"rule1", "rule2", "rule3", "no_flow", "self_intersection", "near_node"}


def test_geojson_report_feature_per_error():
    net = build_network([line("a", [(0, 0), (1, 0)], 1)])
    e = ValidationError("rule1", ("a",), ("n0", "n1"), 0, "both ends")
    doc = json.loads(emit_report([e], "geojson", network=net))
    (f,) = doc["features"]
    assert f["properties"]["kind"] == "rule1"
    assert f["geometry"] == {"type": "LineString", "coordinates": [[0.0, 0.0], [1.0, 0.0]]}


def test_report_is_byte_stable_and_sorted():
    gen = generate_network(60, 4, 2, inject_rule1=0.05, inject_rule2=0.05, inject_rule3=0.05)
    net = build_network(gen.features, gen.cfg)
    errs = detect_spatialjoin(net, gen.cfg)
    a = emit_report(list(reversed(errs)), provenance={"x": 1})
    b = emit_report(errs, provenance={"x": 1})
    assert a == b
    doc = json.loads(a)
    keys = [(d["kind"], d["feature_ids"]) for d in doc["errors"]]
    assert keys == sorted(keys)
    assert summarize(errs) == doc["summary"]
    assert sum(doc["summary"].values()) == len(doc["errors"])
    assert load_report(a) == sorted(errs)


def test_round_trip_generated_network():
    gen = generate_network(200, 5, 3, inject_rule1=0.02)
    back = parse_geojson(serialize_geojson(gen.features))
    assert [(f.id, f.weight) for f in back] == [(f.id, f.weight) for f in gen.features]
    for f, g in zip(back, gen.features):
        assert [grid_key(v) for v in f.vertices] == [grid_key(v) for v in g.vertices]


def test_input_hash():
    assert input_hash(b"abc") == input_hash("abc")
    assert input_hash(b"abc").startswith("sha256:")
    assert input_hash(b"abc") != input_hash(b"abd")


def test_unknown_report_format():
    with pytest.raises(ValueError):
        emit_report([], "xml")
