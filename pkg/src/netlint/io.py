"""Dataset ingestion and error-report emission."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from typing import Iterable, Optional, Union

from netlint.detectors import KINDS, AttributeTable, TableRow, ValidationError
from netlint.errors import DataError
from netlint.geometry import LineFeature, Vertex
from netlint.network import Network

TABLE_FIELDS = ("id", "start_node", "end_node", "weight")

Source = Union[bytes, str]


def _text(data: Source) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise DataError(f"input is not UTF-8: {exc}") from None
    return data


def input_hash(data: Source) -> str:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _strict_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise DataError(f"{what} must be an integer, got {value!r}")
    return value


def _coord(pos, where: str) -> Vertex:
    if not isinstance(pos, list) or len(pos) != 2:
        raise DataError(f"{where}: position must be [x, y], got {pos!r}")
    x, y = pos
    for c in (x, y):
        if isinstance(c, bool) or not isinstance(c, (int, float)):
            raise DataError(f"{where}: coordinate {c!r} is not a number")
    return Vertex(float(x), float(y))


def parse_geojson(data: Source) -> list[LineFeature]:
    """Strictly parse a FeatureCollection of LineStrings into line features.

    Properties: integer ``weight`` (required), integer ``direction`` in
    {-1, 0, 1} (default 1), string ``id`` (default ``f<index>``). Other
    properties are kept as opaque attributes.
    """
    text = _text(data)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise DataError("top level must be a GeoJSON FeatureCollection")
    feats = doc.get("features")
    if not isinstance(feats, list):
        raise DataError("FeatureCollection has no 'features' array")

    out = []
    ids = set()
    for i, feat in enumerate(feats):
        where = f"feature #{i}"
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise DataError(f"{where}: not a GeoJSON Feature")
        props = feat.get("properties") or {}
        if not isinstance(props, dict):
            raise DataError(f"{where}: properties must be an object")
        fid = props.get("id", feat.get("id"))
        if fid is None:
            fid = f"f{i}"
        elif isinstance(fid, bool) or not isinstance(fid, (str, int)):
            raise DataError(f"{where}: id must be a string, got {fid!r}")
        fid = str(fid)
        where = f"feature #{i} (id {fid!r})"
        if fid in ids:
            raise DataError(f"{where}: duplicate id")
        ids.add(fid)

        geom = feat.get("geometry")
        if not isinstance(geom, dict):
            raise DataError(f"{where}: missing geometry")
        if geom.get("type") != "LineString":
            raise DataError(f"{where}: geometry type {geom.get('type')!r} is not LineString")
        coords = geom.get("coordinates")
        if not isinstance(coords, list) or len(coords) < 2:
            raise DataError(f"{where}: a LineString needs at least 2 positions")
        verts = tuple(_coord(p, where) for p in coords)

        if "weight" not in props:
            raise DataError(f"{where}: missing 'weight' property")
        weight = _strict_int(props["weight"], f"{where}: weight")
        direction = _strict_int(props.get("direction", 1), f"{where}: direction")
        extra = {k: v for k, v in props.items() if k not in ("id", "weight", "direction")}
        try:
            out.append(LineFeature(fid, verts, weight, direction, extra))
        except DataError as exc:
            raise DataError(f"{where}: {exc}") from None
    return out


def features_to_geojson(features: Iterable[LineFeature]) -> dict:
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "properties": {"id": f.id, "weight": f.weight, "direction": f.direction_code, **f.attributes},
                "geometry": {"type": "LineString", "coordinates": [[v.x, v.y] for v in f.vertices]},
            }
            for f in features
        ],
    }


def serialize_geojson(features: Iterable[LineFeature]) -> bytes:
    return (json.dumps(features_to_geojson(features), indent=1, sort_keys=True) + "\n").encode()


def parse_attribute_table(data: Source) -> AttributeTable:
    text = _text(data)
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [f for f in TABLE_FIELDS if f not in header]
    if missing:
        raise DataError(f"attribute table header lacks {missing}; expected {','.join(TABLE_FIELDS)}")
    rows = []
    seen = set()
    for line_no, rec in enumerate(reader, start=2):
        if None in rec or any(rec[f] is None for f in header):
            raise DataError(f"table line {line_no}: wrong number of fields")
        vals = {f: rec[f].strip() for f in TABLE_FIELDS}
        for f in TABLE_FIELDS:
            if not vals[f]:
                raise DataError(f"table line {line_no}: empty field {f!r}")
        try:
            weight = int(vals["weight"])
        except ValueError:
            raise DataError(f"table line {line_no}: weight {vals['weight']!r} is not an integer") from None
        if vals["id"] in seen:
            raise DataError(f"table line {line_no}: duplicate id {vals['id']!r}")
        seen.add(vals["id"])
        extra = {f: rec[f] for f in header if f not in TABLE_FIELDS}
        rows.append(TableRow(vals["id"], vals["start_node"], vals["end_node"], weight, extra))
    return AttributeTable(rows)


def cross_check_table(table: AttributeTable, net: Network) -> list[str]:
    """Disagreements between a supplied attribute table and the geometric node assignment."""
    problems = []
    by_id = {r.id: r for r in table.rows}
    for fid in sorted(set(by_id) ^ set(net.features)):
        side = "table" if fid in by_id else "geometry"
        problems.append(f"feature {fid!r} only present in the {side}")
    # Node ids are arbitrary labels on each side; require a bijection.
    t2g: dict[str, str] = {}
    g2t: dict[str, str] = {}
    for fid in sorted(set(by_id) & set(net.features)):
        r = by_id[fid]
        if r.weight != net.features[fid].weight:
            problems.append(f"feature {fid!r}: table weight {r.weight} != geometry weight {net.features[fid].weight}")
        for tnode, gnode in zip((r.start_node, r.end_node), net.ends[fid]):
            if t2g.setdefault(tnode, gnode) != gnode or g2t.setdefault(gnode, tnode) != tnode:
                problems.append(f"feature {fid!r}: table node {tnode!r} does not match geometric node {gnode}")
    return problems


def sort_errors(errors: Iterable[ValidationError]) -> list[ValidationError]:
    return sorted(errors, key=lambda e: (e.kind, e.feature_ids, e.nodes, e.detail))


def summarize(errors: Iterable[ValidationError]) -> dict[str, int]:
    counts = Counter(e.kind for e in errors)
    return {k: counts.get(k, 0) for k in KINDS}


def emit_report(
    errors: Iterable[ValidationError],
    format: str = "json",
    network: Optional[Network] = None,
    provenance: Optional[dict] = None,
) -> bytes:
    """Serialize findings. The output is byte-stable for identical inputs."""
    errs = sort_errors(errors)
    if format == "json":
        doc = {
            "summary": summarize(errs),
            "errors": [e.to_dict() for e in errs],
            "provenance": provenance or {},
        }
    elif format == "geojson":
        doc = {"type": "FeatureCollection", "features": [_error_feature(e, network) for e in errs]}
    else:
        raise ValueError(f"unknown report format {format!r}")
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def _error_feature(e: ValidationError, net: Optional[Network]) -> dict:
    geom = None
    if net is not None:
        if e.kind in ("no_flow", "near_node"):
            pts = [[net.node_coord(n).x, net.node_coord(n).y] for n in e.nodes]
            geom = {"type": "Point", "coordinates": pts[0]} if len(pts) == 1 else {"type": "MultiPoint", "coordinates": pts}
        elif e.feature_ids[0] in net.features:
            f = net.features[e.feature_ids[0]]
            geom = {"type": "LineString", "coordinates": [[v.x, v.y] for v in f.vertices]}
    props = e.to_dict()
    return {"type": "Feature", "properties": props, "geometry": geom}


def load_report(data: Source) -> list[ValidationError]:
    doc = json.loads(_text(data))
    return [
        ValidationError(
            d["kind"], tuple(d["feature_ids"]), tuple(d.get("nodes", ())), d.get("component"), d.get("detail", "")
        )
        for d in doc["errors"]
    ]
