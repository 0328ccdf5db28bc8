"""Validation of hierarchical networks of linear features."""

from netlint.detectors import (
    AttributeTable,
    ValidationError,
    detect_exhaustive,
    detect_near_nodes,
    detect_point_no_flow,
    detect_self_intersection,
    detect_spatialjoin,
    reduce_features,
)
from netlint.errors import ConfigError, DataError, NetlintError
from netlint.geometry import Edge, LineFeature, PointFeature, Vertex, line
from netlint.network import Network, RuleConfig, build_network, connected_components

__version__ = "0.1.0"
