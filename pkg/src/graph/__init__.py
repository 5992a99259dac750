from src.graph.annotation_graph import AnnotationGraph, add_arc, add_node, id_sort_key, new_graph
from src.graph.isomorphism import canonical_signature, canonicalize, is_isomorphic
from src.graph.merge import merge_graphs
from src.graph.models import (
    DISFLUENCY_TYPE,
    POS_TYPE,
    TREEBANK_TYPE,
    WORD_TYPE,
    Arc,
    Node,
    TimeAnchor,
    Violation,
    ViolationKind,
    format_seconds,
    to_centiseconds,
)
from src.graph.queries import arc_extent, arcs_in_interval, arcs_intersecting, node_bracket, validate

__all__ = [
    "AnnotationGraph", "Arc", "Node", "TimeAnchor", "Violation", "ViolationKind",
    "WORD_TYPE", "POS_TYPE", "DISFLUENCY_TYPE", "TREEBANK_TYPE",
    "new_graph", "add_node", "add_arc", "validate", "arcs_in_interval", "arcs_intersecting",
    "merge_graphs", "node_bracket", "arc_extent", "is_isomorphic", "canonicalize",
    "canonical_signature", "id_sort_key", "format_seconds", "to_centiseconds",
]
