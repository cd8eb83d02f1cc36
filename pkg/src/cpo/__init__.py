"""Cognitive process ontology toolkit.

Typed knowledge graphs over a small BFO-style taxonomy, shape checking,
belief and warrant classification of analyst representations, tagging of
workflow event logs, and outcome analytics over the tagged workflows.
"""

from .graph import KGraph, match, validate_wellformed
from .reasoner import (
    ClassificationResult,
    ConfidencePolicy,
    VeridicalityMark,
    VettingRecord,
    annotate,
    classify,
    explain,
)
from .shapes import ShapeId, check_all, check_shape
from .taxonomy import ClassTaxonomy, load_builtin_taxonomy

__version__ = "0.1.0"

__all__ = [
    "ClassTaxonomy",
    "ClassificationResult",
    "ConfidencePolicy",
    "KGraph",
    "ShapeId",
    "VeridicalityMark",
    "VettingRecord",
    "annotate",
    "check_all",
    "check_shape",
    "classify",
    "explain",
    "load_builtin_taxonomy",
    "match",
    "validate_wellformed",
]
