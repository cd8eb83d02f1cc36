"""Declarative graph shapes and the checker that applies them.

A shape is a list of named requirements. Each requirement is a conjunctive
pattern anchored on the variable ``?focus`` and may additionally require a
bound variable to be a member of one of the reasoner's derived sets. A
focus conforms when every requirement has at least one match; the report
lists unmatched requirements in declaration order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Sequence

from .errors import MissingClassificationError
from .graph import HAS_VALUE, INSTANCE_OF, KGraph, match
from .reasoner import RTB, RTW, ClassificationResult

FOCUS = "?focus"


class ShapeId(str, enum.Enum):
    INFORMATION_CARRIER = "InformationCarrierShape"
    MEASUREMENT = "MeasurementShape"
    RTB = "RTBShape"
    RTW = "RTWShape"


@dataclass(frozen=True)
class Requirement:
    name: str
    description: str
    pattern: tuple[tuple[Any, ...], ...]
    # (variable, result set name) pairs, e.g. ("?p", "ppcf")
    derived: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Shape:
    id: ShapeId
    requirements: tuple[Requirement, ...]

    @property
    def needs_classification(self) -> bool:
        return any(r.derived for r in self.requirements)


@dataclass(frozen=True)
class ShapeReport:
    shape: ShapeId
    focus: str
    status: str  # "conforms" | "violates"
    missing: tuple[str, ...] = ()

    @property
    def conforms(self) -> bool:
        return self.status == "conforms"

    def to_dict(self) -> dict[str, Any]:
        return {"shape": self.shape.value, "focus": self.focus, "status": self.status, "missing": list(self.missing)}


_CARRIED = (
    (FOCUS, "generically_depends_on", "?ibe"),
    ("?ibe", INSTANCE_OF, "InformationBearingEntity"),
)

_MEASURED = (
    ("?mice", INSTANCE_OF, "MeasurementInformationContentEntity"),
    ("?mice", "describes", FOCUS),
)

_CONFIDENCE = (
    (FOCUS, "fused_with", "?cv"),
    ("?cv", INSTANCE_OF, "ConfidenceValue"),
)

_RTB_REQUIREMENTS = (
    Requirement(
        "cognitive-representation",
        "?focus instance_of CognitiveRepresentation",
        ((FOCUS, INSTANCE_OF, "CognitiveRepresentation"),),
    ),
    Requirement("fused-confidence", "?focus fused_with ?cv, ?cv instance_of ConfidenceValue", _CONFIDENCE),
    Requirement(
        "confidence-measured",
        "?mice describes ?cv, ?mice generically_depends_on ?ibe, ?ibe has_decimal_value ?v",
        _CONFIDENCE
        + (
            ("?mice", INSTANCE_OF, "MeasurementInformationContentEntity"),
            ("?mice", "describes", "?cv"),
            ("?mice", "generically_depends_on", "?ibe"),
            ("?ibe", INSTANCE_OF, "InformationBearingEntity"),
            ("?ibe", "has_decimal_value", "?v"),
        ),
    ),
    Requirement(
        "content-externalized",
        "?focus concretizes ?ice, ?ice generically_depends_on ?ibe, ?ibe has_value ?literal",
        (
            (FOCUS, "concretizes", "?ice"),
            ("?ice", "generically_depends_on", "?ibe"),
            ("?ibe", INSTANCE_OF, "InformationBearingEntity"),
            ("?ibe", HAS_VALUE, "?literal"),
        ),
    ),
)

SHAPES: dict[ShapeId, Shape] = {
    ShapeId.INFORMATION_CARRIER: Shape(
        ShapeId.INFORMATION_CARRIER,
        (
            Requirement(
                "information-content",
                "?focus instance_of InformationContentEntity",
                ((FOCUS, INSTANCE_OF, "InformationContentEntity"),),
            ),
            Requirement("carrier", "?focus generically_depends_on ?ibe (InformationBearingEntity)", _CARRIED),
            Requirement("carrier-value", "?ibe has_value ?literal", _CARRIED + (("?ibe", HAS_VALUE, "?v"),)),
        ),
    ),
    ShapeId.MEASUREMENT: Shape(
        ShapeId.MEASUREMENT,
        (
            Requirement("measured-by", "?mice (MICE) describes ?focus", _MEASURED),
            Requirement(
                "measurement-carrier",
                "?mice generically_depends_on ?ibe (InformationBearingEntity)",
                _MEASURED + (("?mice", "generically_depends_on", "?ibe"), ("?ibe", INSTANCE_OF, "InformationBearingEntity")),
            ),
            Requirement(
                "measurement-value",
                "?ibe has_value ?literal",
                _MEASURED
                + (
                    ("?mice", "generically_depends_on", "?ibe"),
                    ("?ibe", INSTANCE_OF, "InformationBearingEntity"),
                    ("?ibe", HAS_VALUE, "?v"),
                ),
            ),
        ),
    ),
    ShapeId.RTB: Shape(ShapeId.RTB, _RTB_REQUIREMENTS),
    ShapeId.RTW: Shape(
        ShapeId.RTW,
        _RTB_REQUIREMENTS
        + (
            Requirement(
                "output-of-ppcf",
                "?p has_output ?focus, ?p instance_of CognitiveProcess, ?p classified PPCF",
                (("?p", "has_output", FOCUS), ("?p", INSTANCE_OF, "CognitiveProcess")),
                (("?p", "ppcf"),),
            ),
        ),
    ),
}


def _satisfied(
    graph: KGraph, req: Requirement, focus: str, classification: ClassificationResult | None
) -> bool:
    pattern = [tuple(focus if term == FOCUS else term for term in t) for t in req.pattern]
    for binding in match(graph, pattern):
        if all(binding.get(var) in getattr(classification, name) for var, name in req.derived):
            return True
    return False


def check_shape(
    graph: KGraph,
    shape: ShapeId | str,
    focus: str,
    classification: ClassificationResult | None = None,
) -> ShapeReport:
    spec = SHAPES[ShapeId(shape)]
    if spec.needs_classification and classification is None:
        raise MissingClassificationError(f"{spec.id.value} needs a classification result")
    if focus in graph:
        missing = tuple(r.name for r in spec.requirements if not _satisfied(graph, r, focus, classification))
    else:
        missing = tuple(r.name for r in spec.requirements)
    return ShapeReport(spec.id, focus, "violates" if missing else "conforms", missing)


def candidate_foci(
    graph: KGraph, shape: ShapeId, classification: ClassificationResult | None = None
) -> list[str]:
    if shape is ShapeId.INFORMATION_CARRIER:
        return graph.instances("InformationContentEntity")
    if shape is ShapeId.MEASUREMENT:
        return sorted(
            {
                e
                for m in graph.instances("MeasurementInformationContentEntity")
                for e in graph.objects(m, "describes")
            }
        )
    cls, derived = (RTB, "rtb") if shape is ShapeId.RTB else (RTW, "rtw")
    foci = set(graph.instances(cls))
    if classification is not None:
        foci |= set(getattr(classification, derived))
    return sorted(foci)


def check_all(graph: KGraph, classification: ClassificationResult | None = None) -> list[ShapeReport]:
    """One report per applicable (shape, focus) pair, in shape then focus order.

    Without a classification every RTW focus is checked against an empty
    result, so asserted RTW memberships are reported as lacking a PPCF.
    """
    effective = classification or _EMPTY
    reports = []
    for shape in ShapeId:
        for focus in candidate_foci(graph, shape, classification):
            reports.append(check_shape(graph, shape, focus, effective))
    return reports


_EMPTY = ClassificationResult(frozenset(), frozenset(), frozenset(), frozenset(), {})


def reports_conform(reports: Sequence[ShapeReport]) -> bool:
    return all(r.conforms for r in reports)
