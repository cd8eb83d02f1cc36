"""Built-in class taxonomy and relation vocabulary.

The vocabulary is a small upper-level core (continuants, occurrents,
qualities, information entities) extended with the cognitive-process
classes: mental and cognitive representations, confidence values and the
three defined classes RTB, RTW and PPCF whose membership is computed by
:mod:`cpo.reasoner` rather than trusted from input.

The taxonomy is closed and immutable. ``load_builtin_taxonomy()`` always
returns the same object.
"""

from __future__ import annotations

import enum
import functools
import graphlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import UnknownClassError, UnknownRelationError

TAXONOMY_FORMAT_VERSION = "1"

ROOT = "Entity"


class LiteralKind(str, enum.Enum):
    BOOLEAN = "boolean"
    NOMINAL = "nominal"
    DECIMAL = "decimal"


@dataclass(frozen=True)
class ClassDef:
    id: str
    label: str
    definition: str = ""
    defined: bool = False
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class RelationSig:
    id: str
    domain: str
    range: str | LiteralKind
    symmetric: bool = False
    # attribute name -> allowed values; every listed attribute is required
    attributes: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @property
    def is_data(self) -> bool:
        return isinstance(self.range, LiteralKind)


# (id, label, parents, definition, aliases)
_CLASSES: list[tuple[str, str, tuple[str, ...], str, tuple[str, ...]]] = [
    ("Entity", "Entity", (), "", ("Portion of Reality",)),
    ("Continuant", "Continuant", ("Entity",), "", ()),
    ("Occurrent", "Occurrent", ("Entity",), "", ()),
    ("IndependentContinuant", "Independent Continuant", ("Continuant",), "", ()),
    (
        "SpecificallyDependentContinuant",
        "Specifically Dependent Continuant",
        ("Continuant",),
        "",
        ("SDC",),
    ),
    (
        "GenericallyDependentContinuant",
        "Generically Dependent Continuant",
        ("Continuant",),
        "",
        ("GDC",),
    ),
    ("MaterialEntity", "Material Entity", ("IndependentContinuant",), "", ()),
    ("Object", "Object", ("MaterialEntity",), "", ()),
    (
        "System",
        "System",
        ("MaterialEntity",),
        "Material entity including as parts multiple objects that are causally integrated",
        (),
    ),
    (
        "CognitiveSystem",
        "Cognitive System",
        ("System",),
        "System which realizes cognitive dispositions, all of whose parts are also parts "
        "of a single organism",
        (),
    ),
    (
        "InformationBearingEntity",
        "Information Bearing Entity",
        ("Object",),
        "Object upon which an Information Content Entity generically depends",
        ("IBE",),
    ),
    ("Quality", "Quality", ("SpecificallyDependentContinuant",), "", ()),
    ("Disposition", "Disposition", ("SpecificallyDependentContinuant",), "", ()),
    (
        "MentalQuality",
        "Mental Quality",
        ("Quality",),
        "Quality which specifically depends on an anatomical structure in the cognitive "
        "system of an organism",
        (),
    ),
    (
        "ConfidenceValue",
        "Confidence Value",
        ("MentalQuality",),
        "Mental Quality that, when fused with a Cognitive Representation CR, determines "
        "the extent to which a Cognitive System operates as if CR is veridical",
        (),
    ),
    (
        "Representation",
        "Representation",
        ("Quality",),
        "Quality which concretizes some Information Content Entity",
        (),
    ),
    (
        "MentalRepresentation",
        "Mental Representation",
        ("Representation", "MentalQuality"),
        "Representation which is a Mental Quality",
        (),
    ),
    (
        "CognitiveRepresentation",
        "Cognitive Representation",
        ("MentalRepresentation",),
        "Mental Representation that has a mind-to-world direction of fit",
        (),
    ),
    (
        "RepresentationThatIsBelieved",
        "Representation that is Believed",
        ("CognitiveRepresentation",),
        "Cognitive Representation that is fused with a positive Confidence Value",
        ("RTB",),
    ),
    (
        "RepresentationThatIsWarranted",
        "Representation that is Warranted",
        ("RepresentationThatIsBelieved",),
        "Representation that is Believed formed through Proper Cognitive Functioning in "
        "its vetted- or designed-for environment",
        ("RTW",),
    ),
    (
        "InformationContentEntity",
        "Information Content Entity",
        ("GenericallyDependentContinuant",),
        "",
        ("ICE",),
    ),
    (
        "DescriptiveInformationContentEntity",
        "Descriptive Information Content Entity",
        ("InformationContentEntity",),
        "",
        ("Descriptive ICE",),
    ),
    (
        "MeasurementInformationContentEntity",
        "Measurement Information Content Entity",
        ("DescriptiveInformationContentEntity",),
        "Descriptive Information Content Entity that describes the extent, dimensions, "
        "quantity, or quality of an Entity relative to some standard",
        ("MICE",),
    ),
    ("Process", "Process", ("Occurrent",), "", ()),
    ("MentalProcess", "Mental Process", ("Process",), "", ()),
    (
        "CognitiveProcess",
        "Cognitive Process",
        ("MentalProcess",),
        "Mental Process that creates, modifies or has as participant some cognitive "
        "representation",
        (),
    ),
    (
        "InvestigativeProcess",
        "Investigative Process",
        ("CognitiveProcess",),
        "Cognitive Process whose agent intends to establish or confirm that some portion "
        "of reality exists or does not exist",
        (),
    ),
    (
        "ProcessOfProperCognitiveFunctioning",
        "Process of Proper Cognitive Functioning",
        ("CognitiveProcess",),
        "Cognitive Process that has been successfully vetted or designed to reliably form "
        "veridical Cognitive Representations in environments of given types that include "
        "the environment in which the Cognitive Process is occurring",
        ("PPCF",),
    ),
    (
        "Indicator",
        "Indicator",
        ("Entity",),
        "Portion of Reality that, if it is known to exist, affects our estimation that "
        "some other portion of reality exists",
        (),
    ),
]

DEFINED_CLASSES = frozenset(
    {
        "RepresentationThatIsBelieved",
        "RepresentationThatIsWarranted",
        "ProcessOfProperCognitiveFunctioning",
    }
)

CONCRETIZATION_MODES = frozenset({"original", "derived"})

_RELATIONS: list[RelationSig] = [
    RelationSig("inheres_in", "SpecificallyDependentContinuant", "IndependentContinuant"),
    RelationSig(
        "concretizes",
        "Quality",
        "InformationContentEntity",
        attributes={"mode": CONCRETIZATION_MODES},
    ),
    RelationSig("generically_depends_on", "InformationContentEntity", "InformationBearingEntity"),
    RelationSig("is_about", "InformationContentEntity", "Entity"),
    RelationSig("describes", "DescriptiveInformationContentEntity", "Entity"),
    RelationSig("fused_with", "Quality", "Quality", symmetric=True),
    RelationSig("has_input", "Process", "Entity"),
    RelationSig("has_output", "Process", "Entity"),
    RelationSig("has_participant", "Process", "Entity"),
    RelationSig("has_agent", "Process", "CognitiveSystem"),
    RelationSig("occurs_in_environment", "Process", LiteralKind.NOMINAL),
    RelationSig("realizes", "Process", "Disposition"),
    RelationSig("has_boolean_value", "InformationBearingEntity", LiteralKind.BOOLEAN),
    RelationSig("has_nominal_value", "InformationBearingEntity", LiteralKind.NOMINAL),
    RelationSig("has_decimal_value", "InformationBearingEntity", LiteralKind.DECIMAL),
    # bookkeeping properties written by the tagger and the reasoner
    RelationSig("system_annotation", "Entity", LiteralKind.NOMINAL),
    RelationSig("source_event", "Process", LiteralKind.NOMINAL),
    RelationSig("has_note", "Process", LiteralKind.NOMINAL),
]

VALUE_RELATIONS = ("has_boolean_value", "has_nominal_value", "has_decimal_value")


@dataclass(frozen=True)
class ClassTaxonomy:
    classes: Mapping[str, ClassDef]
    subclass_edges: frozenset[tuple[str, str]]
    relations: Mapping[str, RelationSig]
    _ancestors: Mapping[str, frozenset[str]] = field(repr=False, compare=False)
    _names: Mapping[str, str] = field(repr=False, compare=False)

    @classmethod
    def build(
        cls,
        classes: Iterable[ClassDef],
        subclass_edges: Iterable[tuple[str, str]],
        relations: Iterable[RelationSig],
    ) -> "ClassTaxonomy":
        class_map = {c.id: c for c in classes}
        edges = frozenset(subclass_edges)
        parents: dict[str, set[str]] = {c: set() for c in class_map}
        for child, parent in edges:
            if child not in class_map:
                raise UnknownClassError(child)
            if parent not in class_map:
                raise UnknownClassError(parent)
            parents[child].add(parent)
        # static_order raises graphlib.CycleError on a cyclic hierarchy
        order = list(graphlib.TopologicalSorter(parents).static_order())
        ancestors: dict[str, frozenset[str]] = {}
        for c in order:
            acc = {c}
            for p in parents[c]:
                acc |= ancestors[p]
            ancestors[c] = frozenset(acc)
        names: dict[str, str] = {}
        for c in class_map.values():
            for name in (c.id, c.label, *c.aliases):
                names[name] = c.id
        rel_map = {r.id: r for r in relations}
        for r in rel_map.values():
            for end in (r.domain, r.range):
                if not isinstance(end, LiteralKind) and end not in class_map:
                    raise UnknownClassError(end)
        return cls(
            classes=MappingProxyType(class_map),
            subclass_edges=edges,
            relations=MappingProxyType(rel_map),
            _ancestors=MappingProxyType(ancestors),
            _names=MappingProxyType(names),
        )

    def __contains__(self, class_id: object) -> bool:
        return class_id in self.classes

    def resolve(self, name: str) -> str:
        """Map a class id, label or alias (``"RTW"``) to its class id."""
        try:
            return self._names[name]
        except KeyError:
            raise UnknownClassError(name) from None

    def parents(self, class_id: str) -> frozenset[str]:
        self._check(class_id)
        return frozenset(p for c, p in self.subclass_edges if c == class_id)

    def roots(self) -> list[str]:
        with_parent = {c for c, _ in self.subclass_edges}
        return sorted(c for c in self.classes if c not in with_parent)

    def ancestors(self, class_id: str) -> frozenset[str]:
        """Reflexive-transitive superclasses of ``class_id``."""
        self._check(class_id)
        return self._ancestors[class_id]

    @property
    def closure(self) -> Mapping[str, frozenset[str]]:
        """Class id -> reflexive-transitive superclasses, for hot loops."""
        return self._ancestors

    def descendants(self, class_id: str) -> frozenset[str]:
        self._check(class_id)
        return frozenset(c for c, anc in self._ancestors.items() if class_id in anc)

    def is_subclass_of(self, a: str, b: str) -> bool:
        self._check(a)
        self._check(b)
        return b in self._ancestors[a]

    def relation_signature(self, rel: str) -> RelationSig:
        try:
            return self.relations[rel]
        except KeyError:
            raise UnknownRelationError(rel) from None

    def is_defined(self, class_id: str) -> bool:
        self._check(class_id)
        return class_id in DEFINED_CLASSES

    def export_text(self) -> str:
        """Sorted, tab-separated listing used for diffing and docs."""
        lines = [f"# cpo taxonomy format_version {TAXONOMY_FORMAT_VERSION}", "# classes"]
        for c in sorted(self.classes):
            ps = sorted(p for ch, p in self.subclass_edges if ch == c)
            if not ps:
                lines.append(c)
            lines.extend(f"{c}\t{p}" for p in ps)
        lines.append("# relations")
        for r in sorted(self.relations):
            sig = self.relations[r]
            rng = sig.range.value if isinstance(sig.range, LiteralKind) else sig.range
            lines.append(f"{r}\t{sig.domain}\t{rng}")
        return "\n".join(lines) + "\n"

    def _check(self, class_id: str) -> None:
        if class_id not in self.classes:
            raise UnknownClassError(class_id)


@functools.lru_cache(maxsize=None)
def load_builtin_taxonomy() -> ClassTaxonomy:
    classes = [
        ClassDef(cid, label, definition, cid in DEFINED_CLASSES, aliases)
        for cid, label, _, definition, aliases in _CLASSES
    ]
    edges = [(cid, p) for cid, _, parents, _, _ in _CLASSES for p in parents]
    return ClassTaxonomy.build(classes, edges, _RELATIONS)


def is_subclass_of(taxonomy: ClassTaxonomy, a: str, b: str) -> bool:
    return taxonomy.is_subclass_of(a, b)


def relation_signature(taxonomy: ClassTaxonomy, rel: str) -> RelationSig:
    return taxonomy.relation_signature(rel)
