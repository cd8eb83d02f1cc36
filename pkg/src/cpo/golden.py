"""Reference graphs for the notebook, measurement, belief, warrant and mere-guess patterns.

Each builder returns a fresh :class:`Fixture`; the CLI ``fixtures``
command writes them to disk as interchange files.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .graph import KGraph
from .reasoner import VeridicalityMark, VettingRecord

ENVIRONMENT = "harbor-surveillance"


@dataclass
class Fixture:
    name: str
    graph: KGraph
    vetting: list[VettingRecord] = field(default_factory=list)
    marks: list[VeridicalityMark] = field(default_factory=list)


def add_measurement(g: KGraph, prefix: str, target: str, value, rel: str = "has_decimal_value") -> None:
    """MICE describing ``target``, carried by an IBE holding ``value``."""
    g.add_node(f"{prefix}_mice", ["MeasurementInformationContentEntity"])
    g.add_node(f"{prefix}_reading", ["InformationBearingEntity"])
    g.add_edge(f"{prefix}_mice", "describes", target)
    g.add_edge(f"{prefix}_mice", "generically_depends_on", f"{prefix}_reading")
    g.add_data(f"{prefix}_reading", rel, value)


def notebook() -> Fixture:
    g = KGraph()
    g.add_node("notebook", ["InformationBearingEntity"])
    g.add_node("quote", ["InformationContentEntity"])
    g.add_node("ink_pattern", ["Quality"])
    g.add_edge("ink_pattern", "inheres_in", "notebook")
    g.add_edge("ink_pattern", "concretizes", "quote", {"mode": "derived"})
    g.add_edge("quote", "generically_depends_on", "notebook")
    g.add_data("notebook", "has_nominal_value", "Meet at pier 4 after the tide turns.")
    return Fixture("fig2_notebook", g)


def measurement() -> Fixture:
    g = KGraph()
    g.add_node("coffee", ["Object"])
    add_measurement(g, "temperature", "coffee", "71.5")
    return Fixture("fig3_measurement", g)


def _believed_representation(
    g: KGraph, confidence: str = "0.8", cr_classes: tuple[str, ...] = ("CognitiveRepresentation",)
) -> None:
    g.add_node("analyst_cs", ["CognitiveSystem"])
    g.add_node("cr", list(cr_classes))
    g.add_node("cr_content", ["DescriptiveInformationContentEntity"])
    g.add_node("cr_sentence", ["InformationBearingEntity"])
    g.add_node("cv", ["ConfidenceValue"])
    g.add_edge("cr", "inheres_in", "analyst_cs")
    g.add_edge("cr", "concretizes", "cr_content", {"mode": "original"})
    g.add_edge("cr_content", "generically_depends_on", "cr_sentence")
    g.add_data("cr_sentence", "has_nominal_value", "The freighter left the harbor on Monday.")
    g.add_edge("cv", "inheres_in", "analyst_cs")
    g.add_edge("cr", "fused_with", "cv")
    add_measurement(g, "confidence", "cv", confidence)


def _producing_process(g: KGraph, source_text: str) -> None:
    g.add_node("p", ["CognitiveProcess"])
    g.add_node("source", ["DescriptiveInformationContentEntity"])
    g.add_node("source_report", ["InformationBearingEntity"])
    g.add_edge("source", "generically_depends_on", "source_report")
    g.add_data("source_report", "has_nominal_value", source_text)
    g.add_edge("p", "has_input", "source")
    g.add_edge("p", "has_output", "cr")
    g.add_edge("p", "has_agent", "analyst_cs")
    g.add_data("p", "occurs_in_environment", ENVIRONMENT)


def believed(confidence: str = "0.8") -> Fixture:
    g = KGraph()
    _believed_representation(g, confidence)
    return Fixture("fig4_rtb", g)


def warranted() -> Fixture:
    g = KGraph()
    # the analyst tags cr as warranted; validation checks the tag against the derivation
    _believed_representation(g, cr_classes=("CognitiveRepresentation", "RepresentationThatIsWarranted"))
    _producing_process(g, "Port log: freighter departed 06:10 Monday.")
    vetting = [
        VettingRecord(
            "p",
            "vetted",
            frozenset({ENVIRONMENT}),
            requires_veridical_inputs=True,
        )
    ]
    marks = [VeridicalityMark("source", "veridical")]
    return Fixture("fig5_rtw", g, vetting, marks)


def mere_guess() -> Fixture:
    g = KGraph()
    _believed_representation(g)
    _producing_process(g, "Rumor: freighter departed Monday.")
    vetting = [
        VettingRecord(
            "p",
            "designed",
            frozenset({ENVIRONMENT}),
            requires_veridical_inputs=True,
        )
    ]
    marks = [VeridicalityMark("source", "not_veridical")]
    return Fixture("fig6_mere_guess", g, vetting, marks)


def rtw_without_ppcf() -> Fixture:
    """The warrant fixture with its vetting record removed."""
    return replace(warranted(), name="rtw_without_ppcf", vetting=[])


ALL = (notebook, measurement, believed, warranted, mere_guess, rtw_without_ppcf)


def all_fixtures() -> list[Fixture]:
    return [build() for build in ALL]
