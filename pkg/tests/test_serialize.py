import json
from decimal import Decimal
from pathlib import Path

import pytest

from cpo.errors import FormatError
from cpo.golden import all_fixtures, warranted
from cpo.graph import KGraph, validate_wellformed
from cpo.reasoner import annotate, classify
from cpo.serialize import dumps, from_document, from_triples, loads, to_document, to_triples

DATA = Path(__file__).parent / "data"


def _plain_facts(g: KGraph) -> set:
    """Assertions without attributes, for comparison modulo reification."""
    return {(a.kind, a.subject, a.predicate, repr(a.object), a.provenance) for a in g.assertions}


@pytest.mark.parametrize("fx", all_fixtures(), ids=lambda f: f.name)
def test_canonical_round_trip_is_byte_identical(fx):
    text = dumps(fx.graph)
    assert dumps(loads(text)) == text
    assert text == (DATA / f"{fx.name}.json").read_text()


@pytest.mark.parametrize("fx", all_fixtures(), ids=lambda f: f.name)
def test_triples_reimport_is_isomorphic(fx):
    back = from_triples(to_triples(fx.graph))
    assert _plain_facts(back) == _plain_facts(fx.graph)
    assert dumps(back) == dumps(fx.graph)


def test_triples_golden():
    assert to_triples(warranted().graph) == (DATA / "fig5_rtw.nt").read_text()


def test_derived_provenance_survives_both_formats():
    fx = warranted()
    annotated = annotate(fx.graph, classify(fx.graph, fx.vetting, fx.marks))
    text = dumps(annotated)
    doc = json.loads(text)
    nodes = {n["id"]: n for n in doc["nodes"]}
    assert nodes["cr"]["derived_classes"] == ["RepresentationThatIsBelieved", "RepresentationThatIsWarranted"]
    assert nodes["p"]["derived_classes"] == ["ProcessOfProperCognitiveFunctioning"]
    assert dumps(loads(text)) == text
    assert dumps(from_triples(to_triples(annotated))) == text


def test_awkward_identifiers_and_literals():
    g = KGraph()
    g.add_node("odd id/ä <x>", ["InformationBearingEntity"])
    g.add_data("odd id/ä <x>", "has_nominal_value", 'quote " and \\ backslash\nnewline')
    g.add_data("odd id/ä <x>", "has_boolean_value", True)
    g.add_data("odd id/ä <x>", "has_decimal_value", "-0.000100")
    back = from_triples(to_triples(g))
    assert dumps(back) == dumps(g)
    assert back.values("odd id/ä <x>", "has_decimal_value") == [Decimal("-0.0001")]
    assert dumps(loads(dumps(g))) == dumps(g)


def test_document_meta_and_version():
    doc = to_document(KGraph())
    assert doc["meta"]["format_version"] == "1"
    with pytest.raises(FormatError):
        from_document({"meta": {"format_version": "2"}, "nodes": []})
    with pytest.raises(FormatError):
        from_triples("<a> <b>\n")


def test_malformed_input_loads_leniently_for_reporting():
    doc = {
        "meta": {"format_version": "1"},
        "nodes": [{"id": "r", "classes": ["InformationBearingEntity"]}],
        "edges": [],
        "data": [{"s": "r", "rel": "has_decimal_value", "value": "abc"}],
    }
    g = from_document(doc)
    assert [v.rule for v in validate_wellformed(g)] == ["literal-kind"]
