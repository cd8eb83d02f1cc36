import pytest

from cpo.errors import MissingClassificationError
from cpo.golden import add_measurement, believed, measurement, mere_guess, notebook, rtw_without_ppcf, warranted
from cpo.graph import KGraph
from cpo.reasoner import classify
from cpo.shapes import SHAPES, ShapeId, check_all, check_shape, reports_conform


def _classified(fx):
    return classify(fx.graph, fx.vetting, fx.marks)


def test_notebook_carries_content():
    r = check_shape(notebook().graph, ShapeId.INFORMATION_CARRIER, "quote")
    assert r.conforms and r.missing == ()


def test_measurement_triangle():
    r = check_shape(measurement().graph, ShapeId.MEASUREMENT, "coffee")
    assert r.conforms


def test_believed_conforms_to_rtb_shape():
    fx = believed()
    assert check_shape(fx.graph, ShapeId.RTB, "cr").conforms


def test_warranted_conforms_to_rtw_shape():
    fx = warranted()
    assert check_shape(fx.graph, ShapeId.RTW, "cr", _classified(fx)).conforms
    assert reports_conform(check_all(fx.graph, _classified(fx)))


@pytest.mark.parametrize("shape", list(ShapeId))
def test_empty_graph_misses_everything(shape):
    r = check_shape(KGraph(), shape, "nothing", _classified(believed()))
    assert r.status == "violates"
    assert r.missing == tuple(req.name for req in SHAPES[shape].requirements)


def test_removing_has_output_breaks_only_the_ppcf_template():
    fx = warranted()
    g = KGraph()
    for a in fx.graph.assertions:
        if not (a.predicate == "has_output" and a.object == "cr"):
            g._add(a)
    r = check_shape(g, ShapeId.RTW, "cr", classify(g, fx.vetting, fx.marks))
    assert r.missing == ("output-of-ppcf",)


def test_rtw_asserted_without_ppcf_is_reported():
    fx = rtw_without_ppcf()
    reports = check_all(fx.graph, _classified(fx))
    bad = [r for r in reports if not r.conforms]
    assert [(r.shape, r.focus, r.missing) for r in bad] == [(ShapeId.RTW, "cr", ("output-of-ppcf",))]
    # no classification at all behaves the same for asserted RTW members
    assert [r.missing for r in check_all(fx.graph) if not r.conforms] == [("output-of-ppcf",)]


def test_mere_guess_is_rtb_but_not_rtw_focus():
    fx = mere_guess()
    reports = check_all(fx.graph, _classified(fx))
    assert {(r.shape, r.focus) for r in reports if r.shape in (ShapeId.RTB, ShapeId.RTW)} == {(ShapeId.RTB, "cr")}
    assert reports_conform(reports)


def test_rtw_shape_needs_classification():
    with pytest.raises(MissingClassificationError):
        check_shape(warranted().graph, ShapeId.RTW, "cr")


def test_no_representations_no_reports():
    reports = check_all(notebook().graph)
    assert not [r for r in reports if r.shape in (ShapeId.RTB, ShapeId.RTW)]


def test_two_measurements_two_reports():
    g = measurement().graph
    g.add_node("tea", ["Object"])
    add_measurement(g, "tea_temperature", "tea", "65")
    reports = [r for r in check_all(g) if r.shape is ShapeId.MEASUREMENT]
    assert [(r.focus, r.conforms) for r in reports] == [("coffee", True), ("tea", True)]


def test_measurement_without_value_names_template():
    g = KGraph()
    g.add_node("coffee", ["Object"])
    g.add_node("m", ["MeasurementInformationContentEntity"])
    g.add_node("r", ["InformationBearingEntity"])
    g.add_edge("m", "describes", "coffee")
    g.add_edge("m", "generically_depends_on", "r")
    assert check_shape(g, ShapeId.MEASUREMENT, "coffee").missing == ("measurement-value",)


def test_report_dict():
    r = check_shape(KGraph(), ShapeId.MEASUREMENT, "x")
    assert r.to_dict() == {
        "shape": "MeasurementShape",
        "focus": "x",
        "status": "violates",
        "missing": ["measured-by", "measurement-carrier", "measurement-value"],
    }
