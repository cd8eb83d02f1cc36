import json
import subprocess
import sys

import pytest

from cpo.cli import EXIT_CODES, ExitCode, build_parser, run
from cpo.serialize import loads


@pytest.fixture(scope="module")
def fx(tmp_path_factory):
    d = tmp_path_factory.mktemp("fixtures")
    assert run(["fixtures", "--out-dir", str(d)]) == 0
    return d


def _inputs(fx, name):
    return [str(fx / f"{name}.graph.json"), "--vetting", str(fx / f"{name}.vetting.json"), "--marks", str(fx / f"{name}.marks.json")]


def test_exit_code_table_is_closed():
    assert [(c.name, int(c)) for c in ExitCode] == [("OK", 0), ("USAGE", 1), ("VIOLATIONS", 2), ("REASONER", 3)]


def test_validate_fig5_conforms(fx, capsys):
    assert run(["validate", *_inputs(fx, "fig5_rtw")]) == ExitCode.OK
    assert "violat" not in capsys.readouterr().out


def test_validate_rtw_without_ppcf_fails(fx, tmp_path, capsys):
    report = tmp_path / "r.json"
    code = run(["validate", *_inputs(fx, "rtw_without_ppcf"), "--report", str(report)])
    assert code == ExitCode.VIOLATIONS
    assert "output-of-ppcf" in capsys.readouterr().out
    doc = json.loads(report.read_text())
    bad = [s for s in doc["shapes"] if s["status"] != "conforms"]
    assert bad and any("output-of-ppcf" in m for s in bad for m in s["missing"])


def test_validate_malformed_graph(tmp_path):
    g = tmp_path / "bad.json"
    g.write_text(
        json.dumps(
            {
                "meta": {"format_version": "1"},
                "nodes": [{"id": "x", "classes": ["InformationContentEntity"]}, {"id": "y", "classes": []}],
                "edges": [{"s": "x", "rel": "has_agent", "o": "y"}],
            }
        )
    )
    report = tmp_path / "r.json"
    assert run(["validate", str(g), "--report", str(report)]) == ExitCode.VIOLATIONS
    rules = {v["rule"] for v in json.loads(report.read_text())["wellformed"]}
    assert {"untyped-node", "domain"} <= rules


def test_classify_fig6(fx, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["classify", *_inputs(fx, "fig6_mere_guess"), "-o", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "mere_guess = [cr]" in printed
    assert "rtw = []" in printed
    assert json.loads(out.read_text())["mere_guess"] == ["cr"]


def test_classify_threshold_flag(fx, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert run(["classify", *_inputs(fx, "fig4_rtb"), "--threshold", "0.8", "-o", str(out)]) == 0
    assert "rtb = []" in capsys.readouterr().out


def test_classify_annotate_out(fx, tmp_path):
    ann = tmp_path / "a.json"
    run(["classify", *_inputs(fx, "fig5_rtw"), "-o", str(tmp_path / "c.json"), "--annotate-out", str(ann)])
    g = loads(ann.read_text())
    assert g.is_a("cr", "RepresentationThatIsWarranted")


def test_dangling_vetting_reference_is_reasoner_error(fx, tmp_path):
    v = tmp_path / "v.json"
    doc = json.loads((fx / "fig5_rtw.vetting.json").read_text())
    doc["vetting"][0]["process"] = "ghost"
    v.write_text(json.dumps(doc))
    args = [str(fx / "fig5_rtw.graph.json"), "--vetting", str(v), "--marks", str(fx / "fig5_rtw.marks.json")]
    assert run(["classify", *args, "-o", str(tmp_path / "c.json")]) == ExitCode.REASONER
    assert run(["validate", *args]) == ExitCode.REASONER


def test_cycle_is_reasoner_error(tmp_path):
    from cpo.graph import KGraph
    from cpo.serialize import dumps

    g = KGraph()
    g.add_node("p1", ["CognitiveProcess"])
    g.add_node("p2", ["CognitiveProcess"])
    g.add_node("a", ["InformationContentEntity"])
    g.add_node("b", ["InformationContentEntity"])
    g.add_edge("p1", "has_output", "a")
    g.add_edge("p2", "has_input", "a")
    g.add_edge("p2", "has_output", "b")
    g.add_edge("p1", "has_input", "b")
    path = tmp_path / "cycle.json"
    path.write_text(dumps(g))
    empty = tmp_path / "empty.json"
    empty.write_text(json.dumps({"format_version": "1", "vetting": []}))
    marks = tmp_path / "marks.json"
    marks.write_text(json.dumps({"format_version": "1", "marks": []}))
    argv = ["classify", str(path), "--vetting", str(empty), "--marks", str(marks), "-o", str(tmp_path / "c.json")]
    assert run(argv) == ExitCode.REASONER
    # validate reports the same cycle as a well-formedness violation
    assert run(["validate", str(path)]) == ExitCode.VIOLATIONS


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["validate"],
        ["validate", "x.json", "--bogus"],
        ["classify", "x.json", "-o", "y.json"],
        ["export", "--format", "xml", "-o", "y"],
    ],
)
def test_usage_errors_exit_1(argv, capsys):
    assert run(argv) == ExitCode.USAGE
    assert "usage:" in capsys.readouterr().err


def test_missing_file_exit_1(tmp_path, capsys):
    assert run(["validate", str(tmp_path / "nope.json")]) == ExitCode.USAGE
    assert "cannot read" in capsys.readouterr().err


def test_bad_threshold_exit_1(fx, tmp_path):
    assert run(["classify", *_inputs(fx, "fig4_rtb"), "--threshold", "7", "-o", str(tmp_path / "c")]) == 1


def test_every_subcommand_help_lists_exit_codes(capsys):
    parser = build_parser()
    commands = parser._subparsers._group_actions[0].choices
    assert set(commands) == {"validate", "classify", "tag", "analyze", "gen", "export", "fixtures"}
    for name in [None, *commands]:
        assert run(([name] if name else []) + ["--help"]) == 0
        out = capsys.readouterr().out
        assert EXIT_CODES.strip() in out, name


def _pipeline(base, stamp=False):
    gen, tagged, rep = base / "gen", base / "tagged", base / "report"
    assert run(["gen", "--seed", "42", "--loops", "30", "--out-dir", str(gen)]) == 0
    assert run(["tag", "--log", str(gen / "events.jsonl"), "--map", str(gen / "mapping.json"),
                "-o", str(tagged / "graph.json"), "--skipped-out", str(tagged / "skipped.json")]) == 0
    extra = ["--stamp"] if stamp else []
    assert run(["analyze", "--records", str(tagged / "graph.records.json"), "--outcomes", str(gen / "outcomes.json"),
                "--by-unit", "unit", "--report", str(rep / "analysis.json"), *extra]) == 0
    assert run(["classify", str(tagged / "graph.json"), "--vetting", str(tagged / "graph.vetting.json"),
                "--marks", str(gen / "marks.json"), "-o", str(rep / "classes.json"), *extra]) == 0
    assert run(["export", str(tagged / "graph.json"), "--format", "triples", "-o", str(rep / "graph.nt")]) == 0
    return {p.relative_to(base).as_posix(): p.read_bytes() for p in sorted(base.rglob("*")) if p.is_file()}


def test_pipeline_outputs(tmp_path):
    files = _pipeline(tmp_path)
    assert set(files) >= {
        "gen/events.jsonl", "gen/mapping.json", "gen/outcomes.json", "gen/marks.json", "gen/spec.json",
        "tagged/graph.json", "tagged/graph.records.json", "tagged/graph.vetting.json", "tagged/skipped.json",
        "report/analysis.json", "report/analysis_types.tsv", "report/analysis_types.png",
        "report/analysis_regression.png", "report/analysis_units.png", "report/classes.json", "report/graph.nt",
    }
    assert json.loads(files["tagged/skipped.json"])["skipped"] == []
    report = json.loads(files["report/analysis.json"])
    assert report["regression"]["coefficients"]["InvestigativeProcess"] == "0.2"
    assert report["regression"]["coefficients"]["intercept"] == "0.3"
    assert report["regression"]["r_squared"] == "1"
    assert "generated_at" not in report
    tsv = files["report/analysis_types.tsv"].decode().splitlines()
    assert tsv[0] == "signature\tn\tmean_outcome\tvariance"
    assert len(tsv) == 1 + len(report["type_stats"])
    for name in ("analysis_types", "analysis_regression", "analysis_units"):
        assert files[f"report/{name}.png"].startswith(b"\x89PNG")


def test_outputs_are_byte_identical(tmp_path):
    assert _pipeline(tmp_path / "a") == _pipeline(tmp_path / "b")


def test_stamp_opts_into_timestamps(tmp_path):
    files = _pipeline(tmp_path, stamp=True)
    assert "generated_at" in json.loads(files["report/analysis.json"])
    assert "generated_at" in json.loads(files["report/classes.json"])


def test_analyze_without_figures(tmp_path, capsys):
    _pipeline(tmp_path)
    out = tmp_path / "plain" / "r.json"
    assert run(["analyze", "--records", str(tmp_path / "tagged/graph.records.json"),
                "--outcomes", str(tmp_path / "gen/outcomes.json"), "--report", str(out), "--no-figures"]) == 0
    assert sorted(p.name for p in out.parent.iterdir()) == ["r.json", "r_types.tsv"]


def test_analyze_missing_outcomes_exit_1(tmp_path, capsys):
    _pipeline(tmp_path)
    assert run(["analyze", "--records", str(tmp_path / "tagged/graph.records.json"),
                "--report", str(tmp_path / "x.json")]) == ExitCode.USAGE
    assert "no outcome" in capsys.readouterr().err


def test_gen_spec_file_and_invalid_spec(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"seed": 3, "n_loops": 2, "bad_source_rate": "1"}))
    assert run(["gen", "--spec", str(spec), "--iters", "2", "--out-dir", str(tmp_path / "g")]) == 0
    written = json.loads((tmp_path / "g/spec.json").read_text())
    assert (written["seed"], written["n_loops"], written["iterations_per_loop"]) == (3, 2, 2)
    spec.write_text(json.dumps({"noise_sd": "-1"}))
    assert run(["gen", "--spec", str(spec), "--out-dir", str(tmp_path / "h")]) == ExitCode.USAGE


def test_export_formats_round_trip(fx, tmp_path):
    src = fx / "fig5_rtw.graph.json"
    assert run(["export", str(src), "--format", "canonical", "-o", str(tmp_path / "c.json")]) == 0
    assert (tmp_path / "c.json").read_bytes() == src.read_bytes()
    assert run(["export", str(src), "--format", "triples", "-o", str(tmp_path / "g.nt")]) == 0
    assert run(["validate", str(tmp_path / "g.nt"), "--vetting", str(fx / "fig5_rtw.vetting.json"),
                "--marks", str(fx / "fig5_rtw.marks.json")]) == 0
    assert run(["export", "--format", "taxonomy", "-o", str(tmp_path / "t.txt")]) == 0
    assert "MentalRepresentation" in (tmp_path / "t.txt").read_text()
    assert run(["export", "--format", "triples", "-o", str(tmp_path / "x")]) == ExitCode.USAGE


def test_color_is_off_when_not_a_tty_and_with_no_color(fx):
    argv = [sys.executable, "-m", "cpo", "validate", *_inputs(fx, "fig5_rtw")]
    plain = subprocess.run(argv, capture_output=True, text=True)
    assert plain.returncode == 0 and "\033[" not in plain.stdout
    forced = subprocess.run(argv, capture_output=True, text=True, env={"CPO_NO_COLOR": "1", "PATH": ""})
    assert forced.returncode == 0 and forced.stdout == plain.stdout


def test_styling_respects_no_color(monkeypatch):
    from cpo import cli

    monkeypatch.setattr(sys.stdout, "isatty", lambda: True, raising=False)
    monkeypatch.delenv("CPO_NO_COLOR", raising=False)
    assert cli._ok("x") == "\033[32mx\033[0m"
    monkeypatch.setenv("CPO_NO_COLOR", "1")
    assert cli._ok("x") == "x"
