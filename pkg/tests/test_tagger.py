import json
import random
from decimal import Decimal

import pytest

from cpo.errors import (
    FormatError,
    InconsistentTableError,
    MalformedEventError,
    NoSuchRecordError,
    OutcomeAlreadySetError,
    OutOfRangeError,
)
from cpo.reasoner import classify
from cpo.serialize import dumps
from cpo.tagger import (
    SKIP_FREE_TEXT,
    SKIP_UNMAPPED,
    EventRecord,
    MappingTable,
    WorkflowRecord,
    attach_outcome,
    attach_outcomes,
    dump_event_log,
    load_event_log,
    records_from_document,
    records_to_document,
    tag_events,
)

TABLE_DOC = {
    "format_version": "1",
    "entries": {
        "ACH_RUN": {"process_class": "InvestigativeProcess", "environment": "desk"},
        "QUERY": {
            "process_class": "CognitiveProcess",
            "environment": "desk",
            "default_confidence": "0.8",
            "vetting": {"mode": "vetted", "environments": ["desk"], "requires_veridical_inputs": True},
        },
    },
}
TABLE = MappingTable.from_document(TABLE_DOC)


def ev(code="ACH_RUN", minute=0, inputs=("a",), outputs=("b",), loop="L1", it=0, actor="ann", note=None):
    return EventRecord(f"2024-03-01T10:{minute:02d}:00Z", actor, code, loop, it, inputs, outputs, note)


def test_ach_run_example():
    g, records, skipped = tag_events([ev()], TABLE)
    (p,) = [n for n in g.nodes if g.is_a(n, "Process")]
    assert g.classes(p) == {"InvestigativeProcess"}
    (i,) = g.objects(p, "has_input")
    (o,) = g.objects(p, "has_output")
    assert g.values(i, "has_nominal_value") == ["a"]
    assert g.values(o, "has_nominal_value") == ["b"]
    assert g.values(p, "occurs_in_environment") == ["desk"]
    assert skipped == []
    assert [r.signature for r in records] == [("InvestigativeProcess",)]


def test_artifacts_are_ibes_carrying_an_ice():
    g, _, _ = tag_events([ev()], TABLE)
    assert g.is_a("ibe:a", "InformationBearingEntity")
    assert g.objects("ice:a", "generically_depends_on") == ["ibe:a"]
    assert g.is_a("ice:a", "InformationContentEntity")


def test_shared_artifact_resolves_to_one_node():
    g, _, _ = tag_events([ev(), ev(minute=1, inputs=("b",), outputs=("c",))], TABLE)
    assert sorted(n for n in g.nodes if n.startswith("ibe:")) == ["ibe:a", "ibe:b", "ibe:c"]


def test_empty_log():
    g, records, skipped = tag_events([], TABLE)
    assert len(g) == 0 and records == [] and skipped == []


def test_unmapped_code_is_skipped_and_graph_unchanged():
    base = [ev()]
    extra = ev("FREEFORM_NOTE", minute=5, inputs=(), outputs=("z",))
    g0, r0, _ = tag_events(base, TABLE)
    g1, r1, skipped = tag_events(base + [extra], TABLE)
    assert [(s.event, s.reason) for s in skipped] == [(extra, SKIP_UNMAPPED)]
    assert dumps(g0) == dumps(g1) and r0 == r1
    seen = {e.activity_code for e in base + [extra]}
    assert {s.event.activity_code for s in skipped} == seen - set(TABLE.entries)


def test_note_only_event_is_skipped_but_notes_on_real_events_are_kept():
    lone = ev(minute=1, inputs=(), outputs=(), note="hunch about the courier")
    annotated = ev(minute=2, note="ran ACH with three hypotheses")
    g, _, skipped = tag_events([lone, annotated], TABLE)
    assert [(s.event, s.reason) for s in skipped] == [(lone, SKIP_FREE_TEXT)]
    (p,) = [n for n in g.nodes if g.is_a(n, "Process")]
    assert g.values(p, "has_note") == ["ran ACH with three hypotheses"]


def test_default_confidence_emits_believed_output():
    g, _, _ = tag_events([ev("QUERY")], TABLE)
    r = classify(g)
    assert len(r.rtb) == 1
    (cr,) = r.rtb
    assert g.objects(cr, "concretizes") == ["ice:b"]


def test_vetting_template_instantiated_per_process():
    res = tag_events([ev("QUERY"), ev("QUERY", minute=1, it=1), ev(minute=2)], TABLE)
    assert len(res.vetting) == 2
    assert all(v.environments == {"desk"} and v.requires_veridical_inputs for v in res.vetting)
    assert {v.process for v in res.vetting} == {s.process for r in res.records for s in r.steps if s.process_class == "CognitiveProcess"}


def _mixed_log(rng: random.Random, n: int):
    codes = ["ACH_RUN", "QUERY", "FREEFORM_NOTE"]
    out = []
    for i in range(n):
        note = "n" if rng.random() < 0.2 else None
        ins = () if note and rng.random() < 0.5 else (f"x{rng.randrange(6)}",)
        outs = () if not ins else (f"x{rng.randrange(6, 12)}",)
        out.append(
            EventRecord(
                f"2024-03-01T10:{rng.randrange(30):02d}:00+02:00",
                rng.choice(["ann", "bo"]),
                rng.choice(codes),
                rng.choice(["L1", "L2"]),
                rng.randrange(3),
                ins,
                outs,
                note,
            )
        )
    return out


@pytest.mark.parametrize("seed", range(25))
def test_tagging_is_order_invariant(seed):
    rng = random.Random(seed)
    events = _mixed_log(rng, 30)
    shuffled = events[:]
    rng.shuffle(shuffled)
    a, b = tag_events(events, TABLE), tag_events(shuffled, TABLE)
    assert dumps(a.graph) == dumps(b.graph)
    assert a.records == b.records
    assert a.skipped == b.skipped
    assert a.vetting == b.vetting


@pytest.mark.parametrize("seed", range(25))
def test_event_conservation_and_traceability(seed):
    events = _mixed_log(random.Random(seed), 40)
    g, records, skipped = tag_events(events, TABLE)
    processes = [n for n in g.nodes if g.is_a(n, "Process")]
    assert len(processes) + len(skipped) == len(events)
    assert sum(len(r.steps) for r in records) == len(processes)
    by_source = {e.source_id: e for e in events}
    for p in processes:
        (src,) = g.values(p, "source_event")
        assert src in by_source
    traced = sorted(v for p in processes for v in g.values(p, "source_event"))
    mapped = sorted(e.source_id for e in events if e not in {s.event for s in skipped})
    assert traced == mapped


def test_steps_ordered_by_time_then_code_then_actor():
    events = [
        ev("QUERY", minute=3, actor="bo"),
        ev("QUERY", minute=3, actor="ann"),
        ev("ACH_RUN", minute=3),
        ev("QUERY", minute=1),
    ]
    (rec,) = tag_events(events, TABLE).records
    assert rec.signature == ("CognitiveProcess", "InvestigativeProcess", "CognitiveProcess", "CognitiveProcess")
    assert [s.timestamp[11:16] for s in rec.steps] == ["10:01", "10:03", "10:03", "10:03"]


def test_timestamps_normalized_to_utc():
    e = EventRecord("2024-03-01T12:00:00+02:00", "a", "QUERY", "L", 0)
    assert e.timestamp == "2024-03-01T10:00:00Z"


@pytest.mark.parametrize(
    "kw",
    [
        {"timestamp": "yesterday"},
        {"timestamp": "2024-03-01T10:00:00"},
        {"iteration": -1},
        {"iteration": True},
        {"activity_code": ""},
    ],
)
def test_malformed_events(kw):
    base = {"timestamp": "2024-03-01T10:00:00Z", "actor_id": "a", "activity_code": "Q", "loop_id": "L", "iteration": 0}
    with pytest.raises(MalformedEventError):
        EventRecord(**{**base, **kw})


@pytest.mark.parametrize(
    "entry",
    [
        {"process_class": "Dragon", "environment": "desk"},
        {"process_class": "InformationBearingEntity", "environment": "desk"},
        {"process_class": "Process", "environment": "desk"},
        {"process_class": "CognitiveProcess", "environment": "desk", "default_confidence": "1.5"},
        {"process_class": "CognitiveProcess"},
        {"process_class": "CognitiveProcess", "environment": "desk", "vetting": {"mode": "vetted", "environments": []}},
    ],
)
def test_inconsistent_tables(entry):
    with pytest.raises(InconsistentTableError):
        MappingTable.from_document({"format_version": "1", "entries": {"X": entry}})


def test_table_round_trip_and_version():
    assert MappingTable.from_document(TABLE.to_document()) == TABLE
    with pytest.raises(FormatError):
        MappingTable.from_document({"entries": {}})


def test_event_log_round_trip():
    events = _mixed_log(random.Random(7), 20)
    text = dump_event_log(events)
    assert json.loads(text.splitlines()[0])["format_version"] == "1"
    assert load_event_log(text) == events
    assert dump_event_log(load_event_log(text)) == text


def test_event_log_errors():
    with pytest.raises(FormatError):
        load_event_log("")
    with pytest.raises(FormatError):
        load_event_log('{"format_version": "2"}\n')
    with pytest.raises(MalformedEventError, match="line 2"):
        load_event_log('{"format_version": "1"}\n{"timestamp": "2024-01-01T00:00:00Z"}\n')
    with pytest.raises(MalformedEventError, match="line 2"):
        load_event_log('{"format_version": "1"}\nnot json\n')


# -- outcomes -----------------------------------------------------------------


def _records():
    events = [ev(loop="L1", it=i, minute=i) for i in range(3)]
    return tag_events(events, TABLE).records


def test_attach_outcome():
    out = attach_outcome(_records(), "L1", 2, "0.7")
    assert {r.key: r.outcome for r in out}[("L1", 2)] == Decimal("0.7")
    assert sum(r.outcome is not None for r in out) == 1


def test_attach_outcome_does_not_mutate_input():
    recs = _records()
    attach_outcome(recs, "L1", 0, "0.5")
    assert all(r.outcome is None for r in recs)


@pytest.mark.parametrize("score", ["1.3", "-0.1"])
def test_attach_out_of_range(score):
    with pytest.raises(OutOfRangeError):
        attach_outcome(_records(), "L1", 0, score)


def test_attach_missing_record():
    with pytest.raises(NoSuchRecordError):
        attach_outcome(_records(), "L1", 9, "0.5")


def test_attach_twice_needs_force():
    once = attach_outcome(_records(), "L1", 0, "0.5")
    with pytest.raises(OutcomeAlreadySetError):
        attach_outcome(once, "L1", 0, "0.6")
    twice = attach_outcome(once, "L1", 0, "0.6", force=True)
    assert twice[0].outcome == Decimal("0.6")


def test_attach_outcomes_batch_and_records_round_trip():
    rows = [{"loop_id": "L1", "iteration": i, "score": f"0.{i + 1}"} for i in range(3)]
    recs = attach_outcomes(_records(), rows)
    assert [r.outcome for r in recs] == [Decimal("0.1"), Decimal("0.2"), Decimal("0.3")]
    doc = records_to_document(recs)
    assert records_from_document(json.loads(json.dumps(doc))) == recs
    assert WorkflowRecord.from_dict(recs[0].to_dict()) == recs[0]
