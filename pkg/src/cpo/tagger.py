"""Event-log tagging into workflow graphs.

Mapped events become process individuals typed by the mapping table.
Artifacts named in ``inputs``/``outputs`` become information bearing
entities, each carrying its own descriptive ICE. When the table gives a
default confidence, every output also gets a cognitive representation of
the artifact's content fused with a measured confidence value, which is
what the reasoner classifies.

Events are processed in a normalized order (timestamp, activity code,
actor, then the remaining fields), so tagging is insensitive to the order
of lines in the log.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from decimal import Decimal
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    FormatError,
    InconsistentTableError,
    MalformedEventError,
    NoSuchRecordError,
    OutcomeAlreadySetError,
    OutOfRangeError,
    UnknownClassError,
)
from .graph import KGraph, canonical_decimal, format_decimal
from .reasoner import VettingMode, VettingRecord
from .taxonomy import ClassTaxonomy, load_builtin_taxonomy

FORMAT_VERSION = "1"

SKIP_UNMAPPED = "unmapped-activity"
SKIP_FREE_TEXT = "free-text-only"


def parse_instant(text: str) -> datetime:
    if not isinstance(text, str):
        raise MalformedEventError(f"timestamp must be a string, got {text!r}")
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError:
        raise MalformedEventError(f"unparseable timestamp {text!r}") from None
    if ts.tzinfo is None:
        raise MalformedEventError(f"timestamp {text!r} has no UTC offset")
    return ts.astimezone(timezone.utc)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class EventRecord:
    timestamp: str
    actor_id: str
    activity_code: str
    loop_id: str
    iteration: int
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    note: str | None = None
    unit: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.activity_code, str) or not self.activity_code:
            raise MalformedEventError("activity_code must be a non-empty string")
        if isinstance(self.iteration, bool) or not isinstance(self.iteration, int) or self.iteration < 0:
            raise MalformedEventError(f"iteration must be a non-negative integer, got {self.iteration!r}")
        for name in ("actor_id", "loop_id"):
            if not isinstance(getattr(self, name), str):
                raise MalformedEventError(f"{name} must be a string")
        object.__setattr__(self, "timestamp", format_instant(parse_instant(self.timestamp)))
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))

    @property
    def instant(self) -> datetime:
        return parse_instant(self.timestamp)

    def sort_key(self) -> tuple:
        return (
            self.instant,
            self.activity_code,
            self.actor_id,
            self.loop_id,
            self.iteration,
            self.inputs,
            self.outputs,
            self.note or "",
            self.unit or "",
        )

    @property
    def source_id(self) -> str:
        return f"{self.loop_id}#{self.iteration}@{self.timestamp}/{self.activity_code}/{self.actor_id}"

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "timestamp": self.timestamp,
            "actor_id": self.actor_id,
            "activity_code": self.activity_code,
            "loop_id": self.loop_id,
            "iteration": self.iteration,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }
        if self.note is not None:
            d["note"] = self.note
        if self.unit is not None:
            d["unit"] = self.unit
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "EventRecord":
        try:
            return cls(
                timestamp=d["timestamp"],
                actor_id=d["actor_id"],
                activity_code=d["activity_code"],
                loop_id=d["loop_id"],
                iteration=d["iteration"],
                inputs=tuple(d.get("inputs", ())),
                outputs=tuple(d.get("outputs", ())),
                note=d.get("note"),
                unit=d.get("unit"),
            )
        except KeyError as exc:
            raise MalformedEventError(f"event is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class MappingEntry:
    process_class: str
    environment: str
    default_confidence: Decimal | None = None
    vetting: Mapping[str, Any] | None = None


@dataclass(frozen=True)
class MappingTable:
    entries: Mapping[str, MappingEntry]

    @classmethod
    def from_document(cls, doc: Any, taxonomy: ClassTaxonomy | None = None) -> "MappingTable":
        if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"mapping table must be an object with format_version {FORMAT_VERSION!r}")
        tax = taxonomy or load_builtin_taxonomy()
        entries = {}
        for code, raw in sorted((doc.get("entries") or {}).items()):
            try:
                cls_id = tax.resolve(raw["process_class"])
            except UnknownClassError:
                raise InconsistentTableError(f"{code}: unknown class {raw['process_class']!r}") from None
            except (KeyError, TypeError):
                raise InconsistentTableError(f"{code}: entry needs a process_class") from None
            if not tax.is_subclass_of(cls_id, "CognitiveProcess"):
                raise InconsistentTableError(f"{code}: {cls_id} is not a kind of CognitiveProcess")
            conf = raw.get("default_confidence")
            if conf is not None:
                try:
                    conf = canonical_decimal(conf)
                except ValueError:
                    raise InconsistentTableError(f"{code}: bad default_confidence {conf!r}") from None
                if not (0 <= conf <= 1):
                    raise InconsistentTableError(f"{code}: default_confidence {conf} outside [0, 1]")
            vetting = raw.get("vetting")
            if vetting is not None:
                try:
                    VettingRecord("template", VettingMode(vetting["mode"]), frozenset(vetting["environments"]))
                except (KeyError, TypeError, ValueError) as exc:
                    raise InconsistentTableError(f"{code}: bad vetting template: {exc}") from None
            env = raw.get("environment")
            if not isinstance(env, str) or not env:
                raise InconsistentTableError(f"{code}: entry needs an environment label")
            entries[code] = MappingEntry(cls_id, env, conf, vetting)
        return cls(entries)

    def to_document(self) -> dict[str, Any]:
        out = {}
        for code, e in sorted(self.entries.items()):
            d: dict[str, Any] = {"process_class": e.process_class, "environment": e.environment}
            if e.default_confidence is not None:
                d["default_confidence"] = format_decimal(e.default_confidence)
            if e.vetting is not None:
                d["vetting"] = dict(e.vetting)
            out[code] = d
        return {"format_version": FORMAT_VERSION, "entries": out}


@dataclass(frozen=True)
class Step:
    process: str
    process_class: str
    timestamp: str


@dataclass(frozen=True)
class WorkflowRecord:
    loop_id: str
    iteration: int
    steps: tuple[Step, ...]
    outcome: Decimal | None = None
    labels: Mapping[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int]:
        return (self.loop_id, self.iteration)

    @property
    def signature(self) -> tuple[str, ...]:
        return tuple(s.process_class for s in self.steps)

    def label(self, name: str) -> str | None:
        if name in ("loop_id", "iteration"):
            return str(getattr(self, name))
        return self.labels.get(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "loop_id": self.loop_id,
            "iteration": self.iteration,
            "steps": [
                {"process": s.process, "process_class": s.process_class, "timestamp": s.timestamp} for s in self.steps
            ],
            "outcome": None if self.outcome is None else format_decimal(self.outcome),
            "labels": dict(sorted(self.labels.items())),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "WorkflowRecord":
        outcome = d.get("outcome")
        return cls(
            loop_id=d["loop_id"],
            iteration=int(d["iteration"]),
            steps=tuple(Step(s["process"], s["process_class"], s["timestamp"]) for s in d.get("steps", [])),
            outcome=None if outcome is None else canonical_decimal(outcome),
            labels=dict(d.get("labels") or {}),
        )


@dataclass(frozen=True)
class SkippedEvent:
    event: EventRecord
    reason: str

    def to_dict(self) -> dict[str, Any]:
        return {"reason": self.reason, "event": self.event.to_dict()}


@dataclass
class TaggingResult:
    graph: KGraph
    records: list[WorkflowRecord]
    skipped: list[SkippedEvent]
    vetting: list[VettingRecord]

    def __iter__(self):
        # unpacks as (graph, records, skipped)
        return iter((self.graph, self.records, self.skipped))


class _Builder:
    def __init__(self, taxonomy: ClassTaxonomy | None):
        self.g = KGraph(taxonomy)

    def node(self, node_id: str, cls: str) -> str:
        if node_id not in self.g:
            self.g.add_node(node_id, [cls])
        return node_id

    def artifact(self, aid: str) -> tuple[str, str]:
        ibe = f"ibe:{aid}"
        ice = f"ice:{aid}"
        if ibe not in self.g:
            self.node(ibe, "InformationBearingEntity")
            self.g.add_data(ibe, "has_nominal_value", aid)
            self.node(ice, "DescriptiveInformationContentEntity")
            self.g.add_edge(ice, "generically_depends_on", ibe)
        return ibe, ice


def tag_events(
    events: Iterable[EventRecord],
    table: MappingTable,
    taxonomy: ClassTaxonomy | None = None,
) -> TaggingResult:
    b = _Builder(taxonomy)
    g = b.g
    skipped: list[SkippedEvent] = []
    vetting: list[VettingRecord] = []
    by_iteration: dict[tuple[str, int], list[tuple[EventRecord, Step]]] = defaultdict(list)
    counters: dict[tuple[str, int], int] = defaultdict(int)

    for ev in sorted(events, key=EventRecord.sort_key):
        entry = table.entries.get(ev.activity_code)
        if entry is None:
            skipped.append(SkippedEvent(ev, SKIP_UNMAPPED))
            continue
        if ev.note is not None and not ev.inputs and not ev.outputs:
            skipped.append(SkippedEvent(ev, SKIP_FREE_TEXT))
            continue
        k = (ev.loop_id, ev.iteration)
        counters[k] += 1
        p = f"p:{ev.loop_id}:{ev.iteration}:{counters[k]}"
        g.add_node(p, [entry.process_class])
        g.add_data(p, "occurs_in_environment", entry.environment)
        g.add_data(p, "source_event", ev.source_id)
        if ev.note is not None:
            g.add_data(p, "has_note", ev.note)
        agent = b.node(f"agent:{ev.actor_id}", "CognitiveSystem")
        g.add_edge(p, "has_agent", agent)
        for aid in ev.inputs:
            ibe, _ = b.artifact(aid)
            g.add_edge(p, "has_input", ibe)
        for aid in ev.outputs:
            ibe, ice = b.artifact(aid)
            g.add_edge(p, "has_output", ibe)
            if entry.default_confidence is not None:
                _emit_belief(g, p, aid, ice, agent, entry.default_confidence)
        if entry.vetting is not None:
            v = entry.vetting
            vetting.append(
                VettingRecord(
                    p,
                    VettingMode(v["mode"]),
                    frozenset(v["environments"]),
                    bool(v.get("requires_veridical_inputs", False)),
                    bool(v.get("requires_warranted_inputs", False)),
                )
            )
        by_iteration[k].append((ev, Step(p, entry.process_class, ev.timestamp)))

    records = []
    for (loop_id, iteration), items in sorted(by_iteration.items()):
        labels = {"actors": "+".join(sorted({ev.actor_id for ev, _ in items}))}
        units = sorted({ev.unit for ev, _ in items if ev.unit is not None})
        if units:
            labels["unit"] = "+".join(units)
        records.append(WorkflowRecord(loop_id, iteration, tuple(s for _, s in items), None, labels))
    return TaggingResult(g, records, skipped, vetting)


def _emit_belief(g: KGraph, p: str, aid: str, ice: str, agent: str, confidence: Decimal) -> None:
    suffix = f"{p}:{aid}"
    cr, cv = f"cr:{suffix}", f"cv:{suffix}"
    mice, reading = f"mice:{suffix}", f"reading:{suffix}"
    g.add_node(cr, ["CognitiveRepresentation"])
    g.add_edge(cr, "concretizes", ice, {"mode": "original"})
    g.add_edge(cr, "inheres_in", agent)
    g.add_edge(p, "has_output", cr)
    g.add_node(cv, ["ConfidenceValue"])
    g.add_edge(cv, "inheres_in", agent)
    g.add_edge(cr, "fused_with", cv)
    g.add_node(mice, ["MeasurementInformationContentEntity"])
    g.add_node(reading, ["InformationBearingEntity"])
    g.add_edge(mice, "describes", cv)
    g.add_edge(mice, "generically_depends_on", reading)
    g.add_data(reading, "has_decimal_value", confidence)


def attach_outcome(
    records: Sequence[WorkflowRecord],
    loop_id: str,
    iteration: int,
    score: Any,
    *,
    force: bool = False,
) -> list[WorkflowRecord]:
    """Return a copy of ``records`` with the given iteration's outcome set.

    The score is caller-defined; it only has to be a decimal in [0, 1].
    """
    value = canonical_decimal(score)
    if not (0 <= value <= 1):
        raise OutOfRangeError(f"outcome {value} outside [0, 1]")
    out = list(records)
    for i, r in enumerate(out):
        if r.key == (loop_id, iteration):
            if r.outcome is not None and not force:
                raise OutcomeAlreadySetError(f"outcome for ({loop_id}, {iteration}) already set to {r.outcome}")
            out[i] = replace(r, outcome=value)
            return out
    raise NoSuchRecordError(f"no workflow record for loop {loop_id!r} iteration {iteration}")


def attach_outcomes(
    records: Sequence[WorkflowRecord], outcomes: Iterable[Mapping[str, Any]], *, force: bool = False
) -> list[WorkflowRecord]:
    out = list(records)
    for o in outcomes:
        out = attach_outcome(out, o["loop_id"], int(o["iteration"]), o["score"], force=force)
    return out


# -- file formats -------------------------------------------------------------


def dump_event_log(events: Iterable[EventRecord]) -> str:
    lines = [json.dumps({"format_version": FORMAT_VERSION, "kind": "cpo-event-log"}, sort_keys=True)]
    lines.extend(json.dumps(e.to_dict(), sort_keys=True, ensure_ascii=False) for e in events)
    return "\n".join(lines) + "\n"


def load_event_log(text: str) -> list[EventRecord]:
    lines = [(i, line) for i, line in enumerate(text.splitlines(), 1) if line.strip()]
    if not lines:
        raise FormatError("event log is empty (missing format_version header)")
    try:
        header = json.loads(lines[0][1])
    except json.JSONDecodeError as exc:
        raise FormatError(f"line 1: {exc}") from None
    if not isinstance(header, dict) or header.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"event log header must carry format_version {FORMAT_VERSION!r}")
    events = []
    for i, line in lines[1:]:
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedEventError(f"line {i}: {exc}") from None
        if not isinstance(raw, dict):
            raise MalformedEventError(f"line {i}: event must be a JSON object")
        try:
            events.append(EventRecord.from_dict(raw))
        except MalformedEventError as exc:
            raise MalformedEventError(f"line {i}: {exc}") from None
    return events


def records_to_document(records: Iterable[WorkflowRecord]) -> dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "records": [r.to_dict() for r in sorted(records, key=lambda r: r.key)],
    }


def records_from_document(doc: Any) -> list[WorkflowRecord]:
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"records document must carry format_version {FORMAT_VERSION!r}")
    try:
        return [WorkflowRecord.from_dict(d) for d in doc.get("records", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed workflow record: {exc}") from None


def outcomes_to_document(outcomes: Iterable[Mapping[str, Any]]) -> dict[str, Any]:
    rows = [
        {"loop_id": o["loop_id"], "iteration": int(o["iteration"]), "score": format_decimal(canonical_decimal(o["score"]))}
        for o in outcomes
    ]
    return {"format_version": FORMAT_VERSION, "outcomes": sorted(rows, key=lambda r: (r["loop_id"], r["iteration"]))}


def outcomes_from_document(doc: Any) -> list[dict[str, Any]]:
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"outcomes document must carry format_version {FORMAT_VERSION!r}")
    return list(doc.get("outcomes", []))
