"""Belief and warrant classification.

Four rules derive the defined classes from asserted facts only:

R1  a cognitive representation is *believed* (RTB) when it is fused with a
    confidence value whose measured decimal exceeds the policy threshold;
R2  a cognitive process is *proper cognitive functioning* (PPCF) when a
    vetting record covers the environment it occurs in and its inputs meet
    the record's integrity requirements;
R3  a believed representation output by a PPCF is *warranted* (RTW);
R4  a believed representation output by a process that is not a PPCF is
    annotated as a *mere guess*.

R2 can depend on R3 (warranted-input requirements) and R4 negates R2, so
processes are evaluated in topological order of the pipeline graph: every
producer of a process's inputs is settled before the process itself.
Cyclic pipelines are rejected.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field, replace
from decimal import Decimal
from typing import Any, Iterable, Mapping, Sequence

from .errors import (
    DanglingReferenceError,
    FormatError,
    NotClassifiedError,
    PipelineCycleError,
    StaleResultError,
)
from .graph import (
    DERIVED,
    INSTANCE_OF,
    SYSTEM_ANNOTATION,
    Assertion,
    KGraph,
    canonical_decimal,
    find_pipeline_cycle,
    format_decimal,
    integrity_inputs,
    pipeline_dependencies,
    topological_processes,
)

RTB = "RepresentationThatIsBelieved"
RTW = "RepresentationThatIsWarranted"
PPCF = "ProcessOfProperCognitiveFunctioning"
MERE_GUESS = "mere guess"


class VettingMode(str, enum.Enum):
    DESIGNED = "designed"
    VETTED = "vetted"


class Veridicality(str, enum.Enum):
    VERIDICAL = "veridical"
    NOT_VERIDICAL = "not_veridical"
    UNKNOWN = "unknown"


class MultiProducer(str, enum.Enum):
    """How to label an RTB output by both a PPCF and a non-PPCF process."""

    PREFER_RTW = "prefer_rtw"
    BOTH = "both"


@dataclass(frozen=True)
class VettingRecord:
    process: str
    mode: VettingMode
    environments: frozenset[str]
    requires_veridical_inputs: bool = False
    requires_warranted_inputs: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", VettingMode(self.mode))
        object.__setattr__(self, "environments", frozenset(self.environments))
        if not self.environments:
            raise ValueError(f"vetting record for {self.process!r} lists no environments")

    def describe(self) -> str:
        req = []
        if self.requires_veridical_inputs:
            req.append("veridical inputs")
        if self.requires_warranted_inputs:
            req.append("warranted inputs")
        need = f"; requires {' and '.join(req)}" if req else ""
        return f"vetting({self.process}): {self.mode.value} for {sorted(self.environments)}{need}"

    def to_dict(self) -> dict[str, Any]:
        return {
            "process": self.process,
            "mode": self.mode.value,
            "environments": sorted(self.environments),
            "requires_veridical_inputs": self.requires_veridical_inputs,
            "requires_warranted_inputs": self.requires_warranted_inputs,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "VettingRecord":
        return cls(
            process=d["process"],
            mode=VettingMode(d["mode"]),
            environments=frozenset(d["environments"]),
            requires_veridical_inputs=bool(d.get("requires_veridical_inputs", False)),
            requires_warranted_inputs=bool(d.get("requires_warranted_inputs", False)),
        )


@dataclass(frozen=True)
class VeridicalityMark:
    target: str
    value: Veridicality

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", Veridicality(self.value))

    def to_dict(self) -> dict[str, str]:
        return {"target": self.target, "value": self.value.value}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "VeridicalityMark":
        return cls(d["target"], Veridicality(d["value"]))


@dataclass(frozen=True)
class ConfidencePolicy:
    """Reasoner knobs. Only ``positive_threshold`` affects belief (R1)."""

    positive_threshold: Decimal = Decimal("0.5")
    # treat inputs without any mark as failing a veridical-inputs requirement
    unknown_blocks_veridical: bool = False
    multi_producer: MultiProducer = MultiProducer.PREFER_RTW

    def __post_init__(self) -> None:
        t = canonical_decimal(self.positive_threshold)
        if not (0 <= t < 1):
            raise ValueError(f"positive_threshold must be in [0, 1), got {t}")
        object.__setattr__(self, "positive_threshold", t)
        object.__setattr__(self, "multi_producer", MultiProducer(self.multi_producer))


@dataclass(frozen=True)
class RuleFiring:
    rule: str
    node: str
    bindings: tuple[tuple[str, str], ...] = ()
    premises: tuple[str, ...] = ()
    depends_on: tuple[tuple[str, str], ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule,
            "bindings": dict(self.bindings),
            "premises": list(self.premises),
            "depends_on": [f"{r}({n})" for r, n in self.depends_on],
        }


@dataclass(frozen=True)
class ClassificationResult:
    rtb: frozenset[str]
    ppcf: frozenset[str]
    rtw: frozenset[str]
    mere_guess: frozenset[str]
    derivations: Mapping[str, tuple[RuleFiring, ...]]
    # why a process failed R2; consulted when explaining R4
    refutations: Mapping[str, RuleFiring] = field(default_factory=dict)
    # RTBs with both PPCF and non-PPCF producers
    conflicts: frozenset[str] = frozenset()
    fingerprint: str = ""
    policy: ConfidencePolicy = field(default_factory=ConfidencePolicy)

    def members(self) -> set[str]:
        return set(self.rtb | self.ppcf | self.rtw | self.mere_guess)

    def sets(self) -> dict[str, list[str]]:
        return {
            "rtb": sorted(self.rtb),
            "ppcf": sorted(self.ppcf),
            "rtw": sorted(self.rtw),
            "mere_guess": sorted(self.mere_guess),
        }

    def to_dict(self) -> dict[str, Any]:
        return {
            **self.sets(),
            "conflicts": sorted(self.conflicts),
            "derivations": {
                n: [f.to_dict() for f in fs] for n, fs in sorted(self.derivations.items())
            },
            "refutations": {n: f.to_dict() for n, f in sorted(self.refutations.items())},
            "policy": {
                "positive_threshold": format_decimal(self.policy.positive_threshold),
                "unknown_blocks_veridical": self.policy.unknown_blocks_veridical,
                "multi_producer": self.policy.multi_producer.value,
            },
        }


def _class_fact(graph: KGraph, node: str, target: str) -> str:
    """The asserted class statement that puts ``node`` under ``target``."""
    tax = graph.taxonomy
    for c in sorted(graph.classes(node, include_derived=False)):
        if c in tax.classes and tax.is_subclass_of(c, target):
            return f"{node} instance_of {c}"
    return f"{node} instance_of {target}"


def _confidence_measurements(graph: KGraph, cv: str) -> list[tuple[str, str, Decimal]]:
    """(MICE, IBE, value) triples measuring ``cv`` with a decimal, asserted facts only."""
    out = []
    for m in graph.subjects(cv, "describes", include_derived=False):
        if not graph.is_a(m, "MeasurementInformationContentEntity", include_derived=False):
            continue
        for b in graph.objects(m, "generically_depends_on", include_derived=False):
            if not graph.is_a(b, "InformationBearingEntity", include_derived=False):
                continue
            for v in graph.values(b, "has_decimal_value", include_derived=False):
                if isinstance(v, Decimal):
                    out.append((m, b, v))
    return sorted(out, key=lambda t: (t[0], t[1], t[2]))


def _check_references(
    graph: KGraph, vetting: Sequence[VettingRecord], marks: Sequence[VeridicalityMark]
) -> dict[str, Veridicality]:
    for v in vetting:
        if v.process not in graph:
            raise DanglingReferenceError(f"vetting record references unknown node {v.process!r}")
    mark_map: dict[str, Veridicality] = {}
    for m in marks:
        if m.target not in graph:
            raise DanglingReferenceError(f"veridicality mark references unknown node {m.target!r}")
        if m.target in mark_map:
            raise ValueError(f"more than one veridicality mark for {m.target!r}")
        mark_map[m.target] = m.value
    return mark_map


def classify(
    graph: KGraph,
    vetting: Iterable[VettingRecord] = (),
    marks: Iterable[VeridicalityMark] = (),
    policy: ConfidencePolicy | None = None,
) -> ClassificationResult:
    policy = policy or ConfidencePolicy()
    vetting = list(vetting)
    marks = list(marks)
    mark_map = _check_references(graph, vetting, marks)
    deps = pipeline_dependencies(graph)
    cycle = find_pipeline_cycle(deps)
    if cycle:
        raise PipelineCycleError(cycle)

    derivations: dict[str, list[RuleFiring]] = defaultdict(list)
    refutations: dict[str, RuleFiring] = {}

    # R1
    rtb: set[str] = set()
    for cr in graph.instances("CognitiveRepresentation", include_derived=False):
        for cv in sorted(graph.objects(cr, "fused_with", include_derived=False)):
            if not graph.is_a(cv, "ConfidenceValue", include_derived=False):
                continue
            for m, b, value in _confidence_measurements(graph, cv):
                if value > policy.positive_threshold:
                    rtb.add(cr)
                    derivations[cr].append(
                        RuleFiring(
                            "R1",
                            cr,
                            (("CR", cr), ("CV", cv), ("MICE", m), ("IBE", b), ("value", format_decimal(value))),
                            (
                                _class_fact(graph, cr, "CognitiveRepresentation"),
                                f"{cr} fused_with {cv}",
                                _class_fact(graph, cv, "ConfidenceValue"),
                                f"{m} describes {cv}",
                                f"{m} generically_depends_on {b}",
                                f"{b} has_decimal_value {format_decimal(value)}",
                            ),
                        )
                    )

    producers: dict[str, list[str]] = defaultdict(list)
    for p in sorted(deps):
        for x in graph.objects(p, "has_output", include_derived=False):
            producers[x].append(p)

    vetting_by_process: dict[str, list[VettingRecord]] = defaultdict(list)
    for v in vetting:
        vetting_by_process[v.process].append(v)

    ppcf: set[str] = set()
    rtw_cache: dict[str, bool] = {}

    def warranted(cr: str) -> bool:
        # every producer of cr precedes the caller in topological order
        if cr not in rtw_cache:
            rtw_cache[cr] = cr in rtb and any(p in ppcf for p in producers.get(cr, ()))
        return rtw_cache[cr]

    def check_vetting(p: str, v: VettingRecord, envs: list[str]) -> tuple[list[str], list[str], list[tuple[str, str]]]:
        """Return (failures, premises, depends_on) for one candidate record."""
        failures: list[str] = []
        premises = [v.describe()]
        depends: list[tuple[str, str]] = []
        if not envs:
            failures.append(f"{p} has no occurs_in_environment value")
        for env in envs:
            if env in v.environments:
                premises.append(f"{p} occurs_in_environment {env!r}")
            else:
                failures.append(
                    f"{p} occurs_in_environment {env!r}, outside vetted environments {sorted(v.environments)}"
                )
        for r in integrity_inputs(graph, p):
            mark = mark_map.get(r, Veridicality.UNKNOWN)
            if v.requires_veridical_inputs:
                if mark is Veridicality.NOT_VERIDICAL:
                    failures.append(f"mark({r}) = not_veridical")
                elif mark is Veridicality.UNKNOWN and policy.unknown_blocks_veridical:
                    failures.append(f"mark({r}) = unknown")
                elif mark is Veridicality.VERIDICAL:
                    premises.append(f"mark({r}) = veridical")
            if v.requires_warranted_inputs:
                if graph.is_a(r, "Representation", include_derived=False):
                    support = [r] if graph.is_a(r, "CognitiveRepresentation", include_derived=False) else []
                else:
                    support = sorted(
                        c
                        for c in graph.subjects(r, "concretizes", include_derived=False)
                        if graph.is_a(c, "CognitiveRepresentation", include_derived=False)
                    )
                ok = [c for c in support if warranted(c)]
                if ok:
                    depends.append(("R3", ok[0]))
                    if ok[0] != r:
                        premises.append(f"{ok[0]} concretizes {r}")
                else:
                    failures.append(f"input {r} is not warranted")
        return failures, premises, depends

    # R2, process by process
    for p in topological_processes(deps):
        if not graph.is_a(p, "CognitiveProcess", include_derived=False):
            refutations[p] = RuleFiring("not-R2", p, (("P", p),), (f"{p} is not a CognitiveProcess",))
            continue
        envs = sorted(v for v in graph.values(p, "occurs_in_environment", include_derived=False) if isinstance(v, str))
        records = vetting_by_process.get(p, [])
        if not records:
            refutations[p] = RuleFiring("not-R2", p, (("P", p),), (f"no vetting record for {p}",))
            continue
        reasons: list[str] = []
        for i, v in enumerate(records):
            failures, premises, depends = check_vetting(p, v, envs)
            if not failures:
                ppcf.add(p)
                derivations[p].append(
                    RuleFiring(
                        "R2",
                        p,
                        (("P", p), ("vetting", str(i)), ("environment", ",".join(envs))),
                        (_class_fact(graph, p, "CognitiveProcess"), *premises),
                        tuple(depends),
                    )
                )
                break
            reasons.extend([v.describe(), *failures])
        if p not in ppcf:
            refutations[p] = RuleFiring("not-R2", p, (("P", p),), tuple(reasons))

    # R3 / R4
    rtw: set[str] = set()
    mere_guess: set[str] = set()
    conflicts: set[str] = set()
    for cr in sorted(rtb):
        good = [p for p in producers.get(cr, ()) if p in ppcf]
        bad = [p for p in producers.get(cr, ()) if p not in ppcf]
        for p in good:
            rtw.add(cr)
            derivations[cr].append(
                RuleFiring("R3", cr, (("CR", cr), ("P", p)), (f"{p} has_output {cr}",), (("R1", cr), ("R2", p)))
            )
        if good and bad:
            conflicts.add(cr)
        if bad and (not good or policy.multi_producer is MultiProducer.BOTH):
            mere_guess.add(cr)
            for p in bad:
                derivations[cr].append(
                    RuleFiring("R4", cr, (("CR", cr), ("P", p)), (f"{p} has_output {cr}",), (("R1", cr), ("not-R2", p)))
                )

    return ClassificationResult(
        rtb=frozenset(rtb),
        ppcf=frozenset(ppcf),
        rtw=frozenset(rtw),
        mere_guess=frozenset(mere_guess),
        derivations={n: tuple(fs) for n, fs in sorted(derivations.items())},
        refutations=dict(sorted(refutations.items())),
        conflicts=frozenset(conflicts),
        fingerprint=graph.fingerprint(),
        policy=policy,
    )


# -- explanation --------------------------------------------------------------


@dataclass(frozen=True)
class Derivation:
    """One rule application and the sub-derivations it rests on."""

    rule: str
    node: str
    premises: tuple[str, ...]
    children: tuple["Derivation", ...] = ()

    def leaves(self) -> list[str]:
        out = list(self.premises)
        for c in self.children:
            out.extend(c.leaves())
        return out

    def render(self, indent: str = "  ") -> str:
        lines: list[str] = []

        def walk(d: Derivation, depth: int) -> None:
            lines.append(f"{indent * depth}{d.rule}({d.node})")
            for p in d.premises:
                lines.append(f"{indent * (depth + 1)}- {p}")
            for c in d.children:
                walk(c, depth + 1)

        walk(self, 0)
        return "\n".join(lines) + "\n"


def _firing(result: ClassificationResult, rule: str, node: str) -> RuleFiring:
    if rule == "not-R2":
        return result.refutations[node]
    for f in result.derivations.get(node, ()):
        if f.rule == rule:
            return f
    raise NotClassifiedError(node)


def _tree(result: ClassificationResult, firing: RuleFiring) -> Derivation:
    children = tuple(_tree(result, _firing(result, r, n)) for r, n in firing.depends_on)
    return Derivation(firing.rule, firing.node, firing.premises, children)


_RULE_RANK = {"R3": 0, "R4": 1, "R2": 2, "R1": 3}


def explain(result: ClassificationResult, node: str) -> Derivation:
    """Derivation tree for the strongest classification of ``node``."""
    firings = result.derivations.get(node)
    if not firings or node not in result.members():
        raise NotClassifiedError(node)
    top = min(firings, key=lambda f: _RULE_RANK.get(f.rule, 9))
    return _tree(result, top)


# -- annotation ---------------------------------------------------------------


def annotate(graph: KGraph, result: ClassificationResult) -> KGraph:
    """Copy of ``graph`` with the derived classes and mere-guess annotations written in."""
    if result.fingerprint and result.fingerprint != graph.fingerprint():
        raise StaleResultError("graph changed since it was classified; re-run classify")
    out = graph.copy()
    for cls, members in ((RTB, result.rtb), (PPCF, result.ppcf), (RTW, result.rtw)):
        for n in sorted(members):
            out._add(Assertion(INSTANCE_OF, n, INSTANCE_OF, cls, provenance=DERIVED))
    for n in sorted(result.mere_guess):
        out._add(Assertion("data", n, "system_annotation", MERE_GUESS, provenance=SYSTEM_ANNOTATION))
    return out


def with_threshold(policy: ConfidencePolicy, threshold: Any) -> ConfidencePolicy:
    return replace(policy, positive_threshold=canonical_decimal(threshold))



# -- vetting / marks files ----------------------------------------------------

INPUT_FORMAT_VERSION = "1"


def _check_version(doc: Any, what: str) -> None:
    if not isinstance(doc, dict) or doc.get("format_version") != INPUT_FORMAT_VERSION:
        raise FormatError(f"{what} document must be an object with format_version {INPUT_FORMAT_VERSION!r}")


def vetting_to_document(records: Iterable[VettingRecord]) -> dict[str, Any]:
    rows = sorted((r.to_dict() for r in records), key=lambda d: (d["process"], d["mode"], d["environments"]))
    return {"format_version": INPUT_FORMAT_VERSION, "vetting": rows}


def vetting_from_document(doc: Any) -> list[VettingRecord]:
    _check_version(doc, "vetting")
    try:
        return [VettingRecord.from_dict(d) for d in doc.get("vetting", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed vetting record: {exc}") from None


def marks_to_document(marks: Iterable[VeridicalityMark]) -> dict[str, Any]:
    rows = sorted((m.to_dict() for m in marks), key=lambda d: d["target"])
    return {"format_version": INPUT_FORMAT_VERSION, "marks": rows}


def marks_from_document(doc: Any) -> list[VeridicalityMark]:
    _check_version(doc, "marks")
    try:
        return [VeridicalityMark.from_dict(d) for d in doc.get("marks", [])]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed veridicality mark: {exc}") from None
