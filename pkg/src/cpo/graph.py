"""Typed individual store with pattern matching and well-formedness checks.

A :class:`KGraph` holds three kinds of assertion: class membership
(``instance_of``), edges between individuals and literal-valued data
assertions. Every assertion carries a provenance tag so that facts written
by the reasoner can always be told apart from analyst input.

Decimal literals are stored as :class:`decimal.Decimal` in canonical form
and serialized as strings; binary floats never reach storage.
"""

from __future__ import annotations

import graphlib
import hashlib
import json
from collections import defaultdict
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import (
    AttributeViolation,
    DomainViolation,
    DuplicateNodeError,
    LiteralKindError,
    MalformedPatternError,
    RangeViolation,
    UnknownClassError,
    UnknownNodeError,
    UnknownRelationError,
)
from .taxonomy import (
    VALUE_RELATIONS,
    ClassTaxonomy,
    LiteralKind,
    RelationSig,
    load_builtin_taxonomy,
)

ASSERTED = "asserted"
DERIVED = "derived"
SYSTEM_ANNOTATION = "system-annotation"
PROVENANCES = (ASSERTED, DERIVED, SYSTEM_ANNOTATION)

INSTANCE_OF = "instance_of"
# pattern-only predicate: any of the three literal-value relations
HAS_VALUE = "has_value"

Literal = bool | str | Decimal


def canonical_decimal(value: Any) -> Decimal:
    """Parse ``value`` as an exact decimal in canonical (normalized) form.

    >>> str(canonical_decimal("0.80"))
    '0.8'
    """
    if isinstance(value, bool):
        raise LiteralKindError(f"not a decimal: {value!r}")
    if isinstance(value, float):
        value = repr(value)
    try:
        d = Decimal(value) if not isinstance(value, Decimal) else value
    except (InvalidOperation, TypeError, ValueError):
        raise LiteralKindError(f"not a decimal: {value!r}") from None
    if not d.is_finite():
        raise LiteralKindError(f"not a finite decimal: {value!r}")
    if d == 0:
        return Decimal(0)
    return Decimal(format(d.normalize(), "f"))


def format_decimal(d: Decimal) -> str:
    return format(d, "f")


def coerce_literal(kind: LiteralKind, value: Any) -> Literal:
    if kind is LiteralKind.DECIMAL:
        return canonical_decimal(value)
    if kind is LiteralKind.BOOLEAN:
        if not isinstance(value, bool):
            raise LiteralKindError(f"not a boolean: {value!r}")
        return value
    if not isinstance(value, str):
        raise LiteralKindError(f"not a nominal string: {value!r}")
    return value


def literal_matches(kind: LiteralKind, value: Any) -> bool:
    if kind is LiteralKind.DECIMAL:
        return isinstance(value, Decimal) and value.is_finite()
    if kind is LiteralKind.BOOLEAN:
        return isinstance(value, bool)
    return isinstance(value, str)


def literal_text(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Decimal):
        return format_decimal(value)
    return str(value)


def _value_key(value: Any) -> tuple[int, str]:
    if isinstance(value, bool):
        return (2, literal_text(value))
    if isinstance(value, Decimal):
        return (1, literal_text(value))
    return (0, str(value))


def _same(a: Any, b: Any) -> bool:
    return type(a) is type(b) and a == b


@dataclass(frozen=True)
class Assertion:
    kind: str  # "instance_of" | "edge" | "data"
    subject: str
    predicate: str
    object: Any
    attrs: tuple[tuple[str, str], ...] = ()
    provenance: str = ASSERTED

    def sort_key(self) -> tuple:
        return (
            self.subject,
            {INSTANCE_OF: 0, "edge": 1, "data": 2}.get(self.kind, 3),
            self.predicate,
            _value_key(self.object),
            self.attrs,
            self.provenance,
        )

    def __str__(self) -> str:
        obj = self.object
        if self.kind == "data":
            obj = repr(literal_text(obj)) if isinstance(obj, str) else literal_text(obj)
        attrs = "{" + ", ".join(f"{k}: {v}" for k, v in self.attrs) + "}" if self.attrs else ""
        tag = "" if self.provenance == ASSERTED else f" [{self.provenance}]"
        return f"{self.subject} {self.predicate}{attrs} {obj}{tag}"


class KGraph:
    """Store of typed individuals, edges and literal data assertions.

    Mutators enforce the taxonomy signatures when ``strict`` is true (the
    default). Deserialization uses ``strict=False`` so that malformed input
    can be loaded and reported by :func:`validate_wellformed` instead of
    failing at the first bad line.
    """

    def __init__(self, taxonomy: ClassTaxonomy | None = None):
        self.taxonomy = taxonomy or load_builtin_taxonomy()
        self._classes: dict[str, dict[str, set[str]]] = {}
        self._assertions: dict[Assertion, None] = {}
        self._out: dict[tuple[str, str], list[Assertion]] = defaultdict(list)
        self._in: dict[tuple[str, str], list[Assertion]] = defaultdict(list)
        self._by_pred: dict[str, list[Assertion]] = defaultdict(list)
        self.version = 0
        self._fingerprint: tuple[int, str] | None = None

    # -- mutation ---------------------------------------------------------

    def add_node(self, node_id: str, classes: Sequence[str], *, strict: bool = True) -> "KGraph":
        if not isinstance(node_id, str) or not node_id:
            raise ValueError(f"node id must be a non-empty string, got {node_id!r}")
        if node_id in self._classes:
            raise DuplicateNodeError(f"duplicate node id: {node_id!r}")
        if strict:
            if not classes:
                raise ValueError(f"node {node_id!r} needs at least one class")
            classes = [self.taxonomy.resolve(c) for c in classes]
        self._classes[node_id] = {}
        for c in classes:
            self._insert(Assertion(INSTANCE_OF, node_id, INSTANCE_OF, c))
        self.version += 1
        return self

    def add_edge(
        self,
        s: str,
        rel: str,
        o: str,
        attrs: Mapping[str, str] | None = None,
        *,
        strict: bool = True,
    ) -> "KGraph":
        a = Assertion("edge", s, rel, o, tuple(sorted((attrs or {}).items())))
        if strict:
            self._check_edge(a)
        self._insert(a)
        self.version += 1
        return self

    def add_data(self, s: str, rel: str, value: Any, *, strict: bool = True) -> "KGraph":
        if strict:
            sig = self._data_sig(rel)
            self._require_node(s)
            self._check_domain(s, sig)
            value = coerce_literal(sig.range, value)  # type: ignore[arg-type]
        self._insert(Assertion("data", s, rel, value))
        self.version += 1
        return self

    def _add(self, assertion: Assertion) -> bool:
        """Insert a pre-built assertion (any provenance). Returns False on duplicates."""
        if assertion in self._assertions:
            return False
        if assertion.subject not in self._classes and assertion.kind == INSTANCE_OF:
            self._classes[assertion.subject] = {}
        self._insert(assertion)
        self.version += 1
        return True

    def _ensure_node(self, node_id: str) -> None:
        if node_id not in self._classes:
            self._classes[node_id] = {}
            self.version += 1

    def _insert(self, a: Assertion) -> None:
        if a in self._assertions:
            return
        self._assertions[a] = None
        if a.kind == INSTANCE_OF:
            self._classes.setdefault(a.subject, {}).setdefault(a.object, set()).add(a.provenance)
            return
        self._out[(a.subject, a.predicate)].append(a)
        if a.kind == "edge":
            self._in[(a.object, a.predicate)].append(a)
        self._by_pred[a.predicate].append(a)

    # -- signature checks -------------------------------------------------

    def _require_node(self, node_id: str) -> None:
        if node_id not in self._classes:
            raise UnknownNodeError(node_id)

    def _data_sig(self, rel: str) -> RelationSig:
        sig = self.taxonomy.relation_signature(rel)
        if not sig.is_data:
            raise LiteralKindError(f"{rel} relates individuals, not literals")
        return sig

    def _check_domain(self, s: str, sig: RelationSig) -> None:
        if not self.is_a(s, sig.domain):
            raise DomainViolation(
                f"{s} {sig.id}: subject classes {sorted(self.classes(s))} not within {sig.domain}"
            )

    def _check_edge(self, a: Assertion) -> None:
        sig = self.taxonomy.relation_signature(a.predicate)
        if sig.is_data:
            raise RangeViolation(f"{a.predicate} takes a literal, not a node")
        self._require_node(a.subject)
        self._require_node(a.object)
        self._check_domain(a.subject, sig)
        if not self.is_a(a.object, sig.range):  # type: ignore[arg-type]
            raise RangeViolation(
                f"{a.subject} {a.predicate} {a.object}: object classes "
                f"{sorted(self.classes(a.object))} not within {sig.range}"
            )
        problem = attribute_problem(sig, dict(a.attrs))
        if problem:
            raise AttributeViolation(problem)

    # -- queries ----------------------------------------------------------

    @property
    def nodes(self) -> list[str]:
        return list(self._classes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._classes

    def __len__(self) -> int:
        return len(self._assertions)

    @property
    def assertions(self) -> list[Assertion]:
        return list(self._assertions)

    def sorted_assertions(self) -> list[Assertion]:
        return sorted(self._assertions, key=Assertion.sort_key)

    def classes(self, node_id: str, *, include_derived: bool = True) -> set[str]:
        entry = self._classes.get(node_id, {})
        if include_derived:
            return set(entry)
        return {c for c, provs in entry.items() if ASSERTED in provs}

    def asserted_classes(self, node_id: str) -> list[str]:
        return sorted(self.classes(node_id, include_derived=False))

    def is_a(self, node_id: str, class_id: str, *, include_derived: bool = True) -> bool:
        closure = self.taxonomy.closure
        for c, provs in self._classes.get(node_id, {}).items():
            if (include_derived or ASSERTED in provs) and class_id in closure.get(c, ()):
                return True
        return False

    def instances(self, class_id: str, *, include_derived: bool = True) -> list[str]:
        return sorted(n for n in self._classes if self.is_a(n, class_id, include_derived=include_derived))

    def edge_pairs(
        self,
        rel: str,
        s: str | None = None,
        o: str | None = None,
        *,
        include_derived: bool = True,
    ) -> list[tuple[str, str, tuple[tuple[str, str], ...]]]:
        """Edges ``(s, o, attrs)`` for ``rel``, both directions when symmetric."""
        sig = self.taxonomy.relations.get(rel)
        symmetric = sig is not None and sig.symmetric
        out: list[tuple[str, str, tuple]] = []

        def keep(a: Assertion) -> bool:
            return a.kind == "edge" and (include_derived or a.provenance == ASSERTED)

        def forward(sub: str | None, obj: str | None) -> Iterable[Assertion]:
            if sub is not None:
                return (a for a in self._out.get((sub, rel), ()) if obj is None or a.object == obj)
            if obj is not None:
                return self._in.get((obj, rel), ())
            return self._by_pred.get(rel, ())

        for a in forward(s, o):
            if keep(a):
                out.append((a.subject, a.object, a.attrs))
        if symmetric:
            for a in forward(o, s):
                if keep(a):
                    out.append((a.object, a.subject, a.attrs))
        return list(dict.fromkeys(out))

    def objects(self, s: str, rel: str, *, include_derived: bool = True) -> list[str]:
        return list(dict.fromkeys(o for _, o, _ in self.edge_pairs(rel, s=s, include_derived=include_derived)))

    def subjects(self, o: str, rel: str, *, include_derived: bool = True) -> list[str]:
        return list(dict.fromkeys(s for s, _, _ in self.edge_pairs(rel, o=o, include_derived=include_derived)))

    def data_pairs(
        self, rel: str, s: str | None = None, *, include_derived: bool = True
    ) -> list[tuple[str, Any]]:
        source = self._out.get((s, rel), ()) if s is not None else self._by_pred.get(rel, ())
        return [
            (a.subject, a.object)
            for a in source
            if a.kind == "data" and (include_derived or a.provenance == ASSERTED)
        ]

    def values(self, s: str, rel: str, *, include_derived: bool = True) -> list[Any]:
        return [v for _, v in self.data_pairs(rel, s=s, include_derived=include_derived)]

    # -- whole-graph helpers ----------------------------------------------

    def copy(self) -> "KGraph":
        g = KGraph(self.taxonomy)
        for n in self._classes:
            g._classes[n] = {}
        for a in self._assertions:
            g._insert(a)
        g.version = self.version
        return g

    def fingerprint(self) -> str:
        """SHA-256 of the compact canonical document, cached per version."""
        if self._fingerprint and self._fingerprint[0] == self.version:
            return self._fingerprint[1]
        from .serialize import to_document

        text = json.dumps(to_document(self), sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        self._fingerprint = (self.version, digest)
        return digest


def attribute_problem(sig: RelationSig, attrs: Mapping[str, str]) -> str | None:
    for name, allowed in sorted(sig.attributes.items()):
        if name not in attrs:
            return f"{sig.id} requires attribute {name!r} (one of {sorted(allowed)})"
        if attrs[name] not in allowed:
            return f"{sig.id}: {name}={attrs[name]!r} not in {sorted(allowed)}"
    extra = sorted(set(attrs) - set(sig.attributes))
    if extra:
        return f"{sig.id} does not take attribute(s) {extra}"
    return None


# -- pattern matching ---------------------------------------------------------


def is_var(term: Any) -> bool:
    return isinstance(term, str) and term.startswith("?") and len(term) > 1


@dataclass(frozen=True)
class _Template:
    s: str
    p: str
    o: Any
    attrs: tuple[tuple[str, str], ...]
    kind: str  # instance_of | edge | data

    def vars(self) -> set[str]:
        return {t for t in (self.s, self.o) if is_var(t)}


def _compile(graph: KGraph, pattern: Sequence[Sequence[Any]]) -> list[_Template]:
    tax = graph.taxonomy
    out = []
    for t in pattern:
        if not isinstance(t, (tuple, list)) or len(t) not in (3, 4):
            raise MalformedPatternError(f"template must be (s, p, o[, attrs]): {t!r}")
        s, p, o = t[0], t[1], t[2]
        attrs = t[3] if len(t) == 4 else None
        if not isinstance(s, str) or not s:
            raise MalformedPatternError(f"subject must be a variable or node id: {t!r}")
        if p == INSTANCE_OF:
            if is_var(o) or not isinstance(o, str):
                raise MalformedPatternError(f"instance_of needs a class constant: {t!r}")
            try:
                o = tax.resolve(o)
            except UnknownClassError:
                raise MalformedPatternError(f"unknown class in pattern: {o!r}") from None
            kind = INSTANCE_OF
        elif p == HAS_VALUE:
            kind = "data"
        else:
            try:
                sig = tax.relation_signature(p)
            except UnknownRelationError:
                raise MalformedPatternError(f"unknown relation in pattern: {p!r}") from None
            kind = "data" if sig.is_data else "edge"
            if kind == "data" and not is_var(o):
                try:
                    o = coerce_literal(sig.range, o)  # type: ignore[arg-type]
                except LiteralKindError as exc:
                    raise MalformedPatternError(str(exc)) from None
        if attrs and kind != "edge":
            raise MalformedPatternError(f"only edge templates take attributes: {t!r}")
        out.append(_Template(s, p, o, tuple(sorted((attrs or {}).items())), kind))
    return out


def _resolve(term: Any, binding: dict[str, Any]) -> Any:
    return binding.get(term, term) if is_var(term) else term


def _candidates(
    graph: KGraph, t: _Template, binding: dict[str, Any], include_derived: bool
) -> Iterator[dict[str, Any]]:
    s = _resolve(t.s, binding)
    o = _resolve(t.o, binding)
    s_free = is_var(s)
    o_free = is_var(o)

    def extend(sv: Any, ov: Any) -> dict[str, Any] | None:
        new = dict(binding)
        for term, val in ((t.s, sv), (t.o, ov)):
            if is_var(term):
                if term in new and not _same(new[term], val):
                    return None
                new[term] = val
        return new

    if t.kind == INSTANCE_OF:
        nodes = graph.nodes if s_free else ([s] if s in graph else [])
        for n in nodes:
            if graph.is_a(n, t.o, include_derived=include_derived):
                b = extend(n, t.o)
                if b is not None:
                    yield b
    elif t.kind == "edge":
        pairs = graph.edge_pairs(
            t.p,
            s=None if s_free else s,
            o=None if o_free else o,
            include_derived=include_derived,
        )
        want = set(t.attrs)
        for sv, ov, attrs in pairs:
            if want and not want <= set(attrs):
                continue
            b = extend(sv, ov)
            if b is not None:
                yield b
    else:
        rels = VALUE_RELATIONS if t.p == HAS_VALUE else (t.p,)
        for rel in rels:
            for sv, val in graph.data_pairs(rel, s=None if s_free else s, include_derived=include_derived):
                if not o_free and not _same(val, o):
                    continue
                b = extend(sv, val)
                if b is not None:
                    yield b


def match(
    graph: KGraph,
    pattern: Sequence[Sequence[Any]],
    *,
    include_derived: bool = True,
) -> list[dict[str, Any]]:
    """All variable bindings satisfying every template of ``pattern``.

    Templates are ``(s, p, o)`` or ``(s, p, o, attrs)`` tuples; terms
    starting with ``?`` are variables. ``p`` is ``"instance_of"`` (class
    tests use the subclass closure), a relation id, or ``"has_value"``
    for any literal value. Results are deduplicated and sorted by the
    values of the variables taken in name order.
    """
    templates = _compile(graph, pattern)
    results: dict[tuple, dict[str, Any]] = {}

    def solve(remaining: list[_Template], binding: dict[str, Any]) -> None:
        if not remaining:
            key = tuple((k, _value_key(binding[k])) for k in sorted(binding))
            results.setdefault(key, binding)
            return
        # most-bound template first
        best = max(
            range(len(remaining)),
            key=lambda i: (
                sum(1 for term in (remaining[i].s, remaining[i].o) if not is_var(_resolve(term, binding))),
                -i,
            ),
        )
        t = remaining[best]
        rest = remaining[:best] + remaining[best + 1 :]
        for b in _candidates(graph, t, binding, include_derived):
            solve(rest, b)

    solve(templates, {})
    return [results[k] for k in sorted(results)]


# -- pipeline structure -------------------------------------------------------


def integrity_inputs(graph: KGraph, process: str, *, include_derived: bool = False) -> list[str]:
    """Representations and information content consumed by ``process``.

    Representation and ICE inputs count directly; an information bearing
    entity contributes the ICEs that generically depend on it.
    """
    out: dict[str, None] = {}
    for x in graph.objects(process, "has_input", include_derived=include_derived):
        if graph.is_a(x, "Representation", include_derived=include_derived) or graph.is_a(
            x, "InformationContentEntity", include_derived=include_derived
        ):
            out[x] = None
        elif graph.is_a(x, "InformationBearingEntity", include_derived=include_derived):
            for ice in graph.subjects(x, "generically_depends_on", include_derived=include_derived):
                out[ice] = None
    return sorted(out)


def pipeline_dependencies(graph: KGraph, *, include_derived: bool = False) -> dict[str, set[str]]:
    """Map each process to the processes whose outputs it consumes.

    ``p1`` precedes ``p2`` when some output of ``p1`` is a direct input of
    ``p2``, one of its integrity inputs, or a representation concretizing
    one of those inputs.
    """
    processes = graph.instances("Process", include_derived=include_derived)
    producers: dict[str, set[str]] = defaultdict(set)
    for p in processes:
        for x in graph.objects(p, "has_output", include_derived=include_derived):
            producers[x].add(p)
    deps: dict[str, set[str]] = {}
    for p in processes:
        relevant = set(graph.objects(p, "has_input", include_derived=include_derived))
        for r in integrity_inputs(graph, p, include_derived=include_derived):
            relevant.add(r)
            relevant.update(graph.subjects(r, "concretizes", include_derived=include_derived))
        deps[p] = {q for x in relevant for q in producers.get(x, ())}
    return deps


def find_pipeline_cycle(deps: Mapping[str, set[str]]) -> list[str] | None:
    sorter = graphlib.TopologicalSorter()
    for p in sorted(deps):
        sorter.add(p, *sorted(deps[p]))
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        return list(exc.args[1])
    return None


def topological_processes(deps: Mapping[str, set[str]]) -> list[str]:
    """Deterministic topological order; caller must have ruled out cycles."""
    sorter = graphlib.TopologicalSorter()
    for p in sorted(deps):
        sorter.add(p, *sorted(deps[p]))
    sorter.prepare()
    order: list[str] = []
    while sorter.is_active():
        ready = sorted(sorter.get_ready())
        order.extend(ready)
        sorter.done(*ready)
    return order


# -- well-formedness ----------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    assertion: Assertion | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "rule": self.rule,
            "message": self.message,
            "assertion": str(self.assertion) if self.assertion else None,
        }


def validate_wellformed(graph: KGraph) -> list[Violation]:
    tax = graph.taxonomy
    out: list[Violation] = []
    for n in sorted(graph.nodes):
        if not graph.classes(n, include_derived=False):
            out.append(Violation("untyped-node", f"node {n!r} has no asserted class"))
    for a in graph.sorted_assertions():
        if a.provenance not in PROVENANCES:
            out.append(Violation("provenance", f"unknown provenance {a.provenance!r}", a))
        if a.kind == INSTANCE_OF:
            if a.object not in tax.classes:
                out.append(Violation("unknown-class", f"unknown class {a.object!r}", a))
            continue
        sig = tax.relations.get(a.predicate)
        if sig is None:
            out.append(Violation("unknown-relation", f"unknown relation {a.predicate!r}", a))
            continue
        if a.subject not in graph:
            out.append(Violation("dangling-reference", f"subject {a.subject!r} does not exist", a))
        elif not graph.is_a(a.subject, sig.domain):
            out.append(Violation("domain", f"subject {a.subject!r} is not a {sig.domain}", a))
        if a.kind == "data":
            if not sig.is_data:
                out.append(Violation("range", f"{a.predicate} expects a node, got a literal", a))
            elif not literal_matches(sig.range, a.object):  # type: ignore[arg-type]
                out.append(
                    Violation(
                        "literal-kind",
                        f"{a.predicate} expects a {sig.range.value} literal, got {a.object!r}",  # type: ignore[union-attr]
                        a,
                    )
                )
            continue
        if sig.is_data:
            out.append(Violation("range", f"{a.predicate} expects a literal, got node {a.object!r}", a))
            continue
        if a.object not in graph:
            out.append(Violation("dangling-reference", f"object {a.object!r} does not exist", a))
        elif not graph.is_a(a.object, sig.range):  # type: ignore[arg-type]
            out.append(Violation("range", f"object {a.object!r} is not a {sig.range}", a))
        problem = attribute_problem(sig, dict(a.attrs))
        if problem:
            out.append(Violation("attribute", problem, a))
    cycle = find_pipeline_cycle(pipeline_dependencies(graph))
    if cycle:
        out.append(Violation("pipeline-cycle", "process pipeline cycle: " + " -> ".join(cycle)))
    return out
