"""Graph interchange formats.

Canonical form is a JSON document::

    {"meta": {"format_version": "1"},
     "nodes": [{"id": ..., "classes": [...]}],
     "edges": [{"s": ..., "rel": ..., "o": ..., "attrs": {...}}],
     "data":  [{"s": ..., "rel": ..., "value": ...}]}

Entries are sorted and keys ordered so the output is byte-stable. Derived
classes appear under ``derived_classes``; edges and data written by the
reasoner carry an explicit ``provenance`` key.

The triples form is one ``<s> <p> <o> .`` statement per line. Edge
attributes and non-asserted provenance are written as reified statement
blocks on blank nodes, which the importer folds back into the graph.
"""

from __future__ import annotations

import json
import re
from decimal import Decimal
from typing import Any
from urllib.parse import quote, unquote

from .errors import FormatError
from .graph import (
    ASSERTED,
    INSTANCE_OF,
    Assertion,
    KGraph,
    canonical_decimal,
    format_decimal,
    literal_text,
)
from .taxonomy import ClassTaxonomy, LiteralKind

FORMAT_VERSION = "1"


def dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _json_value(value: Any) -> Any:
    if isinstance(value, Decimal):
        return format_decimal(value)
    return value


def to_document(graph: KGraph, *, meta: dict[str, Any] | None = None) -> dict[str, Any]:
    nodes = []
    for n in sorted(graph.nodes):
        entry: dict[str, Any] = {"id": n, "classes": graph.asserted_classes(n)}
        derived = sorted(
            c for c, provs in graph._classes[n].items() if any(p != ASSERTED for p in provs)
        )
        if derived:
            entry["derived_classes"] = derived
        nodes.append(entry)
    edges = []
    data = []
    for a in graph.sorted_assertions():
        if a.kind == "edge":
            e: dict[str, Any] = {"s": a.subject, "rel": a.predicate, "o": a.object, "attrs": dict(a.attrs)}
            if a.provenance != ASSERTED:
                e["provenance"] = a.provenance
            edges.append(e)
        elif a.kind == "data":
            d: dict[str, Any] = {"s": a.subject, "rel": a.predicate, "value": _json_value(a.object)}
            if a.provenance != ASSERTED:
                d["provenance"] = a.provenance
            data.append(d)
    return {"meta": {"format_version": FORMAT_VERSION, **(meta or {})}, "nodes": nodes, "edges": edges, "data": data}


def dumps(graph: KGraph, *, meta: dict[str, Any] | None = None) -> str:
    return dump_json(to_document(graph, meta=meta))


def _parse_value(graph: KGraph, rel: str, raw: Any) -> Any:
    """Interpret a JSON value under the relation's literal kind; keep bad input raw."""
    sig = graph.taxonomy.relations.get(rel)
    if sig is not None and sig.range is LiteralKind.DECIMAL and isinstance(raw, (str, int)) and not isinstance(raw, bool):
        try:
            return canonical_decimal(raw)
        except ValueError:
            return raw
    if isinstance(raw, float):
        return canonical_decimal(raw)
    return raw


def from_document(doc: Any, taxonomy: ClassTaxonomy | None = None) -> KGraph:
    if not isinstance(doc, dict):
        raise FormatError("graph document must be a JSON object")
    version = (doc.get("meta") or {}).get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported graph format_version {version!r}")
    g = KGraph(taxonomy)
    try:
        for n in doc.get("nodes", []):
            g.add_node(n["id"], list(n.get("classes", [])), strict=False)
            for c in n.get("derived_classes", []):
                g._add(Assertion(INSTANCE_OF, n["id"], INSTANCE_OF, c, provenance="derived"))
        for e in doc.get("edges", []):
            attrs = tuple(sorted((e.get("attrs") or {}).items()))
            g._add(Assertion("edge", e["s"], e["rel"], e["o"], attrs, e.get("provenance", ASSERTED)))
        for d in doc.get("data", []):
            value = _parse_value(g, d["rel"], d["value"])
            g._add(Assertion("data", d["s"], d["rel"], value, (), d.get("provenance", ASSERTED)))
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed graph document: {exc!r}") from None
    return g


def loads(text: str, taxonomy: ClassTaxonomy | None = None) -> KGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from None
    return from_document(doc, taxonomy)


# -- triples ------------------------------------------------------------------

_IRI_SAFE = ":/#@!$&'()*+,;=-._~"
_REIFY = {"subject": "rdf:subject", "predicate": "rdf:predicate", "object": "rdf:object"}
_PROVENANCE = "cpo:provenance"
_ATTR_PREFIX = "cpo:attr:"


def _iri(term: str) -> str:
    return f"<{quote(term, safe=_IRI_SAFE)}>"


def _literal(value: Any) -> str:
    text = json.dumps(literal_text(value), ensure_ascii=False)
    if isinstance(value, bool):
        return f"{text}^^<boolean>"
    if isinstance(value, Decimal):
        return f"{text}^^<decimal>"
    return text


def _object_term(a: Assertion) -> str:
    return _literal(a.object) if a.kind == "data" else _iri(a.object)


def to_triples(graph: KGraph) -> str:
    lines: list[str] = []
    blank = 0
    for a in graph.sorted_assertions():
        if a.provenance == ASSERTED:
            lines.append(f"{_iri(a.subject)} {_iri(a.predicate)} {_object_term(a)} .")
        if a.provenance == ASSERTED and not a.attrs:
            continue
        blank += 1
        b = f"_:r{blank}"
        lines.append(f"{b} <{_REIFY['subject']}> {_iri(a.subject)} .")
        lines.append(f"{b} <{_REIFY['predicate']}> {_iri(a.predicate)} .")
        lines.append(f"{b} <{_REIFY['object']}> {_object_term(a)} .")
        for k, v in a.attrs:
            lines.append(f"{b} <{_ATTR_PREFIX}{k}> {_literal(v)} .")
        if a.provenance != ASSERTED:
            lines.append(f"{b} <{_PROVENANCE}> {_literal(a.provenance)} .")
    return "".join(line + "\n" for line in lines)


_TERM = r'(<[^>]*>|_:[A-Za-z0-9]+|"(?:[^"\\]|\\.)*"(?:\^\^<[a-z]+>)?)'
_LINE = re.compile(rf"^\s*{_TERM}\s+{_TERM}\s+{_TERM}\s*\.\s*$")


def _parse_term(tok: str) -> tuple[str, Any]:
    if tok.startswith("<"):
        return "iri", unquote(tok[1:-1])
    if tok.startswith("_:"):
        return "blank", tok
    body, _, dtype = tok.partition("^^")
    text = json.loads(body)
    if dtype == "<decimal>":
        return "literal", canonical_decimal(text)
    if dtype == "<boolean>":
        return "literal", text == "true"
    return "literal", text


def from_triples(text: str, taxonomy: ClassTaxonomy | None = None) -> KGraph:
    g = KGraph(taxonomy)
    plain: list[tuple[str, str, tuple[str, Any]]] = []
    blocks: dict[str, dict[str, Any]] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _LINE.match(line)
        if not m:
            raise FormatError(f"line {lineno}: not a triple: {line!r}")
        (sk, s), (pk, p), obj = (_parse_term(t) for t in m.groups())
        if pk != "iri":
            raise FormatError(f"line {lineno}: predicate must be an IRI")
        if sk == "blank":
            block = blocks.setdefault(s, {"attrs": {}})
            if p.startswith(_ATTR_PREFIX):
                block["attrs"][p[len(_ATTR_PREFIX):]] = obj[1]
            elif p == _PROVENANCE:
                block["provenance"] = obj[1]
            else:
                key = {v: k for k, v in _REIFY.items()}.get(p)
                if key is None:
                    raise FormatError(f"line {lineno}: unknown reification predicate {p!r}")
                block[key] = obj
            continue
        plain.append((s, p, obj))

    def to_assertion(s: str, p: str, obj: tuple[str, Any], attrs: dict, prov: str) -> Assertion:
        kind_, value = obj
        if p == INSTANCE_OF:
            return Assertion(INSTANCE_OF, s, p, value, provenance=prov)
        if kind_ == "literal":
            return Assertion("data", s, p, value, provenance=prov)
        return Assertion("edge", s, p, value, tuple(sorted(attrs.items())), prov)

    reified_asserted: set[tuple[str, str, Any]] = set()
    pending: list[Assertion] = []
    for b in sorted(blocks, key=lambda k: int(k[3:]) if k[3:].isdigit() else 0):
        block = blocks[b]
        try:
            s = block["subject"][1]
            p = block["predicate"][1]
            obj = block["object"]
        except KeyError:
            raise FormatError(f"incomplete reified statement {b}") from None
        prov = block.get("provenance", ASSERTED)
        if prov == ASSERTED:
            reified_asserted.add((s, p, obj[1] if obj[0] != "literal" else repr(obj[1])))
        pending.append(to_assertion(s, p, obj, block["attrs"], prov))

    classes_first = [t for t in plain if t[1] == INSTANCE_OF]
    for s, _, (_, c) in classes_first:
        g._add(Assertion(INSTANCE_OF, s, INSTANCE_OF, c))
    for s, p, obj in plain:
        if p == INSTANCE_OF:
            continue
        key = (s, p, obj[1] if obj[0] != "literal" else repr(obj[1]))
        if key in reified_asserted:
            continue
        g._ensure_node(s)
        if obj[0] == "iri":
            g._ensure_node(obj[1])
        g._add(to_assertion(s, p, obj, {}, ASSERTED))
    for a in pending:
        g._ensure_node(a.subject)
        g._add(a)
    return g
