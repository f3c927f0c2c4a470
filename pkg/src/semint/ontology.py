"""Semantic layer: class vocabularies, alignment of inputs to triples, and SELECT queries.

Vocabulary files are line oriented::

    # comment
    class Plant
    subclass MugumoTree Plant
    property ikon:indicator ikon:Observation LivingThings

Classes without an explicit parent hang directly under ``owl:Thing``.
"""

from __future__ import annotations

import graphlib
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable

from .errors import (
    CycleDetected,
    DuplicateClass,
    OntologyError,
    RuleSyntaxError,
    UnboundProjection,
    UndeclaredClass,
)
from .model import IKObservation, SensorReading
from .store import (
    Literal,
    Term,
    Triple,
    TriplePattern,
    TripleStore,
    Variable,
    parse_term,
    term_sort_key,
)

THING = "owl:Thing"
LITERAL_RANGE = "Literal"

RDF_TYPE = "rdf:type"
SSN_OBSERVATION = "ssn:Observation"
IKON_OBSERVATION = "ikon:Observation"


def render_float(x: float) -> str:
    """Shortest decimal text that parses back to the same double."""
    return repr(float(x))


@dataclass(frozen=True)
class PropertyDecl:
    name: str
    domain: str
    range: str


@dataclass(frozen=True)
class Vocabulary:
    classes: frozenset[str]
    subclass_edges: frozenset[tuple[str, str]]
    properties: tuple[PropertyDecl, ...] = ()

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, list[str]] = {c: [] for c in self.classes}
        for child, parent in self.subclass_edges:
            out[child].append(parent)
        return {c: tuple(sorted(ps)) for c, ps in out.items()}

    @cached_property
    def _ancestors(self) -> dict[str, frozenset[str]]:
        order = graphlib.TopologicalSorter(
            {c: self.parents[c] for c in self.classes}
        ).static_order()
        anc: dict[str, frozenset[str]] = {}
        for c in order:  # parents come first
            acc = {c}
            for p in self.parents[c]:
                acc |= anc[p]
            anc[c] = frozenset(acc)
        return anc

    def ancestors(self, cls: str) -> frozenset[str]:
        self._require(cls)
        return self._ancestors[cls]

    def children(self, cls: str) -> list[str]:
        self._require(cls)
        return sorted(c for c, p in self.subclass_edges if p == cls)

    def _require(self, cls: str) -> None:
        if cls not in self.classes:
            raise UndeclaredClass(cls)

    def most_specific_type(self, name: str) -> str | None:
        """Class an individual named like a declared class is typed with, or None."""
        if name not in self.classes or name == THING:
            return None
        parents = self.parents[name]
        specific = [p for p in parents if not any(p != q and p in self._ancestors[q] for q in parents)]
        return min(specific) if specific else None

    def merge(self, other: "Vocabulary") -> "Vocabulary":
        dup = (self.classes & other.classes) - {THING}
        if dup:
            raise DuplicateClass(min(dup))
        return _build(
            self.classes | other.classes,
            self.subclass_edges | other.subclass_edges,
            self.properties + other.properties,
        )


def _build(classes, edges, properties) -> Vocabulary:
    classes = set(classes) | {THING}
    edges = set(edges)
    for child, parent in edges:
        for c in (child, parent):
            if c not in classes:
                raise UndeclaredClass(c)
        if child == THING and parent != THING:
            raise OntologyError(f"{THING} is the root and cannot have a parent")
    has_parent = {c for c, _ in edges}
    for c in classes - has_parent - {THING}:
        edges.add((c, THING))
    graph: dict[str, set[str]] = {c: set() for c in classes}
    for child, parent in edges:
        graph[child].add(parent)
    try:
        tuple(graphlib.TopologicalSorter(graph).static_order())
    except graphlib.CycleError as exc:
        cycle = list(exc.args[1])
        raise CycleDetected(cycle[0], cycle) from None
    for prop in properties:
        for c in (prop.domain, prop.range):
            if c != LITERAL_RANGE and c not in classes:
                raise UndeclaredClass(c)
    return Vocabulary(frozenset(classes), frozenset(edges), tuple(properties))


def load_vocabulary(text: str) -> Vocabulary:
    classes: list[str] = []
    edges: list[tuple[str, str]] = []
    props: list[PropertyDecl] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        if kind == "class" and len(args) == 1:
            name = args[0]
            if name == THING:
                continue
            if name in seen:
                raise DuplicateClass(name)
            seen.add(name)
            classes.append(name)
        elif kind == "subclass" and len(args) == 2:
            edges.append((args[0], args[1]))
        elif kind == "property" and len(args) == 3:
            props.append(PropertyDecl(*args))
        else:
            raise OntologyError(f"line {lineno}: cannot parse {raw.strip()!r}")
    return _build(classes, edges, props)


def load_vocabularies(texts: Iterable[str]) -> Vocabulary:
    vocab = load_vocabulary("")
    for text in texts:
        vocab = vocab.merge(load_vocabulary(text))
    return vocab


def bundled_vocabulary(name: str) -> str:
    """Text of a vocabulary shipped with the package (``ikon`` or ``ssn``)."""
    return resources.files("semint.data").joinpath(f"{name}.vocab").read_text(encoding="utf-8")


def is_subclass_of(vocab: Vocabulary, a: str, b: str) -> bool:
    vocab._require(b)
    return b in vocab.ancestors(a)


# -- alignment ---------------------------------------------------------------

def align_sensor(reading: SensorReading, obs_id: str) -> list[Triple]:
    return [
        Triple(obs_id, RDF_TYPE, SSN_OBSERVATION),
        Triple(obs_id, "ssn:observedBy", reading.sensor_id),
        Triple(obs_id, "ssn:observedProperty", reading.property),
        Triple(obs_id, "ssn:hasValue", Literal(render_float(reading.value))),
        Triple(obs_id, "ssn:observedAt", Literal(str(reading.timestamp))),
    ]


def align_ik(obs: IKObservation, obs_id: str, vocab: Vocabulary | None = None) -> list[Triple]:
    triples = [
        Triple(obs_id, RDF_TYPE, IKON_OBSERVATION),
        Triple(obs_id, "ikon:indicator", obs.indicator),
        Triple(obs_id, "ikon:state", obs.state),
        Triple(obs_id, "ikon:cf", Literal(render_float(obs.confidence))),
        Triple(obs_id, "ikon:lat", Literal(render_float(obs.latitude))),
        Triple(obs_id, "ikon:lon", Literal(render_float(obs.longitude))),
        Triple(obs_id, "ikon:observedAt", Literal(str(obs.timestamp))),
    ]
    if vocab is not None:
        cls = vocab.most_specific_type(obs.indicator)
        if cls is not None:
            triples.append(Triple(obs.indicator, RDF_TYPE, cls))
    return triples


# -- SPARQL subset -----------------------------------------------------------

@dataclass(frozen=True)
class SelectQuery:
    variables: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]

    def __post_init__(self):
        bound = {v for p in self.patterns for v in p.variables}
        for v in self.variables:
            if v not in bound:
                raise UnboundProjection(v)

    def __str__(self) -> str:
        head = " ".join("?" + v for v in self.variables)
        body = " . ".join(str(p) for p in self.patterns)
        return f"SELECT {head} WHERE {{ {body} }}"


@dataclass
class ResultTable:
    vars: list[str]
    rows: list[tuple[Term, ...]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"vars": list(self.vars), "rows": [[term_sort_key(t) for t in row] for row in self.rows]}

    def format(self) -> str:
        lines = ["\t".join("?" + v for v in self.vars)]
        lines += ["\t".join(term_sort_key(t) for t in row) for row in self.rows]
        return "\n".join(lines)


_QTOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lit>"(?:[^"\\]|\\.)*")
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}])
  | (?P<dot>\.(?=\s|$|}))
  | (?P<ident>[^\s{}"?](?:[^\s{}"]*[^\s{}".])?)
    """,
    re.VERBOSE,
)


def _query_tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _QTOKEN.match(text, pos)
        if not m:
            raise RuleSyntaxError(pos, "a term", text[pos])
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


def parse_select(text: str) -> SelectQuery:
    toks = _query_tokens(text)
    i = 0

    def keyword(word: str) -> None:
        nonlocal i
        kind, val, pos = toks[i]
        if kind != "ident" or val.upper() != word:
            raise RuleSyntaxError(pos, repr(word), val)
        i += 1

    keyword("SELECT")
    variables = []
    while toks[i][0] == "var":
        variables.append(toks[i][1][1:])
        i += 1
    if not variables:
        raise RuleSyntaxError(toks[i][2], "a projected ?variable", toks[i][1])
    keyword("WHERE")
    if toks[i][1] != "{":
        raise RuleSyntaxError(toks[i][2], "'{'", toks[i][1])
    i += 1
    patterns = []
    while toks[i][1] != "}":
        terms = []
        for _ in range(3):
            kind, val, pos = toks[i]
            if kind not in ("var", "lit", "ident"):
                raise RuleSyntaxError(pos, "a term", val)
            try:
                terms.append(parse_term(val))
            except ValueError:
                raise RuleSyntaxError(pos, "a term", val) from None
            i += 1
        patterns.append(TriplePattern(*terms))
        if toks[i][0] == "dot":
            i += 1
        elif toks[i][1] != "}":
            raise RuleSyntaxError(toks[i][2], "'.' or '}'", toks[i][1])
    i += 1
    if toks[i][0] != "eof":
        raise RuleSyntaxError(toks[i][2], "end of query", toks[i][1])
    return SelectQuery(tuple(variables), tuple(patterns))


def _substitute(p: TriplePattern, binding: dict[str, Term]) -> TriplePattern:
    terms = [binding.get(t.name, t) if isinstance(t, Variable) else t for t in p]
    if any(isinstance(t, Literal) for t in terms[:2]):
        return None  # literals never appear as subject or predicate
    return TriplePattern(*terms)


def select(store: TripleStore, q: SelectQuery) -> ResultTable:
    """Natural join of the patterns, projected, deduplicated and sorted."""
    if isinstance(q, str):
        q = parse_select(q)
    with store.lock.read():
        partial: list[dict[str, Term]] = [{}]
        for p in q.patterns:
            nxt = []
            for b in partial:
                sp = _substitute(p, b)
                if sp is None:
                    continue
                for extra in store.match(sp):
                    nxt.append({**b, **extra})
            partial = nxt
            if not partial:
                break
    rows = {tuple(b[v] for v in q.variables) for b in partial}
    ordered = sorted(rows, key=lambda row: tuple(term_sort_key(t) for t in row))
    return ResultTable(list(q.variables), ordered)

