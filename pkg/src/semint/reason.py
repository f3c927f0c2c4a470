"""Deductive layer: drought rules, certainty-factor algebra and forward chaining.

Rule syntax::

    RULE drought DOMAIN "INDIGENOUS KNOWLEDGE"
    IF (MugumoTree is Flowering AND MoonSize is Full)
    THEN Drought [METEOROLOGICAL && AGRICULTURAL] CF 10%

Antecedents combine with ``min``; a firing is ``rule_cf * min(...)``; parallel
evidence for one conclusion combines as ``a + b(1 - a)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .errors import (
    CfOutOfRange,
    DuplicateAntecedent,
    EmptyAntecedents,
    ReasonError,
    RuleSyntaxError,
)
from .model import CertaintyFactor, Domain, Fact, Recommendation, order_categories

INFERRED = "Inferred"


def combine_cf(a: float, b: float) -> CertaintyFactor:
    a, b = CertaintyFactor(a), CertaintyFactor(b)
    # Evaluated with the larger argument first: exact commutativity, and
    # monotone under rounding in both arguments.
    hi, lo = (float(a), float(b)) if a >= b else (float(b), float(a))
    return CertaintyFactor(min(1.0, hi + lo * (1.0 - hi)))


@dataclass(frozen=True)
class InferenceRule:
    name: str
    domain_tag: str
    antecedents: tuple[tuple[str, str], ...]
    event: str
    categories: tuple[str, ...]
    rule_cf: CertaintyFactor

    def __post_init__(self):
        if not self.antecedents:
            raise EmptyAntecedents()
        seen = set()
        for pair in self.antecedents:
            if pair in seen:
                raise DuplicateAntecedent(*pair)
            seen.add(pair)
        if not self.categories:
            raise ReasonError(f"rule {self.name}: conclusion needs at least one category")
        object.__setattr__(self, "rule_cf", CertaintyFactor(self.rule_cf))

    @property
    def conclusion(self) -> tuple[str, tuple[str, ...]]:
        return (self.event, self.categories)

    def __str__(self) -> str:
        ants = " AND ".join(f"{s} is {st}" for s, st in self.antecedents)
        cats = " && ".join(self.categories)
        return (
            f'RULE {self.name} DOMAIN "{self.domain_tag}" IF ({ants}) '
            f"THEN {self.event} [{cats}] CF {float(self.rule_cf)!r}"
        )


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_\-]*)
  | (?P<punct>&&|=>|[\[\]()%])
    """,
    re.VERBOSE,
)

_KEYWORDS = {"RULE", "DOMAIN", "IF", "AND", "THEN", "CF"}


def _tokens(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RuleSyntaxError(pos, "a token", text[pos])
        if m.lastgroup != "ws":
            out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _RuleParser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def at_keyword(self, word: str) -> bool:
        kind, val, _ = self.peek()
        return kind == "name" and val == word

    def keyword(self, word: str) -> None:
        if not self.at_keyword(word):
            _, val, pos = self.peek()
            raise RuleSyntaxError(pos, repr(word), val)
        self.i += 1

    def punct(self, p: str) -> None:
        kind, val, pos = self.peek()
        if kind != "punct" or val != p:
            raise RuleSyntaxError(pos, repr(p), val)
        self.i += 1

    def name(self, what: str) -> str:
        kind, val, pos = self.peek()
        if kind != "name" or val in _KEYWORDS:
            raise RuleSyntaxError(pos, what, val)
        self.i += 1
        return val

    def rule(self) -> InferenceRule:
        self.keyword("RULE")
        name = self.name("a rule name")
        self.keyword("DOMAIN")
        kind, val, pos = self.peek()
        if kind != "string":
            raise RuleSyntaxError(pos, "a quoted domain", val)
        self.i += 1
        domain = val[1:-1]
        self.keyword("IF")
        if_pos = self.peek()[2]
        parens = self.peek()[:2] == ("punct", "(")
        if parens:
            self.i += 1
        antecedents = []
        if not (self.at_keyword("THEN") or self.peek()[1] == ")"):
            antecedents.append(self.clause())
            while self.at_keyword("AND"):
                self.i += 1
                antecedents.append(self.clause())
        if parens:
            self.punct(")")
        if not antecedents:
            raise EmptyAntecedents(if_pos)
        self.keyword("THEN")
        event = self.name("a conclusion event")
        self.punct("[")
        cats = [self.name("a category")]
        while self.peek()[1] == "&&":
            self.i += 1
            cats.append(self.name("a category"))
        self.punct("]")
        self.keyword("CF")
        cf = self.cf()
        if len(set(antecedents)) != len(antecedents):
            dup = next(a for a in antecedents if antecedents.count(a) > 1)
            raise DuplicateAntecedent(*dup)
        return InferenceRule(name, domain, tuple(antecedents), event, tuple(dict.fromkeys(cats)), cf)

    def clause(self) -> tuple[str, str]:
        subject = self.name("an antecedent subject")
        kind, val, pos = self.peek()
        if val not in ("is", "are"):
            raise RuleSyntaxError(pos, "'is'", val)
        self.i += 1
        return subject, self.name("an antecedent state")

    def cf(self) -> CertaintyFactor:
        kind, val, pos = self.peek()
        if kind != "number":
            raise RuleSyntaxError(pos, "a certainty factor", val)
        self.i += 1
        value = float(val)
        if self.peek()[1] == "%":
            self.i += 1
            value = value / 100.0
        if not 0.0 <= value <= 1.0:
            raise CfOutOfRange(val)
        return CertaintyFactor(value)


def parse_rule(text: str) -> InferenceRule:
    p = _RuleParser(text)
    rule = p.rule()
    kind, val, pos = p.peek()
    if kind != "eof":
        raise RuleSyntaxError(pos, "end of rule", val)
    return rule


def parse_rules(text: str) -> list[InferenceRule]:
    p = _RuleParser(text)
    rules = []
    while p.peek()[0] != "eof":
        rules.append(p.rule())
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise ReasonError("duplicate inference rule names")
    return rules


# -- fact base ----------------------------------------------------------------

class FactBase(Mapping[tuple[str, str], Fact]):
    """At most one fact per (subject, state); re-assertion combines certainty."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self._facts: dict[tuple[str, str], Fact] = {}
        for f in facts:
            self.assert_fact(f)

    def __getitem__(self, key: tuple[str, str]) -> Fact:
        return self._facts[key]

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __repr__(self) -> str:
        return f"FactBase({list(self._facts.values())!r})"

    def copy(self) -> "FactBase":
        fb = FactBase()
        fb._facts = dict(self._facts)
        return fb

    def assert_fact(self, fact: Fact) -> Fact:
        old = self._facts.get(fact.key)
        if old is not None:
            fact = Fact(
                fact.subject,
                fact.state,
                combine_cf(old.cf, fact.cf),
                old.domain,
                max(old.timestamp, fact.timestamp),
            )
        self._facts[fact.key] = fact
        return fact

    def facts(self) -> list[Fact]:
        return list(self._facts.values())


def facts_from_pipeline(ik_facts: Iterable[Fact], sensor_facts: Iterable[Fact]) -> FactBase:
    fb = FactBase()
    for f in list(ik_facts) + list(sensor_facts):
        fb.assert_fact(f)
    return fb


# -- inference ----------------------------------------------------------------

def evaluate_rule(fb: Mapping[tuple[str, str], Fact], r: InferenceRule) -> tuple[CertaintyFactor, list[Fact]] | None:
    support = []
    for key in r.antecedents:
        fact = fb.get(key)
        if fact is None:
            return None
        support.append(fact)
    firing = float(r.rule_cf) * min(float(f.cf) for f in support)
    return CertaintyFactor(firing), support


@dataclass(frozen=True)
class _Firing:
    rule: InferenceRule
    cf: CertaintyFactor
    support: tuple[Fact, ...]


def forward_chain(
    fb: FactBase,
    rules: Iterable[InferenceRule],
    domain: str | None = None,
    trace: list | None = None,
) -> tuple[list[Recommendation], FactBase]:
    """Fire rules to fixpoint and return recommendations sorted by event.

    Rules are evaluated in rounds against the fact base as it stood at the start
    of the round, and every rule fires at most once. Contributions to the same
    conclusion are combined in rule-name order, so the result does not depend
    on the order of ``rules``. ``trace`` (if given) receives the names of the
    rules fired in each round.
    """
    rules = [r for r in rules if domain is None or r.domain_tag == domain]
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise ReasonError("rule names must be unique")
    rules.sort(key=lambda r: r.name)

    base = fb.copy() if isinstance(fb, FactBase) else FactBase(fb.values())
    current = base.copy()
    fired: dict[str, list[_Firing]] = {}
    done: set[str] = set()

    while True:
        new = []
        for r in rules:
            if r.name in done:
                continue
            res = evaluate_rule(current, r)
            if res is not None:
                new.append(_Firing(r, res[0], tuple(res[1])))
        if not new:
            break
        if trace is not None:
            trace.append([f.rule.name for f in new])
        for f in new:
            done.add(f.rule.name)
            fired.setdefault(f.rule.event, []).append(f)
        for event in sorted({f.rule.event for f in new}):
            current._facts[(event, INFERRED)] = _derived_fact(base, event, fired[event])

    recs = [_recommendation(current[(event, INFERRED)], fired[event]) for event in sorted(fired)]
    return recs, current


def _derived_fact(base: FactBase, event: str, firings: list[_Firing]) -> Fact:
    firings = sorted(firings, key=lambda f: f.rule.name)
    prior = base.get((event, INFERRED))
    cf = prior.cf if prior is not None else None
    ts = prior.timestamp if prior is not None else 0
    for f in firings:
        cf = f.cf if cf is None else combine_cf(cf, f.cf)
        ts = max([ts] + [s.timestamp for s in f.support])
    domain = prior.domain if prior is not None else Domain.DERIVED
    return Fact(event, INFERRED, cf, domain, ts)


def _recommendation(fact: Fact, firings: list[_Firing]) -> Recommendation:
    firings = sorted(firings, key=lambda f: f.rule.name)
    cats = order_categories(c for f in firings for c in f.rule.categories)
    support: dict[tuple[str, str], tuple[str, str, float]] = {}
    for f in firings:
        for s in f.support:
            support.setdefault(s.key, (s.subject, s.state, float(s.cf)))
    return Recommendation(
        event=fact.subject,
        categories=cats,
        cf=fact.cf,
        fired_rule=",".join(f.rule.name for f in firings),
        supporting_facts=tuple(support.values()),
        issued_at=fact.timestamp,
    )
