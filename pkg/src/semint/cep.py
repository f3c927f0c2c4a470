"""Stream analytics: CEP rule language and a tumbling-window evaluation engine.

A rule names a composite event, defines its attributes as aggregates over one
sensor stream, and gives the window and the triggering condition::

    HighTemp(avg_temp = AVG(Temperature.value))
        := WINDOW(Temperature, 1h, MIN_COUNT=4)
        WHERE AVG(Temperature.value) >= 30.0
        EMIT AverageDailyTemp is High CF 1.0

Windows are epoch-aligned (index = t // width) and close once a later reading
of the same stream arrives, or on :meth:`CepEngine.flush`. ``AND``/``OR`` in a
condition have equal precedence and associate to the left; use parentheses to
group.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .errors import BadDuration, InvalidRule, OutOfOrder, RuleSyntaxError, UnknownAggregate
from .model import CertaintyFactor, CompositeEvent, Domain, Fact, SensorReading

AGGREGATES = ("AVG", "MIN", "MAX", "SUM", "COUNT", "LAST")
COMPARATORS: dict[str, Callable[[float, float], bool]] = {
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    "==": operator.eq,
    "!=": operator.ne,
}
DURATION_UNITS = {"s": 1, "m": 60, "h": 3600, "d": 86400}


def aggregate(function: str, values: list[float]) -> float:
    if function == "COUNT":
        return float(len(values))
    if not values:
        raise ValueError(f"{function} of an empty window")
    if function == "AVG":
        return math.fsum(values) / len(values)
    if function == "SUM":
        return math.fsum(values)
    if function == "MIN":
        return min(values)
    if function == "MAX":
        return max(values)
    if function == "LAST":
        return values[-1]
    raise UnknownAggregate(function)


# -- rule AST ----------------------------------------------------------------

@dataclass(frozen=True)
class AggregateExpr:
    function: str
    stream: str
    field: str = "value"

    def evaluate(self, values: list[float]) -> float:
        return aggregate(self.function, values)

    def __str__(self) -> str:
        return f"{self.function}({self.stream}.{self.field})"


@dataclass(frozen=True)
class Comparison:
    expr: AggregateExpr
    op: str
    threshold: float

    def evaluate(self, values: list[float]) -> bool:
        return COMPARATORS[self.op](self.expr.evaluate(values), self.threshold)

    def __str__(self) -> str:
        return f"{self.expr} {self.op} {self.threshold!r}"


@dataclass(frozen=True)
class BoolOp:
    op: str  # "AND" | "OR"
    left: "Condition"
    right: "Condition"

    def evaluate(self, values: list[float]) -> bool:
        if self.op == "AND":
            return self.left.evaluate(values) and self.right.evaluate(values)
        return self.left.evaluate(values) or self.right.evaluate(values)

    def __str__(self) -> str:
        right = f"({self.right})" if isinstance(self.right, BoolOp) else str(self.right)
        return f"{self.left} {self.op} {right}"


Condition = Union[Comparison, BoolOp]


@dataclass(frozen=True)
class Window:
    stream: str
    width: int
    min_count: int = 1


@dataclass(frozen=True)
class Emit:
    subject: str
    state: str
    cf: CertaintyFactor = CertaintyFactor(1.0)


@dataclass(frozen=True)
class CepRule:
    name: str
    attributes: tuple[tuple[str, AggregateExpr], ...]
    window: Window
    condition: Condition
    emit: Emit | None = None

    def __post_init__(self):
        names = [a for a, _ in self.attributes]
        if not names:
            raise InvalidRule(f"rule {self.name}: at least one attribute is required")
        if len(set(names)) != len(names):
            raise InvalidRule(f"rule {self.name}: duplicate attribute names")
        if self.window.width <= 0:
            raise InvalidRule(f"rule {self.name}: window width must be positive")
        if self.window.min_count < 1:
            raise InvalidRule(f"rule {self.name}: MIN_COUNT must be >= 1")
        for expr in self.aggregates():
            if expr.stream != self.window.stream:
                raise InvalidRule(
                    f"rule {self.name}: {expr} does not reference window stream {self.window.stream}"
                )

    def aggregates(self) -> list[AggregateExpr]:
        out = [e for _, e in self.attributes]
        stack: list[Condition] = [self.condition]
        while stack:
            c = stack.pop()
            if isinstance(c, BoolOp):
                stack += [c.left, c.right]
            else:
                out.append(c.expr)
        return out


def unparse_cep_rule(rule: CepRule) -> str:
    attrs = ", ".join(f"{a} = {e}" for a, e in rule.attributes)
    w = rule.window
    text = (
        f"{rule.name}({attrs}) := WINDOW({w.stream}, {_format_duration(w.width)}, "
        f"MIN_COUNT={w.min_count}) WHERE {rule.condition}"
    )
    if rule.emit is not None:
        text += f" EMIT {rule.emit.subject} is {rule.emit.state} CF {float(rule.emit.cf)!r}"
    return text


def _format_duration(seconds: int) -> str:
    for unit, size in (("d", 86400), ("h", 3600), ("m", 60)):
        if seconds % size == 0:
            return f"{seconds // size}{unit}"
    return f"{seconds}s"


# -- lexer / parser ----------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<number>-?\d+(?:\.\d+)?[eE][+-]?\d+|-?\d+\.\d+)
  | (?P<duration>\d+[A-Za-z]+)
  | (?P<int>-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|==|!=|:=|[<>(),=.])
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise RuleSyntaxError(pos, "a token", text[pos])
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            raise RuleSyntaxError(self.tok.pos, repr(text), self.tok.text)
        return self.advance()

    def accept(self, text: str) -> bool:
        if self.tok.text == text and self.tok.kind != "eof":
            self.i += 1
            return True
        return False

    def name(self, what: str = "a name") -> str:
        if self.tok.kind != "name":
            raise RuleSyntaxError(self.tok.pos, what, self.tok.text)
        return self.advance().text

    def number(self) -> float:
        if self.tok.kind not in ("number", "int"):
            raise RuleSyntaxError(self.tok.pos, "a number", self.tok.text)
        return float(self.advance().text)

    def rule(self) -> CepRule:
        name = self.name("rule name")
        self.expect("(")
        attrs = [self.attr()]
        while self.accept(","):
            attrs.append(self.attr())
        self.expect(")")
        self.expect(":=")
        window = self.window()
        if self.tok.text.upper() != "WHERE":
            raise RuleSyntaxError(self.tok.pos, "'WHERE'", self.tok.text)
        self.advance()
        cond = self.cond()
        emit = None
        if self.tok.kind == "name" and self.tok.text.upper() == "EMIT":
            self.advance()
            emit = self.emit()
        if self.tok.kind != "eof":
            raise RuleSyntaxError(self.tok.pos, "end of rule", self.tok.text)
        return CepRule(name, tuple(attrs), window, cond, emit)

    def attr(self) -> tuple[str, AggregateExpr]:
        name = self.name("attribute name")
        self.expect("=")
        return name, self.agg()

    def agg(self) -> AggregateExpr:
        tok = self.tok
        fn = self.name("an aggregate function")
        if fn.upper() not in AGGREGATES:
            raise UnknownAggregate(fn, tok.pos)
        self.expect("(")
        stream = self.name("a stream name")
        self.expect(".")
        if self.tok.text != "value":
            raise RuleSyntaxError(self.tok.pos, "'value'", self.tok.text)
        self.advance()
        self.expect(")")
        return AggregateExpr(fn.upper(), stream)

    def window(self) -> Window:
        if self.tok.text.upper() != "WINDOW":
            raise RuleSyntaxError(self.tok.pos, "'WINDOW'", self.tok.text)
        self.advance()
        self.expect("(")
        stream = self.name("a stream name")
        self.expect(",")
        width = self.duration()
        min_count = 1
        if self.accept(","):
            if self.tok.text.upper() != "MIN_COUNT":
                raise RuleSyntaxError(self.tok.pos, "'MIN_COUNT'", self.tok.text)
            self.advance()
            self.expect("=")
            if self.tok.kind != "int":
                raise RuleSyntaxError(self.tok.pos, "an integer", self.tok.text)
            min_count = int(self.advance().text)
            if min_count < 1:
                raise InvalidRule("MIN_COUNT must be >= 1")
        self.expect(")")
        return Window(stream, width, min_count)

    def duration(self) -> int:
        tok = self.tok
        if tok.kind == "duration":
            m = re.fullmatch(r"(\d+)([A-Za-z]+)", tok.text)
            unit = m.group(2)
            if unit not in DURATION_UNITS:
                raise BadDuration(tok.text)
            width = int(m.group(1)) * DURATION_UNITS[unit]
        elif tok.kind in ("int", "number"):
            raise BadDuration(tok.text)
        else:
            raise RuleSyntaxError(tok.pos, "a duration such as 1h", tok.text)
        if width <= 0:
            raise BadDuration(tok.text)
        self.advance()
        return width

    def cond(self) -> Condition:
        left = self.cmp()
        while self.tok.kind == "name" and self.tok.text.upper() in ("AND", "OR"):
            op = self.advance().text.upper()
            left = BoolOp(op, left, self.cmp())
        return left

    def cmp(self) -> Condition:
        if self.accept("("):
            inner = self.cond()
            self.expect(")")
            return inner
        expr = self.agg()
        if self.tok.text not in COMPARATORS:
            raise RuleSyntaxError(self.tok.pos, "a comparison operator", self.tok.text)
        op = self.advance().text
        return Comparison(expr, op, self.number())

    def emit(self) -> Emit:
        subject = self.name("an emitted subject")
        if self.tok.text != "is":
            raise RuleSyntaxError(self.tok.pos, "'is'", self.tok.text)
        self.advance()
        state = self.name("an emitted state")
        cf = 1.0
        if self.tok.kind == "name" and self.tok.text.upper() == "CF":
            self.advance()
            cf = self.number()
        return Emit(subject, state, CertaintyFactor(cf))


def parse_cep_rule(text: str) -> CepRule:
    return _Parser(text).rule()


def parse_cep_rules(text: str) -> list[CepRule]:
    """Rules separated by blank lines or ``;``; ``#`` starts a comment."""
    rules = []
    for chunk in _split_statements(text):
        rules.append(parse_cep_rule(chunk))
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise InvalidRule("duplicate CEP rule names")
    return rules


def _split_statements(text: str) -> list[str]:
    lines = [re.sub(r"#.*", "", ln) for ln in text.splitlines()]
    chunks, current = [], []
    for line in lines + [""]:
        for piece_i, piece in enumerate(line.split(";")):
            if piece_i > 0 and current:
                chunks.append("\n".join(current))
                current = []
            if piece.strip():
                current.append(piece)
        if not line.strip() and current:
            chunks.append("\n".join(current))
            current = []
    return chunks


# -- engine ------------------------------------------------------------------

@dataclass
class WindowState:
    rule: str
    window_index: int
    readings: list[SensorReading] = field(default_factory=list)


class CepEngine:
    """Feeds readings through tumbling windows; not safe for concurrent use."""

    def __init__(self, rules: Iterable[CepRule] = ()):
        self.rules: list[CepRule] = list(rules)
        self._by_stream: dict[str, list[int]] = {}
        for i, r in enumerate(self.rules):
            self._by_stream.setdefault(r.window.stream, []).append(i)
        self._open: dict[int, WindowState] = {}
        self.last_seen: dict[str, int] = {}

    def check_order(self, readings: Iterable[SensorReading]) -> None:
        """Raise OutOfOrder if ``readings`` could not be fed in sequence."""
        seen = dict(self.last_seen)
        for r in readings:
            last = seen.get(r.property)
            if last is not None and r.timestamp < last:
                raise OutOfOrder(r, last)
            seen[r.property] = r.timestamp

    def advance(self, reading: SensorReading) -> list[CompositeEvent]:
        last = self.last_seen.get(reading.property)
        if last is not None and reading.timestamp < last:
            raise OutOfOrder(reading, last)
        self.last_seen[reading.property] = reading.timestamp
        events = []
        for i in self._by_stream.get(reading.property, []):
            rule = self.rules[i]
            index = reading.timestamp // rule.window.width
            state = self._open.get(i)
            if state is not None and state.window_index < index:
                ev = self._close(rule, state)
                if ev is not None:
                    events.append(ev)
                state = None
            if state is None:
                state = self._open[i] = WindowState(rule.name, index)
            state.readings.append(reading)
        return events

    def feed(self, readings: Iterable[SensorReading]) -> list[CompositeEvent]:
        events = []
        for r in readings:
            events.extend(self.advance(r))
        return events

    def flush(self, now: int) -> list[CompositeEvent]:
        closing = []
        for i, state in list(self._open.items()):
            rule = self.rules[i]
            if (state.window_index + 1) * rule.window.width <= now:
                closing.append(((state.window_index + 1) * rule.window.width, i, state))
        events = []
        for _, i, state in sorted(closing, key=lambda c: (c[0], c[1])):
            del self._open[i]
            ev = self._close(self.rules[i], state)
            if ev is not None:
                events.append(ev)
        return events

    def open_windows(self) -> list[WindowState]:
        return [self._open[i] for i in sorted(self._open)]

    def _close(self, rule: CepRule, state: WindowState) -> CompositeEvent | None:
        if len(state.readings) < rule.window.min_count:
            return None
        values = [r.value for r in state.readings]
        if not rule.condition.evaluate(values):
            return None
        width = rule.window.width
        return CompositeEvent(
            name=rule.name,
            attributes=tuple((a, e.evaluate(values)) for a, e in rule.attributes),
            window_start=state.window_index * width,
            window_end=(state.window_index + 1) * width,
            source_rule=rule.name,
        )


def event_to_fact(rule: CepRule, ev: CompositeEvent) -> Fact | None:
    if rule.emit is None:
        return None
    return Fact(rule.emit.subject, rule.emit.state, rule.emit.cf, Domain.SENSOR, ev.window_end)
