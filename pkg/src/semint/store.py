"""Data storage: an indexed in-memory triple store and an append-only event log.

Both persist to line-oriented UTF-8 files. Triples are written one per line as
``<term> <term> <term> .`` with bare identifiers and JSON-quoted literals; the
event log is newline-delimited JSON.
"""

from __future__ import annotations

import enum
import json
import os
import re
import tempfile
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Union

from .errors import CorruptFile, StorageError, ValidationError


@dataclass(frozen=True, order=True)
class Literal:
    value: str

    def __post_init__(self):
        if not isinstance(self.value, str):
            raise ValidationError("literal", "literal value must be a string")
        if self.value == "":
            raise ValidationError("literal", "literal value must be non-empty")

    def __str__(self) -> str:
        return render_term(self)


@dataclass(frozen=True)
class Variable:
    name: str

    def __post_init__(self):
        if not _VARNAME.fullmatch(self.name or ""):
            raise ValidationError("variable", f"bad variable name {self.name!r}")

    def __str__(self) -> str:
        return "?" + self.name


Term = Union[str, Literal]
PatternTerm = Union[str, Literal, Variable]

_IDENT = re.compile(r'[^\s"?][^\s"]*')
_VARNAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TERM_RE = r'"(?:[^"\\]|\\.)*"|[^\s"?][^\s"]*'
_LINE = re.compile(rf"({_TERM_RE})[ \t]+({_TERM_RE})[ \t]+({_TERM_RE})[ \t]+\.")


def is_identifier(value: object) -> bool:
    return isinstance(value, str) and bool(_IDENT.fullmatch(value))


def render_term(term: PatternTerm) -> str:
    if isinstance(term, Literal):
        return json.dumps(term.value, ensure_ascii=False)
    if isinstance(term, Variable):
        return "?" + term.name
    return term


def parse_term(text: str) -> PatternTerm:
    """Inverse of :func:`render_term`."""
    if text.startswith('"'):
        try:
            value = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("term", f"bad literal {text!r}") from exc
        if not isinstance(value, str):
            raise ValidationError("term", f"bad literal {text!r}")
        return Literal(value)
    if text.startswith("?"):
        return Variable(text[1:])
    if not is_identifier(text):
        raise ValidationError("term", f"bad identifier {text!r}")
    return text


def term_sort_key(term: Term) -> str:
    return render_term(term)


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Term

    def __post_init__(self):
        for name in ("subject", "predicate"):
            if not is_identifier(getattr(self, name)):
                raise ValidationError(name, f"{name} must be a non-empty identifier")
        if not (isinstance(self.object, Literal) or is_identifier(self.object)):
            raise ValidationError("object", "object must be an identifier or Literal")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    def to_line(self) -> str:
        return f"{self.subject} {self.predicate} {render_term(self.object)} ."


@dataclass(frozen=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self):
        for name in ("subject", "predicate", "object"):
            term = getattr(self, name)
            if isinstance(term, (Variable, Literal)):
                continue
            if not is_identifier(term):
                raise ValidationError(name, f"bad pattern term {term!r}")

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))

    @property
    def variables(self) -> list[str]:
        return [t.name for t in self if isinstance(t, Variable)]

    def __str__(self) -> str:
        return " ".join(render_term(t) for t in self)


def pattern(s: str, p: str, o: str) -> TriplePattern:
    """Build a pattern from textual terms, e.g. ``pattern("?x", "rdf:type", "ssn:Sensor")``."""
    return TriplePattern(parse_term(s), parse_term(p), parse_term(o))


def match_triple(p: TriplePattern, t: Triple) -> dict[str, Term] | None:
    """Bindings for ``p`` against a single triple, or None."""
    binding: dict[str, Term] = {}
    for pt, tt in zip(p, t):
        if isinstance(pt, Variable):
            bound = binding.get(pt.name)
            if bound is None:
                binding[pt.name] = tt
            elif bound != tt:
                return None
        elif pt != tt:
            return None
    return binding


class RWLock:
    """Many concurrent readers or a single writer; writers are preferred."""

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer = False
        self._waiting_writers = 0

    @contextmanager
    def read(self) -> Iterator[None]:
        with self._cond:
            while self._writer or self._waiting_writers:
                self._cond.wait()
            self._readers += 1
        try:
            yield
        finally:
            with self._cond:
                self._readers -= 1
                if not self._readers:
                    self._cond.notify_all()

    @contextmanager
    def write(self) -> Iterator[None]:
        with self._cond:
            self._waiting_writers += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._waiting_writers -= 1
            self._writer = True
        try:
            yield
        finally:
            with self._cond:
                self._writer = False
                self._cond.notify_all()


class TripleStore:
    """Set of triples kept in insertion order, indexed by subject, predicate and object."""

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: list[Triple] = []
        self._seen: set[Triple] = set()
        self._by_s: dict[str, list[int]] = {}
        self._by_p: dict[str, list[int]] = {}
        self._by_o: dict[Term, list[int]] = {}
        self.lock = RWLock()
        for t in triples:
            self.insert(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(list(self._triples))

    def __contains__(self, t: object) -> bool:
        return t in self._seen

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TripleStore):
            return NotImplemented
        return self._triples == other._triples

    def insert(self, t: Triple) -> bool:
        if not isinstance(t, Triple):
            raise TypeError(f"expected Triple, got {type(t).__name__}")
        if t in self._seen:
            return False
        idx = len(self._triples)
        self._triples.append(t)
        self._seen.add(t)
        self._by_s.setdefault(t.subject, []).append(idx)
        self._by_p.setdefault(t.predicate, []).append(idx)
        self._by_o.setdefault(t.object, []).append(idx)
        return True

    def insert_all(self, triples: Iterable[Triple]) -> int:
        return sum(self.insert(t) for t in triples)

    def _candidates(self, p: TriplePattern) -> Iterable[Triple]:
        lists = []
        if not isinstance(p.subject, Variable):
            lists.append(self._by_s.get(p.subject, []))
        if not isinstance(p.predicate, Variable):
            lists.append(self._by_p.get(p.predicate, []))
        if not isinstance(p.object, Variable):
            lists.append(self._by_o.get(p.object, []))
        if not lists:
            return self._triples
        best = min(lists, key=len)
        return (self._triples[i] for i in best)

    def match(self, p: TriplePattern) -> list[dict[str, Term]]:
        out = []
        for t in self._candidates(p):
            b = match_triple(p, t)
            if b is not None:
                out.append(b)
        return out

    def to_text(self) -> str:
        return "".join(t.to_line() + "\n" for t in self._triples)

    @classmethod
    def from_text(cls, text: str) -> "TripleStore":
        store = cls()
        for lineno, line in enumerate(text.split("\n"), start=1):
            if not line.strip():
                continue
            m = _LINE.fullmatch(line.strip())
            if not m:
                raise CorruptFile(lineno, "expected '<term> <term> <term> .'")
            try:
                s, p, o = (parse_term(g) for g in m.groups())
                store.insert(Triple(s, p, o))
            except (ValidationError, TypeError) as exc:
                raise CorruptFile(lineno, str(exc)) from exc
        return store


class EventKind(str, enum.Enum):
    SENSOR = "SENSOR"
    IK = "IK"
    COMPOSITE = "COMPOSITE"
    RECOMMENDATION = "RECOMMENDATION"


@dataclass(frozen=True)
class LogEntry:
    offset: int
    kind: EventKind
    appended_at: int
    line: str = field(repr=False)

    @property
    def payload(self) -> dict:
        return json.loads(self.line)["payload"]


def _entry_line(offset: int, kind: EventKind, t: int, payload: dict) -> str:
    return json.dumps(
        {"offset": offset, "kind": kind.value, "t": t, "payload": payload},
        ensure_ascii=False,
        separators=(",", ":"),
    )


class EventLog:
    """Append-only log; when ``path`` is set every append is written through to disk."""

    def __init__(self, path: str | os.PathLike | None = None, fsync: bool = False):
        self.path = Path(path) if path is not None else None
        self.fsync = fsync
        self._entries: list[LogEntry] = []
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._entries = _read_log(self.path)

    def __len__(self) -> int:
        return len(self._entries)

    def __getitem__(self, offset: int) -> LogEntry:
        return self._entries[offset]

    def __iter__(self) -> Iterator[LogEntry]:
        return iter(list(self._entries))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return self._entries == other._entries

    def append(self, kind: EventKind | str, payload: dict, t: int | None = None) -> int:
        kind = EventKind(kind)
        if t is None:
            t = int(time.time())
        with self._lock:
            offset = len(self._entries)
            line = _entry_line(offset, kind, t, payload)
            if self.path is not None:
                try:
                    with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                        fh.write(line + "\n")
                        fh.flush()
                        if self.fsync:
                            os.fsync(fh.fileno())
                except OSError as exc:
                    raise StorageError(f"cannot append to {self.path}: {exc}") from exc
            self._entries.append(LogEntry(offset, kind, t, line))
            return offset

    def entries(self, kind: EventKind | str | None = None) -> list[LogEntry]:
        if kind is None:
            return list(self._entries)
        kind = EventKind(kind)
        return [e for e in self._entries if e.kind is kind]

    def to_text(self) -> str:
        return "".join(e.line + "\n" for e in self._entries)


def _parse_log_text(text: str) -> list[LogEntry]:
    entries = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            offset, kind, t = obj["offset"], EventKind(obj["kind"]), obj["t"]
            if not isinstance(obj["payload"], dict) or not isinstance(t, int):
                raise ValueError("bad payload or timestamp")
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise CorruptFile(lineno, str(exc)) from exc
        if offset != len(entries):
            raise CorruptFile(lineno, f"expected offset {len(entries)}, found {offset}")
        entries.append(LogEntry(offset, kind, t, line))
    return entries


def _read_log(path: Path) -> list[LogEntry]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    return _parse_log_text(text)


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=path.name, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def save(obj: TripleStore | EventLog, path: str | os.PathLike) -> None:
    # Callers already holding the store's write lock may call this directly.
    if isinstance(obj, (TripleStore, EventLog)):
        text = obj.to_text()
    else:
        raise TypeError(f"cannot save {type(obj).__name__}")
    _atomic_write(Path(path), text)


def load_triples(path: str | os.PathLike) -> TripleStore:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    return TripleStore.from_text(text)


def load_log(path: str | os.PathLike) -> EventLog:
    """Detached in-memory copy of a persisted log."""
    log = EventLog()
    log._entries = _read_log(Path(path))
    return log


def load(path: str | os.PathLike) -> TripleStore | EventLog:
    """Load a triple file or event log, telling them apart by their first line."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc
    if text.lstrip().startswith("{"):
        log = EventLog()
        log._entries = _parse_log_text(text)
        return log
    return TripleStore.from_text(text)
