"""Exception hierarchy shared by every layer of the middleware."""

from __future__ import annotations


class SemintError(Exception):
    """Base class for all middleware errors."""


# -- value validation -------------------------------------------------------

class ValidationError(SemintError, ValueError):
    """A value violates a domain invariant."""

    def __init__(self, field: str, message: str | None = None):
        self.field = field
        super().__init__(message or f"invalid field {field!r}")


class EmptyField(ValidationError):
    def __init__(self, field: str):
        super().__init__(field, f"field {field!r} must be non-empty")


class NonFiniteValue(ValidationError):
    def __init__(self, field: str):
        super().__init__(field, f"field {field!r} must be a finite number")


class NegativeTimestamp(ValidationError):
    def __init__(self, field: str = "timestamp"):
        super().__init__(field, f"field {field!r} must be a non-negative integer")


class CoordinateOutOfRange(ValidationError):
    def __init__(self, field: str, value: float):
        super().__init__(field, f"{field}={value!r} is outside the valid range")


class CfOutOfRange(ValidationError):
    def __init__(self, value: object, field: str = "cf"):
        self.value = value
        super().__init__(field, f"certainty factor {value!r} is not in [0, 1]")


# -- input parsing ----------------------------------------------------------

class ParseError(SemintError):
    """Input text could not be parsed."""


class MalformedHeader(ParseError):
    pass


class MalformedRow(ParseError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {reason}" if reason else ""))


class RowValidationError(ParseError):
    """A syntactically fine row whose values break a reading invariant."""

    def __init__(self, line: int, cause: ValidationError):
        self.line = line
        self.cause = cause
        super().__init__(f"line {line}: {cause}")


class MalformedXml(ParseError):
    pass


class MissingElement(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing element or attribute {name!r}")


class MalformedJson(ParseError):
    pass


class MissingField(ParseError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"missing required field {name!r}")


class RuleSyntaxError(ParseError):
    """Syntax error in a CEP rule, inference rule or query, with the offending offset."""

    def __init__(self, position: int, expected: str, found: str = ""):
        self.position = position
        self.expected = expected
        self.found = found
        detail = f", found {found!r}" if found else ""
        super().__init__(f"syntax error at position {position}: expected {expected}{detail}")


# -- storage ----------------------------------------------------------------

class StorageError(SemintError):
    pass


class CorruptFile(StorageError):
    def __init__(self, line: int, reason: str = ""):
        self.line = line
        super().__init__(f"corrupt file at line {line}" + (f": {reason}" if reason else ""))


# -- stream analytics -------------------------------------------------------

class CepError(SemintError):
    pass


class UnknownAggregate(CepError):
    def __init__(self, name: str, position: int = -1):
        self.name = name
        self.position = position
        super().__init__(f"unknown aggregate function {name!r}")


class BadDuration(CepError):
    def __init__(self, text: str):
        self.text = text
        super().__init__(f"bad window duration {text!r}")


class InvalidRule(CepError):
    """Parsed rule breaks a structural invariant (duplicate attribute, wrong stream...)."""


class OutOfOrder(CepError):
    def __init__(self, reading, last_seen: int):
        self.reading = reading
        self.last_seen = last_seen
        super().__init__(
            f"reading for {reading.property!r} at t={reading.timestamp} "
            f"arrived after t={last_seen}"
        )


# -- ontology / query -------------------------------------------------------

class OntologyError(SemintError):
    pass


class CycleDetected(OntologyError):
    def __init__(self, cls: str, cycle: list[str] | None = None):
        self.cls = cls
        self.cycle = cycle or [cls]
        super().__init__(f"subclass cycle through {cls!r}: {' -> '.join(self.cycle)}")


class UndeclaredClass(OntologyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"class {name!r} is not declared")


class DuplicateClass(OntologyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"class {name!r} declared twice")


class UnboundProjection(OntologyError):
    def __init__(self, var: str):
        self.var = var
        super().__init__(f"projected variable ?{var} does not occur in any pattern")


# -- reasoning --------------------------------------------------------------

class ReasonError(SemintError):
    pass


class EmptyAntecedents(ReasonError):
    def __init__(self, position: int = -1):
        self.position = position
        super().__init__("rule has no antecedents")


class DuplicateAntecedent(ReasonError):
    def __init__(self, subject: str, state: str):
        super().__init__(f"antecedent '{subject} is {state}' repeated in rule")


# -- service ----------------------------------------------------------------

class ConfigInvalid(SemintError):
    def __init__(self, key: str, reason: str = ""):
        self.key = key
        super().__init__(f"invalid config key {key!r}" + (f": {reason}" if reason else ""))


class PortInUse(SemintError):
    def __init__(self, port: int):
        self.port = port
        super().__init__(f"port in use: {port}")
