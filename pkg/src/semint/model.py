"""Immutable domain values shared by every module.

All types validate in ``__post_init__``; an instance that exists satisfies its
invariants. Timestamps are plain ``int`` epoch seconds (UTC).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import (
    CfOutOfRange,
    CoordinateOutOfRange,
    EmptyField,
    NegativeTimestamp,
    NonFiniteValue,
    ValidationError,
)

CATEGORY_ORDER = ("METEOROLOGICAL", "AGRICULTURAL", "HYDROLOGICAL")


class CertaintyFactor(float):
    """A confidence value in [0, 1]; behaves as a ``float``."""

    def __new__(cls, value: Any = 1.0, field: str = "cf"):
        if isinstance(value, bool):
            raise CfOutOfRange(value, field)
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise CfOutOfRange(value, field) from None
        if not math.isfinite(v) or v < 0.0 or v > 1.0:
            raise CfOutOfRange(value, field)
        return super().__new__(cls, v)

    @property
    def value(self) -> float:
        return float(self)

    def __repr__(self) -> str:
        return f"CF({float(self)!r})"


class Domain(str, enum.Enum):
    SENSOR = "SENSOR"
    INDIGENOUS_KNOWLEDGE = "INDIGENOUS_KNOWLEDGE"
    DERIVED = "DERIVED"


def check_timestamp(value: Any, field: str = "timestamp") -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(field, f"field {field!r} must be an integer, got {value!r}")
    if value < 0:
        raise NegativeTimestamp(field)
    return value


def _check_name(value: Any, field: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(field, f"field {field!r} must be a string")
    if not value.strip():
        raise EmptyField(field)
    return value


def _check_number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(field, f"field {field!r} must be a number, got {value!r}")
    v = float(value)
    if not math.isfinite(v):
        raise NonFiniteValue(field)
    return v


def _set(obj: object, name: str, value: Any) -> None:
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class SensorReading:
    sensor_id: str
    property: str
    value: float
    unit: str
    timestamp: int

    def __post_init__(self):
        _check_name(self.sensor_id, "sensor_id")
        _check_name(self.property, "property")
        _set(self, "value", _check_number(self.value, "value"))
        if not isinstance(self.unit, str):
            raise ValidationError("unit", "field 'unit' must be a string")
        check_timestamp(self.timestamp)

    def to_dict(self) -> dict:
        return {
            "sensor_id": self.sensor_id,
            "property": self.property,
            "value": self.value,
            "unit": self.unit,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class IKObservation:
    indicator: str
    state: str
    latitude: float
    longitude: float
    observer: str
    timestamp: int
    confidence: CertaintyFactor = CertaintyFactor(1.0)
    description: str = ""
    photo_ref: str | None = None

    def __post_init__(self):
        _check_name(self.indicator, "indicator")
        _check_name(self.state, "state")
        lat = _check_number(self.latitude, "latitude")
        lon = _check_number(self.longitude, "longitude")
        if not -90.0 <= lat <= 90.0:
            raise CoordinateOutOfRange("latitude", lat)
        if not -180.0 <= lon <= 180.0:
            raise CoordinateOutOfRange("longitude", lon)
        _set(self, "latitude", lat)
        _set(self, "longitude", lon)
        if not isinstance(self.observer, str):
            raise ValidationError("observer", "field 'observer' must be a string")
        check_timestamp(self.timestamp)
        _set(self, "confidence", CertaintyFactor(self.confidence, "cf"))
        if not isinstance(self.description, str):
            raise ValidationError("description", "field 'description' must be a string")
        if self.photo_ref is not None and not isinstance(self.photo_ref, str):
            raise ValidationError("photo_ref", "field 'photo_ref' must be a string")

    def to_dict(self) -> dict:
        out = {
            "indicator": self.indicator,
            "state": self.state,
            "description": self.description,
            "lat": self.latitude,
            "lon": self.longitude,
            "observer": self.observer,
            "t": self.timestamp,
            "cf": float(self.confidence),
        }
        if self.photo_ref is not None:
            out["photo_ref"] = self.photo_ref
        return out


@dataclass(frozen=True)
class Fact:
    """``subject is state`` with a certainty factor."""

    subject: str
    state: str
    cf: CertaintyFactor
    domain: Domain
    timestamp: int

    def __post_init__(self):
        _check_name(self.subject, "subject")
        _check_name(self.state, "state")
        _set(self, "cf", CertaintyFactor(self.cf))
        _set(self, "domain", Domain(self.domain))
        check_timestamp(self.timestamp)

    @property
    def key(self) -> tuple[str, str]:
        return (self.subject, self.state)


@dataclass(frozen=True)
class CompositeEvent:
    name: str
    attributes: tuple[tuple[str, float], ...]
    window_start: int
    window_end: int
    source_rule: str

    def __post_init__(self):
        _check_name(self.name, "name")
        attrs = tuple((str(k), float(v)) for k, v in self.attributes)
        names = [k for k, _ in attrs]
        if len(set(names)) != len(names):
            raise ValidationError("attributes", "attribute names must be unique")
        _set(self, "attributes", attrs)
        check_timestamp(self.window_start, "window_start")
        check_timestamp(self.window_end, "window_end")
        if not self.window_start < self.window_end:
            raise ValidationError("window_end", "window_start must precede window_end")

    def attribute(self, name: str) -> float:
        for k, v in self.attributes:
            if k == name:
                return v
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "attributes": {k: v for k, v in self.attributes},
            "window_start": self.window_start,
            "window_end": self.window_end,
            "source_rule": self.source_rule,
        }


@dataclass(frozen=True)
class Recommendation:
    event: str
    categories: tuple[str, ...]
    cf: CertaintyFactor
    fired_rule: str
    supporting_facts: tuple[tuple[str, str, float], ...]
    issued_at: int

    def __post_init__(self):
        _check_name(self.event, "event")
        cats = tuple(self.categories)
        if not cats:
            raise EmptyField("categories")
        for c in cats:
            _check_name(c, "categories")
        _set(self, "categories", cats)
        _set(self, "cf", CertaintyFactor(self.cf))
        _check_name(self.fired_rule, "fired_rule")
        support = tuple(
            (_check_name(s, "subject"), _check_name(st, "state"), float(CertaintyFactor(cf)))
            for s, st, cf in self.supporting_facts
        )
        if not support:
            raise EmptyField("supporting_facts")
        _set(self, "supporting_facts", support)
        check_timestamp(self.issued_at, "issued_at")


def order_categories(categories) -> tuple[str, ...]:
    """Known drought categories first in canonical order, then the rest sorted."""
    seen = set(categories)
    known = [c for c in CATEGORY_ORDER if c in seen]
    return tuple(known + sorted(seen - set(CATEGORY_ORDER)))


def _candidate(raw: Any, fields: tuple[str, ...]) -> dict:
    if isinstance(raw, Mapping):
        return dict(raw)
    return {f: getattr(raw, f) for f in fields if hasattr(raw, f)}


_READING_FIELDS = ("sensor_id", "property", "value", "unit", "timestamp")


def validate_reading(raw: Mapping | SensorReading) -> SensorReading:
    if isinstance(raw, SensorReading):
        return raw
    data = _candidate(raw, _READING_FIELDS)
    for name in _READING_FIELDS:
        if name not in data:
            raise EmptyField(name)
    return SensorReading(**{k: data[k] for k in _READING_FIELDS})


_IK_FIELDS = (
    "indicator", "state", "latitude", "longitude", "observer", "timestamp",
    "confidence", "description", "photo_ref",
)


def validate_ik(raw: Mapping | IKObservation) -> IKObservation:
    if isinstance(raw, IKObservation):
        return raw
    data = _candidate(raw, _IK_FIELDS)
    for name in _IK_FIELDS[:6]:
        if name not in data:
            raise EmptyField(name)
    return IKObservation(**{k: data[k] for k in _IK_FIELDS if k in data})
