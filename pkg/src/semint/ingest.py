"""Data acquisition: sensor CSV/XML replay files and indigenous-knowledge JSON reports."""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from typing import Iterable

from .errors import (
    MalformedHeader,
    MalformedJson,
    MalformedRow,
    MalformedXml,
    MissingElement,
    MissingField,
    RowValidationError,
    ValidationError,
)
from .model import Domain, Fact, IKObservation, SensorReading

CSV_HEADER = ("sensor_id", "property", "value", "unit", "timestamp")

_IDENT = re.compile(r"[A-Za-z0-9_.\-]+")
_DECIMAL = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:nan|inf|infinity)", re.I)
_UINT = re.compile(r"\d+")


def sort_key(r: SensorReading) -> tuple:
    return (r.timestamp, r.sensor_id, r.property)


class SensorBatch(tuple):
    """Readings sorted by (timestamp, sensor_id, property)."""

    def __new__(cls, readings: Iterable[SensorReading] = ()):
        return super().__new__(cls, sorted(readings, key=sort_key))

    @property
    def readings(self) -> tuple[SensorReading, ...]:
        return tuple(self)

    def __repr__(self) -> str:
        return f"SensorBatch({len(self)} readings)"


def parse_sensor_csv(text: str) -> SensorBatch:
    lines = text.splitlines()
    if not lines or tuple(c.strip() for c in lines[0].split(",")) != CSV_HEADER:
        raise MalformedHeader(f"expected header {','.join(CSV_HEADER)!r}")
    readings = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 5:
            raise MalformedRow(lineno, f"expected 5 fields, got {len(cells)}")
        sensor_id, prop, value, unit, ts = cells
        if not _DECIMAL.fullmatch(value):
            raise MalformedRow(lineno, f"value {value!r} is not a decimal number")
        if not _UINT.fullmatch(ts):
            raise MalformedRow(lineno, f"timestamp {ts!r} is not an unsigned integer")
        for name, cell in (("sensor_id", sensor_id), ("property", prop)):
            if cell and not _IDENT.fullmatch(cell):
                raise MalformedRow(lineno, f"{name} {cell!r} is not an identifier")
        try:
            readings.append(SensorReading(sensor_id, prop, float(value), unit, int(ts)))
        except ValidationError as exc:
            raise RowValidationError(lineno, exc) from exc
    return SensorBatch(readings)


def format_sensor_csv(batch: Iterable[SensorReading]) -> str:
    rows = [",".join(CSV_HEADER)]
    for r in batch:
        rows.append(f"{r.sensor_id},{r.property},{r.value!r},{r.unit},{r.timestamp}")
    return "\n".join(rows) + "\n"


def parse_sensor_xml(text: str) -> SensorBatch:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root.tag != "readings":
        raise MissingElement("readings")
    readings = []
    for index, el in enumerate(root.iter("reading"), start=1):
        attrs = {}
        for name in ("sensor", "property", "value", "unit", "t"):
            if name not in el.attrib:
                raise MissingElement(name)
            attrs[name] = el.attrib[name].strip()
        if not _DECIMAL.fullmatch(attrs["value"]):
            raise ValidationError("value", f"reading {index}: value {attrs['value']!r} is not a number")
        if not _UINT.fullmatch(attrs["t"]):
            raise ValidationError("timestamp", f"reading {index}: t {attrs['t']!r} is not an unsigned integer")
        readings.append(SensorReading(
            attrs["sensor"], attrs["property"], float(attrs["value"]), attrs["unit"], int(attrs["t"]),
        ))
    return SensorBatch(readings)


def parse_ik_json(text: str) -> IKObservation:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    return ik_from_dict(obj)


def ik_from_dict(obj) -> IKObservation:
    if not isinstance(obj, dict):
        raise MalformedJson("IK observation must be a JSON object")
    for name in ("indicator", "state", "lat", "lon", "observer", "t"):
        if name not in obj:
            raise MissingField(name)
    return IKObservation(
        indicator=obj["indicator"],
        state=obj["state"],
        latitude=obj["lat"],
        longitude=obj["lon"],
        observer=obj["observer"],
        timestamp=obj["t"],
        confidence=obj.get("cf", 1.0),
        description=obj.get("description", ""),
        photo_ref=obj.get("photo_ref"),
    )


def parse_ik_lines(text: str) -> list[IKObservation]:
    """One JSON object per non-blank line; errors carry the 1-based line number."""
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            out.append(parse_ik_json(line))
        except (MalformedJson, MissingField, ValidationError) as exc:
            raise _with_line(exc, lineno) from None
    return out


def _with_line(exc: Exception, lineno: int) -> Exception:
    exc.args = (f"line {lineno}: {exc}",)
    exc.line = lineno
    return exc


def ik_to_fact(obs: IKObservation) -> Fact:
    return Fact(obs.indicator, obs.state, obs.confidence, Domain.INDIGENOUS_KNOWLEDGE, obs.timestamp)
