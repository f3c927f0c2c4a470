"""Request and response models for the HTTP API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, ConfigDict, StrictInt


class ApiError(BaseModel):
    status: int
    code: str
    message: str


class Health(BaseModel):
    status: str = "ok"


class Accepted(BaseModel):
    accepted: int


class FlushResult(BaseModel):
    events: int


class ReasonResult(BaseModel):
    recommendations: int


class SensorReadingIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sensor_id: str
    property: str
    value: float
    unit: str
    timestamp: StrictInt


class IKObservationIn(BaseModel):
    indicator: str
    state: str
    description: str = ""
    lat: float
    lon: float
    observer: str
    t: StrictInt
    cf: float = 1.0
    photo_ref: Optional[str] = None


class CompositeEventOut(BaseModel):
    name: str
    attributes: dict[str, float]
    window_start: int
    window_end: int
    source_rule: str


class QueryResult(BaseModel):
    vars: list[str]
    rows: list[list[str]]
