"""HTTP routes for every functional group, served from one process."""

from __future__ import annotations

import json
import logging

from fastapi import APIRouter, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import TypeAdapter
from pydantic import ValidationError as PydanticValidationError
from starlette.exceptions import HTTPException as StarletteHTTPException

from .. import errors
from ..ingest import parse_sensor_csv, parse_sensor_xml
from ..model import IKObservation, SensorReading
from ..pipeline import Middleware
from .schemas import (
    Accepted,
    ApiError,
    CompositeEventOut,
    FlushResult,
    Health,
    IKObservationIn,
    QueryResult,
    ReasonResult,
    SensorReadingIn,
)
from .serialize import serialize_recommendations

logger = logging.getLogger(__name__)

_readings_adapter = TypeAdapter(list[SensorReadingIn])

# Most specific classes first.
ERROR_CODES: list[tuple[type[Exception], int, str]] = [
    (errors.MalformedHeader, 400, "sensor.malformed_header"),
    (errors.MalformedXml, 400, "sensor.malformed_xml"),
    (errors.MalformedJson, 400, "json.malformed"),
    (errors.UnboundProjection, 400, "sparql.unbound"),
    (errors.MalformedRow, 422, "sensor.malformed_row"),
    (errors.RowValidationError, 422, "sensor.invalid_row"),
    (errors.MissingElement, 422, "sensor.missing_element"),
    (errors.MissingField, 422, "ik.missing_field"),
    (errors.OutOfOrder, 422, "cep.out_of_order"),
    (errors.ValidationError, 422, "validation"),
]


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content=ApiError(status=status, code=code, message=message).model_dump(),
    )


def _json_body(raw: bytes):
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise errors.MalformedJson(str(exc)) from exc


def build_router(mw: Middleware) -> APIRouter:
    router = APIRouter()

    @router.get("/health", response_model=Health)
    def health():
        return Health()

    @router.post("/ingest/sensor", status_code=202, response_model=Accepted)
    async def ingest_sensor(request: Request):
        raw = await request.body()
        ctype = request.headers.get("content-type", "").split(";")[0].strip().lower()
        if ctype in ("text/csv", "text/plain", ""):
            batch = parse_sensor_csv(raw.decode("utf-8"))
        elif ctype in ("application/xml", "text/xml"):
            batch = parse_sensor_xml(raw.decode("utf-8"))
        elif ctype == "application/json":
            try:
                items = _readings_adapter.validate_python(_json_body(raw))
            except PydanticValidationError as exc:
                raise ApiException(422, "sensor.invalid_json", _first_error(exc)) from exc
            batch = [SensorReading(**item.model_dump()) for item in items]
        else:
            raise ApiException(400, "content_type.unsupported", f"unsupported content type {ctype!r}")
        mw.ingest_readings(batch)
        return Accepted(accepted=len(batch))

    @router.post("/ingest/ik", status_code=202, response_model=Accepted)
    async def ingest_ik(request: Request):
        obj = _json_body(await request.body())
        if not isinstance(obj, dict):
            raise errors.MalformedJson("IK observation must be a JSON object")
        for name in ("indicator", "state", "lat", "lon", "observer", "t"):
            if name not in obj:
                raise errors.MissingField(name)
        try:
            body = IKObservationIn.model_validate(obj)
        except PydanticValidationError as exc:
            raise ApiException(422, "ik.invalid", _first_error(exc)) from exc
        obs = IKObservation(
            indicator=body.indicator,
            state=body.state,
            latitude=body.lat,
            longitude=body.lon,
            observer=body.observer,
            timestamp=body.t,
            confidence=body.cf,
            description=body.description,
            photo_ref=body.photo_ref,
        )
        return Accepted(accepted=mw.ingest_ik([obs]))

    @router.post("/control/flush", response_model=FlushResult)
    def flush(t: int = Query(..., ge=0)):
        events = mw.flush(t)
        mw.reason()
        return FlushResult(events=len(events))

    @router.post("/control/reason", response_model=ReasonResult)
    def reason():
        return ReasonResult(recommendations=len(mw.reason()))

    @router.get("/events/composite", response_model=list[CompositeEventOut])
    def composite(since: int = Query(0, ge=0)):
        return [ev.to_dict() for ev in mw.composite_events(since)]

    @router.get("/recommendations")
    def recommendations():
        return Response(
            content=serialize_recommendations(mw.current_recommendations()),
            media_type="application/json",
        )

    @router.post("/query/sparql", response_model=QueryResult)
    async def sparql(request: Request):
        text = (await request.body()).decode("utf-8", errors="replace")
        try:
            table = mw.query(text)
        except errors.RuleSyntaxError as exc:
            raise ApiException(400, "sparql.syntax", str(exc)) from exc
        return table.to_json()

    return router


def _first_error(exc: PydanticValidationError) -> str:
    err = exc.errors()[0]
    loc = ".".join(str(p) for p in err.get("loc", ()))
    return f"{loc}: {err.get('msg', 'invalid')}" if loc else err.get("msg", "invalid")


def create_app(mw: Middleware) -> FastAPI:
    app = FastAPI(title="semint", version="0.1.0")
    app.state.middleware = mw
    app.include_router(build_router(mw))

    @app.exception_handler(ApiException)
    async def _api(_: Request, exc: ApiException):
        return error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(errors.SemintError)
    async def _domain(_: Request, exc: errors.SemintError):
        for cls, status, code in ERROR_CODES:
            if isinstance(exc, cls):
                return error_response(status, code, str(exc))
        if isinstance(exc, errors.ParseError):
            return error_response(400, "parse", str(exc))
        logger.exception("unhandled middleware error")
        return error_response(500, "internal", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request(_: Request, exc: RequestValidationError):
        err = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(p) for p in err.get("loc", ()))
        return error_response(422, "request.invalid", f"{loc}: {err.get('msg', 'invalid request')}")

    @app.exception_handler(StarletteHTTPException)
    async def _http(_: Request, exc: StarletteHTTPException):
        status = exc.status_code if exc.status_code in (400, 404, 422) else 400
        code = "not_found" if status == 404 else "http"
        return error_response(status, code, str(exc.detail))

    @app.exception_handler(Exception)
    async def _unhandled(_: Request, exc: Exception):
        logger.exception("unhandled error")
        return error_response(500, "internal", "internal server error")

    return app
