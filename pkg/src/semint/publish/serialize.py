"""Canonical JSON for recommendations and composite events.

Keys come out in a fixed order and floats use the shortest round-trip decimal
form, so identical values always serialize to identical bytes.
"""

from __future__ import annotations

import json

from ..errors import MalformedJson, MissingField
from ..model import CompositeEvent, Recommendation

RECOMMENDATION_KEYS = ("event", "categories", "cf", "fired_rule", "supporting_facts", "issued_at")


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def recommendation_to_dict(r: Recommendation) -> dict:
    return {
        "event": r.event,
        "categories": list(r.categories),
        "cf": float(r.cf),
        "fired_rule": r.fired_rule,
        "supporting_facts": [
            {"subject": s, "state": st, "cf": float(cf)} for s, st, cf in r.supporting_facts
        ],
        "issued_at": r.issued_at,
    }


def serialize_recommendation(r: Recommendation) -> str:
    return dumps(recommendation_to_dict(r))


def recommendation_from_dict(obj: dict) -> Recommendation:
    if not isinstance(obj, dict):
        raise MalformedJson("recommendation must be a JSON object")
    for key in RECOMMENDATION_KEYS:
        if key not in obj:
            raise MissingField(key)
    return Recommendation(
        event=obj["event"],
        categories=tuple(obj["categories"]),
        cf=obj["cf"],
        fired_rule=obj["fired_rule"],
        supporting_facts=tuple((f["subject"], f["state"], f["cf"]) for f in obj["supporting_facts"]),
        issued_at=obj["issued_at"],
    )


def deserialize_recommendation(text: str) -> Recommendation:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    return recommendation_from_dict(obj)


def event_to_dict(ev: CompositeEvent) -> dict:
    return ev.to_dict()


def serialize_recommendations(recs) -> str:
    return "[" + ",".join(serialize_recommendation(r) for r in recs) + "]"
