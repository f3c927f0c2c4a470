"""Data publishing: canonical JSON serialization and the HTTP service."""

from .serialize import (
    deserialize_recommendation,
    event_to_dict,
    recommendation_to_dict,
    serialize_recommendation,
)

__all__ = [
    "deserialize_recommendation",
    "event_to_dict",
    "recommendation_to_dict",
    "serialize_recommendation",
]
