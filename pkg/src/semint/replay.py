"""Offline batch replay of a scenario through the full pipeline."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from .config import Config
from .errors import ParseError, SemintError, ValidationError
from .ingest import parse_ik_lines, parse_sensor_csv, parse_sensor_xml
from .model import check_timestamp
from .pipeline import Middleware
from .publish.serialize import dumps, recommendation_to_dict


class ScenarioError(SemintError):
    """A scenario file or one of its inputs is unusable; message names file and line."""


@dataclass
class Scenario:
    sensor_files: list[Path]
    ik_files: list[Path]
    flush_at: int


def load_scenario(path: str | os.PathLike) -> Scenario:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: scenario must be a JSON object")
    base = path.parent

    def paths(key: str) -> list[Path]:
        items = obj.get(key, [])
        if not isinstance(items, list) or not all(isinstance(p, str) for p in items):
            raise ScenarioError(f"{path}: {key!r} must be a list of paths")
        return [p if p.is_absolute() else base / p for p in map(Path, items)]

    scenario = Scenario(paths("sensor_files"), paths("ik_files"), obj.get("flush_at"))
    if not scenario.sensor_files and not scenario.ik_files:
        raise ScenarioError(f"{path}: scenario lists no input files")
    try:
        check_timestamp(scenario.flush_at, "flush_at")
    except ValidationError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return scenario


def _read(p: Path) -> str:
    try:
        return p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"{p}: {exc}") from None


def run_replay(scenario: Scenario, cfg: Config, data_dir: Path | None = None) -> dict:
    """Run the pipeline and return the JSON report as a dict.

    With ``data_dir`` a fresh event log and triple file are written there.
    """
    if data_dir is not None:
        data_dir.mkdir(parents=True, exist_ok=True)
        for name in ("events.ndjson", "triples.nt"):
            (data_dir / name).unlink(missing_ok=True)
    mw = Middleware.from_config(cfg, data_dir=data_dir)

    readings = []
    for p in scenario.sensor_files:
        try:
            batch = parse_sensor_xml(_read(p)) if p.suffix.lower() == ".xml" else parse_sensor_csv(_read(p))
        except (ParseError, ValidationError) as exc:
            raise ScenarioError(f"{p}: {exc}") from None
        readings.extend(batch)
    observations = []
    for p in scenario.ik_files:
        try:
            observations.extend(parse_ik_lines(_read(p)))
        except (ParseError, ValidationError) as exc:
            raise ScenarioError(f"{p}: {exc}") from None

    latest = max([r.timestamp for r in readings] + [o.timestamp for o in observations], default=0)
    if scenario.flush_at < latest:
        raise ScenarioError(f"flush_at={scenario.flush_at} precedes the latest input timestamp {latest}")

    mw.ingest_readings(readings)
    mw.ingest_ik(observations)
    mw.flush(scenario.flush_at)
    recs = mw.reason()
    return {
        "composite_events": [ev.to_dict() for ev in mw.events],
        "recommendations": [recommendation_to_dict(r) for r in recs],
    }


def report_json(report: dict) -> str:
    return dumps(report) + "\n"


def report_text(report: dict) -> str:
    lines = [f"composite events: {len(report['composite_events'])}"]
    for ev in report["composite_events"]:
        attrs = ", ".join(f"{k}={v!r}" for k, v in ev["attributes"].items())
        lines.append(f"  {ev['name']} [{ev['window_start']}, {ev['window_end']}) {attrs}")
    lines.append(f"recommendations: {len(report['recommendations'])}")
    for r in report["recommendations"]:
        lines.append(
            f"  {r['event']} [{' && '.join(r['categories'])}] cf={r['cf']!r} "
            f"rule={r['fired_rule']} issued_at={r['issued_at']}"
        )
    return "\n".join(lines) + "\n"
