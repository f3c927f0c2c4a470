"""Command line interface: run the service, replay a scenario, query a triple file."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigInvalid, PortInUse, RuleSyntaxError, SemintError
from .ontology import parse_select, select
from .replay import ScenarioError, load_scenario, report_json, report_text, run_replay
from .store import load_triples


def _fail(code: int, message: str) -> int:
    print(f"semint: error: {message}", file=sys.stderr)
    return code


def cmd_run(args) -> int:
    from .publish.server import serve

    try:
        cfg = load_config(args.config)
        if args.port is not None:
            cfg.port = args.port
        serve(cfg)
    except PortInUse as exc:
        return _fail(1, str(exc))
    except (ConfigInvalid, SemintError) as exc:
        return _fail(1, str(exc))
    return 0


def cmd_replay(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as exc:
        return _fail(2, str(exc))
    try:
        scenario = load_scenario(args.scenario)
        report = run_replay(scenario, cfg, data_dir=cfg.data_dir / "replay")
    except (ScenarioError, SemintError) as exc:
        return _fail(2, str(exc))
    text = report_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        sys.stdout.write(report_text(report))
    else:
        sys.stderr.write(report_text(report))
        sys.stdout.write(text)
    return 0


def cmd_query(args) -> int:
    try:
        query = parse_select(args.sparql)
    except RuleSyntaxError as exc:
        return _fail(2, str(exc))
    except SemintError as exc:
        return _fail(2, str(exc))
    try:
        store = load_triples(args.store)
    except SemintError as exc:
        return _fail(2, str(exc))
    print(select(store, query).format())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semint", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="serve the HTTP API")
    p.add_argument("--config", required=True)
    p.add_argument("--port", type=int, default=None, help="override the configured port")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="run a scenario offline through the whole pipeline")
    p.add_argument("--scenario", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("query", help="run a SELECT query against a saved triple file")
    p.add_argument("--store", required=True)
    p.add_argument("sparql")
    p.set_defaults(func=cmd_query)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
