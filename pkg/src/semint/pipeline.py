"""The middleware pipeline: acquisition -> storage -> stream analytics -> reasoning.

One :class:`Middleware` instance backs both the HTTP service and offline replay,
so the two paths share every ordering and serialization decision.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from .cep import CepEngine, CepRule, event_to_fact, parse_cep_rules
from .config import Config
from .ingest import SensorBatch, ik_to_fact
from .model import CompositeEvent, Fact, IKObservation, Recommendation, SensorReading
from .ontology import Vocabulary, align_ik, align_sensor, load_vocabularies, select, parse_select, ResultTable
from .publish.serialize import recommendation_to_dict
from .reason import InferenceRule, facts_from_pipeline, forward_chain, parse_rules
from .store import EventKind, EventLog, TripleStore, save

logger = logging.getLogger(__name__)


class Middleware:
    def __init__(
        self,
        cep_rules: Iterable[CepRule],
        inference_rules: Iterable[InferenceRule],
        vocab: Vocabulary | None = None,
        log: EventLog | None = None,
        store: TripleStore | None = None,
        triples_path: Path | None = None,
    ):
        self.cep_rules = list(cep_rules)
        self.inference_rules = list(inference_rules)
        self.vocab = vocab
        self.engine = CepEngine(self.cep_rules)
        self._rule_by_name = {r.name: r for r in self.cep_rules}
        self.log = log if log is not None else EventLog()
        self.store = store if store is not None else TripleStore()
        self.triples_path = triples_path
        self.lock = self.store.lock
        self.events: list[CompositeEvent] = []
        self.ik_facts: list[Fact] = []
        self.sensor_facts: list[Fact] = []
        self.recommendations: list[Recommendation] = []
        self._seq = 0

    @classmethod
    def from_config(cls, cfg: Config, data_dir: Path | None = None) -> "Middleware":
        """Build from config files; with ``data_dir`` the log and triples persist there."""
        cep_rules = parse_cep_rules(cfg.cep_rules.read_text(encoding="utf-8"))
        inf_rules = parse_rules(cfg.inference_rules.read_text(encoding="utf-8"))
        vocab = load_vocabularies(p.read_text(encoding="utf-8") for p in cfg.vocabularies)
        if data_dir is None:
            return cls(cep_rules, inf_rules, vocab)
        data_dir.mkdir(parents=True, exist_ok=True)
        return cls(
            cep_rules,
            inf_rules,
            vocab,
            log=EventLog(data_dir / "events.ndjson"),
            triples_path=data_dir / "triples.nt",
        )

    def _next_id(self) -> str:
        self._seq += 1
        return f"obs{self._seq:06d}"

    def _persist(self) -> None:
        if self.triples_path is not None:
            save(self.store, self.triples_path)

    def _record_events(self, events: list[CompositeEvent]) -> None:
        for ev in events:
            self.events.append(ev)
            self.log.append(EventKind.COMPOSITE, ev.to_dict(), ev.window_end)
            fact = event_to_fact(self._rule_by_name[ev.source_rule], ev)
            if fact is not None:
                self.sensor_facts.append(fact)

    # -- mutations (writer side) ------------------------------------------

    def ingest_readings(self, readings: Iterable[SensorReading]) -> list[CompositeEvent]:
        """Admit a whole batch or nothing; returns composite events closed by it."""
        batch = SensorBatch(readings)
        with self.lock.write():
            self.engine.check_order(batch)
            events = []
            for r in batch:
                self.log.append(EventKind.SENSOR, r.to_dict(), r.timestamp)
                self.store.insert_all(align_sensor(r, self._next_id()))
                events.extend(self.engine.advance(r))
            self._record_events(events)
            self._persist()
        return events

    def ingest_ik(self, observations: Iterable[IKObservation]) -> int:
        observations = list(observations)
        with self.lock.write():
            for obs in observations:
                self.log.append(EventKind.IK, obs.to_dict(), obs.timestamp)
                self.store.insert_all(align_ik(obs, self._next_id(), self.vocab))
                self.ik_facts.append(ik_to_fact(obs))
            self._persist()
        return len(observations)

    def flush(self, now: int) -> list[CompositeEvent]:
        with self.lock.write():
            events = self.engine.flush(now)
            self._record_events(events)
        return events

    def reason(self, domain: str | None = None) -> list[Recommendation]:
        """Forward-chain over all facts so far; replaces the current recommendations."""
        with self.lock.write():
            fb = facts_from_pipeline(self.ik_facts, self.sensor_facts)
            recs, _ = forward_chain(fb, self.inference_rules, domain=domain)
            recs.sort(key=lambda r: (-r.issued_at, r.event))
            for r in recs:
                self.log.append(EventKind.RECOMMENDATION, recommendation_to_dict(r), r.issued_at)
            self.recommendations = recs
        logger.info("reasoning produced %d recommendation(s)", len(recs))
        return recs

    # -- reads --------------------------------------------------------------

    def composite_events(self, since: int = 0) -> list[CompositeEvent]:
        with self.lock.read():
            return [e for e in self.events if e.window_end > since]

    def current_recommendations(self) -> list[Recommendation]:
        with self.lock.read():
            return list(self.recommendations)

    def query(self, text: str) -> ResultTable:
        return select(self.store, parse_select(text))
