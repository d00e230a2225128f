"""Ingestion of external knowledge-graph entity dumps.

Reads the line-delimited JSON entity format used by large collaborative
KGs (one entity object per line, optionally wrapped in a JSON array with
trailing commas). Only the fields this package needs are interpreted:

    {"id": "Q...", "labels": {lang: {"value": ...}},
     "aliases": {lang: [{"value": ...}, ...]},
     "claims": {pid: [{"mainsnak": {"datavalue": {"value": <target>}}}, ...]}}

where a claim target is either {"id": "Q..."} (an item reference) or a
plain string. Instance-of and subclass-of claims both become subconcept
edges; a configurable identity property becomes same-as links; one seed
property may be carried over as property assertions.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import requests

from .errors import (
    ConfigError,
    EmptyFragment,
    MalformedResponse,
    NetworkError,
    SeedNotFound,
    UnreadableSource,
)
from .hierarchy import Concept, ConceptGraph, PropertyAssertion, build_graph

log = logging.getLogger(__name__)

SUBCLASS_PROPERTIES = ("P279", "P31")
SAME_AS_PROPERTY = "P460"


@dataclass(frozen=True)
class RawEntity:
    """One parsed dump record; claims map property id -> target values."""

    id: str
    labels: dict[str, str]
    aliases: dict[str, tuple[str, ...]]
    claims: dict[str, tuple[str, ...]]

    def label(self, language: str) -> str:
        return self.labels.get(language, self.id)


@dataclass(frozen=True)
class ExtractionSpec:
    """What to pull out of a dump and how far to walk."""

    seed_concept: str
    seed_property: str | None = None
    subclass_properties: tuple[str, ...] = SUBCLASS_PROPERTIES
    same_as_property: str = SAME_AS_PROPERTY
    max_depth: int = 3
    direction: str = "descendants"
    language: str = "en"

    def validate(self) -> None:
        if not self.seed_concept:
            raise ConfigError("seed_concept is required")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.direction not in ("ancestors", "descendants", "both"):
            raise ConfigError(f"unknown direction {self.direction!r}")
        if not self.subclass_properties:
            raise ConfigError("at least one subclass property is required")


@dataclass
class ParseResult:
    entities: list[RawEntity]
    diagnostics: list[str] = field(default_factory=list)


def _claim_targets(snaks: object) -> tuple[str, ...]:
    targets = []
    if not isinstance(snaks, list):
        return ()
    for snak in snaks:
        if not isinstance(snak, dict):
            continue
        value = snak.get("mainsnak", {}).get("datavalue", {}).get("value")
        if isinstance(value, dict) and isinstance(value.get("id"), str):
            targets.append(value["id"])
        elif isinstance(value, str):
            targets.append(value)
    return tuple(targets)


def _parse_record(data: object) -> RawEntity | None:
    if not isinstance(data, dict) or not isinstance(data.get("id"), str) or not data["id"]:
        return None
    labels = {
        lang: entry["value"]
        for lang, entry in (data.get("labels") or {}).items()
        if isinstance(entry, dict) and isinstance(entry.get("value"), str)
    }
    aliases = {
        lang: tuple(
            entry["value"]
            for entry in entries
            if isinstance(entry, dict) and isinstance(entry.get("value"), str)
        )
        for lang, entries in (data.get("aliases") or {}).items()
        if isinstance(entries, list)
    }
    claims = {
        pid: _claim_targets(snaks)
        for pid, snaks in (data.get("claims") or {}).items()
        if isinstance(pid, str)
    }
    return RawEntity(id=data["id"], labels=labels, aliases=aliases, claims=claims)


def parse_entity_dump(source: str | Path | IO[str]) -> ParseResult:
    """Parse a line-delimited dump; malformed lines become diagnostics.

    Well-formed records always come back, in file order; array wrapper
    lines ("[", "]") and trailing commas are tolerated because full dump
    exports carry them.
    """
    if hasattr(source, "read"):
        try:
            text = source.read()
        except OSError as exc:
            raise UnreadableSource(f"cannot read dump stream: {exc}") from exc
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise UnreadableSource(f"cannot read dump file {source}: {exc}") from exc
    result = ParseResult(entities=[])
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip().rstrip(",")
        if not stripped or stripped in ("[", "]"):
            continue
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as exc:
            result.diagnostics.append(f"line {lineno}: not valid JSON: {exc}")
            continue
        entity = _parse_record(data)
        if entity is None:
            result.diagnostics.append(f"line {lineno}: record without a usable id")
            continue
        if not entity.labels:
            result.diagnostics.append(f"line {lineno}: record {entity.id} has no labels; skipped")
            continue
        if entity.id in seen:
            result.diagnostics.append(f"line {lineno}: duplicate entity {entity.id}; keeping the first")
            continue
        seen.add(entity.id)
        result.entities.append(entity)
    return result


def _reaches(adjacency: dict[str, set[str]], start: str, goal: str) -> bool:
    stack = [start]
    seen = {start}
    while stack:
        node = stack.pop()
        if node == goal:
            return True
        for nxt in adjacency.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def extract_fragment(spec: ExtractionSpec, entities: Iterable[RawEntity]) -> ConceptGraph:
    """Walk the dump from the seed and build a validated concept graph.

    Traversal is breadth-first up to max_depth, following subclass claims
    toward ancestors, descendants, or both; every subclass claim between
    two visited entities becomes an edge. Claims that would close a cycle
    are dropped with a logged diagnostic (processing order is sorted, so
    the surviving edge set is deterministic). Entity records are sorted by
    id before construction, making the output a pure function of the dump
    bytes and the spec.
    """
    spec.validate()
    by_id = {e.id: e for e in sorted(entities, key=lambda e: e.id)}
    if spec.seed_concept not in by_id:
        raise SeedNotFound(f"seed concept {spec.seed_concept!r} is not in the dump")

    def parents_of(eid: str) -> list[str]:
        entity = by_id[eid]
        out = {
            target
            for pid in spec.subclass_properties
            for target in entity.claims.get(pid, ())
            if target in by_id
        }
        return sorted(out)

    children_index: dict[str, set[str]] = {}
    for entity in by_id.values():
        for pid in spec.subclass_properties:
            for target in entity.claims.get(pid, ()):
                if target in by_id:
                    children_index.setdefault(target, set()).add(entity.id)

    def children_of(eid: str) -> list[str]:
        return sorted(children_index.get(eid, ()))

    visited = {spec.seed_concept}
    frontier = [spec.seed_concept]
    for _ in range(spec.max_depth):
        nxt: list[str] = []
        for eid in frontier:
            neighbors: list[str] = []
            if spec.direction in ("ancestors", "both"):
                neighbors += parents_of(eid)
            if spec.direction in ("descendants", "both"):
                neighbors += children_of(eid)
            for n in neighbors:
                if n not in visited:
                    visited.add(n)
                    nxt.append(n)
        frontier = sorted(nxt)

    candidate_edges = sorted(
        {
            (child, parent)
            for child in visited
            for parent in parents_of(child)
            if parent in visited and parent != child
        }
    )
    accepted: set[tuple[str, str]] = set()
    adjacency: dict[str, set[str]] = {}
    for child, parent in candidate_edges:
        # Walking child -> parent must not already be possible in reverse.
        if _reaches(adjacency, parent, child):
            log.warning("dropping cycle-closing claim %s -> %s", child, parent)
            continue
        accepted.add((child, parent))
        adjacency.setdefault(child, set()).add(parent)
    if not accepted:
        raise EmptyFragment(
            f"no subconcept edges within depth {spec.max_depth} of {spec.seed_concept!r}"
        )

    concepts = [
        Concept(
            id=eid,
            label=by_id[eid].label(spec.language),
            aliases=by_id[eid].aliases.get(spec.language, ()),
        )
        for eid in sorted(visited)
    ]

    properties: list[PropertyAssertion] = []
    if spec.seed_property:
        prop_entity = by_id.get(spec.seed_property)
        prop_label = prop_entity.label(spec.language) if prop_entity else spec.seed_property
        for eid in sorted(visited):
            for target in by_id[eid].claims.get(spec.seed_property, ()):
                value = by_id[target].label(spec.language) if target in by_id else target
                properties.append(PropertyAssertion(subject=eid, property=prop_label, value=value))

    same_as = sorted(
        {
            (min(eid, target), max(eid, target))
            for eid in visited
            for target in by_id[eid].claims.get(spec.same_as_property, ())
            if target in visited and target != eid
        }
    )

    return build_graph(concepts, accepted, properties, same_as)


# --- live fetching ----------------------------------------------------------


def fetch_live(
    spec: ExtractionSpec,
    endpoint: str,
    *,
    cache_dir: str | Path | None = None,
    rate_limit: float = 0.1,
    timeout: float = 30.0,
    retries: int = 3,
    backoff_base: float = 0.5,
    backoff_cap: float = 8.0,
) -> list[RawEntity]:
    """Fetch entity pages from a REST endpoint, politely and replayably.

    Protocol: GET {endpoint}?seed=<id>&page=<n> returning
    {"entities": [<record>, ...], "next_page": <n+1> | null}. Each page is
    cached on disk by request hash, so a warm cache replays the crawl with
    zero network traffic; live requests honor a minimum interval and retry
    with capped exponential backoff.
    """
    spec.validate()
    cache_path = Path(cache_dir) if cache_dir is not None else None
    if cache_path is not None:
        cache_path.mkdir(parents=True, exist_ok=True)
    session = requests.Session()
    entities: list[RawEntity] = []
    page: int | None = 1
    last_request = 0.0
    while page is not None:
        params = {"seed": spec.seed_concept, "page": str(page)}
        key = hashlib.sha256(
            json.dumps({"endpoint": endpoint, "params": params}, sort_keys=True).encode("utf-8")
        ).hexdigest()
        body: dict | None = None
        if cache_path is not None:
            entry = cache_path / f"{key}.json"
            if entry.exists():
                try:
                    body = json.loads(entry.read_text(encoding="utf-8"))
                except (OSError, json.JSONDecodeError):
                    log.warning("discarding unreadable page cache entry %s", entry.name)
        if body is None:
            last_error: Exception | None = None
            for attempt in range(retries + 1):
                if attempt:
                    time.sleep(min(backoff_cap, backoff_base * 2 ** (attempt - 1)))
                wait = rate_limit - (time.monotonic() - last_request)
                if wait > 0:
                    time.sleep(wait)
                try:
                    last_request = time.monotonic()
                    response = session.get(endpoint, params=params, timeout=timeout)
                except requests.RequestException as exc:
                    last_error = exc
                    continue
                if response.status_code >= 500:
                    last_error = NetworkError(f"server error {response.status_code}")
                    continue
                if response.status_code != 200:
                    raise NetworkError(
                        f"endpoint returned {response.status_code}: {response.text[:200]}"
                    )
                try:
                    body = response.json()
                except ValueError as exc:
                    raise MalformedResponse(f"page {page} is not JSON: {exc}") from exc
                break
            if body is None:
                raise NetworkError(f"page {page} failed after {retries + 1} attempts: {last_error}")
            if cache_path is not None:
                tmp = cache_path / f"{key}.json.tmp"
                tmp.write_text(json.dumps(body, sort_keys=True), encoding="utf-8")
                tmp.replace(cache_path / f"{key}.json")
        if not isinstance(body, dict) or not isinstance(body.get("entities"), list):
            raise MalformedResponse(f"page {page} response missing 'entities' list")
        for record in body["entities"]:
            entity = _parse_record(record)
            if entity is not None:
                entities.append(entity)
        nxt = body.get("next_page")
        if nxt is not None and (not isinstance(nxt, int) or nxt <= page):
            raise MalformedResponse(f"page {page} has non-advancing next_page {nxt!r}")
        page = nxt
    return entities
