"""Concept hierarchy core: immutable graph, deductive closure, and queries.

The graph holds concepts, child->parent subconcept edges, property
assertions, and same-as links. Everything is validated at construction
(`build_graph`), after which instances are immutable and safe to share
across threads. The deductive closure is exact transitive reachability,
not an approximation, and is bound to its source graph by fingerprint.
"""

from __future__ import annotations

import hashlib
import json
import random
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable

from .errors import (
    ConfigError,
    CycleDetected,
    DanglingReference,
    DuplicateLabel,
    InsufficientPairsWarning,
    SchemaViolation,
    UnknownConcept,
    UnreadableSource,
)

# Concept ids are opaque strings: an external KG id (Q-number) or a local slug.
ConceptId = str

GRAPH_FORMAT_VERSION = "1"


@dataclass(frozen=True)
class Concept:
    """A node in the hierarchy. `aliases` are alternative surface labels."""

    id: ConceptId
    label: str
    aliases: tuple[str, ...] = ()


@dataclass(frozen=True)
class PropertyAssertion:
    """`subject` carries `property` with `value`; labels, not ids."""

    subject: ConceptId
    property: str
    value: str


def _normalize_label(label: str) -> str:
    return " ".join(label.split()).casefold()


@dataclass(frozen=True)
class ConceptGraph:
    """Validated, immutable concept graph. Construct via `build_graph`."""

    concepts: tuple[Concept, ...]
    edges: tuple[tuple[ConceptId, ConceptId], ...]
    properties: tuple[PropertyAssertion, ...]
    same_as: tuple[tuple[ConceptId, ConceptId], ...]

    @cached_property
    def by_id(self) -> dict[ConceptId, Concept]:
        return {c.id: c for c in self.concepts}

    @cached_property
    def concept_ids(self) -> tuple[ConceptId, ...]:
        return tuple(c.id for c in self.concepts)

    @cached_property
    def ids_by_label(self) -> tuple[ConceptId, ...]:
        return tuple(c.id for c in sorted(self.concepts, key=lambda c: c.label))

    @cached_property
    def edge_set(self) -> frozenset[tuple[ConceptId, ConceptId]]:
        return frozenset(self.edges)

    @cached_property
    def parents_map(self) -> dict[ConceptId, tuple[ConceptId, ...]]:
        out: dict[ConceptId, list[ConceptId]] = {c.id: [] for c in self.concepts}
        for child, parent in self.edges:
            out[child].append(parent)
        label = self.label_of
        return {k: tuple(sorted(v, key=label)) for k, v in out.items()}

    @cached_property
    def children_map(self) -> dict[ConceptId, tuple[ConceptId, ...]]:
        out: dict[ConceptId, list[ConceptId]] = {c.id: [] for c in self.concepts}
        for child, parent in self.edges:
            out[parent].append(child)
        label = self.label_of
        return {k: tuple(sorted(v, key=label)) for k, v in out.items()}

    @cached_property
    def same_as_sets(self) -> frozenset[frozenset[ConceptId]]:
        return frozenset(frozenset(p) for p in self.same_as)

    @cached_property
    def fingerprint(self) -> str:
        return graph_fingerprint(self.edges)

    def label_of(self, concept: ConceptId) -> str:
        try:
            return self.by_id[concept].label
        except KeyError:
            raise UnknownConcept(concept) from None

    def __contains__(self, concept: ConceptId) -> bool:
        return concept in self.by_id


def graph_fingerprint(edges: Iterable[tuple[ConceptId, ConceptId]]) -> str:
    """Stable hash of the sorted edge list; binds downstream artifacts."""
    lines = sorted(f"{child}\t{parent}" for child, parent in edges)
    return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()


def _find_cycle(edges: frozenset[tuple[ConceptId, ConceptId]], nodes: Iterable[ConceptId]) -> list[ConceptId]:
    parents: dict[ConceptId, list[ConceptId]] = {}
    for a, b in edges:
        parents.setdefault(a, []).append(b)
    # Iterative DFS keeping the current path; first repeated node closes a cycle.
    for start in sorted(nodes):
        path: list[ConceptId] = []
        on_path: set[ConceptId] = set()
        done: set[ConceptId] = set()
        stack: list[tuple[ConceptId, int]] = [(start, 0)]
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                path.append(node)
                on_path.add(node)
            nexts = sorted(parents.get(node, ()))
            if idx < len(nexts):
                stack.append((node, idx + 1))
                nxt = nexts[idx]
                if nxt in on_path:
                    return path[path.index(nxt):] + [nxt]
                if nxt not in done:
                    stack.append((nxt, 0))
            else:
                path.pop()
                on_path.discard(node)
                done.add(node)
    return []


def build_graph(
    concepts: Iterable[Concept],
    edges: Iterable[tuple[ConceptId, ConceptId]],
    properties: Iterable[PropertyAssertion] = (),
    same_as: Iterable[tuple[ConceptId, ConceptId]] = (),
) -> ConceptGraph:
    """Validate and freeze a concept graph.

    Rejects empty or duplicate ids (SchemaViolation), labels that collide
    after whitespace/case normalization (DuplicateLabel), references to
    unknown ids (DanglingReference), and any cycle in the subconcept
    relation, self-edges included (CycleDetected). Repeated edges collapse
    to one.
    """
    concept_list = sorted(concepts, key=lambda c: c.id)
    ids: set[ConceptId] = set()
    seen_labels: dict[str, ConceptId] = {}
    for c in concept_list:
        if not c.id or not c.label:
            raise SchemaViolation(f"concept with empty id or label: {c!r}")
        if c.id in ids:
            raise SchemaViolation(f"duplicate concept id: {c.id}")
        ids.add(c.id)
        norm = _normalize_label(c.label)
        if norm in seen_labels:
            raise DuplicateLabel(f"label {c.label!r} of {c.id} collides with {seen_labels[norm]}")
        seen_labels[norm] = c.id

    edge_set: set[tuple[ConceptId, ConceptId]] = set()
    for child, parent in edges:
        if child not in ids:
            raise DanglingReference(f"edge child {child!r} is not a concept")
        if parent not in ids:
            raise DanglingReference(f"edge parent {parent!r} is not a concept")
        if child == parent:
            raise CycleDetected([child, parent])
        edge_set.add((child, parent))

    prop_list = sorted(properties, key=lambda p: (p.subject, p.property, p.value))
    for p in prop_list:
        if p.subject not in ids:
            raise DanglingReference(f"property subject {p.subject!r} is not a concept")
        if not p.property or not p.value:
            raise SchemaViolation(f"property assertion with empty field: {p!r}")

    same_pairs: set[tuple[ConceptId, ConceptId]] = set()
    for a, b in same_as:
        if a not in ids or b not in ids:
            raise DanglingReference(f"same-as pair ({a!r}, {b!r}) names a non-concept")
        if a == b:
            raise SchemaViolation(f"same-as pair of a concept with itself: {a}")
        same_pairs.add((min(a, b), max(a, b)))

    # Kahn's algorithm; any remainder means a cycle exists.
    remaining_parents = {i: 0 for i in ids}
    children: dict[ConceptId, list[ConceptId]] = {i: [] for i in ids}
    for child, parent in edge_set:
        remaining_parents[child] += 1
        children[parent].append(child)
    queue = [i for i in sorted(ids) if remaining_parents[i] == 0]
    visited = 0
    while queue:
        node = queue.pop()
        visited += 1
        for ch in children[node]:
            remaining_parents[ch] -= 1
            if remaining_parents[ch] == 0:
                queue.append(ch)
    if visited != len(ids):
        leftovers = [i for i in ids if remaining_parents[i] > 0]
        raise CycleDetected(_find_cycle(frozenset(edge_set), leftovers))

    return ConceptGraph(
        concepts=tuple(concept_list),
        edges=tuple(sorted(edge_set)),
        properties=tuple(prop_list),
        same_as=tuple(sorted(same_pairs)),
    )


@dataclass(frozen=True)
class DeductiveClosure:
    """Exact transitive reachability over subconcept edges.

    `implied` holds every ordered (descendant, ancestor) pair, direct edges
    included; the relation is irreflexive. `derived_from` is the fingerprint
    of the source graph.
    """

    nodes: frozenset[ConceptId]
    direct: frozenset[tuple[ConceptId, ConceptId]]
    implied: frozenset[tuple[ConceptId, ConceptId]]
    derived_from: str

    @cached_property
    def strictly_implied(self) -> frozenset[tuple[ConceptId, ConceptId]]:
        return self.implied - self.direct

    @cached_property
    def _ancestor_map(self) -> dict[ConceptId, frozenset[ConceptId]]:
        out: dict[ConceptId, set[ConceptId]] = {n: set() for n in self.nodes}
        for child, parent in self.implied:
            out[child].add(parent)
        return {k: frozenset(v) for k, v in out.items()}

    @cached_property
    def _descendant_map(self) -> dict[ConceptId, frozenset[ConceptId]]:
        out: dict[ConceptId, set[ConceptId]] = {n: set() for n in self.nodes}
        for child, parent in self.implied:
            out[parent].add(child)
        return {k: frozenset(v) for k, v in out.items()}

    def ancestors(self, concept: ConceptId) -> frozenset[ConceptId]:
        self._check(concept)
        return self._ancestor_map[concept]

    def strict_descendants(self, concept: ConceptId) -> frozenset[ConceptId]:
        self._check(concept)
        return self._descendant_map[concept]

    def _check(self, concept: ConceptId) -> None:
        if concept not in self.nodes:
            raise UnknownConcept(concept)


def deductive_closure(graph: ConceptGraph) -> DeductiveClosure:
    """Compute the closure by ancestor propagation in parent-first order."""
    remaining = {i: len(graph.parents_map[i]) for i in graph.concept_ids}
    ancestors: dict[ConceptId, set[ConceptId]] = {}
    queue = [i for i in graph.concept_ids if remaining[i] == 0]
    while queue:
        node = queue.pop()
        acc: set[ConceptId] = set()
        for parent in graph.parents_map[node]:
            acc.add(parent)
            acc |= ancestors[parent]
        ancestors[node] = acc
        for child in graph.children_map[node]:
            remaining[child] -= 1
            if remaining[child] == 0:
                queue.append(child)
    implied = frozenset(
        (child, anc) for child, accs in ancestors.items() for anc in accs
    )
    return DeductiveClosure(
        nodes=frozenset(graph.concept_ids),
        direct=graph.edge_set,
        implied=implied,
        derived_from=graph.fingerprint,
    )


def is_subconcept(
    closure: DeductiveClosure,
    candidate: ConceptId,
    ancestor: ConceptId,
    *,
    reflexive: bool = False,
) -> bool:
    """Strict subsumption by default; `reflexive=True` makes c <= c true."""
    closure._check(candidate)
    closure._check(ancestor)
    if candidate == ancestor:
        return reflexive
    return (candidate, ancestor) in closure.implied


def inherited_properties(
    graph: ConceptGraph,
    closure: DeductiveClosure,
    concept: ConceptId,
) -> list[PropertyAssertion]:
    """Assertions on the concept itself and on every ancestor.

    The assertion's `subject` tells which ancestor each one came from; an
    assertion reachable along several paths appears once.
    """
    if concept not in graph:
        raise UnknownConcept(concept)
    holders = {concept} | set(closure.ancestors(concept))
    hits = {p for p in graph.properties if p.subject in holders}
    return sorted(hits, key=lambda p: (p.property, p.value, p.subject))


def _undirected_components_distance(graph: ConceptGraph):
    adj: dict[ConceptId, set[ConceptId]] = {i: set() for i in graph.concept_ids}
    for child, parent in graph.edges:
        adj[child].add(parent)
        adj[parent].add(child)

    cache: dict[ConceptId, dict[ConceptId, int]] = {}

    def distance(a: ConceptId, b: ConceptId) -> float:
        if a not in cache:
            dist = {a: 0}
            frontier = [a]
            while frontier:
                nxt = []
                for cur in frontier:
                    for other in adj[cur]:
                        if other not in dist:
                            dist[other] = dist[cur] + 1
                            nxt.append(other)
                frontier = nxt
            cache[a] = dist
        return cache[a].get(b, float("inf"))

    return distance


def unrelated_pairs(
    graph: ConceptGraph,
    closure: DeductiveClosure,
    count: int,
    *,
    seed: int,
    min_distance: int = 2,
) -> list[tuple[ConceptId, ConceptId]]:
    """Sample up to `count` ordered pairs with no subsumption either way.

    Candidates are unordered pairs that are unreachable in both directions,
    not linked by same-as, and at undirected distance >= min_distance
    (disconnected counts as infinitely far). Sampling and orientation are
    driven by `seed` only, so a fixed seed reproduces the exact list. When
    fewer candidates exist than requested, all are returned and an
    InsufficientPairsWarning is emitted.
    """
    if count < 0:
        raise ConfigError("count must be >= 0")
    if min_distance < 1:
        raise ConfigError("min_distance must be >= 1")
    label = graph.label_of
    distance = _undirected_components_distance(graph)
    candidates: list[tuple[ConceptId, ConceptId]] = []
    ordered = sorted(graph.concept_ids, key=label)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if (a, b) in closure.implied or (b, a) in closure.implied:
                continue
            if frozenset((a, b)) in graph.same_as_sets:
                continue
            if distance(a, b) < min_distance:
                continue
            candidates.append((a, b))
    rng = random.Random(seed)
    if count >= len(candidates):
        if count > len(candidates):
            warnings.warn(
                f"requested {count} unrelated pairs but only {len(candidates)} exist",
                InsufficientPairsWarning,
                stacklevel=2,
            )
        chosen = list(candidates)
    else:
        chosen = rng.sample(candidates, count)
    return [(a, b) if rng.random() < 0.5 else (b, a) for a, b in chosen]


def implied_paths(graph: ConceptGraph, min_len: int = 2) -> list[tuple[ConceptId, ...]]:
    """Every directed path with at least `min_len` edges.

    Paths are returned as node-id tuples in lexicographic order of their
    label sequences. Enumeration is exhaustive, so this is meant for the
    small graphs the question generators run on, not for bulk extractions.
    """
    if min_len < 1:
        raise ConfigError("min_len must be >= 1")
    label = graph.label_of
    out: list[tuple[ConceptId, ...]] = []

    def extend(path: tuple[ConceptId, ...]) -> None:
        for parent in graph.parents_map[path[-1]]:
            longer = path + (parent,)
            if len(longer) - 1 >= min_len:
                out.append(longer)
            extend(longer)

    for node in graph.ids_by_label:
        extend((node,))
    out.sort(key=lambda p: tuple(label(n) for n in p))
    return out


# --- native file format ---------------------------------------------------
#
# {
#   "version": "1",
#   "concepts":   [{"id", "label", "aliases": [...]}, ...],
#   "edges":      [{"child", "parent"}, ...],
#   "properties": [{"subject", "property", "value"}, ...],
#   "same_as":    [[id, id], ...]
# }
#
# Arrays are kept sorted so a graph always serializes to the same bytes.


def graph_to_dict(graph: ConceptGraph) -> dict:
    return {
        "version": GRAPH_FORMAT_VERSION,
        "concepts": [
            {"id": c.id, "label": c.label, "aliases": list(c.aliases)}
            for c in graph.concepts
        ],
        "edges": [{"child": c, "parent": p} for c, p in graph.edges],
        "properties": [
            {"subject": p.subject, "property": p.property, "value": p.value}
            for p in graph.properties
        ],
        "same_as": [list(pair) for pair in graph.same_as],
    }


def graph_from_dict(data: object) -> ConceptGraph:
    if not isinstance(data, dict):
        raise SchemaViolation("graph file must hold a JSON object")
    for key in ("concepts", "edges"):
        if key not in data:
            raise SchemaViolation(f"graph file missing required key {key!r}")
    try:
        concepts = [
            Concept(id=c["id"], label=c["label"], aliases=tuple(c.get("aliases", ())))
            for c in data["concepts"]
        ]
        edges = [(e["child"], e["parent"]) for e in data["edges"]]
        properties = [
            PropertyAssertion(subject=p["subject"], property=p["property"], value=p["value"])
            for p in data.get("properties", ())
        ]
        same_as = [(a, b) for a, b in data.get("same_as", ())]
    except (TypeError, KeyError, ValueError) as exc:
        raise SchemaViolation(f"malformed graph file: {exc}") from exc
    return build_graph(concepts, edges, properties, same_as)


def save_graph(graph: ConceptGraph, path: str | Path) -> None:
    text = json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_graph(path: str | Path) -> ConceptGraph:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read graph file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"graph file {path} is not valid JSON: {exc}") from exc
    return graph_from_dict(data)
