"""Question-cluster generation from a concept graph.

Five cluster families probe an answering model from different angles:

* positive edge   - a direct subconcept edge, asked forward, expected yes
* inverse edge    - the same edge asked backward, expected no
* negative edge   - two far-apart unrelated concepts, expected no
* path            - a strictly implied (non-adjacent) pair, expected yes
* property        - a property asserted on an ancestor, probed on a
                    descendant, expected yes

Every cluster carries four question phrasings and, in parallel, the four
declarative statements the questions assert. Generation is a pure function
of (graph, config), so a fixed seed reproduces a dataset byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .answers import Answer
from .errors import ConfigError, SchemaViolation, UnknownTemplate, UnreadableSource
from .hierarchy import (
    ConceptGraph,
    ConceptId,
    DeductiveClosure,
    deductive_closure,
    implied_paths,
    unrelated_pairs,
)

DATASET_FORMAT_VERSION = "1"
TEMPLATE_SET_VERSION = "v1"

_ARTICLE_STYLES = ("literal", "grammatical")
_PATH_GRANULARITIES = ("pair", "path")


class ClusterType(str, Enum):
    POSITIVE_EDGE = "positive_edge"
    INVERSE_EDGE = "inverse_edge"
    NEGATIVE_EDGE = "negative_edge"
    PATH = "path"
    PROPERTY_INHERITANCE = "property_inheritance"


@dataclass(frozen=True)
class QuestionCluster:
    """One knowledge item probed through several phrasings.

    `questions[i]` asserts exactly what `statements[i]` states; the answer
    to every question in the cluster is `expected`.
    """

    id: str
    type: ClusterType
    expected: Answer
    source: ConceptId
    target: ConceptId
    questions: tuple[str, ...]
    statements: tuple[str, ...]
    path: tuple[ConceptId, ...] | None = None


@dataclass(frozen=True)
class GenerationConfig:
    seed: int | None = None
    negative_count: int = 0
    min_distance: int = 2
    min_path_len: int = 2
    article_style: str = "literal"
    path_granularity: str = "pair"
    template_set: str = TEMPLATE_SET_VERSION

    def validate(self) -> None:
        if self.negative_count < 0:
            raise ConfigError("negative_count must be >= 0")
        if self.negative_count > 0 and self.seed is None:
            raise ConfigError("a seed is required when negative_count > 0")
        if self.min_distance < 1:
            raise ConfigError("min_distance must be >= 1")
        if self.min_path_len < 1:
            raise ConfigError("min_path_len must be >= 1")
        if self.article_style not in _ARTICLE_STYLES:
            raise ConfigError(f"unknown article_style {self.article_style!r}")
        if self.path_granularity not in _PATH_GRANULARITIES:
            raise ConfigError(f"unknown path_granularity {self.path_granularity!r}")
        if self.template_set != TEMPLATE_SET_VERSION:
            raise ConfigError(f"unknown template_set {self.template_set!r}")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "negative_count": self.negative_count,
            "min_distance": self.min_distance,
            "min_path_len": self.min_path_len,
            "article_style": self.article_style,
            "path_granularity": self.path_granularity,
            "template_set": self.template_set,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GenerationConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise SchemaViolation(f"unknown generation config keys: {sorted(extra)}")
        return cls(**data)


@dataclass(frozen=True)
class ClusterDataset:
    version: str
    graph_fingerprint: str
    config: GenerationConfig
    clusters: tuple[QuestionCluster, ...]


# --- question and statement templates --------------------------------------
#
# The default article style reproduces the source phrasing literally: the
# article is always "a", even before a vowel ("a orthopedic surgeon").
# "grammatical" switches to a/an by leading letter.


def _article(label: str, style: str) -> str:
    if style == "grammatical" and label[:1].lower() in "aeiou":
        return "an"
    return "a"


def subsumption_question(form: str, a: str, b: str, style: str = "literal") -> str:
    ar_a, ar_b = _article(a, style), _article(b, style)
    if form == "plain":
        return f"is {ar_a} {a} {ar_b} {b} ?"
    if form == "type_of":
        return f"is {ar_a} {a} a type of {b} ?"
    if form == "every":
        return f"is every {a} {ar_b} {b} ?"
    if form == "also":
        return f"is {ar_a} {a} also {ar_b} {b} ?"
    raise UnknownTemplate(form)


def subsumption_statement(form: str, a: str, b: str, style: str = "literal") -> str:
    ar_a, ar_b = _article(a, style), _article(b, style)
    if form == "plain":
        return f"{ar_a} {a} is {ar_b} {b}"
    if form == "type_of":
        return f"{ar_a} {a} is a type of {b}"
    if form == "every":
        return f"every {a} is {ar_b} {b}"
    if form == "also":
        return f"{ar_a} {a} is also {ar_b} {b}"
    raise UnknownTemplate(form)


def property_question(form: str, prop: str, subject: str, value: str, style: str = "literal") -> str:
    ar_s = _article(subject, style)
    if form == "property_of":
        return f"is the {prop} of {ar_s} {subject} {value} ?"
    if form == "value_is":
        return f"is {value} the {prop} of {ar_s} {subject} ?"
    raise UnknownTemplate(form)


def property_statement(form: str, prop: str, subject: str, value: str, style: str = "literal") -> str:
    ar_s = _article(subject, style)
    if form == "property_of":
        return f"the {prop} of {ar_s} {subject} is {value}"
    if form == "value_is":
        return f"{value} is the {prop} of {ar_s} {subject}"
    raise UnknownTemplate(form)


SUBSUMPTION_FORMS = ("plain", "type_of", "every", "also")

# Rewrite rules pair each question pattern with its statement builder.
# Match order matters: specific templates come before the bare "is a X a Y"
# form, which would otherwise swallow them.
_REWRITE_RULES: tuple[tuple[re.Pattern[str], object], ...] = (
    (
        re.compile(r"^is (a|an) (.+?) also (a|an) (.+?) \?$"),
        lambda m: f"{m[1]} {m[2]} is also {m[3]} {m[4]}",
    ),
    (
        re.compile(r"^is (a|an) (.+?) a type of (.+?) \?$"),
        lambda m: f"{m[1]} {m[2]} is a type of {m[3]}",
    ),
    (
        re.compile(r"^is every (.+?) (a|an) (.+?) \?$"),
        lambda m: f"every {m[1]} is {m[2]} {m[3]}",
    ),
    (
        re.compile(r"^is the (.+?) of (a|an) (.+?) (.+?) \?$"),
        lambda m: f"the {m[1]} of {m[2]} {m[3]} is {m[4]}",
    ),
    (
        re.compile(r"^is (.+?) the (.+?) of (a|an) (.+?) \?$"),
        lambda m: f"{m[1]} is the {m[2]} of {m[3]} {m[4]}",
    ),
    (
        re.compile(r"^is (a|an) (.+?) (a|an) (.+?) \?$"),
        lambda m: f"{m[1]} {m[2]} is {m[3]} {m[4]}",
    ),
)


def question_to_statement(question: str) -> str:
    """Rewrite a templated question into the statement it asserts.

    Works at template level against the registered question forms, not by
    string heuristics, and raises UnknownTemplate for anything else. Where
    a form is textually ambiguous (a property question whose subject and
    value are both multi-word), the shortest-subject reading wins; datasets
    never rely on this because they store the paired statements.
    """
    for pattern, build in _REWRITE_RULES:
        m = pattern.match(question)
        if m:
            return build(m)
    raise UnknownTemplate(question)


# --- generators -------------------------------------------------------------


def _slug(label: str) -> str:
    out = re.sub(r"[^a-z0-9]+", "-", label.casefold()).strip("-")
    return out or "x"


def _subsumption_cluster(
    kind: ClusterType,
    prefix: str,
    a_id: ConceptId,
    b_id: ConceptId,
    a: str,
    b: str,
    expected: Answer,
    style: str,
    path: tuple[ConceptId, ...] | None = None,
    id_suffix: str = "",
) -> QuestionCluster:
    questions = tuple(subsumption_question(f, a, b, style) for f in SUBSUMPTION_FORMS)
    statements = tuple(subsumption_statement(f, a, b, style) for f in SUBSUMPTION_FORMS)
    return QuestionCluster(
        id=f"{prefix}:{_slug(a)}:{_slug(b)}{id_suffix}",
        type=kind,
        expected=expected,
        source=a_id,
        target=b_id,
        questions=questions,
        statements=statements,
        path=path,
    )


def _edges_by_label(graph: ConceptGraph) -> list[tuple[ConceptId, ConceptId]]:
    label = graph.label_of
    return sorted(graph.edges, key=lambda e: (label(e[0]), label(e[1])))


def gen_positive_clusters(graph: ConceptGraph, config: GenerationConfig) -> list[QuestionCluster]:
    """One expected-yes cluster per direct edge, asked child -> parent."""
    label = graph.label_of
    return [
        _subsumption_cluster(
            ClusterType.POSITIVE_EDGE, "positive-edge",
            child, parent, label(child), label(parent),
            Answer.YES, config.article_style,
        )
        for child, parent in _edges_by_label(graph)
    ]


def gen_inverse_clusters(graph: ConceptGraph, config: GenerationConfig) -> list[QuestionCluster]:
    """One expected-no cluster per direct edge, asked parent -> child.

    Edges whose endpoints are linked by same-as are skipped: asking whether
    the parent is a kind of the child is not false for a synonym pair.
    """
    label = graph.label_of
    out = []
    for child, parent in _edges_by_label(graph):
        if frozenset((child, parent)) in graph.same_as_sets:
            continue
        out.append(
            _subsumption_cluster(
                ClusterType.INVERSE_EDGE, "inverse-edge",
                parent, child, label(parent), label(child),
                Answer.NO, config.article_style,
            )
        )
    return out


def gen_negative_clusters(
    graph: ConceptGraph,
    closure: DeductiveClosure,
    config: GenerationConfig,
) -> list[QuestionCluster]:
    """Expected-no clusters over sampled unrelated, far-apart pairs."""
    if config.negative_count == 0:
        return []
    label = graph.label_of
    pairs = unrelated_pairs(
        graph, closure, config.negative_count,
        seed=config.seed, min_distance=config.min_distance,
    )
    return [
        _subsumption_cluster(
            ClusterType.NEGATIVE_EDGE, "negative-edge",
            a, b, label(a), label(b),
            Answer.NO, config.article_style,
        )
        for a, b in pairs
    ]


def gen_path_clusters(
    graph: ConceptGraph,
    closure: DeductiveClosure,
    config: GenerationConfig,
) -> list[QuestionCluster]:
    """Expected-yes clusters over strictly implied (non-adjacent) pairs.

    With path_granularity "pair" (default) each strictly implied endpoint
    pair yields one cluster and the lexicographically first witness path is
    recorded. With "path" every qualifying path yields its own cluster, so
    a pair reachable several ways is probed once per way.
    """
    label = graph.label_of
    paths = implied_paths(graph, config.min_path_len)
    clusters: list[QuestionCluster] = []
    seen: set[tuple[ConceptId, ConceptId]] = set()
    for path in paths:
        src, dst = path[0], path[-1]
        if (src, dst) in closure.direct:
            continue  # a redundant direct edge is not strictly implied
        if config.path_granularity == "pair":
            if (src, dst) in seen:
                continue
            seen.add((src, dst))
            suffix = ""
        else:
            suffix = ":via:" + "-".join(_slug(label(n)) for n in path[1:-1])
        clusters.append(
            _subsumption_cluster(
                ClusterType.PATH, "path",
                src, dst, label(src), label(dst),
                Answer.YES, config.article_style,
                path=path, id_suffix=suffix,
            )
        )
    return clusters


def gen_property_clusters(
    graph: ConceptGraph,
    closure: DeductiveClosure,
    config: GenerationConfig,
) -> list[QuestionCluster]:
    """Expected-yes clusters checking that descendants inherit a property.

    For an assertion on P and each strict descendant C, the cluster asks:
    the property on P, the subsumption C -> P, and the property on C in two
    phrasings. A model holding the first two beliefs but missing either of
    the last two is inconsistent, not merely ignorant.
    """
    label = graph.label_of
    style = config.article_style
    clusters = []
    assertions = sorted(graph.properties, key=lambda p: (label(p.subject), p.property, p.value))
    for assertion in assertions:
        subject_label = label(assertion.subject)
        descendants = sorted(closure.strict_descendants(assertion.subject), key=label)
        for desc in descendants:
            desc_label = label(desc)
            questions = (
                property_question("property_of", assertion.property, subject_label, assertion.value, style),
                subsumption_question("plain", desc_label, subject_label, style),
                property_question("property_of", assertion.property, desc_label, assertion.value, style),
                property_question("value_is", assertion.property, desc_label, assertion.value, style),
            )
            statements = (
                property_statement("property_of", assertion.property, subject_label, assertion.value, style),
                subsumption_statement("plain", desc_label, subject_label, style),
                property_statement("property_of", assertion.property, desc_label, assertion.value, style),
                property_statement("value_is", assertion.property, desc_label, assertion.value, style),
            )
            clusters.append(
                QuestionCluster(
                    id=f"property:{_slug(subject_label)}:{_slug(desc_label)}:{_slug(assertion.property)}",
                    type=ClusterType.PROPERTY_INHERITANCE,
                    expected=Answer.YES,
                    source=desc,
                    target=assertion.subject,
                    questions=questions,
                    statements=statements,
                )
            )
    return clusters


def generate_dataset(graph: ConceptGraph, config: GenerationConfig) -> ClusterDataset:
    """Run all five generators and bind the result to the graph fingerprint."""
    config.validate()
    closure = deductive_closure(graph)
    clusters: list[QuestionCluster] = []
    clusters += gen_positive_clusters(graph, config)
    clusters += gen_inverse_clusters(graph, config)
    clusters += gen_negative_clusters(graph, closure, config)
    clusters += gen_path_clusters(graph, closure, config)
    clusters += gen_property_clusters(graph, closure, config)
    ids = [c.id for c in clusters]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise SchemaViolation(f"duplicate cluster ids generated: {dupes}")
    return ClusterDataset(
        version=DATASET_FORMAT_VERSION,
        graph_fingerprint=graph.fingerprint,
        config=config,
        clusters=tuple(clusters),
    )


# --- dataset file format ----------------------------------------------------


def dataset_to_dict(dataset: ClusterDataset) -> dict:
    clusters = []
    for c in dataset.clusters:
        entry: dict = {
            "id": c.id,
            "type": c.type.value,
            "expected": c.expected.value,
            "source": c.source,
            "target": c.target,
            "questions": list(c.questions),
            "statements": list(c.statements),
        }
        if c.path is not None:
            entry["path"] = list(c.path)
        clusters.append(entry)
    return {
        "version": dataset.version,
        "graph_fingerprint": dataset.graph_fingerprint,
        "config": dataset.config.to_dict(),
        "clusters": clusters,
    }


def _cluster_from_dict(entry: dict) -> QuestionCluster:
    cid = entry.get("id")
    if not isinstance(cid, str) or not cid:
        raise SchemaViolation(f"cluster with missing or empty id: {entry!r:.120}")

    def fail(reason: str) -> SchemaViolation:
        return SchemaViolation(f"cluster {cid}: {reason}")

    try:
        ctype = ClusterType(entry["type"])
    except (KeyError, ValueError):
        raise fail(f"unknown type {entry.get('type')!r}") from None
    expected = entry.get("expected")
    if expected not in (Answer.YES.value, Answer.NO.value):
        raise fail(f"expected must be yes or no, got {expected!r}")
    questions = entry.get("questions")
    statements = entry.get("statements")
    if not isinstance(questions, list) or not questions or not all(isinstance(q, str) for q in questions):
        raise fail("questions must be a non-empty list of strings")
    if not isinstance(statements, list) or len(statements) != len(questions):
        raise fail("statements must parallel questions one to one")
    source, target = entry.get("source"), entry.get("target")
    if not isinstance(source, str) or not isinstance(target, str):
        raise fail("source and target are required strings")
    path = entry.get("path")
    if path is not None and (not isinstance(path, list) or not all(isinstance(n, str) for n in path)):
        raise fail("path must be a list of concept ids")
    return QuestionCluster(
        id=cid,
        type=ctype,
        expected=Answer(expected),
        source=source,
        target=target,
        questions=tuple(questions),
        statements=tuple(statements),
        path=tuple(path) if path is not None else None,
    )


def dataset_from_dict(data: object) -> ClusterDataset:
    if not isinstance(data, dict):
        raise SchemaViolation("dataset file must hold a JSON object")
    if data.get("version") != DATASET_FORMAT_VERSION:
        raise SchemaViolation(f"unsupported dataset version {data.get('version')!r}")
    fingerprint = data.get("graph_fingerprint")
    if not isinstance(fingerprint, str) or not fingerprint:
        raise SchemaViolation("dataset missing graph_fingerprint")
    config = GenerationConfig.from_dict(data.get("config", {}))
    clusters_raw = data.get("clusters")
    if not isinstance(clusters_raw, list):
        raise SchemaViolation("dataset clusters must be a list")
    clusters = tuple(_cluster_from_dict(c) for c in clusters_raw)
    ids = [c.id for c in clusters]
    if len(ids) != len(set(ids)):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise SchemaViolation(f"duplicate cluster ids: {dupes}")
    return ClusterDataset(
        version=DATASET_FORMAT_VERSION,
        graph_fingerprint=fingerprint,
        config=config,
        clusters=clusters,
    )


def write_dataset(dataset: ClusterDataset, path: str | Path) -> None:
    text = json.dumps(dataset_to_dict(dataset), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def read_dataset(path: str | Path) -> ClusterDataset:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read dataset file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"dataset file {path} is not valid JSON: {exc}") from exc
    return dataset_from_dict(data)


def dataset_fingerprint(dataset: ClusterDataset) -> str:
    """Stable content hash binding results files to their dataset."""
    canonical = json.dumps(dataset_to_dict(dataset), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
