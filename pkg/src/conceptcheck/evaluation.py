"""Evaluation engine: run backends over a dataset, classify, compare.

A cluster's verdict partitions into exactly one of three outcomes:
Consistent (every question answered correctly), Incomplete (every question
answered incorrectly: the knowledge is absent but coherently so), and
Inconsistent (a mix: the model contradicts itself). Answers that are
neither yes nor no count as incorrect.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import groupby
from pathlib import Path
from typing import Iterable, Sequence

from .answers import Answer, normalize_answer
from .backends import Backend, PromptTemplate, render_prompt
from .clusters import ClusterDataset, ClusterType, QuestionCluster, dataset_fingerprint
from .errors import (
    ConceptCheckError,
    DenominatorMismatch,
    MismatchedDataset,
    SchemaViolation,
    UnreadableSource,
)

RESULTS_FORMAT_VERSION = "1"


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    INCOMPLETE = "incomplete"


@dataclass(frozen=True)
class AnswerRecord:
    cluster_id: str
    question_index: int
    raw: str
    normalized: Answer
    correct: bool
    error: bool = False


@dataclass(frozen=True)
class ResultSet:
    """All answers of one backend over one dataset, in dataset order."""

    backend_id: str
    dataset_fingerprint: str
    prompt_fingerprint: str
    context_fingerprint: str | None
    records: tuple[AnswerRecord, ...]

    @cached_property
    def verdicts(self) -> dict[str, Verdict]:
        out: dict[str, Verdict] = {}
        for cluster_id, group in groupby(self.records, key=lambda r: r.cluster_id):
            out[cluster_id] = classify_cluster(group)
        return out

    @cached_property
    def error_count(self) -> int:
        return sum(1 for r in self.records if r.error)

    @cached_property
    def by_question(self) -> dict[tuple[str, int], AnswerRecord]:
        return {(r.cluster_id, r.question_index): r for r in self.records}


def classify_cluster(records: Iterable[AnswerRecord]) -> Verdict:
    """Consistent if all correct, Incomplete if none, Inconsistent otherwise."""
    flags = [r.correct for r in records]
    if not flags:
        raise SchemaViolation("cannot classify a cluster with no answers")
    if all(flags):
        return Verdict.CONSISTENT
    if not any(flags):
        return Verdict.INCOMPLETE
    return Verdict.INCONSISTENT


def evaluate_dataset(
    dataset: ClusterDataset,
    backend: Backend,
    template: PromptTemplate,
    context: "ContextBlock | None" = None,
) -> ResultSet:
    """Ask every dataset question and record normalized, judged answers.

    A backend failure on one question is recorded (as an incorrect Other
    answer with the error flag set) and evaluation continues; it never
    aborts the run. Questions go out concurrently when the backend declares
    a concurrency above one, and records always come back in dataset order.
    """
    statements = context.statements if context is not None else ()
    jobs: list[tuple[QuestionCluster, int, str, str]] = []
    for cluster in dataset.clusters:
        for idx, question in enumerate(cluster.questions):
            jobs.append((cluster, idx, question, render_prompt(template, question, statements)))

    def ask(job: tuple[QuestionCluster, int, str, str]) -> tuple[str | None, ConceptCheckError | None]:
        _, _, question, rendered = job
        try:
            return backend.answer(question, rendered), None
        except ConceptCheckError as exc:
            return None, exc

    workers = getattr(backend, "concurrency", 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(ask, jobs))
    else:
        outcomes = [ask(job) for job in jobs]

    records = []
    for (cluster, idx, _, _), (raw, error) in zip(jobs, outcomes):
        if error is not None:
            records.append(
                AnswerRecord(cluster.id, idx, raw="", normalized=Answer.OTHER, correct=False, error=True)
            )
            continue
        normalized = normalize_answer(raw)
        records.append(
            AnswerRecord(
                cluster.id, idx,
                raw=raw,
                normalized=normalized.value,
                correct=normalized.value == cluster.expected,
            )
        )
    return ResultSet(
        backend_id=backend.id,
        dataset_fingerprint=dataset_fingerprint(dataset),
        prompt_fingerprint=template.fingerprint(),
        context_fingerprint=context.fingerprint() if context is not None else None,
        records=tuple(records),
    )


# --- report rows ------------------------------------------------------------


@dataclass(frozen=True)
class GroupCount:
    """Verdict tally over one cluster family."""

    total: int
    consistent: int
    inconsistent: int
    incomplete: int

    def pct(self, count: int) -> float:
        return 100.0 * count / self.total if self.total else 0.0


_EDGE_TYPES = (ClusterType.POSITIVE_EDGE, ClusterType.INVERSE_EDGE, ClusterType.NEGATIVE_EDGE)


@dataclass(frozen=True)
class ReportRow:
    """Verdict tallies for one backend, grouped the way the report prints.

    Percentage properties are raw (unrounded) values; rendering applies
    half-up rounding to two decimals. Incomplete tallies exist for every
    group even though the rendered table only prints them for edges.
    """

    backend_id: str
    edges: GroupCount
    paths: GroupCount
    property: GroupCount
    all: GroupCount

    @property
    def pct_incomplete_edges(self) -> float:
        return self.edges.pct(self.edges.incomplete)

    @property
    def pct_inconsistent_edges(self) -> float:
        return self.edges.pct(self.edges.inconsistent)

    @property
    def pct_inconsistent_paths(self) -> float:
        return self.paths.pct(self.paths.inconsistent)

    @property
    def pct_inconsistent_property(self) -> float:
        return self.property.pct(self.property.inconsistent)

    @property
    def pct_all_inconsistent(self) -> float:
        return self.all.pct(self.all.inconsistent)

    @property
    def denominators(self) -> tuple[int, int, int, int]:
        return (self.edges.total, self.paths.total, self.property.total, self.all.total)


def _tally(verdicts: Iterable[Verdict]) -> GroupCount:
    vs = list(verdicts)
    return GroupCount(
        total=len(vs),
        consistent=sum(1 for v in vs if v is Verdict.CONSISTENT),
        inconsistent=sum(1 for v in vs if v is Verdict.INCONSISTENT),
        incomplete=sum(1 for v in vs if v is Verdict.INCOMPLETE),
    )


def report_from_verdicts(backend_id: str, verdicts: dict[str, Verdict], dataset: ClusterDataset) -> ReportRow:
    by_type: dict[str, list[Verdict]] = {"edges": [], "paths": [], "property": [], "all": []}
    for cluster in dataset.clusters:
        verdict = verdicts.get(cluster.id)
        if verdict is None:
            raise MismatchedDataset(f"no verdict for cluster {cluster.id}")
        by_type["all"].append(verdict)
        if cluster.type in _EDGE_TYPES:
            by_type["edges"].append(verdict)
        elif cluster.type is ClusterType.PATH:
            by_type["paths"].append(verdict)
        else:
            by_type["property"].append(verdict)
    return ReportRow(
        backend_id=backend_id,
        edges=_tally(by_type["edges"]),
        paths=_tally(by_type["paths"]),
        property=_tally(by_type["property"]),
        all=_tally(by_type["all"]),
    )


def compute_report(resultset: ResultSet, dataset: ClusterDataset) -> ReportRow:
    """Tally the result set's verdicts against its dataset."""
    if resultset.dataset_fingerprint != dataset_fingerprint(dataset):
        raise MismatchedDataset(
            "result set was produced from a different dataset than the one given"
        )
    return report_from_verdicts(resultset.backend_id, resultset.verdicts, dataset)


def improvement(baseline: ReportRow, augmented: ReportRow) -> float:
    """How much context augmentation shrank the all-inconsistent share.

    Computed from the raw fractions, not the rounded displays, so rendering
    the difference matches rounding the exact count delta.
    """
    if baseline.denominators != augmented.denominators:
        raise DenominatorMismatch(
            f"baseline denominators {baseline.denominators} != augmented {augmented.denominators}"
        )
    return baseline.pct_all_inconsistent - augmented.pct_all_inconsistent


# --- context augmentation ---------------------------------------------------


@dataclass(frozen=True)
class ContextBlock:
    """Statements of knowledge every evaluated backend missed.

    `statements` keeps dataset order with duplicates removed; provenance
    names the clusters and backends that produced the block.
    """

    statements: tuple[str, ...]
    source_cluster_ids: tuple[str, ...]
    backend_ids: tuple[str, ...]
    dataset_fingerprint: str

    def fingerprint(self) -> str:
        canonical = json.dumps(
            {"statements": list(self.statements), "dataset": self.dataset_fingerprint},
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_context(
    resultsets: Sequence[ResultSet],
    dataset: ClusterDataset,
    *,
    granularity: str = "question",
) -> ContextBlock:
    """Collect the statements of questions missed by every backend.

    Question granularity (default): a statement joins the block when each
    result set answered its question incorrectly. Cluster granularity: all
    four statements join when no backend got the whole cluster right.
    """
    if granularity not in ("question", "cluster"):
        raise SchemaViolation(f"unknown context granularity {granularity!r}")
    if not resultsets:
        raise MismatchedDataset("build_context needs at least one result set")
    ds_fp = dataset_fingerprint(dataset)
    for rs in resultsets:
        if rs.dataset_fingerprint != ds_fp:
            raise MismatchedDataset(
                f"result set {rs.backend_id} was produced from a different dataset"
            )
    statements: list[str] = []
    seen: set[str] = set()
    clusters_used: list[str] = []
    for cluster in dataset.clusters:
        cluster_hit = False
        if granularity == "cluster":
            if all(rs.verdicts.get(cluster.id) is not Verdict.CONSISTENT for rs in resultsets):
                picked = range(len(cluster.questions))
            else:
                picked = ()
        else:
            picked = [
                idx
                for idx in range(len(cluster.questions))
                if all(not _record(rs, cluster, idx).correct for rs in resultsets)
            ]
        for idx in picked:
            cluster_hit = True
            statement = cluster.statements[idx]
            if statement not in seen:
                seen.add(statement)
                statements.append(statement)
        if cluster_hit:
            clusters_used.append(cluster.id)
    return ContextBlock(
        statements=tuple(statements),
        source_cluster_ids=tuple(clusters_used),
        backend_ids=tuple(rs.backend_id for rs in resultsets),
        dataset_fingerprint=ds_fp,
    )


def _record(rs: ResultSet, cluster: QuestionCluster, idx: int) -> AnswerRecord:
    try:
        return rs.by_question[(cluster.id, idx)]
    except KeyError:
        raise MismatchedDataset(
            f"result set {rs.backend_id} has no answer for {cluster.id}[{idx}]"
        ) from None


def save_context(context: ContextBlock, path: str | Path) -> None:
    payload = {
        "statements": list(context.statements),
        "source_cluster_ids": list(context.source_cluster_ids),
        "backend_ids": list(context.backend_ids),
        "dataset_fingerprint": context.dataset_fingerprint,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_context(path: str | Path) -> ContextBlock:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read context file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"context file {path} is not valid JSON: {exc}") from exc
    try:
        return ContextBlock(
            statements=tuple(data["statements"]),
            source_cluster_ids=tuple(data["source_cluster_ids"]),
            backend_ids=tuple(data["backend_ids"]),
            dataset_fingerprint=data["dataset_fingerprint"],
        )
    except (TypeError, KeyError) as exc:
        raise SchemaViolation(f"malformed context file {path}: {exc}") from exc


# --- results file (line-delimited JSON) --------------------------------------


def write_results(resultset: ResultSet, path: str | Path) -> None:
    """Write a header line, then one answer record per line."""
    lines = [
        json.dumps(
            {
                "record": "header",
                "version": RESULTS_FORMAT_VERSION,
                "backend": resultset.backend_id,
                "dataset_fingerprint": resultset.dataset_fingerprint,
                "prompt_fingerprint": resultset.prompt_fingerprint,
                "context_fingerprint": resultset.context_fingerprint,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
    ]
    for r in resultset.records:
        lines.append(
            json.dumps(
                {
                    "record": "answer",
                    "cluster_id": r.cluster_id,
                    "question_index": r.question_index,
                    "raw": r.raw,
                    "normalized": r.normalized.value,
                    "correct": r.correct,
                    "error": r.error,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_results(path: str | Path) -> ResultSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableSource(f"cannot read results file {path}: {exc}") from exc
    header: dict | None = None
    records: list[AnswerRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        kind = data.get("record")
        if kind == "header":
            if header is not None:
                raise SchemaViolation(f"{path}:{lineno}: duplicate header record")
            header = data
        elif kind == "answer":
            try:
                records.append(
                    AnswerRecord(
                        cluster_id=data["cluster_id"],
                        question_index=int(data["question_index"]),
                        raw=data["raw"],
                        normalized=Answer(data["normalized"]),
                        correct=bool(data["correct"]),
                        error=bool(data.get("error", False)),
                    )
                )
            except (KeyError, ValueError) as exc:
                raise SchemaViolation(f"{path}:{lineno}: malformed answer record: {exc}") from exc
        else:
            raise SchemaViolation(f"{path}:{lineno}: unknown record kind {kind!r}")
    if header is None:
        raise SchemaViolation(f"{path}: missing header record")
    return ResultSet(
        backend_id=header.get("backend", "unknown"),
        dataset_fingerprint=header.get("dataset_fingerprint", ""),
        prompt_fingerprint=header.get("prompt_fingerprint", ""),
        context_fingerprint=header.get("context_fingerprint"),
        records=tuple(records),
    )
