"""Cluster verdicts, report tallies, context building, and results files."""

from __future__ import annotations

import json
import random
import threading
import time

import pytest

import conceptcheck as cc
from conftest import make_graph

V = cc.Verdict


def record(cluster_id="c", idx=0, correct=True, error=False):
    return cc.AnswerRecord(
        cluster_id=cluster_id,
        question_index=idx,
        raw="yes" if correct else "no",
        normalized=cc.Answer.YES if correct else cc.Answer.NO,
        correct=correct,
        error=error,
    )


@pytest.fixture(scope="module")
def chain():
    """b -> a, c -> b: 2 positive, 2 inverse, 1 path cluster; unique questions."""
    graph = make_graph([("b", "a"), ("c", "b")])
    dataset = cc.generate_dataset(graph, cc.GenerationConfig(seed=1))
    return graph, cc.deductive_closure(graph), dataset


def scripted(dataset, wrong_questions=(), id="scripted"):
    """Answer every question truthfully except the chosen (cluster_id, idx) pairs."""
    flipped = set(wrong_questions)
    answers = {}
    for c in dataset.clusters:
        for i, q in enumerate(c.questions):
            flip = (c.id, i) in flipped
            truth = c.expected.value
            answers[q] = ("no" if truth == "yes" else "yes") if flip else truth
    return cc.ScriptedBackend(answers, id=id)


# --- classify_cluster ---------------------------------------------------------


def test_classify_cluster_partition():
    allright = [record(idx=i, correct=True) for i in range(4)]
    nothing = [record(idx=i, correct=False) for i in range(4)]
    mixed = [record(0, 0, True), record(0, 1, False), record(0, 2, True), record(0, 3, True)]
    assert cc.classify_cluster(allright) is V.CONSISTENT
    assert cc.classify_cluster(nothing) is V.INCOMPLETE
    assert cc.classify_cluster(mixed) is V.INCONSISTENT
    assert cc.classify_cluster([record(correct=True)]) is V.CONSISTENT
    assert cc.classify_cluster([record(correct=False)]) is V.INCOMPLETE


def test_classify_cluster_rejects_empty():
    with pytest.raises(cc.SchemaViolation):
        cc.classify_cluster([])


# --- evaluate_dataset ------------------------------------------------------------


def test_evaluate_with_perfect_oracle(medical_closure, medical_dataset, template):
    oracle = cc.PerfectOracle(medical_closure, medical_dataset)
    rs = cc.evaluate_dataset(medical_dataset, oracle, template)
    assert rs.backend_id == "perfect"
    assert rs.dataset_fingerprint == cc.dataset_fingerprint(medical_dataset)
    assert rs.prompt_fingerprint == template.fingerprint()
    assert rs.context_fingerprint is None
    assert len(rs.records) == 444
    assert all(r.correct and not r.error for r in rs.records)
    assert set(rs.verdicts.values()) == {V.CONSISTENT}


def test_evaluate_keeps_dataset_order(medical_dataset, medical_closure, template):
    rs = cc.evaluate_dataset(medical_dataset, cc.PerfectOracle(medical_closure, medical_dataset), template)
    expected_order = [(c.id, i) for c in medical_dataset.clusters for i in range(len(c.questions))]
    assert [(r.cluster_id, r.question_index) for r in rs.records] == expected_order


def test_evaluate_records_backend_failures_and_continues(chain, template):
    _, closure, dataset = chain
    target = dataset.clusters[0]
    answers = {q: c.expected.value for c in dataset.clusters for q in c.questions if c.id != target.id}
    backend = cc.ScriptedBackend(answers)  # no default: target questions raise
    rs = cc.evaluate_dataset(dataset, backend, template)
    failed = [r for r in rs.records if r.error]
    assert len(failed) == 4
    assert all(r.cluster_id == target.id for r in failed)
    assert all(r.normalized is cc.Answer.OTHER and not r.correct and r.raw == "" for r in failed)
    ok = [r for r in rs.records if not r.error]
    assert all(r.correct for r in ok)
    assert rs.error_count == 4
    assert rs.verdicts[target.id] is V.INCOMPLETE


def test_evaluate_lets_foreign_exceptions_propagate(chain, template):
    _, _, dataset = chain

    class Exploding(cc.Backend):
        id = "exploding"

        def answer(self, question, rendered_prompt):
            raise RuntimeError("wires crossed")

    with pytest.raises(RuntimeError):
        cc.evaluate_dataset(dataset, Exploding(), template)


def test_evaluate_concurrent_backend_preserves_order(medical_dataset, medical_closure, template):
    inner = cc.PerfectOracle(medical_closure, medical_dataset)

    class Jittery(cc.Backend):
        id = "jittery"
        concurrency = 8

        def __init__(self):
            self._rng = random.Random(0)
            self._lock = threading.Lock()
            self.peak = 0
            self._live = 0

        def answer(self, question, rendered_prompt):
            with self._lock:
                self._live += 1
                self.peak = max(self.peak, self._live)
            time.sleep(self._rng.random() / 500)
            with self._lock:
                self._live -= 1
            return inner.answer(question, rendered_prompt)

    backend = Jittery()
    rs = cc.evaluate_dataset(medical_dataset, backend, template)
    expected_order = [(c.id, i) for c in medical_dataset.clusters for i in range(4)]
    assert [(r.cluster_id, r.question_index) for r in rs.records] == expected_order
    assert all(r.correct for r in rs.records)
    assert backend.peak > 1  # requests really overlapped


def test_evaluate_passes_context_to_prompts(chain, template):
    _, closure, dataset = chain
    seen: list[str] = []

    class Recorder(cc.Backend):
        id = "recorder"

        def answer(self, question, rendered_prompt):
            seen.append(rendered_prompt)
            return "yes"

    context = cc.ContextBlock(
        statements=("a b is a a",),
        source_cluster_ids=(),
        backend_ids=("x",),
        dataset_fingerprint=cc.dataset_fingerprint(dataset),
    )
    rs = cc.evaluate_dataset(dataset, Recorder(), template, context)
    assert rs.context_fingerprint == context.fingerprint()
    assert all("a b is a a\nQ: " in prompt for prompt in seen)


# --- report tallies ----------------------------------------------------------------


def test_report_from_verdicts_groups_by_family(medical_dataset):
    verdicts = {c.id: V.CONSISTENT for c in medical_dataset.clusters}
    flip_edge = [c.id for c in medical_dataset.clusters if c.type is cc.ClusterType.NEGATIVE_EDGE][:3]
    flip_path = [c.id for c in medical_dataset.clusters if c.type is cc.ClusterType.PATH][:2]
    flip_prop = [c.id for c in medical_dataset.clusters if c.type is cc.ClusterType.PROPERTY_INHERITANCE][:1]
    for cid in flip_edge + flip_path + flip_prop:
        verdicts[cid] = V.INCONSISTENT
    incomplete_edge = [c.id for c in medical_dataset.clusters if c.type is cc.ClusterType.POSITIVE_EDGE][:4]
    for cid in incomplete_edge:
        verdicts[cid] = V.INCOMPLETE
    row = cc.report_from_verdicts("synthetic", verdicts, medical_dataset)
    assert row.edges == cc.GroupCount(total=96, consistent=89, inconsistent=3, incomplete=4)
    assert row.paths == cc.GroupCount(total=6, consistent=4, inconsistent=2, incomplete=0)
    assert row.property == cc.GroupCount(total=9, consistent=8, inconsistent=1, incomplete=0)
    assert row.all == cc.GroupCount(total=111, consistent=101, inconsistent=6, incomplete=4)
    assert row.pct_inconsistent_edges == pytest.approx(100 * 3 / 96)
    assert row.pct_incomplete_edges == pytest.approx(100 * 4 / 96)
    assert row.pct_all_inconsistent == pytest.approx(100 * 6 / 111)


def test_report_from_verdicts_requires_every_cluster(medical_dataset):
    verdicts = {c.id: V.CONSISTENT for c in medical_dataset.clusters[:-1]}
    with pytest.raises(cc.MismatchedDataset):
        cc.report_from_verdicts("x", verdicts, medical_dataset)


def test_compute_report_checks_fingerprint(chain, medical_dataset, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    with pytest.raises(cc.MismatchedDataset):
        cc.compute_report(rs, medical_dataset)
    row = cc.compute_report(rs, dataset)
    assert row.all.inconsistent == 0
    assert row.all.incomplete == 0
    assert row.all.consistent == row.all.total == 5


def test_group_count_pct_handles_empty_group():
    assert cc.GroupCount(total=0, consistent=0, inconsistent=0, incomplete=0).pct(0) == 0.0


def test_improvement_from_matching_rows(chain, template):
    _, closure, dataset = chain
    baseline = cc.compute_report(
        cc.evaluate_dataset(dataset, scripted(dataset, [(dataset.clusters[0].id, 0)]), template), dataset
    )
    augmented = cc.compute_report(
        cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template), dataset
    )
    assert cc.improvement(baseline, augmented) == pytest.approx(100 / 5)
    assert cc.improvement(baseline, baseline) == 0.0


def test_improvement_rejects_different_denominators(chain, medical_dataset, medical_closure, template):
    _, closure, dataset = chain
    small = cc.compute_report(
        cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template), dataset
    )
    big = cc.compute_report(
        cc.evaluate_dataset(
            medical_dataset, cc.PerfectOracle(medical_closure, medical_dataset), template
        ),
        medical_dataset,
    )
    with pytest.raises(cc.DenominatorMismatch):
        cc.improvement(small, big)


# --- build_context -------------------------------------------------------------------


def test_build_context_keeps_only_jointly_missed_questions(chain, template):
    _, _, dataset = chain
    target = dataset.clusters[0]
    rs1 = cc.evaluate_dataset(dataset, scripted(dataset, [(target.id, 0), (target.id, 1)], id="one"), template)
    rs2 = cc.evaluate_dataset(dataset, scripted(dataset, [(target.id, 1), (target.id, 2)], id="two"), template)
    context = cc.build_context([rs1, rs2], dataset)
    assert context.statements == (target.statements[1],)
    assert context.source_cluster_ids == (target.id,)
    assert context.backend_ids == ("one", "two")
    assert context.dataset_fingerprint == cc.dataset_fingerprint(dataset)


def test_build_context_single_backend_takes_all_its_misses(chain, template):
    _, _, dataset = chain
    a, b = dataset.clusters[0], dataset.clusters[3]
    rs = cc.evaluate_dataset(dataset, scripted(dataset, [(a.id, 2), (b.id, 0), (b.id, 3)]), template)
    context = cc.build_context([rs], dataset)
    assert context.statements == (a.statements[2], b.statements[0], b.statements[3])


def test_build_context_cluster_granularity(chain, template):
    _, _, dataset = chain
    target = dataset.clusters[1]
    rs1 = cc.evaluate_dataset(dataset, scripted(dataset, [(target.id, 0)], id="one"), template)
    rs2 = cc.evaluate_dataset(dataset, scripted(dataset, [(target.id, 3)], id="two"), template)
    # Jointly missed questions: none. Jointly imperfect clusters: the target.
    assert cc.build_context([rs1, rs2], dataset).statements == ()
    clustered = cc.build_context([rs1, rs2], dataset, granularity="cluster")
    assert clustered.statements == target.statements
    assert clustered.source_cluster_ids == (target.id,)


def test_build_context_deduplicates_repeated_statements(medical_dataset, medical_closure, template):
    loud = cc.NoisyOracle(medical_closure, medical_dataset, flip_probability=1.0, seed=1)
    rs = cc.evaluate_dataset(medical_dataset, loud, template)
    context = cc.build_context([rs], medical_dataset)
    # Property clusters share their first statement with sibling clusters, so
    # the deduplicated block is strictly smaller than the question count.
    assert len(context.statements) == len(set(context.statements))
    assert len(context.statements) < 444
    all_statements = [s for c in medical_dataset.clusters for s in c.statements]
    firsts = []
    seen = set()
    for s in all_statements:
        if s not in seen:
            seen.add(s)
            firsts.append(s)
    assert list(context.statements) == firsts  # dataset order, first occurrence


def test_build_context_validation(chain, medical_dataset, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    with pytest.raises(cc.MismatchedDataset):
        cc.build_context([], dataset)
    with pytest.raises(cc.MismatchedDataset):
        cc.build_context([rs], medical_dataset)
    with pytest.raises(cc.SchemaViolation):
        cc.build_context([rs], dataset, granularity="paragraph")


def test_perfect_baseline_produces_empty_context(chain, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    context = cc.build_context([rs], dataset)
    assert context.statements == ()
    assert context.source_cluster_ids == ()


# --- context and results files ----------------------------------------------------------


def test_context_round_trip(tmp_path, chain, template):
    _, _, dataset = chain
    rs = cc.evaluate_dataset(dataset, scripted(dataset, [(dataset.clusters[0].id, 1)]), template)
    context = cc.build_context([rs], dataset)
    path = tmp_path / "context.json"
    cc.save_context(context, path)
    assert cc.load_context(path) == context


def test_load_context_errors(tmp_path):
    with pytest.raises(cc.UnreadableSource):
        cc.load_context(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(cc.SchemaViolation):
        cc.load_context(bad)
    bad.write_text(json.dumps({"statements": []}), encoding="utf-8")
    with pytest.raises(cc.SchemaViolation):
        cc.load_context(bad)


def test_results_round_trip(tmp_path, medical_dataset, medical_closure, template):
    noisy = cc.NoisyOracle(medical_closure, medical_dataset, flip_probability=0.3, seed=7)
    rs = cc.evaluate_dataset(medical_dataset, noisy, template)
    path = tmp_path / "results.jsonl"
    cc.write_results(rs, path)
    back = cc.read_results(path)
    assert back == rs
    first = json.loads(path.read_text().splitlines()[0])
    assert first["record"] == "header"
    assert first["backend"] == "noisy-p0.3-s7"
    assert first["version"] == "1"


def test_read_results_reports_line_numbers(tmp_path, chain, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    path = tmp_path / "results.jsonl"
    cc.write_results(rs, path)
    lines = path.read_text().splitlines()

    broken = tmp_path / "broken.jsonl"
    broken.write_text("\n".join([lines[0], "{oops", *lines[2:]]) + "\n", encoding="utf-8")
    with pytest.raises(cc.SchemaViolation) as err:
        cc.read_results(broken)
    assert ":2:" in str(err.value)

    bad_record = json.loads(lines[3])
    del bad_record["normalized"]
    broken.write_text("\n".join([lines[0], lines[1], lines[2], json.dumps(bad_record)]) + "\n")
    with pytest.raises(cc.SchemaViolation) as err:
        cc.read_results(broken)
    assert ":4:" in str(err.value)


def test_read_results_header_rules(tmp_path, chain, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    path = tmp_path / "results.jsonl"
    cc.write_results(rs, path)
    lines = path.read_text().splitlines()

    no_header = tmp_path / "no-header.jsonl"
    no_header.write_text("\n".join(lines[1:]) + "\n", encoding="utf-8")
    with pytest.raises(cc.SchemaViolation):
        cc.read_results(no_header)

    two_headers = tmp_path / "two-headers.jsonl"
    two_headers.write_text("\n".join([lines[0], *lines]) + "\n", encoding="utf-8")
    with pytest.raises(cc.SchemaViolation):
        cc.read_results(two_headers)

    unknown = tmp_path / "unknown.jsonl"
    unknown.write_text("\n".join([lines[0], json.dumps({"record": "telemetry"})]) + "\n")
    with pytest.raises(cc.SchemaViolation):
        cc.read_results(unknown)

    with pytest.raises(cc.UnreadableSource):
        cc.read_results(tmp_path / "absent.jsonl")


def test_read_results_tolerates_blank_lines(tmp_path, chain, template):
    _, closure, dataset = chain
    rs = cc.evaluate_dataset(dataset, cc.PerfectOracle(closure, dataset), template)
    path = tmp_path / "results.jsonl"
    cc.write_results(rs, path)
    padded = tmp_path / "padded.jsonl"
    padded.write_text("\n\n".join(path.read_text().splitlines()) + "\n", encoding="utf-8")
    assert cc.read_results(padded) == rs
