"""Policy scenarios: consistency of rule application over the hierarchy.

A scenario states a policy anchored at one concept ("Only pediatric
surgeons can ...") and asks, for every specialist on a roster, whether the
policy applies to them and what it entitles or forbids. Expected answers
come from the deductive closure alone:

* applicability questions follow grant semantics: yes exactly when the
  specialist is the anchor or a subconcept of it;
* policy questions follow the scenario polarity: "grant" mirrors
  applicability, "restriction" negates it (whoever the policy restricts
  loses the permission everyone else keeps).

The policy text itself is handed to the backend as a context line above
each question, so the model answers relative to the stated rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from pathlib import Path

from .answers import Answer, normalize_answer
from .backends import Backend, PromptTemplate, render_prompt
from .errors import (
    ConceptCheckError,
    MismatchedDataset,
    SchemaViolation,
    UnknownConcept,
    UnreadableSource,
)
from .evaluation import Verdict
from .hierarchy import ConceptGraph, ConceptId, DeductiveClosure, is_subconcept

SCENARIO_POLARITIES = ("grant", "restriction")


class ScenarioQuestionKind(str, Enum):
    APPLICABILITY = "applicability"
    POLICY = "policy"


@dataclass(frozen=True)
class PolicyScenario:
    id: str
    policy_text: str
    anchor: ConceptId
    applicability_template: str
    policy_question_template: str
    polarity: str


@dataclass(frozen=True)
class ScenarioQuestion:
    scenario_id: str
    kind: ScenarioQuestionKind
    specialist: ConceptId
    question: str
    expected: Answer


@dataclass(frozen=True)
class ScenarioAnswer:
    scenario_id: str
    kind: ScenarioQuestionKind
    specialist: ConceptId
    question: str
    expected: Answer
    raw: str
    normalized: Answer
    correct: bool
    error: bool = False


@dataclass(frozen=True)
class ScenarioResult:
    scenario: PolicyScenario
    answers: tuple[ScenarioAnswer, ...]

    @cached_property
    def verdict(self) -> Verdict:
        flags = [a.correct for a in self.answers]
        if all(flags):
            return Verdict.CONSISTENT
        if not any(flags):
            return Verdict.INCOMPLETE
        return Verdict.INCONSISTENT


@dataclass(frozen=True)
class ScenarioSummary:
    """Counts behind the two headline numbers."""

    total_questions: int
    incorrect_questions: int
    total_scenarios: int
    inconsistent_scenarios: int

    @property
    def pct_incorrect(self) -> float:
        return 100.0 * self.incorrect_questions / self.total_questions if self.total_questions else 0.0

    @property
    def pct_inconsistent_scenarios(self) -> float:
        return 100.0 * self.inconsistent_scenarios / self.total_scenarios if self.total_scenarios else 0.0


def _validate_scenario(entry: dict, index: int) -> PolicyScenario:
    required = (
        "id",
        "policy_text",
        "anchor",
        "applicability_template",
        "policy_question_template",
        "polarity",
    )
    for key in required:
        if not isinstance(entry.get(key), str) or not entry[key]:
            raise SchemaViolation(f"scenario #{index}: missing or empty field {key!r}")
    if entry["polarity"] not in SCENARIO_POLARITIES:
        raise SchemaViolation(
            f"scenario {entry['id']}: polarity must be one of {SCENARIO_POLARITIES}"
        )
    for key in ("applicability_template", "policy_question_template"):
        if entry[key].count("{specialist}") != 1:
            raise SchemaViolation(
                f"scenario {entry['id']}: {key} must contain {{specialist}} exactly once"
            )
    return PolicyScenario(
        id=entry["id"],
        policy_text=entry["policy_text"],
        anchor=entry["anchor"],
        applicability_template=entry["applicability_template"],
        policy_question_template=entry["policy_question_template"],
        polarity=entry["polarity"],
    )


def load_scenarios(path: str | Path) -> list[PolicyScenario]:
    """Read a scenario file: a JSON array of scenario objects."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"scenario file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise SchemaViolation("scenario file must hold a JSON array")
    scenarios = [_validate_scenario(entry, i) for i, entry in enumerate(data)]
    ids = [s.id for s in scenarios]
    if len(ids) != len(set(ids)):
        raise SchemaViolation("scenario ids must be unique")
    return scenarios


def expected_answer(
    closure: DeductiveClosure,
    scenario: PolicyScenario,
    specialist: ConceptId,
    kind: ScenarioQuestionKind,
) -> Answer:
    """Closure-determined truth for one scenario question."""
    applies = specialist == scenario.anchor or is_subconcept(closure, specialist, scenario.anchor)
    if kind is ScenarioQuestionKind.APPLICABILITY or scenario.polarity == "grant":
        return Answer.YES if applies else Answer.NO
    return Answer.NO if applies else Answer.YES


def gen_scenario_questions(
    scenario: PolicyScenario,
    specialists: list[ConceptId],
    graph: ConceptGraph,
    closure: DeductiveClosure,
) -> list[ScenarioQuestion]:
    """Both templates instantiated for every specialist on the roster."""
    if scenario.anchor not in graph:
        raise UnknownConcept(f"scenario {scenario.id} anchor: {scenario.anchor}")
    out = []
    for kind, template in (
        (ScenarioQuestionKind.APPLICABILITY, scenario.applicability_template),
        (ScenarioQuestionKind.POLICY, scenario.policy_question_template),
    ):
        for specialist in specialists:
            label = graph.label_of(specialist)
            out.append(
                ScenarioQuestion(
                    scenario_id=scenario.id,
                    kind=kind,
                    specialist=specialist,
                    question=template.format(specialist=label),
                    expected=expected_answer(closure, scenario, specialist, kind),
                )
            )
    return out


class ScenarioOracle(Backend):
    """Answers every scenario question correctly.

    Keyed by the fully rendered prompt, not the bare question: scenarios
    routinely share an applicability template, so the same question text can
    carry different expected answers under different policies. The injected
    policy line makes the rendered prompt unambiguous.
    """

    def __init__(
        self,
        scenarios: list[PolicyScenario],
        specialists: list[ConceptId],
        graph: ConceptGraph,
        closure: DeductiveClosure,
        template: PromptTemplate,
        *,
        id: str = "perfect",
    ):
        self.id = id
        self._expected: dict[str, str] = {}
        for scenario in scenarios:
            for q in gen_scenario_questions(scenario, specialists, graph, closure):
                rendered = render_prompt(template, q.question, (scenario.policy_text,))
                self._expected[rendered] = q.expected.value

    def answer(self, question: str, rendered_prompt: str) -> str:
        try:
            return self._expected[rendered_prompt]
        except KeyError:
            raise MismatchedDataset(
                f"scenario oracle was built for different scenarios: {question!r}"
            ) from None


def evaluate_scenarios(
    scenarios: list[PolicyScenario],
    specialists: list[ConceptId],
    graph: ConceptGraph,
    closure: DeductiveClosure,
    backend: Backend,
    template: PromptTemplate,
) -> tuple[list[ScenarioResult], ScenarioSummary]:
    """Ask every scenario question; a backend failure is recorded, not fatal."""
    results = []
    incorrect = 0
    inconsistent = 0
    total_questions = 0
    for scenario in scenarios:
        answers = []
        for q in gen_scenario_questions(scenario, specialists, graph, closure):
            rendered = render_prompt(template, q.question, (scenario.policy_text,))
            try:
                raw = backend.answer(q.question, rendered)
            except ConceptCheckError:
                answers.append(
                    ScenarioAnswer(
                        scenario_id=q.scenario_id, kind=q.kind, specialist=q.specialist,
                        question=q.question, expected=q.expected,
                        raw="", normalized=Answer.OTHER, correct=False, error=True,
                    )
                )
                continue
            normalized = normalize_answer(raw).value
            answers.append(
                ScenarioAnswer(
                    scenario_id=q.scenario_id, kind=q.kind, specialist=q.specialist,
                    question=q.question, expected=q.expected,
                    raw=raw, normalized=normalized, correct=normalized == q.expected,
                )
            )
        result = ScenarioResult(scenario=scenario, answers=tuple(answers))
        results.append(result)
        total_questions += len(answers)
        incorrect += sum(1 for a in answers if not a.correct)
        if result.verdict is Verdict.INCONSISTENT:
            inconsistent += 1
    summary = ScenarioSummary(
        total_questions=total_questions,
        incorrect_questions=incorrect,
        total_scenarios=len(results),
        inconsistent_scenarios=inconsistent,
    )
    return results, summary


def write_scenario_results(
    results: list[ScenarioResult],
    summary: ScenarioSummary,
    backend_id: str,
    path: str | Path,
) -> None:
    """Line-delimited JSON: header, then one record per answered question."""
    lines = [
        json.dumps(
            {
                "record": "header",
                "backend": backend_id,
                "total_questions": summary.total_questions,
                "incorrect_questions": summary.incorrect_questions,
                "total_scenarios": summary.total_scenarios,
                "inconsistent_scenarios": summary.inconsistent_scenarios,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
    ]
    for result in results:
        for a in result.answers:
            lines.append(
                json.dumps(
                    {
                        "record": "scenario_answer",
                        "scenario_id": a.scenario_id,
                        "kind": a.kind.value,
                        "specialist": a.specialist,
                        "question": a.question,
                        "expected": a.expected.value,
                        "raw": a.raw,
                        "normalized": a.normalized.value,
                        "correct": a.correct,
                        "error": a.error,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_scenario_markdown(
    results: list[ScenarioResult],
    summary: ScenarioSummary,
    backend_id: str,
) -> str:
    from .reporting import format_percent  # local import to keep modules acyclic

    lines = [
        "# Scenario report",
        "",
        f"Backend: {backend_id}",
        "",
        "| scenario | anchor | polarity | incorrect answers | verdict |",
        "|---|---|---|---|---|",
    ]
    for result in results:
        wrong = sum(1 for a in result.answers if not a.correct)
        lines.append(
            f"| {result.scenario.id} | {result.scenario.anchor} | {result.scenario.polarity} "
            f"| {wrong}/{len(result.answers)} | {result.verdict.value} |"
        )
    lines += [
        "",
        f"Incorrect individual answers: "
        f"{format_percent(summary.incorrect_questions, summary.total_questions)}% "
        f"({summary.incorrect_questions}/{summary.total_questions})",
        "",
        f"Inconsistent scenarios: "
        f"{format_percent(summary.inconsistent_scenarios, summary.total_scenarios)}% "
        f"({summary.inconsistent_scenarios}/{summary.total_scenarios})",
    ]
    return "\n".join(lines) + "\n"
