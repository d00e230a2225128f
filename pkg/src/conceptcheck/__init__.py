"""Consistency testing of concept-hierarchy knowledge in yes/no answerers.

The pipeline: build or extract a subconcept graph, compute its deductive
closure, generate clusters of questions that must agree, evaluate a model
backend, classify each cluster as consistent, inconsistent, or incomplete,
and optionally re-evaluate with the jointly-missed statements injected as
prompt context.
"""

from .answers import Answer, NormalizedAnswer, normalize_answer
from .backends import (
    Backend,
    NoisyOracle,
    PerfectOracle,
    PromptTemplate,
    RemoteBackend,
    ResponseCache,
    ScriptedBackend,
    backend_from_config,
    load_prompt_template,
    load_scripted_answers,
    render_prompt,
)
from .clusters import (
    ClusterDataset,
    ClusterType,
    GenerationConfig,
    QuestionCluster,
    dataset_fingerprint,
    generate_dataset,
    question_to_statement,
    read_dataset,
    write_dataset,
)
from .errors import (
    AuthMissing,
    ConceptCheckError,
    ConfigError,
    CycleDetected,
    DanglingReference,
    DenominatorMismatch,
    DuplicateLabel,
    EmptyFragment,
    FingerprintMismatch,
    InsufficientPairsWarning,
    MalformedResponse,
    MismatchedDataset,
    NetworkError,
    SchemaViolation,
    SeedNotFound,
    UnknownConcept,
    UnknownTemplate,
    UnreadableSource,
)
from .evaluation import (
    AnswerRecord,
    ContextBlock,
    GroupCount,
    ReportRow,
    ResultSet,
    Verdict,
    build_context,
    classify_cluster,
    compute_report,
    evaluate_dataset,
    improvement,
    load_context,
    read_results,
    report_from_verdicts,
    save_context,
    write_results,
)
from .fixtures import (
    MEDICAL_GENERATION,
    MEDICAL_SPECIALISTS,
    available_fixtures,
    fixture_path,
    load_default_prompt,
    load_finance_graph,
    load_medical_graph,
    load_medical_scenarios,
    medical_dump_path,
    resolve_path,
)
from .hierarchy import (
    Concept,
    ConceptGraph,
    DeductiveClosure,
    PropertyAssertion,
    build_graph,
    deductive_closure,
    graph_fingerprint,
    implied_paths,
    inherited_properties,
    is_subconcept,
    load_graph,
    save_graph,
    unrelated_pairs,
)
from .ingest import (
    ExtractionSpec,
    RawEntity,
    extract_fragment,
    fetch_live,
    parse_entity_dump,
)
from .reporting import format_percent, render_csv, render_markdown, round_percent
from .scenarios import (
    PolicyScenario,
    ScenarioAnswer,
    ScenarioOracle,
    ScenarioQuestion,
    ScenarioQuestionKind,
    ScenarioResult,
    ScenarioSummary,
    evaluate_scenarios,
    expected_answer,
    gen_scenario_questions,
    load_scenarios,
    render_scenario_markdown,
    write_scenario_results,
)

__version__ = "0.1.0"

__all__ = [
    "Answer",
    "AnswerRecord",
    "AuthMissing",
    "Backend",
    "ClusterDataset",
    "ClusterType",
    "Concept",
    "ConceptCheckError",
    "ConceptGraph",
    "ConfigError",
    "ContextBlock",
    "CycleDetected",
    "DanglingReference",
    "DeductiveClosure",
    "DenominatorMismatch",
    "DuplicateLabel",
    "EmptyFragment",
    "ExtractionSpec",
    "FingerprintMismatch",
    "GenerationConfig",
    "GroupCount",
    "InsufficientPairsWarning",
    "MEDICAL_GENERATION",
    "MEDICAL_SPECIALISTS",
    "MalformedResponse",
    "MismatchedDataset",
    "NetworkError",
    "NoisyOracle",
    "NormalizedAnswer",
    "PerfectOracle",
    "PolicyScenario",
    "PromptTemplate",
    "PropertyAssertion",
    "QuestionCluster",
    "RawEntity",
    "RemoteBackend",
    "ReportRow",
    "ResponseCache",
    "ResultSet",
    "ScenarioAnswer",
    "ScenarioOracle",
    "ScenarioQuestion",
    "ScenarioQuestionKind",
    "ScenarioResult",
    "ScenarioSummary",
    "SchemaViolation",
    "ScriptedBackend",
    "SeedNotFound",
    "UnknownConcept",
    "UnknownTemplate",
    "UnreadableSource",
    "Verdict",
    "available_fixtures",
    "backend_from_config",
    "build_context",
    "build_graph",
    "classify_cluster",
    "compute_report",
    "dataset_fingerprint",
    "deductive_closure",
    "evaluate_dataset",
    "evaluate_scenarios",
    "expected_answer",
    "extract_fragment",
    "fetch_live",
    "fixture_path",
    "format_percent",
    "gen_scenario_questions",
    "generate_dataset",
    "graph_fingerprint",
    "implied_paths",
    "improvement",
    "inherited_properties",
    "is_subconcept",
    "load_context",
    "load_default_prompt",
    "load_finance_graph",
    "load_graph",
    "load_medical_graph",
    "load_medical_scenarios",
    "load_prompt_template",
    "load_scenarios",
    "load_scripted_answers",
    "medical_dump_path",
    "normalize_answer",
    "parse_entity_dump",
    "question_to_statement",
    "read_dataset",
    "read_results",
    "render_csv",
    "render_markdown",
    "render_prompt",
    "render_scenario_markdown",
    "report_from_verdicts",
    "resolve_path",
    "round_percent",
    "save_context",
    "save_graph",
    "unrelated_pairs",
    "write_dataset",
    "write_results",
    "write_scenario_results",
]
