"""Command-line pipeline: extract -> generate -> evaluate -> augment -> report.

Every option can also live in a JSON run-config file (--config); explicit
flags win over config values. Exit codes: 0 on success, 1 when evaluation
finished but some backend calls failed (the failures are recorded in the
results files), 2 on configuration or input errors. Paths may use the
"fixture:" prefix to name bundled sample data, e.g. fixture:medical_graph.json.
"""

from __future__ import annotations

import functools
import json
import logging
import re
import sys
from pathlib import Path

import click

from .backends import (
    Backend,
    PromptTemplate,
    backend_from_config,
    load_prompt_template,
)
from .clusters import (
    ClusterDataset,
    ClusterType,
    GenerationConfig,
    dataset_fingerprint,
    generate_dataset,
    read_dataset,
    write_dataset,
)
from .errors import ConceptCheckError, ConfigError, SchemaViolation, UnreadableSource
from .evaluation import (
    ResultSet,
    build_context,
    compute_report,
    evaluate_dataset,
    load_context,
    read_results,
    save_context,
    write_results,
)
from .fixtures import MEDICAL_SPECIALISTS, load_default_prompt, resolve_path
from .hierarchy import ConceptGraph, deductive_closure, load_graph, save_graph
from .ingest import ExtractionSpec, extract_fragment, fetch_live, parse_entity_dump
from .reporting import format_percent, render_csv, render_markdown
from .scenarios import (
    ScenarioOracle,
    evaluate_scenarios,
    load_scenarios,
    render_scenario_markdown,
    write_scenario_results,
)

log = logging.getLogger(__name__)

_DIRECTIONS = ("ancestors", "descendants", "both")


def _fail_gracefully(fn):
    """Map domain errors to exit code 2 with a one-line stderr message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConceptCheckError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _load_run_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(resolve_path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UnreadableSource(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaViolation("config file must hold a JSON object")
    return data


def _merge(flag_value, config: dict, *keys, default=None):
    """Flag beats config beats default; config lookup walks nested keys."""
    if flag_value is not None:
        return flag_value
    node = config
    for key in keys:
        if not isinstance(node, dict) or key not in node:
            return default
        node = node[key]
    return node


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", text).strip("-") or "backend"


def _load_prompt(prompt: str | None, config: dict) -> PromptTemplate:
    path = _merge(prompt, config, "prompt")
    if path is None:
        return load_default_prompt()
    return load_prompt_template(resolve_path(path))


def _backend_specs(backend_flags: tuple[str, ...], config: dict) -> list[dict]:
    if backend_flags:
        specs = []
        for text in backend_flags:
            try:
                specs.append(json.loads(text))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"--backend must be a JSON object: {text!r} ({exc})") from exc
        return specs
    from_config = config.get("backends")
    if from_config:
        if not isinstance(from_config, list):
            raise ConfigError("config 'backends' must be a list of backend objects")
        return from_config
    return [{"kind": "perfect"}]


def _apply_cache_dir(specs: list[dict], cache_dir: str | None, config: dict) -> list[dict]:
    directory = _merge(cache_dir, config, "cache_dir")
    if directory is None:
        return specs
    return [
        {**spec, "cache_dir": spec.get("cache_dir", directory)} if spec.get("kind") == "remote" else spec
        for spec in specs
    ]


def _generation_config(config: dict, **flags) -> GenerationConfig:
    gen = config.get("generation", {})
    if not isinstance(gen, dict):
        raise ConfigError("config 'generation' must be an object")
    defaults = GenerationConfig()
    merged = {
        name: flags.get(name) if flags.get(name) is not None else gen.get(name, getattr(defaults, name))
        for name in (
            "seed",
            "negative_count",
            "min_distance",
            "min_path_len",
            "article_style",
            "path_granularity",
        )
    }
    return GenerationConfig(**merged)


def _load_graph_arg(graph: str | None, config: dict) -> ConceptGraph:
    path = _merge(graph, config, "graph", "path")
    if path is None:
        raise ConfigError("a graph file is required (--graph or config graph.path)")
    return load_graph(resolve_path(path))


@click.group()
@click.option("--config", "config_path", default=None, metavar="FILE", help="JSON run-config file.")
@click.option("--verbose", is_flag=True, help="Log progress details to stderr.")
@click.pass_context
@_fail_gracefully
def main(ctx: click.Context, config_path: str | None, verbose: bool) -> None:
    """Test how consistently a model answers questions about a concept hierarchy."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    ctx.obj = _load_run_config(config_path)


@main.command()
@click.option("--dump", default=None, metavar="FILE", help="Line-delimited entity dump to read.")
@click.option("--native", default=None, metavar="FILE", help="Already-native graph file (validate and re-save).")
@click.option("--endpoint", default=None, metavar="URL", help="Live entity endpoint to crawl.")
@click.option("--seed-concept", default=None, help="Entity id to start the walk from.")
@click.option("--seed-property", default=None, help="Property id carried over as assertions.")
@click.option("--max-depth", type=int, default=None)
@click.option("--direction", type=click.Choice(_DIRECTIONS), default=None)
@click.option("--language", default=None)
@click.option("--cache-dir", default=None, metavar="DIR", help="Page cache for live crawls.")
@click.option("--out", "-o", required=True, metavar="FILE", help="Native graph file to write.")
@click.pass_context
@_fail_gracefully
def extract(ctx, dump, native, endpoint, seed_concept, seed_property, max_depth,
            direction, language, cache_dir, out):
    """Build a native graph file from a dump, an endpoint, or a native file."""
    config = ctx.obj or {}
    graph_cfg = config.get("graph", {})
    source_kind = graph_cfg.get("source")
    dump = dump or (graph_cfg.get("path") if source_kind == "dump" else None)
    native = native or (graph_cfg.get("path") if source_kind == "native" else None)
    endpoint = endpoint or graph_cfg.get("endpoint")
    given = [name for name, value in (("--dump", dump), ("--native", native), ("--endpoint", endpoint)) if value]
    if len(given) != 1:
        raise ConfigError(f"exactly one of --dump, --native, --endpoint is required (got {given or 'none'})")

    diagnostics: list[str] = []
    spec = None
    if native:
        graph = load_graph(resolve_path(native))
        source = {"kind": "native", "path": str(native)}
    else:
        extraction = graph_cfg.get("extraction", {})
        spec = ExtractionSpec(
            seed_concept=_merge(seed_concept, extraction, "seed_concept", default=""),
            seed_property=_merge(seed_property, extraction, "seed_property"),
            max_depth=_merge(max_depth, extraction, "max_depth", default=3),
            direction=_merge(direction, extraction, "direction", default="descendants"),
            language=_merge(language, extraction, "language", default="en"),
        )
        if dump:
            parsed = parse_entity_dump(resolve_path(dump))
            diagnostics = parsed.diagnostics
            for line in diagnostics:
                log.warning("dump: %s", line)
            entities = parsed.entities
            source = {"kind": "dump", "path": str(dump)}
        else:
            entities = fetch_live(spec, endpoint, cache_dir=_merge(cache_dir, config, "cache_dir"))
            source = {"kind": "live", "endpoint": endpoint}
        graph = extract_fragment(spec, entities)

    out_path = Path(out)
    save_graph(graph, out_path)
    manifest = {
        "source": source,
        "extraction": None if spec is None else {
            "seed_concept": spec.seed_concept,
            "seed_property": spec.seed_property,
            "max_depth": spec.max_depth,
            "direction": spec.direction,
            "language": spec.language,
        },
        "concepts": len(graph.concepts),
        "edges": len(graph.edges),
        "properties": len(graph.properties),
        "fingerprint": graph.fingerprint,
        "diagnostics": diagnostics,
    }
    manifest_path = out_path.with_name(out_path.stem + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"wrote {out_path} ({len(graph.concepts)} concepts, {len(graph.edges)} edges) + {manifest_path.name}")


@main.command()
@click.option("--graph", default=None, metavar="FILE", required=False)
@click.option("--seed", type=int, default=None, help="Drives unrelated-pair sampling.")
@click.option("--negative-count", type=int, default=None)
@click.option("--min-distance", type=int, default=None)
@click.option("--min-path-len", type=int, default=None)
@click.option("--article-style", type=click.Choice(["literal", "grammatical"]), default=None)
@click.option("--path-granularity", type=click.Choice(["pair", "path"]), default=None)
@click.option("--out", "-o", required=True, metavar="FILE", help="Dataset file to write.")
@click.pass_context
@_fail_gracefully
def generate(ctx, graph, seed, negative_count, min_distance, min_path_len,
             article_style, path_granularity, out):
    """Generate the question-cluster dataset from a graph file."""
    config = ctx.obj or {}
    loaded = _load_graph_arg(graph, config)
    gen_config = _generation_config(
        config,
        seed=seed,
        negative_count=negative_count,
        min_distance=min_distance,
        min_path_len=min_path_len,
        article_style=article_style,
        path_granularity=path_granularity,
    )
    dataset = generate_dataset(loaded, gen_config)
    write_dataset(dataset, out)
    by_type = {kind.value: 0 for kind in ClusterType}
    for cluster in dataset.clusters:
        by_type[cluster.type.value] += 1
    for kind, count in by_type.items():
        click.echo(f"{kind}: {count}")
    questions = sum(len(c.questions) for c in dataset.clusters)
    click.echo(f"total: {len(dataset.clusters)} clusters, {questions} questions -> {out}")


def _build_backends(
    specs: list[dict],
    dataset: ClusterDataset | None,
    graph: ConceptGraph | None,
) -> list[Backend]:
    closure = deductive_closure(graph) if graph is not None else None
    backends = []
    for spec in specs:
        if spec.get("kind") in ("perfect", "noisy") and closure is None:
            raise ConfigError(
                f"backend kind {spec.get('kind')!r} needs --graph to derive the answer key"
            )
        backends.append(backend_from_config(spec, closure=closure, dataset=dataset))
    ids = [b.id for b in backends]
    if len(ids) != len(set(ids)):
        raise ConfigError(f"backend ids must be unique, got {ids}; set explicit 'id' fields")
    return backends


def _write_reports(rows, out_dir: Path, fingerprint: str, baselines=None, title="Consistency report") -> None:
    (out_dir / "report.md").write_text(
        render_markdown(rows, dataset_fingerprint=fingerprint, baselines=baselines, title=title),
        encoding="utf-8",
    )
    (out_dir / "report.csv").write_text(render_csv(rows, baselines=baselines), encoding="utf-8")


@main.command()
@click.option("--dataset", "dataset_path", default=None, metavar="FILE", required=False)
@click.option("--graph", default=None, metavar="FILE", help="Needed by the oracle backend kinds.")
@click.option("--prompt", default=None, metavar="FILE")
@click.option("--backend", "backend_flags", multiple=True, metavar="JSON",
              help='Backend spec, e.g. \'{"kind": "noisy", "flip_probability": 0.3, "seed": 7}\'. Repeatable.')
@click.option("--context", "context_path", default=None, metavar="FILE",
              help="Context block whose statements are injected above every question.")
@click.option("--cache-dir", default=None, metavar="DIR")
@click.option("--out-dir", "-o", required=True, metavar="DIR")
@click.pass_context
@_fail_gracefully
def evaluate(ctx, dataset_path, graph, prompt, backend_flags, context_path, cache_dir, out_dir):
    """Run backends over a dataset; write per-backend results and a report."""
    config = ctx.obj or {}
    dataset_path = _merge(dataset_path, config, "dataset")
    if dataset_path is None:
        raise ConfigError("a dataset file is required (--dataset or config dataset)")
    dataset = read_dataset(resolve_path(dataset_path))
    graph_path = _merge(graph, config, "graph", "path")
    loaded_graph = load_graph(resolve_path(graph_path)) if graph_path else None
    template = _load_prompt(prompt, config)
    context = load_context(resolve_path(context_path)) if context_path else None
    specs = _apply_cache_dir(_backend_specs(backend_flags, config), cache_dir, config)
    backends = _build_backends(specs, dataset, loaded_graph)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    errors = 0
    for backend in backends:
        resultset = evaluate_dataset(dataset, backend, template, context)
        write_results(resultset, out / f"results-{_slug(backend.id)}.jsonl")
        rows.append(compute_report(resultset, dataset))
        errors += resultset.error_count
    _write_reports(rows, out, dataset_fingerprint(dataset))
    click.echo(f"evaluated {len(backends)} backend(s) over {len(dataset.clusters)} clusters -> {out}/report.md")
    if errors:
        click.echo(f"warning: {errors} backend call(s) failed and were recorded as errors", err=True)
        sys.exit(1)


@main.command()
@click.option("--dataset", "dataset_path", required=True, metavar="FILE")
@click.option("--baseline", "baseline_paths", multiple=True, required=True, metavar="FILE",
              help="Results file from an un-augmented run. Repeatable.")
@click.option("--graph", default=None, metavar="FILE")
@click.option("--prompt", default=None, metavar="FILE")
@click.option("--backend", "backend_flags", multiple=True, metavar="JSON")
@click.option("--granularity", type=click.Choice(["question", "cluster"]), default=None)
@click.option("--cache-dir", default=None, metavar="DIR")
@click.option("--out-dir", "-o", required=True, metavar="DIR")
@click.pass_context
@_fail_gracefully
def augment(ctx, dataset_path, baseline_paths, graph, prompt, backend_flags,
            granularity, cache_dir, out_dir):
    """Build context from jointly-missed questions and re-evaluate with it."""
    config = ctx.obj or {}
    dataset = read_dataset(resolve_path(dataset_path))
    baselines = [read_results(resolve_path(p)) for p in baseline_paths]
    context = build_context(
        baselines, dataset, granularity=_merge(granularity, config, "granularity", default="question")
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_context(context, out / "context.json")
    click.echo(f"context: {len(context.statements)} statement(s) -> {out}/context.json")
    if not context.statements:
        click.echo("nothing was missed by every baseline; skipping the augmented run")
        return

    graph_path = _merge(graph, config, "graph", "path")
    loaded_graph = load_graph(resolve_path(graph_path)) if graph_path else None
    template = _load_prompt(prompt, config)
    specs = _apply_cache_dir(_backend_specs(backend_flags, config), cache_dir, config)
    backends = _build_backends(specs, dataset, loaded_graph)

    baseline_rows = {rs.backend_id: compute_report(rs, dataset) for rs in baselines}
    rows = []
    errors = 0
    for backend in backends:
        resultset = evaluate_dataset(dataset, backend, template, context)
        write_results(resultset, out / f"results-{_slug(backend.id)}-augmented.jsonl")
        rows.append(compute_report(resultset, dataset))
        errors += resultset.error_count
    if len(baseline_rows) == 1:
        # A lone baseline pairs with every augmented row even when the ids
        # differ (e.g. replaying a noisy baseline against the perfect oracle).
        only = next(iter(baseline_rows.values()))
        baseline_rows.update({row.backend_id: only for row in rows})
    _write_reports(
        rows, out, dataset_fingerprint(dataset),
        baselines=baseline_rows, title="Consistency report (augmented)",
    )
    click.echo(f"augmented run finished -> {out}/report.md")
    if errors:
        click.echo(f"warning: {errors} backend call(s) failed and were recorded as errors", err=True)
        sys.exit(1)


@main.command()
@click.option("--graph", default=None, metavar="FILE", required=False)
@click.option("--scenarios", "scenario_path", default=None, metavar="FILE",
              help="Scenario file (default: the bundled medical policies).")
@click.option("--specialists", default=None, metavar="IDS",
              help="Comma-separated concept ids the questions quantify over.")
@click.option("--prompt", default=None, metavar="FILE")
@click.option("--backend", "backend_flags", multiple=True, metavar="JSON")
@click.option("--cache-dir", default=None, metavar="DIR")
@click.option("--out-dir", "-o", required=True, metavar="DIR")
@click.pass_context
@_fail_gracefully
def scenarios(ctx, graph, scenario_path, specialists, prompt, backend_flags, cache_dir, out_dir):
    """Evaluate policy scenarios: applicability and policy questions per specialist."""
    config = ctx.obj or {}
    loaded_graph = _load_graph_arg(graph, config)
    scenario_file = _merge(scenario_path, config, "scenarios", default="fixture:scenarios_medical.json")
    policy_scenarios = load_scenarios(resolve_path(scenario_file))
    roster_text = _merge(specialists, config, "specialists")
    if roster_text is None:
        roster = [s for s in MEDICAL_SPECIALISTS if s in loaded_graph]
        if len(roster) != len(MEDICAL_SPECIALISTS):
            raise ConfigError("this graph needs an explicit --specialists roster")
    elif isinstance(roster_text, list):
        roster = list(roster_text)
    else:
        roster = [s.strip() for s in str(roster_text).split(",") if s.strip()]
    closure = deductive_closure(loaded_graph)
    template = _load_prompt(prompt, config)

    specs = _apply_cache_dir(_backend_specs(backend_flags, config), cache_dir, config)
    backends = []
    for spec in specs:
        if spec.get("kind") == "perfect":
            backends.append(
                ScenarioOracle(
                    policy_scenarios, roster, loaded_graph, closure, template,
                    id=spec.get("id", "perfect"),
                )
            )
        elif spec.get("kind") == "noisy":
            raise ConfigError("the noisy backend only evaluates cluster datasets")
        else:
            backends.append(backend_from_config(spec))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_lines = [
        "# Scenario summary",
        "",
        "| backend | % incorrect answers | % inconsistent scenarios |",
        "|---|---|---|",
    ]
    errors = 0
    for backend in backends:
        results, summary = evaluate_scenarios(
            policy_scenarios, roster, loaded_graph, closure, backend, template
        )
        slug = _slug(backend.id)
        write_scenario_results(results, summary, backend.id, out / f"scenario-results-{slug}.jsonl")
        (out / f"scenario-report-{slug}.md").write_text(
            render_scenario_markdown(results, summary, backend.id), encoding="utf-8"
        )
        errors += sum(1 for r in results for a in r.answers if a.error)
        summary_lines.append(
            f"| {backend.id} "
            f"| {format_percent(summary.incorrect_questions, summary.total_questions)} "
            f"| {format_percent(summary.inconsistent_scenarios, summary.total_scenarios)} |"
        )
        click.echo(
            f"{backend.id}: {summary.incorrect_questions}/{summary.total_questions} incorrect, "
            f"{summary.inconsistent_scenarios}/{summary.total_scenarios} inconsistent scenarios"
        )
    (out / "scenario-summary.md").write_text("\n".join(summary_lines) + "\n", encoding="utf-8")
    if errors:
        click.echo(f"warning: {errors} backend call(s) failed and were recorded as errors", err=True)
        sys.exit(1)


@main.command()
@click.option("--dataset", "dataset_path", required=True, metavar="FILE")
@click.option("--results", "results_paths", multiple=True, required=True, metavar="FILE",
              help="Results file to include as a row. Repeatable.")
@click.option("--baseline", "baseline_paths", multiple=True, metavar="FILE",
              help="Baseline results matched to rows by backend id; adds an improvement column.")
@click.option("--title", default=None)
@click.option("--out-dir", "-o", required=True, metavar="DIR")
@click.pass_context
@_fail_gracefully
def report(ctx, dataset_path, results_paths, baseline_paths, title, out_dir):
    """Re-render the consistency report from stored results files."""
    dataset = read_dataset(resolve_path(dataset_path))
    rows = [compute_report(read_results(resolve_path(p)), dataset) for p in results_paths]
    baselines = None
    if baseline_paths:
        baselines = {
            rs.backend_id: compute_report(rs, dataset)
            for rs in (read_results(resolve_path(p)) for p in baseline_paths)
        }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_reports(
        rows, out, dataset_fingerprint(dataset),
        baselines=baselines, title=title or "Consistency report",
    )
    click.echo(f"wrote {out}/report.md and {out}/report.csv")


if __name__ == "__main__":
    main()
