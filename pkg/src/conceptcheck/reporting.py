"""Rendering of report rows to Markdown and CSV.

Percentages are rounded half-up to two decimals from the exact counts
(25 -> "25", 4/96 -> "4.17"); the CSV keeps the raw tallies alongside so
no precision is lost in machine output.
"""

from __future__ import annotations

import csv
import io
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .evaluation import GroupCount, ReportRow


def round_percent(count: int, total: int) -> Decimal:
    """Exact 100*count/total rounded half-up to two decimals."""
    if total == 0:
        raise ZeroDivisionError("cannot render a percentage over zero clusters")
    return (Decimal(100 * count) / Decimal(total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def format_percent(count: int, total: int) -> str:
    """Two-decimal half-up rounding with trailing zeros trimmed; "-" when empty."""
    if total == 0:
        return "-"
    text = str(round_percent(count, total))
    return text.rstrip("0").rstrip(".") if "." in text else text


def _improvement_cell(baseline: ReportRow, augmented: ReportRow) -> str:
    # Difference of exact counts, so the rendering matches rounding the
    # exact improvement rather than subtracting two rounded displays.
    return format_percent(
        baseline.all.inconsistent - augmented.all.inconsistent, baseline.all.total
    )


def render_markdown(
    rows: Sequence[ReportRow],
    *,
    dataset_fingerprint: str | None = None,
    baselines: dict[str, ReportRow] | None = None,
    title: str = "Consistency report",
) -> str:
    """One table row per backend, mirroring the evaluation summary layout.

    When `baselines` maps backend ids to their un-augmented rows, an
    improvement column is appended.
    """
    with_improvement = baselines is not None
    lines = [f"# {title}", ""]
    if dataset_fingerprint:
        lines += [f"Dataset fingerprint: `{dataset_fingerprint}`", ""]
    if rows:
        denoms = rows[0].denominators
        lines += [
            f"Clusters: {denoms[3]} total = {denoms[0]} edges + {denoms[1]} paths "
            f"+ {denoms[2]} property inheritance.",
            "",
        ]
    header = (
        "| backend | % incomplete edges | % inconsistent edges | % inconsistent paths "
        "| % inconsistent properties | % all inconsistent |"
    )
    divider = "|---|---|---|---|---|---|"
    if with_improvement:
        header += " % improvement |"
        divider += "---|"
    lines += [header, divider]
    for row in rows:
        cells = [
            row.backend_id,
            format_percent(row.edges.incomplete, row.edges.total),
            format_percent(row.edges.inconsistent, row.edges.total),
            format_percent(row.paths.inconsistent, row.paths.total),
            format_percent(row.property.inconsistent, row.property.total),
            format_percent(row.all.inconsistent, row.all.total),
        ]
        if with_improvement:
            base = baselines.get(row.backend_id)
            cells.append(_improvement_cell(base, row) if base is not None else "-")
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


_GROUPS = ("edges", "paths", "property", "all")


def render_csv(
    rows: Sequence[ReportRow],
    *,
    baselines: dict[str, ReportRow] | None = None,
) -> str:
    """Machine-readable report: verdict counts plus rounded percentages."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    head = ["backend"]
    for group in _GROUPS:
        head += [f"{group}_total", f"{group}_consistent", f"{group}_inconsistent", f"{group}_incomplete"]
    head += [
        "pct_incomplete_edges",
        "pct_inconsistent_edges",
        "pct_inconsistent_paths",
        "pct_inconsistent_property",
        "pct_all_inconsistent",
    ]
    if baselines is not None:
        head.append("pct_improvement")
    writer.writerow(head)
    for row in rows:
        cells: list[object] = [row.backend_id]
        for group in _GROUPS:
            count: GroupCount = getattr(row, group)
            cells += [count.total, count.consistent, count.inconsistent, count.incomplete]
        cells += [
            format_percent(row.edges.incomplete, row.edges.total),
            format_percent(row.edges.inconsistent, row.edges.total),
            format_percent(row.paths.inconsistent, row.paths.total),
            format_percent(row.property.inconsistent, row.property.total),
            format_percent(row.all.inconsistent, row.all.total),
        ]
        if baselines is not None:
            base = baselines.get(row.backend_id)
            cells.append(_improvement_cell(base, row) if base is not None else "-")
        writer.writerow(cells)
    return buffer.getvalue()
