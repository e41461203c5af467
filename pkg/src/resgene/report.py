"""Model-comparison reports: rank CSV, JSON summary, and SVG bar charts.

The CSV mirrors the published comparison-table layout: one rank row per
trait, then aggregate rows for average PCC, relative percentage gain of
the best model, rank-1 counts, average ranks, and the Friedman statistic
with its p-value.  All emissions are byte-deterministic for identical
inputs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import DataError
from .results import RunResult
from .stats import AggregateReport, aggregate_report


def collect_runs(run_dir) -> list[RunResult]:
    """Load every ``*.json`` run result under a directory."""
    paths = sorted(Path(run_dir).glob("*.json"))
    if not paths:
        raise DataError(f"no run result files found in {run_dir}")
    return [RunResult.load(p) for p in paths]


def build_pcc_grid(runs: list[RunResult]):
    """Arrange runs into a complete (traits x models) mean-PCC grid.

    Models and traits are ordered lexicographically so the report does not
    depend on filesystem enumeration order.

    Raises
    ------
    DataError
        If any (trait, model) cell is missing or duplicated, naming the
        cells, or if a cell has an undefined mean PCC.
    """
    models = sorted({r.model for r in runs})
    traits = sorted({r.trait for r in runs})
    cell: dict[tuple[str, str], float] = {}
    for r in runs:
        key = (r.trait, r.model)
        if key in cell:
            raise DataError(f"duplicate run for trait={r.trait!r} model={r.model!r}")
        if r.mean_pcc is None:
            raise DataError(
                f"run for trait={r.trait!r} model={r.model!r} has undefined mean PCC"
            )
        cell[key] = r.mean_pcc
    missing = [(t, m) for t in traits for m in models if (t, m) not in cell]
    if missing:
        listing = ", ".join(f"{t}/{m}" for t, m in missing)
        raise DataError(f"incomplete model x trait grid; missing cells: {listing}")
    table = np.array([[cell[(t, m)] for m in models] for t in traits])
    return table, models, traits


def report_from_runs(runs: list[RunResult]) -> AggregateReport:
    table, models, traits = build_pcc_grid(runs)
    return aggregate_report(table, models, traits)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and float(value).is_integer():
        return str(int(value))
    return format(value, ".10g")


def write_rank_csv(path, report: AggregateReport) -> None:
    """Emit the comparison table as CSV."""
    rt = report.rank_table
    lines = ["trait," + ",".join(rt.models)]
    for i, trait in enumerate(rt.traits):
        lines.append(trait + "," + ",".join(_fmt(v) for v in rt.ranks[i]))
    lines.append("average_pcc," + ",".join(
        format(v, ".10g") for v in report.average_pcc))
    lines.append("average_relative_gain_pct," + ",".join(
        _fmt(None if g is None else round(g, 6)) for g in report.relative_gain_pct))
    lines.append("final_ranking," + ",".join(
        f"{wins}/{total}" for wins, total in report.final_ranking))
    lines.append("average_ranking," + ",".join(
        format(v, ".10g") for v in rt.avg_ranks))
    lines.append("friedman_chi2," + (_fmt(rt.chi2) if rt.chi2 is not None else "undefined"))
    lines.append("p_value," + (format(rt.p_value, ".6e") if rt.p_value is not None else "undefined"))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_dict(report: AggregateReport) -> dict:
    rt = report.rank_table
    return {
        "schema": "resgene.report/1",
        "models": rt.models,
        "traits": rt.traits,
        "ranks": [[float(v) for v in row] for row in rt.ranks],
        "average_ranks": [float(v) for v in rt.avg_ranks],
        "average_pcc": [float(v) for v in report.average_pcc],
        "reference_model": report.reference_model,
        "relative_gain_pct": [
            None if g is None else float(g) for g in report.relative_gain_pct
        ],
        "final_ranking": [
            {"wins": w, "traits": t} for w, t in report.final_ranking
        ],
        "friedman_chi2": rt.chi2,
        "p_value": rt.p_value,
    }


def write_report_json(path, report: AggregateReport) -> None:
    import json

    doc = report_to_dict(report)
    Path(path).write_text(
        json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=2) + "\n",
        encoding="utf-8",
    )


# --- SVG bar charts -------------------------------------------------------

_PALETTE = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
    "#aa3377", "#bbbbbb", "#999933", "#882255",
]


def _dataset_groups(traits: list[str]) -> dict[str, list[str]]:
    """Group traits by a 'dataset:' prefix; bare names share one chart."""
    groups: dict[str, list[str]] = {}
    for t in traits:
        key = t.split(":", 1)[0] if ":" in t else "all"
        groups.setdefault(key, []).append(t)
    return groups


def write_bar_svgs(out_dir, pcc_table: np.ndarray, models: list[str],
                   traits: list[str]) -> list[Path]:
    """One grouped-bar SVG per dataset group; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    groups = _dataset_groups(traits)
    for name in sorted(groups):
        members = groups[name]
        rows = [traits.index(t) for t in members]
        path = out / f"pcc_{name}.svg"
        _write_grouped_bars(path, pcc_table[rows], models, members)
        written.append(path)
    return written


def _write_grouped_bars(path, table: np.ndarray, models: list[str],
                        traits: list[str]) -> None:
    n_traits, n_models = table.shape
    bar_w = 14
    gap = 30
    group_w = n_models * bar_w + gap
    plot_w = n_traits * group_w
    plot_h = 220
    margin_l, margin_t, margin_b = 50, 40, 40
    width = margin_l + plot_w + 20
    height = margin_t + plot_h + margin_b
    top = float(max(table.max(), 0.0)) or 1.0
    top *= 1.15

    def ybar(v):
        return plot_h * max(float(v), 0.0) / top

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="10">',
        f'<line x1="{margin_l}" y1="{margin_t + plot_h}" '
        f'x2="{margin_l + plot_w}" y2="{margin_t + plot_h}" stroke="#333"/>',
        f'<line x1="{margin_l}" y1="{margin_t}" x2="{margin_l}" '
        f'y2="{margin_t + plot_h}" stroke="#333"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        val = top * frac
        y = margin_t + plot_h - plot_h * frac
        parts.append(
            f'<text x="{margin_l - 6}" y="{y + 3:.1f}" text-anchor="end">'
            f'{val:.2f}</text>'
        )
    for i in range(n_traits):
        gx = margin_l + i * group_w + gap / 2
        for j in range(n_models):
            h = ybar(table[i, j])
            x = gx + j * bar_w
            y = margin_t + plot_h - h
            color = _PALETTE[j % len(_PALETTE)]
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w - 2}" '
                f'height="{h:.1f}" fill="{color}"/>'
            )
            parts.append(
                f'<text x="{x + bar_w / 2 - 1:.1f}" y="{y - 3:.1f}" '
                f'text-anchor="middle" font-size="7">{table[i, j]:.4g}</text>'
            )
        parts.append(
            f'<text x="{gx + n_models * bar_w / 2:.1f}" '
            f'y="{margin_t + plot_h + 16}" text-anchor="middle">{traits[i]}</text>'
        )
    legend_y = margin_t + plot_h + 30
    x = margin_l
    for j, model in enumerate(models):
        color = _PALETTE[j % len(_PALETTE)]
        parts.append(f'<rect x="{x}" y="{legend_y - 8}" width="9" height="9" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + 12}" y="{legend_y}">{model}</text>')
        x += 12 + 7 * len(model) + 14
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
