"""
Writers for run outputs: CSV tables, the JSON summary and SVG plots.

CSV bodies depend only on the config hash: no wall-clock time, host names or
worker counts ever reach them, floats are written with 17 significant digits,
and column order is first-seen order with the provenance columns leading.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from estimates.types import json_safe  # noqa: E402
from experiments.config import ExperimentConfig  # noqa: E402
from experiments.types import ExperimentResult, PlotSpec  # noqa: E402
from logging_config import get_logger  # noqa: E402
from settings import ARTIFACT_VERSION  # noqa: E402

logger = get_logger(__name__)

SUMMARY_SCHEMA_VERSION = 1
PROVENANCE_COLUMNS = ("config_hash", "seed", "artifact_version")
CHECKS_TABLE = "checks"


def format_cell(value: Any) -> str:
    """Render one CSV cell; floats round-trip exactly."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if hasattr(value, "item") and not isinstance(value, (list, tuple, dict)):
        return format_cell(value.item())
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(json_safe(value), sort_keys=True, separators=(",", ":"))
    return str(value)


def columns_of(rows: Iterable[Mapping[str, Any]], leading: Sequence[str] = PROVENANCE_COLUMNS) -> List[str]:
    """Union of the row keys in first-seen order, `leading` first."""
    columns = list(leading)
    seen = set(columns)
    for row in rows:
        for key in row:
            if key not in seen:
                seen.add(key)
                columns.append(key)
    return columns


def write_csv(path: Path, rows: Sequence[Mapping[str, Any]], provenance: Mapping[str, Any]) -> Path:
    """
    Write rows with the provenance columns prepended to every row.

    Missing cells are empty strings.
    """
    full_rows = [{**provenance, **row} for row in rows]
    columns = columns_of(full_rows, leading=list(provenance))
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in full_rows:
            writer.writerow([format_cell(row.get(col)) for col in columns])
    return path


def provenance_for(config: ExperimentConfig) -> Dict[str, Any]:
    seeds = config.seeds
    return {
        "config_hash": config.config_hash,
        "seed": seeds[0] if seeds else "",
        "artifact_version": ARTIFACT_VERSION,
    }


def result_tables(result: ExperimentResult) -> Dict[str, List[Dict[str, Any]]]:
    """Every table of a result, with all report rows gathered under `checks`."""
    tables: Dict[str, List[Dict[str, Any]]] = {}
    if result.reports:
        tables[CHECKS_TABLE] = [row for report in result.reports for row in report.rows()]
    for name, rows in result.tables.items():
        tables.setdefault(name, []).extend(rows)
    return tables


def summary_payload(result: ExperimentResult, config: ExperimentConfig) -> Dict[str, Any]:
    verdict = result.verdict
    return {
        "schema_version": SUMMARY_SCHEMA_VERSION,
        "artifact_version": ARTIFACT_VERSION,
        "config_hash": config.config_hash,
        "experiment": config.kind.value,
        "verdict": verdict.value if verdict else None,
        "checks": {
            report.name: {
                "verdict": report.verdict.value,
                "fitted_constant": report.fitted_constant,
                "tolerance": report.tolerance,
                "fits": report.fits,
                "flags": list(report.flags),
                "message": report.message,
            }
            for report in result.reports
        },
        "flags": result.flags,
        "summary": result.summary,
        "message": result.message,
    }


def write_json(path: Path, payload: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(json_safe(dict(payload)), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def render_plot(spec: PlotSpec, path: Path, salt: str) -> Path:
    """
    Draw a PlotSpec to SVG.

    The hash salt and the absent date make equal inputs produce equal files.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": salt, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        try:
            for series in spec.series:
                # log axes drop non-positive points
                pairs = [
                    (float(a), float(b))
                    for a, b in zip(series.x, series.y)
                    if math.isfinite(float(b)) and (not spec.logy or float(b) > 0)
                ]
                x = [a for a, _ in pairs]
                y = [b for _, b in pairs]
                if spec.style == "scatter":
                    ax.scatter(x, y, s=8, label=series.label)
                else:
                    ax.plot(x, y, marker="o", markersize=3, label=series.label)
            if spec.logx:
                ax.set_xscale("log")
            if spec.logy:
                ax.set_yscale("log")
            ax.set_title(spec.title)
            ax.set_xlabel(spec.xlabel)
            ax.set_ylabel(spec.ylabel)
            if len(spec.series) > 1:
                ax.legend(fontsize="small")
            fig.tight_layout()
            fig.savefig(path, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return path


def write_outputs(
    result: ExperimentResult,
    config: ExperimentConfig,
    out_dir: Path,
    plots: bool = True,
) -> List[str]:
    """
    Write all tables, the summary and (optionally) the plots of a result.

    Returns:
        File names written, relative to out_dir, in write order.
    """
    written: List[str] = []
    provenance = provenance_for(config)
    for name, rows in result_tables(result).items():
        if rows:
            written.append(write_csv(out_dir / f"{name}.csv", rows, provenance).name)
    written.append(write_json(out_dir / "summary.json", summary_payload(result, config)).name)

    if plots:
        for spec in result.plots:
            if not any(len(s.x) for s in spec.series):
                logger.debug("Skipping empty plot", extra={"plot": spec.name})
                continue
            written.append(render_plot(spec, out_dir / f"{spec.name}.svg", config.config_hash).name)

    logger.info("Outputs written", extra={"out_dir": str(out_dir), "files": len(written)})
    return written
