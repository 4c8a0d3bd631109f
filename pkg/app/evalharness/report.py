import io
import json
from pathlib import Path
from typing import Sequence
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
from pydantic import ValidationError
from evalharness.protocol import STATS_FILE
from schemas.evaluation import ReportInput, SweepResult, SystemStats
from utils import settings as st
from utils.exceptions import ReportError, RunExistsError
from utils.helpers import PathLike, atomic_write_text
from utils.logger import get_logger

logger = get_logger(__name__)

SUMMARY_CSV = "summary.csv"
SUMMARY_JSON = "summary.json"
TREND_SVG = "trend.svg"

AXIS_LABELS = {"block": "encoder block", "m_plus": "M+ (sub-dialogues per positive dialogue)"}
TREND_STYLE = {
    "svg.fonttype": "path",
    "svg.hashsalt": "depprobe",
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


def load_report_input(path: PathLike) -> ReportInput:
    """Read a sweep file, an experiment directory (its stats.json) or an ensemble result."""
    path = Path(path)
    if path.is_dir():
        path = path / STATS_FILE
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"cannot read report input {path}: {e}")
    try:
        if "axis" in obj:
            return SweepResult.model_validate(obj)
        return SystemStats.model_validate(obj)
    except ValidationError as e:
        raise ReportError(f"{path} is neither a sweep nor a system result: {e.errors()[0]['msg']}")


def summary_rows(inputs: Sequence[ReportInput]) -> list[dict]:
    """
    One row per sweep point or system. The axis column holds the swept value
    for a lone sweep, `system@value` when several sweeps are combined, and
    the system name for plain system statistics.
    """
    n_sweeps = sum(isinstance(item, SweepResult) for item in inputs)
    rows = []
    for item in inputs:
        if isinstance(item, SweepResult):
            for point in item.points:
                axis = str(point.value) if n_sweeps == 1 else f"{item.system}@{point.value}"
                rows.append({"axis": axis, **_stat_columns(point.stats)})
        else:
            rows.append({"axis": item.system, **_stat_columns(item.stats)})
    return rows


def _stat_columns(stats) -> dict:
    return {"f1_avg": stats.f1_avg, "f1_max": stats.f1_max, "f1_std": stats.f1_std, "n_seeds": stats.n_seeds}




def _legend_label(name: str) -> str:
    # "$" starts mathtext, a leading "_" hides the entry
    label = name.replace("$", r"\$")
    return f" {label}" if label.startswith("_") else label


def plot_trend(inputs: Sequence[ReportInput]) -> str:
    """
    F1-avg trend as a self-contained SVG document.

    One line per sweep (F1-avg against the swept value) and one dashed
    horizontal reference per plain system. Sweep lines carry the SVG ids
    `sweep-<i>`, references `reference-<j>` and legend labels `legend-<k>`,
    in input order.
    """
    sweeps = [item for item in inputs if isinstance(item, SweepResult)]
    systems = [item for item in inputs if isinstance(item, SystemStats)]
    colors = matplotlib.colormaps["tab10"].colors

    with plt.rc_context(TREND_STYLE):
        fig, ax = plt.subplots(figsize=(7.2, 4.0))
        for i, sweep in enumerate(sweeps):
            (line,) = ax.plot(
                [p.value for p in sweep.points],
                [p.stats.f1_avg for p in sweep.points],
                marker="o",
                color=colors[i % len(colors)],
                label=_legend_label(sweep.system),
            )
            line.set_gid(f"sweep-{i}")
        for j, system in enumerate(systems):
            line = ax.axhline(
                system.stats.f1_avg,
                ls="--",
                color=colors[(len(sweeps) + j) % len(colors)],
                label=_legend_label(system.system),
            )
            line.set_gid(f"reference-{j}")

        values = sorted({p.value for sweep in sweeps for p in sweep.points})
        if values:
            ax.set_xticks(values)
        axes = {sweep.axis.value for sweep in sweeps}
        ax.set_xlabel(AXIS_LABELS.get(axes.pop(), "") if len(axes) == 1 else "")
        ax.set_ylabel("F1-avg")
        ax.set_ylim(0.0, 1.0)
        ax.set_title("F1-avg trend")

        legend = ax.legend(loc="upper left", bbox_to_anchor=(1.02, 1.0), frameon=False)
        for k, text in enumerate(legend.get_texts()):
            text.set_gid(f"legend-{k}")
        fig.tight_layout()

        buffer = io.StringIO()
        fig.savefig(buffer, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buffer.getvalue()


def report(inputs: Sequence[ReportInput], out_dir: PathLike, force: bool = False) -> dict[str, Path]:
    """Write summary.csv, summary.json and trend.svg."""
    if not inputs:
        raise ReportError("nothing to report")

    out_dir = Path(out_dir)
    paths = {"csv": out_dir / SUMMARY_CSV, "json": out_dir / SUMMARY_JSON, "svg": out_dir / TREND_SVG}
    existing = [str(p) for p in paths.values() if p.exists()]
    if existing and not force:
        raise RunExistsError(f"report files already exist: {', '.join(existing)}; pass --force to overwrite")
    out_dir.mkdir(parents=True, exist_ok=True)

    frame = pd.DataFrame(summary_rows(inputs), columns=st.SUMMARY_COLUMNS)
    atomic_write_text(paths["csv"], frame.to_csv(index=False))

    payload = {
        "sweeps": [item.model_dump(mode="json") for item in inputs if isinstance(item, SweepResult)],
        "systems": [item.model_dump(mode="json") for item in inputs if isinstance(item, SystemStats)],
    }
    atomic_write_text(paths["json"], json.dumps(payload, indent=2))
    atomic_write_text(paths["svg"], plot_trend(inputs))

    logger.info("Wrote report (%d rows) to %s", len(frame), out_dir)
    return paths
