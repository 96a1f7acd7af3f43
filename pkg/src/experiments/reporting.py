"""
Report writers: CSV through pandas, SVG through matplotlib.

Both are deterministic. CSV floats use a fixed format, and the SVG backend
runs with a fixed hash salt and no date stamp, so re-rendering a CSV
reproduces the same file byte for byte.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from src.core.errors import InvalidInputError  # noqa: E402
from src.core.signals import SpectrumSamples, Trajectory, spectrum_frame, trajectory_frame  # noqa: E402
from src.schemas.experiment import SweepRecord  # noqa: E402
from src.schemas.payloads import CalculusResultPayload  # noqa: E402
from src.utils.system_logger import log_function  # noqa: E402

logger = logging.getLogger("hinf.reporting")

FLOAT_FORMAT = "%.12e"
SVG_HASH_SALT = "hinfcalc"

PathLike = Union[str, Path]


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_rows(rows: Sequence[Dict[str, object]], columns: Sequence[str], path: PathLike) -> Path:
    return write_frame(pd.DataFrame(list(rows), columns=list(columns)), path)


@log_function("DEBUG", "WRITE_SWEEP_CSV_OK")
def write_sweep_csv(records: Iterable[SweepRecord], path: PathLike) -> Path:
    """Columns in SweepRecord field order; an empty sweep gives a header-only file."""
    return write_rows([r.to_dict() for r in records], SweepRecord.columns(), path)


def write_admissibility_csv(rows: Sequence[Dict[str, object]], path: PathLike) -> Path:
    return write_rows(rows, ["family", "n", "kappa", "kappa_star", "method"], path)


def write_calculus_json(payload: CalculusResultPayload, path: PathLike) -> Path:
    path = _prepare(path)
    path.write_text(payload.model_dump_json(indent=2), encoding="utf-8")
    return path


def dump_trajectory(trajectory: Trajectory, path: PathLike) -> Path:
    return write_frame(trajectory_frame(trajectory), path)


def dump_spectrum(spectrum: SpectrumSamples, path: PathLike) -> Path:
    return write_frame(spectrum_frame(spectrum), path)


def _apply_style() -> None:
    plt.rcParams.update({
        "svg.hashsalt": SVG_HASH_SALT,
        "svg.fonttype": "path",
        "figure.dpi": 100,
        "font.size": 10,
        "axes.grid": True,
        "grid.alpha": 0.25,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "figure.facecolor": "white",
        "axes.facecolor": "white",
    })


@log_function("DEBUG", "RENDER_SWEEP_SVG_OK")
def render_sweep_svg(csv_path: PathLike, svg_path: PathLike, column: str = "log_ratio") -> Path:
    """Line chart of ``column`` against eps (log axis), one line per (family, n, g_id)."""
    frame = pd.DataFrame([r.to_dict() for r in read_sweep_csv(csv_path)], columns=SweepRecord.columns())
    svg_path = _prepare(svg_path)
    _apply_style()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    try:
        if frame.empty:
            ax.text(0.5, 0.5, "no sweep rows", ha="center", va="center", transform=ax.transAxes)
        else:
            for (family, n, g_id), group in frame.groupby(["family", "n", "g_id"], sort=True):
                group = group.sort_values("eps")
                ax.plot(group["eps"], group[column], marker="o", markersize=3, linewidth=1.2,
                        label=f"{family} n={n} {g_id}")
            ax.set_xscale("log")
            ax.legend(loc="best", fontsize=7)
        ax.set_xlabel("eps")
        ax.set_ylabel(column)
        ax.set_title(f"{column} against eps")
        fig.savefig(svg_path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    finally:
        plt.close(fig)
    return svg_path


def read_sweep_csv(path: PathLike) -> List[SweepRecord]:
    """Rows of a sweep CSV; other column sets are invalid input."""
    frame = pd.read_csv(path)
    try:
        return [SweepRecord(**row) for row in frame.to_dict(orient="records")]
    except TypeError as exc:
        raise InvalidInputError(f"{path} is not a sweep CSV: {exc}") from exc


__all__ = [
    "FLOAT_FORMAT",
    "dump_spectrum",
    "dump_trajectory",
    "read_sweep_csv",
    "render_sweep_svg",
    "write_admissibility_csv",
    "write_calculus_json",
    "write_frame",
    "write_rows",
    "write_sweep_csv",
]
