"""Batch figure rendering from simulator CSV outputs.

Four figure kinds: `trace` (daily granted-count series from metrics.csv),
`histogram` and `boxplot` (per-agent access frequencies from summary.csv),
and `sweep` (concentration curve from sweep.csv with safe/unsafe shading).
Rendering is read-only over its inputs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

DPI = 150

REQUIRED_COLUMNS = {
    "trace": ["day", "granted"],
    "histogram": ["agent_id", "role", "frequency"],
    "boxplot": ["agent_id", "role", "frequency"],
    "sweep": ["x", "concentration_ug_m3"],
}

# WHO annual PM2.5 guideline; default shading boundary for sweep figures
DEFAULT_SWEEP_THRESHOLD = 10.0


class RenderError(Exception):
    pass


@dataclass
class FigureSpec:
    kind: str
    input_csv: Path
    output_image: Path
    threshold: float | None = None


def load_rows(path: Path, required: list[str]) -> list[dict]:
    if not path.exists():
        raise RenderError(f"input not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise RenderError(f"missing column: {col}")
        rows = list(reader)
    if not rows:
        raise RenderError(f"no data rows in {path}")
    return rows


def _render_trace(rows: list[dict], ax, threshold: float | None) -> None:
    days = [int(r["day"]) for r in rows]
    granted = [float(r["granted"]) for r in rows]
    ax.plot(days, granted, lw=0.8)
    if threshold is not None:
        ax.axhline(threshold, color="k", ls="--", lw=1, label=f"N = {threshold:g}")
        ax.legend()
    ax.set_xlabel("day")
    ax.set_ylabel("cars granted access")


def _frequencies_by_role(rows: list[dict]) -> dict[str, list[float]]:
    out: dict[str, list[float]] = {}
    for r in rows:
        out.setdefault(r["role"], []).append(float(r["frequency"]))
    return out


def _render_histogram(rows: list[dict], ax, threshold: float | None) -> None:
    by_role = _frequencies_by_role(rows)
    for role, freqs in sorted(by_role.items()):
        ax.hist(freqs, bins=40, alpha=0.6, label=role)
    if threshold is not None:
        ax.axvline(threshold, color="k", ls="--", lw=1)
    ax.set_xlabel("access frequency")
    ax.set_ylabel("agents")
    ax.legend()


def _render_boxplot(rows: list[dict], ax, threshold: float | None) -> None:
    by_role = _frequencies_by_role(rows)
    roles = sorted(by_role)
    ax.boxplot([by_role[r] for r in roles], tick_labels=roles)
    if threshold is not None:
        ax.axhline(threshold, color="k", ls="--", lw=1)
    ax.set_ylabel("access frequency")


def _render_sweep(rows: list[dict], ax, threshold: float | None) -> None:
    limit = DEFAULT_SWEEP_THRESHOLD if threshold is None else threshold
    xs = [float(r["x"]) for r in rows]
    cs = [float(r["concentration_ug_m3"]) for r in rows]
    ax.plot(xs, cs, color="k", lw=1.2)
    top = max(max(cs), limit) * 1.05
    ax.axhspan(0, limit, color="green", alpha=0.15)
    ax.axhspan(limit, top, color="red", alpha=0.15)
    ax.axhline(limit, color="k", ls="--", lw=1, label=f"limit {limit:g} ug/m3")
    ax.set_ylim(0, top)
    ax.set_xlabel("x")
    ax.set_ylabel("concentration (ug/m3)")
    ax.legend()


_RENDERERS = {
    "trace": _render_trace,
    "histogram": _render_histogram,
    "boxplot": _render_boxplot,
    "sweep": _render_sweep,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure to a PNG; raises RenderError on bad input."""
    if spec.kind not in _RENDERERS:
        raise RenderError(f"unknown figure kind: {spec.kind}")
    rows = load_rows(spec.input_csv, REQUIRED_COLUMNS[spec.kind])
    fig, ax = plt.subplots(figsize=(8, 4.5))
    try:
        _RENDERERS[spec.kind](rows, ax, spec.threshold)
        fig.tight_layout()
        fig.savefig(spec.output_image, dpi=DPI)
    finally:
        plt.close(fig)
    return spec.output_image
