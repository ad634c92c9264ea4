"""CSV-to-figure rendering.

Each figure kind consumes one (or, for SNR sweeps, several) CSV files
produced by the ``eigshrink`` harness and draws error-bar line series.
Rendering is a pure function of the CSV contents and the spec: fixed
style, no timestamps, pinned hash salt, so repeated renders of the same
inputs are byte-identical where the image format permits.
"""

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

KINDS = ("rho_sweep", "snr_sweep", "eig_bias")

REQUIRED_COLUMNS = {
    "rho_sweep": ("m", "rho", "mean_mi", "stderr_mi"),
    "snr_sweep": ("estimator", "snr_db", "mean_mi", "stderr_mi"),
    "eig_bias": ("m", "mean_min_eig", "mean_max_eig"),
}

_STYLE = {
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.4,
    "lines.markersize": 4,
    "svg.hashsalt": "eigshrink-plots",
}


class SchemaMismatch(Exception):
    """CSV header lacks a required column."""


class EmptyData(Exception):
    """CSV carries a header but no data rows."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSVs, figure kind, output path, optional labels."""

    csv_paths: tuple
    kind: str
    out_path: str
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        if not self.csv_paths:
            raise ValueError("at least one CSV path is required")


def load_rows(path, kind):
    """Read one CSV, checking the documented schema for ``kind``."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS[kind] if c not in header]
        if missing:
            raise SchemaMismatch(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise EmptyData(f"{path}: no data rows")
    return rows


def _series(rows, key):
    """Group rows by a column, preserving first-appearance order."""
    order = []
    groups = {}
    for row in rows:
        label = row[key]
        if label not in groups:
            groups[label] = []
            order.append(label)
        groups[label].append(row)
    return [(label, groups[label]) for label in order]


def _errorbar(ax, rows, x_col, label):
    xs = [float(r[x_col]) for r in rows]
    ys = [float(r["mean_mi"]) for r in rows]
    es = [float(r["stderr_mi"]) for r in rows]
    ax.errorbar(xs, ys, yerr=es, marker="o", capsize=2, label=label)


def build_figure(spec):
    """Assemble the matplotlib figure for a spec (no file output)."""
    if spec.kind == "snr_sweep":
        fig, axes = plt.subplots(
            1, len(spec.csv_paths), figsize=(4.2 * len(spec.csv_paths), 3.2), squeeze=False
        )
        for ax, path in zip(axes[0], spec.csv_paths):
            rows = load_rows(path, spec.kind)
            for label, group in _series(rows, "estimator"):
                _errorbar(ax, group, "snr_db", label)
            ax.set_xlabel(spec.xlabel or "SNR (dB)")
            ax.set_ylabel(spec.ylabel or "mutual information (bits)")
            ax.set_title(rows[0].get("scenario_id", "") or path)
            ax.legend()
        if spec.title:
            fig.suptitle(spec.title)
        return fig

    fig, ax = plt.subplots(figsize=(4.6, 3.4))
    if spec.kind == "rho_sweep":
        rows = load_rows(spec.csv_paths[0], spec.kind)
        for label, group in _series(rows, "m"):
            _errorbar(ax, group, "rho", f"m = {label}")
        ax.set_xlabel(spec.xlabel or "shrinkage weight rho")
        ax.set_ylabel(spec.ylabel or "mutual information (bits)")
    else:  # eig_bias
        rows = load_rows(spec.csv_paths[0], spec.kind)
        ms = [int(r["m"]) for r in rows]
        ax.plot(ms, [float(r["mean_min_eig"]) for r in rows], marker="v", label="smallest eigenvalue (mean)")
        ax.plot(ms, [float(r["mean_max_eig"]) for r in rows], marker="^", label="largest eigenvalue (mean)")
        ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--", label="true value")
        ax.set_xlabel(spec.xlabel or "samples per window")
        ax.set_ylabel(spec.ylabel or "mean extremal eigenvalue")
    ax.set_title(spec.title or "")
    ax.legend()
    return fig


def render(spec):
    """Render the spec to its output image; returns the output path."""
    with plt.rc_context(_STYLE):
        fig = build_figure(spec)
        try:
            fig.tight_layout()
            if spec.out_path.endswith(".svg"):
                fig.savefig(spec.out_path, metadata={"Date": None})
            else:
                fig.savefig(spec.out_path, metadata={"Software": "eigshrink-plots"})
        finally:
            plt.close(fig)
    return spec.out_path
