"""Figure rendering: one function per CSV kind, one entry point.

Every kind reads one or more CSV files with a fixed header, draws a single
axes figure, and returns the numeric annotations it printed on the canvas
so callers can cross-check them against the summary files written next to
the CSVs.  Rendering is deterministic for fixed inputs: Agg backend, fixed
geometry, no timestamps in the output.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "mtdplots"

import matplotlib.pyplot as plt
import numpy as np

FIGSIZE = (6.4, 4.8)
FORMATS = (".svg", ".png")


class PlotError(Exception):
    """Base class for figure errors."""


class ConfigError(PlotError, ValueError):
    """Unusable figure request: unknown kind, bad output format, bad options."""


class MissingColumn(PlotError, KeyError):
    """An input CSV lacks a column the figure kind needs."""


class EmptyInput(PlotError, ValueError):
    """An input CSV has a header but no data rows."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: input CSVs, kind, output image, display options."""

    inputs: tuple
    kind: str
    output: str
    title: str | None = None
    legend: bool = True
    dpi: int = 150
    # dashed-envelope overrides for the mixing kind; falls back to the
    # envelope column when both are None
    envelope_c: float | None = None
    envelope_rate: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        if self.kind not in KINDS:
            raise ConfigError(f"unknown figure kind {self.kind!r}, expected one of {sorted(KINDS)}")
        if Path(self.output).suffix.lower() not in FORMATS:
            raise ConfigError(f"output must end in {FORMATS}, got {self.output!r}")
        if not self.inputs:
            raise ConfigError("no input CSV given")


def _read_columns(path: str, required: tuple) -> dict:
    """Load the required columns of one CSV as float arrays."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyInput(f"{path}: no header row")
        for col in required:
            if col not in reader.fieldnames:
                raise MissingColumn(f"{path}: missing column {col!r}, has {reader.fieldnames}")
        rows = list(reader)
    if not rows:
        raise EmptyInput(f"{path}: no data rows")
    out = {}
    for col in required:
        try:
            out[col] = np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: column {col!r} is not numeric") from exc
    return out


def _concat(paths, required: tuple) -> dict:
    tables = [_read_columns(p, required) for p in paths]
    return {col: np.concatenate([t[col] for t in tables]) for col in required}


def _slope(x, y) -> tuple:
    """Least-squares slope/intercept of y against x (same math as the logs)."""
    coeffs = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(coeffs[0]), float(coeffs[1])


def _render_mse_curve(spec: FigureSpec, ax) -> dict:
    data = _concat(spec.inputs, ("M", "mse_mtd", "se_mtd", "mse_mra", "se_mra"))
    order = np.argsort(data["M"])
    M = data["M"][order]
    notes = {}
    for series, label in (("mtd", "dependent patches"), ("mra", "iid reference")):
        mse = data[f"mse_{series}"][order]
        se = data[f"se_{series}"][order]
        ax.errorbar(M, mse, yerr=se, marker="o", capsize=3, label=label)
        if M.size >= 2 and np.all(mse > 0) and np.ptp(np.log(M)) > 0:
            s, _ = _slope(np.log(M), np.log(mse))
            notes[f"slope_{series}"] = s
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("M")
    ax.set_ylabel("MSE")
    if notes:
        text = "\n".join(f"{k.replace('slope_', '')} slope {v:.3f}" for k, v in sorted(notes.items()))
        ax.text(0.05, 0.05, text, transform=ax.transAxes, va="bottom", fontsize=9)
    return notes


def _render_mixing(spec: FigureSpec, ax) -> dict:
    data = _concat(spec.inputs, ("start_state", "k", "tv"))
    for s in np.unique(data["start_state"]):
        mask = data["start_state"] == s
        order = np.argsort(data["k"][mask])
        ax.semilogy(data["k"][mask][order], data["tv"][mask][order], marker=".", label=f"start {int(s)}")
    ks = np.unique(data["k"])
    if spec.envelope_c is not None and spec.envelope_rate is not None:
        env = spec.envelope_c * spec.envelope_rate ** ks
        ax.semilogy(ks, env, "k--", label="envelope")
    else:
        try:
            env_col = _concat(spec.inputs, ("k", "envelope"))
        except MissingColumn:
            env_col = None
        if env_col is not None:
            order = np.argsort(env_col["k"])
            ax.semilogy(env_col["k"][order], env_col["envelope"][order], "k--", label="envelope")
    ax.set_xlabel("k")
    ax.set_ylabel("l1 deviation from stationarity")
    return {}


def _render_stationary(spec: FigureSpec, ax) -> dict:
    data = _concat(spec.inputs, ("x", "y", "pi_closed", "pi_empirical"))
    labels = [f"({int(x)},{int(y)})" for x, y in zip(data["x"], data["y"])]
    pos = np.arange(len(labels))
    width = 0.4
    ax.bar(pos - width / 2, data["pi_closed"], width, label="closed form")
    ax.bar(pos + width / 2, data["pi_empirical"], width, label="empirical")
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=45, fontsize=8)
    ax.set_ylabel("probability")
    tv = 0.5 * float(np.sum(np.abs(data["pi_closed"] - data["pi_empirical"])))
    ax.text(0.95, 0.95, f"TV {tv:.4f}", transform=ax.transAxes, ha="right", va="top", fontsize=9)
    return {"tv": tv}


def _render_decay2d(spec: FigureSpec, ax) -> dict:
    data = _concat(spec.inputs, ("separation", "deviation", "se"))
    order = np.argsort(data["separation"])
    sep = data["separation"][order]
    dev = data["deviation"][order]
    ax.errorbar(sep, dev, yerr=data["se"][order], marker="o", capsize=3, label="max conditional deviation")
    ax.set_yscale("log")
    ax.set_xlabel("separation")
    ax.set_ylabel("deviation")
    ax.set_xticks(sep)
    notes = {}
    if sep.size >= 2 and np.all(dev > 0) and np.ptp(sep) > 0:
        s, _ = _slope(sep, np.log(dev))
        notes["slope"] = s
        ax.text(0.05, 0.05, f"log-linear slope {s:.3f}", transform=ax.transAxes, va="bottom", fontsize=9)
    return notes


def _render_sigma_scaling(spec: FigureSpec, ax) -> dict:
    data = _concat(spec.inputs, ("order", "sigma", "mse", "se"))
    notes = {}
    for n in np.unique(data["order"]):
        mask = data["order"] == n
        idx = np.argsort(data["sigma"][mask])
        sig = data["sigma"][mask][idx]
        mse = data["mse"][mask][idx]
        ax.errorbar(sig, mse, yerr=data["se"][mask][idx], marker="o", capsize=3, label=f"order {int(n)}")
        if sig.size >= 2 and np.all(mse > 0) and np.ptp(np.log(sig)) > 0:
            s, _ = _slope(np.log(sig), np.log(mse))
            notes[f"slope_order_{int(n)}"] = s
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sigma")
    ax.set_ylabel("MSE")
    if notes:
        text = "\n".join(
            f"order {k.rsplit('_', 1)[1]} slope {v:.3f}" for k, v in sorted(notes.items())
        )
        ax.text(0.05, 0.95, text, transform=ax.transAxes, va="top", fontsize=9)
    return notes


KINDS = {
    "mse-curve": _render_mse_curve,
    "mixing": _render_mixing,
    "stationary": _render_stationary,
    "decay2d": _render_decay2d,
    "sigma-scaling": _render_sigma_scaling,
}


def render(spec: FigureSpec) -> dict:
    """Draw the figure and write it to ``spec.output``.

    Returns the annotation values drawn on the canvas (fitted slopes, TV)
    keyed by name; empty when the kind annotates nothing.
    """
    fig, ax = plt.subplots(figsize=FIGSIZE)
    try:
        notes = KINDS[spec.kind](spec, ax)
        if spec.title:
            ax.set_title(spec.title)
        if spec.legend and ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=8)
        fig.tight_layout()
        # strip the creation date so identical inputs give identical bytes
        fig.savefig(spec.output, dpi=spec.dpi, metadata={"Date": None})
    finally:
        plt.close(fig)
    return notes
