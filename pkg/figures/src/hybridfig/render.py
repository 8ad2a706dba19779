"""Figure builders for simulator output directories.

Every renderer validates its inputs before any file is created, draws with
a fixed style, and writes a single image; rendering the same directory
twice yields byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib import colors

from .io import (
    SchemaError,
    read_all_wigner,
    read_fock,
    read_meta,
    read_sweep,
    read_trajectory,
)

KINDS = ("trajectory", "wigner", "fock", "contour", "lines")

AXIS_LABELS = {
    "theta": r"$\theta$",
    "alpha_cav": r"$\alpha$",
    "G_qm": r"$g_{qm}/\hbar\omega_m$",
    "G_mc": r"$g_{mc}/\hbar\omega_m$",
    "D": r"$\Delta/\hbar\omega_m$",
    "E0": r"$\epsilon_0/\hbar\omega_m$",
}

OBSERVABLE_LABELS = {
    "zeta": r"$\zeta$",
    "qfi_max": r"$F^Q_{max}$",
    "phonon_population": r"$\langle b^\dagger b\rangle$",
}


@dataclass(frozen=True)
class FigureJob:
    """One rendering task over a simulator output directory."""

    input_dir: Path
    kind: str
    out_path: Path
    normalize: bool = True  # scale Wigner panels by their own maximum
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; known: {KINDS}")


def _save(fig, job: FigureJob):
    job.out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.out_path, dpi=job.dpi, bbox_inches="tight")
    plt.close(fig)


def _render_trajectory(job: FigureJob):
    data = read_trajectory(job.input_dir / "trajectory.csv")
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 7.0), sharex=True)
    panels = [
        ("qubit_pop", r"$\sum_j\langle\sigma^+_j\sigma^-_j\rangle$"),
        ("phonon_pop", r"$\langle b^\dagger b\rangle$"),
        ("photon_pop", r"$\langle a^\dagger a\rangle$"),
    ]
    for ax, (column, label) in zip(axes, panels):
        ax.plot(data["tau"], data[column], color="black", lw=1.2)
        ax.set_ylabel(label)
        ax.grid(alpha=0.15)
    axes[-1].set_xlabel(r"$\omega_m t$")
    axes[-1].set_xlim(data["tau"][0], data["tau"][-1])
    fig.align_ylabels(axes)
    _save(fig, job)


def _render_wigner(job: FigureJob):
    maps = read_all_wigner(job.input_dir)
    n = len(maps)
    ncols = min(n, 2) if n != 4 else 2
    ncols = 2 if n > 1 else 1
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.2 * ncols + 1.2, 3.0 * nrows), squeeze=False
    )
    mappable = None
    for k, wig in enumerate(maps):
        ax = axes[k // ncols][k % ncols]
        values = wig.values
        if job.normalize:
            peak = np.abs(values).max() or 1.0
            values = values / peak
        vmax = np.abs(values).max() or 1.0
        mappable = ax.pcolormesh(
            wig.x,
            wig.p,
            values.T,
            cmap="RdBu_r",
            norm=colors.Normalize(vmin=-vmax, vmax=vmax),
            shading="nearest",
            rasterized=True,
        )
        ax.set_title(rf"$\omega_m t = {wig.tau:.3f}$", fontsize=10)
        ax.set_xlabel("$x$")
        ax.set_ylabel("$p$")
        ax.set_aspect("equal")
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].set_axis_off()
    label = r"$W(x,p)/W_{max}$" if job.normalize else r"$W(x,p)$"
    fig.colorbar(mappable, ax=axes, label=label, shrink=0.85)
    _save(fig, job)


def _render_fock(job: FigureJob):
    n, probs = read_fock(job.input_dir / "fock.csv")
    mean = None
    try:
        meta = read_meta(job.input_dir)
        mean = meta.get("metrics", {}).get("phonon_mean")
    except SchemaError:
        pass
    if mean is None:
        mean = float(n @ probs)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.bar(n, probs, width=1.0, color="#4878a8", edgecolor="none", label="simulated")
    # coherent reference with the same mean occupation
    log_pmf = n * math.log(mean) - mean - np.cumsum(np.log(np.maximum(n, 1)))
    ax.plot(n, np.exp(log_pmf), "k--", lw=1.3,
            label=rf"coherent, $\langle n\rangle = {mean:.1f}$")
    ax.set_xlabel("$n$")
    ax.set_ylabel("$P(n)$")
    ax.set_xlim(-0.5, float(n[-1]) + 0.5)
    ax.legend(frameon=False)
    _save(fig, job)


def _sweep_context(job: FigureJob):
    table = read_sweep(job.input_dir / "sweep.csv")
    labels = ("axis1", "axis2")
    observable = "value"
    try:
        meta = read_meta(job.input_dir)
        run = meta.get("config", {}).get("run", {})
        labels = (
            AXIS_LABELS.get(run.get("axis1", {}).get("name"), "axis1"),
            AXIS_LABELS.get(run.get("axis2", {}).get("name"), "axis2"),
        )
        observable = OBSERVABLE_LABELS.get(run.get("observable"), "value")
    except SchemaError:
        pass
    return table, labels, observable


def _render_contour(job: FigureJob):
    table, labels, observable = _sweep_context(job)
    fig, ax = plt.subplots(figsize=(5.6, 4.4))
    masked = np.ma.masked_invalid(table.values)
    mesh = ax.contourf(table.axis1, table.axis2, masked.T, levels=24, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=observable)
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    _save(fig, job)


def _render_lines(job: FigureJob):
    table, labels, observable = _sweep_context(job)
    fig, ax = plt.subplots(figsize=(5.6, 4.0))
    for i, v1 in enumerate(table.axis1):
        ax.plot(table.axis2, table.values[i], lw=1.4, marker="o", ms=3.5,
                label=f"{labels[0]} = {v1:.3g}")
    if observable == OBSERVABLE_LABELS["qfi_max"]:
        # coherent-state baseline: maximal quadrature information of 2
        ax.axhline(2.0, color="tab:red", ls="--", lw=1.1, label="coherent state")
    ax.set_xlabel(labels[1])
    ax.set_ylabel(observable)
    ax.grid(alpha=0.15)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, job)


_RENDERERS = {
    "trajectory": _render_trajectory,
    "wigner": _render_wigner,
    "fock": _render_fock,
    "contour": _render_contour,
    "lines": _render_lines,
}


def render(job: FigureJob) -> Path:
    """Render one figure; validates inputs before any output is written."""
    _RENDERERS[job.kind](job)
    return job.out_path
