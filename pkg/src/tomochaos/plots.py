"""Figure rendering for the batch report path (file output only, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .rmt import poisson_pdf, surmise_pdf

DPI = 150


def render_tomography(path, curves) -> None:
    """Three-panel information-gain figure: fidelity, entropy, Fisher vs step."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6))
    for cur in sorted(curves, key=lambda c: c["lambda"]):
        label = f"lambda={cur['lambda']:g}"
        axes[0].plot(cur["steps"], cur["fidelity"], label=label)
        axes[1].plot(cur["steps"], cur["entropy"], label=label)
        axes[2].semilogy(cur["steps"], cur["fisher"], label=label)
    for ax, ylabel in zip(axes, ["average fidelity", "Shannon entropy", "Fisher information"]):
        ax.set_xlabel("step")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_rmt(path, data) -> None:
    """Spacing histogram against the surmise and Poisson laws, plus the SFF."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    s = np.linspace(0.0, 4.0, 400)
    axes[0].hist(data["spacings"], bins=50, range=(0.0, 4.0), density=True,
                 alpha=0.5, label="spacings")
    axes[0].plot(s, surmise_pdf(s, data["beta"]), "k-", label=f"surmise beta={data['beta']}")
    axes[0].plot(s, poisson_pdf(s), "r--", label="Poisson")
    axes[0].set_xlabel("s")
    axes[0].set_ylabel("P(s)")
    axes[0].legend(fontsize=8)
    t, sff = data["t"], data["sff"]
    positive = t > 0
    axes[1].loglog(t[positive], sff[positive])
    axes[1].axhline(data["d"], color="k", ls=":", lw=1)
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("SFF")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_curve_panels(path, panels) -> None:
    """Generic n-vs-value panels; each panel is (ylabel, curves, logy)."""
    n_panels = len(panels)
    fig, axes = plt.subplots(1, n_panels, figsize=(4.2 * n_panels, 3.6), squeeze=False)
    for ax, (ylabel, curves, logy) in zip(axes[0], panels):
        for label, x, y in curves:
            ax.plot(x, y, label=label)
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
