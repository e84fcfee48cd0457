"""Static figure rendering for the CLI reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .propagation import SpectralRegion

_REGION_COLORS = {
    SpectralRegion.SHARED_PASS_BAND: "#c7e9c0",
    SpectralRegion.BANDGAP: "#f0f0f0",
    SpectralRegion.HYBRIDISATION: "#fdd0a2",
}


def _shade_regions(ax, lambdas, labels):
    start = 0
    for i in range(1, len(lambdas) + 1):
        if i == len(lambdas) or labels[i].region is not labels[start].region:
            ax.axvspan(
                lambdas[start], lambdas[min(i, len(lambdas) - 1)],
                color=_REGION_COLORS[labels[start].region], lw=0, zorder=0,
            )
            start = i


def save_spectrum(path, lambdas, labels, cdf):
    fig, ax = plt.subplots(figsize=(7, 4))
    _shade_regions(ax, lambdas, labels)
    ax.step(cdf.samples, np.arange(1, len(cdf.samples) + 1) / len(cdf.samples),
            where="post", color="k", lw=1.2)
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("cumulative density of states")
    ax.set_xlim(lambdas[0], lambdas[-1])
    ax.set_ylim(0, 1.02)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_lyapunov_grid(path, contour_set, curves, chain_eigenvalues):
    fig, ax = plt.subplots(figsize=(7, 5))
    mesh = ax.pcolormesh(
        contour_set.re_values, contour_set.im_values, contour_set.values,
        cmap="RdBu_r", shading="nearest",
        vmin=-np.max(np.abs(contour_set.values)), vmax=np.max(np.abs(contour_set.values)),
    )
    fig.colorbar(mesh, ax=ax, label="Lyapunov exponent")
    for line in contour_set.polylines:
        ax.plot(line.real, line.imag, "k-", lw=1.5)
    for name, curve in curves.items():
        for b, band in enumerate(curve.bands):
            closed = np.append(band, band[0])
            ax.plot(closed.real, closed.imag, lw=1.0,
                    label=name if b == 0 else None)
    ax.plot(chain_eigenvalues, np.zeros_like(chain_eigenvalues), ".",
            color="yellow", ms=3, label="eigenvalues")
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_envelope(path, results):
    """results: list of (label, log10 envelope array)."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, values in results:
        ax.plot(np.arange(1, len(values) + 1), values, lw=0.9, label=label)
    ax.set_xlabel("site index")
    ax.set_ylabel(r"$\log_{10}$ envelope")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_critical_gamma(path, eigenvalue_sets, exponent_sets, result):
    fig, ax = plt.subplots(figsize=(7, 4))
    for lams, lsym in zip(eigenvalue_sets, exponent_sets):
        ax.plot(lams, lsym, ".", ms=2)
    ax.axhline(result.max_symmetrised, color="k", lw=1,
               label=f"balance level, gamma_c = {result.gamma_c:.3g}")
    ax.set_xlabel(r"$\lambda$")
    ax.set_ylabel("symmetrised Lyapunov exponent")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_dos_convergence(path, result):
    fig, ax = plt.subplots(figsize=(6, 4))
    ms = list(result.num_blocks_list)
    means = [result.mean_cross_seed(m) for m in ms]
    ax.loglog(ms, means, "o-", label="mean cross-seed distance")
    ax.set_xlabel("number of blocks")
    ax.set_ylabel("Kolmogorov distance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_winding(path, curves):
    fig, ax = plt.subplots(figsize=(6, 5))
    for name, curve in curves.items():
        for b, band in enumerate(curve.bands):
            closed = np.append(band, band[0])
            ax.plot(closed.real, closed.imag, lw=1.2, label=name if b == 0 else None)
    ax.set_xlabel(r"Re $\lambda$")
    ax.set_ylabel(r"Im $\lambda$")
    ax.legend(fontsize=8)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
