"""Figure rendering for pipeline outputs (Agg backend, PNG files)."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1) / 2
WIDTH = 3.4

RC = {
    "font.family": "serif",
    "font.size": 8,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "mathtext.fontset": "stix",
    "lines.linewidth": 1.0,
    "axes.linewidth": 0.6,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "figure.dpi": 150,
    "savefig.dpi": 200,
}


@contextmanager
def style():
    with plt.rc_context(RC):
        yield


def _figure(height=None, ncols=1):
    return plt.subplots(1, ncols, figsize=(WIDTH * (1 if ncols == 1 else 1.6),
                                           height or WIDTH * GOLDEN))


def save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date tag, so reruns produce identical bytes
    fig.savefig(path, dpi=RC["savefig.dpi"], bbox_inches="tight", metadata={"Software": None})
    plt.close(fig)
    return path


def spectrum_figure(zetas, energies, overlap=None, min_gap=None):
    """Low-lying levels vs zeta/J; the ground level coloured by target overlap."""
    with style():
        fig, ax = _figure()
        e = np.asarray(energies)
        for k in range(1, e.shape[1]):
            ax.plot(zetas, e[:, k], color="0.55", lw=0.7)
        if overlap is None:
            ax.plot(zetas, e[:, 0], color="k")
        else:
            sc = ax.scatter(zetas, e[:, 0], c=overlap, s=3, cmap="viridis", vmin=0, vmax=1)
            fig.colorbar(sc, ax=ax, label="target overlap")
        if min_gap is not None:
            ax.axvline(min_gap[1], color="C3", ls=":", lw=0.8)
        ax.set_xlabel(r"$\zeta/J$")
        ax.set_ylabel(r"$E/J$")
    return fig


def overlap_figure(runs):
    """Ground-state overlap vs t/tau; ``runs`` maps tau -> (times, overlap)."""
    with style():
        fig, ax = _figure()
        for tau, (t, ov) in runs.items():
            t = np.asarray(t)
            ax.plot(t / max(t[-1], 1e-300), ov, label=rf"$J\tau={tau:g}$")
        ax.set_xlabel(r"$t/\tau$")
        ax.set_ylabel(r"$|\langle\phi_0|\psi\rangle|^2$")
        ax.set_ylim(0, 1.02)
        ax.legend(frameon=False)
    return fig


def magnetization_figure(times, magnetization, target=None):
    with style():
        fig, ax = _figure()
        m = np.asarray(magnetization)
        cmap = plt.get_cmap("tab10")
        for i in range(m.shape[1]):
            ax.plot(times, m[:, i], color=cmap(i % 10), label=f"{i + 1}")
            if target is not None:
                ax.plot(times[-1], target[i], "o", ms=2.5, color=cmap(i % 10))
        ax.set_xlabel(r"$tJ$")
        ax.set_ylabel(r"$\langle\sigma^z_i\rangle$")
        ax.set_ylim(-1.05, 1.05)
        ax.legend(frameon=False, ncol=4, fontsize=6)
    return fig


def inputs_figure(labels, scaled, pump_strength=None):
    """Bars of f~/zeta per mode, optionally beside the pump strengths."""
    with style():
        ncols = 1 if pump_strength is None else 2
        fig, axes = _figure(ncols=ncols)
        axes = np.atleast_1d(axes)
        x = np.arange(len(scaled))
        axes[0].bar(x, scaled, color=np.where(np.asarray(scaled) >= 0, "C0", "C3"))
        axes[0].set_ylabel(r"$\tilde f_m/\zeta$")
        axes[0].set_xlabel("mode")
        if pump_strength is not None:
            axes[1].bar(x, pump_strength, color="0.4")
            axes[1].set_ylabel(r"$\eta_m$")
            axes[1].set_xlabel("mode")
        for ax in axes:
            ax.set_xticks(x[::6])
            ax.set_xticklabels([_label(labels[i]) for i in x[::6]], rotation=60)
    return fig


def intensity_figure(labels, patterns):
    """Grouped bars of per-mode intensity; ``patterns`` maps name -> intensities."""
    with style():
        fig, ax = _figure()
        x = np.arange(len(labels))
        w = 0.8 / max(len(patterns), 1)
        for k, (name, vals) in enumerate(patterns.items()):
            ax.bar(x + (k - (len(patterns) - 1) / 2) * w, vals, width=w, label=name)
        ax.set_xlabel("mode")
        ax.set_ylabel("intensity (arb.)")
        ax.set_xticks(x[::6])
        ax.set_xticklabels([_label(labels[i]) for i in x[::6]], rotation=60)
        ax.legend(frameon=False)
    return fig


def nu_figure(table, names, bound=None):
    """Energies of probe and memories vs nu; ``table`` rows are (nu, E...)."""
    with style():
        fig, ax = _figure()
        t = np.asarray(table)
        for k, name in enumerate(names):
            ax.plot(t[:, 0], t[:, k + 1], label=name)
        if bound is not None:
            ax.axvline(float(bound), color="0.5", ls="--", lw=0.8)
        ax.set_xlabel(r"$\nu$")
        ax.set_ylabel("energy")
        ax.legend(frameon=False)
    return fig


def lattice_figure(geometry, pose, mode, extent=None, grid=200):
    """|u|^2 of one mode in the x-z plane with the lattice sites overlaid."""
    with style():
        fig, ax = _figure()
        pos = pose.positions()
        half = extent or max(np.abs(pos).max() * 1.5, 2 * mode.waist)
        z = np.linspace(-half, half, grid)
        x = np.linspace(-half, half, grid)
        Z, X = np.meshgrid(z, x)
        pts = np.stack([X.ravel(), np.zeros(X.size), Z.ravel()], axis=1)
        u = mode.amplitude(pts).reshape(X.shape)
        ax.pcolormesh(Z, X, u ** 2, cmap="magma", shading="auto", rasterized=True)
        ax.plot(pos[:, 2], pos[:, 0], "o", ms=2.5, color="c")
        ax.set_xlabel(r"$z/\lambda$")
        ax.set_ylabel(r"$x/\lambda$")
        ax.set_title(f"mode {mode.label}", fontsize=8)
    return fig


def _label(lab):
    if isinstance(lab, (list, tuple)):
        return ",".join(str(x) for x in lab)
    return str(lab)
