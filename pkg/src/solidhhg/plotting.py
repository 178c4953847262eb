"""Figures written next to the CSV/JSON outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .units import au_to_ev, au_to_gvm  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
    "legend.fontsize": 8,
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _log_floor(S):
    S = np.asarray(S)
    pos = S[S > 0]
    return np.maximum(S, pos.min() if pos.size else 1e-300)


def plot_bands(bs, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = bs.kgrid.k * bs.kgrid.lattice_constant / np.pi
        E = au_to_ev(bs.energies)
        for n in range(bs.n_bands):
            ax.plot(x, E[:, n], lw=2.0 if n == bs.valence_index else 1.2,
                    label=f"n = {n}" + (" (valence)" if n == bs.valence_index else ""))
        ax.set_xlabel(r"$k a / \pi$")
        ax.set_ylabel("E (eV)")
        ax.legend()
        return _save(fig, path)


def plot_spectrum(spec, path, max_order: float | None = None, title: str | None = None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        top = max_order or min(spec.order[-1], 80)
        m = spec.order <= top
        ax.semilogy(spec.order[m], _log_floor(spec.S[m]), lw=0.8)
        ax.set_xlim(0, top)
        ax.set_xlabel(r"$\omega / \omega_L$")
        ax.set_ylabel(r"$S(\omega)$ (a.u.)")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_buildup(rows, path, max_order: float | None = None, decades_per_row: float = 4.0):
    """Spectra of growing symmetric intervals stacked with vertical offsets (largest on top)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 1.2 + 1.1 * len(rows)))
        for i, row in enumerate(rows):
            spec = row.result.spectrum
            top = max_order or min(spec.order[-1], 80)
            m = spec.order <= top
            ax.semilogy(spec.order[m], _log_floor(spec.S[m]) * 10.0 ** (decades_per_row * i), lw=0.8, label=row.label)
        ax.set_xlabel(r"$\omega / \omega_L$")
        ax.set_ylabel("S (offset, a.u.)")
        ax.legend(loc="upper right")
        return _save(fig, path)


def plot_scan(rows, fit, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ok = [r for r in rows if not r.flagged]
        bad = [r for r in rows if r.flagged]
        if ok:
            ax.plot([au_to_gvm(r.F0) for r in ok], [r.cutoff for r in ok], "o", label="cutoff")
        for r in bad:
            ax.axvline(au_to_gvm(r.F0), color="0.6", ls=":", lw=1)
        if not fit.degenerate:
            f = np.linspace(min(r.F0 for r in ok), max(r.F0 for r in ok), 50)
            r2 = "n/a" if fit.r_squared is None else f"{fit.r_squared:.3f}"
            ax.plot(au_to_gvm(f), fit.slope * f + fit.intercept, "-", label=f"linear fit, R^2 = {r2}")
        ax.set_xlabel(r"$F_0$ (GV/m)")
        ax.set_ylabel("cutoff order")
        ax.legend()
        return _save(fig, path)


def plot_spectra_overlay(specs: Sequence, labels: Sequence[str], path, max_order: float | None = None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for spec, lab in zip(specs, labels):
            top = max_order or min(spec.order[-1], 80)
            m = spec.order <= top
            ax.semilogy(spec.order[m], _log_floor(spec.S[m]), lw=0.8, label=lab)
        ax.set_xlabel(r"$\omega / \omega_L$")
        ax.set_ylabel(r"$S(\omega)$ (a.u.)")
        ax.legend()
        return _save(fig, path)
