"""CSV/JSON writers for run directories.

Every CSV starts with ``#`` comment lines carrying the package version and the
config fingerprint; every JSON file carries the fingerprint as a top-level key.
Floats are written with 17 significant digits so files round-trip exactly and
identical runs produce identical bytes.
"""

from __future__ import annotations

import json
import math
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bands import BandStructure
from .config import RunConfig
from .pulse import PulseParams, electric_field, vector_potential
from .spectrum import CurrentTrace, PeakTable, SpectrumResult, even_odd_ratios, plateau_orders
from .units import au_to_ev, au_to_fs, au_to_gvm

FLOAT_FMT = "%.17g"


def _header(cfg: RunConfig, title: str, extra: dict | None = None) -> list[str]:
    lines = [f"solidhhg {__version__}: {title}", f"config_fingerprint: {cfg.fingerprint()}"]
    for key, value in (extra or {}).items():
        lines.append(f"{key}: {value}")
    return lines


def write_csv(path, cfg: RunConfig, title: str, columns: Sequence[str], data, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for line in _header(cfg, title, extra):
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        np.savetxt(fh, data, delimiter=",", fmt=FLOAT_FMT)
    return path


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """(header metadata, column names, data) from a file written by ``write_csv``."""
    meta, columns, rows = {}, [], []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                meta[key] = value
            elif not columns:
                columns = line.strip().split(",")
            elif line.strip():
                rows.append([float(v) for v in line.split(",")])
    return meta, columns, np.array(rows)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, cfg: RunConfig, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config_fingerprint": cfg.fingerprint(), **_jsonable(payload)}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- specific files ----------------------------------------------------------

def write_bands(path, cfg: RunConfig, bs: BandStructure) -> Path:
    a = bs.kgrid.lattice_constant
    k = bs.kgrid.k
    cols = ["k_au", "k_over_pi_a"] + [f"E{n}_eV" for n in range(bs.n_bands)]
    data = np.column_stack([k, k * a / math.pi, au_to_ev(bs.energies)])
    return write_csv(path, cfg, "band energies", cols, data, {"valence_index": bs.valence_index})


def gap_summary(bs: BandStructure) -> dict:
    E = bs.energies
    direct = E[:, 1:] - E[:, :-1]
    return {
        "valence_index": bs.valence_index,
        "lattice_constant_bohr": bs.kgrid.lattice_constant,
        "valence_gap_eV": float(au_to_ev(np.min(direct[:, bs.valence_index]))),
        "min_direct_gaps_eV": [float(v) for v in au_to_ev(direct.min(axis=0))],
        "band_minima_eV": [float(v) for v in au_to_ev(E.min(axis=0))],
        "band_maxima_eV": [float(v) for v in au_to_ev(E.max(axis=0))],
    }


def write_current(path, cfg: RunConfig, trace: CurrentTrace, pulse: PulseParams) -> Path:
    t = trace.t
    cols = ["t_au", "t_fs", "A_au", "F_GV_per_m", "J_au"]
    data = np.column_stack([t, au_to_fs(t), vector_potential(pulse, t), au_to_gvm(electric_field(pulse, t)), trace.J])
    full = len(trace.indices) == trace.n_k_total
    k_indices = "all" if full else ",".join(str(i) for i in trace.indices)
    return write_csv(path, cfg, "net current", cols, data, {"n_k_points": len(trace.indices),
                                                            "n_k_total": trace.n_k_total, "k_indices": k_indices})


def write_spectrum(path, cfg: RunConfig, spec: SpectrumResult) -> Path:
    return write_csv(path, cfg, "power spectrum", ["harmonic_order", "S_au"], np.column_stack([spec.order, spec.S]),
                     {"window": spec.window, "pad_factor": spec.pad_factor})


def write_trajectory(path, cfg: RunConfig, t, rho_t, k_index: int, k: float) -> Path:
    """rho(t) for one k as real and imaginary parts of every element."""
    n = rho_t.shape[-1]
    cols = ["t_au"]
    blocks = [np.asarray(t)[:, None]]
    for i in range(n):
        for j in range(n):
            cols += [f"re_rho{i}{j}", f"im_rho{i}{j}"]
            blocks += [rho_t[:, i, j].real[:, None], rho_t[:, i, j].imag[:, None]]
    return write_csv(path, cfg, "density matrix trajectory", cols, np.hstack(blocks),
                     {"k_index": k_index, "k_au": repr(float(k))})


def peaks_payload(peaks: PeakTable, cutoff, support: int | None = None) -> dict:
    d = peaks.as_dict()
    d["cutoff"] = cutoff
    d["plateau_orders"] = plateau_orders(peaks)
    d["even_to_odd_ratio"] = {str(h): v for h, v in even_odd_ratios(peaks).items()}
    if support is not None:
        d["spectral_support"] = support
    return d


def versions() -> dict:
    import matplotlib
    import scipy

    return {
        "solidhhg": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "platform": platform.platform(),
    }


def write_manifest(path, cfg: RunConfig, command: str, wall_time: float, files: Sequence[str],
                   diagnostics: dict, threads: int, status: str) -> Path:
    payload = {
        "command": command,
        "status": status,
        "physics_fingerprint": cfg.physics_fingerprint(),
        "config": cfg.to_dict(),
        "versions": versions(),
        "threads": threads,
        "wall_time_s": wall_time,
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "files": sorted(files),
        "diagnostics": diagnostics,
    }
    return write_json(path, cfg, payload)
