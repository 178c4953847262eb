"""Oracle checks run by ``solidhhg selftest``.

Each check compares a production path against an independent reference and
reports the observed deviation next to its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bands import KGrid, diagonalize, momentum_matrices, solve_bands
from .config import RunConfig
from .dynamics import TimeGrid, propagate
from .oracles import expm_trajectory, fd_band_energies, fd_momentum_matrices
from .potential import PotentialKind, PotentialSpec, evaluate_potential, fourier_coefficients, fourier_coefficients_numeric
from .pulse import PulseParams
from .spectrum import CurrentTrace, parseval_sides, power_spectrum
from .units import au_to_ev, au_to_fs, ev_to_au, fs_to_au


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tolerance)

    def as_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


def _specs(cfg: RunConfig):
    base = cfg.potential
    return [PotentialSpec(kind, base.lattice_constant, base.cosine, base.sinh) for kind in PotentialKind]


def check_units(cfg: RunConfig) -> CheckResult:
    x = np.logspace(-3, 3, 61)
    err = max(np.max(np.abs(au_to_ev(ev_to_au(x)) / x - 1)), np.max(np.abs(au_to_fs(fs_to_au(x)) / x - 1)))
    return CheckResult("unit round trip (relative)", float(err), 1e-12)


def check_fourier(cfg: RunConfig) -> CheckResult:
    err = 0.0
    for spec in _specs(cfg):
        a = fourier_coefficients(spec, cfg.bands.M).coefficients
        b = fourier_coefficients_numeric(spec, cfg.bands.M).coefficients
        err = max(err, float(np.max(np.abs(a - b)) / np.max(np.abs(a))))
    return CheckResult("potential Fourier coefficients: closed form vs quadrature", err, 1e-10)


def check_bands(cfg: RunConfig, n_points: int = 4096) -> CheckResult:
    err = 0.0
    for spec in _specs(cfg):
        a = spec.lattice_constant
        ks = np.linspace(-np.pi / a, np.pi / a, 5)
        fp = fourier_coefficients(spec, cfg.bands.M)
        e_pw, _ = diagonalize(fp, ks, cfg.bands.n_bands)
        e_fd = fd_band_energies(lambda x, s=spec: evaluate_potential(s, x), a, ks, cfg.bands.n_bands, n_points)
        err = max(err, float(np.max(np.abs(e_pw - e_fd))))
    return CheckResult("band energies: plane waves vs finite differences (Ha)", err, 1e-6)


def check_momentum(cfg: RunConfig, n_k: int = 5) -> CheckResult:
    spec = cfg.potential
    grid = KGrid(spec.lattice_constant, n_k)
    bs = solve_bands(fourier_coefficients(spec, cfg.bands.M), grid, cfg.bands.n_bands)
    P = momentum_matrices(bs).P
    err = float(np.max(np.abs(P - fd_momentum_matrices(bs))))
    return CheckResult("momentum matrices: plane waves vs finite differences (a.u.)", err, 1e-6)


def check_propagator(cfg: RunConfig, quick: bool = False) -> CheckResult:
    """RK4 against exact micro-step exponentials at one k over a whole pulse."""
    pulse = cfg.pulse
    if quick:
        pulse = PulseParams(pulse.A0, pulse.wavelength, fs_to_au(30.0), pulse.phi)
    grid_k = KGrid(cfg.potential.lattice_constant, cfg.bands.n_k)
    bs = solve_bands(fourier_coefficients(cfg.potential, cfg.bands.M), grid_k, cfg.bands.n_bands,
                     cfg.bands.valence_index, cfg.bands.energy_ceiling)
    P = momentum_matrices(bs)
    i = grid_k.n_k * 7 // 10
    grid = TimeGrid.for_pulse(pulse, cfg.integrator.dt, 0.0, cfg.integrator.steps_per_cycle)
    prop = propagate(bs, P, pulse, cfg.relaxation, grid, [i], record=True)
    ref = expm_trajectory(bs.energies[i], P.P[i], bs.valence_index, pulse, cfg.relaxation, grid)
    err = float(np.max(np.abs(prop.trajectories[:, 0] - ref)))
    return CheckResult("density matrix: RK4 vs matrix exponential", err, 1e-7)


def check_parseval(cfg: RunConfig) -> CheckResult:
    rng = np.random.default_rng(0)
    t = np.arange(4000) * 0.5
    tr = CurrentTrace(t, rng.standard_normal(len(t)), 1)
    spec = power_spectrum(tr, 0.05, "hann", 4)
    lhs, rhs = parseval_sides(spec, tr)
    return CheckResult("Parseval identity (relative)", abs(lhs / rhs - 1), 1e-10)


CHECKS: dict[str, Callable] = {
    "units": check_units,
    "fourier": check_fourier,
    "bands": check_bands,
    "momentum": check_momentum,
    "parseval": check_parseval,
    "propagator": check_propagator,
}


def run_selftest(cfg: RunConfig | None = None, quick: bool = False, only=None) -> list[CheckResult]:
    cfg = cfg or RunConfig()
    out = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        out.append(fn(cfg, quick=quick) if name == "propagator" else fn(cfg))
    return out
