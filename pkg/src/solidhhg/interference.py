"""k-subset experiments: single k, +-k pairs, symmetric intervals and field scans.

Per-k currents are computed once per physics fingerprint and cached, so that
every subset analysis of the same dynamics sums identical arrays.
"""

from __future__ import annotations

import enum
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bands import BandStructure, KGrid, MomentumMatrices, check_convergence, momentum_matrices, solve_bands
from .config import RunConfig
from .dynamics import TimeGrid, propagate
from .errors import UsageError
from .potential import fourier_coefficients
from .spectrum import (
    CurrentTrace,
    PeakTable,
    SpectrumResult,
    cutoff_estimate,
    harmonic_peaks,
    net_current,
    plateau_orders,
    power_spectrum,
)

log = logging.getLogger(__name__)

FULL_ZONE_LABEL = "the physical, measurable spectrum"


class SubsetMode(str, enum.Enum):
    SINGLE_K = "single"
    PAIR_PM = "pair"
    SYMMETRIC_INTERVAL = "interval"
    FULL_ZONE = "full"
    EXPLICIT_LIST = "list"


@dataclass(frozen=True)
class KSubsetSpec:
    """Which k-points enter the current sum.

    ``k_index`` or ``k`` selects the point for SINGLE_K and PAIR_PM (PAIR_PM adds
    its mirror -k); ``fraction`` is the interval half-width in units of pi/a.
    """

    mode: SubsetMode
    k_index: int | None = None
    k: float | None = None
    fraction: float | None = None
    indices: tuple[int, ...] = ()

    @classmethod
    def full_zone(cls):
        return cls(SubsetMode.FULL_ZONE)

    @classmethod
    def single(cls, k_index=None, k=None):
        return cls(SubsetMode.SINGLE_K, k_index=k_index, k=k)

    @classmethod
    def pair(cls, k_index=None, k=None):
        return cls(SubsetMode.PAIR_PM, k_index=k_index, k=k)

    @classmethod
    def interval(cls, fraction: float):
        return cls(SubsetMode.SYMMETRIC_INTERVAL, fraction=fraction)

    @classmethod
    def explicit(cls, indices: Iterable[int]):
        return cls(SubsetMode.EXPLICIT_LIST, indices=tuple(int(i) for i in indices))

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "KSubsetSpec":
        e = cfg.experiment
        return cls(SubsetMode(e.mode), e.k_index, e.k, e.fraction, tuple(e.indices))

    def _point(self, kgrid: KGrid) -> int:
        if self.k_index is not None:
            if not 0 <= self.k_index < kgrid.n_k:
                raise UsageError(f"k index {self.k_index} is outside the grid of {kgrid.n_k} points")
            return int(self.k_index)
        if self.k is not None:
            return kgrid.index_of(self.k)
        raise UsageError(f"subset mode {self.mode.value!r} needs a k value or k index")

    def resolve(self, kgrid: KGrid) -> tuple[int, ...]:
        """Sorted grid indices of the subset."""
        mode = self.mode
        if mode is SubsetMode.FULL_ZONE:
            return tuple(range(kgrid.n_k))
        if mode is SubsetMode.SINGLE_K:
            return (self._point(kgrid),)
        if mode is SubsetMode.PAIR_PM:
            i = self._point(kgrid)
            return tuple(sorted({i, int(kgrid.mirror(i))}))
        if mode is SubsetMode.SYMMETRIC_INTERVAL:
            f = self.fraction
            if f is None or not 0.0 < f <= 1.0:
                raise UsageError(f"interval fraction must lie in (0, 1], got {f}")
            # select by integer offset from the centre so the set is exactly parity symmetric
            c = kgrid.center_index
            kmax = math.pi / kgrid.lattice_constant
            dk = 2.0 * math.pi / (kgrid.n_k * kgrid.lattice_constant)
            half = min(c, int(math.floor(f * kmax / dk + 1e-9)))
            return tuple(range(c - half, c + half + 1))
        if mode is SubsetMode.EXPLICIT_LIST:
            if not self.indices:
                raise UsageError("explicit k list is empty")
            bad = [i for i in self.indices if not 0 <= i < kgrid.n_k]
            if bad:
                raise UsageError(f"k indices {bad} are outside the grid of {kgrid.n_k} points")
            return tuple(sorted(set(self.indices)))
        raise UsageError(f"unknown subset mode {mode}")


class TrajectoryCache:
    """Per-k current arrays keyed by (physics fingerprint, k index).

    Reads are lock-free on an immutable snapshot; inserts take a lock. Arrays
    are stored read-only. With ``directory`` set, entries also persist as .npy
    files and are reloaded on a miss.
    """

    def __init__(self, directory=None):
        self._data: dict[tuple[str, int], np.ndarray] = {}
        self._lock = threading.Lock()
        self.directory = Path(directory) if directory is not None else None
        self.hits = 0
        self.misses = 0

    def _path(self, key, i):
        return self.directory / key[:16] / f"k{i:05d}.npy"

    def get(self, key: str, i: int):
        arr = self._data.get((key, i))
        if arr is None and self.directory is not None:
            p = self._path(key, i)
            if p.exists():
                arr = np.load(p)
                arr.setflags(write=False)
                with self._lock:
                    self._data.setdefault((key, i), arr)
        return arr

    def put(self, key: str, i: int, arr: np.ndarray) -> None:
        arr = np.array(arr, copy=True)
        arr.setflags(write=False)
        with self._lock:
            self._data.setdefault((key, i), arr)
            if self.directory is not None:
                p = self._path(key, i)
                p.parent.mkdir(parents=True, exist_ok=True)
                np.save(p, arr)

    def __len__(self):
        return len(self._data)


_DEFAULT_CACHE = TrajectoryCache()


@dataclass
class Diagnostics:
    convergence: float = 0.0
    trace_error: float = 0.0
    hermiticity: float = 0.0
    imag_residue: float = 0.0
    warnings: list[str] = field(default_factory=list)

    def as_dict(self):
        return {
            "basis_convergence_hartree": self.convergence,
            "max_trace_error": self.trace_error,
            "max_hermiticity_residual": self.hermiticity,
            "max_current_imag_residue": self.imag_residue,
            "warnings": list(self.warnings),
        }


class Simulation:
    """Band structure, pulse and time grid for one config, with cached per-k currents."""

    def __init__(self, cfg: RunConfig, workers: int = 1, cache: TrajectoryCache | None = None,
                 check_basis: bool = True):
        self.config = cfg
        self.workers = max(1, int(workers))
        self.cache = _DEFAULT_CACHE if cache is None else cache
        self.diagnostics = Diagnostics()
        b = cfg.bands
        self.kgrid = KGrid(cfg.potential.lattice_constant, b.n_k)
        fp = fourier_coefficients(cfg.potential, b.M)
        self.bands: BandStructure = solve_bands(fp, self.kgrid, b.n_bands, b.valence_index, b.energy_ceiling)
        self.momentum: MomentumMatrices = momentum_matrices(self.bands)
        if check_basis:
            self.diagnostics.convergence = check_convergence(cfg.potential, self.kgrid, b.n_bands, b.M)
            if self.diagnostics.convergence > 1e-6:
                self.diagnostics.warnings.append(
                    f"plane-wave basis not converged: {self.diagnostics.convergence:.2e} Ha")
        self.pulse = cfg.pulse
        it = cfg.integrator
        self.grid = TimeGrid.for_pulse(self.pulse, it.dt, it.tail, it.steps_per_cycle)
        self.key = cfg.physics_fingerprint()

    @property
    def t(self) -> np.ndarray:
        return self.grid.t

    def currents(self, indices: Sequence[int]) -> dict[int, np.ndarray]:
        """j_k(t) for each requested index, propagating only the cache misses."""
        indices = sorted(set(int(i) for i in indices))
        out, missing = {}, []
        for i in indices:
            arr = self.cache.get(self.key, i)
            if arr is None:
                missing.append(i)
            else:
                out[i] = arr
        self.cache.hits += len(out)
        self.cache.misses += len(missing)
        if missing:
            prop = propagate(self.bands, self.momentum, self.pulse, self.config.relaxation, self.grid,
                             missing, workers=self.workers)
            d = self.diagnostics
            d.trace_error = max(d.trace_error, float(prop.trace_error.max()))
            d.hermiticity = max(d.hermiticity, float(prop.hermiticity.max()))
            d.imag_residue = max(d.imag_residue, float(prop.imag_residue.max()))
            for i, j in zip(prop.indices, prop.currents):
                self.cache.put(self.key, int(i), j)
                out[int(i)] = self.cache.get(self.key, int(i))
        return out

    def trace(self, indices: Sequence[int]) -> CurrentTrace:
        return net_current(self.t, self.currents(indices), self.kgrid.n_k, indices)


@dataclass
class SubsetResult:
    subset: KSubsetSpec
    indices: tuple[int, ...]
    trace: CurrentTrace
    spectrum: SpectrumResult
    peaks: PeakTable
    cutoff: int | None


def _analyze(sim: Simulation, subset: KSubsetSpec, indices) -> SubsetResult:
    cfg = sim.config
    tr = sim.trace(indices)
    spec = power_spectrum(tr, sim.pulse.omega, cfg.spectrum.window, cfg.spectrum.pad_factor)
    peaks = harmonic_peaks(spec, cfg.spectrum.max_order)
    return SubsetResult(subset, tuple(indices), tr, spec, peaks, cutoff_estimate(peaks))


def _simulation(cfg_or_sim, workers=1) -> Simulation:
    return cfg_or_sim if isinstance(cfg_or_sim, Simulation) else Simulation(cfg_or_sim, workers)


def run_subset_experiment(config: RunConfig | Simulation, subset: KSubsetSpec, workers: int = 1) -> SubsetResult:
    """Current, spectrum, peaks and cutoff from the k-points in ``subset`` (weight 1/N_k each)."""
    sim = _simulation(config, workers)
    return _analyze(sim, subset, subset.resolve(sim.kgrid))


@dataclass
class BuildupRow:
    fraction: float
    result: SubsetResult
    full_zone: bool

    @property
    def cutoff(self):
        return self.result.cutoff

    @property
    def label(self) -> str:
        return FULL_ZONE_LABEL if self.full_zone else f"|k| <= {self.fraction:g} pi/a"


def cutoff_buildup_scan(config: RunConfig | Simulation, fractions: Sequence[float] | None = None,
                        workers: int = 1) -> list[BuildupRow]:
    """Subset spectra for symmetric intervals |k| <= f pi/a around k = 0."""
    sim = _simulation(config, workers)
    fractions = list(sim.config.experiment.fractions if fractions is None else fractions)
    if not fractions:
        raise UsageError("at least one interval fraction is required")
    if any(not 0.0 < f <= 1.0 for f in fractions):
        raise UsageError(f"fractions must lie in (0, 1], got {fractions}")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise UsageError(f"fractions must be strictly ascending, got {fractions}")
    sim.currents(KSubsetSpec.interval(fractions[-1]).resolve(sim.kgrid))  # one batched propagation
    rows = []
    for f in fractions:
        sub = KSubsetSpec.interval(f)
        idx = sub.resolve(sim.kgrid)
        rows.append(BuildupRow(f, _analyze(sim, sub, idx), len(idx) == sim.kgrid.n_k))
    return rows


def spectral_support(peaks: PeakTable, drop_db: float = 20.0) -> int:
    """Highest harmonic order whose peak lies within ``drop_db`` of the plateau level.

    The plateau level is the median of the odd peaks h >= 3 that pass the cutoff
    test; when there is none, the largest odd peak h >= 3 stands in.
    """
    odd = plateau_orders(peaks)
    if odd:
        level = float(np.median([peaks.height(h) for h in odd]))
    else:
        level = max(peaks.height(h) for h in range(3, len(peaks.heights) + 1, 2))
    thresh = level * 10.0 ** (-drop_db / 10.0)
    above = np.nonzero(peaks.heights >= thresh)[0]
    return int(peaks.orders[above[-1]]) if len(above) else 0


@dataclass
class ScanRow:
    F0: float
    cutoff: int | None
    result: SubsetResult

    @property
    def flagged(self) -> bool:
        return self.cutoff is None


@dataclass
class LinearFit:
    slope: float | None
    intercept: float | None
    r_squared: float | None
    n_points: int
    degenerate: bool

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "n_points": self.n_points, "degenerate": self.degenerate}


def linear_fit(x, y) -> LinearFit:
    """Least-squares line; degenerate (all None) with fewer than two distinct x values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.ptp(x) == 0:
        return LinearFit(None, None, None, len(x), True)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else None)
    return LinearFit(float(slope), float(intercept), r2, len(x), False)


def amplitude_scan(config: RunConfig, F0_list: Sequence[float] | None = None, workers: int = 1,
                   cache: TrajectoryCache | None = None) -> tuple[list[ScanRow], LinearFit]:
    """Full-zone cutoff for each peak field F0 (atomic units) and a line through (F0, cutoff).

    Rows without a defined cutoff are flagged and left out of the fit.
    """
    F0_list = list(config.experiment.F0_list if F0_list is None else F0_list)
    if not F0_list:
        raise UsageError("F0 list is empty")
    if any(not f > 0 for f in F0_list):
        raise UsageError(f"F0 values must be positive, got {F0_list}")
    rows = []
    for F0 in F0_list:
        sim = Simulation(config.with_field(F0), workers, cache)
        res = run_subset_experiment(sim, KSubsetSpec.full_zone())
        rows.append(ScanRow(F0, res.cutoff, res))
    good = [r for r in rows if not r.flagged]
    fit = linear_fit([r.F0 for r in good], [r.cutoff for r in good])
    return rows, fit
