"""Net current, its power spectrum, harmonic peak heights and the cutoff estimate."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import NumericsWarning, UsageError

log = logging.getLogger(__name__)

# Electron charge and mass as they enter H = (p - eA)^2 / 2m; unit values in atomic units.
CHARGE = 1.0
MASS = 1.0

PEAK_HALF_WIDTH = 0.4
CUTOFF_DROP_DB = 20.0
NOISE_GATE_DB = 60.0
IMAG_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CurrentTrace:
    t: np.ndarray
    J: np.ndarray
    n_k_total: int
    indices: tuple[int, ...] = ()


@dataclass(frozen=True)
class SpectrumResult:
    """One-sided S(omega) = |dt * DFT[w * J]|^2 on omega / omega_L."""

    order: np.ndarray
    S: np.ndarray
    window: str
    pad_factor: int
    dt: float
    omega_L: float
    n_samples: int

    @property
    def d_omega(self) -> float:
        return float(self.order[1] - self.order[0]) * self.omega_L if len(self.order) > 1 else 0.0


@dataclass(frozen=True)
class PeakTable:
    orders: np.ndarray
    heights: np.ndarray
    noise_floor: float

    def height(self, h: int) -> float:
        return float(self.heights[h - 1])

    def as_dict(self) -> dict:
        return {
            "orders": [int(h) for h in self.orders],
            "heights": [float(v) for v in self.heights],
            "noise_floor": float(self.noise_floor),
        }


def current_contribution(rho_t, P, A_t, charge: float = CHARGE, mass: float = MASS) -> np.ndarray:
    """j_k(t) = (e/m) (Tr[rho P] - e A Tr[rho]) from a stored trajectory ``rho_t`` of shape (n_t, n, n)."""
    rho_t = np.asarray(rho_t)
    tr_p = np.einsum("tij,ji->t", rho_t, P)
    tr = np.einsum("tii->t", rho_t)
    j = (charge / mass) * (tr_p - charge * np.asarray(A_t) * tr)
    scale = np.max(np.abs(j.real)) if j.size else 0.0
    resid = np.max(np.abs(j.imag)) if j.size else 0.0
    if resid > IMAG_TOLERANCE * max(scale, np.finfo(float).tiny) and resid > 0:
        warnings.warn(f"current has imaginary residue {resid:.3e} (max |j| = {scale:.3e})", NumericsWarning,
                      stacklevel=2)
    return j.real


def net_current(
    t: np.ndarray,
    contributions: Mapping[int, np.ndarray],
    n_k_total: int,
    subset: Iterable[int] | None = None,
) -> CurrentTrace:
    """J(t) = (1/N_k) sum over ``subset`` of j_k(t), summed in ascending k-index order.

    The weight is always 1/N_k of the full grid so that subset spectra share an
    absolute scale with the full-zone spectrum.
    """
    t = np.asarray(t, dtype=float)
    keys = sorted(contributions) if subset is None else sorted(set(int(i) for i in subset))
    J = np.zeros_like(t)
    for i in keys:
        if i not in contributions:
            raise UsageError(f"no current available for k index {i}")
        j = np.asarray(contributions[i])
        if j.shape != t.shape:
            raise UsageError(f"contribution for k index {i} is on a different time grid")
        J += j
    return CurrentTrace(t, J / n_k_total, n_k_total, tuple(keys))


def _is_uniform(t) -> bool:
    if len(t) < 2:
        return False
    d = np.diff(t)
    return bool(np.all(np.abs(d - d[0]) <= 1e-9 * abs(d[0])) and d[0] > 0)


def window_function(name: str, n: int) -> np.ndarray:
    if name in ("hann", "hanning"):
        return np.hanning(n)
    if name in ("rect", "rectangular", "none", "boxcar"):
        return np.ones(n)
    raise UsageError(f"unknown window {name!r}")


def fft_length(n: int, pad_factor: int) -> int:
    """No padding for ``pad_factor`` 1, otherwise the next power of two >= pad_factor * n."""
    if pad_factor < 1:
        raise UsageError("pad_factor must be >= 1")
    if pad_factor == 1:
        return n
    return 1 << int(np.ceil(np.log2(pad_factor * n)))


def power_spectrum(trace: CurrentTrace, omega_L: float, window: str = "hann", pad_factor: int = 4) -> SpectrumResult:
    t = trace.t
    if not _is_uniform(t):
        raise UsageError("power spectrum needs a uniform time grid")
    dt = float(t[1] - t[0])
    n = len(t)
    nfft = fft_length(n, pad_factor)
    x = window_function(window, n) * trace.J
    X = np.fft.rfft(x, nfft) * dt
    S = np.abs(X) ** 2
    order = 2.0 * np.pi * np.fft.rfftfreq(nfft, dt) / omega_L
    return SpectrumResult(order, S, window, pad_factor, dt, omega_L, n)


def parseval_sides(spec: SpectrumResult, trace: CurrentTrace) -> tuple[float, float]:
    """(sum S d_omega over both signs of omega, 2 pi sum |w J|^2 dt); equal by Parseval."""
    nfft = fft_length(spec.n_samples, spec.pad_factor)
    weight = np.full(len(spec.S), 2.0)
    weight[0] = 1.0
    if nfft % 2 == 0:
        weight[-1] = 1.0
    d_omega = 2.0 * np.pi / (nfft * spec.dt)
    lhs = float(np.sum(weight * spec.S) * d_omega)
    x = window_function(spec.window, spec.n_samples) * trace.J
    rhs = float(2.0 * np.pi * np.sum(x ** 2) * spec.dt)
    return lhs, rhs


def harmonic_peaks(spec: SpectrumResult, max_order: int | None = None,
                   half_width: float = PEAK_HALF_WIDTH) -> PeakTable:
    """Peak height max S over [h - 0.4, h + 0.4] for h = 1, 2, ...

    The noise floor is the median of S over the upper half of the frequency axis.
    """
    order = spec.order
    if len(order) < 2 or order[1] - order[0] >= 0.1:
        raise UsageError("spectral resolution must be finer than 0.1 omega_L")
    top = int(np.floor(order[-1] - half_width))
    if max_order is not None:
        top = min(top, int(max_order))
    if top < 1:
        raise UsageError("spectrum does not reach the first harmonic")
    orders = np.arange(1, top + 1)
    lo = np.searchsorted(order, orders - half_width, side="left")
    hi = np.searchsorted(order, orders + half_width, side="right")
    heights = np.array([spec.S[a:b].max() for a, b in zip(lo, hi)])
    floor = float(np.median(spec.S[len(spec.S) // 2:]))
    return PeakTable(orders, heights, floor)


def _plateau_scan(peaks: PeakTable, drop_db: float, gate_db: float, max_misses: int | None):
    gate = peaks.noise_floor * 10.0 ** (gate_db / 10.0)
    drop = 10.0 ** (-drop_db / 10.0)
    seen: list[float] = []
    passed: list[int] = []
    misses = 0
    for h in range(3, len(peaks.heights) + 1, 2):
        v = peaks.height(h)
        if v <= gate:
            break
        seen.append(v)
        if v >= drop * float(np.median(seen)):
            passed.append(h)
            misses = 0
        else:
            misses += 1
            if max_misses is not None and misses >= max_misses:
                break
    return seen, passed


def cutoff_estimate(peaks: PeakTable, drop_db: float = CUTOFF_DROP_DB, gate_db: float = NOISE_GATE_DB,
                    max_misses: int | None = None):
    """Largest odd harmonic within ``drop_db`` of the plateau, or None when undefined.

    Odd harmonics are visited upward from h = 3. For each candidate the plateau
    level is the median of the odd peaks from h = 3 up to the candidate, and the
    candidate passes if its peak is no more than ``drop_db`` below that level.
    The scan ends at the first peak under the noise gate (``gate_db`` above the
    noise floor), so the numerical floor cannot drag the median down and
    re-qualify itself; ``max_misses`` optionally also ends it after that many
    consecutive failures. Fewer than three odd peaks above the gate means there
    is no plateau.
    """
    seen, passed = _plateau_scan(peaks, drop_db, gate_db, max_misses)
    if len(seen) < 3 or not passed:
        return None
    return passed[-1]


def plateau_orders(peaks: PeakTable, drop_db: float = CUTOFF_DROP_DB, gate_db: float = NOISE_GATE_DB,
                   max_misses: int | None = None) -> list[int]:
    """Odd harmonics (h >= 3) that pass the plateau test used by ``cutoff_estimate``."""
    seen, passed = _plateau_scan(peaks, drop_db, gate_db, max_misses)
    return passed if len(seen) >= 3 else []


def even_odd_ratios(peaks: PeakTable, evens: Iterable[int] = (2, 4, 6)) -> dict[int, float]:
    """For each even h: peak(h) / min(peak(h-1), peak(h+1))."""
    out = {}
    for h in evens:
        if h + 1 > len(peaks.heights):
            continue
        out[h] = peaks.height(h) / min(peaks.height(h - 1), peaks.height(h + 1))
    return out
