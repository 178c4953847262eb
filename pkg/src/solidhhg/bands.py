"""Plane-wave solver for the Bloch problem of a 1D periodic potential.

For each crystal momentum k the Hamiltonian in the basis exp(i(k+G)x),
G = 2 pi m / a with |m| <= M, is

    H_GG'(k) = (k + G)^2 / 2 delta_GG' + U(G - G')

and its lowest eigenpairs give the band energies E_n(k) and the periodic parts
u_{n,k} of the Bloch states.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import ConvergenceWarning, NumericalError, UsageError
from .potential import FourierPotential, PotentialSpec, fourier_coefficients
from .units import ev_to_au

log = logging.getLogger(__name__)

DEFAULT_M = 32
DEFAULT_NK = 101
DEFAULT_NBANDS = 4


@dataclass(frozen=True)
class KGrid:
    """Uniform, parity-symmetric sampling of the first Brillouin zone.

    ``k_j = 2 pi j / (N a)`` for ``j = -(N-1)/2 .. (N-1)/2``: the grid of a ring of
    N cells with periodic boundary conditions. It contains k = 0, is closed under
    k -> -k and never double counts the zone boundary.
    """

    lattice_constant: float
    n_k: int = DEFAULT_NK

    def __post_init__(self):
        if self.n_k < 1 or self.n_k % 2 == 0:
            raise UsageError(f"n_k must be a positive odd integer, got {self.n_k}")

    @property
    def k(self) -> np.ndarray:
        half = (self.n_k - 1) // 2
        j = np.arange(-half, half + 1)
        return 2.0 * np.pi * j / (self.n_k * self.lattice_constant)

    @property
    def center_index(self) -> int:
        return (self.n_k - 1) // 2

    def mirror(self, index):
        """Index of -k for the point at ``index``."""
        return self.n_k - 1 - np.asarray(index)

    def index_of(self, k: float, tol: float = 1e-9) -> int:
        ks = self.k
        i = int(np.argmin(np.abs(ks - k)))
        if abs(ks[i] - k) > tol * max(1.0, abs(k)):
            raise UsageError(f"k = {k} is not on the grid (nearest {ks[i]})")
        return i


@dataclass(frozen=True)
class BandStructure:
    kgrid: KGrid
    energies: np.ndarray  # (n_k, n_bands), ascending along bands
    coeffs: np.ndarray  # (n_k, n_bands, 2M+1), c_{n,G}(k)
    valence_index: int
    M: int

    @property
    def n_bands(self) -> int:
        return self.energies.shape[1]

    @property
    def G(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(-self.M, self.M + 1) / self.kgrid.lattice_constant

    def periodic_parts(self, x) -> np.ndarray:
        """u_{n,k}(x) on points ``x``, shape (n_k, n_bands, len(x)), normalized over a cell."""
        a = self.kgrid.lattice_constant
        basis = np.exp(1j * np.multiply.outer(self.G, np.asarray(x, dtype=float))) / math.sqrt(a)
        return self.coeffs @ basis


@dataclass(frozen=True)
class MomentumMatrices:
    P: np.ndarray  # (n_k, n_bands, n_bands), <n,k| p |n',k>


def _hamiltonians(fp: FourierPotential, ks: np.ndarray) -> np.ndarray:
    M = fp.M
    m = np.arange(-M, M + 1)
    V = fp.coefficient(m[:, None] - m[None, :])
    G = 2.0 * np.pi * m / fp.lattice_constant
    H = np.broadcast_to(V, (len(ks),) + V.shape).copy()
    idx = np.arange(2 * M + 1)
    H[:, idx, idx] += 0.5 * (ks[:, None] + G[None, :]) ** 2
    return H


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude coefficient of each eigenvector made real and positive
    imax = np.argmax(np.abs(vecs), axis=-2)
    pivot = np.take_along_axis(vecs, imax[..., None, :], axis=-2)
    return vecs * (np.abs(pivot) / pivot)


def diagonalize(fp: FourierPotential, ks, n_bands: int):
    """Lowest ``n_bands`` eigenpairs at each k; returns (energies, coeffs)."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    nG = 2 * fp.M + 1
    if n_bands > nG:
        raise UsageError(f"n_bands={n_bands} exceeds the basis size {nG}")
    H = _hamiltonians(fp, ks)
    energies = np.empty((len(ks), n_bands))
    coeffs = np.empty((len(ks), n_bands, nG), dtype=complex)
    for i, k in enumerate(ks):
        try:
            w, v = np.linalg.eigh(H[i])
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"eigensolver failed at k = {k!r}: {exc}") from exc
        energies[i] = w[:n_bands]
        coeffs[i] = _fix_phase(v[:, :n_bands]).T
    return energies, coeffs


def select_valence_band(energies: np.ndarray, ceiling: float = math.inf) -> int:
    """Band n below ``ceiling`` with the widest direct gap to band n+1."""
    gaps = np.min(np.diff(energies, axis=1), axis=0)
    candidates = [n for n in range(energies.shape[1] - 1) if energies[:, n].max() < ceiling]
    if not candidates:
        raise UsageError("no band lies entirely below the energy ceiling")
    return max(candidates, key=lambda n: gaps[n])


def solve_bands(
    fp: FourierPotential,
    kgrid: KGrid,
    n_bands: int = DEFAULT_NBANDS,
    valence_index: int | str = 0,
    energy_ceiling: float = math.inf,
) -> BandStructure:
    """Band structure on ``kgrid``.

    ``valence_index`` is a band index or ``"auto"`` to pick the band with the
    widest gap above it among those entirely below ``energy_ceiling``.
    """
    if not math.isclose(fp.lattice_constant, kgrid.lattice_constant, rel_tol=1e-12):
        raise UsageError("potential and k-grid use different lattice constants")
    energies, coeffs = diagonalize(fp, kgrid.k, n_bands)
    if valence_index == "auto":
        n0 = select_valence_band(energies, energy_ceiling)
    else:
        n0 = int(valence_index)
        if not 0 <= n0 < n_bands - 1:
            raise UsageError(f"valence_index {n0} needs at least one band above it (n_bands={n_bands})")
    if np.min(energies[:, n0 + 1] - energies[:, n0]) <= 0:
        log.warning("no finite direct gap above band %d", n0)
    for arr in (energies, coeffs):
        arr.setflags(write=False)
    return BandStructure(kgrid, energies, coeffs, n0, fp.M)


def momentum_matrices(bs: BandStructure) -> MomentumMatrices:
    """P_{nn'}(k) = sum_G (k + G) c*_{n,G} c_{n',G}."""
    q = bs.kgrid.k[:, None] + bs.G[None, :]
    P = np.einsum("kag,kg,kbg->kab", bs.coeffs.conj(), q, bs.coeffs)
    P = 0.5 * (P + np.conj(np.swapaxes(P, 1, 2)))
    P.setflags(write=False)
    return MomentumMatrices(P)


def band_gap(bs: BandStructure) -> float:
    """Minimum direct gap between the valence band and the band above it."""
    n0 = bs.valence_index
    return float(np.min(bs.energies[:, n0 + 1] - bs.energies[:, n0]))


def basis_convergence(spec: PotentialSpec, ks, n_bands: int, M: int, step: int = 4) -> float:
    """Largest change of any retained E_n(k) when the basis grows from M to M + step."""
    e1, _ = diagonalize(fourier_coefficients(spec, M), ks, n_bands)
    e2, _ = diagonalize(fourier_coefficients(spec, M + step), ks, n_bands)
    return float(np.max(np.abs(e2 - e1)))


def check_convergence(spec: PotentialSpec, kgrid: KGrid, n_bands: int, M: int, tol: float = 1e-6) -> float:
    """Emit a ConvergenceWarning when the basis is not converged to ``tol``."""
    ks = kgrid.k[[0, kgrid.center_index, -1]]
    shift = basis_convergence(spec, ks, n_bands, M)
    if shift > tol:
        warnings.warn(
            f"plane-wave basis M={M} not converged: energies move by {shift:.3e} Ha for M -> M+4",
            ConvergenceWarning,
            stacklevel=2,
        )
    return shift


@dataclass(frozen=True)
class Calibration:
    lattice_constant: float
    gap: float
    target: float
    success: bool


def _gap_for(spec: PotentialSpec, a: float, n_bands: int, M: int, valence_index: int, n_samples: int) -> float:
    s = spec.with_lattice_constant(a)
    ks = np.linspace(0.0, np.pi / a, n_samples)  # E(k) = E(-k)
    e, _ = diagonalize(fourier_coefficients(s, M), ks, max(n_bands, valence_index + 2))
    return float(np.min(e[:, valence_index + 1] - e[:, valence_index]))


def calibrate_lattice_constant(
    spec: PotentialSpec,
    target_gap: float = ev_to_au(3.2),
    span: float = 0.3,
    n_bands: int = DEFAULT_NBANDS,
    M: int = DEFAULT_M,
    valence_index: int = 0,
    n_samples: int = 65,
    rtol: float = 0.02,
) -> Calibration:
    """Adjust the lattice constant within +-``span`` so the direct gap hits ``target_gap``.

    When no root is bracketed the closest reachable gap is returned with
    ``success`` set only if it is within ``rtol`` of the target.
    """
    a0 = spec.lattice_constant

    def resid(a):
        return _gap_for(spec, a, n_bands, M, valence_index, n_samples) - target_gap

    lo, hi = (1.0 - span) * a0, (1.0 + span) * a0
    grid = np.linspace(lo, hi, 13)
    vals = np.array([resid(a) for a in grid])
    sign = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if len(sign):
        # take the bracket closest to the starting lattice constant
        i = sign[np.argmin(np.abs(grid[sign] - a0))]
        a = optimize.brentq(resid, grid[i], grid[i + 1], xtol=1e-12 * a0, rtol=1e-12)
    else:
        i = int(np.argmin(np.abs(vals)))
        res = optimize.minimize_scalar(
            lambda a: abs(resid(a)), bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]), method="bounded"
        )
        a = float(res.x)
    gap = resid(a) + target_gap
    return Calibration(a, gap, target_gap, abs(gap - target_gap) <= rtol * target_gap)


def gap_report(specs: Sequence[PotentialSpec], **kw) -> list[dict]:
    """Default-lattice gap and calibration outcome for each potential."""
    out = []
    for s in specs:
        cal = calibrate_lattice_constant(s, **kw)
        out.append(
            {
                "kind": s.kind.value,
                "lattice_constant": s.lattice_constant,
                "gap": _gap_for(s, s.lattice_constant, kw.get("n_bands", DEFAULT_NBANDS), kw.get("M", DEFAULT_M),
                                kw.get("valence_index", 0), kw.get("n_samples", 65)),
                "calibrated_lattice_constant": cal.lattice_constant,
                "calibrated_gap": cal.gap,
                "calibration_success": cal.success,
            }
        )
    return out
