"""k-resolved density-matrix propagation in velocity gauge.

In the dipole approximation the Hamiltonian is diagonal in k, so each k carries
its own N_b x N_b density matrix obeying

    d rho / dt = -i [H(t), rho] + R(rho),
    H_nn'(t)   = E_n(k) delta_nn' - A(t) P_nn'(k),

with R pulling populations back to the valence band at rate gamma_d and
damping coherences at rate gamma_od. The A^2 term of the kinetic energy is a
multiple of the identity and drops out of the commutator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bands import BandStructure, MomentumMatrices
from .errors import NumericalError, UsageError
from .pulse import PulseParams, vector_potential
from .units import fs_to_au

TRACE_DRIFT_LIMIT = 1e-6


@dataclass(frozen=True)
class RelaxationRates:
    gamma_d: float = 0.1 / fs_to_au(1.0)
    gamma_od: float = 0.3 / fs_to_au(1.0)

    def __post_init__(self):
        if self.gamma_d < 0 or self.gamma_od < 0:
            raise UsageError("relaxation rates must be non-negative")

    def matrix(self, n: int) -> np.ndarray:
        g = np.full((n, n), self.gamma_od)
        np.fill_diagonal(g, self.gamma_d)
        return g


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_i = i * dt, i = 0..n_steps."""

    dt: float
    n_steps: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    @classmethod
    def for_pulse(cls, pulse: PulseParams, dt: float | None = None, tail: float = 0.0,
                  steps_per_cycle: int = 512) -> "TimeGrid":
        """Grid covering [0, tau + tail]; dt is shrunk so that tau falls on a grid point."""
        nominal = pulse.period / steps_per_cycle if dt is None else dt
        if not nominal > 0:
            raise UsageError(f"time step must be positive, got {nominal}")
        n_pulse = max(1, math.ceil(pulse.tau / nominal - 1e-9))
        step = pulse.tau / n_pulse
        n_tail = math.ceil(tail / step - 1e-9) if tail > 0 else 0
        return cls(step, n_pulse + n_tail)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.dt / factor, self.n_steps * factor)


@dataclass
class KPointState:
    k: float
    rho: np.ndarray
    t: float = 0.0


def initial_state(bs: BandStructure, k_index: int) -> KPointState:
    """Pure valence-band projector |n0,k><n0,k|; the 1/N_k weight is applied when summing currents."""
    rho = np.zeros((bs.n_bands, bs.n_bands), dtype=complex)
    rho[bs.valence_index, bs.valence_index] = 1.0
    return KPointState(float(bs.kgrid.k[k_index]), rho, 0.0)


def rhs(rho, A, energies, P, rates_matrix, valence_index):
    """Time derivative of (a stack of) Hermitian density matrices at vector potential ``A``.

    ``rho`` and ``P`` have shape (..., n, n), ``energies`` (..., n);
    ``rates_matrix`` is ``RelaxationRates.matrix(n)``.
    """
    n = rho.shape[-1]
    H = -A * P
    idx = np.arange(n)
    H[..., idx, idx] += energies
    X = H @ rho
    # [H, rho] = X - X^dagger for Hermitian H and rho; keeps the increment exactly Hermitian
    out = -1j * (X - np.conj(np.swapaxes(X, -1, -2)))
    out -= rates_matrix * rho
    out[..., valence_index, valence_index] += rates_matrix[valence_index, valence_index]
    return out


def current(rho, A, P) -> np.ndarray:
    """Complex Tr[rho P] - A Tr[rho]; the physical current is the real part."""
    tr_rho_p = np.sum(rho * np.swapaxes(P, -1, -2), axis=(-2, -1))
    tr_rho = np.trace(rho, axis1=-2, axis2=-1)
    return tr_rho_p - A * tr_rho


@dataclass
class Propagation:
    """Per-k outcome of a propagation on a TimeGrid.

    ``currents[i]`` is j_k(t) (unit charge and mass) for ``indices[i]``.
    """

    indices: np.ndarray
    grid: TimeGrid
    currents: np.ndarray
    trace_error: np.ndarray
    hermiticity: np.ndarray
    imag_residue: np.ndarray
    trajectories: np.ndarray | None = field(default=None, repr=False)


def _propagate_batch(energies, P, pulse, rates, n0, grid, record=False):
    nk, nb = energies.shape
    dt = grid.dt
    gmat = rates.matrix(nb)
    half = np.arange(2 * grid.n_steps + 1) * (0.5 * dt)
    Ahalf = vector_potential(pulse, half)

    rho = np.zeros((nk, nb, nb), dtype=complex)
    rho[:, n0, n0] = 1.0
    cur = np.empty((grid.n_steps + 1, nk), dtype=complex)
    cur[0] = current(rho, Ahalf[0], P)
    tr_err = np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)
    herm = np.zeros(nk)
    traj = None
    if record:
        traj = np.empty((grid.n_steps + 1, nk, nb, nb), dtype=complex)
        traj[0] = rho

    def f(r, a):
        return rhs(r, a, energies, P, gmat, n0)

    for i in range(grid.n_steps):
        a0, am, a1 = Ahalf[2 * i], Ahalf[2 * i + 1], Ahalf[2 * i + 2]
        k1 = f(rho, a0)
        k2 = f(rho + (0.5 * dt) * k1, am)
        k3 = f(rho + (0.5 * dt) * k2, am)
        k4 = f(rho + dt * k3, a1)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        cur[i + 1] = current(rho, a1, P)
        tr = np.abs(np.trace(rho, axis1=1, axis2=2) - 1.0)
        np.maximum(tr_err, tr, out=tr_err)
        scale = np.max(np.abs(rho), axis=(1, 2))
        h = np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2))), axis=(1, 2)) / scale
        np.maximum(herm, h, out=herm)
        if record:
            traj[i + 1] = rho
        if not np.all(np.isfinite(tr)) or tr.max() > TRACE_DRIFT_LIMIT:
            raise NumericalError(
                f"trace drift {np.nanmax(tr):.3e} at t = {(i + 1) * dt:.6g} a.u.; reduce the time step"
            )
    jr = cur.real.T.copy()
    scale = np.maximum(np.max(np.abs(jr), axis=1), np.finfo(float).tiny)
    imag = np.max(np.abs(cur.imag), axis=0) / scale
    return jr, tr_err, herm, imag, traj


def propagate(
    bs: BandStructure,
    P: MomentumMatrices,
    pulse: PulseParams,
    rates: RelaxationRates,
    grid: TimeGrid,
    indices: Sequence[int] | None = None,
    workers: int = 1,
    record: bool = False,
) -> Propagation:
    """Fixed-step RK4 from the valence-band projector for the k-points ``indices``.

    k-points never interact, so they are split into chunks and integrated
    independently; each k's result does not depend on how the chunks are formed.
    ``record`` keeps the full rho(t) (memory heavy, intended for a handful of k).
    """
    if indices is None:
        indices = np.arange(bs.kgrid.n_k)
    indices = np.asarray(sorted(set(int(i) for i in indices)), dtype=int)
    if len(indices) and (indices[0] < 0 or indices[-1] >= bs.kgrid.n_k):
        raise UsageError("k-point index out of range")
    E = bs.energies[indices]
    Pk = P.P[indices]
    n0 = bs.valence_index
    workers = max(1, min(int(workers), len(indices) or 1))
    chunks = [c for c in np.array_split(np.arange(len(indices)), workers) if len(c)]

    def job(c):
        return _propagate_batch(E[c], Pk[c], pulse, rates, n0, grid, record)

    if workers == 1:
        parts = [job(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, chunks))
    if not parts:
        empty = np.zeros(0)
        return Propagation(indices, grid, np.zeros((0, grid.n_steps + 1)), empty, empty, empty)
    currents = np.concatenate([p[0] for p in parts])
    traj = np.concatenate([p[4] for p in parts], axis=1) if record else None
    return Propagation(
        indices,
        grid,
        currents,
        np.concatenate([p[1] for p in parts]),
        np.concatenate([p[2] for p in parts]),
        np.concatenate([p[3] for p in parts]),
        traj,
    )


def rk4_matrix(rho0, hamiltonian, rates_matrix, target, dt, n_steps):
    """Generic RK4 for a single density matrix with a callable ``hamiltonian(t)``.

    Used for small model problems (two-level Rabi, relaxation limits).
    """
    rho = np.array(rho0, dtype=complex)

    def f(r, t):
        H = hamiltonian(t)
        return -1j * (H @ r - r @ H) - rates_matrix * (r - target)

    out = [rho]
    for i in range(n_steps):
        t = i * dt
        k1 = f(rho, t)
        k2 = f(rho + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = f(rho + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = f(rho + dt * k3, t + dt)
        rho = rho + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(rho)
    return np.array(out)
