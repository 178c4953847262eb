"""Independent reference computations used to validate the production paths.

None of these share code with the solvers they check: band energies come from
a real-space finite-difference Hamiltonian, momentum matrix elements from
differentiating Bloch functions on a grid, and density-matrix trajectories
from exact exponentials of a piecewise-constant Liouvillian.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy.linalg import expm

from .bands import BandStructure
from .dynamics import RelaxationRates, TimeGrid
from .pulse import PulseParams, vector_potential

# central-difference weights, 8th order
_D2 = np.array([-205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_D1 = np.array([0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _bloch_stencil(weights, N, h, k, a, odd):
    phase = np.exp(1j * k * a)
    rows, cols, vals = [], [], []
    j = np.arange(N)
    for s, w in enumerate(weights):
        if w == 0.0:
            continue
        if s == 0:
            rows.append(j), cols.append(j), vals.append(np.full(N, w + 0j))
            continue
        for sign in (1, -1):
            jj = j + sign * s
            # psi(x + a) = e^{ika} psi(x)
            ph = np.where(jj >= N, phase, np.where(jj < 0, np.conj(phase), 1.0))
            rows.append(j), cols.append(jj % N), vals.append((sign if odd else 1) * w * ph)
    m = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return m / (h if odd else h * h)


def fd_band_energies(potential, lattice_constant: float, ks, n_bands: int, n_points: int = 4096) -> np.ndarray:
    """Lowest ``n_bands`` energies at each k from a real-space grid with Bloch boundary conditions.

    ``potential`` is a callable U(x) in Hartree with x in bohr.
    """
    a = lattice_constant
    h = a / n_points
    x = np.arange(n_points) * h
    U = np.asarray(potential(x), dtype=float)
    out = []
    for k in np.atleast_1d(ks):
        H = -0.5 * _bloch_stencil(_D2, n_points, h, k, a, odd=False) + sp.diags(U + 0j)
        w = sla.eigsh(H.tocsc(), k=n_bands, sigma=U.min() - 1.0, which="LM", return_eigenvectors=False)
        out.append(np.sort(w.real))
    return np.array(out)


def fd_momentum_matrices(bs: BandStructure, n_points: int = 4096) -> np.ndarray:
    """P(k) from Bloch functions psi = e^{ikx} u(x) sampled on a grid, with -i d/dx by finite differences."""
    a = bs.kgrid.lattice_constant
    h = a / n_points
    x = np.arange(n_points) * h
    u = bs.periodic_parts(x)  # (n_k, n_b, N)
    out = np.empty((bs.kgrid.n_k, bs.n_bands, bs.n_bands), dtype=complex)
    for i, k in enumerate(bs.kgrid.k):
        psi = u[i] * np.exp(1j * k * x)
        D = _bloch_stencil(_D1, n_points, h, k, a, odd=True)
        dpsi = (D @ psi.T).T
        out[i] = (psi.conj() @ (-1j * dpsi).T) * h
    return out


def _hermitian_basis(n):
    """Real orthonormal basis of n x n Hermitian matrices (Frobenius inner product)."""
    basis = []
    for i in range(n):
        m = np.zeros((n, n), complex)
        m[i, i] = 1
        basis.append(m)
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n), complex)
            m[i, j] = m[j, i] = 1 / np.sqrt(2)
            basis.append(m)
            m = np.zeros((n, n), complex)
            m[i, j], m[j, i] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            basis.append(m)
    return np.array(basis)


def _real_superoperator(fn, basis):
    n2 = len(basis)
    L = np.empty((n2, n2))
    for j, b in enumerate(basis):
        img = fn(b)
        L[:, j] = np.real(np.einsum("kij,ij->k", basis.conj(), img))
    return L


def expm_trajectory(
    energies,
    P,
    valence_index: int,
    pulse: PulseParams,
    rates: RelaxationRates,
    grid: TimeGrid,
    micro_steps: int = 100,
    chunk: int = 200,
) -> np.ndarray:
    """rho(t) on ``grid`` for one k from exact exponentials over ``micro_steps`` sub-steps per step.

    H is held at its value at each sub-step midpoint. The affine generator
    (Liouvillian plus the constant relaxation source) acts on the real
    coordinates of rho in a Hermitian basis.
    """
    E = np.asarray(energies, dtype=float)
    P = np.asarray(P)
    n = len(E)
    basis = _hermitian_basis(n)
    g = rates.matrix(n)
    H0 = np.diag(E).astype(complex)
    L0 = _real_superoperator(lambda r: -1j * (H0 @ r - r @ H0) - g * r, basis)
    L1 = _real_superoperator(lambda r: 1j * (P @ r - r @ P), basis)  # coefficient of A(t)
    src = np.zeros((n, n), complex)
    src[valence_index, valence_index] = g[valence_index, valence_index]
    s = np.real(np.einsum("kij,ij->k", basis.conj(), src))

    d = n * n
    x = np.zeros(d + 1)
    rho0 = np.zeros((n, n), complex)
    rho0[valence_index, valence_index] = 1
    x[:d] = np.real(np.einsum("kij,ij->k", basis.conj(), rho0))
    x[d] = 1.0
    delta = grid.dt / micro_steps
    coords = [x[:d].copy()]
    for s0 in range(0, grid.n_steps, chunk):
        steps = np.arange(s0, min(grid.n_steps, s0 + chunk))
        tm = steps[:, None] * grid.dt + (np.arange(micro_steps)[None, :] + 0.5) * delta
        a = vector_potential(pulse, tm.ravel())
        gen = np.zeros((a.size, d + 1, d + 1))
        gen[:, :d, :d] = L0 + a[:, None, None] * L1
        gen[:, :d, d] = s
        U = expm(gen * delta).reshape(len(steps), micro_steps, d + 1, d + 1)
        step_maps = U[:, 0]
        for m in range(1, micro_steps):
            step_maps = U[:, m] @ step_maps
        for Um in step_maps:
            x = Um @ x
            coords.append(x[:d].copy())
    coords = np.array(coords)
    return np.einsum("tk,kij->tij", coords, basis)
