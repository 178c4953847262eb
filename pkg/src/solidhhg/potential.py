"""Lattice-periodic model potentials and their plane-wave Fourier coefficients.

Two potentials are provided, both with two wells per unit cell:

* ``CosineWells``: ``-U0 * sum_i cos^2(pi (x - x_i) / Delta)``, each term kept
  only on its central lobe ``|x - x_i| <= Delta / 2``.
* ``SinhWells``: ``-U_shift + U0 * sum_i sinh^2(d_i / a)`` where ``d_i`` is the
  minimum-image displacement of ``x`` from ``x_i``.

Positions are in bohr and energies in Hartree.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .units import angstrom_to_au, ev_to_au


class PotentialKind(str, enum.Enum):
    COSINE = "cosine"
    SINH = "sinh"


@dataclass(frozen=True)
class CosineParams:
    U0: float = ev_to_au(25.0)
    width_ratio: float = 0.15
    centers: tuple[float, ...] = (0.3, 0.607)


@dataclass(frozen=True)
class SinhParams:
    U_shift: float = ev_to_au(187.722)
    U0: float = ev_to_au(4080.925)
    centers: tuple[float, ...] = (0.18, 0.7)


DEFAULT_LATTICE_CONSTANT = angstrom_to_au(5.2)


@dataclass(frozen=True)
class PotentialSpec:
    kind: PotentialKind = PotentialKind.COSINE
    lattice_constant: float = DEFAULT_LATTICE_CONSTANT
    cosine: CosineParams = field(default_factory=CosineParams)
    sinh: SinhParams = field(default_factory=SinhParams)

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        self.validate()

    def validate(self) -> None:
        a = self.lattice_constant
        if not (math.isfinite(a) and a > 0):
            raise ConfigError("potential.lattice_constant", f"must be finite and positive, got {a}")
        if self.kind is PotentialKind.COSINE:
            p = self.cosine
            _check_finite("potential.cosine.U0", p.U0)
            if not (0.0 < p.width_ratio < 1.0):
                raise ConfigError("potential.cosine.width_ratio", f"must lie in (0, 1), got {p.width_ratio}")
            _check_centers("potential.cosine.centers", p.centers)
        else:
            p = self.sinh
            _check_finite("potential.sinh.U0", p.U0)
            _check_finite("potential.sinh.U_shift", p.U_shift)
            _check_centers("potential.sinh.centers", p.centers)

    def with_lattice_constant(self, a: float) -> "PotentialSpec":
        return PotentialSpec(self.kind, a, self.cosine, self.sinh)


def _check_finite(key, v):
    if not math.isfinite(v):
        raise ConfigError(key, f"must be finite, got {v}")


def _check_centers(key, centers):
    if len(centers) == 0:
        raise ConfigError(key, "at least one well center is required")
    for c in centers:
        if not (math.isfinite(c) and 0.0 <= c < 1.0):
            raise ConfigError(key, f"centers are fractions of a and must lie in [0, 1), got {c}")


def _min_image(y):
    """Wrap a cell-relative displacement into [-1/2, 1/2)."""
    return (y + 0.5) % 1.0 - 0.5


def evaluate_potential(spec: PotentialSpec, x) -> np.ndarray:
    """U(x) in Hartree for positions ``x`` in bohr (scalar or array)."""
    y = np.asarray(x, dtype=float) / spec.lattice_constant
    y = y - np.floor(y)
    if spec.kind is PotentialKind.COSINE:
        p = spec.cosine
        out = np.zeros_like(y)
        for c in p.centers:
            d = _min_image(y - c)
            lobe = np.abs(d) <= 0.5 * p.width_ratio
            out -= np.where(lobe, np.cos(np.pi * d / p.width_ratio) ** 2, 0.0)
        return p.U0 * out
    p = spec.sinh
    out = np.full_like(y, -p.U_shift)
    for c in p.centers:
        out += p.U0 * np.sinh(_min_image(y - c)) ** 2
    return out


def breakpoints(spec: PotentialSpec) -> np.ndarray:
    """Cell-relative positions in [0, 1] where U or a derivative is discontinuous."""
    pts = [0.0, 1.0]
    if spec.kind is PotentialKind.COSINE:
        for c in spec.cosine.centers:
            w = 0.5 * spec.cosine.width_ratio
            pts += [(c - w) % 1.0, (c + w) % 1.0]
    else:
        pts += [(c + 0.5) % 1.0 for c in spec.sinh.centers]
    return np.unique(np.clip(pts, 0.0, 1.0))


@dataclass(frozen=True)
class FourierPotential:
    """Coefficients U(G_m) for G_m = 2 pi m / a, m = -2M..2M.

    ``coefficients[m + 2M]`` holds the m-th coefficient.
    """

    lattice_constant: float
    M: int
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=complex)
        if c.shape != (4 * self.M + 1,):
            raise ValueError(f"expected {4 * self.M + 1} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-2 * self.M, 2 * self.M + 1)

    def coefficient(self, m):
        return self.coefficients[np.asarray(m) + 2 * self.M]

    def evaluate(self, x) -> np.ndarray:
        """Inverse transform; complex, with a vanishing imaginary part for real U."""
        x = np.asarray(x, dtype=float)
        G = 2.0 * np.pi * self.orders / self.lattice_constant
        return np.exp(1j * np.multiply.outer(x, G)) @ self.coefficients

    @classmethod
    def constant(cls, value: float, lattice_constant: float, M: int) -> "FourierPotential":
        c = np.zeros(4 * M + 1, dtype=complex)
        c[2 * M] = value
        return cls(lattice_constant, M, c)


def _closed_form(spec: PotentialSpec, m: np.ndarray) -> np.ndarray:
    a = spec.lattice_constant
    b = 2.0 * np.pi * m  # G * a
    if spec.kind is PotentialKind.COSINE:
        p = spec.cosine
        w = p.width_ratio
        q = 2.0 * np.pi / w

        def box(s):
            # integral of cos(s y) over |y| <= w/2
            return w * np.sinc(s * w / (2.0 * np.pi))

        # (1/a) * integral of the lobe cos^2(pi y / w) e^{-i b y} over the cell
        lobe = 0.5 * box(b) + 0.25 * (box(b + q) + box(b - q))
        phase = sum(np.exp(-1j * b * c) for c in p.centers)
        return -p.U0 * lobe * phase
    p = spec.sinh
    # integral of sinh^2(y) e^{-i b y} over y in [-1/2, 1/2)
    single = 0.5 * (math.sinh(1.0) * np.cos(np.pi * m) / (1.0 + (np.pi * m) ** 2) - (m == 0))
    phase = sum(np.exp(-1j * b * c) for c in p.centers)
    out = p.U0 * single * phase
    return out - p.U_shift * (m == 0)


def fourier_coefficients(spec: PotentialSpec, M: int) -> FourierPotential:
    """Exact Fourier coefficients of a model potential for |m| <= 2M."""
    if M < 1:
        raise ValueError(f"basis half-size M must be >= 1, got {M}")
    spec.validate()
    m = np.arange(-2 * M, 2 * M + 1)
    coeffs = _closed_form(spec, m)
    # enforce exact Hermitian symmetry of the real potential
    coeffs = 0.5 * (coeffs + np.conj(coeffs[::-1]))
    return FourierPotential(spec.lattice_constant, M, coeffs)


def fourier_coefficients_quadrature(
    func: Callable[[np.ndarray], np.ndarray],
    lattice_constant: float,
    M: int,
    breaks=(0.0, 1.0),
    panels: int = 64,
    order: int = 24,
) -> FourierPotential:
    """Fourier coefficients of an arbitrary periodic ``func(x)`` by composite Gauss-Legendre.

    ``breaks`` are cell-relative points where ``func`` is not smooth; panels never
    straddle them, so the quadrature converges exponentially on each piece.
    """
    a = lattice_constant
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.unique(np.concatenate([[0.0, 1.0], np.asarray(breaks, dtype=float)]))
    ys, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        sub = np.linspace(lo, hi, panels + 1)
        for s0, s1 in zip(sub[:-1], sub[1:]):
            half = 0.5 * (s1 - s0)
            ys.append(s0 + half * (nodes + 1.0))
            ws.append(half * weights)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    f = np.asarray(func(y * a), dtype=float)
    m = np.arange(-2 * M, 2 * M + 1)
    coeffs = np.exp(-2j * np.pi * np.multiply.outer(m, y)) @ (w * f)
    return FourierPotential(a, M, coeffs)


def fourier_coefficients_numeric(spec: PotentialSpec, M: int, **kw) -> FourierPotential:
    """Quadrature route for a model potential; independent of the closed forms."""
    return fourier_coefficients_quadrature(
        lambda x: evaluate_potential(spec, x), spec.lattice_constant, M, breaks=breakpoints(spec), **kw
    )
