"""sin^2-envelope laser pulse in velocity gauge (scalar potential identically zero)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .units import angstrom_to_au, fs_to_au, gvm_to_au, wavelength_to_omega

DEFAULT_WAVELENGTH = angstrom_to_au(3e4)  # 3 um
DEFAULT_DURATION = fs_to_au(300.0)
DEFAULT_F0 = gvm_to_au(0.5)


@dataclass(frozen=True)
class PulseParams:
    """A(t) = A0 sin^2(pi t / tau) sin(omega_L t + phi) on [0, tau], zero elsewhere.

    All values in atomic units; ``wavelength`` is in bohr.
    """

    A0: float
    wavelength: float = DEFAULT_WAVELENGTH
    tau: float = DEFAULT_DURATION
    phi: float = 0.0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError("pulse.duration", f"must be positive, got {self.tau}")
        if not (self.wavelength > 0 and math.isfinite(self.wavelength)):
            raise ConfigError("pulse.wavelength", f"must be positive, got {self.wavelength}")
        if not math.isfinite(self.A0):
            raise ConfigError("pulse.A0", "must be finite")

    @classmethod
    def from_field(cls, F0: float, wavelength: float = DEFAULT_WAVELENGTH, tau: float = DEFAULT_DURATION,
                   phi: float = 0.0) -> "PulseParams":
        """Pulse with peak field ``F0`` using A0 = F0 / omega_L."""
        return cls(F0 / wavelength_to_omega(wavelength), wavelength, tau, phi)

    @property
    def omega(self) -> float:
        return wavelength_to_omega(self.wavelength)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def F0(self) -> float:
        return self.A0 * self.omega

    # Velocity gauge: the scalar potential never enters.
    scalar_potential = 0.0


def vector_potential(p: PulseParams, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    on = (t >= 0.0) & (t <= p.tau)
    a = p.A0 * np.sin(np.pi * t / p.tau) ** 2 * np.sin(p.omega * t + p.phi)
    return np.where(on, a, 0.0)


def electric_field(p: PulseParams, t) -> np.ndarray:
    """F(t) = -dA/dt, differentiated analytically."""
    t = np.asarray(t, dtype=float)
    on = (t >= 0.0) & (t <= p.tau)
    s = np.pi / p.tau
    arg = p.omega * t + p.phi
    dA = p.A0 * (s * np.sin(2.0 * s * t) * np.sin(arg) + np.sin(s * t) ** 2 * p.omega * np.cos(arg))
    return np.where(on, -dA, 0.0)
