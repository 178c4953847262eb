"""Solid-state high-harmonic generation in a 1D periodic lattice.

Plane-wave band structures, k-resolved density-matrix dynamics in velocity
gauge, and spectral analysis of the emitted current.
"""

__version__ = "0.1.0"

from .bands import BandStructure, KGrid, momentum_matrices, solve_bands  # noqa: E402
from .config import RunConfig, load_config  # noqa: E402
from .dynamics import RelaxationRates, TimeGrid, propagate  # noqa: E402
from .errors import ConfigError, ConvergenceWarning, NumericalError, NumericsWarning, SolidHHGError, UsageError  # noqa: E402
from .interference import (  # noqa: E402
    KSubsetSpec,
    Simulation,
    SubsetMode,
    TrajectoryCache,
    amplitude_scan,
    cutoff_buildup_scan,
    run_subset_experiment,
)
from .potential import PotentialKind, PotentialSpec, evaluate_potential, fourier_coefficients  # noqa: E402
from .pulse import PulseParams, electric_field, vector_potential  # noqa: E402
from .spectrum import cutoff_estimate, harmonic_peaks, net_current, power_spectrum  # noqa: E402

__all__ = [
    "BandStructure", "ConfigError", "ConvergenceWarning", "KGrid", "KSubsetSpec", "NumericalError",
    "NumericsWarning", "PotentialKind", "PotentialSpec", "PulseParams", "RelaxationRates", "RunConfig",
    "Simulation", "SolidHHGError", "SubsetMode", "TimeGrid", "TrajectoryCache", "UsageError",
    "amplitude_scan", "cutoff_buildup_scan", "cutoff_estimate", "electric_field", "evaluate_potential",
    "fourier_coefficients", "harmonic_peaks", "load_config", "momentum_matrices", "net_current",
    "power_spectrum", "propagate", "run_subset_experiment", "solve_bands", "vector_potential",
]
