"""Hartree atomic units and conversion of unit-suffixed config values.

Everything inside the package works in atomic units (hbar = m_e = e = 1).
Human units are only accepted at the configuration boundary.
"""

from __future__ import annotations

import re

import scipy.constants as const

from .errors import ConfigError

HARTREE_EV = const.physical_constants["Hartree energy in eV"][0]
BOHR_M = const.physical_constants["Bohr radius"][0]
TIME_AU_S = const.physical_constants["atomic unit of time"][0]
FIELD_AU_VM = const.physical_constants["atomic unit of electric field"][0]
C_AU = 1.0 / const.fine_structure

BOHR_ANGSTROM = BOHR_M * 1e10
FS_AU = 1e-15 / TIME_AU_S  # atomic time units per femtosecond


def ev_to_au(e):
    return e / HARTREE_EV


def au_to_ev(e):
    return e * HARTREE_EV


def fs_to_au(t):
    return t * FS_AU


def au_to_fs(t):
    return t / FS_AU


def angstrom_to_au(x):
    return x / BOHR_ANGSTROM


def au_to_angstrom(x):
    return x * BOHR_ANGSTROM


def gvm_to_au(f):
    return f * 1e9 / FIELD_AU_VM


def au_to_gvm(f):
    return f * FIELD_AU_VM / 1e9


def wavelength_to_omega(wavelength_au):
    """Angular frequency 2*pi*c/lambda, both sides in atomic units."""
    return 2.0 * const.pi * C_AU / wavelength_au


# multiplicative factor from the given unit to atomic units, keyed by dimension
_UNITS = {
    "energy": {
        "ha": 1.0,
        "hartree": 1.0,
        "au": 1.0,
        "ev": 1.0 / HARTREE_EV,
        "mev": 1e-3 / HARTREE_EV,
    },
    "length": {
        "bohr": 1.0,
        "au": 1.0,
        "a": 1.0 / BOHR_ANGSTROM,
        "å": 1.0 / BOHR_ANGSTROM,
        "angstrom": 1.0 / BOHR_ANGSTROM,
        "nm": 10.0 / BOHR_ANGSTROM,
        "um": 1e4 / BOHR_ANGSTROM,
        "µm": 1e4 / BOHR_ANGSTROM,
        "μm": 1e4 / BOHR_ANGSTROM,
        "m": 1e10 / BOHR_ANGSTROM,
    },
    "time": {
        "au": 1.0,
        "fs": FS_AU,
        "ps": 1e3 * FS_AU,
        "as": 1e-3 * FS_AU,
    },
    "rate": {
        "au": 1.0,
        "1/fs": 1.0 / FS_AU,
        "fs^-1": 1.0 / FS_AU,
        "1/ps": 1e-3 / FS_AU,
    },
    "field": {
        "au": 1.0,
        "gv/m": 1e9 / FIELD_AU_VM,
        "v/m": 1.0 / FIELD_AU_VM,
        "mv/cm": 1e8 / FIELD_AU_VM,
        "v/a": 1e10 / FIELD_AU_VM,
        "v/å": 1e10 / FIELD_AU_VM,
    },
}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(value, dimension: str, key: str = "?") -> float:
    """Convert ``value`` to atomic units.

    Plain numbers are taken to be in atomic units already. Strings carry a
    unit suffix, e.g. ``"4.0 GV/m"``, ``"300 fs"``, ``"5.2 A"``.
    """
    table = _UNITS[dimension]
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a {dimension}, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(key, f"expected a {dimension} quantity, got {value!r}")
    m = _QUANTITY.match(value)
    if m is None:
        raise ConfigError(key, f"cannot parse quantity {value!r}")
    number, unit = float(m.group(1)), m.group(2).lower()
    if unit == "":
        return number
    if unit not in table:
        raise ConfigError(key, f"unit {m.group(2)!r} is not a valid {dimension} unit")
    return number * table[unit]
