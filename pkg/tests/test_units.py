import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from solidhhg.errors import ConfigError
from solidhhg.units import (
    au_to_ev,
    au_to_fs,
    au_to_gvm,
    angstrom_to_au,
    ev_to_au,
    fs_to_au,
    gvm_to_au,
    parse_quantity,
    wavelength_to_omega,
)

# Hand-entered references (CODATA 2022 values)
HARTREE_EV = 27.211386245981
BOHR_ANGSTROM = 0.529177210544
AU_TIME_FS = 0.024188843265864
AU_FIELD_GVM = 514.220675112
ALPHA_INV = 137.035999177


def test_reference_constants():
    assert au_to_ev(1.0) == pytest.approx(HARTREE_EV, rel=1e-12)
    assert angstrom_to_au(BOHR_ANGSTROM) == pytest.approx(1.0, rel=1e-12)
    assert au_to_fs(1.0) == pytest.approx(AU_TIME_FS, rel=1e-12)
    assert au_to_gvm(1.0) == pytest.approx(AU_FIELD_GVM, rel=1e-9)


def test_field_4gvm_to_vector_potential_amplitude():
    # 4 GV/m at 3 um: F0 = 4/514.22 a.u., omega = 2 pi c / lambda with c = 137.036 a.u.
    F0 = parse_quantity("4.0 GV/m", "field")
    assert F0 == pytest.approx(4.0 / AU_FIELD_GVM, rel=1e-9)
    omega = wavelength_to_omega(parse_quantity("3 um", "length"))
    expected_omega = 2 * math.pi * ALPHA_INV / (3e4 / BOHR_ANGSTROM)
    assert omega == pytest.approx(expected_omega, rel=1e-10)
    assert F0 / omega == pytest.approx(0.5117, rel=1e-3)


@given(st.floats(1e-6, 1e6))
def test_energy_round_trip(x):
    assert au_to_ev(ev_to_au(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(1e-6, 1e6))
def test_time_round_trip(x):
    assert au_to_fs(fs_to_au(x)) == pytest.approx(x, rel=1e-12)


@given(st.floats(1e-6, 1e6))
def test_field_round_trip(x):
    assert au_to_gvm(gvm_to_au(x)) == pytest.approx(x, rel=1e-12)


@pytest.mark.parametrize(
    "text,dim,expected",
    [
        ("300 fs", "time", 300 / AU_TIME_FS),
        ("5.2 A", "length", 5.2 / BOHR_ANGSTROM),
        ("25 eV", "energy", 25 / HARTREE_EV),
        ("0.1 1/fs", "rate", 0.1 * AU_TIME_FS),
        ("1.5", "energy", 1.5),
        (2, "length", 2.0),
    ],
)
def test_parse_quantity(text, dim, expected):
    assert parse_quantity(text, dim) == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("bad", ["4 furlongs", "fast", True, [1, 2]])
def test_parse_quantity_errors_name_key(bad):
    with pytest.raises(ConfigError) as exc:
        parse_quantity(bad, "field", "pulse.F0")
    assert exc.value.key == "pulse.F0"


def test_wrong_dimension_rejected():
    with pytest.raises(ConfigError):
        parse_quantity("3 fs", "length", "pulse.wavelength")


def test_vectorized():
    x = np.array([1.0, 2.0])
    np.testing.assert_allclose(ev_to_au(x) * HARTREE_EV, x, rtol=1e-12)
