import math

import numpy as np
import pytest
from scipy.integrate import fixed_quad
from scipy.optimize import minimize_scalar

from solidhhg.errors import ConfigError
from solidhhg.pulse import PulseParams, electric_field, vector_potential
from solidhhg.units import fs_to_au, gvm_to_au


@pytest.fixture(scope="module")
def pulse():
    return PulseParams.from_field(gvm_to_au(4.0))


def test_defaults(pulse):
    assert pulse.tau == pytest.approx(fs_to_au(300.0))
    assert pulse.period == pytest.approx(fs_to_au(10.006922855944561), rel=1e-9)
    assert pulse.scalar_potential == 0.0
    assert pulse.F0 == pytest.approx(gvm_to_au(4.0), rel=1e-14)


def test_endpoints_vanish(pulse):
    assert abs(vector_potential(pulse, 0.0)) == 0.0
    assert abs(vector_potential(pulse, pulse.tau)) < 1e-15 * pulse.A0


def test_midpoint(pulse):
    t = pulse.tau / 2
    assert vector_potential(pulse, t) == pytest.approx(pulse.A0 * math.sin(pulse.omega * t), rel=1e-12)


def test_zero_outside(pulse):
    t = np.array([-1.0, -1e-9, pulse.tau * (1 + 1e-12), 2 * pulse.tau])
    assert np.all(vector_potential(pulse, t) == 0.0)
    assert np.all(electric_field(pulse, t) == 0.0)


def _max_abs(f, lo, hi, n):
    t = np.linspace(lo, hi, n)
    i = int(np.argmax(np.abs(f(t))))
    h = t[1] - t[0]
    res = minimize_scalar(lambda s: -abs(f(s)), bounds=(t[i] - h, t[i] + h), method="bounded",
                          options={"xatol": 1e-10})
    return -res.fun


def test_max_dA_dt_oracle(pulse):
    # numerical derivative by central differences, maximized over a fine grid
    h = 1e-3
    dA = lambda t: (vector_potential(pulse, t + h) - vector_potential(pulse, t - h)) / (2 * h)
    peak = _max_abs(dA, 0.4 * pulse.tau, 0.6 * pulse.tau, 20001)
    assert peak == pytest.approx(pulse.A0 * pulse.omega, rel=0.01)


def test_peak_field_matches_F0(pulse):
    peak = _max_abs(lambda t: electric_field(pulse, t), 0.0, pulse.tau, 200001)
    assert peak == pytest.approx(gvm_to_au(4.0), rel=0.01)


def test_field_is_minus_derivative(pulse, rng):
    t = rng.uniform(0.01 * pulse.tau, 0.99 * pulse.tau, 200)
    h = 1e-2
    num = -(vector_potential(pulse, t + h) - vector_potential(pulse, t - h)) / (2 * h)
    np.testing.assert_allclose(electric_field(pulse, t), num, atol=1e-8 * pulse.F0)


def _integral_minus_F(pulse, t_points, order=30):
    """-int_0^t F dt' at sorted points, by Gauss-Legendre between consecutive points."""
    out, acc, prev = [], 0.0, 0.0
    for t in t_points:
        n_sub = max(1, int(math.ceil((t - prev) / (0.05 * pulse.period))))
        edges = np.linspace(prev, t, n_sub + 1)
        for a, b in zip(edges[:-1], edges[1:]):
            acc += fixed_quad(lambda s: -electric_field(pulse, s), a, b, n=order)[0]
        out.append(acc)
        prev = t
    return np.array(out)


def test_integral_of_field_recovers_end_value(pulse):
    val = _integral_minus_F(pulse, [pulse.tau])[0]
    assert abs(val) < 1e-10 * pulse.A0


@pytest.mark.parametrize("phi", [0.0, math.pi / 2])
def test_gauge_consistency(phi):
    p = PulseParams.from_field(gvm_to_au(1.0), phi=phi)
    t = np.sort(np.random.default_rng(7).uniform(0, p.tau, 1000))
    A = _integral_minus_F(p, t)
    # A(0) = A0 sin^2(0) sin(phi) = 0, so the integral is A(t) itself
    assert np.max(np.abs(A - vector_potential(p, t))) < 1e-9 * p.A0


def test_cep_shifts_carrier():
    p0 = PulseParams.from_field(1e-3)
    p1 = PulseParams.from_field(1e-3, phi=math.pi / 2)
    t = p0.tau / 2
    assert vector_potential(p1, t) == pytest.approx(p0.A0 * math.cos(p0.omega * t), rel=1e-12)


@pytest.mark.parametrize("kw,key", [({"tau": -1.0}, "pulse.duration"), ({"wavelength": 0.0}, "pulse.wavelength"),
                                    ({"A0": float("inf")}, "pulse.A0")])
def test_invalid(kw, key):
    args = {"A0": 0.1, **kw}
    with pytest.raises(ConfigError) as exc:
        PulseParams(**args)
    assert exc.value.key == key
