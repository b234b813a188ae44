import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bogoscope import bogoliubov as bog
from bogoscope.errors import DomainError
from bogoscope.model import V1, V2, LatticeSpec, PotentialSpec, nonzero_modes


@given(st.floats(1e-3, 20.0), st.floats(0.0, 50.0))
def test_dispersion_is_symplectic_eigenvalue(p, v):
    # the pair (p, -p) block [[A, B], [-B, -A]] has eigenvalues +-sqrt(A^2 - B^2)
    getcontext().prec = 50
    A, B = Decimal(p) * Decimal(p) + Decimal(v), Decimal(v)
    expected = float((A * A - B * B).sqrt())
    assert bog.dispersion_from_norm2(p * p, v) == pytest.approx(expected, rel=4e-16)


def test_symplectic_eigenvalue_numpy_moderate_momentum():
    A, B = 2.0 + 0.3, 0.3
    ev = np.linalg.eigvals(np.array([[A, B], [-B, -A]]))
    assert bog.dispersion_from_norm2(2.0, 0.3) == pytest.approx(max(ev.real), rel=1e-13)


@given(st.floats(1e-3, 20.0), st.floats(0.0, 50.0))
def test_coefficient_identities(p, v):
    co = bog.coefficients_from_norm2(p * p, v)
    root = math.sqrt(p * p + 2 * v)
    assert co.c ** 2 - co.s ** 2 == pytest.approx(1.0, abs=1e-12 * co.c ** 2)
    assert (co.c - co.s) ** 2 * root == pytest.approx(p, rel=1e-12, abs=1e-13)
    assert co.s * (co.c - co.s) * (p * p + 2 * v + p * root) == pytest.approx(v, rel=1e-12, abs=1e-13)
    assert math.tanh(co.beta) == pytest.approx(co.alpha, rel=1e-14)


def test_coefficients_undefined_at_zero():
    with pytest.raises(DomainError):
        bog.bogoliubov_coefficients(V1, [0.0])


def test_zero_potential_gives_free_dispersion(lat1):
    t = bog.dispersion_table(lat1, PotentialSpec.zero())
    for k, e in t.items():
        assert e == pytest.approx(lat1.norm2(k), rel=1e-15)
    assert bog.bogoliubov_energy(lat1, PotentialSpec.zero()) == 0.0


def _decimal_ebog(lat, v):
    getcontext().prec = 50
    tot = Decimal(0)
    for n in nonzero_modes(lat):
        p2 = Decimal(lat.norm2(n))
        w = Decimal(v.at_norm2(lat.norm2(n)))
        tot += -(p2 + w - (p2 * (p2 + 2 * w)).sqrt()) / 2
    return float(tot)


@pytest.mark.parametrize("lat, v", [
    (LatticeSpec.from_spacing(1, 0.15, 3.0), V1),
    (LatticeSpec.from_spacing(1, 0.15, 3.0), V2),
    (LatticeSpec(2, 10.0, 3.0), V1),
    (LatticeSpec(3, 8.0, 2.5), V2),
])
def test_ebog_matches_high_precision_sum(lat, v):
    assert bog.bogoliubov_energy(lat, v) == pytest.approx(_decimal_ebog(lat, v), rel=1e-12)


def test_ebog_forms_agree(lat1):
    direct, alt, bound = bog.bogoliubov_energy_forms(lat1, V2)
    assert abs(direct - alt) <= 1e-10 * abs(alt)
    assert bound > 0


def test_empty_lattice_gives_zero():
    assert bog.bogoliubov_energy(LatticeSpec(1, 1.0, 0.5), V1) == 0.0


@pytest.mark.parametrize("d, v", [(1, V1), (1, V2), (3, V1)])
def test_density_integral_matches_trapezoid(d, v):
    r = np.linspace(1e-12, 80, 800_001)
    w = v.a * np.exp(-r ** 2 / v.b)
    f = r ** 2 + w - r * np.sqrt(r ** 2 + 2 * w)
    area = {1: 2.0, 3: 4 * math.pi}[d]
    expected = 0.5 * v.a - area * np.trapezoid(r ** (d - 1) * f, r) / (2 * (2 * math.pi) ** d)
    assert bog.energy_density_integral(v, d, 1.0) == pytest.approx(expected, abs=1e-8)


def test_density_integral_zero_potential():
    assert bog.energy_density_integral(PotentialSpec.zero(), 2, 1.0) == 0.0


def test_density_integral_tabulated_close_to_gaussian():
    q = np.linspace(0, 12, 241)
    tab = PotentialSpec.tabulated(zip(q, 0.1 * np.exp(-q ** 2 / 5)))
    assert bog.energy_density_integral(tab, 1, 1.0) == pytest.approx(
        bog.energy_density_integral(V1, 1, 1.0), rel=1e-5)


def test_ground_state_prediction(lat1):
    assert bog.ground_state_prediction(10, lat1, V1) == pytest.approx(
        0.45 + bog.bogoliubov_energy(lat1, V1), rel=1e-15)
    with pytest.raises(DomainError):
        bog.ground_state_prediction(1, lat1, V1)


def test_rho_lambda_scales_potential(lat1):
    a = bog.dispersion_table(lat1, V1, rho_lambda=3.0)
    b = bog.dispersion_table(lat1, V1.scaled(3.0))
    for k, e in a.items():
        assert e == pytest.approx(b[k], rel=1e-15)
