import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from molcool.constants import HBAR
from molcool.morse import (
    K2,
    MOLECULES,
    WIDTH_RATIOS,
    frequency_readings,
    level_ladder,
    morse_frequency,
    morse_frequency_direct,
    nu_max,
    omega_p_from_width_ratio,
    potential,
    shifted_potential,
    vibrational_energy,
    vibrational_energy_normalized,
    width_ratio,
)
from molcool.params import MoleculeSpec, ParameterError


def spec_with_scale(scale, omega_e=1e13, mu=1e-26):
    """Molecule with 2 D_e / (hbar omega_e) = scale."""
    return MoleculeSpec(omega_e=omega_e, D_e=scale * HBAR * omega_e / 2, mu=mu, r_e=1e-10)


def brute_nu_max(spec, limit=10_000):
    # exact rational scan of E_nu / (hbar omega_e) = x - x^2 / (2 s), x = nu + 1/2
    s = Fraction(spec.level_count_parameter)
    e = lambda n: (n + Fraction(1, 2)) - (n + Fraction(1, 2)) ** 2 / (2 * s)
    n = 0
    while n < limit and e(n + 1) > e(n):
        n += 1
    return n


def test_potential_examples():
    assert potential(K2.r_e, K2) == 0.0
    a = K2.range_parameter
    assert potential(K2.r_e + 31 / a, K2) == pytest.approx(K2.D_e, rel=1e-12)
    assert shifted_potential(K2.r_e, K2) == -K2.D_e


@given(st.floats(0.3, 5.0).filter(lambda x: abs(x - 1) > 1e-6))
def test_potential_positive_off_minimum(ratio):
    assert potential(K2.r_e * ratio, K2) > 0


def test_normalized_energy_example():
    assert vibrational_energy_normalized(0, 10.0) == pytest.approx(0.49375, rel=1e-15)


def test_harmonic_limit():
    spec = spec_with_scale(2e6)
    for nu in (0, 1):
        harm = HBAR * spec.omega_e * (nu + 0.5)
        assert abs(vibrational_energy(nu, spec) / harm - 1) < 1e-6


def test_spacing_matches_finite_difference():
    spec = spec_with_scale(40.3)
    q = HBAR * spec.omega_e
    for nu in range(nu_max(spec)):
        diff = vibrational_energy(nu + 1, spec) - vibrational_energy(nu, spec)
        assert diff == pytest.approx(q * (1 - (nu + 1) * q / (2 * spec.D_e)), rel=1e-10)


def test_nu_max_examples():
    assert nu_max(spec_with_scale(20.0)) == 19
    assert nu_max(spec_with_scale(1.0)) == 0


def test_unbound_level_rejected():
    spec = spec_with_scale(20.0)
    with pytest.raises(ParameterError):
        vibrational_energy(20, spec)


@given(st.floats(1.0, 500.0))
def test_nu_max_brute_force(scale):
    spec = spec_with_scale(scale)
    assert nu_max(spec) == brute_nu_max(spec)


@pytest.mark.parametrize("name", sorted(MOLECULES))
def test_ladder_monotone_and_anharmonic(name):
    spec = MOLECULES[name]
    e = [lvl.energy for lvl in level_ladder(spec)]
    gaps = [b - a for a, b in zip(e, e[1:])]
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert e[-1] < spec.D_e
    assert nu_max(spec) == brute_nu_max(spec)


@pytest.mark.parametrize("name", sorted(MOLECULES))
def test_omega_p_two_paths(name):
    spec = MOLECULES[name]
    assert abs(morse_frequency(spec) / morse_frequency_direct(spec) - 1) < 1e-14


def test_omega_p_quadruples_with_range():
    spec = spec_with_scale(100.0)
    wide = MoleculeSpec(omega_e=2 * spec.omega_e, D_e=spec.D_e, mu=spec.mu)  # a doubles
    assert wide.range_parameter == pytest.approx(2 * spec.range_parameter, rel=1e-15)
    assert morse_frequency(wide) == pytest.approx(4 * morse_frequency(spec), rel=1e-14)


def test_k2_readings_bracket_quoted_value():
    # neither reading of the quoted vibrational frequency reproduces 2 pi 90 GHz
    r = frequency_readings(K2.omega_e, K2.D_e)
    quoted = 2 * math.pi * 90e9
    assert r["angular"] < quoted < r["hertz"]
    assert r["angular"] == pytest.approx(morse_frequency(K2), rel=1e-14)


def test_width_ratio_presets():
    assert WIDTH_RATIOS["HCl"] == 4.7e23
    assert WIDTH_RATIOS["NO"] == 2.5e23
    # spectroscopic constants land within 10% of the quoted ratios
    for name, quoted in WIDTH_RATIOS.items():
        assert width_ratio(MOLECULES[name]) == pytest.approx(quoted, rel=0.1)
    assert omega_p_from_width_ratio(width_ratio(K2)) == pytest.approx(morse_frequency(K2), rel=1e-14)
