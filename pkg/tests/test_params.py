import math

import pytest
from hypothesis import given, strategies as st

from molcool.constants import HBAR, K_B
from molcool.params import (
    MoleculeSpec,
    ParameterError,
    PhysicalParams,
    denormalize,
    dipole_coupling,
    drive_strength,
    normalize,
    single_photon_coupling,
    thermal_occupancy,
)

TWO_PI = 2 * math.pi
WM = TWO_PI * 10e6
WF = TWO_PI * 10e9


def base(**kw):
    args = dict(
        omega_m=WM, mass_m=10e-12, q_factor=5e5, d=100e-9, omega_f=WF, gamma_f=0.1 * WM,
        drive_power=5e-3, temperature=0.2, g_coupling=TWO_PI * 10e3, gamma_p=0.8 * WM,
        omega_p=TWO_PI * 90e9, omega_0=WF - WM,
    )
    args.update(kw)
    return PhysicalParams(**args)


def test_g0_identity_case():
    # choose d so that sqrt(hbar / m w_m) = 2 d: bracket equals one
    m, wm = 1e-15, 1e3
    d = 0.5 * math.sqrt(HBAR / (m * wm))
    p = base(mass_m=m, omega_m=wm, d=d, omega_f=123.0, gamma_f=1.0, omega_0=100.0)
    assert single_photon_coupling(p) == pytest.approx(123.0, rel=1e-14)


def test_g0_caption_value():
    # independent evaluation: omega_f / (2d) * sqrt(hbar / (m omega_m))
    expected = WF / (2 * 100e-9) * math.sqrt(1.054571817e-34 / (10e-12 * WM))
    g0 = single_photon_coupling(base())
    assert g0 == pytest.approx(expected, rel=1e-14)
    assert g0 == pytest.approx(1.3e2, rel=0.05)


def test_g0_halves_when_gap_doubles():
    assert single_photon_coupling(base(d=200e-9)) * 2 == pytest.approx(single_photon_coupling(base()), rel=1e-15)


def test_drive_strength_values():
    assert drive_strength(base(drive_power=0.0)) == 0.0
    eps = drive_strength(base())
    assert eps == pytest.approx(math.sqrt(2 * 0.1 * WM * 5e-3 / (HBAR * WF)), rel=1e-14)
    assert eps == pytest.approx(9.7e13, rel=0.02)
    assert drive_strength(base(drive_power=20e-3)) == pytest.approx(2 * eps, rel=1e-15)


def test_thermal_occupancy_points():
    assert thermal_occupancy(WM, 0.0) == 0.0
    T = HBAR * WM / (K_B * math.log(2.0))
    assert thermal_occupancy(WM, T) == pytest.approx(1.0, rel=1e-13)
    assert thermal_occupancy(WM, 0.2) == pytest.approx(416.2, rel=1e-3)
    with pytest.raises(ParameterError):
        thermal_occupancy(-1.0, 1.0)


@given(st.floats(1e-3, 10), st.floats(1.001, 2))
def test_thermal_occupancy_monotone(T, factor):
    assert thermal_occupancy(WM, T * factor) > thermal_occupancy(WM, T)
    assert thermal_occupancy(WM * factor, T) < thermal_occupancy(WM, T)


def test_normalize_examples():
    n = normalize(base(omega_0=WF))
    assert n.delta_0f == 0.0
    assert n.gamma_m == pytest.approx(1e-6, rel=1e-14)
    assert normalize(base(gamma_f=0.4 * WM)).gamma_f == pytest.approx(0.4, rel=1e-15)
    assert n.delta_p == pytest.approx(n.omega_p + n.omega_0, rel=1e-15)


def test_gamma_m_override():
    assert normalize(base(gamma_m=0.05 * WM)).gamma_m == pytest.approx(0.05)


def test_omega_p_required_when_coupled():
    with pytest.raises(ParameterError):
        normalize(base(omega_p=None))
    assert normalize(base(omega_p=None, g_coupling=0.0)).omega_p == 0.0


@pytest.mark.parametrize("field,value", [("omega_m", 0.0), ("mass_m", -1.0), ("gamma_f", 0.0),
                                         ("drive_power", -1e-3), ("temperature", -1.0), ("zeta0_s", 0.0)])
def test_invalid_inputs_rejected(field, value):
    with pytest.raises(ParameterError):
        base(**{field: value})


def test_effective_detuning_parameterisation():
    p = base(omega_0=None, delta_f=WM, delta_p=-WM)
    n = normalize(p)
    assert n.delta_f_target == pytest.approx(1.0)
    assert n.delta_p_eff == pytest.approx(-1.0, rel=1e-12)
    with pytest.raises(ParameterError):
        base(omega_0=None, delta_f=WM)


@given(
    st.floats(1e6, 1e8), st.floats(1e-13, 1e-9), st.floats(1e3, 1e7), st.floats(1e-8, 1e-6),
    st.floats(0.01, 1), st.floats(0, 1e-2), st.floats(0, 2), st.floats(-1e5, 1e5), st.floats(0, 1),
)
def test_normalize_round_trip(wm, m, q, d, gf, power, T, g, gp):
    p = base(omega_m=wm, mass_m=m, q_factor=q, d=d, gamma_f=gf * wm, drive_power=power, temperature=T,
             g_coupling=g, gamma_p=gp * wm, omega_0=WF - wm)
    back = denormalize(normalize(p))
    for name in ("omega_m", "mass_m", "q_factor", "d", "omega_f", "gamma_f", "drive_power",
                 "temperature", "g_coupling", "gamma_p", "omega_0", "omega_p"):
        a, b = getattr(p, name), getattr(back, name)
        assert b == pytest.approx(a, rel=1e-12, abs=1e-300), name


def test_normalize_pure():
    assert normalize(base()) == normalize(base())


def test_dipole_coupling_formula():
    p12, c0, L, d = 1e-30, 1e-12, 1e-9, 100e-9
    expected = p12 * math.sqrt(HBAR / (2 * WF * L)) / (HBAR * c0 * d)
    assert dipole_coupling(p12, c0, L, WF, d) == pytest.approx(expected, rel=1e-15)


def test_molecule_spec_validation():
    with pytest.raises(ParameterError):
        MoleculeSpec(omega_e=1e14, D_e=1e-25, mu=1e-26)
