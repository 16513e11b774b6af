"""Morse oscillator: potential curve, bound vibrational ladder, omega_p."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from molcool.constants import AMU, C_LIGHT, EV, HBAR
from molcool.params import MoleculeSpec, ParameterError


@dataclass(frozen=True)
class MorseLevel:
    nu: int
    energy: float  # J, measured from the bottom of the well


def potential(r, spec: MoleculeSpec):
    """``V(r) = D_e (1 - exp(-a (r - r_e)))**2``; zero at the minimum, D_e at dissociation."""
    if spec.r_e is None:
        raise ParameterError("potential() needs the equilibrium bond length r_e")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("inter-nuclear distance must be positive")
    x = spec.range_parameter * (r - spec.r_e)
    out = spec.D_e * (-np.expm1(-x)) ** 2
    return out if out.ndim else float(out)


def shifted_potential(r, spec: MoleculeSpec):
    """Potential referenced to the dissociation limit: ``-D_e`` at ``r_e``, 0 at infinity."""
    return potential(r, spec) - spec.D_e


def nu_max(spec: MoleculeSpec) -> int:
    """Index of the highest bound level.

    The level spacing ``E_{nu} - E_{nu-1}`` stays positive while
    ``nu < 2 D_e / (hbar omega_e)``, so the ladder ends at
    ``ceil(2 D_e / hbar omega_e) - 1`` (roughly ``2 D_e / omega_e``).
    """
    return _nu_max_from_scale(spec.level_count_parameter)


def _nu_max_from_scale(scale):
    if scale < 1.0:
        raise ParameterError("no bound level: 2 D_e / (hbar omega_e) < 1")
    return int(math.ceil(scale)) - 1


def vibrational_energy_normalized(nu, well_depth):
    """``E_nu`` in units of ``hbar omega_e`` for a well depth given in the same units."""
    if well_depth <= 0:
        raise ParameterError("well depth must be positive")
    top = _nu_max_from_scale(2.0 * well_depth)
    if nu < 0 or nu > top:
        raise ParameterError(f"level nu={nu} is not bound (nu_max={top})")
    x = nu + 0.5
    return x - x * x / (4.0 * well_depth)


def vibrational_energy(nu, spec: MoleculeSpec) -> float:
    """Bound-state energy ``hbar w (nu + 1/2) - (hbar w)**2 (nu + 1/2)**2 / (4 D_e)`` in J."""
    top = nu_max(spec)
    if nu < 0 or nu > top:
        raise ParameterError(f"level nu={nu} is not bound (nu_max={top})")
    quantum = HBAR * spec.omega_e
    x = nu + 0.5
    return quantum * x - quantum * quantum * x * x / (4.0 * spec.D_e)


def level_ladder(spec: MoleculeSpec):
    return [MorseLevel(nu, vibrational_energy(nu, spec)) for nu in range(nu_max(spec) + 1)]


def morse_frequency(spec: MoleculeSpec) -> float:
    """Effective molecular frequency ``omega_p = hbar a**2 / (2 mu)`` (rad/s)."""
    a = spec.range_parameter
    return HBAR * a * a / (2.0 * spec.mu)


def morse_frequency_direct(spec: MoleculeSpec) -> float:
    """Same quantity after eliminating ``a``: ``hbar omega_e**2 / (4 D_e)``."""
    return HBAR * spec.omega_e**2 / (4.0 * spec.D_e)


def omega_p_from_width_ratio(ratio):
    """``omega_p`` from the tabulated ``omega_e / sqrt(2 D_e)`` (SI), i.e. ``hbar ratio**2 / 2``."""
    return 0.5 * HBAR * ratio * ratio


def width_ratio(spec: MoleculeSpec) -> float:
    return spec.omega_e / math.sqrt(2.0 * spec.D_e)


def frequency_readings(omega_e_quoted, D_e):
    """omega_p for a quoted vibrational frequency read as angular and as ordinary (Hz).

    Returns ``{"angular": ..., "hertz": ...}`` with values in rad/s.
    """
    return {
        "angular": HBAR * omega_e_quoted**2 / (4.0 * D_e),
        "hertz": HBAR * (2.0 * math.pi * omega_e_quoted) ** 2 / (4.0 * D_e),
    }


def _from_spectroscopy(name, we_cm, De_eV, mu_amu, re_angstrom):
    return MoleculeSpec(
        omega_e=2.0 * math.pi * C_LIGHT * 100.0 * we_cm,
        D_e=De_eV * EV,
        mu=mu_amu * AMU,
        r_e=re_angstrom * 1e-10,
        name=name,
    )


# Ground-state spectroscopic constants (omega_e in cm^-1, D_e in eV, mu in u,
# r_e in Angstrom).  They reproduce the tabulated omega_e/sqrt(2 D_e) of the
# hydrogen halides and NO to a few percent.
SPECTROSCOPIC = {
    "HCl": _from_spectroscopy("HCl", 2990.95, 4.618, 0.979593, 1.27455),
    "HI": _from_spectroscopy("HI", 2309.01, 3.197, 0.999884, 1.60916),
    "NO": _from_spectroscopy("NO", 1904.20, 6.614, 7.466410, 1.15077),
}

# K2 as quoted for the cooling figures: omega_e = 17 THz (taken as angular),
# D_e = 8.1e-20 J; mu = half the 39K mass, r_e = 3.905 Angstrom.
K2 = MoleculeSpec(omega_e=17e12, D_e=8.1e-20, mu=0.5 * 38.96370668 * AMU, r_e=3.905e-10, name="K2")

MOLECULES = {"K2": K2, **SPECTROSCOPIC}

# Quoted omega_e / sqrt(2 D_e) in SI units (s^-1 J^-1/2).
WIDTH_RATIOS = {"HCl": 4.7e23, "HI": 4.41e23, "NO": 2.5e23}
