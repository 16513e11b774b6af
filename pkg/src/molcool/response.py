"""Frequency response of the mechanical mode.

Closed form (units of omega_m, ``G = 2 G0 alpha_s``)::

    chi(w) = w_m / [ (gamma_m - i w)^2 + w_m^2 - G^2 w_m N(w) / Den(w) ]

    N   = (Omega_T + i Gamma_T) (Omega_Y' + i Gamma_Y')
    Den = (Omega_X + i Gamma_X)(Omega_Y + i Gamma_Y) - (Omega_X' + i Gamma_X')(Omega_Y' + i Gamma_Y')

Reading the bracket as an oscillator ``w_eff^2 - w^2 - i w gamma_eff`` gives

    w_eff^2   = gamma_m^2 + w_m^2 - G^2 w_m Lambda  / |Den|^2
    gamma_eff = 2 gamma_m        + G^2 w_m Lambda' / (w |Den|^2)

with ``Lambda = Re(N conj(Den))`` and ``Lambda' = Im(N conj(Den))``.  The
coefficient table uses ``Delta = Delta_f`` (effective cavity detuning) and
``Omega_p = Delta_p`` (effective molecular detuning).

:func:`transfer_function_oracle` computes the same response by a dense solve
of ``(-i w I + A) u = f`` and does not rely on the coefficient table.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from molcool.linear import LinearSystem, appendix_a, build_linear_system
from molcool.params import NormalizedParams
from molcool.steadystate import SteadyState

POLE_GUARD = 1e-12


class NegativeRadicand(ArithmeticError):
    """The effective-frequency radicand is negative at this frequency."""


class SingularResponse(ArithmeticError):
    pass


@dataclass(frozen=True)
class ResponseCoefficients:
    omega: float
    Omega_T: float
    Gamma_T: float
    Omega_X: float
    Gamma_X: float
    Omega_Y: float
    Gamma_Y: float
    Omega_Xp: float
    Gamma_Xp: float
    Omega_Yp: float
    Gamma_Yp: float
    Lambda: float
    Lambda_p: float
    den_re: float
    den_im: float

    @property
    def numerator(self):
        return complex(self.Omega_T, self.Gamma_T) * complex(self.Omega_Yp, self.Gamma_Yp)

    @property
    def denominator(self):
        return complex(self.den_re, self.den_im)


@dataclass(frozen=True)
class SpectrumPoint:
    omega: float
    chi: complex
    omega_eff: float
    gamma_eff: float
    chi_oracle: complex
    closed_form_gap: float
    omega_eff_oracle: float = math.nan
    gamma_eff_oracle: float = math.nan

    def row(self):
        return {
            "omega": self.omega,
            "chi_re": self.chi.real,
            "chi_im": self.chi.imag,
            "omega_eff": self.omega_eff,
            "gamma_eff": self.gamma_eff,
            "chi_oracle_re": self.chi_oracle.real,
            "chi_oracle_im": self.chi_oracle.imag,
            "gap": self.closed_form_gap,
        }


def appendix_b_coefficients(np_: NormalizedParams, s: SteadyState, omega, aux=None):
    if omega == 0:
        raise ValueError("response coefficients are singular at omega = 0")
    q = aux or appendix_a(np_, s)
    w = float(omega)
    g, gf = np_.g, np_.gamma_f
    delta, om_p = s.delta_f, s.delta_p_eff
    G0s, Gam0 = q.G_0s, q.Gamma_0
    K1, K2 = q.K_1, q.K_2
    gR, gI, pR, pI = q.g_R, q.g_I, q.gamma_p_R, q.gamma_p_I

    # recurring ratios
    k1pr = K1 * pR / w - w
    k2pi = K2 * pI / w - w
    k2pr = K2 * pR / w
    k1pi = K1 * pI / w
    k1gi = K1 * gI / w
    k2gi = K2 * gI / w
    k1gr = K1 * gR / w
    k2gr = K2 * gR / w

    Om_T = om_p**2 + Gam0**2 - k2pi * k1pr + k2pr * k1pi
    Ga_T = k1pi * om_p - k2pr * om_p - Gam0 * k1pr - Gam0 * k2pi

    Om_X = gf * Om_T + w * Ga_T - g * G0s * Gam0 + g * k2pr * k1gi + g * k2gi * k1pr
    Ga_X = gf * Ga_T - w * Om_T + g * om_p * k1gi - g * G0s * k1pr + g * Gam0 * k2gi
    Om_Y = gf * Om_T + w * Ga_T - g * G0s * Gam0 + g * k1pi * k2gr + g * k1gr * k2pi
    Ga_Y = gf * Ga_T - w * Om_T + g * om_p * k2gr - g * G0s * k2pi + g * Gam0 * k1gr

    Om_Xp = -delta * Om_T + g * om_p * G0s + g * k1pi * k2gi - g * k1gi * k2pi
    Ga_Xp = -delta * Ga_T - g * om_p * k2gi + g * G0s * k1pi - g * Gam0 * k1gi
    Om_Yp = delta * Om_T - g * om_p * G0s + g * k2gr * k1pr - g * k1gr * k2pr
    Ga_Yp = delta * Ga_T + g * om_p * k1gr + g * G0s * k2pr - g * Gam0 * k2gr

    d_re = Om_X * Om_Y - Ga_X * Ga_Y - Om_Xp * Om_Yp + Ga_Xp * Ga_Yp
    d_im = Om_X * Ga_Y + Om_Y * Ga_X - Om_Xp * Ga_Yp - Om_Yp * Ga_Xp
    n_re = Om_T * Om_Yp - Ga_T * Ga_Yp
    n_im = Om_T * Ga_Yp + Ga_T * Om_Yp
    lam = n_re * d_re + n_im * d_im
    lam_p = n_im * d_re - n_re * d_im

    return ResponseCoefficients(
        omega=w,
        Omega_T=Om_T,
        Gamma_T=Ga_T,
        Omega_X=Om_X,
        Gamma_X=Ga_X,
        Omega_Y=Om_Y,
        Gamma_Y=Ga_Y,
        Omega_Xp=Om_Xp,
        Gamma_Xp=Ga_Xp,
        Omega_Yp=Om_Yp,
        Gamma_Yp=Ga_Yp,
        Lambda=lam,
        Lambda_p=lam_p,
        den_re=d_re,
        den_im=d_im,
    )


def _coupling(np_, s):
    return 2.0 * np_.G0 * s.alpha_s.real


def susceptibility(np_: NormalizedParams, s: SteadyState, omega, coeffs=None) -> complex:
    c = coeffs or appendix_b_coefficients(np_, s, omega)
    G = _coupling(np_, s)
    w = float(omega)
    bare = (np_.gamma_m - 1j * w) ** 2 + 1.0
    den = c.denominator
    if G == 0.0:
        inv = bare
    else:
        if abs(den) < POLE_GUARD:
            warnings.warn(f"susceptibility denominator near zero at omega={w}", RuntimeWarning, stacklevel=2)
        inv = bare - G * G * c.numerator / den
    if abs(inv) < POLE_GUARD:
        warnings.warn(f"susceptibility pole at omega={w}", RuntimeWarning, stacklevel=2)
    return 1.0 / inv


def _denominator_sq(c):
    return c.den_re**2 + c.den_im**2


def effective_frequency(np_: NormalizedParams, s: SteadyState, omega, coeffs=None) -> float:
    c = coeffs or appendix_b_coefficients(np_, s, omega)
    G = _coupling(np_, s)
    radicand = np_.gamma_m**2 + 1.0
    if G != 0.0:
        radicand -= G * G * c.Lambda / _denominator_sq(c)
    if radicand < 0:
        raise NegativeRadicand(f"effective-frequency radicand {radicand:.3e} < 0 at omega={omega}")
    return math.sqrt(radicand)


def effective_damping(np_: NormalizedParams, s: SteadyState, omega, coeffs=None) -> float:
    c = coeffs or appendix_b_coefficients(np_, s, omega)
    G = _coupling(np_, s)
    out = 2.0 * np_.gamma_m
    if G != 0.0:
        out += G * G * c.Lambda_p / (float(omega) * _denominator_sq(c))
    return out


def transfer_function_oracle(sys: LinearSystem, omega, drive_row=1, response_row=0) -> complex:
    """``w_m [(-i w I + A)^-1]_{response, drive}`` by dense complex solve."""
    a = sys.a_matrix
    n = a.shape[0]
    lhs = -1j * float(omega) * np.eye(n) + a
    rhs = np.zeros(n, dtype=complex)
    rhs[drive_row] = 1.0
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularResponse(f"(-i w + A) singular at omega={omega}") from exc
    if not np.all(np.isfinite(sol)):
        raise SingularResponse(f"(-i w + A) singular at omega={omega}")
    return complex(sol[response_row])


def oscillator_parameters(chi, omega):
    """``(omega_eff, gamma_eff)`` read off ``1/chi = w_eff^2 - w^2 - i w gamma_eff`` (units of w_m)."""
    inv = 1.0 / chi
    radicand = inv.real + omega * omega
    w_eff = math.sqrt(radicand) if radicand >= 0 else math.nan
    return w_eff, -inv.imag / omega


def frequency_grid(n=2000, lo=0.2, hi=2.0, spacing="log"):
    if spacing == "log":
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def spectrum(np_: NormalizedParams, s: SteadyState, omegas=None, sys=None):
    """Closed-form and oracle response on a frequency grid (default: 2000 log points on [0.2, 2])."""
    if omegas is None:
        omegas = frequency_grid()
    q = appendix_a(np_, s)
    sys = sys or build_linear_system(np_, s)
    points = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for w in np.atleast_1d(omegas):
            w = float(w)
            c = appendix_b_coefficients(np_, s, w, aux=q)
            chi = susceptibility(np_, s, w, coeffs=c)
            try:
                w_eff = effective_frequency(np_, s, w, coeffs=c)
            except NegativeRadicand:
                w_eff = math.nan
            g_eff = effective_damping(np_, s, w, coeffs=c)
            try:
                oracle = transfer_function_oracle(sys, w)
            except SingularResponse:
                oracle = complex(math.nan, math.nan)
            w_o, g_o = oscillator_parameters(oracle, w)
            gap = abs(chi - oracle) / (1.0 + abs(oracle))
            points.append(SpectrumPoint(w, chi, w_eff, g_eff, oracle, gap, w_o, g_o))
    return points
