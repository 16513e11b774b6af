"""Linearised fluctuation dynamics around the steady state.

State vector (quadratures of the fluctuations, each ``sqrt(2)`` times the
real/imaginary part of the complex amplitude)::

    u = (dq, dp, dX_f, dY_f, dx_m, dy_m, dzeta0)

mechanics, cavity, molecular coherence and molecular inversion.  The
fluctuations obey ``du/dt = -A u + xi`` with ``<xi(t) xi(t')^T> = D delta(t - t')``.

The generator ``-A`` is the matrix tabulated for this model (damping
``-gamma_m`` on its diagonal); :func:`generator_matrix` returns it exactly as
tabulated and :func:`build_drift` returns its negative.  All quantities are in
units of omega_m with ``alpha_s`` real (see :mod:`molcool.steadystate`).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from molcool.params import NormalizedParams
from molcool.steadystate import SteadyState

BASIS = ("dq", "dp", "dX_f", "dY_f", "dx_m", "dy_m", "dzeta0")
NOISE_CONVENTIONS = ("paper", "half")
LOW_EXCITATION_LIMIT = 0.01
SQRT2 = math.sqrt(2.0)


class PhaseConventionError(ValueError):
    pass


@dataclass(frozen=True)
class AppendixAQuantities:
    G_0s: float
    Gamma_0: float
    g_R: float
    g_I: float
    gamma_p_R: float
    gamma_p_I: float
    K_1: float
    K_2: float
    P_diff: float
    M_diff: float
    Q_diff: float
    coupling: float  # 2 G0 alpha_s, the linearised optomechanical rate


@dataclass(frozen=True)
class LinearSystem:
    a_matrix: np.ndarray
    d_matrix: np.ndarray
    basis: tuple
    aux: AppendixAQuantities
    reduced: bool = False
    asymmetry: float = 0.0
    noise_convention: str = "paper"
    validity_ratio: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.a_matrix.shape[0]


def _check_phase(s: SteadyState):
    if abs(s.alpha_s.imag) > 1e-10 * max(1.0, abs(s.alpha_s)):
        raise PhaseConventionError(
            f"alpha_s must be real (phase-rotated steady state), got {s.alpha_s!r}"
        )


def _real(value, what, rtol=1e-12):
    value = complex(value)
    if abs(value.imag) > rtol * max(1.0, abs(value)):
        raise ValueError(f"{what} should be real, imaginary part {value.imag:.3e}")
    return value.real


def noise_moments(np_: NormalizedParams, s: SteadyState):
    """Molecular noise moments ``(<G_z G_z>, <G_z0 G_z0>)`` at the steady state."""
    a, z = s.alpha_s, s.zeta_s
    zz = 2.0 * (1j * np_.omega_p * z * z + 1j * np_.g * a * z + np_.gamma_p * z * z)
    z0z0 = -1j * np_.g * (a * z.conjugate() - a.conjugate() * z) - 2.0 * np_.gamma_p * abs(z) ** 2
    return zz, z0z0


def appendix_a(np_: NormalizedParams, s: SteadyState) -> AppendixAQuantities:
    _check_phase(s)
    g, gp, wp = np_.g, np_.gamma_p, np_.omega_p
    a = s.alpha_s.real
    z = s.zeta_s
    zz, z0z0 = noise_moments(np_, s)
    zz_star = zz.conjugate()
    lever = 2.0 * wp * z + 2.0 * g * a
    return AppendixAQuantities(
        G_0s=2.0 * g * s.zeta0_s,
        Gamma_0=2.0 * gp * s.zeta0_s,
        g_R=SQRT2 * g * z.real,
        g_I=SQRT2 * g * z.imag,
        gamma_p_R=2.0 * SQRT2 * gp * z.real,
        gamma_p_I=2.0 * SQRT2 * gp * z.imag + SQRT2 * g * a,
        K_1=SQRT2 * (2.0 * gp * z.real - lever.imag),
        K_2=SQRT2 * (2.0 * gp * z.imag + lever.real),
        P_diff=_real(zz + zz_star, "P"),
        M_diff=_real(-1j * (zz - zz_star), "M"),
        Q_diff=_real(z0z0, "Q"),
        coupling=2.0 * np_.G0 * a,
    )


def generator_matrix(np_: NormalizedParams, s: SteadyState, aux=None) -> np.ndarray:
    """The 7x7 fluctuation generator (``du/dt = M u``) as tabulated."""
    q = aux or appendix_a(np_, s)
    gm, gf, g = np_.gamma_m, np_.gamma_f, np_.g
    wm = 1.0
    G = q.coupling
    df, dp = s.delta_f, s.delta_p_eff
    return np.array(
        [
            [-gm, wm, 0.0, 0.0, 0.0, 0.0, 0.0],
            [-wm, -gm, G, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, -gf, df, 0.0, g, 0.0],
            [G, 0.0, -df, -gf, -g, 0.0, 0.0],
            [0.0, 0.0, 0.0, -q.G_0s, q.Gamma_0, -dp, q.K_1],
            [0.0, 0.0, q.G_0s, 0.0, dp, q.Gamma_0, q.K_2],
            [0.0, 0.0, -q.g_I, q.g_R, -q.gamma_p_R, -q.gamma_p_I, 0.0],
        ]
    )


def build_drift(np_: NormalizedParams, s: SteadyState, aux=None) -> np.ndarray:
    """Drift matrix ``A`` of ``du/dt = -A u + xi``."""
    return -generator_matrix(np_, s, aux)


def _diffusion_raw(np_, s, q):
    tm = 4.0 * np_.gamma_m * np_.n_m
    tf = 4.0 * np_.gamma_f * np_.n_bar
    G = q.coupling
    P, M, Q = q.P_diff, q.M_diff, q.Q_diff
    return np.array(
        [
            [tm, 0.0, 0.0, G, 0.0, 0.0, 0.0],
            [0.0, tm, G, 0.0, 0.0, 0.0, 0.0],
            [0.0, G, tf, 0.0, 0.0, 0.0, 0.0],
            [G, 0.0, 0.0, tf, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, P, M, 0.0],
            [0.0, 0.0, 0.0, 0.0, M, -P, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, Q],
        ]
    )


def build_diffusion(np_: NormalizedParams, s: SteadyState, aux=None, noise_convention="paper"):
    """Diffusion matrix ``D`` and the pre-symmetrisation asymmetry ``||D - D^T||_inf``.

    ``noise_convention="half"`` halves every entry (symmetric-ordering
    sensitivity study); ``"paper"`` uses the correlators as they stand.
    """
    if noise_convention not in NOISE_CONVENTIONS:
        raise ValueError(f"noise_convention must be one of {NOISE_CONVENTIONS}")
    q = aux or appendix_a(np_, s)
    raw = _diffusion_raw(np_, s, q)
    asym = float(np.max(np.abs(raw - raw.T)))
    d = 0.5 * (raw + raw.T)
    if noise_convention == "half":
        d = 0.5 * d
    return d, asym


def low_excitation_ratio(np_: NormalizedParams, s: SteadyState) -> float:
    """``g^2 / (Delta_p^2 + gamma_p^2)``; the frozen-inversion reduction needs it small."""
    denom = s.delta_p_eff**2 + np_.gamma_p**2
    if np_.g == 0.0:
        return 0.0
    return math.inf if denom == 0 else np_.g**2 / denom


def build_linear_system(np_, s, low_excitation=False, noise_convention="paper") -> LinearSystem:
    q = appendix_a(np_, s)
    a = build_drift(np_, s, q)
    d, asym = build_diffusion(np_, s, q, noise_convention)
    sys = LinearSystem(
        a_matrix=a,
        d_matrix=d,
        basis=BASIS,
        aux=q,
        asymmetry=asym,
        noise_convention=noise_convention,
        validity_ratio=low_excitation_ratio(np_, s),
    )
    return reduce_low_excitation(sys) if low_excitation else sys


def reduce_low_excitation(sys: LinearSystem) -> LinearSystem:
    """Freeze the inversion fluctuation: drop its row and column from A and D."""
    if sys.reduced:
        return sys
    if sys.validity_ratio >= LOW_EXCITATION_LIMIT:
        warnings.warn(
            f"low-excitation reduction outside its validity: g^2/(Delta_p^2+gamma_p^2) = "
            f"{sys.validity_ratio:.3g} >= {LOW_EXCITATION_LIMIT}",
            RuntimeWarning,
            stacklevel=2,
        )
    return replace(
        sys,
        a_matrix=sys.a_matrix[:6, :6].copy(),
        d_matrix=sys.d_matrix[:6, :6].copy(),
        basis=sys.basis[:6],
        reduced=True,
    )


def optomechanical_block(sys: LinearSystem) -> LinearSystem:
    """Mechanics + cavity sub-system (first four quadratures)."""
    return replace(
        sys,
        a_matrix=sys.a_matrix[:4, :4].copy(),
        d_matrix=sys.d_matrix[:4, :4].copy(),
        basis=sys.basis[:4],
        reduced=True,
    )
