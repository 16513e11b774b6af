"""Semiclassical steady state of the driven cavity-molecule-resonator system.

In units of omega_m the noiseless mean-field equations have the fixed point

    alpha = (eps0 - i g zeta) / (i Delta_f + gamma_f)
    zeta  = -i g alpha / (i Delta_p / (2 zeta0) + gamma_p)
    beta  = i G0 |alpha|^2 / (i omega_m + gamma_m)

with ``Delta_f = Delta_0f - G0 (beta + beta*)`` and
``Delta_p = delta_p + 2 omega_p zeta0``.  ``zeta`` is linear in ``alpha``,
and ``beta + beta*`` depends only on ``|alpha|^2``, so the whole problem
collapses to a real cubic for the intracavity photon number ``n = |alpha|^2``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from molcool.params import NormalizedParams

log = logging.getLogger(__name__)


class SteadyStateError(ArithmeticError):
    pass


class NonConvergence(SteadyStateError):
    """The fixed-point solve failed to reach tolerance (possibly bistable)."""


class MolecularResonance(SteadyStateError, ZeroDivisionError):
    """``i Delta_p / (2 zeta0) + gamma_p`` vanishes exactly."""


@dataclass(frozen=True)
class SteadyState:
    alpha_s: complex
    beta_s: complex
    zeta_s: complex
    zeta0_s: float
    delta_f: float
    delta_p_eff: float
    residual: float
    delta_0f: float
    theta: float = 0.0  # cavity phase removed so that alpha_s is real and positive
    zeta0_rate: float = 0.0  # d(zeta0)/dt at the fixed point (diagnostic)
    n_branches: int = 1  # positive roots of the photon-number cubic
    method: str = "closed-form"

    def as_dict(self):
        return {
            "alpha_s_re": self.alpha_s.real,
            "alpha_s_im": self.alpha_s.imag,
            "beta_s_re": self.beta_s.real,
            "beta_s_im": self.beta_s.imag,
            "zeta_s_re": self.zeta_s.real,
            "zeta_s_im": self.zeta_s.imag,
            "zeta0_s": self.zeta0_s,
            "delta_f": self.delta_f,
            "delta_0f": self.delta_0f,
            "delta_p_eff": self.delta_p_eff,
            "theta": self.theta,
            "residual": self.residual,
            "zeta0_rate": self.zeta0_rate,
            "n_branches": self.n_branches,
            "method": self.method,
        }


def molecular_denominator(np_: NormalizedParams) -> complex:
    return 1j * np_.delta_p_eff / (2.0 * np_.zeta0_s) + np_.gamma_p


def _molecular_load(np_):
    """``g^2 / (i Delta_p / 2 zeta0 + gamma_p)``: the molecule's pull on the cavity."""
    if np_.g == 0.0:
        return 0.0j
    den = molecular_denominator(np_)
    if den == 0:
        raise MolecularResonance("i Delta_p/(2 zeta0) + gamma_p = 0: molecular coherence diverges")
    return np_.g * np_.g / den


def _zeta_of_alpha(np_, alpha):
    if np_.g == 0.0:
        return 0.0j
    return -1j * np_.g * alpha / molecular_denominator(np_)


def _beta_of_n(np_, n):
    return 1j * np_.G0 * n / (1j + np_.gamma_m)


def _shift_per_photon(np_):
    """``G0 (beta + beta*) / |alpha|^2``."""
    return 2.0 * np_.G0 * np_.G0 / (1.0 + np_.gamma_m**2)


def steady_residual(s: SteadyState, np_: NormalizedParams) -> float:
    """Max over the three fixed-point equations of ``|lhs - rhs| / (1 + |rhs|)``.

    The detuning is recomputed from ``beta_s`` and the drive carries the
    phase ``exp(-i theta)`` removed from the cavity amplitude.
    """
    delta_f = s.delta_0f - np_.G0 * 2.0 * s.beta_s.real
    drive = np_.epsilon0 * cmath.exp(-1j * s.theta)
    rhs_alpha = (drive - 1j * np_.g * s.zeta_s) / (1j * delta_f + np_.gamma_f)
    rhs_zeta = _zeta_of_alpha(np_, s.alpha_s)
    rhs_beta = _beta_of_n(np_, abs(s.alpha_s) ** 2)
    pairs = ((s.alpha_s, rhs_alpha), (s.zeta_s, rhs_zeta), (s.beta_s, rhs_beta))
    return max(abs(lhs - rhs) / (1.0 + abs(rhs)) for lhs, rhs in pairs)


def zeta0_rate(np_, alpha, zeta):
    """Right-hand side of the inversion equation (noise dropped)."""
    return 2.0 * np_.g * (alpha * zeta.conjugate()).imag - 2.0 * np_.gamma_p * abs(zeta) ** 2


def _assemble(np_, alpha, delta_0f, n_branches, method):
    theta = cmath.phase(alpha) if alpha != 0 else 0.0
    zeta = _zeta_of_alpha(np_, alpha)
    beta = _beta_of_n(np_, abs(alpha) ** 2)
    rot = cmath.exp(-1j * theta)
    alpha_r = complex(abs(alpha), 0.0)
    zeta_r = zeta * rot
    delta_f = delta_0f - np_.G0 * 2.0 * beta.real
    trial = SteadyState(
        alpha_s=alpha_r,
        beta_s=beta,
        zeta_s=zeta_r,
        zeta0_s=np_.zeta0_s,
        delta_f=delta_f,
        delta_p_eff=np_.delta_p_eff,
        residual=0.0,
        delta_0f=delta_0f,
        theta=theta,
        zeta0_rate=zeta0_rate(np_, alpha_r, zeta_r),
        n_branches=n_branches,
        method=method,
    )
    return _with_residual(trial, np_)


def _with_residual(s, np_):
    from dataclasses import replace

    return replace(s, residual=steady_residual(s, np_))


def _cubic_roots(np_, eps_sq, load):
    """Positive real roots of ``n [c_r^2 + (y - s n)^2] = eps^2``."""
    c_r = np_.gamma_f + load.real
    y = np_.delta_0f + load.imag
    s = _shift_per_photon(np_)
    if s == 0.0:
        denom = c_r * c_r + y * y
        return np.array([eps_sq / denom]) if denom > 0 else np.array([])
    coeffs = [s * s, -2.0 * s * y, c_r * c_r + y * y, -eps_sq]
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))].real
    real = real[real >= 0.0]
    return np.sort(np.array([_polish_root(r, s, y, c_r, eps_sq) for r in real]))


def _polish_root(n, s, y, c_r, eps_sq):
    for _ in range(50):
        u = y - s * n
        f = n * (c_r * c_r + u * u) - eps_sq
        fp = c_r * c_r + u * u - 2.0 * s * n * u
        if fp == 0.0:
            break
        step = f / fp
        n -= step
        if abs(step) <= 1e-16 * max(1.0, abs(n)):
            break
    return max(n, 0.0)


def _photon_number_branch(np_, load, steps=200):
    """Follow the photon number from zero drive up to full drive.

    At each drive level the root nearest the previous one is kept, so at a
    fold the path jumps the way an upward power sweep would.
    """
    eps0 = np_.epsilon0
    if eps0 == 0.0:
        return 0.0, 1
    n = 0.0
    roots = np.array([0.0])
    for k in range(1, steps + 1):
        eps = eps0 * (k / steps) ** 2
        roots = _cubic_roots(np_, eps * eps, load)
        if roots.size == 0:
            raise NonConvergence("photon-number cubic has no admissible root")
        n = float(roots[np.argmin(np.abs(roots - n))])
    return n, int(roots.size)


def _newton_polish(np_, alpha0, delta_0f, max_iter):
    """Full six-unknown root solve, used when the reduced route misses tolerance."""
    scale_a = max(1.0, abs(alpha0))
    n0 = abs(alpha0) ** 2
    beta0 = _beta_of_n(np_, n0)
    zeta0 = _zeta_of_alpha(np_, alpha0)
    scale_b = max(1.0, abs(beta0))
    scale_z = max(1.0, abs(zeta0))

    def unpack(x):
        a = complex(x[0], x[1]) * scale_a
        b = complex(x[2], x[3]) * scale_b
        z = complex(x[4], x[5]) * scale_z
        return a, b, z

    def fun(x):
        a, b, z = unpack(x)
        delta_f = delta_0f - np_.G0 * 2.0 * b.real
        ra = a - (np_.epsilon0 - 1j * np_.g * z) / (1j * delta_f + np_.gamma_f)
        rb = b - _beta_of_n(np_, abs(a) ** 2)
        rz = z - _zeta_of_alpha(np_, a)
        return [ra.real / scale_a, ra.imag / scale_a, rb.real / scale_b,
                rb.imag / scale_b, rz.real / scale_z, rz.imag / scale_z]

    x0 = [alpha0.real / scale_a, alpha0.imag / scale_a, beta0.real / scale_b,
          beta0.imag / scale_b, zeta0.real / scale_z, zeta0.imag / scale_z]
    sol = optimize.root(fun, x0, method="hybr", options={"xtol": 1e-15, "maxfev": max_iter})
    a, _, _ = unpack(sol.x)
    return a


def solve_steady(np_: NormalizedParams, tol=1e-12, max_iter=10_000) -> SteadyState:
    """Steady state of the mean-field equations.

    When ``np_.delta_f_target`` is set the effective cavity detuning is
    prescribed and the solution is explicit; the bare detuning is then
    reconstructed.  Otherwise the photon number is continued from zero drive
    (see :func:`_photon_number_branch`) and polished with a full root solve
    if needed.

    Raises
    ------
    NonConvergence
        if the defect stays above ``tol``.
    MolecularResonance
        if the molecular denominator vanishes with ``g != 0``.
    """
    if not np_.gamma_f > 0:
        raise SteadyStateError("gamma_f must be positive")
    load = _molecular_load(np_)

    if np_.delta_f_target is not None:
        alpha = np_.epsilon0 / (1j * np_.delta_f_target + np_.gamma_f + load)
        delta_0f = np_.delta_f_target + _shift_per_photon(np_) * abs(alpha) ** 2
        state = _assemble(np_, alpha, delta_0f, 1, "closed-form")
    else:
        if np_.delta_0f is None:
            raise SteadyStateError("need either delta_0f or delta_f_target")
        n, branches = _photon_number_branch(np_, load)
        delta_f = np_.delta_0f - _shift_per_photon(np_) * n
        alpha = np_.epsilon0 / (1j * delta_f + np_.gamma_f + load)
        state = _assemble(np_, alpha, np_.delta_0f, branches, "continuation")
        if branches > 1:
            log.info("bistable drive: %d fixed points, continuation branch n=%g", branches, n)
        if state.residual > tol:
            alpha = _newton_polish(np_, alpha, np_.delta_0f, max_iter)
            state = _assemble(np_, alpha, np_.delta_0f, branches, "continuation+root")

    if not math.isfinite(state.residual) or state.residual > tol:
        raise NonConvergence(f"steady-state defect {state.residual:.3e} exceeds tolerance {tol:.1e}")
    return state
