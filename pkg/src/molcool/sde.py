"""Time-domain checks: linear SDE ensembles and the noiseless nonlinear ODEs.

Two independent routes back up the algebraic results of
:mod:`molcool.stability` and :mod:`molcool.steadystate`:

* :func:`simulate_linear_sde` integrates ``du = -A u dt + B dW`` with
  Euler-Maruyama over an ensemble and averages ``u u^T`` after burn-in.
* :func:`integrate_semiclassical` integrates the mean-field equations for
  ``(alpha, beta, zeta, zeta0)`` with an adaptive Runge-Kutta pair and reports
  how far the trajectory ends from the solved fixed point.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from molcool.linear import LinearSystem
from molcool.params import NormalizedParams
from molcool.stability import UnstableSystemError, is_stable, solve_lyapunov
from molcool.steadystate import SteadyState, solve_steady

EXPLICIT_LIMIT = 0.1  # dt * ||A||_inf must stay below this
CLAMP_LIMIT = 0.05  # largest tolerated clamped fraction of trace(|D|)
CHUNK = 2048  # time steps of noise drawn per trajectory at once


class SdeBlowUp(ArithmeticError):
    """The ensemble diverged during integration."""


class NoiseFactorError(ValueError):
    """Too much of ``D`` had to be clamped to make it a covariance."""


class IntegrationError(ArithmeticError):
    """The ODE integrator gave up (step-size underflow or similar)."""


@dataclass(frozen=True)
class SdeRunSpec:
    dt: float
    t_total: float
    n_trajectories: int = 64
    seed: int = 0
    burn_in_fraction: float = 0.2
    max_clamped_fraction: float = CLAMP_LIMIT

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_total > self.dt:
            raise ValueError("t_total must exceed dt")
        if int(self.n_trajectories) != self.n_trajectories or self.n_trajectories < 1:
            raise ValueError("n_trajectories must be a positive integer")
        if not 0.0 < self.burn_in_fraction < 1.0:
            raise ValueError("burn_in_fraction must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self):
        return int(round(self.t_total / self.dt))

    @property
    def n_burn(self):
        return int(round(self.burn_in_fraction * self.n_steps))


def default_run_spec(a_matrix, n_trajectories=64, seed=0, courant=0.01):
    """Run length ``200 / |max Re lambda|`` with ``dt`` set by ``courant / ||A||_inf``."""
    stable, max_re = is_stable(a_matrix)
    if not stable:
        raise UnstableSystemError(f"drift matrix unstable (max Re = {max_re:.3e})")
    norm = np.max(np.sum(np.abs(a_matrix), axis=1))
    return SdeRunSpec(dt=courant / norm, t_total=200.0 / abs(max_re), n_trajectories=n_trajectories, seed=seed)


@dataclass(frozen=True)
class NoiseFactor:
    b: np.ndarray  # B B^T = D_plus
    d_plus: np.ndarray
    clamped_mass: float  # sum of |negative eigenvalues| removed
    clamped_fraction: float  # relative to sum |eigenvalues|


def noise_factor(d_matrix) -> NoiseFactor:
    """Symmetric square-root factor of the PSD part of ``D``.

    ``D`` need not be positive semidefinite, so a Cholesky factor is not
    available in general; negative eigenvalues are set to zero instead.
    """
    d = np.asarray(d_matrix, dtype=float)
    d = 0.5 * (d + d.T)
    lam, vec = linalg.eigh(d)
    neg = lam < 0
    mass = float(-np.sum(lam[neg]))
    total = float(np.sum(np.abs(lam)))
    lam_plus = np.where(neg, 0.0, lam)
    b = vec * np.sqrt(lam_plus)
    d_plus = (vec * lam_plus) @ vec.T
    return NoiseFactor(b, 0.5 * (d_plus + d_plus.T), mass, mass / total if total > 0 else 0.0)


@dataclass(frozen=True)
class SdeEstimate:
    covariance: np.ndarray
    stderr: np.ndarray
    noise: NoiseFactor
    n_samples: int  # time samples per trajectory after burn-in
    spec: SdeRunSpec
    target: np.ndarray  # Lyapunov covariance for the clamped D actually simulated
    per_trajectory: np.ndarray = field(repr=False)

    def z_scores(self, reference):
        ref = np.asarray(reference, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(self.covariance - ref) / self.stderr
        # entries with zero spread must match exactly
        exact = self.stderr == 0
        z[exact] = np.where(self.covariance[exact] == ref[exact], 0.0, np.inf)
        return z


def jackknife(samples):
    """Leave-one-out mean and standard error along axis 0."""
    x = np.asarray(samples, dtype=float)
    n = x.shape[0]
    mean = x.mean(axis=0)
    if n < 2:
        return mean, np.full_like(mean, np.inf)
    loo = (x.sum(axis=0) - x) / (n - 1)
    se = np.sqrt((n - 1) / n * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))
    return mean, se


def simulate_linear_sde(sys: LinearSystem | tuple, spec: SdeRunSpec) -> SdeEstimate:
    """Ensemble estimate of the stationary covariance of ``du = -A u dt + B dW``.

    Parameters
    ----------
    sys
        :class:`LinearSystem` or a pair ``(A, D)``.
    spec
        Step, horizon, ensemble size and seed.  Trajectory ``k`` draws its
        noise from the ``k``-th child of ``SeedSequence(seed)``, so results do
        not depend on how trajectories are batched.

    Returns
    -------
    SdeEstimate
        Time-and-ensemble average of ``u u^T`` after burn-in, with jackknife
        standard errors over trajectories.

    Raises
    ------
    UnstableSystemError
        ``A`` has an eigenvalue with non-negative real part.
    NoiseFactorError
        more than ``spec.max_clamped_fraction`` of ``D`` is negative.
    SdeBlowUp
        the ensemble diverges (step too large for the explicit scheme).
    """
    if isinstance(sys, LinearSystem):
        a, d = sys.a_matrix, sys.d_matrix
    else:
        a, d = (np.asarray(x, dtype=float) for x in sys)
    n = a.shape[0]
    stable, max_re = is_stable(a)
    if not stable:
        raise UnstableSystemError(f"drift matrix unstable (max Re = {max_re:.3e})")
    norm = float(np.max(np.sum(np.abs(a), axis=1)))
    if spec.dt * norm >= EXPLICIT_LIMIT:
        raise ValueError(f"dt * ||A||_inf = {spec.dt * norm:.3g} >= {EXPLICIT_LIMIT}; reduce dt")
    nf = noise_factor(d)
    if nf.clamped_fraction > spec.max_clamped_fraction:
        raise NoiseFactorError(
            f"clamped {100 * nf.clamped_fraction:.2f}% of D (limit {100 * spec.max_clamped_fraction:.0f}%)"
        )

    k = spec.n_trajectories
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(k)]
    step = np.eye(n) - spec.dt * a  # u_{j+1} = step @ u_j + sqrt(dt) B xi
    step_t = step.T.copy()
    bt = (math.sqrt(spec.dt) * nf.b).T.copy()
    u = np.zeros((k, n))
    acc = np.zeros((k, n, n))
    n_steps, n_burn = spec.n_steps, spec.n_burn
    scale = 1e12 * (1.0 + math.sqrt(float(np.max(np.abs(d))) * spec.t_total))

    j = 0
    while j < n_steps:
        m = min(CHUNK, n_steps - j)
        xi = np.stack([r.standard_normal((m, n)) for r in rngs], axis=1) @ bt  # (m, k, n)
        for i in range(m):
            u = u @ step_t + xi[i]
            if j + i >= n_burn:
                acc += u[:, :, None] * u[:, None, :]
        j += m
        peak = float(np.max(np.abs(u)))
        if not math.isfinite(peak) or peak > scale:
            raise SdeBlowUp(f"ensemble diverged at t = {j * spec.dt:.4g} (|u| = {peak:.3g})")

    n_samples = n_steps - n_burn
    per = acc / n_samples
    per = 0.5 * (per + np.swapaxes(per, 1, 2))
    mean, se = jackknife(per)
    return SdeEstimate(mean, se, nf, n_samples, spec, solve_lyapunov(a, nf.d_plus), per)


def euler_maruyama_covariance(a, d, dt):
    """Exact stationary covariance of the Euler-Maruyama chain (its weak-bias oracle).

    Solves ``V = (I - A dt) V (I - A dt)^T + D dt``.
    """
    a = np.asarray(a, dtype=float)
    step = np.eye(a.shape[0]) - dt * a
    return linalg.solve_discrete_lyapunov(step, dt * np.asarray(d, dtype=float))


# -- deterministic mean-field equations --------------------------------------


@dataclass(frozen=True)
class MeanField:
    alpha: complex
    beta: complex
    zeta: complex
    zeta0: complex

    def as_array(self):
        return np.array([self.alpha, self.beta, self.zeta, self.zeta0], dtype=complex)


def fixed_point(np_: NormalizedParams, s: SteadyState) -> MeanField:
    """Steady state in the frame of a real drive (undo the stored phase rotation)."""
    rot = cmath.exp(1j * s.theta)
    return MeanField(s.alpha_s * rot, s.beta_s, s.zeta_s * rot, complex(s.zeta0_s))


def mean_field_rhs(np_: NormalizedParams, delta_0f, freeze_zeta0=False):
    """Right-hand side of the noiseless equations for ``(alpha, beta, zeta, zeta0)``."""
    G0, g, gp, wp = np_.G0, np_.g, np_.gamma_p, np_.omega_p
    gf, gm, dp, eps = np_.gamma_f, np_.gamma_m, np_.delta_p, np_.epsilon0

    def rhs(z):
        al, be, ze, z0 = z
        da = -(1j * delta_0f + gf) * al - 1j * g * ze + 1j * G0 * al * (be.conjugate() + be) + eps
        db = -1j * be + 1j * G0 * abs(al) ** 2 - gm * be
        dz = 1j * dp * ze + 2.0 * (1j * wp + gp) * ze * z0 + 2j * g * al * z0
        if freeze_zeta0:
            dz0 = 0.0
        else:
            dz0 = -1j * g * al * ze.conjugate() + 1j * g * al.conjugate() * ze - 2.0 * gp * abs(ze) ** 2
        return np.array([da, db, dz, dz0], dtype=complex)

    return rhs


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    z: np.ndarray  # (4, n_t) complex: alpha, beta, zeta, zeta0
    target: MeanField
    terminal_distance: float
    distance: np.ndarray  # relative distance to target at each sample
    n_rhs: int

    @property
    def alpha(self):
        return self.z[0]

    @property
    def beta(self):
        return self.z[1]

    @property
    def zeta(self):
        return self.z[2]

    @property
    def zeta0(self):
        return self.z[3]


def _relative_distance(z, target, scale):
    return np.max(np.abs(z - target[:, None]) / scale[:, None], axis=0)


def integrate_semiclassical(
    np_: NormalizedParams,
    initial=None,
    t_total=100.0,
    dt=None,
    state=None,
    freeze_zeta0=False,
    rtol=1e-10,
) -> Trajectory:
    """Integrate the noiseless mean-field equations with DOP853.

    ``initial`` is a :class:`MeanField` (or 4 complex numbers); ``None``
    starts exactly at the fixed point.  ``dt`` is the sampling interval of
    the returned trajectory (default: 1000 samples).  Distances are measured
    component-wise relative to ``max(1, |fixed point|)``.
    """
    s = state if state is not None else solve_steady(np_)
    target = fixed_point(np_, s)
    tgt = target.as_array()
    scale = np.maximum(1.0, np.abs(tgt))
    if initial is None:
        z0 = tgt.copy()
    elif isinstance(initial, MeanField):
        z0 = initial.as_array()
    else:
        z0 = np.asarray(initial, dtype=complex)
    rhs = mean_field_rhs(np_, s.delta_0f, freeze_zeta0)

    # integrate the scaled real vector so one tolerance fits every component
    def f(_t, y):
        z = (y[:4] + 1j * y[4:]) * scale
        dz = rhs(z) / scale
        return np.concatenate([dz.real, dz.imag])

    y0 = np.concatenate([(z0 / scale).real, (z0 / scale).imag])
    n_out = 1000 if dt is None else max(2, int(round(t_total / dt)) + 1)
    t_eval = np.linspace(0.0, t_total, n_out)
    sol = integrate.solve_ivp(f, (0.0, t_total), y0, method="DOP853", t_eval=t_eval, rtol=rtol, atol=rtol * 1e-4)
    if sol.status < 0:
        raise IntegrationError(f"mean-field integration failed: {sol.message}")
    z = (sol.y[:4] + 1j * sol.y[4:]) * scale[:, None]
    dist = _relative_distance(z, tgt, scale)
    return Trajectory(sol.t, z, target, float(dist[-1]), dist, int(sol.nfev))


def perturbed_start(target: MeanField, rel=1e-3, seed=0) -> MeanField:
    """Fixed point shifted by a random complex kick of relative size ``rel``.

    ``alpha``, ``beta`` and ``zeta`` are kicked; ``zeta0`` is then chosen so
    that the conserved length ``|zeta|^2 + zeta0^2`` is unchanged, otherwise
    the trajectory would settle on a neighbouring fixed point.
    """
    rng = np.random.default_rng(seed)
    z = target.as_array()
    kick = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    z[:3] = z[:3] + rel * np.maximum(1.0, np.abs(z[:3])) * kick
    norm2 = abs(target.zeta) ** 2 + target.zeta0.real**2
    rest = norm2 - abs(z[2]) ** 2
    if rest < 0:
        raise ValueError("kick too large: |zeta| exceeds the Bloch-vector length")
    z[3] = math.copysign(math.sqrt(rest), target.zeta0.real)
    return MeanField(*z)


def zeta0_rate_along(traj: Trajectory, np_: NormalizedParams):
    """``-i g alpha zeta* + i g alpha* zeta - 2 gamma_p |zeta|^2`` along a trajectory."""
    al, ze = traj.alpha, traj.zeta
    g, gp = np_.g, np_.gamma_p
    return (-1j * g * al * ze.conjugate() + 1j * g * al.conjugate() * ze - 2.0 * gp * np.abs(ze) ** 2).real
