"""Stability, stationary covariance and cooling figures of merit.

The fluctuations obey ``du/dt = -A u + xi`` with white noise of intensity
``D``.  For a stable ``A`` the stationary covariance

    V = int_0^inf exp(-A s) D exp(-A^T s) ds

solves the Lyapunov equation ``A V + V A^T = D``; the mechanical occupancy is
``n_eff = (V_11 + V_22) / 2 - 1/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from molcool.constants import HBAR, K_B
from molcool.linear import LinearSystem, build_linear_system
from molcool.params import NormalizedParams
from molcool.steadystate import SteadyState, solve_steady

MARGINAL = 1e-12  # |Re(lambda)| below this (units of omega_m) is not stable
LYAPUNOV_RTOL = 1e-12
CONSERVED_TOL = 1e-10


class UnstableSystemError(ArithmeticError):
    pass


class MarginalStabilityError(UnstableSystemError):
    pass


class EigenSolverError(RuntimeError):
    pass


# -- characteristic polynomial and Hurwitz test ------------------------------


def characteristic_polynomial(m):
    """Coefficients ``[1, c_1, ..., c_n]`` of ``det(lambda I - m)``.

    Berkowitz's division-free recursion over leading principal submatrices,
    so the result does not depend on an eigen-decomposition.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    poly = np.array([1.0, -m[0, 0]])
    for k in range(1, n):
        a_kk = m[k, k]
        row = m[k, :k]
        col = m[:k, k]
        sub = m[:k, :k]
        # Toeplitz column: 1, -a_kk, -R C, -R S C, -R S^2 C, ...
        t = np.empty(k + 2)
        t[0] = 1.0
        t[1] = -a_kk
        v = col.copy()
        for j in range(2, k + 2):
            t[j] = -row @ v
            v = sub @ v
        new = np.zeros(k + 2)
        for i in range(k + 2):
            new[i] = sum(t[i - j] * poly[j] for j in range(max(0, i - k - 1), min(i, k) + 1))
        poly = new
    return poly


def hurwitz_matrix(coeffs):
    """Hurwitz matrix of ``c_0 x^n + c_1 x^(n-1) + ... + c_n`` (``c_0 > 0``)."""
    c = np.asarray(coeffs, dtype=float)
    n = len(c) - 1
    h = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            k = 2 * (j + 1) - (i + 1)
            if 0 <= k <= n:
                h[i, j] = c[k]
    return h


def hurwitz_determinants(coeffs):
    h = hurwitz_matrix(coeffs)
    return np.array([np.linalg.det(h[:k, :k]) for k in range(1, h.shape[0] + 1)])


def hurwitz_stable(dynamics):
    """Routh-Hurwitz verdict for ``du/dt = dynamics @ u``.

    The matrix is rescaled to unit norm first (stability is scale free) so
    the polynomial coefficients stay O(1).
    """
    dyn = np.asarray(dynamics, dtype=float)
    scale = np.max(np.abs(dyn))
    if scale == 0:
        return False, np.zeros(dyn.shape[0])
    coeffs = characteristic_polynomial(dyn / scale)
    dets = hurwitz_determinants(coeffs)
    stable = bool(np.all(coeffs[1:] > 0) and np.all(dets > 0))
    return stable, dets


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    max_re_eig: float
    hurwitz_stable: bool
    hurwitz_determinants: np.ndarray
    eigenvalues: np.ndarray

    @property
    def agree(self):
        return self.stable == self.hurwitz_stable


def stability_report(a_matrix) -> StabilityReport:
    a = np.asarray(a_matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("drift matrix must be square")
    if not np.all(np.isfinite(a)):
        raise EigenSolverError("drift matrix has non-finite entries")
    try:
        eig = np.linalg.eigvals(-a)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigenvalue computation failed: {exc}") from exc
    max_re = float(np.max(eig.real))
    stable = max_re < -MARGINAL
    h_stable, dets = hurwitz_stable(-a)
    return StabilityReport(stable, max_re, h_stable, dets, eig)


def is_stable(a_matrix):
    """``(stable, max_re_eig)`` for ``du/dt = -A u``; cross-checked by Hurwitz determinants."""
    rep = stability_report(a_matrix)
    if not rep.agree:
        warnings.warn(
            f"eigenvalue and Hurwitz verdicts disagree (max Re = {rep.max_re_eig:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return rep.stable, rep.max_re_eig


# -- stationary covariance ---------------------------------------------------


def lyapunov_residual(a, v, d):
    a, v, d = (np.asarray(x, dtype=float) for x in (a, v, d))
    return float(np.max(np.abs(a @ v + v @ a.T - d)))


def solve_lyapunov(a, d, refine=3):
    """Solve ``A V + V A^T = D`` through the ``n^2`` Kronecker system.

    A few rounds of iterative refinement with the residual accumulated in
    extended precision keep the solution at working accuracy.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    n = a.shape[0]
    eye = np.eye(n)
    kron = np.kron(eye, a) + np.kron(a, eye)
    try:
        lu = linalg.lu_factor(kron, check_finite=True)
    except (ValueError, linalg.LinAlgError) as exc:
        raise MarginalStabilityError(f"Lyapunov operator factorisation failed: {exc}") from exc
    rcond = 1.0 / np.linalg.cond(kron, 1)
    if not rcond > 1e-15:
        raise MarginalStabilityError(
            f"Lyapunov operator singular (rcond {rcond:.1e}): eigenvalue pair sums to zero"
        )
    x = linalg.lu_solve(lu, d.reshape(-1, order="F"))
    al = a.astype(np.longdouble)
    dl = d.astype(np.longdouble)
    for _ in range(refine):
        v = x.reshape(n, n, order="F").astype(np.longdouble)
        r = dl - (al @ v + v @ al.T)
        x = x + linalg.lu_solve(lu, np.asarray(r, dtype=float).reshape(-1, order="F"))
    v = x.reshape(n, n, order="F")
    return 0.5 * (v + v.T)


def stationary_covariance(sys: LinearSystem | np.ndarray, d_matrix=None):
    """Stationary covariance of a stable linear system.

    Accepts a :class:`LinearSystem` or the pair ``(A, D)``.  Dead coordinates
    and noiseless conserved directions are handled as in
    :func:`dynamical_core`; the returned matrix solves ``A V + V A^T = D`` in
    the full basis.

    Raises
    ------
    UnstableSystemError
        if the dynamical core of ``A`` is not stable.
    MarginalStabilityError
        if the Lyapunov operator is singular.
    """
    if isinstance(sys, LinearSystem):
        a, d = sys.a_matrix, sys.d_matrix
    else:
        a, d = np.asarray(sys, dtype=float), np.asarray(d_matrix, dtype=float)
    core = dynamical_core(a, d)
    stable, max_re = is_stable(core.a)
    if not stable:
        if abs(max_re) <= MARGINAL:
            raise MarginalStabilityError(f"marginally stable drift (max Re = {max_re:.3e})")
        raise UnstableSystemError(f"drift matrix unstable (max Re = {max_re:.3e})")
    return core.lift(solve_lyapunov(core.a, core.d))


def covariance_quadrature(a, d, horizon=None, epsrel=1e-12):
    """``int_0^T exp(-A s) D exp(-A^T s) ds`` by adaptive quadrature (test oracle).

    ``T`` defaults to ``40 / |max Re lambda|``.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    if horizon is None:
        _, max_re = is_stable(a)
        horizon = 40.0 / abs(max_re)

    def integrand(s):
        m = linalg.expm(-a * s)
        return m @ d @ m.T

    # breakpoints every few slowest decay lengths keep the integrator local
    n_panels = 40
    edges = np.linspace(0.0, horizon, n_panels + 1)
    total = np.zeros_like(d)
    scale = np.max(np.abs(d)) or 1.0
    # per-panel absolute floor just above round-off of an O(max|D|) integrand
    epsabs = 1e-14 * scale
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(integrand, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=2000)
        total += val
    return 0.5 * (total + total.T)


# -- figures of merit --------------------------------------------------------


def effective_occupancy(v_matrix) -> float:
    v = np.asarray(v_matrix, dtype=float)
    return 0.5 * (v[0, 0] + v[1, 1]) - 0.5


def effective_temperature(n_eff, omega_m) -> float:
    """Temperature (K) of a thermal state with occupancy ``n_eff`` at ``omega_m`` (rad/s).

    Non-positive occupancies map to 0 K; callers flag them.
    """
    if not n_eff > 0:
        return 0.0
    return HBAR * omega_m / (K_B * math.log1p(1.0 / n_eff))


def mean_energy(n_eff, omega_m) -> float:
    return HBAR * omega_m * (n_eff + 0.5)


def prune_dead_coordinates(a, d, basis):
    """Drop coordinates with no drift in or out and no noise.

    Such coordinates are frozen constants of motion (e.g. the molecular
    block when the molecule is absent); they make the drift singular without
    affecting any other second moment.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    keep = [
        i
        for i in range(a.shape[0])
        if np.any(a[i, :] != 0) or np.any(a[:, i] != 0) or np.any(d[i, :] != 0)
    ]
    dropped = tuple(basis[i] for i in range(a.shape[0]) if i not in keep)
    idx = np.ix_(keep, keep)
    return a[idx], d[idx], tuple(basis[i] for i in keep), dropped


def conserved_directions(a, d, tol=CONSERVED_TOL):
    """Orthonormal left null vectors ``w`` of ``A`` that the noise does not reach.

    Such a ``w`` makes ``w^T u`` a constant of the linear dynamics; when
    ``w^T D w`` also vanishes the fluctuations stay on the hyperplane
    ``w^T u = 0`` forever.  The molecular model conserves the Bloch-vector
    length ``|zeta|^2 + zeta0^2``, which shows up here as one such direction.
    Returns an ``n x k`` array (``k = 0`` if there are none, or if the noise
    is not tangent to the neutral subspace).
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    u, sv, _ = np.linalg.svd(a)
    top = sv[0] if sv[0] > 0 else 1.0
    w = u[:, sv <= tol * top]
    if w.shape[1] == 0:
        return w
    dnorm = np.max(np.abs(d))
    leak = np.max(np.abs(w.T @ d @ w)) if dnorm > 0 else 0.0
    if leak > tol * max(dnorm, 1e-300):
        return np.zeros((n, 0))
    return w


@dataclass(frozen=True)
class DynamicalCore:
    """Drift and diffusion restricted to the coordinates that actually move.

    After pruning (``keep``: full basis -> kept coordinates) the kept space
    splits into the neutral modes ``R`` (``A R = 0``, normalised so that
    ``W^T R = I`` for the conserved directions ``W``) and the hyperplane
    ``H = {W^T u = 0}``, which contains the range of ``A``.  ``a`` and ``d``
    are the drift and the noise ``Pi D Pi^T`` (``Pi = I - R W^T``) expressed in
    an orthonormal basis ``q`` of ``H``.
    """

    a: np.ndarray
    d: np.ndarray
    keep: np.ndarray  # n x m, columns of the identity
    q: np.ndarray  # m x p, orthonormal basis of H
    r: np.ndarray  # m x k, right null vectors of A
    cross: np.ndarray  # m x k, Pi D W: the noise that feeds the neutral modes
    basis: tuple
    pruned: tuple
    n_conserved: int

    @property
    def embed(self):
        return self.keep @ self.q

    def lift(self, v_core):
        """Full-basis covariance from the core solution.

        With a neutral mode the time integral of ``e^{-As} D e^{-A^T s}``
        still converges (the mode gets no noise of its own), and it picks up
        the cross terms ``R X^T + X R^T`` with ``A X = Pi D W``, ``X`` in ``H``.
        The result solves the full Lyapunov equation.
        """
        v = self.q @ v_core @ self.q.T
        if self.n_conserved:
            x = self.q @ np.linalg.solve(self.a, self.q.T @ self.cross)
            v = v + self.r @ x.T + x @ self.r.T
        return self.keep @ v @ self.keep.T


def dynamical_core(a, d, basis=None, project=True, tol=CONSERVED_TOL) -> DynamicalCore:
    """Prune dead coordinates, then split off noiseless conserved directions."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    n = a.shape[0]
    basis = tuple(basis) if basis is not None else tuple(f"u{i}" for i in range(n))
    a_k, d_k, kept, dropped = prune_dead_coordinates(a, d, basis)
    m = a_k.shape[0]
    keep = np.eye(n)[:, [basis.index(k) for k in kept]]
    empty = np.zeros((m, 0))
    w = conserved_directions(a_k, d_k, tol) if project and m else empty
    if w.shape[1] == 0:
        return DynamicalCore(a_k, d_k, keep, np.eye(m), empty, empty, kept, dropped, 0)
    r = linalg.null_space(a_k, rcond=tol)
    overlap = w.T @ r
    if r.shape[1] != w.shape[1] or np.linalg.cond(overlap) > 1e8:
        # zero eigenvalue is not semisimple: the neutral modes drift and nothing converges
        return DynamicalCore(a_k, d_k, keep, np.eye(m), empty, empty, kept, dropped, 0)
    r = r @ np.linalg.inv(overlap)  # W^T R = I
    pi = np.eye(m) - r @ w.T
    q = linalg.null_space(w.T)
    d_h = pi @ d_k @ pi.T
    a_y = q.T @ a_k @ q
    d_y = q.T @ d_h @ q
    return DynamicalCore(
        a_y, 0.5 * (d_y + d_y.T), keep, q, r, pi @ d_k @ w, kept, dropped, w.shape[1]
    )


@dataclass(frozen=True)
class CoolingResult:
    v_matrix: np.ndarray | None
    n_eff: float | None
    u_energy: float | None
    t_eff: float | None
    stable: bool
    max_re_eig: float
    hurwitz_agrees: bool = True
    lyapunov_residual: float | None = None
    basis: tuple = ()
    pruned: tuple = ()
    validity_ratio: float = 0.0
    flags: tuple = ()
    n_conserved: int = 0
    state: SteadyState | None = field(default=None, repr=False)
    system: LinearSystem | None = field(default=None, repr=False)

    def row(self):
        return {
            "stable": self.stable,
            "max_re_eig": self.max_re_eig,
            "n_eff": self.n_eff,
            "t_eff": self.t_eff,
            "u_energy": self.u_energy,
            "flags": ";".join(self.flags),
        }


def cooling_from_system(sys: LinearSystem, omega_m, state=None, project=True) -> CoolingResult:
    """Stability verdict and figures of merit for an assembled linear system.

    The verdict and the covariance refer to the dynamical core (see
    :func:`dynamical_core`); ``v_matrix`` is lifted back to ``sys.basis``.
    With ``project=False`` conserved directions are kept and show up as
    marginal stability.
    """
    core = dynamical_core(sys.a_matrix, sys.d_matrix, sys.basis, project=project)
    a, d = core.a, core.d
    flags = []
    if core.pruned:
        flags.append("pruned:" + ",".join(core.pruned))
    if core.n_conserved:
        flags.append(f"conserved:{core.n_conserved}")
    if sys.reduced and sys.validity_ratio >= 0.01:
        flags.append("low-excitation-invalid")
    rep = stability_report(a)
    if not rep.agree:
        flags.append("hurwitz-disagrees")
    common = dict(
        stable=rep.stable,
        max_re_eig=rep.max_re_eig,
        hurwitz_agrees=rep.agree,
        basis=core.basis,
        pruned=core.pruned,
        validity_ratio=sys.validity_ratio,
        n_conserved=core.n_conserved,
        state=state,
        system=sys,
    )
    if not rep.stable:
        flags.append("unstable" if rep.max_re_eig > MARGINAL else "marginal")
        return CoolingResult(None, None, None, None, flags=tuple(flags), **common)
    try:
        v_core = solve_lyapunov(a, d)
    except MarginalStabilityError:
        flags.append("marginal")
        return CoolingResult(None, None, None, None, **{**common, "stable": False}, flags=tuple(flags))
    v = core.lift(v_core)
    res = lyapunov_residual(sys.a_matrix, v, sys.d_matrix)
    dnorm = np.max(np.abs(sys.d_matrix)) if sys.d_matrix.size else 0.0
    if res > LYAPUNOV_RTOL * max(dnorm, 1e-300):
        flags.append("lyapunov-residual")
    n_eff = effective_occupancy(v)
    if n_eff <= 0:
        flags.append("n_eff-nonpositive")
    return CoolingResult(
        v_matrix=v,
        n_eff=n_eff,
        u_energy=mean_energy(n_eff, omega_m),
        t_eff=effective_temperature(n_eff, omega_m),
        lyapunov_residual=res,
        flags=tuple(flags),
        **common,
    )


def cooling_point(np_: NormalizedParams, low_excitation=False, noise_convention="paper", state=None, project=True):
    """Full pipeline for one operating point: steady state -> A, D -> V -> n_eff, T_eff."""
    s = state if state is not None else solve_steady(np_)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sys = build_linear_system(np_, s, low_excitation=low_excitation, noise_convention=noise_convention)
    return cooling_from_system(sys, np_.omega_m, state=s, project=project)
