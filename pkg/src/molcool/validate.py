"""Cross-checks of one operating point against independent oracles.

Each check returns a :class:`Check` with the measured gap, its tolerance and
a verdict (``None`` when the check does not apply, e.g. the time-domain
oracles at an unstable point).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from molcool.linear import build_linear_system
from molcool.params import NormalizedParams
from molcool.response import spectrum
from molcool.sde import (
    default_run_spec,
    fixed_point,
    integrate_semiclassical,
    perturbed_start,
    simulate_linear_sde,
)
from molcool.stability import (
    covariance_quadrature,
    dynamical_core,
    lyapunov_residual,
    solve_lyapunov,
    stability_report,
)
from molcool.steadystate import solve_steady, steady_residual

STEADY_TOL = 1e-12
LYAPUNOV_TOL = 1e-12
QUADRATURE_TOL = 1e-8
MC_SIGMAS = 3.0
ODE_TOL = 1e-8
CLOSED_FORM_TOL = 1e-8


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool | None
    detail: str = ""
    seconds: float = 0.0

    def row(self):
        return {
            "check": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


def relative_inf_gap(x, ref):
    """``||x - ref||_inf / ||ref||_inf`` with the matrix infinity norm."""
    x, ref = np.asarray(x), np.asarray(ref)
    scale = np.linalg.norm(ref, np.inf)
    return float(np.linalg.norm(x - ref, np.inf) / (scale if scale > 0 else 1.0))


def validate_point(
    np_: NormalizedParams,
    low_excitation=False,
    noise_convention="paper",
    seed=0,
    n_trajectories=64,
    courant=0.002,
    monte_carlo=True,
):
    """Run every oracle at ``np_``; returns a list of :class:`Check`."""
    checks = []
    t0 = time.perf_counter()
    s = solve_steady(np_)
    res = steady_residual(s, np_)
    checks.append(Check("steady_residual", res, STEADY_TOL, res < STEADY_TOL, s.method,
                        time.perf_counter() - t0))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sys_ = build_linear_system(np_, s, low_excitation, noise_convention)
    core = dynamical_core(sys_.a_matrix, sys_.d_matrix, sys_.basis)
    rep = stability_report(core.a)
    checks.append(Check(
        "hurwitz_agreement", rep.max_re_eig, 0.0, rep.agree,
        f"eigen={'stable' if rep.stable else 'unstable'} hurwitz={'stable' if rep.hurwitz_stable else 'unstable'}"
        f" core={len(core.basis) - core.n_conserved} conserved={core.n_conserved}",
    ))
    if not rep.stable:
        for name in ("lyapunov_residual", "lyapunov_vs_quadrature", "lyapunov_vs_monte_carlo", "ode_convergence"):
            checks.append(Check(name, math.nan, math.nan, None, "not applicable: unstable point"))
    else:
        t0 = time.perf_counter()
        v_core = solve_lyapunov(core.a, core.d)
        v = core.lift(v_core)
        dnorm = float(np.max(np.abs(sys_.d_matrix))) or 1.0
        r = lyapunov_residual(sys_.a_matrix, v, sys_.d_matrix) / dnorm
        checks.append(Check("lyapunov_residual", r, LYAPUNOV_TOL, r < LYAPUNOV_TOL,
                            "full basis, relative to max|D|", time.perf_counter() - t0))

        t0 = time.perf_counter()
        vq = covariance_quadrature(sys_.a_matrix, sys_.d_matrix, horizon=40.0 / abs(rep.max_re_eig))
        gap = relative_inf_gap(v, vq)
        checks.append(Check("lyapunov_vs_quadrature", gap, QUADRATURE_TOL, gap < QUADRATURE_TOL,
                            "time integral of the full system, relative infinity norm", time.perf_counter() - t0))

        if monte_carlo:
            t0 = time.perf_counter()
            spec = default_run_spec(core.a, n_trajectories=n_trajectories, seed=seed, courant=courant)
            est = simulate_linear_sde((core.a, core.d), spec)
            z = float(np.max(est.z_scores(est.target)))
            z_raw = float(np.max(est.z_scores(v_core)))
            checks.append(Check(
                "lyapunov_vs_monte_carlo", z, MC_SIGMAS, z <= MC_SIGMAS,
                f"max |z| vs core Lyapunov(D+); {n_trajectories} traj x {spec.n_steps} steps, "
                f"clamped {100 * est.noise.clamped_fraction:.3g}% of D, max |z| vs core Lyapunov(D) {z_raw:.3g}",
                time.perf_counter() - t0,
            ))
        else:
            checks.append(Check("lyapunov_vs_monte_carlo", math.nan, MC_SIGMAS, None, "skipped"))

        t0 = time.perf_counter()
        start = perturbed_start(fixed_point(np_, s), rel=1e-3, seed=seed)
        horizon = 50.0 / abs(rep.max_re_eig)
        traj = integrate_semiclassical(np_, start, t_total=horizon, state=s, freeze_zeta0=low_excitation, rtol=1e-12)
        d = traj.terminal_distance
        checks.append(Check("ode_convergence", d, ODE_TOL, d < ODE_TOL,
                            f"relative distance after t = {horizon:.4g}", time.perf_counter() - t0))

    t0 = time.perf_counter()
    pts = spectrum(np_, s, np.geomspace(0.2, 2.0, 200), sys=sys_)
    gap = max(p.closed_form_gap for p in pts)
    applies = np_.g == 0.0
    checks.append(Check(
        "closed_form_vs_matrix_response", gap, CLOSED_FORM_TOL, (gap < CLOSED_FORM_TOL) if applies else None,
        "max relative gap over 200 frequencies" + ("" if applies else "; informational when g != 0"),
        time.perf_counter() - t0,
    ))
    return checks
