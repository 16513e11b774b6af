"""Acceptance criteria 1-10, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line (shown in the terminal summary) and
then asserts the verdict, so an unmet criterion fails visibly.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import linalg

import transcription
from conftest import preset_np, random_point
from molcool.cli import main
from molcool.linear import appendix_a, build_diffusion, build_drift, build_linear_system
from molcool.morse import MOLECULES, level_ladder, morse_frequency, morse_frequency_direct, nu_max
from molcool.response import (
    NegativeRadicand,
    appendix_b_coefficients,
    effective_damping,
    effective_frequency,
    oscillator_parameters,
    spectrum,
    susceptibility,
)
from molcool.sde import default_run_spec, fixed_point, integrate_semiclassical, perturbed_start, simulate_linear_sde
from molcool.stability import (
    cooling_point,
    covariance_quadrature,
    dynamical_core,
    is_stable,
    solve_lyapunov,
    stability_report,
)
from molcool.steadystate import solve_steady, steady_residual
from molcool.sweep import manifest_path
from test_morse import brute_nu_max
from test_response import FIELDS

OMEGAS = np.geomspace(0.2, 2.0, 2000)


def _rel(x, ref):
    x, ref = np.asarray(x, float), np.asarray(ref, float)
    return float(np.max(np.abs(x - ref)) / max(1.0, np.max(np.abs(ref))))


def _core(np_, low_excitation=False):
    s = solve_steady(np_)
    sys = build_linear_system(np_, s, low_excitation=low_excitation)
    return s, sys, dynamical_core(sys.a_matrix, sys.d_matrix, sys.basis)


# -- 1 ---------------------------------------------------------------------------


def test_criterion_1_transcription_fidelity(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = {"drift": 0.0, "diffusion": 0.0, "aux": 0.0, "response": 0.0}
    for _ in range(100):
        np_, s = random_point(rng)
        worst["drift"] = max(worst["drift"], _rel(build_drift(np_, s), -transcription.printed_generator(np_, s)))
        worst["diffusion"] = max(worst["diffusion"], _rel(build_diffusion(np_, s)[0], transcription.printed_diffusion(np_, s)))
        q = appendix_a(np_, s)
        for key, value in transcription.aux_table(np_, s).items():
            worst["aux"] = max(worst["aux"], abs(getattr(q, key) - value) / max(1.0, abs(value)))
        w = float(rng.uniform(0.2, 2.0))
        c = appendix_b_coefficients(np_, s, w)
        ref = transcription.response_table(np_, s, w)
        for f in FIELDS:
            worst["response"] = max(worst["response"], abs(getattr(c, f) - ref[f]) / max(1.0, abs(ref[f])))
    ok = max(worst.values()) < 1e-13
    detail = "max gaps " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-13, 100 points)"
    assert report(1, "transcription fidelity", ok, detail, time.perf_counter() - t0, 10)


# -- 2 ---------------------------------------------------------------------------


def test_criterion_2_steady_state_contract(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("fig3", "fig4"):
        np_ = preset_np(name)
        s, sys, core = _core(np_)
        res = steady_residual(s, np_)
        ok &= res < 1e-12
        stable, max_re = is_stable(core.a)
        if stable:
            start = perturbed_start(fixed_point(np_, s), rel=1e-3)
            d = integrate_semiclassical(np_, start, t_total=50 / abs(max_re), state=s, rtol=1e-12).terminal_distance
            ok &= d < 1e-8
            parts.append(f"{name}: residual {res:.1e}, ODE distance {d:.1e}")
        else:
            parts.append(f"{name}: residual {res:.1e}, unstable (max Re {max_re:.3g}) so the ODE clause does not apply")
    # the ODE clause is vacuous at both presets; show it at a stable point as well
    np_ = preset_np("regression")
    s, _, core = _core(np_)
    _, max_re = is_stable(core.a)
    start = perturbed_start(fixed_point(np_, s), rel=1e-3)
    d = integrate_semiclassical(np_, start, t_total=50 / abs(max_re), state=s, rtol=1e-12).terminal_distance
    parts.append(f"regression (informational): residual {steady_residual(s, np_):.1e}, ODE distance {d:.1e}")
    assert report(2, "steady-state contract", ok, "; ".join(parts), time.perf_counter() - t0, 30)


# -- 3 ---------------------------------------------------------------------------


def test_criterion_3_covariance_oracle_triangle(report):
    t0 = time.perf_counter()
    # the literal cooling presets are unstable; the stable regression point stands in
    np_ = preset_np("regression")
    _, sys, core = _core(np_)
    stable, max_re = is_stable(core.a)
    v_core = solve_lyapunov(core.a, core.d)
    v = core.lift(v_core)
    vq = covariance_quadrature(sys.a_matrix, sys.d_matrix, horizon=40 / abs(max_re))
    quad_gap = float(np.linalg.norm(v - vq, np.inf) / np.linalg.norm(v, np.inf))
    spec = default_run_spec(core.a, n_trajectories=64, seed=2026, courant=0.002)
    est = simulate_linear_sde((core.a, core.d), spec)
    z = float(np.max(est.z_scores(v_core)))
    z_plus = float(np.max(est.z_scores(est.target)))
    ok = stable and quad_gap < 1e-8 and z <= 3.0
    detail = (f"regression preset: quadrature gap {quad_gap:.1e} (tol 1e-8); Monte-Carlo max |z| {z:.2f} vs Lyapunov(D) "
              f"and {z_plus:.2f} vs Lyapunov(D+) (tol 3), {spec.n_trajectories} trajectories x t = {spec.t_total:g}, "
              f"{100 * est.noise.clamped_fraction:.2f}% of D clamped")
    assert report(3, "covariance oracle triangle", ok, detail, time.perf_counter() - t0, 300)


# -- 4 ---------------------------------------------------------------------------


def _standard_pipeline(np_, s):
    """4x4 optomechanics: frequency response and occupancy, independent of the package solvers."""
    a4 = -transcription.printed_generator(np_, s)[:4, :4]
    d4 = transcription.printed_diffusion(np_, s)[:4, :4]
    v4 = linalg.solve_continuous_lyapunov(a4, d4)
    return a4, 0.5 * (v4[0, 0] + v4[1, 1]) - 0.5


def test_criterion_4_reduction_limit(report):
    t0 = time.perf_counter()
    off = dict(g_coupling=0, gamma_p=0, omega_p=0, delta_p_ratio=0)
    parts, ok = [], True
    for name in ("fig3", "regression"):
        np_ = preset_np(name, **off)
        s = solve_steady(np_)
        a4, _ = _standard_pipeline(np_, s)
        chi_gap = w_gap = g_gap = 0.0
        for w in OMEGAS:
            oracle = np.linalg.solve(-1j * w * np.eye(4) + a4, np.eye(4)[:, 1])[0]
            chi_gap = max(chi_gap, abs(susceptibility(np_, s, w) - oracle) / (1 + abs(oracle)))
            w_o, g_o = oscillator_parameters(oracle, w)
            g_gap = max(g_gap, abs(effective_damping(np_, s, w) - g_o) / max(1.0, abs(g_o)))
            try:
                w_c = effective_frequency(np_, s, w)
            except NegativeRadicand:
                w_c = math.nan
            if math.isnan(w_o) != math.isnan(w_c):
                w_gap = math.inf
            elif not math.isnan(w_o):
                w_gap = max(w_gap, abs(w_c - w_o) / max(1.0, w_o))
        ok &= max(chi_gap, w_gap, g_gap) < 1e-8
        parts.append(f"{name}: chi {chi_gap:.1e}, omega_eff {w_gap:.1e}, gamma_eff {g_gap:.1e}")
    # occupancy needs a stable point
    for name in ("regression", "lowpower"):
        np_ = preset_np(name, **off)
        s = solve_steady(np_)
        res = cooling_point(np_, state=s)
        _, n4 = _standard_pipeline(np_, s)
        if res.stable:
            gap = abs(res.n_eff - n4) / abs(n4)
            ok &= gap < 1e-10
            parts.append(f"{name}: n_eff 7x7 {res.n_eff:.12g} vs 4x4 {n4:.12g} (rel {gap:.1e})")
        else:
            ok = False
            parts.append(f"{name}: unstable")
    parts.append("tol 1e-8 spectra over 2000 frequencies, 1e-10 n_eff")
    assert report(4, "reduction limit", ok, "; ".join(parts), time.perf_counter() - t0, 30)


# -- 5 ---------------------------------------------------------------------------


def _peaks(g_hz):
    np_ = preset_np("fig3", g_coupling_over_2pi=g_hz)
    pts = spectrum(np_, solve_steady(np_), OMEGAS)
    return (float(np.nanmax([p.gamma_eff_oracle for p in pts])), float(np.nanmax([p.gamma_eff for p in pts])))


def test_criterion_5_damping_peak_trends(report):
    t0 = time.perf_counter()
    (o0, c0), (o3, c3), (o5, c5) = _peaks(0.0), _peaks(3e3), _peaks(5e3)
    ok = o5 > o0 and o5 > o3
    closed = o5 > o0 and c5 > c3 and c5 > c0
    detail = (f"matrix-response peaks gamma_eff/omega_m: g=0 {o0:.10g}, 3 kHz {o3:.10g}, 5 kHz {o5:.10g}; "
              f"closed-form peaks {c0:.4g}, {c3:.4g}, {c5:.4g} (closed-form ordering {'holds' if closed else 'fails'})")
    assert report(5, "effective-damping peak trends", ok, detail, time.perf_counter() - t0, 30)


# -- 6 ---------------------------------------------------------------------------


def _min_neff(low_excitation=False, preset="fig5", **overrides):
    out = []
    for df in np.linspace(0.5, 1.5, 101):
        np_ = preset_np(preset, delta_f_over_omega_m=df, **overrides)
        res = cooling_point(np_, low_excitation=low_excitation)
        if res.stable:
            out.append((res.n_eff, df, res.validity_ratio))
    return min(out) if out else None


def _fmt(m):
    return "no stable point" if m is None else f"{m[0]:.10g} at delta_f {m[1]:.3g}"


def _le(a, b):
    return a is not None and b is not None and a[0] <= b[0]


def test_criterion_6_cooling_minima(report):
    t0 = time.perf_counter()
    mol, bare = _min_neff(), _min_neff(g_coupling=0)
    f01, f03 = mol, _min_neff(gamma_f_over_omega_m=0.3)
    p8, p5 = _min_neff(drive_power=8e-3), mol
    ok = _le(mol, bare) and _le(f01, f03) and _le(p8, p5)
    detail = (f"min n_eff over 101 detunings: g=10 kHz {_fmt(mol)}, g=0 {_fmt(bare)}; "
              f"gamma_f=0.3 {_fmt(f03)}; P=8 mW {_fmt(p8)}")
    # weak-drive stand-in (not part of the verdict): 6x6 pipeline at the lowpower preset
    lp = dict(low_excitation=True, preset="lowpower")
    detail += (f" | lowpower 6x6 surrogate, informational: g=10 kHz {_fmt(_min_neff(**lp))}, "
               f"g=0 {_fmt(_min_neff(g_coupling=0, **lp))}, gamma_f=0.3 {_fmt(_min_neff(gamma_f_over_omega_m=0.3, **lp))}, "
               f"drive x1.6 {_fmt(_min_neff(drive_power=1.6e-7, **lp))}")
    assert report(6, "cooling minima", ok, detail, time.perf_counter() - t0, 120)


# -- 7 ---------------------------------------------------------------------------


def test_criterion_7_low_excitation_minimum(report):
    t0 = time.perf_counter()
    low, full = _min_neff(low_excitation=True), _min_neff()
    valid = low is not None and low[2] < 0.01
    ok = valid and _le(low, full)
    detail = f"min n_eff 6x6 {_fmt(low)}, 7x7 {_fmt(full)}"
    if low is not None:
        detail += f"; validity ratio at 6x6 minimum {low[2]:.2e}"
    # informational: lowpower at g = 500 Hz, where the full model is stable
    lp = dict(preset="lowpower", g_coupling_over_2pi=500)
    low_s, full_s = _min_neff(low_excitation=True, **lp), _min_neff(**lp)
    detail += f" | lowpower g=500 Hz surrogate, informational: 6x6 {_fmt(low_s)}, 7x7 {_fmt(full_s)}"
    assert report(7, "low-excitation minimum", ok, detail, time.perf_counter() - t0, 60)


# -- 8 ---------------------------------------------------------------------------


def test_criterion_8_stability_dual_method(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    bases = []
    for name, low in (("regression", False), ("lowpower", False), ("lowpower", True), ("fig3", False), ("fig4", False)):
        bases.append(_core(preset_np(name), low)[2].a)
    n_stable = disagree = 0
    for i in range(1000):
        a = bases[i % len(bases)]
        scale = float(np.max(np.abs(np.linalg.eigvals(a))))
        p = a * (1.0 + 0.3 * rng.standard_normal(a.shape))
        # shift so the slowest mode lands on either side of the axis, away from it
        max_re = float(np.max(np.linalg.eigvals(-p).real))
        target = rng.choice([-1.0, 1.0]) * scale * rng.uniform(1e-3, 0.5)
        p = p + (max_re - target) * np.eye(a.shape[0])
        rep = stability_report(p)
        n_stable += rep.stable
        disagree += not rep.agree
    ok = disagree == 0 and 0 < n_stable < 1000
    detail = f"1000 perturbed preset matrices ({n_stable} stable, {1000 - n_stable} unstable): {disagree} disagreements"
    assert report(8, "stability dual method", ok, detail, time.perf_counter() - t0, 60)


# -- 9 ---------------------------------------------------------------------------


def test_criterion_9_morse_suite(report):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name in ("K2", "HCl", "HI", "NO"):
        spec = MOLECULES[name]
        e = [lvl.energy for lvl in level_ladder(spec)]
        gaps = np.diff(e)
        mono = bool(np.all(gaps > 0))
        anh = bool(np.all(np.diff(gaps) < 0))
        ident = abs(morse_frequency(spec) / morse_frequency_direct(spec) - 1)
        brute = nu_max(spec) == brute_nu_max(spec)
        ok &= mono and anh and ident < 1e-14 and brute
        parts.append(f"{name}: {len(e)} levels, monotone {mono}, anharmonic {anh}, omega_p identity {ident:.0e}, nu_max brute {brute}")
    assert report(9, "Morse suite", ok, "; ".join(parts), time.perf_counter() - t0, 5)


# -- 10 --------------------------------------------------------------------------


RUNS = [
    ["cool", "--config", "lowpower", "--sweep", "delta_f_over_omega_m=0.5:1.5:21", "--set", "temperature=0.25"],
    ["tempmap", "--config", "lowpower", "--low-excitation", "--sweep", "delta_f_over_omega_m=0.8:1.2:3",
     "--sweep", "g_coupling_over_2pi=1e3:5e3:3"],
    ["steady", "--config", "fig3", "--sweep", "drive_power=1e-3:5e-3:3"],
    ["spectrum", "--config", "fig3", "--grid", "0.2:2:200:log", "--json"],
    ["morse", "--molecule", "K2"],
    ["validate", "--trajectories", "4", "--courant", "0.05", "--seed", "5"],
]


def test_criterion_10_manifest_reproducibility(report, tmp_path):
    t0 = time.perf_counter()
    same = []
    for i, argv in enumerate(RUNS):
        a, b = tmp_path / f"run{i}.csv", tmp_path / f"rerun{i}.csv"
        # validate exits 2 when a check misses; only the bytes matter here
        first = main([*argv, "--out", str(a)])
        second = main([argv[0], "--from-manifest", str(manifest_path(a)), "--out", str(b)])
        assert first == second and first in (0, 2)
        same.append(a.read_bytes() == b.read_bytes())
    ok = all(same)
    detail = ", ".join(f"{r[0]} {'identical' if s else 'DIFFERS'}" for r, s in zip(RUNS, same))
    assert report(10, "manifest reproducibility", ok, detail, time.perf_counter() - t0)
