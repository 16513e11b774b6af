"""Command-line interface: ``molcool <command> [options]``.

Commands
--------
morse      vibrational ladder, nu_max and omega_p of a molecule
steady     mean-field steady state (optionally swept)
spectrum   chi(omega), omega_eff, gamma_eff with the matrix oracle alongside
cool       n_eff and T_eff, at one point or along a sweep
tempmap    two-axis sweep of the cooling figures of merit
validate   oracle cross-checks at one operating point

Exit status: 0 on success, 1 for configuration/usage errors, 2 for numerical
failures (including failed validation checks).
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from molcool import __version__
from molcool.config import (
    BOOL_KEYS,
    TEXT_KEYS,
    Config,
    ConfigError,
    canonical_key,
    parse_config_text,
    parse_number,
    resolve_config_path,
)
from molcool.constants import HBAR, K_B
from molcool.linear import build_linear_system
from molcool.morse import MOLECULES, WIDTH_RATIOS, frequency_readings, level_ladder, morse_frequency
from molcool.morse import morse_frequency_direct, nu_max, width_ratio
from molcool.params import ParameterError, normalize
from molcool.response import frequency_grid
from molcool.steadystate import SteadyStateError, solve_steady
from molcool.sweep import (
    RunManifest,
    SweepAxis,
    SweepSpec,
    Table,
    manifest_for,
    matrix_csv,
    point_config,
    render_csv,
    render_json,
    run_cooling_sweep,
    run_spectrum,
    run_steady,
    write_outputs,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
DEFAULT_GRID = "0.2:2:2000:log"
QUOTED_K2_OMEGA_P = 2.0 * math.pi * 90e9


class UsageError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="parameter file or shipped preset name (fig3, fig4, ...)")
    common.add_argument("--out", help="output CSV (a manifest is written next to it)")
    common.add_argument("--sweep", action="append", default=[], metavar="KEY=START:STOP:N[:log]")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a parameter")
    common.add_argument("--no-molecule", action="store_true", help="set g_coupling = 0")
    common.add_argument("--low-excitation", action="store_true", help="freeze the inversion fluctuation")
    common.add_argument("--noise-convention", choices=("paper", "half"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--json", action="store_true", help="also write a JSON mirror")
    common.add_argument("--dump-matrices", action="store_true", help="write A and D next to the output")
    common.add_argument("--workers", type=int, default=None, help="process pool size for sweeps")
    common.add_argument("--from-manifest", metavar="PATH", help="repeat the run recorded in a manifest")

    parser = _Parser(prog="molcool", description="Molecule-assisted cooling of a nanomechanical resonator.")
    parser.add_argument("--version", action="version", version=f"molcool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("morse", parents=[common], help="Morse ladder and omega_p")
    p.add_argument("--molecule", default="K2", help="K2, HCl, HI or NO")
    sub.add_parser("steady", parents=[common], help="mean-field steady state")
    p = sub.add_parser("spectrum", parents=[common], help="effective frequency and damping spectra")
    p.add_argument("--grid", default=DEFAULT_GRID, metavar="LO:HI:N[:log]")
    sub.add_parser("cool", parents=[common], help="n_eff and T_eff")
    sub.add_parser("tempmap", parents=[common], help="two-axis T_eff map")
    p = sub.add_parser("validate", parents=[common], help="oracle cross-checks")
    p.add_argument("--trajectories", type=int, default=64)
    p.add_argument("--courant", type=float, default=0.002, help="dt * ||A||_inf for the SDE ensemble")
    return parser


# -- option plumbing ---------------------------------------------------------------


def _options(args):
    keys = ("set", "sweep", "no_molecule", "low_excitation", "noise_convention", "json", "dump_matrices")
    opts = {k: getattr(args, k) for k in keys}
    for k in ("molecule", "grid", "trajectories", "courant"):
        if hasattr(args, k):
            opts[k] = getattr(args, k)
    return opts


def _apply_manifest(args):
    man = RunManifest.from_json(Path(args.from_manifest).read_text())
    if man.command != args.command:
        raise UsageError(f"manifest records command {man.command!r}, not {args.command!r}")
    for key, value in man.options.items():
        setattr(args, key, value)
    args.seed = man.seed if man.seed is not None else args.seed
    return man


def _parse_override(text):
    if "=" not in text:
        raise ConfigError(f"malformed --set {text!r}; expected KEY=VALUE")
    key, value = (t.strip() for t in text.split("=", 1))
    base, _ = canonical_key(key)
    if base in TEXT_KEYS or base in BOOL_KEYS:
        return key, value
    return key, parse_number(value, f" in --set {text!r}")


def _sweep_spec(args, cfg, max_axes=1, min_axes=0):
    axes = [SweepAxis.parse(t) for t in args.sweep]
    if not min_axes <= len(axes) <= max_axes:
        want = f"exactly {max_axes}" if min_axes == max_axes else f"at most {max_axes}"
        raise UsageError(f"{args.command} takes {want} --sweep option(s), got {len(axes)}")
    convention = args.noise_convention or (cfg.flags["noise_convention"] if cfg else "paper")
    return SweepSpec(
        axis1=axes[0] if axes else None,
        axis2=axes[1] if len(axes) > 1 else None,
        overrides=tuple(_parse_override(t) for t in args.set),
        no_molecule=args.no_molecule,
        low_excitation=args.low_excitation or (cfg.flags["low_excitation"] if cfg else False),
        noise_convention=convention,
    )


def _load(args, man=None, required=True):
    if man is not None:
        return parse_config_text(man.config_text, man.config_path)
    if args.config is None:
        if required:
            raise UsageError(f"{args.command} needs --config")
        return None
    path = resolve_config_path(args.config)
    cfg = parse_config_text(path.read_text(), str(args.config))
    return cfg


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise ConfigError(f"malformed --grid {text!r}; expected LO:HI:N[:log]")
    lo, hi = parse_number(parts[0]), parse_number(parts[1])
    try:
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"point count must be an integer in --grid {text!r}") from None
    if n < 1:
        raise ConfigError("--grid needs at least one point")
    if n == 1:
        return np.array([lo])
    spacing = "log" if len(parts) == 4 and parts[3] == "log" else "linear"
    return frequency_grid(n, lo, hi, spacing)


def _metadata(command, args, cfg, spec=None):
    meta = [("tool", f"molcool {__version__}"), ("command", command)]
    if cfg is not None:
        meta.append(("config", cfg.path or "<inline>"))
    if spec is not None:
        meta += [
            ("sweeps", " ".join(a.text() for a in spec.axes) or "none"),
            ("overrides", " ".join(f"{k}={v!r}" for k, v in spec.overrides) or "none"),
            ("no_molecule", str(spec.no_molecule).lower()),
            ("low_excitation", str(spec.low_excitation).lower()),
            ("noise_convention", spec.noise_convention),
        ]
    meta += [("hbar", repr(HBAR)), ("k_B", repr(K_B)), ("units", "frequencies and rates in units of omega_m")]
    return meta


# -- commands ------------------------------------------------------------------------


def cmd_morse(args, cfg):
    name = args.molecule
    if name not in MOLECULES:
        raise ConfigError(f"unknown molecule {name!r}; known: {', '.join(MOLECULES)}")
    spec = MOLECULES[name]
    rows = []
    ladder = level_ladder(spec)
    quantum = HBAR * spec.omega_e
    for lvl, nxt in zip(ladder, ladder[1:] + [None]):
        rows.append({
            "nu": lvl.nu,
            "energy_J": lvl.energy,
            "energy_over_hbar_omega_e": lvl.energy / quantum,
            "spacing_J": None if nxt is None else nxt.energy - lvl.energy,
        })
    wp = morse_frequency(spec)
    meta = _metadata("morse", args, None) + [
        ("molecule", name),
        ("nu_max", str(nu_max(spec))),
        ("omega_p_rad_s", repr(wp)),
        ("omega_p_direct_rad_s", repr(morse_frequency_direct(spec))),
        ("omega_p_over_2pi_Hz", repr(wp / (2 * math.pi))),
        ("width_ratio_computed", repr(width_ratio(spec))),
    ]
    if name in WIDTH_RATIOS:
        meta.append(("width_ratio_quoted", repr(WIDTH_RATIOS[name])))
    if name == "K2":
        readings = frequency_readings(spec.omega_e, spec.D_e)
        meta += [
            ("omega_p_if_omega_e_angular_Hz", repr(readings["angular"] / (2 * math.pi))),
            ("omega_p_if_omega_e_in_Hz_Hz", repr(readings["hertz"] / (2 * math.pi))),
            ("omega_p_quoted_Hz", repr(QUOTED_K2_OMEGA_P / (2 * math.pi))),
        ]
    return Table(("nu", "energy_J", "energy_over_hbar_omega_e", "spacing_J"), rows, meta), {}


def _single_point_matrices(args, cfg, spec, out):
    if not args.dump_matrices:
        return {}
    if out is None:
        raise UsageError("--dump-matrices needs --out")
    if spec.axes:
        raise UsageError("--dump-matrices works on a single operating point, not a sweep")
    np_ = normalize(point_config(cfg, spec).params())
    s = solve_steady(np_)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sys_ = build_linear_system(np_, s, spec.low_excitation, spec.noise_convention)
    stem = Path(out)
    return {
        stem.with_name(stem.stem + ".A.csv"): matrix_csv(sys_.a_matrix, sys_.basis),
        stem.with_name(stem.stem + ".D.csv"): matrix_csv(sys_.d_matrix, sys_.basis),
    }


def _check_single_point(cfg, spec):
    # a lone operating point reports bad input as a config error, not a row
    if not spec.axes:
        point_config(cfg, spec).params()


def cmd_steady(args, cfg):
    spec = _sweep_spec(args, cfg, max_axes=2)
    _check_single_point(cfg, spec)
    table = run_steady(cfg, spec, args.workers)
    table.metadata = _metadata("steady", args, cfg, spec)
    if not spec.axes and table.rows[0]["status"] != "ok":
        raise SteadyStateError(table.rows[0]["status"])
    return table, _single_point_matrices(args, cfg, spec, args.out)


def cmd_spectrum(args, cfg):
    spec = _sweep_spec(args, cfg, max_axes=0)
    grid = _parse_grid(args.grid)
    table = run_spectrum(cfg, grid, spec)
    table.metadata = _metadata("spectrum", args, cfg, spec) + [("grid", args.grid)]
    return table, {}


def cmd_cool(args, cfg):
    spec = _sweep_spec(args, cfg, max_axes=1)
    _check_single_point(cfg, spec)
    table = run_cooling_sweep(spec, cfg, args.workers)
    table.metadata = _metadata("cool", args, cfg, spec)
    if not spec.axes and table.rows[0]["status"] != "ok":
        raise SteadyStateError(table.rows[0]["status"])
    return table, _single_point_matrices(args, cfg, spec, args.out)


def cmd_tempmap(args, cfg):
    spec = _sweep_spec(args, cfg, max_axes=2, min_axes=2)
    table = run_cooling_sweep(spec, cfg, args.workers)
    table.metadata = _metadata("tempmap", args, cfg, spec)
    return table, {}


def cmd_validate(args, cfg):
    from molcool.validate import validate_point

    spec = _sweep_spec(args, cfg, max_axes=0)
    np_ = normalize(point_config(cfg, spec).params())
    checks = validate_point(
        np_,
        low_excitation=spec.low_excitation,
        noise_convention=spec.noise_convention,
        seed=args.seed,
        n_trajectories=args.trajectories,
        courant=args.courant,
    )
    rows = [c.row() for c in checks]
    meta = _metadata("validate", args, cfg, spec) + [("seed", str(args.seed))]
    table = Table(("check", "value", "tolerance", "passed", "detail"), rows, meta)
    return table, {}


COMMANDS = {
    "morse": cmd_morse,
    "steady": cmd_steady,
    "spectrum": cmd_spectrum,
    "cool": cmd_cool,
    "tempmap": cmd_tempmap,
    "validate": cmd_validate,
}


def run(argv=None):
    """Parse ``argv`` and execute; returns ``(exit_code, table)``."""
    args = build_parser().parse_args(argv)
    man = _apply_manifest(args) if args.from_manifest else None
    cfg = _load(args, man, required=args.command not in ("morse", "validate"))
    if cfg is None and args.command == "validate":
        cfg = _load(argparse.Namespace(config="regression", command="validate"))
    table, extra = COMMANDS[args.command](args, cfg)
    if args.out:
        manifest = manifest_for(args.command, cfg, _options(args), seed=args.seed)
        write_outputs(table, args.out, manifest, as_json=args.json, extra=extra)
    else:
        sys.stdout.write(render_json(table) if args.json else render_csv(table))
    code = EXIT_OK
    if args.command == "validate" and not all(r["passed"] in (True, None) for r in table.rows):
        code = EXIT_NUMERIC
    return code, table


def main(argv=None):
    try:
        code, _ = run(argv)
    except (ConfigError, ParameterError, KeyError) as exc:
        print(f"molcool: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SteadyStateError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"molcool: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
