"""Parameter sweeps, tabular output and run manifests.

A sweep is a base :class:`~molcool.config.Config` plus up to two axes over
config keys (``delta_f_over_omega_m``, ``g_coupling_over_2pi`` ...).  Every
grid point is evaluated independently, so points may be farmed out to a
process pool; rows always come back in grid order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from molcool import __version__
from molcool.config import Config, ConfigError, canonical_key, parse_number, TEXT_KEYS, BOOL_KEYS
from molcool.constants import as_dict as constants_dict
from molcool.params import describe, normalize
from molcool.response import frequency_grid, spectrum
from molcool.stability import cooling_point
from molcool.steadystate import SteadyStateError, solve_steady

SPACINGS = ("linear", "log")


@dataclass(frozen=True)
class SweepAxis:
    key: str
    start: float
    stop: float
    n_points: int
    spacing: str = "linear"

    def __post_init__(self):
        base, _ = canonical_key(self.key)
        if base in TEXT_KEYS or base in BOOL_KEYS:
            raise ConfigError(f"cannot sweep non-numeric key {self.key!r}")
        if self.n_points < 2:
            raise ConfigError(f"sweep over {self.key} needs at least 2 points")
        if self.start == self.stop:
            raise ConfigError(f"sweep over {self.key} has start == stop")
        if self.spacing not in SPACINGS:
            raise ConfigError(f"spacing must be linear or log, got {self.spacing!r}")
        if self.spacing == "log" and not (self.start * self.stop > 0):
            raise ConfigError("log spacing needs start and stop of the same sign, both nonzero")

    @classmethod
    def parse(cls, text):
        """``key=start:stop:N[:log]``."""
        if "=" not in text:
            raise ConfigError(f"malformed sweep {text!r}; expected key=start:stop:N[:log]")
        key, rest = (t.strip() for t in text.split("=", 1))
        parts = rest.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"malformed sweep {text!r}; expected key=start:stop:N[:log]")
        start = parse_number(parts[0], f" in sweep {text!r}")
        stop = parse_number(parts[1], f" in sweep {text!r}")
        try:
            n = int(parts[2])
        except ValueError:
            raise ConfigError(f"point count must be an integer in sweep {text!r}") from None
        spacing = "linear"
        if len(parts) == 4:
            if parts[3] not in ("log", "lin", "linear"):
                raise ConfigError(f"unknown spacing {parts[3]!r} in sweep {text!r}")
            spacing = "log" if parts[3] == "log" else "linear"
        return cls(key, start, stop, n, spacing)

    def values(self):
        if self.spacing == "log":
            return np.geomspace(self.start, self.stop, self.n_points)
        return np.linspace(self.start, self.stop, self.n_points)

    def text(self):
        tail = ":log" if self.spacing == "log" else ""
        return f"{self.key}={self.start!r}:{self.stop!r}:{self.n_points}{tail}"


@dataclass(frozen=True)
class SweepSpec:
    axis1: SweepAxis | None = None
    axis2: SweepAxis | None = None
    overrides: tuple = ()  # ((key, value), ...) applied before the axes
    no_molecule: bool = False
    low_excitation: bool = False
    noise_convention: str = "paper"

    def __post_init__(self):
        if self.axis2 is not None and self.axis1 is None:
            raise ConfigError("second sweep axis given without a first")
        if self.axis1 is not None and self.axis2 is not None:
            if canonical_key(self.axis1.key)[0] == canonical_key(self.axis2.key)[0]:
                raise ConfigError("both sweep axes address the same parameter")
        if self.noise_convention not in ("paper", "half"):
            raise ConfigError(f"noise_convention must be paper or half, got {self.noise_convention!r}")

    @property
    def axes(self):
        return tuple(a for a in (self.axis1, self.axis2) if a is not None)

    def points(self):
        """Grid assignments in output order (first axis outermost)."""
        if self.axis1 is None:
            return [()]
        v1 = [(self.axis1.key, float(x)) for x in self.axis1.values()]
        if self.axis2 is None:
            return [(a,) for a in v1]
        v2 = [(self.axis2.key, float(x)) for x in self.axis2.values()]
        return [(a, b) for a in v1 for b in v2]


def point_config(base: Config, spec: SweepSpec, assignment=()) -> Config:
    cfg = base.copy()
    for key, value in spec.overrides:
        cfg.set(key, value)
    for key, value in assignment:
        cfg.set(key, value)
    if spec.no_molecule:
        cfg.set("g_coupling", 0.0)
    return cfg


# -- per-point work (module level so it pickles) ------------------------------


def _cooling_task(task):
    base, spec, assignment = task
    row = {key: value for key, value in assignment}
    try:
        cfg = point_config(base, spec, assignment)
        np_ = normalize(cfg.params())
        low = spec.low_excitation or cfg.flags["low_excitation"]
        res = cooling_point(np_, low_excitation=low, noise_convention=spec.noise_convention)
    except (SteadyStateError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        row.update(stable=False, n_eff=None, t_eff=None, max_re_eig=None, u_energy=None,
                   validity_ratio=None, flags="", status=f"error: {type(exc).__name__}: {exc}")
        return row
    row.update(
        stable=res.stable,
        n_eff=res.n_eff,
        t_eff=res.t_eff,
        max_re_eig=res.max_re_eig,
        u_energy=res.u_energy,
        validity_ratio=res.validity_ratio,
        flags=";".join(res.flags),
        status="ok",
    )
    return row


COOLING_COLUMNS = ("stable", "n_eff", "t_eff", "max_re_eig", "u_energy", "validity_ratio", "flags", "status")
SPECTRUM_COLUMNS = ("omega", "chi_re", "chi_im", "omega_eff", "gamma_eff", "chi_oracle_re", "chi_oracle_im", "gap")


def default_workers():
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def map_ordered(func, tasks, workers=None):
    """``[func(t) for t in tasks]``, optionally over a process pool (order kept)."""
    tasks = list(tasks)
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(tasks) < 2 * workers:
        return [func(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=chunk))


@dataclass
class Table:
    columns: tuple
    rows: list
    metadata: list = field(default_factory=list)  # [(key, value), ...]

    def column(self, name):
        return [r.get(name) for r in self.rows]


def run_cooling_sweep(spec: SweepSpec, base: Config, workers=1) -> Table:
    """Steady state, linear system, stability and covariance at every grid point.

    Points that fail (no steady state, singular system ...) are recorded in
    the ``status`` column; the sweep itself never aborts.
    """
    tasks = [(base, spec, a) for a in spec.points()]
    rows = map_ordered(_cooling_task, tasks, workers)
    cols = tuple(a.key for a in spec.axes) + COOLING_COLUMNS
    return Table(cols, rows)


def run_spectrum(base: Config, grid=None, spec: SweepSpec | None = None) -> Table:
    """Closed-form and matrix-oracle response on a frequency grid (units of omega_m)."""
    spec = spec or SweepSpec()
    cfg = point_config(base, spec)
    np_ = normalize(cfg.params())
    s = solve_steady(np_)
    omegas = frequency_grid() if grid is None else np.atleast_1d(np.asarray(grid, dtype=float))
    if np.any(omegas <= 0):
        raise ConfigError("response frequencies must be positive")
    rows = [p.row() for p in spectrum(np_, s, omegas)]
    return Table(SPECTRUM_COLUMNS, rows)


STEADY_COLUMNS = (
    "alpha_s_re", "alpha_s_im", "beta_s_re", "beta_s_im", "zeta_s_re", "zeta_s_im", "zeta0_s",
    "delta_f", "delta_0f", "delta_p_eff", "theta", "residual", "zeta0_rate", "n_branches", "method", "status",
)


def run_steady(base: Config, spec: SweepSpec | None = None, workers=1) -> Table:
    spec = spec or SweepSpec()
    rows = map_ordered(_steady_task, [(base, spec, a) for a in spec.points()], workers)
    cols = tuple(a.key for a in spec.axes) + STEADY_COLUMNS
    return Table(cols, rows)


def _steady_task(task):
    base, spec, assignment = task
    row = {key: value for key, value in assignment}
    try:
        np_ = normalize(point_config(base, spec, assignment).params())
        row.update(solve_steady(np_).as_dict(), status="ok")
    except (SteadyStateError, ArithmeticError, ValueError) as exc:
        row["status"] = f"error: {type(exc).__name__}: {exc}"
    return row


# -- output --------------------------------------------------------------------


def format_value(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return format(v, ".17g")
    return str(v)


def render_csv(table: Table) -> str:
    buf = io.StringIO()
    for key, value in table.metadata:
        buf.write(f"# {key}: {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([format_value(row.get(c)) for c in table.columns])
    return buf.getvalue()


def read_csv(path):
    """``(metadata, columns, rows)``; rows hold the raw strings."""
    meta, body = [], []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta.append((key, value))
        else:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    return meta, columns, [dict(zip(columns, r)) for r in reader]


def _json_value(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def render_json(table: Table) -> str:
    doc = {
        "metadata": dict(table.metadata),
        "columns": list(table.columns),
        "rows": [{c: _json_value(r.get(c)) for c in table.columns} for r in table.rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    """Everything needed to regenerate an output file bit for bit."""

    command: str
    config_text: str
    config_path: str | None
    options: dict  # overrides, sweeps, flags, grid, seed ...
    seed: int | None
    version: str = __version__
    constants: dict = field(default_factory=constants_dict)
    conventions: dict = field(default_factory=dict)
    resolved_si: dict = field(default_factory=dict)
    normalized: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)  # file name -> sha256
    timestamp: str = ""
    python: str = field(default_factory=lambda: sys.version.split()[0])
    numpy: str = field(default_factory=lambda: np.__version__)

    def to_json(self):
        return json.dumps(asdict(self), indent=1, default=_json_default) + "\n"

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in doc.items() if k in known})

    def write(self, path):
        Path(path).write_text(self.to_json())


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if hasattr(obj, "__dataclass_fields__"):
        return asdict(obj)
    return str(obj)


CONVENTIONS = {
    "frequencies": "angular (rad/s) unless the key ends in _over_2pi (Hz, times 2 pi) or _over_omega_m",
    "quoted_kHz_couplings": "g = 5 kHz is read as g / 2pi = 5e3 Hz, i.e. 2 pi 5e3 rad/s",
    "gamma_m": "omega_m / (2 Q) unless given",
    "drift": "du/dt = -A u + xi, <xi xi^T> = D delta(t - t')",
    "n_eff": "(V_11 + V_22) / 2 - 1/2",
}


def manifest_for(command, cfg: Config, options, seed=None):
    man = RunManifest(
        command=command,
        config_text=cfg.source if cfg is not None else "",
        config_path=cfg.path if cfg is not None else None,
        options=options,
        seed=seed,
        conventions=dict(CONVENTIONS),
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    if cfg is not None:
        try:
            p = cfg.params()
            man.resolved_si = describe(p)
            n = normalize(p)
            man.normalized = {f.name: getattr(n, f.name) for f in fields(n) if f.name != "si"}
            man.normalized["delta_p_eff"] = n.delta_p_eff
        except (ConfigError, ValueError):
            pass
    return man


def write_outputs(table: Table, out, manifest: RunManifest | None, as_json=False, extra=None):
    """Write CSV (and JSON mirror), plus the manifest alongside; returns written paths."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = [out]
    out.write_text(render_csv(table))
    if as_json:
        jpath = out.with_suffix(".json")
        jpath.write_text(render_json(table))
        written.append(jpath)
    for path, text in (extra or {}).items():
        Path(path).write_text(text)
        written.append(Path(path))
    if manifest is not None:
        manifest.outputs = {p.name: sha256_file(p) for p in written}
        mpath = manifest_path(out)
        manifest.write(mpath)
        written.append(mpath)
    return written


def manifest_path(out):
    out = Path(out)
    return out.with_name(out.name + ".manifest.json")


def matrix_csv(matrix, basis):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row"] + list(basis))
    for label, row in zip(basis, np.asarray(matrix)):
        w.writerow([label] + [format_value(float(x)) for x in row])
    return buf.getvalue()


def quiet(func, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return func(*args, **kwargs)
