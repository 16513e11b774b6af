"""``key = value`` parameter files.

One assignment per line, ``#`` starts a comment.  Values are SI (rad/s for
frequencies and rates) unless the key carries a unit suffix:

``_over_2pi``
    ordinary frequency in Hz; multiplied by 2 pi.  A coupling quoted as
    "g = 5 kHz" is written ``g_coupling_over_2pi = 5e3``.
``_over_omega_m``
    in units of the mechanical frequency.

A parameter may appear only once, whatever spelling is used.  Unknown keys,
duplicates and malformed numbers are errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from molcool.constants import HBAR
from molcool.morse import MOLECULES, WIDTH_RATIOS, omega_p_from_width_ratio, width_ratio
from molcool.params import ParameterError, PhysicalParams

# parameters that accept the frequency suffixes
FREQUENCY_KEYS = (
    "omega_m",
    "omega_f",
    "omega_0",
    "omega_p",
    "gamma_f",
    "gamma_m",
    "gamma_p",
    "g_coupling",
    "delta_f",
    "delta_p",
    "delta_p_ratio",
)
PLAIN_KEYS = ("mass_m", "q_factor", "d", "drive_power", "temperature", "zeta0_s", "width_ratio")
TEXT_KEYS = ("molecule", "noise_convention")
BOOL_KEYS = ("low_excitation",)
REQUIRED = (
    "omega_m",
    "mass_m",
    "q_factor",
    "d",
    "omega_f",
    "gamma_f",
    "drive_power",
    "temperature",
    "g_coupling",
    "gamma_p",
)

KEY_HELP = {
    "omega_m": "mechanical frequency",
    "mass_m": "resonator mass (kg)",
    "q_factor": "mechanical quality factor",
    "d": "capacitor gap (m)",
    "omega_f": "cavity frequency",
    "omega_0": "drive frequency (or give delta_f and delta_p)",
    "omega_p": "molecular frequency hbar a^2 / 2 mu (overrides molecule / width_ratio)",
    "gamma_f": "cavity amplitude decay",
    "gamma_m": "mechanical damping (default omega_m / 2Q)",
    "gamma_p": "molecular damping",
    "g_coupling": "molecule-field coupling",
    "delta_f": "effective cavity detuning",
    "delta_p": "effective molecular detuning",
    "delta_p_ratio": "Delta_p / |zeta0_s|",
    "drive_power": "drive power (W)",
    "temperature": "bath temperature (K)",
    "zeta0_s": "steady molecular inversion (default -1)",
    "width_ratio": "omega_e / sqrt(2 D_e) in SI; sets omega_p = hbar ratio^2 / 2",
    "molecule": "K2, HCl, HI or NO",
    "noise_convention": "paper or half",
    "low_excitation": "freeze the inversion fluctuation (true/false)",
}

_SUFFIXES = {"_over_2pi": 2.0 * math.pi, "_over_omega_m": None}
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


class ConfigError(ValueError):
    pass


class UnknownMolecule(ConfigError, KeyError):
    def __str__(self):
        return ConfigError.__str__(self)


def canonical_key(key):
    """``(parameter, suffix)`` for a config key; raises for unknown keys."""
    for suffix in _SUFFIXES:
        if key.endswith(suffix):
            base = key[: -len(suffix)]
            if base in FREQUENCY_KEYS:
                if base == "omega_m" and suffix == "_over_omega_m":
                    break
                return base, suffix
            break
    if key in FREQUENCY_KEYS or key in PLAIN_KEYS or key in TEXT_KEYS or key in BOOL_KEYS:
        return key, ""
    raise ConfigError(f"unknown key {key!r}")


def parse_number(text, where=""):
    t = text.strip()
    if not _NUMBER.match(t):
        raise ConfigError(f"malformed number {text!r}{where}")
    value = float(t)
    if not math.isfinite(value):
        raise ConfigError(f"non-finite number {text!r}{where}")
    return value


def _parse_bool(text, where):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected true/false, got {text!r}{where}")


@dataclass(frozen=True)
class MoleculePreset:
    name: str
    width_ratio: float  # omega_e / sqrt(2 D_e), SI (s^-1 J^-1/2)
    omega_p: float  # rad/s, hbar ratio^2 / 2
    omega_e: float | None = None
    D_e: float | None = None


def molecule_presets(name) -> MoleculePreset:
    """Width ratio and molecular frequency for a named molecule.

    HCl, HI and NO carry their quoted ``omega_e / sqrt(2 D_e)``; K2 is built
    from its quoted ``omega_e`` and ``D_e``.
    """
    if name in WIDTH_RATIOS:
        r = WIDTH_RATIOS[name]
        return MoleculePreset(name, r, omega_p_from_width_ratio(r))
    if name == "K2":
        spec = MOLECULES["K2"]
        r = width_ratio(spec)
        return MoleculePreset(name, r, omega_p_from_width_ratio(r), spec.omega_e, spec.D_e)
    raise UnknownMolecule(f"unknown molecule {name!r}; known: K2, HCl, HI, NO")


@dataclass
class Config:
    """Parsed parameter file: canonical values plus run flags.

    ``values`` maps parameter names to SI numbers, except entries given
    ``_over_omega_m``, which stay relative until :meth:`params` resolves them
    (so a sweep over ``omega_m`` keeps them relative).
    """

    values: dict = field(default_factory=dict)
    relative: dict = field(default_factory=dict)  # parameter -> value in units of omega_m
    text: dict = field(default_factory=dict)
    source: str = ""
    path: str | None = None

    def copy(self):
        return Config(dict(self.values), dict(self.relative), dict(self.text), self.source, self.path)

    def set(self, key, value):
        """Assign one parameter by config key (suffix conventions apply)."""
        base, suffix = canonical_key(key)
        self.values.pop(base, None)
        self.relative.pop(base, None)
        self.text.pop(base, None)
        if base in TEXT_KEYS:
            self.text[base] = str(value).strip()
        elif base in BOOL_KEYS:
            self.text[base] = "true" if _coerce_bool(value) else "false"
        elif suffix == "_over_omega_m":
            self.relative[base] = float(value)
        elif suffix == "_over_2pi":
            self.values[base] = float(value) * 2.0 * math.pi
        else:
            self.values[base] = float(value)
        return self

    @property
    def flags(self):
        return {
            "low_excitation": self.text.get("low_excitation", "false") == "true",
            "noise_convention": self.text.get("noise_convention", "paper"),
        }

    def _resolved(self):
        v = dict(self.values)
        if "omega_m" not in v:
            raise ConfigError("missing required key: omega_m")
        for k, rel in self.relative.items():
            v[k] = rel * v["omega_m"]
        return v

    def params(self) -> PhysicalParams:
        missing = [k for k in REQUIRED if k not in self.values and k not in self.relative]
        has_drive = "omega_0" in self.values or "omega_0" in self.relative
        has_eff = ("delta_f" in self.values or "delta_f" in self.relative) and any(
            k in self.values or k in self.relative for k in ("delta_p", "delta_p_ratio")
        )
        if not has_drive and not has_eff:
            missing.append("omega_0 (or delta_f with delta_p / delta_p_ratio)")
        if missing:
            raise ConfigError("missing required keys: " + ", ".join(missing))
        v = self._resolved()
        kw = {k: v[k] for k in REQUIRED}
        zeta0 = v.get("zeta0_s", -1.0)
        kw["zeta0_s"] = zeta0
        for k in ("omega_0", "gamma_m", "delta_f", "delta_p"):
            if k in v:
                kw[k] = v[k]
        if "delta_p_ratio" in v:
            if "delta_p" in v:
                raise ConfigError("give delta_p or delta_p_ratio, not both")
            kw["delta_p"] = v["delta_p_ratio"] * abs(zeta0)
        sources = [k for k in ("omega_p", "width_ratio") if k in v]
        if len(sources) > 1:
            raise ConfigError("give omega_p or width_ratio, not both")
        name = self.text.get("molecule")
        if name is not None:
            preset = molecule_presets(name)
            if name in MOLECULES:
                kw["molecule"] = MOLECULES[name]
            if not sources:
                kw["omega_p"] = preset.omega_p
        if "omega_p" in v:
            kw["omega_p"] = v["omega_p"]
        elif "width_ratio" in v:
            kw["omega_p"] = 0.5 * HBAR * v["width_ratio"] ** 2
        if self.flags["noise_convention"] not in ("paper", "half"):
            raise ConfigError(f"noise_convention must be paper or half, got {self.flags['noise_convention']!r}")
        try:
            return PhysicalParams(**kw)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc


def _coerce_bool(value):
    if isinstance(value, bool):
        return value
    return _parse_bool(str(value), "")


def parse_config_text(text, path=None) -> Config:
    cfg = Config(source=text, path=path)
    seen = {}
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f" (line {lineno})"
        if "=" not in line:
            errors.append(f"expected 'key = value'{where}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            base, suffix = canonical_key(key)
        except ConfigError as exc:
            errors.append(f"{exc}{where}")
            continue
        if base in seen:
            errors.append(f"duplicate parameter {base!r} on lines {seen[base]} and {lineno}")
            continue
        seen[base] = lineno
        try:
            if base in TEXT_KEYS:
                cfg.set(key, value)
            elif base in BOOL_KEYS:
                cfg.set(key, _parse_bool(value, where))
            else:
                cfg.set(key, parse_number(value, where))
        except ConfigError as exc:
            errors.append(str(exc))
    if errors:
        raise ConfigError("; ".join(errors))
    return cfg


def load_config(path) -> Config:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(p.read_text(), str(p))


def parse_config(path):
    """Read a parameter file; returns ``(PhysicalParams, flags)``."""
    cfg = load_config(path)
    return cfg.params(), cfg.flags


def preset_path(name):
    """Path of a shipped preset (``fig3`` ... ``fig8``, ``lowpower``, ``regression``)."""
    from importlib import resources

    stem = name[:-4] if name.endswith(".cfg") else name
    ref = resources.files("molcool") / "presets" / f"{stem}.cfg"
    if not ref.is_file():
        raise ConfigError(f"no shipped preset named {name!r}")
    return Path(str(ref))


def resolve_config_path(name_or_path):
    p = Path(name_or_path)
    if p.is_file():
        return p
    return preset_path(name_or_path)
