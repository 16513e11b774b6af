"""Physical inputs, derived constants and the dimensionless working system.

Everything downstream of :func:`normalize` works in units where the bare
mechanical angular frequency ``omega_m`` equals one: rates and frequencies
are divided by ``omega_m``, times are multiplied by it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from molcool.constants import HBAR, K_B


class ParameterError(ValueError):
    """Raised when a parameter set violates its invariants."""


@dataclass(frozen=True)
class MoleculeSpec:
    """Morse parameters of a diatomic molecule (SI units).

    ``omega_e`` is the fundamental vibrational angular frequency, ``D_e`` the
    well depth, ``mu`` the reduced mass and ``r_e`` the equilibrium bond
    length (only needed to evaluate the potential curve).
    """

    omega_e: float
    D_e: float
    mu: float
    r_e: float | None = None
    name: str = ""

    def __post_init__(self):
        for key in ("omega_e", "D_e", "mu"):
            if not getattr(self, key) > 0:
                raise ParameterError(f"molecule {key} must be positive, got {getattr(self, key)}")
        if self.r_e is not None and not self.r_e > 0:
            raise ParameterError(f"molecule r_e must be positive, got {self.r_e}")
        if 2.0 * self.D_e / (HBAR * self.omega_e) < 1.0:
            raise ParameterError("well too shallow: 2 D_e / (hbar omega_e) < 1, no bound level")

    @property
    def range_parameter(self):
        """Morse range ``a = omega_e sqrt(mu / 2 D_e)`` in 1/m."""
        return self.omega_e * math.sqrt(self.mu / (2.0 * self.D_e))

    @property
    def level_count_parameter(self):
        """``2 D_e / (hbar omega_e)``, the (real-valued) bound-level scale."""
        return 2.0 * self.D_e / (HBAR * self.omega_e)


@dataclass(frozen=True)
class PhysicalParams:
    """All SI inputs of one operating point.

    Frequencies and rates are angular (rad/s).  ``omega_0`` (drive frequency)
    may be omitted when both effective detunings ``delta_f`` and ``delta_p``
    are supplied, which is how the cooling figures are parameterised.

    ``gamma_m`` overrides the value derived from ``q_factor``; ``omega_p``
    overrides the value derived from ``molecule``.
    """

    omega_m: float
    mass_m: float
    q_factor: float
    d: float
    omega_f: float
    gamma_f: float
    drive_power: float
    temperature: float
    g_coupling: float
    gamma_p: float
    omega_0: float | None = None
    zeta0_s: float = -1.0
    molecule: MoleculeSpec | None = None
    omega_p: float | None = None
    gamma_m: float | None = None
    delta_f: float | None = None
    delta_p: float | None = None

    def __post_init__(self):
        positive = ("omega_m", "mass_m", "q_factor", "d", "omega_f", "gamma_f")
        for key in positive:
            value = getattr(self, key)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{key} must be positive and finite, got {value}")
        nonneg = ("drive_power", "temperature", "gamma_p")
        for key in nonneg:
            value = getattr(self, key)
            if not (math.isfinite(value) and value >= 0):
                raise ParameterError(f"{key} must be non-negative and finite, got {value}")
        if not math.isfinite(self.g_coupling):
            raise ParameterError("g_coupling must be finite")
        if self.gamma_m is not None and not self.gamma_m > 0:
            raise ParameterError(f"gamma_m must be positive, got {self.gamma_m}")
        if self.omega_p is not None and not self.omega_p >= 0:
            raise ParameterError(f"omega_p must be non-negative, got {self.omega_p}")
        if not math.isfinite(self.zeta0_s) or self.zeta0_s == 0.0:
            raise ParameterError("zeta0_s must be finite and nonzero")
        if self.omega_0 is None and (self.delta_f is None or self.delta_p is None):
            raise ParameterError(
                "omega_0 is required unless both effective detunings delta_f and delta_p are given"
            )

    def with_updates(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True)
class NormalizedParams:
    """Dimensionless parameters (frequencies and rates in units of omega_m).

    ``delta_p`` is the combination ``omega_p + omega_0`` appearing in the
    molecular coherence equation; the effective molecular detuning is
    :attr:`delta_p_eff`.  ``delta_0f`` is the bare cavity detuning; when the
    operating point is specified by its *effective* detuning instead,
    ``delta_0f`` is ``None`` and ``delta_f_target`` is set.
    """

    omega_m: float  # rad/s, kept for unit restoration
    delta_0f: float | None
    delta_0p: float | None
    delta_p: float
    omega_p: float
    gamma_f: float
    gamma_m: float
    gamma_p: float
    g: float
    G0: float
    epsilon0: float
    n_bar: float
    n_m: float
    zeta0_s: float
    delta_f_target: float | None = None
    omega_f: float = 0.0
    omega_0: float | None = None
    # SI scalars that have no dimensionless counterpart; kept for round trips.
    si: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def delta_p_eff(self):
        """Effective molecular detuning ``delta_p + 2 omega_p zeta0_s``."""
        return self.delta_p + 2.0 * self.omega_p * self.zeta0_s

    def with_updates(self, **changes):
        return replace(self, **changes)


def single_photon_coupling(p: PhysicalParams) -> float:
    """Optomechanical coupling ``G_0 = omega_f / (2 d) * sqrt(hbar / (m omega_m))`` in rad/s."""
    x_zpf = math.sqrt(HBAR / (p.mass_m * p.omega_m))
    return p.omega_f * x_zpf / (2.0 * p.d)


def drive_strength(p: PhysicalParams) -> float:
    """Cavity drive rate ``epsilon_0 = sqrt(2 gamma_f P_c / (hbar omega_f))`` in rad/s."""
    return math.sqrt(2.0 * p.gamma_f * p.drive_power / (HBAR * p.omega_f))


def thermal_occupancy(omega, T):
    """Bose-Einstein occupancy ``1 / (exp(hbar omega / k_B T) - 1)``; zero at ``T = 0``."""
    if omega <= 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    if T < 0:
        raise ParameterError(f"temperature must be non-negative, got {T}")
    if T == 0:
        return 0.0
    x = HBAR * omega / K_B / T
    if x > 700.0:  # expm1 would overflow; the occupancy is exp(-x) to double precision
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def dipole_coupling(dipole_moment, c0, inductance, omega_f, d):
    """Molecule-field coupling rate from the capacitor geometry (rad/s).

    Uses ``hbar g = p12 * Q_zpf / (C_0 d)`` with the charge zero-point
    amplitude ``Q_zpf = sqrt(hbar / (2 omega_f L))``; ``dipole_moment`` is the
    projection of the transition dipole on the field axis (C m).
    """
    q_zpf = math.sqrt(HBAR / (2.0 * omega_f * inductance))
    return dipole_moment * q_zpf / (HBAR * c0 * d)


def mechanical_damping(p: PhysicalParams) -> float:
    """Mechanical amplitude damping rate (rad/s): override or ``omega_m / (2 Q)``."""
    if p.gamma_m is not None:
        return p.gamma_m
    return p.omega_m / (2.0 * p.q_factor)


def molecular_frequency(p: PhysicalParams) -> float:
    """Effective molecular frequency ``omega_p`` in rad/s."""
    if p.omega_p is not None:
        return p.omega_p
    if p.molecule is not None:
        from molcool.morse import morse_frequency

        return morse_frequency(p.molecule)
    if p.g_coupling != 0.0:
        raise ParameterError("omega_p undetermined: give omega_p or a molecule when g_coupling != 0")
    return 0.0


def normalize(p: PhysicalParams) -> NormalizedParams:
    wm = p.omega_m
    omega_p = molecular_frequency(p) / wm
    omega_0 = None if p.omega_0 is None else p.omega_0 / wm
    if p.delta_p is not None:
        delta_p = p.delta_p / wm - 2.0 * omega_p * p.zeta0_s
    else:
        delta_p = omega_p + omega_0
    delta_0p = None if omega_0 is None else omega_p - omega_0
    if p.delta_f is not None:
        delta_0f, target = None, p.delta_f / wm
    else:
        delta_0f, target = p.omega_f / wm - omega_0, None
    return NormalizedParams(
        omega_m=wm,
        delta_0f=delta_0f,
        delta_0p=delta_0p,
        delta_p=delta_p,
        omega_p=omega_p,
        gamma_f=p.gamma_f / wm,
        gamma_m=mechanical_damping(p) / wm,
        gamma_p=p.gamma_p / wm,
        g=p.g_coupling / wm,
        G0=single_photon_coupling(p) / wm,
        epsilon0=drive_strength(p) / wm,
        n_bar=thermal_occupancy(p.omega_f, p.temperature),
        n_m=thermal_occupancy(p.omega_m, p.temperature),
        zeta0_s=p.zeta0_s,
        delta_f_target=target,
        omega_f=p.omega_f / wm,
        omega_0=omega_0,
        si={
            "mass_m": p.mass_m,
            "q_factor": p.q_factor,
            "d": p.d,
            "drive_power": p.drive_power,
            "temperature": p.temperature,
            "molecule": p.molecule,
            "gamma_m_given": p.gamma_m is not None,
            "omega_p_given": p.omega_p is not None,
            "delta_p_given": p.delta_p is not None,
        },
    )


def denormalize(n: NormalizedParams) -> PhysicalParams:
    """Inverse of :func:`normalize` (up to floating-point rounding)."""
    wm = n.omega_m
    si = n.si
    if not si:
        raise ParameterError("NormalizedParams was not produced by normalize(); SI scalars missing")
    return PhysicalParams(
        omega_m=wm,
        mass_m=si["mass_m"],
        q_factor=si["q_factor"],
        d=si["d"],
        omega_f=n.omega_f * wm,
        gamma_f=n.gamma_f * wm,
        drive_power=si["drive_power"],
        temperature=si["temperature"],
        g_coupling=n.g * wm,
        gamma_p=n.gamma_p * wm,
        omega_0=None if n.omega_0 is None else n.omega_0 * wm,
        zeta0_s=n.zeta0_s,
        molecule=si["molecule"],
        omega_p=n.omega_p * wm if si["omega_p_given"] else None,
        gamma_m=n.gamma_m * wm if si["gamma_m_given"] else None,
        delta_f=None if n.delta_f_target is None else n.delta_f_target * wm,
        delta_p=n.delta_p_eff * wm if si["delta_p_given"] else None,
    )


def describe(p: PhysicalParams) -> dict:
    """Flat JSON-friendly view of a parameter set (molecule expanded)."""
    out = {}
    for f in fields(p):
        value = getattr(p, f.name)
        if isinstance(value, MoleculeSpec):
            value = {k.name: getattr(value, k.name) for k in fields(value)}
        out[f.name] = value
    return out
