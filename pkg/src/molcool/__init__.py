"""Cooling of a nanomechanical resonator coupled to a single Morse molecule
through a driven microwave LC cavity.

The package is organised bottom-up:

``params``        SI inputs, derived constants, normalisation to units of omega_m
``morse``         Morse potential, vibrational ladder, effective molecular frequency
``steadystate``   semiclassical fixed point of the driven hybrid system
``linear``        drift / diffusion matrices of the linearised fluctuations
``stability``     stability verdicts, Lyapunov covariance, n_eff and T_eff
``response``      mechanical susceptibility, effective frequency and damping
``sde``           time-domain oracles (Euler-Maruyama, semiclassical ODE)
``sweep``         config files, parameter sweeps, CSV/manifest output
``cli``           command-line entry point
"""

from molcool.params import (
    MoleculeSpec,
    NormalizedParams,
    PhysicalParams,
    drive_strength,
    normalize,
    single_photon_coupling,
    thermal_occupancy,
)
from molcool.steadystate import SteadyState, solve_steady, steady_residual
from molcool.linear import LinearSystem, build_linear_system, reduce_low_excitation
from molcool.stability import (
    CoolingResult,
    cooling_point,
    effective_occupancy,
    effective_temperature,
    is_stable,
    stationary_covariance,
)
from molcool.response import (
    effective_damping,
    effective_frequency,
    spectrum,
    susceptibility,
    transfer_function_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "MoleculeSpec",
    "NormalizedParams",
    "PhysicalParams",
    "drive_strength",
    "normalize",
    "single_photon_coupling",
    "thermal_occupancy",
    "SteadyState",
    "solve_steady",
    "steady_residual",
    "LinearSystem",
    "build_linear_system",
    "reduce_low_excitation",
    "CoolingResult",
    "cooling_point",
    "effective_occupancy",
    "effective_temperature",
    "is_stable",
    "stationary_covariance",
    "effective_damping",
    "effective_frequency",
    "spectrum",
    "susceptibility",
    "transfer_function_oracle",
]
