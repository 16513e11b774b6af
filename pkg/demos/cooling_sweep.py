"""Detuning sweep of the mechanical occupancy with and without the molecule.

Uses the weak-drive ``lowpower`` preset in the low-excitation picture, where
the linearised dynamics are stable across the window.
"""

import numpy as np

from molcool.config import parse_config_text, resolve_config_path
from molcool.params import normalize
from molcool.stability import cooling_point


def params(**overrides):
    cfg = parse_config_text(resolve_config_path("lowpower").read_text(), "lowpower")
    for key, value in overrides.items():
        cfg.set(key, value)
    return normalize(cfg.params())


print("delta_f/omega_m  n_eff(g=10 kHz)  n_eff(g=0)")
for df in np.linspace(0.8, 1.2, 9):
    with_mol = cooling_point(params(delta_f_over_omega_m=df), low_excitation=True)
    bare = cooling_point(params(delta_f_over_omega_m=df, g_coupling=0), low_excitation=True)
    print(f"{df:15.3f}  {with_mol.n_eff:15.8f}  {bare.n_eff:10.8f}")
