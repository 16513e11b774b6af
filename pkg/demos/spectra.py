"""Effective mechanical frequency and damping across probe frequency."""

import numpy as np

from molcool.config import parse_config_text, resolve_config_path
from molcool.params import normalize
from molcool.response import NegativeRadicand, effective_damping, effective_frequency
from molcool.steadystate import solve_steady

cfg = parse_config_text(resolve_config_path("regression").read_text(), "regression")
np_ = normalize(cfg.params())
s = solve_steady(np_)
print("omega/omega_m  omega_eff/omega_m  gamma_eff/omega_m")
for w in np.linspace(0.5, 1.5, 11):
    try:
        w_eff = f"{effective_frequency(np_, s, w):.6f}"
    except NegativeRadicand:
        w_eff = "n/a"
    print(f"{w:13.2f}  {w_eff:>17}  {effective_damping(np_, s, w):.6e}")
