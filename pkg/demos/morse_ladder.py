"""Vibrational ladders of the shipped molecules and their effective frequencies."""

from molcool.morse import MOLECULES, level_ladder, morse_frequency, nu_max

for name in ("K2", "HCl", "HI", "NO"):
    mol = MOLECULES[name]
    ladder = level_ladder(mol)
    print(f"{name}: nu_max = {nu_max(mol)}, {len(ladder)} bound levels, "
          f"omega_p / 2pi = {morse_frequency(mol) / 6.283185307179586:.4e} Hz")
