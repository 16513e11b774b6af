"""Physical constants (CODATA 2018 exact/recommended values) used throughout."""

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
AMU = 1.66053906660e-27  # kg
EV = 1.602176634e-19  # J
C_LIGHT = 2.99792458e8  # m / s


def as_dict():
    return {"hbar": HBAR, "k_B": K_B, "amu": AMU, "eV": EV, "c": C_LIGHT}
