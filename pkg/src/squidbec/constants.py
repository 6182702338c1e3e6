"""Physical constants in SI units."""

import math

from scipy import constants as _c

HBAR = _c.hbar
H_PLANCK = _c.h
E_CHARGE = _c.e
MU_0 = _c.mu_0
MU_B = _c.physical_constants["Bohr magneton"][0]
AMU = _c.physical_constants["atomic mass constant"][0]

PHI_0 = H_PLANCK / (2 * E_CHARGE)
"""Magnetic flux quantum h/2e [Wb]."""

TWO_PI = 2 * math.pi

RB87_MASS = 86.909180527 * AMU
RB87_HFS = TWO_PI * 6.835e9
"""Rb-87 ground-state hyperfine splitting as an angular frequency [rad/s]."""
