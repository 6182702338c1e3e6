"""Field of a 1 um loop carrying 1 mA: on-axis check and the far-field dipole limit."""

import math

import numpy as np

from squidbec.constants import MU_0
from squidbec.loop_field import FieldPoint, LoopGeometry, magnetic_field_cartesian, vector_potential

loop = LoopGeometry(1e-6)
I = 1e-3

print("z [um]   B_z [T]        closed form    ")
for z in (0.0, 0.5e-6, 1e-6, 5e-6, 50e-6):
    Bz = magnetic_field_cartesian(np.array([[0, 0, z]]), loop, I)[0, 2]
    exact = MU_0 * I * loop.radius**2 / (2 * (loop.radius**2 + z**2) ** 1.5)
    print(f"{z * 1e6:6.1f}   {Bz:.6e}   {exact:.6e}")

print("\nA_phi relative to the point dipole at theta = 0.7:")
m = I * math.pi * loop.radius**2
for ratio in (3, 10, 100, 1000):
    r = ratio * loop.radius
    dipole = MU_0 / (4 * math.pi) * m * math.sin(0.7) / r**2
    print(f"  r = {ratio:5d} d   A/A_dipole - 1 = {vector_potential(FieldPoint(r, 0.7), loop, I) / dipole - 1:+.2e}")
