"""Walk through the rf-SQUID double well at beta_L = 2.1 near half a flux quantum."""

from squidbec.constants import HBAR, TWO_PI
from squidbec.squid_circuit import SquidParams, analyze_double_well, find_extrema, reduced_potential

params = SquidParams.from_reduced(2.1, 0.51, L=100e-12, C=5e-15)
print(f"beta_L = {params.beta_L:.3f}, U0 = {params.U0:.3e} J")

for e in find_extrema(params):
    print(f"  {e.kind:3s} at phi = {e.phi:+.6f}  U/U0 = {reduced_potential(e.phi, 0.51, 2.1):+.4f}")

a = analyze_double_well(params)
print(f"well frequencies: {a.omega_L / TWO_PI / 1e9:.2f} GHz, {a.omega_R / TWO_PI / 1e9:.2f} GHz")
print(f"barrier height  : {a.barrier_height / (HBAR * a.omega_L):.1f} hbar*omega_L")
print(f"bias            : epsilon/2pi = {a.epsilon / TWO_PI / 1e9:.3f} GHz")
print(f"circulating I   : {a.I_circ * 1e6:.2f} uA")
print(f"tunnelling est. : {a.delta_est:.3e} rad/s (Gaussian-overlap estimate)")
