"""Collective Rabi frequency of a 10^6-atom condensate above the loop, versus separation."""

import numpy as np

from squidbec.bec_coupling import BecParams, compute_coupling
from squidbec.constants import TWO_PI
from squidbec.loop_field import LoopGeometry

loop = LoopGeometry(1e-6)
print("height [um]   |Omega|/2pi [Hz]   zz/|Omega|")
for h in np.geomspace(10e-6, 200e-6, 7):
    res = compute_coupling(BecParams(trap_center=(0.0, 0.0, h)), loop, 1e-3)
    print(f"{h * 1e6:10.1f}   {abs(res.omega_rabi) / TWO_PI:16.4e}   {abs(res.zz_coupling / res.omega_rabi):.2e}")

# sqrt(N) enhancement
base = compute_coupling(BecParams(), loop, 1e-3).omega_rabi
for N in (10**4, 10**6, 10**8):
    w = compute_coupling(BecParams(N=N), loop, 1e-3).omega_rabi
    print(f"N = {N:.0e}: |Omega|/|Omega(1e6)| = {abs(w / base):.3f}")
