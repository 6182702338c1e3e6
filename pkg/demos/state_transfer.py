"""SQUID -> condensate state transfer in the scaled (100 MHz) profile.

Sweeping the ramp time shows the two regimes: short ramps switch the
exchange on and off suddenly and the transfer sticks, while ramps long
compared with 1/|Omega| carry the dressed states adiabatically back out
of resonance and the excitation returns to the SQUID.
"""

from squidbec.constants import TWO_PI
from squidbec.dynamics import HybridParams, entangle_protocol, sweep_ramp_times, transfer_protocol

fast = HybridParams.fast()
ramps = [0.01e-6, 0.03e-6, 0.1e-6, 0.3e-6, 1e-6]

for rule in ("window", "optimize"):
    print(f"hold rule: {rule}")
    for row in sweep_ramp_times(ramps, params=fast, hold_rule=rule):
        print(f"  ramp {row.ramp_time * 1e6:5.2f} us   F = {row.final_fidelity:.4f}")

weak = HybridParams(fast.E_hfs, TWO_PI * 10e3)
res = transfer_protocol((0.6, 0.8j), weak, 1e-6, frame="rotating")
print(f"\n|Omega|/2pi = 10 kHz, 1 us ramp: F = {res.final_fidelity:.5f}, chi = {res.phase:+.3f} rad")
bell = entangle_protocol(weak, 1e-6, frame="rotating")
print(f"quarter-period hold: F(Bell) = {bell.final_fidelity:.5f}, concurrence = {bell.concurrence:.4f}")
