"""Simulated three-axis tomography of a condensate qubit after a transfer run."""

import numpy as np

from squidbec.dynamics import HybridParams, transfer_protocol
from squidbec.tomography import bloch_vector, reduce_to_bec, transfer_fidelity_experiment

res = transfer_protocol((0.6, 0.8), HybridParams.fast(), 0.1e-6)
print("exact Bloch vector:", np.round(bloch_vector(reduce_to_bec(res.states[-1])), 4))

for shots in (100, 10_000, 1_000_000):
    est, records = transfer_fidelity_experiment(res, shots, seed=1)
    counts = ", ".join(f"{r.axis}:{r.plus_count}" for r in records)
    print(f"M = {shots:>9d}  counts [{counts}]")
    print(f"    F = {est.fidelity:.4f} +/- {est.stderr:.4f}  "
          f"CI [{est.ci_low:.4f}, {est.ci_high:.4f}]  exact {est.exact:.4f}")
