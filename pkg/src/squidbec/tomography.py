"""Single-qubit state tomography of the condensate hyperfine qubit.

Each axis is read out by a collective rotation that maps the axis onto z,
followed by a projective count of atoms in the upper state.  Counts are
binomial; the Bloch components are a_k = 2 p_k - 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


AXES = ("x", "y", "z")
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]])
_SZ = np.diag([1.0, -1.0]).astype(complex)
_PAULI = (_SX, _SY, _SZ)
_R = 1 / math.sqrt(2)
# exp(i pi/4 sigma_y) and exp(-i pi/4 sigma_x): map <sigma_x>, <sigma_y> onto <sigma_z>
_ROTATIONS = {
    "x": np.array([[_R, _R], [-_R, _R]], dtype=complex),
    "y": np.array([[_R, -1j * _R], [-1j * _R, _R]]),
    "z": np.eye(2, dtype=complex),
}


def reduce_to_bec(state) -> np.ndarray:
    """Partial trace over the SQUID; rows/columns ordered (|1>, |0>)."""
    psi = np.asarray(getattr(state, "amplitudes", state), dtype=complex).reshape(2, 2)
    return psi @ psi.conj().T


def bloch_vector(rho: np.ndarray) -> np.ndarray:
    return np.array([np.trace(rho @ P).real for P in _PAULI])


def density_from_bloch(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (np.eye(2) + sum(c * P for c, P in zip(a, _PAULI)))


def rotate_for_axis(rho: np.ndarray, axis: str) -> np.ndarray:
    """Apply the readout rotation so that <sigma_axis> becomes <sigma_z>."""
    U = _ROTATIONS[axis]
    return U @ rho @ U.conj().T


@dataclass(frozen=True)
class AxisRecord:
    axis: str
    shots: int
    plus_count: int
    seed: int | None


def _axis_rng(seed, axis: str) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(AXES.index(axis),))
    return np.random.Generator(np.random.PCG64(ss))


def simulate_shots(rho: np.ndarray, shots: int, seed: int | None = None,
                   axes=AXES) -> list[AxisRecord]:
    """Binomial upper-state counts for each readout axis.

    Each axis draws from its own stream derived from ``seed`` so records are
    reproducible independently of the order or subset of axes.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    records = []
    for axis in axes:
        p = float(np.clip(rotate_for_axis(rho, axis)[0, 0].real, 0.0, 1.0))
        count = int(_axis_rng(seed, axis).binomial(shots, p))
        records.append(AxisRecord(axis, int(shots), count, seed))
    return records


def noiseless_records(rho: np.ndarray, shots: int) -> list[AxisRecord]:
    """Records whose counts are the exact expectations (may be fractional)."""
    return [AxisRecord(a, shots, rotate_for_axis(rho, a)[0, 0].real * shots, None)
            for a in AXES]


def project_to_physical(a) -> np.ndarray:
    """Nearest Bloch vector with |a| <= 1 (Frobenius-nearest PSD density matrix)."""
    a = np.asarray(a, dtype=float)
    n = np.linalg.norm(a)
    return a / n if n > 1 else a.copy()


@dataclass(frozen=True)
class Reconstruction:
    """Bloch estimate with per-axis standard errors.

    ``bloch_physical`` differs from ``bloch`` only when sampling noise pushed
    the raw estimate outside the Bloch ball.
    """

    bloch: np.ndarray
    stderr: np.ndarray
    bloch_physical: np.ndarray
    shots: np.ndarray

    @property
    def rho(self) -> np.ndarray:
        return density_from_bloch(self.bloch)

    @property
    def rho_physical(self) -> np.ndarray:
        return density_from_bloch(self.bloch_physical)

    @property
    def is_physical(self) -> bool:
        return bool(np.linalg.norm(self.bloch) <= 1)


def reconstruct(records) -> Reconstruction:
    by_axis = {r.axis: r for r in records}
    missing = [a for a in AXES if a not in by_axis]
    if missing:
        raise ValueError(f"missing records for axes {missing}")
    M = np.array([by_axis[a].shots for a in AXES], dtype=float)
    p = np.array([by_axis[a].plus_count for a in AXES], dtype=float) / M
    a = 2 * p - 1
    stderr = 2 * np.sqrt(p * (1 - p) / M)
    return Reconstruction(a, stderr, project_to_physical(a), M)


@dataclass(frozen=True)
class FidelityEstimate:
    """State fidelity sqrt(<t|rho|t>) with a linearised confidence interval."""

    fidelity: float
    stderr: float
    ci_low: float
    ci_high: float
    exact: float
    reconstruction: Reconstruction

    def covers_exact(self) -> bool:
        return self.ci_low <= self.exact <= self.ci_high

    def as_report(self) -> dict[str, float]:
        return {"fidelity": self.fidelity, "stderr": self.stderr, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "exact": self.exact}


def _fidelity_with(target: np.ndarray, a) -> tuple[float, np.ndarray]:
    n = bloch_vector(np.outer(target, target.conj()))
    overlap = 0.5 * (1 + float(n @ a))
    F = math.sqrt(max(overlap, 0.0))
    grad = n / (4 * F) if F > 0 else np.zeros(3)
    return F, grad


def fidelity_estimate(rec: Reconstruction, target, exact: float | None = None,
                      z: float = 1.96) -> FidelityEstimate:
    """Fidelity of the (physical) reconstruction against a pure BEC target."""
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    F, grad = _fidelity_with(t, rec.bloch_physical)
    sigma = float(np.sqrt(np.sum((grad * rec.stderr) ** 2)))
    return FidelityEstimate(F, sigma, F - z * sigma, min(F + z * sigma, 1.0),
                            float("nan") if exact is None else exact, rec)


def transfer_target(alpha: complex, beta: complex, chi: float = 0.0) -> np.ndarray:
    """BEC state beta e^{i chi}|1> + alpha|0> in (|1>, |0>) order."""
    return np.array([beta * np.exp(1j * chi), alpha], dtype=complex)


def bec_fidelity_experiment(state, target, shots: int, seed: int | None = None,
                            z: float = 1.96, noiseless: bool = False
                            ) -> tuple[FidelityEstimate, list[AxisRecord]]:
    """Trace out the SQUID, simulate three-axis readout and estimate the fidelity.

    ``noiseless=True`` replaces the sampled counts by their expectations.
    """
    rho = reduce_to_bec(state)
    t = np.asarray(target, dtype=complex)
    t = t / np.linalg.norm(t)
    exact = math.sqrt(max(float(np.real(t.conj() @ rho @ t)), 0.0))
    records = noiseless_records(rho, shots) if noiseless else simulate_shots(rho, shots, seed)
    return fidelity_estimate(reconstruct(records), t, exact, z), records


def transfer_fidelity_experiment(protocol, shots: int, seed: int | None = None,
                                 z: float = 1.96, noiseless: bool = False
                                 ) -> tuple[FidelityEstimate, list[AxisRecord]]:
    """Tomographic estimate of how well a transfer run stored the SQUID qubit.

    The target is beta e^{i chi}|1> + alpha|0> with (alpha, beta) the SQUID
    input and chi the phase found by the protocol's phase optimisation.
    """
    alpha, beta = protocol.extra["squid_state"]
    target = transfer_target(alpha, beta, protocol.phase)
    return bec_fidelity_experiment(protocol.states[-1], target, shots, seed, z, noiseless)
