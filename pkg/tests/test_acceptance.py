"""Acceptance criteria, one PASS/FAIL line each (see the summary section of the run)."""

import math
import time

import numpy as np
import pytest

from oracles import biot_savart, elliptic_series, rwa_transfer_probability
from squidbec.bec_coupling import BecParams, compute_coupling, coupling_vectors, rabi_frequency
from squidbec.dynamics import (
    BASIS_LABELS, HybridParams, HybridState, RampSchedule, entangle_protocol, evolve,
    hamiltonian_at, sweep_ramp_times, transfer_protocol,
)
from squidbec.elliptic import elliptic_E, elliptic_K
from squidbec.loop_field import LoopGeometry, fields_cartesian
from squidbec.squid_circuit import FluxQubit, flux_qubit_hamiltonian
from squidbec.tomography import (
    AXES, bec_fidelity_experiment, bloch_vector, reduce_to_bec, transfer_target,
)

TWO_PI = 2 * math.pi
FAST = HybridParams.fast()
LOOP = LoopGeometry(1e-6)
SUPERPOSITION = (2**-0.5, 1j * 2**-0.5)


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def transfers():
    """Both fast-profile transfers at a 1 us ramp, with their wall time."""
    t0 = time.perf_counter()
    ground_excited = transfer_protocol((0.0, 1.0), FAST, 1e-6)
    superposition = transfer_protocol(SUPERPOSITION, FAST, 1e-6)
    return ground_excited, superposition, time.perf_counter() - t0


# 1 --------------------------------------------------------------------------

@pytest.mark.parametrize("separation, anchor_hz", [(50e-6, 0.1e6), (10e-6, 10e6)])
def test_1_rabi_frequency_estimate(acceptance, separation, anchor_hz):
    params = BecParams(N=10**6, omega_ho=TWO_PI * 50, trap_center=(0.0, 0.0, separation))
    result, seconds = timed(compute_coupling, params, LOOP, 1e-3)
    hz = abs(result.omega_rabi) / TWO_PI
    ok = anchor_hz / 10 <= hz <= anchor_hz * 10 and seconds < 10
    acceptance.record(
        f"1 Rabi estimate at {separation * 1e6:.0f} um", ok,
        f"|Omega|/2pi = {hz:.4g} Hz (|Omega| = {abs(result.omega_rabi):.4g} rad/s), "
        f"anchor {anchor_hz:.3g} Hz, {seconds:.2f} s")


# 2 --------------------------------------------------------------------------

def test_2_transfer_fidelity(acceptance, transfers):
    a, b, seconds = transfers
    Fa, Fb = a.final_fidelity, b.final_fidelity
    ok = Fa > 0.99 and Fb > 0.99 and abs(Fa - Fb) < 0.01 and seconds < 60
    acceptance.record(
        "2 transfer fidelity (fast profile, 1 us ramp)", ok,
        f"F(|01>) = {Fa:.6f}, F(superposition) = {Fb:.6f}, |diff| = {abs(Fa - Fb):.4f}, "
        f"ramp {a.ramp_time:.3g} s, hold {a.hold_time:.4g} s, {seconds:.1f} s")


# 3 --------------------------------------------------------------------------

def test_3_entanglement(acceptance):
    res, seconds = timed(entangle_protocol, FAST, 1e-6)
    ok = res.final_fidelity > 0.99 and res.concurrence > 0.98 and seconds < 60
    acceptance.record(
        "3 quarter-period entanglement (fast profile, 1 us ramp)", ok,
        f"F(Bell) = {res.final_fidelity:.6f}, concurrence = {res.concurrence:.6f}, "
        f"{seconds:.1f} s")


# 4 --------------------------------------------------------------------------

RAMPS = [0.01e-6, 0.03e-6, 0.1e-6, 0.3e-6, 1e-6]


@pytest.fixture(scope="module")
def sweep():
    return timed(sweep_ramp_times, RAMPS, params=FAST)


def test_4a_sweep_deterministic(acceptance, sweep):
    rows, _ = sweep
    again = sweep_ramp_times(list(reversed(RAMPS)), params=FAST)
    ok = [r.ramp_time for r in rows] == RAMPS and rows == list(reversed(again))
    acceptance.record("4a sweep table deterministic", ok,
                      f"{len(rows)} rows, identical on re-run in reversed order")


def test_4b_figure_shape(acceptance, sweep):
    rows, seconds = sweep
    F = {r.ramp_time: r.final_fidelity for r in rows}
    ok = F[0.1e-6] > 0.99 and F[1e-6] > 0.99
    table = ", ".join(f"{r.ramp_time * 1e6:g} us: {r.final_fidelity:.4f}" for r in rows)
    acceptance.record("4b sweep F(0.1 us) and F(1 us) > 0.99", ok, f"{table} ({seconds:.1f} s)")


# 5 --------------------------------------------------------------------------

def test_5a_elliptic_oracle(acceptance):
    worst = 0.0
    for k in np.round(np.arange(0.1, 1.0, 0.1), 1):
        K_ref, E_ref = elliptic_series(k)
        worst = max(worst, abs(elliptic_K(k) / K_ref - 1), abs(elliptic_E(k) / E_ref - 1))
    acceptance.record("5a elliptic K, E vs power series", worst < 1e-12,
                      f"max rel err {worst:.2e} on k = 0.1..0.9")


def test_5b_biot_savart_oracle(acceptance):
    rng = np.random.default_rng(2024)
    pts = []
    while len(pts) < 100:
        r = 1e-6 * 10 ** rng.uniform(-1, 2)
        v = rng.normal(size=3)
        p = r * v / np.linalg.norm(v)
        if np.hypot(np.hypot(p[0], p[1]) - 1e-6, p[2]) > 0.05e-6 and np.hypot(p[0], p[1]) > 1e-3 * r:
            pts.append(p)
    pts = np.array(pts)
    A, B = fields_cartesian(pts, LOOP, 1e-3)
    A_ref, B_ref = biot_savart(pts, 1e-6, 1e-3)
    err = max(np.max(np.linalg.norm(A - A_ref, axis=1) / np.linalg.norm(A_ref, axis=1)),
              np.max(np.linalg.norm(B - B_ref, axis=1) / np.linalg.norm(B_ref, axis=1)))
    acceptance.record("5b A and B vs Biot-Savart at 100 points", err < 1e-8,
                      f"max rel err {err:.2e}")


def test_5c_rwa_oracle(acceptance):
    omega = TWO_PI * 50e3
    params = HybridParams(FAST.E_hfs, omega)
    t_end = math.pi / omega
    resonant = RampSchedule(-1.0, 1.0 + t_end, 1e-9)
    res, seconds = timed(evolve, HybridState.basis("01"), resonant, params, t_final=t_end,
                         n_records=500)
    P10 = res.populations[:, BASIS_LABELS.index("10")]
    err = float(np.max(np.abs(P10 - rwa_transfer_probability(omega, res.times))))
    acceptance.record("5c resonant populations vs sin^2(|Omega| t)", err < 1e-3,
                      f"|Omega|/E_hfs = {omega / params.E_hfs:.1e}, max err {err:.2e}, "
                      f"{seconds:.1f} s")


def test_5d_frame_agreement(acceptance):
    (lab, rot), seconds = timed(lambda: [transfer_protocol(SUPERPOSITION, FAST, 1e-6, frame=f)
                                         for f in ("lab", "rotating")])
    diff = abs(lab.final_fidelity - rot.final_fidelity)
    acceptance.record("5d lab vs rotating frame final fidelity", diff < 1e-6,
                      f"|dF| = {diff:.2e}, {seconds:.1f} s")


# 6 --------------------------------------------------------------------------

def test_6a_norm_conservation(acceptance, transfers):
    a, b, _ = transfers
    c = entangle_protocol(FAST, 1e-6)
    drift = max(r.norm_drift for r in (a, b, c))
    acceptance.record("6a norm drift per protocol", drift < 1e-9, f"max drift {drift:.2e}")


def test_6b_hermiticity(acceptance, transfers):
    a, _, _ = transfers
    worst = 0.0
    for t in np.linspace(0, a.schedule.t_end, 2001):
        H = hamiltonian_at(t, FAST.E_hfs, FAST.omega * np.exp(0.3j), a.schedule, 1e3, 2e3)
        worst = max(worst, float(np.max(np.abs(H - H.conj().T))))
    for eps, delta in [(0.0, 1.0), (3e9, 4e9), (-1e10, 2e8)]:
        H = flux_qubit_hamiltonian(FluxQubit(eps, delta))
        worst = max(worst, float(np.max(np.abs(H - H.conj().T))))
    acceptance.record("6b Hamiltonians Hermitian", worst == 0.0,
                      f"max |H - H^dagger| = {worst:.1e} over 2004 matrices")


def test_6c_sqrt_n_scaling(acceptance):
    g = coupling_vectors(BecParams(trap_center=(0, 0, 50e-6)), LOOP, 1e-3)
    worst = 0.0
    for N in (10**4, 10**6, 10**8):
        ratio = abs(rabi_frequency(g, BecParams(N=4 * N))) / abs(rabi_frequency(g, BecParams(N=N)))
        worst = max(worst, abs(ratio - 2))
    acceptance.record("6c sqrt(N) scaling of |Omega|", worst < 1e-12,
                      f"max |ratio(4N/N) - 2| = {worst:.1e}")


def test_6d_reduced_state(acceptance):
    rng = np.random.default_rng(77)
    worst_trace, worst_eig = 0.0, 0.0
    for _ in range(100):
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho = reduce_to_bec(psi / np.linalg.norm(psi))
        worst_trace = max(worst_trace, abs(np.trace(rho).real - 1))
        worst_eig = min(worst_eig, float(np.linalg.eigvalsh(rho).min()))
    ok = worst_trace < 1e-12 and worst_eig > -1e-12
    acceptance.record("6d reduce_to_bec trace and PSD", ok,
                      f"max |tr - 1| = {worst_trace:.1e}, min eigenvalue {worst_eig:.1e}")


# 7 --------------------------------------------------------------------------

def test_7a_bloch_coverage(acceptance, transfers):
    a, _, _ = transfers
    state, target = a.states[-1], transfer_target(0.0, 1.0, a.phase)
    truth = bloch_vector(reduce_to_bec(state))
    t0 = time.perf_counter()
    inside, total = 0, 0
    for seed in range(100):
        est, _ = bec_fidelity_experiment(state, target, 10**4, seed=seed)
        rec = est.reconstruction
        inside += int(np.sum(np.abs(rec.bloch - truth) <= 3 * rec.stderr))
        total += len(AXES)
    seconds = time.perf_counter() - t0
    share = inside / total
    acceptance.record("7a Bloch components within 3 sigma (100 seeds, M = 1e4)",
                      share >= 0.99 and seconds < 60,
                      f"{inside}/{total} = {share:.3f}, truth {np.round(truth, 4)}, "
                      f"{seconds:.2f} s")


def test_7b_ci_scaling(acceptance, transfers):
    a, _, _ = transfers
    state, target = a.states[-1], transfer_target(0.0, 1.0, a.phase)
    widths = {}
    for M in (10**2, 10**4):
        w = [(lambda e: e.ci_high - e.ci_low)(bec_fidelity_experiment(state, target, M, seed=s)[0])
             for s in range(100)]
        widths[M] = float(np.mean(w))
    ratio = widths[10**2] / widths[10**4]
    acceptance.record("7b CI width scales as 1/sqrt(M)", abs(ratio / 10 - 1) <= 0.2,
                      f"mean width M=1e2: {widths[10**2]:.4g}, M=1e4: {widths[10**4]:.4g}, "
                      f"ratio {ratio:.3f} (ideal 10)")
