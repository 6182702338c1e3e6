import math

import numpy as np
import pytest

from oracles import hybrid_hamiltonian, piecewise_constant_evolution, rwa_transfer_probability
from squidbec.dynamics import (
    BASIS_LABELS, HybridParams, HybridState, NormDriftError, RampSchedule, concurrence,
    entangle_protocol, evolve, hamiltonian_at, measured_hold_time, measured_ramp_time,
    phase_optimized_overlap, ramp_window, sweep_ramp_times, transfer_protocol, with_coupling_terms,
)

TWO_PI = 2 * math.pi
FAST = HybridParams.fast()
SLOW = HybridParams(FAST.E_hfs, TWO_PI * 10e3)  # |omega| tau << 1 for microsecond ramps


def always_on(t_end):
    """Schedule with W = 1 to double precision over [0, t_end]."""
    return RampSchedule(-1.0, 1.0 + t_end, 1e-9)


# -- schedule ------------------------------------------------------------------

def test_window_limits():
    s = RampSchedule(1e-6, 3e-6, 1e-8)
    assert ramp_window(-1.0, s) == pytest.approx(0.5, abs=1e-15)
    assert ramp_window(1.0, s) == pytest.approx(0.5, abs=1e-15)
    assert abs(ramp_window(2e-6, s) - 1) < 1e-6
    t = np.linspace(0, 4e-6, 20001)
    w = ramp_window(t, s)
    assert np.all(np.diff(w[t < 2e-6]) >= 0) and np.all(np.diff(w[t > 2e-6]) <= 0)
    assert w.min() >= 0.5 and w.max() <= 1


def test_schedule_validation():
    with pytest.raises(ValueError):
        RampSchedule(1.0, 0.5, 1e-9)
    with pytest.raises(ValueError):
        RampSchedule(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        RampSchedule(0.0, 1.0, 1e-9, w_off=0.995)
    with pytest.raises(ValueError):
        RampSchedule(0.0, 1.0, 1e-9, w_off=0.0)


def test_ramp_time_scales_with_tau():
    s1 = RampSchedule(0.0, 1e-3, 1e-8)
    s2 = RampSchedule(0.0, 1e-3, 2e-8)
    assert measured_ramp_time(s2) == pytest.approx(2 * measured_ramp_time(s1), rel=1e-9)
    assert measured_ramp_time(s1) == pytest.approx(
        1e-8 * (math.atanh(0.96) + math.atanh(0.98)), rel=1e-9)
    tiny = RampSchedule(0.0, 1e-3, 1e-15)
    assert measured_ramp_time(tiny) < 1e-14


@pytest.mark.parametrize("w_off", [0.05, 0.3, 0.5, 0.8])
def test_schedule_for_hold_hits_targets(w_off):
    long = RampSchedule.for_hold(1e-6, 20e-6, w_off=w_off)
    assert measured_ramp_time(long) == pytest.approx(1e-6, rel=1e-8)
    assert measured_hold_time(long) == pytest.approx(20e-6, rel=1e-8)
    # overlapping edges stretch the measured ramp a little; the hold stays exact
    short = RampSchedule.for_hold(1e-6, 0.4e-6, w_off=w_off)
    assert measured_hold_time(short) == pytest.approx(0.4e-6, rel=1e-8)
    assert measured_ramp_time(short) == pytest.approx(1e-6, rel=0.05)


def test_no_resonance_reported():
    s = RampSchedule(0.0, 1e-9, 1e-8)
    with pytest.raises(ValueError, match="never reaches"):
        measured_ramp_time(s)


# -- Hamiltonian -----------------------------------------------------------------

def test_hamiltonian_matches_elementwise_oracle():
    s = RampSchedule(1e-6, 2e-6, 1e-7)
    omega = 3e6 * np.exp(0.4j)
    for t in (0.0, 1.1e-6, 1.5e-6, 2.7e-6):
        H = hamiltonian_at(t, FAST.E_hfs, omega, s)
        ref = hybrid_hamiltonian(FAST.E_hfs, FAST.E_hfs * float(ramp_window(t, s)), omega)
        np.testing.assert_allclose(H, ref, rtol=0, atol=1e-6)
        np.testing.assert_array_equal(H, H.conj().T)


def test_zero_coupling_is_diagonal():
    s = RampSchedule(1e-6, 2e-6, 1e-7)
    H = hamiltonian_at(1.5e-6, FAST.E_hfs, 0.0, s)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
    E, D = FAST.E_hfs, FAST.E_hfs * float(ramp_window(1.5e-6, s))
    np.testing.assert_allclose(np.diag(H).real, [(E + D) / 2, (E - D) / 2, (D - E) / 2, -(E + D) / 2])


def test_resonant_exchange_gap():
    omega = TWO_PI * 1e6 * np.exp(1.1j)
    H = hamiltonian_at(0.5, FAST.E_hfs, omega, always_on(1.0))
    block = H[1:3, 1:3]
    w = np.linalg.eigvalsh(block)
    assert w[1] - w[0] == pytest.approx(2 * abs(omega), rel=1e-9)


def test_validation_terms_enter_hamiltonian():
    s = always_on(1.0)
    H0 = hamiltonian_at(0.5, FAST.E_hfs, 1e6, s)
    H = hamiltonian_at(0.5, FAST.E_hfs, 1e6, s, zz_coupling=7.0, diagonal_shift=3.0)
    diff = H - H0
    np.testing.assert_array_equal(diff, diff.conj().T)
    assert diff[0, 1] == -10.0 and diff[2, 3] == 4.0


# -- propagation -----------------------------------------------------------------

def test_zero_coupling_preserves_populations():
    p = HybridParams(FAST.E_hfs, 0.0)
    psi0 = HybridState(np.array([0.1, 0.5j, -0.7, 0.5]) / np.linalg.norm([0.1, 0.5, 0.7, 0.5]))
    s = RampSchedule.for_hold(0.1e-6, 0.2e-6)
    res = evolve(psi0, s, p)
    expected = np.broadcast_to(np.abs(psi0.amplitudes) ** 2, res.populations.shape)
    np.testing.assert_allclose(res.populations, expected, atol=1e-12)


@pytest.mark.parametrize("frame", ["lab", "rotating"])
def test_resonant_rabi_matches_rwa(frame):
    omega = TWO_PI * 50e3
    p = HybridParams(FAST.E_hfs, omega)
    assert omega / p.E_hfs < 1e-3
    t_end = math.pi / omega
    res = evolve(HybridState.basis("01"), always_on(t_end), p, t_final=t_end,
                 frame=frame, n_records=400)
    P10 = res.populations[:, BASIS_LABELS.index("10")]
    assert np.max(np.abs(P10 - rwa_transfer_probability(omega, res.times))) < 1e-3


def test_frames_agree():
    lab = transfer_protocol((0.6, 0.8j), FAST, 0.1e-6, frame="lab")
    rot = transfer_protocol((0.6, 0.8j), FAST, 0.1e-6, frame="rotating")
    assert abs(lab.final_fidelity - rot.final_fidelity) < 1e-6
    assert abs(lab.final_fidelity_raw - rot.final_fidelity_raw) < 1e-6


def test_sudden_limit_matches_piecewise_constant():
    hold = math.pi / (2 * abs(FAST.omega))
    res = transfer_protocol((0.0, 1.0), FAST, 1e-11, hold_rule="midpoint")
    s = res.schedule
    psi = piecewise_constant_evolution(
        HybridState.basis("01").amplitudes,
        [(s.t_on, s.w_off), (s.t_off - s.t_on, 1.0), (s.t_end - s.t_off, s.w_off)],
        FAST.E_hfs, FAST.omega)
    assert s.t_off - s.t_on == pytest.approx(hold, rel=1e-12)
    assert abs(np.vdot(psi, res.states[-1])) == pytest.approx(1.0, abs=1e-4)


def test_norm_drift_guard():
    with pytest.raises(NormDriftError):
        evolve(HybridState.basis("01"), always_on(1e-6), FAST, t_final=1e-6, norm_tol=1e-18)


def test_norm_and_time_grid():
    res = transfer_protocol((0.6, 0.8), FAST, 0.3e-6)
    assert res.norm_drift < 1e-9
    assert np.all(np.diff(res.times) > 0)
    assert np.all((res.fidelity >= 0) & (res.fidelity <= 1))


def test_phase_covariance_of_populations():
    a = transfer_protocol((0.6, 0.8), HybridParams(FAST.E_hfs, FAST.omega), 0.1e-6)
    b = transfer_protocol((0.6, 0.8), HybridParams(FAST.E_hfs, FAST.omega * np.exp(0.9j)), 0.1e-6)
    np.testing.assert_allclose(a.populations, b.populations, atol=1e-9)


def test_global_phase_invariance_of_fidelity():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    target = np.array([0, 0.6, 0, 0.8])
    mask = np.array([False, True, False, False])
    F, _ = phase_optimized_overlap(psi, target, mask)
    F2, _ = phase_optimized_overlap(psi * np.exp(1.3j), target * np.exp(-0.4j), mask)
    np.testing.assert_allclose(F, F2, atol=1e-14)


def test_phase_optimisation_recovers_local_phase():
    target = np.array([0, 0.6, 0, 0.8])
    psi = np.array([0, 0.6 * np.exp(0.7j), 0, 0.8])
    F, chi = phase_optimized_overlap(psi, target, [False, True, False, False])
    assert F[0] == pytest.approx(1.0, abs=1e-15)
    assert chi[0] == pytest.approx(0.7, abs=1e-14)


# -- protocols ---------------------------------------------------------------------

def test_trivial_transfer_of_ground_state():
    res = transfer_protocol((1.0, 0.0), FAST, 0.1e-6)
    assert res.final_fidelity_raw == pytest.approx(1.0, abs=1e-3)


def test_transfer_high_fidelity_when_ramp_is_sudden_on_rabi_scale():
    res = transfer_protocol((0.0, 1.0), SLOW, 1e-6)
    assert res.ramp_time == pytest.approx(1e-6, rel=1e-6)
    assert res.hold_time == pytest.approx(math.pi / (2 * abs(SLOW.omega)), rel=1e-6)
    assert res.final_fidelity > 0.99


def test_superposition_transfer_weakly_state_dependent_when_sudden():
    s = 2**-0.5
    a = transfer_protocol((0.0, 1.0), SLOW, 1e-6, frame="rotating")
    b = transfer_protocol((s, 1j * s), SLOW, 1e-6, frame="rotating")
    assert b.final_fidelity > 0.99
    assert abs(a.final_fidelity - b.final_fidelity) < 0.01


def test_entanglement_when_sudden():
    res = entangle_protocol(SLOW, 1e-6, frame="rotating")
    assert res.final_fidelity > 0.99
    assert res.concurrence > 0.98


def test_half_period_hold_gives_product_state():
    res = entangle_protocol(SLOW, 1e-6, resonant_phase=math.pi / 2, frame="rotating")
    assert res.concurrence < 0.05


def test_adiabatic_ramp_returns_excitation():
    # tau |omega| > 1: the exchange is undone on the way out of resonance
    res = transfer_protocol((0.0, 1.0), FAST, 1e-6)
    assert res.final_fidelity < 0.5


def test_zz_validation_term_small_effect():
    # ratio for the default moments is 0.75 / sqrt(N) with N = 1e6
    zz = 0.75e-3 * abs(SLOW.omega)
    base = transfer_protocol((0.0, 1.0), SLOW, 1e-6, frame="rotating")
    with_zz = transfer_protocol((0.0, 1.0), with_coupling_terms(SLOW, zz), 1e-6,
                                frame="rotating")
    assert abs(base.final_fidelity - with_zz.final_fidelity) < 1e-2


def test_optimised_hold_not_worse_than_window():
    window = transfer_protocol((0.0, 1.0), FAST, 0.1e-6)
    best = transfer_protocol((0.0, 1.0), FAST, 0.1e-6, hold_rule="optimize")
    assert best.final_fidelity >= window.final_fidelity - 1e-9


def test_sweep_ordering_and_duplicates():
    ramps = [0.05e-6, 0.01e-6, 0.05e-6]
    rows = sweep_ramp_times(ramps, params=FAST)
    assert [r.ramp_time for r in rows] == ramps
    assert rows[0] == rows[2]


def test_sweep_trend_towards_sudden_value():
    rows = sweep_ramp_times([1e-10, 1e-9, 1e-8, 1e-7, 1e-6], params=FAST, hold_rule="midpoint")
    F = [r.final_fidelity for r in rows]
    assert F[0] > 0.99
    assert F[-1] < F[0]


def test_concurrence_values():
    assert concurrence(HybridState.basis("01")) == pytest.approx(0.0, abs=1e-15)
    bell = HybridState(np.array([0, 1, 1, 0]) / math.sqrt(2))
    assert concurrence(bell) == pytest.approx(1.0, abs=1e-15)


def test_state_validation():
    with pytest.raises(ValueError):
        HybridState(np.array([1, 1, 0, 0]))
    prod = HybridState.product([0, 1], [1, 0])
    assert prod.populations()["01"] == pytest.approx(1.0)
