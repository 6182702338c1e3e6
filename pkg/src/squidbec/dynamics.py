"""Time-dependent dynamics of the coupled flux-qubit / condensate-qubit pair.

Basis order is (|11>, |10>, |01>, |00>) with |ij> = |i>_BEC x |j>_SQUID and
the SQUID in its energy basis.  The Hamiltonian [rad/s] is

    H(t) = (E_hfs/2) sz x 1 + (Delta(t)/2) 1 x sz - [[0, W], [W*, 0]] x sx,
    Delta(t) = E_hfs * window(t),

with W the complex Rabi frequency.  Two integrators are provided:

``lab``
    Fourth-order Gauss-Legendre Magnus steps, each an exact exponential of a
    Hermitian 4x4 generator, so the propagation is unitary by construction.
``rotating``
    Adaptive DOP853 Runge-Kutta on the interaction-picture state with respect
    to (E_hfs/2)(sz x 1 + 1 x sz).  Independent of the lab route and used to
    cross-check it.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize_scalar

from .constants import RB87_HFS, TWO_PI

BASIS_LABELS = ("11", "10", "01", "00")
_ZB = np.array([1.0, 1.0, -1.0, -1.0])
_ZS = np.array([1.0, -1.0, 1.0, -1.0])
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SZ = np.diag([1.0, -1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)
# H0 energies of the rotating frame: (E/2)(Z_B + Z_S) / E
_FRAME_DIAG = 0.5 * (_ZB + _ZS)

# window crossing levels that define the ramp and the resonant window
_LOW_FACTOR = 1.01
_HIGH_LEVEL = 0.99


class NormDriftError(RuntimeError):
    """State norm drifted beyond tolerance during propagation."""


# --------------------------------------------------------------------------
# states and parameters


@dataclass(frozen=True)
class HybridState:
    """Normalised joint state; ``amplitudes`` follow ``BASIS_LABELS``."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        norm = np.linalg.norm(amp)
        if abs(norm - 1) > 1e-9:
            raise ValueError(f"state is not normalised (norm {norm:.12g})")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def basis(cls, label: str, time: float = 0.0) -> HybridState:
        amp = np.zeros(4, dtype=complex)
        amp[BASIS_LABELS.index(label)] = 1
        return cls(amp, time)

    @classmethod
    def product(cls, bec, squid, time: float = 0.0) -> HybridState:
        """Product of BEC and SQUID qubit states, each given as (c1, c0)."""
        return cls(np.kron(np.asarray(bec, complex), np.asarray(squid, complex)), time)

    def populations(self) -> dict[str, float]:
        return {lab: float(abs(c) ** 2) for lab, c in zip(BASIS_LABELS, self.amplitudes)}


@dataclass(frozen=True)
class HybridParams:
    """Hyperfine splitting and coupling, all angular frequencies [rad/s].

    ``zz_coupling`` and ``diagonal_shift`` add the sigma_z x sigma_z and
    1 x sigma_z terms of the full magnetic interaction; they are zero in the
    reduced model.  The SQUID current operator sigma_z becomes sigma_x in the
    SQUID energy basis.
    """

    E_hfs: float
    omega: complex
    zz_coupling: float = 0.0
    diagonal_shift: float = 0.0

    def __post_init__(self):
        if not self.E_hfs > 0:
            raise ValueError("E_hfs must be positive")
        object.__setattr__(self, "omega", complex(self.omega))

    @classmethod
    def fast(cls) -> HybridParams:
        """Scaled-down splitting for quick runs with |omega| << E_hfs kept."""
        return cls(E_hfs=TWO_PI * 100e6, omega=TWO_PI * 1e6)

    @classmethod
    def desk(cls, omega: complex = TWO_PI * 1e6) -> HybridParams:
        return cls(E_hfs=RB87_HFS, omega=omega)

    def coupling_matrix(self) -> np.ndarray:
        """Static off-diagonal part of H."""
        M = np.array([[0, self.omega], [np.conj(self.omega), 0]])
        V = -np.kron(M, _SX)
        V -= self.zz_coupling * np.kron(_SZ, _SX)
        V -= self.diagonal_shift * np.kron(_I2, _SX)
        return V


# --------------------------------------------------------------------------
# resonance schedule


def _ramp_levels(w_off: float) -> tuple[float, float]:
    """tanh arguments at which an isolated rising ramp crosses the two levels."""
    lo = 2 * (_LOW_FACTOR - 1) * w_off / (1 - w_off) - 1
    hi = 2 * (_HIGH_LEVEL - w_off) / (1 - w_off) - 1
    return math.atanh(lo), math.atanh(hi)


@dataclass(frozen=True)
class RampSchedule:
    """Window W(t) = w_off + (1 - w_off)/2 [tanh((t - t_on)/tau) - tanh((t - t_off)/tau)]."""

    t_on: float
    t_off: float
    tau: float
    w_off: float = 0.5

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.t_on < self.t_off:
            raise ValueError("t_on must precede t_off")
        if not 0 < self.w_off < _HIGH_LEVEL / _LOW_FACTOR:
            raise ValueError("w_off must lie in (0, 0.98)")

    def __call__(self, t):
        return ramp_window(t, self)

    @property
    def t_end(self) -> float:
        """Protocol end, placed symmetrically to t = 0 about the plateau."""
        return self.t_on + self.t_off

    @staticmethod
    def tau_for_ramp(ramp_time: float, w_off: float = 0.5) -> float:
        lo, hi = _ramp_levels(w_off)
        return ramp_time / (hi - lo)

    @classmethod
    def for_hold(cls, ramp_time: float, hold: float, w_off: float = 0.5,
                 rule: Literal["window", "midpoint"] = "window",
                 lead: float = 10.0) -> RampSchedule:
        """Schedule with the requested ramp time and resonant hold.

        ``rule="window"`` makes the time spent at W >= 0.99 equal ``hold``;
        ``rule="midpoint"`` spaces the tanh midpoints by ``hold``.  The rising
        midpoint sits ``lead * tau`` after t = 0 so the protocol starts off
        resonance.
        """
        if not ramp_time > 0 or hold < 0:
            raise ValueError("ramp_time must be positive and hold non-negative")
        tau = cls.tau_for_ramp(ramp_time, w_off)
        t_on = lead * tau
        if rule == "midpoint":
            return cls(t_on, t_on + max(hold, 1e-3 * tau), tau, w_off)
        if rule != "window":
            raise ValueError(f"unknown hold rule {rule!r}")
        _, hi = _ramp_levels(w_off)

        def excess(sep):
            try:
                return measured_hold_time(cls(t_on, t_on + sep, tau, w_off)) - hold
            except ValueError:  # plateau never reaches 0.99
                return -hold - tau

        sep_hi = hold + 2 * hi * tau + 4 * tau
        while excess(sep_hi) < 0:
            sep_hi *= 2
        sep = brentq(excess, 1e-3 * tau, sep_hi, xtol=1e-9 * tau, rtol=1e-14)
        return cls(t_on, t_on + sep, tau, w_off)


def ramp_window(t, s: RampSchedule):
    t = np.asarray(t, dtype=float)
    step = 0.5 * (np.tanh((t - s.t_on) / s.tau) - np.tanh((t - s.t_off) / s.tau))
    return s.w_off + (1 - s.w_off) * step


def _crossings(s: RampSchedule) -> tuple[float, float, float]:
    """Rising 1.01*w_off crossing, rising 0.99 crossing, falling 0.99 crossing."""
    mid = 0.5 * (s.t_on + s.t_off)
    w_mid = float(ramp_window(mid, s))
    if w_mid < _HIGH_LEVEL:
        raise ValueError(f"schedule never reaches resonance (max W = {w_mid:.6f})")
    low = _LOW_FACTOR * s.w_off
    far = s.t_on - 60 * s.tau
    t_low = brentq(lambda t: ramp_window(t, s) - low, far, mid, xtol=1e-12 * s.tau, rtol=1e-15)
    t_up = brentq(lambda t: ramp_window(t, s) - _HIGH_LEVEL, t_low, mid,
                  xtol=1e-12 * s.tau, rtol=1e-15)
    if w_mid == _HIGH_LEVEL:
        return t_low, t_up, t_up
    t_down = brentq(lambda t: ramp_window(t, s) - _HIGH_LEVEL, mid, s.t_off + 60 * s.tau,
                    xtol=1e-12 * s.tau, rtol=1e-15)
    return t_low, t_up, t_down


def measured_ramp_time(s: RampSchedule) -> float:
    """Time from W = 1.01 w_off to W = 0.99 on the rising edge [s]."""
    t_low, t_up, _ = _crossings(s)
    return t_up - t_low


def measured_hold_time(s: RampSchedule) -> float:
    """Time spent with W >= 0.99 [s]."""
    _, t_up, t_down = _crossings(s)
    return t_down - t_up


# --------------------------------------------------------------------------
# Hamiltonian


def _hamiltonians(t, params: HybridParams, s: RampSchedule) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=float))
    H = np.empty((t.size, 4, 4), dtype=complex)
    H[:] = params.coupling_matrix()
    delta = params.E_hfs * ramp_window(t, s)
    diag = 0.5 * params.E_hfs * _ZB[None, :] + 0.5 * delta[:, None] * _ZS[None, :]
    idx = np.arange(4)
    H[:, idx, idx] += diag
    return H


def hamiltonian_at(t: float, E_hfs: float, omega: complex, s: RampSchedule,
                   zz_coupling: float = 0.0, diagonal_shift: float = 0.0) -> np.ndarray:
    """Instantaneous 4x4 Hamiltonian [rad/s]."""
    params = HybridParams(E_hfs, omega, zz_coupling, diagonal_shift)
    return _hamiltonians(t, params, s)[0]


# --------------------------------------------------------------------------
# propagation

_GL_OFFSET = math.sqrt(3) / 6


def _magnus_steps(t0: float, h: float, n: int, params: HybridParams, s: RampSchedule):
    """Unitary propagators of n consecutive fourth-order Magnus steps."""
    starts = t0 + h * np.arange(n)
    H1 = _hamiltonians(starts + h * (0.5 - _GL_OFFSET), params, s)
    H2 = _hamiltonians(starts + h * (0.5 + _GL_OFFSET), params, s)
    comm = H2 @ H1 - H1 @ H2
    K = 0.5 * h * (H1 + H2) - 1j * (math.sqrt(3) / 12) * h * h * comm
    K = 0.5 * (K + np.conj(np.swapaxes(K, -1, -2)))
    w, v = np.linalg.eigh(K)
    return (v * np.exp(-1j * w)[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _ordered_product(U: np.ndarray) -> np.ndarray:
    """U[:, k-1] @ ... @ U[:, 0] for U of shape (r, k, 4, 4), by pairwise reduction."""
    while U.shape[1] > 1:
        if U.shape[1] % 2:
            eye = np.broadcast_to(np.eye(4, dtype=complex), (U.shape[0], 1, 4, 4))
            U = np.concatenate([U, eye], axis=1)
        U = U[:, 1::2] @ U[:, 0::2]
    return U[:, 0]


def _check_norm(psi, tol, t):
    drift = abs(np.linalg.norm(psi) - 1)
    if drift > tol:
        raise NormDriftError(f"norm drift {drift:.3e} exceeds {tol:.1e} at t={t:.6e} s")


def _propagate_lab(psi0, t0, t_final, params, s, h_max, n_records, norm_tol,
                   chunk_steps=1 << 16):
    span = t_final - t0
    n_steps = max(1, math.ceil(span / h_max))
    stride = max(1, math.ceil(n_steps / n_records))
    n_rec = math.ceil(n_steps / stride)
    n_steps = n_rec * stride
    h = span / n_steps
    if h < 1e-15 * max(abs(t0), abs(t_final), 1e-300):
        raise FloatingPointError("step size underflow")

    times = t0 + h * stride * np.arange(n_rec + 1)
    times[-1] = t_final
    states = np.empty((n_rec + 1, 4), dtype=complex)
    states[0] = psi = psi0
    per_chunk = max(1, chunk_steps // stride)
    for first in range(0, n_rec, per_chunk):
        count = min(per_chunk, n_rec - first)
        U = _magnus_steps(t0 + first * stride * h, h, count * stride, params, s)
        U = _ordered_product(U.reshape(count, stride, 4, 4))
        for j in range(count):
            psi = U[j] @ psi
            states[first + j + 1] = psi
        _check_norm(psi, norm_tol, times[first + count])
    return times, states


def _propagate_rotating(psi0, t0, t_final, params, s, n_records, norm_tol,
                        rtol=1e-12, atol=1e-13):
    E = params.E_hfs
    e0 = E * _FRAME_DIAG
    V = params.coupling_matrix()
    gap = e0[:, None] - e0[None, :]

    def rhs(t, y):
        detuning = 0.5 * E * (ramp_window(t, s) - 1.0) * _ZS
        Hr = V * np.exp(1j * gap * t)
        return -1j * (Hr @ y + detuning * y)

    times = np.linspace(t0, t_final, n_records + 1)
    y0 = np.exp(1j * e0 * t0) * psi0
    sol = solve_ivp(rhs, (t0, t_final), y0, method="DOP853", t_eval=times,
                    rtol=rtol, atol=atol)
    if not sol.success:
        raise FloatingPointError(f"rotating-frame integration failed: {sol.message}")
    states = (np.exp(-1j * np.outer(sol.t, e0)) * sol.y.T)
    _check_norm(states[-1], norm_tol, t_final)
    return sol.t, states


# --------------------------------------------------------------------------
# fidelity bookkeeping


def phase_optimized_overlap(states, target, phase_mask):
    """|<target|psi>| maximised over a relative phase on the masked components.

    Returns (fidelity, chi) where the optimal target is target * exp(i chi mask).
    """
    states = np.atleast_2d(states)
    weights = np.conj(target)[None, :] * states
    mask = np.asarray(phase_mask, dtype=bool)
    a = weights[:, ~mask].sum(axis=1)
    b = weights[:, mask].sum(axis=1)
    return np.abs(a) + np.abs(b), np.angle(b) - np.angle(a)


def concurrence(state) -> float:
    """Two-qubit concurrence |<psi| sy x sy |psi*>| of a pure state."""
    psi = np.asarray(getattr(state, "amplitudes", state), dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    return float(abs(psi @ np.kron(sy, sy) @ psi))


@dataclass(frozen=True)
class ProtocolResult:
    """Trajectory and figures of merit of one protocol run.

    ``fidelity`` is phase-optimised over a local phase on the BEC qubit;
    ``fidelity_raw`` uses the literal target.  ``phase`` is the optimal
    relative phase chi at the final time.
    """

    times: np.ndarray
    window: np.ndarray
    fidelity_raw: np.ndarray
    fidelity: np.ndarray
    states: np.ndarray
    target: np.ndarray
    phase_mask: np.ndarray
    phase: float
    schedule: RampSchedule
    params: HybridParams
    ramp_time: float
    hold_time: float
    frame: str = "lab"
    extra: dict = field(default_factory=dict)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    @property
    def final_state(self) -> HybridState:
        psi = self.states[-1]
        return HybridState(psi / np.linalg.norm(psi), float(self.times[-1]))

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    @property
    def final_fidelity_raw(self) -> float:
        return float(self.fidelity_raw[-1])

    @property
    def concurrence(self) -> float:
        return concurrence(self.states[-1])

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1)))

    @property
    def phased_target(self) -> np.ndarray:
        """Target state with the recorded optimal phase applied."""
        return self.target * np.exp(1j * self.phase * self.phase_mask)

    def table(self) -> dict[str, np.ndarray]:
        P = self.populations
        return {"t_seconds": self.times, "W": self.window, "F_raw": self.fidelity_raw,
                "F_phase_opt": self.fidelity, "P00": P[:, 3], "P01": P[:, 2],
                "P10": P[:, 1], "P11": P[:, 0]}

    def summary(self) -> dict[str, float]:
        return {"final_fidelity": self.final_fidelity,
                "final_fidelity_raw": self.final_fidelity_raw,
                "phase_rad": self.phase, "concurrence": self.concurrence,
                "ramp_time_s": self.ramp_time, "hold_time_s": self.hold_time,
                "norm_drift": self.norm_drift, "t_final_s": float(self.times[-1])}


def evolve(
    initial: HybridState,
    schedule: RampSchedule,
    params: HybridParams,
    t_final: float | None = None,
    target=None,
    phase_mask=None,
    frame: Literal["lab", "rotating"] = "lab",
    steps_per_period: int = 100,
    max_step: float | None = None,
    n_records: int = 2000,
    norm_tol: float = 1e-9,
) -> ProtocolResult:
    """Integrate i d/dt psi = H(t) psi from ``initial.time`` to ``t_final``.

    Parameters
    ----------
    steps_per_period : int
        Lab-frame step is at most (2 pi / E_hfs) / steps_per_period, and at
        most a quarter of the ramp steepness tau.
    target, phase_mask : array_like, optional
        Fidelity reference (defaults to the initial state) and the components
        that may carry a free relative phase.
    """
    if t_final is None:
        t_final = schedule.t_end
    t0 = initial.time
    if not t_final > t0:
        raise ValueError("t_final must exceed the initial time")
    target = initial.amplitudes if target is None else np.asarray(
        getattr(target, "amplitudes", target), dtype=complex)
    mask = np.zeros(4, bool) if phase_mask is None else np.asarray(phase_mask, bool)

    if frame == "lab":
        h_max = TWO_PI / params.E_hfs / steps_per_period
        h_max = min(h_max, schedule.tau / 4)
        if max_step is not None:
            h_max = min(h_max, max_step)
        times, states = _propagate_lab(initial.amplitudes, t0, t_final, params, schedule,
                                       h_max, n_records, norm_tol)
    elif frame == "rotating":
        times, states = _propagate_rotating(initial.amplitudes, t0, t_final, params,
                                            schedule, n_records, norm_tol)
    else:
        raise ValueError(f"unknown frame {frame!r}")

    raw = np.abs(states @ np.conj(target))
    opt, chi = phase_optimized_overlap(states, target, mask)
    try:
        ramp = measured_ramp_time(schedule)
        hold = measured_hold_time(schedule)
    except ValueError:
        ramp = hold = float("nan")
    return ProtocolResult(
        times=times, window=ramp_window(times, schedule), fidelity_raw=raw,
        fidelity=np.minimum(opt, 1.0), states=states, target=target, phase_mask=mask,
        phase=float(chi[-1]), schedule=schedule, params=params,
        ramp_time=ramp, hold_time=hold, frame=frame)


# --------------------------------------------------------------------------
# protocols

HoldRule = Literal["window", "midpoint", "optimize"]


def normalise_qubit(pair) -> tuple[complex, complex]:
    """Normalised (alpha, beta) amplitudes of a single qubit."""
    a, b = (complex(x) for x in pair)
    n = math.hypot(abs(a), abs(b))
    if n == 0:
        raise ValueError("qubit state must be non-zero")
    return a / n, b / n


def _run_with_hold(initial, target, mask, params, ramp_time, resonant_phase,
                   hold_rule, w_off, evolve_kw):
    omega = abs(params.omega)
    if omega == 0:
        raise ValueError("|omega| must be positive")
    nominal = resonant_phase / omega

    def run(hold, rule, **extra):
        sched = RampSchedule.for_hold(ramp_time, hold, w_off, rule)
        return evolve(initial, sched, params, target=target, phase_mask=mask,
                      **{**evolve_kw, **extra})

    if hold_rule in ("window", "midpoint"):
        return run(nominal, hold_rule)
    if hold_rule != "optimize":
        raise ValueError(f"unknown hold rule {hold_rule!r}")

    # for fixed ramps the final fidelity is periodic in the hold with period
    # pi/|omega|, so one period of window holds contains the global optimum
    period = math.pi / omega
    grid = np.linspace(0.02, 1.02, 16) * period
    scores = [run(hold, "window", n_records=4).final_fidelity for hold in grid]
    best = int(np.argmax(scores))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]
    opt = minimize_scalar(lambda x: -run(x, "window", n_records=4).final_fidelity,
                          bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-4 * period})
    hold = opt.x if -opt.fun >= scores[best] else grid[best]
    result = run(hold, "window")
    result.extra["optimized_hold"] = float(hold)
    return result


def transfer_protocol(
    squid_state=(0.0, 1.0),
    params: HybridParams | None = None,
    ramp_time: float = 1e-6,
    hold_rule: HoldRule = "window",
    w_off: float = 0.5,
    **evolve_kw,
) -> ProtocolResult:
    """Move the SQUID qubit alpha|0> + beta|1> into the condensate.

    Starts from |0>_B (alpha|0> + beta|1>)_S and targets alpha|00> + beta|10>,
    with a free relative phase on |10>.  The resonant hold corresponds to half
    a Rabi period pi/(2|omega|).
    """
    params = params or HybridParams.fast()
    alpha, beta = normalise_qubit(squid_state)
    initial = HybridState(np.array([0, 0, beta, alpha]))
    target = np.array([0, beta, 0, alpha])
    mask = np.array([False, True, False, False])
    result = _run_with_hold(initial, target, mask, params, ramp_time, math.pi / 2,
                            hold_rule, w_off, evolve_kw)
    result.extra["squid_state"] = (alpha, beta)
    return result


def entangle_protocol(
    params: HybridParams | None = None,
    ramp_time: float = 1e-6,
    hold_rule: HoldRule = "window",
    w_off: float = 0.5,
    resonant_phase: float = math.pi / 4,
    **evolve_kw,
) -> ProtocolResult:
    """Quarter-Rabi-period exchange from |01> towards (|01> + e^{i chi}|10>)/sqrt(2)."""
    params = params or HybridParams.fast()
    initial = HybridState.basis("01")
    target = np.array([0, 1, 1, 0]) / math.sqrt(2)
    mask = np.array([False, True, False, False])
    return _run_with_hold(initial, target, mask, params, ramp_time, resonant_phase,
                          hold_rule, w_off, evolve_kw)


@dataclass(frozen=True)
class SweepRow:
    ramp_time: float
    final_fidelity: float
    final_fidelity_raw: float


def _sweep_point(args) -> SweepRow:
    ramp, squid_state, params, hold_rule, w_off, evolve_kw = args
    res = transfer_protocol(squid_state, params, ramp, hold_rule, w_off,
                            **{"n_records": 4, **evolve_kw})
    return SweepRow(ramp, res.final_fidelity, res.final_fidelity_raw)


def sweep_ramp_times(
    ramps: Sequence[float],
    squid_state=(0.0, 1.0),
    params: HybridParams | None = None,
    hold_rule: HoldRule = "window",
    w_off: float = 0.5,
    workers: int | None = None,
    **evolve_kw,
) -> list[SweepRow]:
    """Final transfer fidelity for each ramp time, in input order."""
    params = params or HybridParams.fast()
    jobs = [(float(r), squid_state, params, hold_rule, w_off, evolve_kw) for r in ramps]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def with_coupling_terms(params: HybridParams, zz_coupling: float = 0.0,
                        diagonal_shift: float = 0.0) -> HybridParams:
    return replace(params, zz_coupling=zz_coupling, diagonal_shift=diagonal_shift)
