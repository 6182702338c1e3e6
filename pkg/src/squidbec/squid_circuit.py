"""rf-SQUID double-well analysis and the reduced flux-qubit Hamiltonian.

All circuit quantities are SI.  Energies handed to the dynamics are divided
by hbar once, here, and carried as angular frequencies [rad/s].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from .constants import HBAR, PHI_0, TWO_PI


class ConvergenceError(RuntimeError):
    """Root refinement failed to meet its tolerance."""


class SymmetryError(ValueError):
    """Wells too asymmetric to collapse the current operator onto sigma_z."""


@dataclass(frozen=True)
class SquidParams:
    """Circuit constants of a single-junction rf SQUID.

    Parameters
    ----------
    L : float
        Geometric loop inductance [H].
    C : float
        Junction capacitance [F].
    I_c : float
        Junction critical current [A].
    Phi_ex : float
        Applied external flux [Wb].
    """

    L: float
    C: float
    I_c: float
    Phi_ex: float

    def __post_init__(self):
        for name in ("L", "C", "I_c"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if not math.isfinite(self.Phi_ex):
            raise ValueError("Phi_ex must be finite")

    @classmethod
    def from_reduced(cls, beta_L: float, phi_ex: float, L: float, C: float) -> SquidParams:
        """Build parameters from the screening parameter and flux in Phi_0 units."""
        I_c = beta_L * PHI_0 / (TWO_PI * L)
        return cls(L=L, C=C, I_c=I_c, Phi_ex=phi_ex * PHI_0)

    @property
    def beta_L(self) -> float:
        return TWO_PI * self.L * self.I_c / PHI_0

    @property
    def U0(self) -> float:
        """Energy scale Phi_0^2 / (4 pi^2 L) [J]."""
        return PHI_0**2 / (4 * math.pi**2 * self.L)

    @property
    def phi_ex(self) -> float:
        """External flux in units of Phi_0."""
        return self.Phi_ex / PHI_0


@dataclass(frozen=True)
class Extremum:
    phi: float
    kind: Literal["min", "max"]


@dataclass(frozen=True)
class DoubleWellAnalysis:
    """Derived double-well landscape.

    Flux positions are in units of Phi_0; frequencies in rad/s; energies in J
    except ``epsilon`` and ``delta_est`` which are already divided by hbar.
    """

    phi_min_L: float
    phi_min_R: float
    phi_barrier: float
    omega_L: float
    omega_R: float
    E_L: float
    E_R: float
    epsilon: float
    delta_est: float
    barrier_height: float
    I_circ: float

    def as_report(self) -> dict[str, float]:
        return {
            "phi_min_L": self.phi_min_L,
            "phi_min_R": self.phi_min_R,
            "phi_barrier": self.phi_barrier,
            "omega_L_rad_s": self.omega_L,
            "omega_R_rad_s": self.omega_R,
            "E_L_J": self.E_L,
            "E_R_J": self.E_R,
            "epsilon_rad_s": self.epsilon,
            "delta_est_rad_s": self.delta_est,
            "barrier_height_J": self.barrier_height,
            "I_circ_A": self.I_circ,
        }


@dataclass(frozen=True)
class FluxQubit:
    """Two-level flux qubit: asymmetry, tunnelling [rad/s], persistent current [A]."""

    epsilon: float
    delta: float
    I_circ: float = 0.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive (symmetric ground state convention)")


def reduced_potential(phi, phi_ex, beta_L):
    """Flux potential in units of U0 with flux in units of Phi_0."""
    phi = np.asarray(phi, dtype=float)
    return TWO_PI**2 * (phi - phi_ex) ** 2 / 2 - beta_L * np.cos(TWO_PI * phi)


def _dpotential(phi, phi_ex, beta_L):
    return TWO_PI**2 * (phi - phi_ex) + TWO_PI * beta_L * np.sin(TWO_PI * phi)


def _d2potential(phi, beta_L):
    return TWO_PI**2 * (1 + beta_L * np.cos(TWO_PI * phi))


def potential(Phi, params: SquidParams):
    """Flux potential U(Phi) in joules, Phi in webers."""
    return params.U0 * reduced_potential(np.asarray(Phi) / PHI_0, params.phi_ex, params.beta_L)


def find_extrema(
    params: SquidParams,
    n_grid: int = 10_000,
    xtol: float = 1e-13,
    residual_tol: float = 1e-12,
) -> list[Extremum]:
    """Locate every stationary point of the flux potential near ``phi_ex``.

    A dense scan over ``[phi_ex - 1, phi_ex + 1]`` brackets sign changes of
    U'(phi); each bracket is refined with Brent's method.  A stationary point
    satisfies ``phi = phi_ex - beta_L/(2 pi) sin(2 pi phi)``, and every returned
    point meets that fixed-point relation to ``residual_tol``.
    """
    beta, phi_ex = params.beta_L, params.phi_ex
    if beta == 1.0:
        warnings.warn("beta_L == 1: the barrier is an inflection point; "
                      "treated as a single well", RuntimeWarning, stacklevel=2)

    grid = np.linspace(phi_ex - 1, phi_ex + 1, n_grid + 1)
    dU = _dpotential(grid, phi_ex, beta)
    roots = []
    for i in np.flatnonzero(dU == 0):
        roots.append(grid[i])
    sign_change = np.flatnonzero(dU[:-1] * dU[1:] < 0)
    for i in sign_change:
        root = brentq(_dpotential, grid[i], grid[i + 1], args=(phi_ex, beta),
                      xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
        roots.append(root)

    out = []
    for root in sorted(roots):
        residual = root - (phi_ex - beta / TWO_PI * math.sin(TWO_PI * root))
        if abs(residual) > residual_tol:
            raise ConvergenceError(
                f"stationary point at phi={root:.15g} has fixed-point residual {residual:.3e}")
        curvature = _d2potential(root, beta)
        # zero curvature only occurs at the beta_L == 1 inflection
        out.append(Extremum(root, "max" if curvature < 0 else "min"))
    return out


def well_frequency(params: SquidParams, phi_min: float) -> float:
    """Harmonic angular frequency of the well whose minimum sits at ``phi_min``."""
    stiffness = 1 + params.beta_L * math.cos(TWO_PI * phi_min)
    if stiffness <= 0:
        raise ValueError(f"U'' <= 0 at phi={phi_min}: not a minimum")
    return math.sqrt(stiffness / (params.L * params.C))


@dataclass(frozen=True)
class GaussianWellState:
    """Harmonic ground state centred on a well minimum, a function of Phi [Wb]."""

    center: float
    omega: float
    C: float

    @property
    def width(self) -> float:
        """Oscillator length sqrt(hbar / (C omega)) [Wb]."""
        return math.sqrt(HBAR / (self.C * self.omega))

    def __call__(self, Phi):
        s = self.width
        x = (np.asarray(Phi, dtype=float) - self.center) / s
        return (math.pi * s * s) ** -0.25 * np.exp(-0.5 * x * x)

    def second_derivative(self, Phi):
        s = self.width
        x = (np.asarray(Phi, dtype=float) - self.center) / s
        return self(Phi) * (x * x - 1) / (s * s)


def _well_pair(params: SquidParams, extrema: list[Extremum]) -> tuple[float, float, float]:
    """Pick the barrier nearest phi_ex and the two minima flanking it."""
    maxima = [e.phi for e in extrema if e.kind == "max"]
    minima = [e.phi for e in extrema if e.kind == "min"]
    if not maxima or len(minima) < 2:
        raise ValueError(f"no double well for beta_L={params.beta_L:.4g}, "
                         f"phi_ex={params.phi_ex:.4g}")
    barrier = min(maxima, key=lambda p: abs(p - params.phi_ex))
    left = [p for p in minima if p < barrier]
    right = [p for p in minima if p > barrier]
    if not left or not right:
        raise ValueError("barrier is not flanked by two minima")
    return max(left), barrier, min(right)


def gaussian_well_states(analysis: DoubleWellAnalysis, params: SquidParams
                         ) -> tuple[GaussianWellState, GaussianWellState]:
    left = GaussianWellState(analysis.phi_min_L * PHI_0, analysis.omega_L, params.C)
    right = GaussianWellState(analysis.phi_min_R * PHI_0, analysis.omega_R, params.C)
    return left, right


def _quadrature_grid(left: GaussianWellState, right: GaussianWellState, n: int = 20_001):
    lo = min(left.center - 12 * left.width, right.center - 12 * right.width)
    hi = max(left.center + 12 * left.width, right.center + 12 * right.width)
    return np.linspace(lo, hi, n)


def _matrix_element(bra: Callable, ket: GaussianWellState, params: SquidParams, Phi):
    # <bra| p^2/2C + U |ket>, kinetic term from the analytic Gaussian curvature
    kinetic = -(HBAR**2) / (2 * params.C) * ket.second_derivative(Phi)
    integrand = bra(Phi) * (kinetic + potential(Phi, params) * ket(Phi))
    return trapezoid(integrand, Phi)


def well_overlap(left: GaussianWellState, right: GaussianWellState) -> float:
    """<L|R> by trapezoidal quadrature over a window covering both wells."""
    Phi = _quadrature_grid(left, right)
    return float(trapezoid(left(Phi) * right(Phi), Phi))


def tunneling_estimate(params: SquidParams, analysis: DoubleWellAnalysis) -> float:
    """Tunnelling amplitude 2|<L|H|R>| / hbar [rad/s] from the Gaussian well states.

    The left/right states are not orthogonal, so the value inherits the energy
    reference of ``potential``.  It is a consistency diagnostic only; the
    protocols take the tunnelling splitting as an external control.
    """
    left, right = gaussian_well_states(analysis, params)
    Phi = _quadrature_grid(left, right)
    h_lr = _matrix_element(left, right, params, Phi)
    delta = 2 * abs(h_lr) / HBAR
    if delta > min(analysis.omega_L, analysis.omega_R):
        warnings.warn(f"tunnelling estimate {delta:.3e} rad/s exceeds the well spacing; "
                      "two-level truncation is not valid", RuntimeWarning, stacklevel=2)
    return delta


def circulating_current(params: SquidParams, phi_min_L: float, phi_min_R: float,
                        rel_tol: float = 0.1) -> float:
    """Persistent current (Phi_L - Phi_ex)/L of the left well [A].

    Raises SymmetryError when the two well displacements from ``Phi_ex`` do not
    cancel to within ``rel_tol`` of the left displacement.
    """
    dL = (phi_min_L - params.phi_ex) * PHI_0
    dR = (phi_min_R - params.phi_ex) * PHI_0
    if abs(dL + dR) > rel_tol * abs(dL):
        raise SymmetryError(f"wells asymmetric: |dL + dR| / |dL| = {abs(dL + dR) / abs(dL):.3g}")
    return dL / params.L


def analyze_double_well(params: SquidParams, symmetry_tol: float = 0.1) -> DoubleWellAnalysis:
    """Full double-well reduction: minima, frequencies, asymmetry, tunnelling, current."""
    extrema = find_extrema(params)
    phi_L, phi_B, phi_R = _well_pair(params, extrema)
    omega_L = well_frequency(params, phi_L)
    omega_R = well_frequency(params, phi_R)
    U_L = float(potential(phi_L * PHI_0, params))
    U_R = float(potential(phi_R * PHI_0, params))
    U_B = float(potential(phi_B * PHI_0, params))
    partial = DoubleWellAnalysis(
        phi_min_L=phi_L, phi_min_R=phi_R, phi_barrier=phi_B,
        omega_L=omega_L, omega_R=omega_R,
        E_L=U_L + HBAR * omega_L / 2, E_R=U_R + HBAR * omega_R / 2,
        epsilon=(U_L - U_R) / HBAR,
        delta_est=float("nan"),
        barrier_height=U_B - min(U_L, U_R),
        I_circ=circulating_current(params, phi_L, phi_R, symmetry_tol),
    )
    delta = tunneling_estimate(params, partial)
    return DoubleWellAnalysis(**{**partial.__dict__, "delta_est": delta})


def flux_qubit_hamiltonian(q: FluxQubit) -> np.ndarray:
    """(eps/2) sigma_z - (Delta/2) sigma_x in the (|L>, |R>) basis [rad/s]."""
    return np.array([[q.epsilon / 2, -q.delta / 2],
                     [-q.delta / 2, -q.epsilon / 2]], dtype=complex)
