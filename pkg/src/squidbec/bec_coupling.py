"""Hyperfine qubit of a trapped condensate and its coupling to the loop field.

Both hyperfine components share one harmonic-oscillator spatial mode, so the
four overlap vectors g_{ss'} = <phi_s| B |phi_s'> coincide; they are stored as
a (2, 2, 3) array anyway.  Spin index 0 is the lower state (down), 1 the upper
(up).  Qubit matrices use the basis order (|1>, |0>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constants import HBAR, MU_B, RB87_HFS, RB87_MASS, TWO_PI
from .loop_field import LoopGeometry, magnetic_field_cartesian

DOWN, UP = 0, 1


class QuadratureError(RuntimeError):
    """Gauss-Hermite estimate failed the node-doubling check."""


@dataclass(frozen=True)
class BecParams:
    """Trap, atom and hyperfine parameters of the condensate.

    Parameters
    ----------
    N : int
        Atom number.
    omega_ho : float
        Isotropic trap angular frequency [rad/s].
    m_atom : float
        Atomic mass [kg].
    trap_center : 3-tuple
        Trap centre relative to the global origin [m].
    E_hfs : float
        Hyperfine splitting [rad/s].
    mu : ndarray of shape (2, 2, 3), optional
        Magnetic-moment matrix elements [J/T].  ``None`` selects
        :func:`default_moments` oriented along the loop field at the trap.
    mu_transition : float
        Magnitude of the default transition moment [J/T].
    """

    N: int = 10**6
    omega_ho: float = TWO_PI * 50.0
    m_atom: float = RB87_MASS
    trap_center: tuple[float, float, float] = (0.0, 0.0, 50e-6)
    E_hfs: float = RB87_HFS
    mu: np.ndarray | None = field(default=None, compare=False)
    mu_transition: float = MU_B

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        object.__setattr__(self, "N", int(self.N))
        if not self.omega_ho > 0 or not self.m_atom > 0:
            raise ValueError("omega_ho and m_atom must be positive")
        if not self.E_hfs > 0:
            raise ValueError("E_hfs must be positive")
        object.__setattr__(self, "trap_center", tuple(float(c) for c in self.trap_center))
        if self.mu is not None:
            mu = np.asarray(self.mu, dtype=complex)
            if mu.shape != (2, 2, 3):
                raise ValueError("mu must have shape (2, 2, 3)")
            check_hermitian_moments(mu)
            object.__setattr__(self, "mu", mu)

    @property
    def oscillator_length(self) -> float:
        return math.sqrt(HBAR / (self.m_atom * self.omega_ho))


def check_hermitian_moments(mu: np.ndarray, rtol: float = 1e-12) -> None:
    scale = max(np.abs(mu).max(), 1e-300)
    err = np.abs(mu - np.conj(np.swapaxes(mu, 0, 1))).max()
    if err > rtol * scale:
        raise ValueError(f"moment matrix is not Hermitian (max deviation {err:.3e})")


def default_moments(direction, transition: float = MU_B) -> np.ndarray:
    """Rb-87-like moments for |F=1,m=-1> (down) and |F=2,m=-2> (up).

    Diagonal moments -g_F m_F mu_B are -mu_B/2 and +mu_B; the transition moment
    has magnitude ``transition``.  All three are laid along ``direction``, which
    makes the neglected sigma_z x sigma_z coupling as large as it can be for
    the given magnitudes.
    """
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    mu = np.zeros((2, 2, 3), dtype=complex)
    mu[DOWN, DOWN] = -0.5 * MU_B * n
    mu[UP, UP] = MU_B * n
    mu[DOWN, UP] = transition * n
    mu[UP, DOWN] = transition * n
    return mu


def ho_ground_state(r, params: BecParams):
    """Isotropic 3-D oscillator ground state centred on the trap [m^-3/2]."""
    a = params.oscillator_length
    d = np.asarray(r, dtype=float) - np.asarray(params.trap_center)
    r2 = np.sum(d * d, axis=-1)
    return (math.pi * a * a) ** -0.75 * np.exp(-0.5 * r2 / (a * a))


def _gauss_hermite_average(field_fn: Callable, center, length: float, n: int) -> np.ndarray:
    # int |phi|^2 B d^3r with |phi|^2 = (pi a^2)^{-3/2} exp(-r^2/a^2), r = a u
    x, w = np.polynomial.hermite.hermgauss(n)
    X, Y, Z = np.meshgrid(x, x, x, indexing="ij")
    W = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    pts = np.asarray(center) + length * np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=-1)
    B = field_fn(pts)
    return (W @ B) / math.pi**1.5


def coupling_vectors(
    params: BecParams,
    loop: LoopGeometry | None = None,
    current: float = 1e-3,
    nodes: int = 32,
    field: Callable | None = None,
    rtol: float = 1e-6,
) -> np.ndarray:
    """Overlap vectors g_{ss'} = int phi_s* B phi_s' d^3r [T], shape (2, 2, 3).

    ``field`` replaces the loop field with any callable mapping (n, 3) points
    to (n, 3) field vectors.  The result at ``nodes`` per axis is checked
    against ``2 * nodes`` and QuadratureError is raised if they differ by more
    than ``rtol`` relative to |g|.
    """
    if field is None:
        if loop is None:
            raise ValueError("either loop or field must be given")
        dist = loop.wire_distance(params.trap_center)
        if dist <= loop.wire_radius + 6 * params.oscillator_length:
            raise ValueError("trap region overlaps the wire volume")

        def field(pts):
            return magnetic_field_cartesian(pts, loop, current)

    a = params.oscillator_length
    g = _gauss_hermite_average(field, params.trap_center, a, nodes)
    if rtol is not None:
        g2 = _gauss_hermite_average(field, params.trap_center, a, 2 * nodes)
        scale = max(np.linalg.norm(g2), 1e-300)
        if np.linalg.norm(g - g2) > rtol * scale:
            raise QuadratureError(
                f"Gauss-Hermite not converged: relative change {np.linalg.norm(g - g2) / scale:.2e}")
    return np.broadcast_to(g, (2, 2, 3)).copy()


def resolve_moments(params: BecParams, g: np.ndarray) -> np.ndarray:
    if params.mu is not None:
        return params.mu
    direction = np.real(g[DOWN, UP])
    if not np.linalg.norm(direction) > 0:
        direction = np.array([0.0, 0.0, 1.0])
    return default_moments(direction, params.mu_transition)


def _dot(g_vec, mu_vec) -> complex:
    return complex(np.sum(np.asarray(g_vec) * np.asarray(mu_vec)))


def rabi_frequency(g: np.ndarray, params: BecParams) -> complex:
    """Bosonically enhanced Rabi frequency sqrt(N) g_du . mu_du / hbar [rad/s]."""
    mu = resolve_moments(params, g)
    return math.sqrt(params.N) * _dot(g[DOWN, UP], mu[DOWN, UP]) / HBAR


@dataclass(frozen=True)
class CouplingResult:
    """Coupling between the condensate and the loop field.

    ``omega_rabi`` multiplies the qubit-exchange block; ``diagonal_shift`` and
    ``zz_coupling`` are the coefficients of 1 x sigma_z and sigma_z x sigma_z
    (SQUID operator in the current basis), all in rad/s.
    """

    g: np.ndarray
    omega_rabi: complex
    diagonal_shift: float
    zz_coupling: float

    @property
    def qubit_qubit_block(self) -> np.ndarray:
        """BEC-space matrix that multiplies the SQUID current operator, sign included."""
        return -np.array([[0, self.omega_rabi], [np.conj(self.omega_rabi), 0]])

    def as_report(self) -> dict[str, float]:
        return {
            "g_x_T": float(np.real(self.g[DOWN, UP, 0])),
            "g_y_T": float(np.real(self.g[DOWN, UP, 1])),
            "g_z_T": float(np.real(self.g[DOWN, UP, 2])),
            "omega_rabi_re_rad_s": self.omega_rabi.real,
            "omega_rabi_im_rad_s": self.omega_rabi.imag,
            "abs_omega_rabi_rad_s": abs(self.omega_rabi),
            "abs_omega_rabi_Hz": abs(self.omega_rabi) / TWO_PI,
            "diagonal_shift_rad_s": self.diagonal_shift,
            "zz_coupling_rad_s": self.zz_coupling,
            "zz_over_omega": abs(self.zz_coupling) / abs(self.omega_rabi)
            if self.omega_rabi else float("nan"),
        }


def interaction_decomposition(g: np.ndarray, params: BecParams) -> CouplingResult:
    mu = resolve_moments(params, g)
    N = params.N
    gmu_dd = _dot(g[DOWN, DOWN], mu[DOWN, DOWN]).real
    gmu_uu = _dot(g[UP, UP], mu[UP, UP]).real
    shift = ((2 * N - 1) * gmu_dd + gmu_uu) / (2 * HBAR)
    zz = (gmu_uu - gmu_dd) / (2 * HBAR)
    return CouplingResult(g=g, omega_rabi=rabi_frequency(g, params),
                          diagonal_shift=shift, zz_coupling=zz)


def compute_coupling(params: BecParams, loop: LoopGeometry, current: float,
                     nodes: int = 32) -> CouplingResult:
    return interaction_decomposition(coupling_vectors(params, loop, current, nodes), params)


def bec_hamiltonian(params: BecParams) -> np.ndarray:
    """(E_hfs/2) sigma_z in the (|1>, |0>) basis [rad/s]."""
    return np.diag([params.E_hfs / 2, -params.E_hfs / 2]).astype(complex)


def integrand_profile(params: BecParams, loop: LoopGeometry, current: float,
                      n: int = 201, half_width: float = 5.0) -> dict[str, np.ndarray]:
    """|phi|^2 B sampled along the loop axis direction through the trap centre."""
    a = params.oscillator_length
    s = np.linspace(-half_width * a, half_width * a, n)
    pts = np.asarray(params.trap_center) + s[:, None] * np.asarray(loop.axis)
    density = ho_ground_state(pts, params) ** 2
    B = magnetic_field_cartesian(pts, loop, current)
    return {"s": s, "x": pts[:, 0], "y": pts[:, 1], "z": pts[:, 2], "density": density,
            "Bx": B[:, 0], "By": B[:, 1], "Bz": B[:, 2]}
