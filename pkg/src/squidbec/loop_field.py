"""Static fields of a thin circular current loop.

The azimuthal vector potential is written as

    A_phi = (mu0 I d / pi) S^{-1/2} g(m),   g(m) = [(2 - m) K - 2 E] / m,

with S = (d + rho)^2 + z^2 and m = 4 d rho / S the squared elliptic modulus.
B follows from analytic derivatives of g.  For small m the bracket suffers
catastrophic cancellation, so a power series with the cancelling leading terms
removed is used there instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import MU_0
from .elliptic import agm_KE

_SERIES_BELOW = 0.25
_N_TERMS = 60


class SingularPointError(ValueError):
    """Field requested inside the wire volume."""


def _series_coefficients(n_terms: int = _N_TERMS):
    # c_j = ((2j-1)!! / (2j)!!)^2 are the Maclaurin coefficients of 2K/pi in m
    c = np.empty(n_terms + 1)
    c[0] = 1.0
    for j in range(1, n_terms + 1):
        c[j] = c[j - 1] * ((2 * j - 1) / (2 * j)) ** 2
    n = np.arange(2, n_terms + 2)
    a = c[n - 1] * (n - 1) / n           # (2 - m)K - 2E = (pi/2) sum_{n>=2} a_n m^n
    g = a                                 # g = f/m       -> powers m^{n-1}
    p = c[n - 1] * (n - 1)                # g/m + g'      -> powers m^{n-2}
    q = a * (2 * n - 1)                   # g + 2 m g'    -> powers m^{n-1}
    # polyval wants highest power first; the lowest power is m^1 for g, q and m^0 for p
    return (np.concatenate([g[::-1], [0.0]]),
            p[::-1],
            np.concatenate([q[::-1], [0.0]]))


_G_SERIES, _P_SERIES, _Q_SERIES = _series_coefficients()


def bracket_terms(m, kc):
    """Return g, g/m + g', g + 2 m g' for squared modulus ``m``.

    ``kc`` is the complementary modulus sqrt(1 - m), supplied by the caller so
    that it keeps full precision near the wire.
    """
    m = np.asarray(m, dtype=float)
    kc = np.asarray(kc, dtype=float)
    g = np.empty_like(m)
    p = np.empty_like(m)
    q = np.empty_like(m)

    small = m < _SERIES_BELOW
    if np.any(small):
        ms = m[small]
        g[small] = 0.5 * np.pi * np.polyval(_G_SERIES, ms)
        p[small] = 0.5 * np.pi * np.polyval(_P_SERIES, ms)
        q[small] = 0.5 * np.pi * np.polyval(_Q_SERIES, ms)

    big = ~small
    if np.any(big):
        mb, kcb = m[big], kc[big]
        K, E = agm_KE(kcb)
        kc2 = kcb * kcb
        dK = (E - kc2 * K) / (2 * mb * kc2)
        dE = (E - K) / (2 * mb)
        f = (2 - mb) * K - 2 * E
        df = -K + (2 - mb) * dK - 2 * dE
        gb = f / mb
        dg = (df - gb) / mb
        g[big] = gb
        p[big] = gb / mb + dg
        q[big] = gb + 2 * mb * dg
    return g, p, q


@dataclass(frozen=True)
class LoopGeometry:
    """Circular loop of radius ``radius`` made from wire of radius ``wire_radius``.

    ``axis`` is normalised on construction.  Thin-wire validity is enforced as
    ``wire_radius < radius / 10``; the wire radius enters nowhere else.
    """

    radius: float
    wire_radius: float = 0.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    axis: tuple[float, float, float] = (0.0, 0.0, 1.0)
    _frame: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("loop radius must be positive")
        if not 0 <= self.wire_radius < self.radius / 10:
            raise ValueError("wire radius must satisfy 0 <= a < d/10")
        ax = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(ax)
        if not norm > 0:
            raise ValueError("axis must be non-zero")
        ax = ax / norm
        object.__setattr__(self, "axis", tuple(float(x) for x in ax))
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        # e1 from the coordinate direction least aligned with the axis
        trial = np.eye(3)[np.argmin(np.abs(ax))]
        e1 = trial - ax * (trial @ ax)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(ax, e1)
        object.__setattr__(self, "_frame", np.vstack([e1, e2, ax]))

    @property
    def frame(self) -> np.ndarray:
        """Rows are the loop-local unit vectors (e1, e2, axis) in the global frame."""
        return self._frame

    def to_local(self, xyz) -> np.ndarray:
        return (np.asarray(xyz, dtype=float) - np.asarray(self.center)) @ self._frame.T

    def to_global_vector(self, v_local) -> np.ndarray:
        return np.asarray(v_local) @ self._frame

    def wire_distance(self, xyz) -> np.ndarray:
        loc = self.to_local(xyz)
        rho = np.hypot(loc[..., 0], loc[..., 1])
        return np.hypot(rho - self.radius, loc[..., 2])


@dataclass(frozen=True)
class FieldPoint:
    """Loop-centred spherical coordinates: distance ``r`` and polar angle ``theta``."""

    r: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and math.isfinite(self.theta)) or self.r < 0:
            raise ValueError("field point must have finite r >= 0 and theta")

    @classmethod
    def from_cartesian(cls, xyz, loop: LoopGeometry) -> FieldPoint:
        loc = loop.to_local(xyz)
        r = float(np.linalg.norm(loc))
        theta = math.atan2(math.hypot(loc[0], loc[1]), loc[2]) if r > 0 else 0.0
        return cls(r, theta)

    @property
    def rho(self) -> float:
        return self.r * math.sin(self.theta)

    @property
    def z(self) -> float:
        return self.r * math.cos(self.theta)


def _cylindrical_fields(rho, z, loop: LoopGeometry, current: float):
    """A_phi, B_rho, B_z at loop-local cylindrical coordinates."""
    rho = np.abs(np.asarray(rho, dtype=float))
    z = np.asarray(z, dtype=float)
    d = loop.radius
    dist = np.hypot(rho - d, z)
    inside = dist <= loop.wire_radius if loop.wire_radius > 0 else dist == 0
    if np.any(inside):
        raise SingularPointError(
            f"{int(np.count_nonzero(inside))} point(s) inside the wire volume")
    S = (d + rho) ** 2 + z * z
    m = 4 * d * rho / S
    kc = dist / np.sqrt(S)
    g, p, q = bracket_terms(m, kc)
    c = MU_0 * current * d / np.pi
    S12 = np.sqrt(S)
    S32 = S * S12
    A_phi = c * g / S12
    B_rho = c * z * q / S32
    B_z = c * (4 * d * p - (d + rho) * q) / S32
    return A_phi, B_rho, B_z


def vector_potential(p: FieldPoint, loop: LoopGeometry, current: float) -> float:
    """Azimuthal vector potential A_phi [T m] at a spherical field point."""
    A, _, _ = _cylindrical_fields(p.rho, p.z, loop, current)
    return float(A)


def magnetic_field(p: FieldPoint, loop: LoopGeometry, current: float) -> np.ndarray:
    """(B_r, B_theta, B_phi) [T] at a spherical field point; B_phi is identically zero."""
    _, Br, Bz = _cylindrical_fields(p.rho, p.z, loop, current)
    s, c = math.sin(p.theta), math.cos(p.theta)
    return np.array([Br * s + Bz * c, Br * c - Bz * s, 0.0])


def fields_cartesian(xyz, loop: LoopGeometry, current: float) -> tuple[np.ndarray, np.ndarray]:
    """Vector potential and magnetic field at Cartesian points.

    Parameters
    ----------
    xyz : array_like, shape (..., 3)
        Global Cartesian positions [m].

    Returns
    -------
    A, B : ndarray, shape (..., 3)
        Vector potential [T m] and magnetic field [T] in the global frame.
    """
    loc = loop.to_local(xyz)
    x, y, z = loc[..., 0], loc[..., 1], loc[..., 2]
    rho = np.hypot(x, y)
    A_phi, B_rho, B_z = _cylindrical_fields(rho, z, loop, current)
    safe = np.where(rho > 0, rho, 1.0)
    cos_p = np.where(rho > 0, x / safe, 0.0)
    sin_p = np.where(rho > 0, y / safe, 0.0)
    A_loc = np.stack([-A_phi * sin_p, A_phi * cos_p, np.zeros_like(A_phi)], axis=-1)
    B_loc = np.stack([B_rho * cos_p, B_rho * sin_p, B_z], axis=-1)
    return loop.to_global_vector(A_loc), loop.to_global_vector(B_loc)


def magnetic_field_cartesian(xyz, loop: LoopGeometry, current: float) -> np.ndarray:
    return fields_cartesian(xyz, loop, current)[1]


@dataclass(frozen=True)
class FieldOperatorAmplitudes:
    """Scalar profiles multiplying qubit Pauli operators.

    ``magnetic`` multiplies sigma_z; ``electric`` multiplies sigma_y and equals
    A(r) times the tunnelling splitting.
    """

    points: np.ndarray
    magnetic: np.ndarray
    electric: np.ndarray


def field_operator_amplitudes(xyz, loop: LoopGeometry, current: float,
                              delta: float) -> FieldOperatorAmplitudes:
    A, B = fields_cartesian(xyz, loop, current)
    return FieldOperatorAmplitudes(np.asarray(xyz, dtype=float), B, A * delta)
