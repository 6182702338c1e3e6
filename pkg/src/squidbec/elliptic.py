"""Complete elliptic integrals K and E by the arithmetic-geometric mean.

The modulus convention is K(k) = int_0^{pi/2} (1 - k^2 sin^2 x)^{-1/2} dx.
"""

from __future__ import annotations

import numpy as np

_MAX_ITER = 40


def agm_KE(kc):
    """K and E from the complementary modulus ``kc = sqrt(1 - k^2)``.

    Passing ``kc`` directly avoids the cancellation in ``1 - k^2`` close to the
    logarithmic singularity at k = 1.  ``kc`` must be strictly positive.
    """
    kc = np.asarray(kc, dtype=float)
    a = np.ones_like(kc)
    b = kc.copy()
    c2 = (1.0 - kc) * (1.0 + kc)  # c_0^2 = k^2
    weight = 0.5
    total = weight * c2
    for _ in range(_MAX_ITER):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), np.sqrt(a * b)
        weight *= 2.0
        total = total + weight * c * c
        if np.all(np.abs(c) <= 1e-17 * a):
            break
    K = np.pi / (2.0 * a)
    return K, K * (1.0 - total)


def _modulus(k, allow_one: bool):
    k = np.asarray(k, dtype=float)
    upper_ok = (k <= 1.0) if allow_one else (k < 1.0)
    if np.any(~((k >= 0.0) & upper_ok)):
        bound = "[0, 1]" if allow_one else "[0, 1)"
        raise ValueError(f"elliptic modulus must lie in {bound}")
    return k


def elliptic_K(k):
    """Complete elliptic integral of the first kind; the pole at k = 1 is rejected."""
    k = _modulus(k, allow_one=False)
    K, _ = agm_KE(np.sqrt((1.0 - k) * (1.0 + k)))
    return K[()] if K.ndim == 0 else K


def elliptic_E(k):
    """Complete elliptic integral of the second kind, E(1) = 1."""
    k = _modulus(k, allow_one=True)
    at_one = k == 1.0
    kc = np.sqrt((1.0 - k) * (1.0 + k))
    _, E = agm_KE(np.where(at_one, 0.5, kc))
    E = np.where(at_one, 1.0, E)
    return E[()] if E.ndim == 0 else E
