"""Special functions backing the Sobolev kernel family.

Modified Bessel function of the second kind K_nu with real (fractional)
order, and the gamma function for the kernel's diagonal limit.  Both are
thin, contract-checked fronts over scipy.special (AMOS zbesk implements the
Temme series / uniform asymptotic scheme for fractional orders).
"""

import numpy as np
from scipy import special as _sp

__all__ = ["bessel_k", "gamma_fn"]

# Orders supported by the kernel sweep (m in (d/2, 5], d <= 3, with margin).
MAX_ORDER = 10.0


def bessel_k(nu, x):
    """K_nu(x) for real order nu and x > 0.

    Uses K_{-nu}(x) = K_nu(x), so only |nu| matters.  For x so small that
    the value exceeds the floating range the result saturates to +inf
    rather than raising, letting norm sweeps near q -> 0 degrade gracefully.
    Scalar in, scalar out; arrays broadcast elementwise.
    """
    nu_a = np.asarray(nu, dtype=float)
    x_a = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(nu_a)) or np.any(~np.isfinite(x_a)):
        raise ValueError("bessel_k: non-finite input")
    if np.any(x_a <= 0.0):
        raise ValueError("bessel_k: requires x > 0")
    if np.any(np.abs(nu_a) > MAX_ORDER):
        raise ValueError(f"bessel_k: |nu| > {MAX_ORDER} unsupported")
    out = _sp.kv(np.abs(nu_a), x_a)
    # scipy signals overflow with inf already; map any nan from the
    # overflow corner to inf as well (K_nu > 0 on the whole domain).
    out = np.where(np.isnan(out), np.inf, out)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_fn(x):
    """Gamma function on x > 0."""
    x_a = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x_a)) or np.any(x_a <= 0.0):
        raise ValueError("gamma_fn: requires finite x > 0")
    out = _sp.gamma(x_a)
    if out.ndim == 0:
        return float(out)
    return out
