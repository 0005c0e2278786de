"""Sobolev (Whittle-Matern) kernel evaluation and native-norm machinery.

The kernel family is phi_m(r) = (eps*r)^nu * K_nu(eps*r) with nu = m - d/2,
positive definite for m > d/2.  Native norms of interpolants are computed
through a symmetric positive-definite factorization of the kernel matrix;
explicit inverses are never formed.
"""

import threading
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg import LinAlgError as _ScipyLinAlgError

from .special import bessel_k, gamma_fn

__all__ = [
    "KernelSpec",
    "InterpolantCoefficients",
    "FactorizationError",
    "DuplicateSiteError",
    "kernel_eval",
    "kernel_matrix",
    "solve_interpolant",
    "native_norm",
    "native_norm_from_matrix",
    "evaluate_interpolant",
    "lambda_min",
    "radial_profile",
    "reset_solve_count",
    "solve_count",
]


class FactorizationError(np.linalg.LinAlgError):
    """SPD factorization failed; carries the offending pivot index."""

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(message or f"kernel matrix not numerically SPD (pivot {pivot})")


class DuplicateSiteError(ValueError):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """One member of the kernel family: smoothness m, shape eps, dimension d."""

    m: float
    eps: float
    d: int

    def __post_init__(self):
        if not (self.m > self.d / 2.0):
            raise ValueError(f"KernelSpec: m={self.m} must exceed d/2={self.d/2}")
        if not (self.eps > 0.0):
            raise ValueError("KernelSpec: eps must be positive")
        if self.d not in (1, 2, 3):
            raise ValueError("KernelSpec: d must be 1, 2 or 3")

    @property
    def nu(self):
        return self.m - self.d / 2.0


@dataclass(frozen=True)
class InterpolantCoefficients:
    alpha: np.ndarray
    sites: np.ndarray
    spec: KernelSpec


# ---------------------------------------------------------------------------
# instrumentation: count SPD factorizations (used by the sweep contracts)

_count_lock = threading.Lock()
_solve_count = 0


def reset_solve_count():
    global _solve_count
    with _count_lock:
        _solve_count = 0


def solve_count():
    with _count_lock:
        return _solve_count


def _bump_count():
    global _solve_count
    with _count_lock:
        _solve_count += 1


# ---------------------------------------------------------------------------
# radial profile

def radial_profile(nu, s):
    """G_nu(s) = s^nu * K_nu(s) with its finite limit 2^(nu-1)*Gamma(nu) at s=0.

    Valid for nu > 0; the limit continuation also covers arguments small
    enough that K_nu alone overflows (the product stays finite).
    """
    s_a = np.asarray(s, dtype=float)
    out = np.empty(s_a.shape, dtype=float)
    limit = 2.0 ** (nu - 1.0) * gamma_fn(nu)
    zero = s_a <= 0.0
    out[zero] = limit
    if np.any(~zero):
        sv = s_a[~zero]
        val = sv**nu * bessel_k(nu, sv)
        out[~zero] = np.where(np.isfinite(val), val, limit)
    if out.ndim == 0:
        return float(out)
    return out


def kernel_eval(spec: KernelSpec, r):
    """phi(eps*r) for r >= 0, with the analytic value at r = 0."""
    return radial_profile(spec.nu, spec.eps * np.asarray(r, dtype=float))


def _as_sites(sites):
    pts = np.asarray(sites, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    return pts


def _distance_matrix(sites):
    pts = _as_sites(sites)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def kernel_matrix(spec: KernelSpec, sites):
    """Symmetric kernel matrix Phi_m(X, X)."""
    pts = _as_sites(sites)
    r = _distance_matrix(pts)
    n = len(pts)
    if n > 1:
        scale = float(np.max(r))
        iu = np.triu_indices(n, 1)
        if np.min(r[iu]) <= 1e-14 * max(scale, 1.0):
            j = int(np.argmin(r[iu]))
            raise DuplicateSiteError(f"coincident sites (pair index {j})")
    a = radial_profile(spec.nu, spec.eps * r)
    return 0.5 * (a + a.T)


def _pivot_from_message(exc):
    # scipy reports "k-th leading minor of the array is not positive definite"
    msg = str(exc)
    head = msg.split("-", 1)[0]
    try:
        return int(head)
    except ValueError:
        return -1


def _factor(a, jitter=False):
    """Cholesky factor of a; optional one-shot ridge retry.

    Returns (factor, ridge_used).  Raises FactorizationError when the
    matrix is not numerically SPD (and jitter is off or also fails).
    """
    _bump_count()
    try:
        return cho_factor(a, lower=True, check_finite=False), 0.0
    except (_ScipyLinAlgError, np.linalg.LinAlgError) as exc:
        if not jitter:
            raise FactorizationError(_pivot_from_message(exc)) from exc
    ridge = 1e-12 * np.trace(a) / len(a)
    try:
        return cho_factor(a + ridge * np.eye(len(a)), lower=True, check_finite=False), ridge
    except (_ScipyLinAlgError, np.linalg.LinAlgError) as exc:
        raise FactorizationError(_pivot_from_message(exc), "jittered kernel matrix still not SPD") from exc


def solve_interpolant(spec: KernelSpec, sites, values, jitter=False):
    pts = _as_sites(sites)
    y = np.asarray(values, dtype=float)
    if y.shape != (len(pts),):
        raise ValueError("values length must match number of sites")
    a = kernel_matrix(spec, pts)
    fac, _ = _factor(a, jitter=jitter)
    alpha = cho_solve(fac, y, check_finite=False)
    return InterpolantCoefficients(alpha=alpha, sites=pts, spec=spec)


def native_norm_from_matrix(a, values, jitter=False):
    """sqrt(Y^T A^{-1} Y) for a prebuilt SPD kernel matrix A."""
    y = np.asarray(values, dtype=float)
    fac, _ = _factor(a, jitter=jitter)
    alpha = cho_solve(fac, y, check_finite=False)
    sq = float(y @ alpha)
    if sq < 0.0:
        raise FactorizationError(-1, "negative quadratic form (conditioning breakdown)")
    return np.sqrt(sq)


def native_norm(spec: KernelSpec, sites, values, jitter=False):
    """Native-space norm of the interpolant of (sites, values)."""
    a = kernel_matrix(spec, sites)
    return native_norm_from_matrix(a, values, jitter=jitter)


def evaluate_interpolant(coeffs: InterpolantCoefficients, x):
    """u(x) = sum_j alpha_j phi(|x - x_j|).

    x may be a scalar (d=1), a length-d point, or a (k, d) batch; for d=1 a
    1-d array is read as a batch of query points.
    """
    pts = coeffs.sites
    d = pts.shape[1]
    xq = np.asarray(x, dtype=float)
    if xq.ndim == 0:
        xq, single = xq.reshape(1, 1), True
    elif xq.ndim == 1:
        if d == 1:
            xq, single = xq[:, None], False
        else:
            if xq.shape[0] != d:
                raise ValueError("point dimension mismatch")
            xq, single = xq[None, :], True
    else:
        single = False
    r = np.sqrt(np.sum((xq[:, None, :] - pts[None, :, :]) ** 2, axis=-1))
    vals = radial_profile(coeffs.spec.nu, coeffs.spec.eps * r) @ coeffs.alpha
    return float(vals[0]) if single else vals


def lambda_min(spec: KernelSpec, sites, tol=1e-6, max_iter=500):
    """Smallest eigenvalue of Phi_m(X, X) by inverse power iteration."""
    a = kernel_matrix(spec, sites)
    n = len(a)
    if n == 1:
        return float(a[0, 0])
    fac, _ = _factor(a)
    # deterministic start with components in all directions
    v = np.ones(n) + np.linspace(0.0, 0.5, n)
    v /= np.linalg.norm(v)
    lam = np.inf
    for _ in range(max_iter):
        w = cho_solve(fac, v, check_finite=False)
        nw = np.linalg.norm(w)
        if nw == 0.0 or not np.isfinite(nw):
            raise FactorizationError(-1, "inverse iteration produced a degenerate vector")
        lam_new = float(v @ w) / (nw * nw)  # Rayleigh quotient of A at w/|w|
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new
        lam = lam_new
    raise RuntimeError(f"lambda_min: no convergence within {max_iter} iterations")
