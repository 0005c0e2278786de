"""Benchmark generators: piecewise 1D/2D test functions and samplers."""

import numpy as np

from .geometry import PointSet, halton

__all__ = ["testfun_1d", "testfun_2d", "antiderivative_family", "sample"]


def testfun_1d(x):
    """Piecewise 1D benchmark on [-1, 1].

    Jumps at -0.8, -0.4, 0 and 0.5, a kink at -0.2, and a curvature break
    at -0.6; smooth oscillatory pieces elsewhere.  Branch intervals are
    closed on the left.
    """
    x_a = np.asarray(x, dtype=float)
    if np.any(x_a < -1.0) or np.any(x_a > 1.0):
        raise ValueError("testfun_1d: domain is [-1, 1]")
    out = np.empty_like(x_a)
    b1 = x_a < -0.8
    b2 = (x_a >= -0.8) & (x_a < -0.6)
    b3 = (x_a >= -0.6) & (x_a < -0.4)
    b4 = (x_a >= -0.4) & (x_a < 0.0)
    b5 = (x_a >= 0.0) & (x_a < 0.5)
    b6 = x_a >= 0.5
    out[b1] = 0.8
    out[b2] = 1.2
    out[b3] = 1.2 + 100.0 * (x_a[b3] + 0.6) ** 2
    out[b4] = 5.0 * np.abs(5.0 * x_a[b4] + 1.0) + 4.0
    out[b5] = 6.0 + 3.0 * np.sin(24.0 * np.pi * x_a[b5])
    out[b6] = 2.0 + np.sin(6.0 * np.pi * x_a[b6])
    if out.ndim == 0:
        return float(out)
    return out


_P1 = (1.5, 4.5)
_P2 = (4.5, 2.0)
_P3 = (3.5, 3.5)


def testfun_2d(x, y):
    """Composite 2D benchmark on [0, 6]^2.

    Features: a smooth tilted oscillatory patch inside a diamond, a curved
    ridge, a cone, an oscillatory disk, a plateau, zero outside.  Branches
    overlap; the first matching branch in this order wins.
    """
    x_a = np.asarray(x, dtype=float)
    y_a = np.asarray(y, dtype=float)
    x_a, y_a = np.broadcast_arrays(x_a, y_a)
    if np.any((x_a < 0) | (x_a > 6) | (y_a < 0) | (y_a > 6)):
        raise ValueError("testfun_2d: domain is [0, 6]^2")
    r1 = np.hypot(x_a - _P1[0], y_a - _P1[1])
    r2 = np.hypot(x_a - _P2[0], y_a - _P2[1])
    r3 = np.hypot(x_a - _P3[0], y_a - _P3[1])
    f1 = (
        -0.01 * np.sin(4 * np.pi * x_a) * np.cos(4 * np.pi * y_a)
        + np.exp(-2.0 * r2)
        + 0.2 * (x_a + y_a - 2.75)
    )
    ridge_arg = np.abs(x_a - np.sin(y_a) - 4.5)
    branches = [
        (np.abs(x_a - 2.25) + np.abs(y_a - 2.25) <= 1.75, f1),
        (ridge_arg <= 0.3, 0.4 * (1.0 - ridge_arg / 0.3)),
        (r1 <= 0.5, 1.0 - 2.0 * r1),
        (
            (x_a >= 2.5) & (x_a <= 4.5) & (y_a >= 2.5) & (y_a <= 4.5) & (r3 <= 1.0),
            0.5 * np.sin(20.0 * r3) / (1.0 + 3.0 * r3),
        ),
        ((x_a >= 0.5) & (x_a <= 5.5) & (y_a >= 0.5) & (y_a <= 5.5), 0.25),
    ]
    out = np.zeros_like(x_a)
    taken = np.zeros(x_a.shape, dtype=bool)
    for cond, val in branches:
        use = cond & ~taken
        out[use] = np.broadcast_to(val, x_a.shape)[use]
        taken |= cond
    if out.ndim == 0:
        return float(out)
    return out


def antiderivative_family(kind, x):
    """Step function and its first/second antiderivatives (vanishing at 0).

    step  -> indicator of (0, inf)
    kink1 -> max(x, 0)
    kink2 -> x^2/2 on x > 0, else 0
    """
    x_a = np.asarray(x, dtype=float)
    pos = x_a > 0.0
    if kind == "step":
        out = np.where(pos, 1.0, 0.0)
    elif kind == "kink1":
        out = np.where(pos, x_a, 0.0)
    elif kind == "kink2":
        out = np.where(pos, 0.5 * x_a * x_a, 0.0)
    else:
        raise ValueError(f"antiderivative_family: unknown kind {kind!r}")
    if out.ndim == 0:
        return float(out)
    return out


def _grid_points(n, box):
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    if d == 1:
        return np.linspace(box[0, 0], box[0, 1], n)[:, None]
    per_axis = int(round(n ** (1.0 / d)))
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in box]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sample(fn, layout, n, box, seed=0, skip=0):
    """PointSet plus values of `fn` at the sampled locations.

    layout: 'uniform_grid' | 'halton' | 'uniform_random'.  Grid and Halton
    layouts are deterministic; the random layout is seeded.  `fn` takes d
    positional coordinate arrays.
    """
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    d = box.shape[0]
    if layout == "uniform_grid":
        pts = _grid_points(n, box)
    elif layout == "halton":
        pts = halton(n, d, skip=skip, box=box).points
    elif layout == "uniform_random":
        rng = np.random.default_rng(seed)
        pts = box[:, 0] + rng.random((n, d)) * (box[:, 1] - box[:, 0])
    else:
        raise ValueError(f"sample: unknown layout {layout!r}")
    ps = PointSet(pts)
    values = np.asarray(fn(*[ps.points[:, j] for j in range(d)]), dtype=float)
    return ps, values
