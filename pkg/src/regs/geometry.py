"""Point-set management: stencils, distances, hulls, shift directions, sampling.

Neighbor queries are exact: brute force for small sets, a bucket grid above
that, both returning identical stencils (ties broken by site index).
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PointSet",
    "Stencil",
    "HullInfo",
    "DuplicateSiteError",
    "DegenerateGeometryError",
    "knn_stencil",
    "separation_distance",
    "fill_distance",
    "mesh_ratio",
    "convex_hull",
    "hull_boundary_distance",
    "shift_directions",
    "halton",
    "read_csv",
    "write_csv",
]

BRUTE_FORCE_LIMIT = 2000


class DuplicateSiteError(ValueError):
    pass


class DegenerateGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class PointSet:
    """Immutable set of N points in R^d, stored as an (N, d) array."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("PointSet: expected a non-empty (N, d) array")
        if pts.shape[1] not in (1, 2, 3):
            raise ValueError("PointSet: d must be 1, 2 or 3")
        if not np.all(np.isfinite(pts)):
            raise ValueError("PointSet: coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_grid", None)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


@dataclass(frozen=True)
class Stencil:
    """Evaluation point, selected site indices, and derived geometry."""

    center: np.ndarray
    indices: np.ndarray
    q: float
    rho: float

    @property
    def n(self):
        return len(self.indices)


@dataclass(frozen=True)
class HullInfo:
    vertices: np.ndarray       # ordered indices into the site array
    edge_normals: np.ndarray   # (k, d) outward unit normals; d=1 -> [[-1], [1]]
    dist_to_boundary: float    # signed: positive inside, negative outside


# ---------------------------------------------------------------------------
# neighbor search

def _knn_brute(points, z, n):
    dist = np.sqrt(np.sum((points - z) ** 2, axis=1))
    order = np.lexsort((np.arange(len(points)), dist))
    return order[:n]


class _BucketGrid:
    """Uniform-cell index over a point cloud for expanding-ring kNN."""

    def __init__(self, points):
        self.points = points
        n, d = points.shape
        lo = points.min(axis=0)
        hi = points.max(axis=0)
        extent = np.maximum(hi - lo, 1e-300)
        # aim for ~2 points per cell
        cells_total = max(1, n // 2)
        per_axis = max(1, int(round(cells_total ** (1.0 / d))))
        self.cell = extent / per_axis
        self.lo = lo
        self.shape = np.maximum(((hi - lo) / self.cell).astype(int) + 1, 1)
        self.buckets = {}
        keys = np.floor((points - lo) / self.cell).astype(int)
        keys = np.minimum(keys, self.shape - 1)
        for i, k in enumerate(map(tuple, keys)):
            self.buckets.setdefault(k, []).append(i)

    def query(self, z, n):
        d = self.points.shape[1]
        zi = np.floor((np.asarray(z, dtype=float) - self.lo) / self.cell).astype(int)
        zi = np.clip(zi, 0, self.shape - 1)
        cand = []
        ring = 0
        best_nth = np.inf
        min_cell = float(np.min(self.cell))
        max_ring = int(np.max(self.shape)) + 1
        while ring <= max_ring:
            added = False
            for key in self._ring_keys(zi, ring, d):
                ids = self.buckets.get(key)
                if ids:
                    cand.extend(ids)
                    added = True
            if len(cand) >= n:
                idx = np.asarray(cand)
                dist = np.sqrt(np.sum((self.points[idx] - z) ** 2, axis=1))
                kth = np.partition(dist, n - 1)[n - 1]
                best_nth = kth
                # all points within best_nth are guaranteed collected once the
                # ring's inner boundary exceeds that radius
                if ring * min_cell > best_nth:
                    break
            ring += 1
            if not added and len(cand) >= n and ring * min_cell > best_nth:
                break
        idx = np.unique(np.asarray(cand))
        dist = np.sqrt(np.sum((self.points[idx] - z) ** 2, axis=1))
        order = np.lexsort((idx, dist))
        return idx[order[:n]]

    @staticmethod
    def _ring_keys(center, ring, d):
        if ring == 0:
            yield tuple(center)
            return
        rng = range(-ring, ring + 1)
        if d == 1:
            for dx in (-ring, ring):
                yield (center[0] + dx,)
        elif d == 2:
            for dx in rng:
                for dy in rng:
                    if max(abs(dx), abs(dy)) == ring:
                        yield (center[0] + dx, center[1] + dy)
        else:
            for dx in rng:
                for dy in rng:
                    for dz in rng:
                        if max(abs(dx), abs(dy), abs(dz)) == ring:
                            yield (center[0] + dx, center[1] + dy, center[2] + dz)


def _grid_for(ps: PointSet):
    grid = object.__getattribute__(ps, "_grid")
    if grid is None:
        grid = _BucketGrid(ps.points)
        object.__setattr__(ps, "_grid", grid)
    return grid


def knn_stencil(ps: PointSet, z, n: int) -> Stencil:
    """Stencil of the n nearest sites to z, ties broken by site index."""
    if n < 2:
        raise ValueError("knn_stencil: n must be at least 2")
    if ps.n < n:
        raise ValueError(f"knn_stencil: need {n} points, have {ps.n}")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape != (ps.d,):
        raise ValueError("knn_stencil: center dimension mismatch")
    if ps.n <= BRUTE_FORCE_LIMIT:
        idx = _knn_brute(ps.points, z, n)
    else:
        idx = _grid_for(ps).query(z, n)
    sites = ps.points[idx]
    q = separation_distance(sites)
    rho = float(np.max(np.sqrt(np.sum((sites - z) ** 2, axis=1))))
    return Stencil(center=z, indices=np.asarray(idx), q=q, rho=rho)


def separation_distance(points) -> float:
    """Half the minimum pairwise distance."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) < 2:
        raise ValueError("separation_distance: need at least 2 points")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    iu = np.triu_indices(len(pts), 1)
    dmin = float(np.min(dist[iu]))
    if dmin == 0.0:
        raise DuplicateSiteError("coincident points")
    return 0.5 * dmin


def fill_distance(points, region_samples) -> float:
    """sup over probe points of the distance to the nearest site."""
    pts = np.asarray(points, dtype=float)
    probes = np.asarray(region_samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if probes.ndim == 1:
        probes = probes[:, None]
    if len(pts) == 0 or len(probes) == 0:
        raise ValueError("fill_distance: empty input")
    d2 = np.sum((probes[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    return float(np.sqrt(np.max(np.min(d2, axis=1))))


def mesh_ratio(points, region_samples) -> float:
    """Diagnostic h / q; reported but drives no decision downstream."""
    return fill_distance(points, region_samples) / separation_distance(points)


# ---------------------------------------------------------------------------
# hull geometry (d <= 2)

def _monotone_chain(pts):
    """Indices of hull vertices in counterclockwise order."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def cross(o, a, b):
        return (pts[a, 0] - pts[o, 0]) * (pts[b, 1] - pts[o, 1]) - (
            pts[a, 1] - pts[o, 1]
        ) * (pts[b, 0] - pts[o, 0])

    lower = []
    for i in order:
        while len(lower) > 1 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(i)
    upper = []
    for i in order[::-1]:
        while len(upper) > 1 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(i)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("all sites collinear")
    return np.asarray(hull)


def convex_hull(sites, z) -> HullInfo:
    """Hull of the sites plus the signed distance from z to its boundary.

    d=1 reduces to the interval [min, max]; d=2 uses the monotone chain with
    counterclockwise vertex order.
    """
    pts = np.asarray(sites, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    d = pts.shape[1]
    if d == 1:
        lo_i = int(np.argmin(pts[:, 0]))
        hi_i = int(np.argmax(pts[:, 0]))
        if pts[lo_i, 0] == pts[hi_i, 0]:
            raise DegenerateGeometryError("all sites coincide")
        dist = float(min(z[0] - pts[lo_i, 0], pts[hi_i, 0] - z[0]))
        return HullInfo(
            vertices=np.asarray([lo_i, hi_i]),
            edge_normals=np.asarray([[-1.0], [1.0]]),
            dist_to_boundary=dist,
        )
    if d != 2:
        raise ValueError("convex_hull: only d in {1, 2}")
    verts = _monotone_chain(pts)
    v = pts[verts]
    edges = np.roll(v, -1, axis=0) - v
    lengths = np.sqrt(np.sum(edges**2, axis=1))
    # outward normals of a counterclockwise polygon
    normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1) / lengths[:, None]
    dist = float(np.min(np.sum(normals * (v - z), axis=1)))
    return HullInfo(vertices=verts, edge_normals=normals, dist_to_boundary=dist)


def hull_boundary_distance(sites, z) -> float:
    return convex_hull(sites, z).dist_to_boundary


def shift_directions(hull: HullInfo, sites, z, angle_tol=1e-6):
    """Unit shift directions: rays from z to hull vertices plus edge normals.

    Deduplicated at `angle_tol` radians and sorted (by angle in 2D) so that
    downstream candidate enumeration is deterministic.  Requires z strictly
    inside the hull.  d=1 returns {-1, +1}.
    """
    pts = np.asarray(sites, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if hull.dist_to_boundary <= 0.0:
        raise DegenerateGeometryError("z on or outside the hull boundary")
    if pts.shape[1] == 1:
        return np.asarray([[-1.0], [1.0]])
    rays = pts[hull.vertices] - z
    rays = rays / np.sqrt(np.sum(rays**2, axis=1))[:, None]
    cand = np.vstack([rays, hull.edge_normals])
    ang = np.mod(np.arctan2(cand[:, 1], cand[:, 0]), 2.0 * math.pi)
    order = np.argsort(ang, kind="stable")
    out, out_ang = [], []
    for i in order:
        if out and (ang[i] - out_ang[-1]) < angle_tol:
            continue
        out.append(cand[i])
        out_ang.append(ang[i])
    # wrap-around duplicate
    if len(out) > 1 and (2.0 * math.pi - out_ang[-1] + out_ang[0]) < angle_tol:
        out.pop()
    return np.asarray(out)


# ---------------------------------------------------------------------------
# sampling

_HALTON_BASES = (2, 3, 5)


def _van_der_corput(i, base):
    x, denom = 0.0, 1.0
    while i > 0:
        i, rem = divmod(i, base)
        denom *= base
        x += rem / denom
    return x


def halton(n: int, d: int, skip: int = 0, box=None) -> PointSet:
    """First n Halton points (bases 2, 3, 5) after `skip`, scaled into box.

    box is a (d, 2) array of [lo, hi] per axis; defaults to the unit cube.
    """
    if d > 3:
        raise ValueError("halton: d must be at most 3")
    pts = np.empty((n, d))
    for j in range(d):
        base = _HALTON_BASES[j]
        pts[:, j] = [_van_der_corput(i, base) for i in range(skip + 1, skip + n + 1)]
    if box is not None:
        box = np.asarray(box, dtype=float).reshape(d, 2)
        pts = box[:, 0] + pts * (box[:, 1] - box[:, 0])
    return PointSet(pts)


# ---------------------------------------------------------------------------
# CSV interchange: columns x1..xd[,value], comma-delimited, optional header

def read_csv(path):
    """Returns (PointSet, values-or-None).

    With a header the trailing `value` column is recognized by name; without
    one, any file of 2..4 columns is read as x1..xd plus a value column.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty file")
    header = None
    start = 0
    try:
        float(lines[0].split(",")[0])
    except ValueError:
        header = [tok.strip().lower() for tok in lines[0].split(",")]
        start = 1
    rows = []
    for k, ln in enumerate(lines[start:], start=start + 1):
        try:
            rows.append([float(tok) for tok in ln.split(",")])
        except ValueError as exc:
            raise ValueError(f"{path}: bad row {k}: {ln!r}") from exc
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] < 1 or arr.shape[1] > 4:
        raise ValueError(f"{path}: expected columns x1..xd[,value]")
    ncol = arr.shape[1]
    if header is not None:
        has_value = "value" in header
    else:
        has_value = ncol >= 2
    if has_value:
        return PointSet(arr[:, : ncol - 1]), arr[:, ncol - 1]
    return PointSet(arr), None


def write_csv(path, ps: PointSet, values=None, header=True):
    cols = [f"x{i+1}" for i in range(ps.d)]
    if values is not None:
        cols.append("value")
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(cols) + "\n")
        for i in range(ps.n):
            row = [format(v, ".17g") for v in ps.points[i]]
            if values is not None:
                row.append(format(values[i], ".17g"))
            fh.write(",".join(row) + "\n")
