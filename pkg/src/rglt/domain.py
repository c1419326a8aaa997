"""Peano-Jordan subdomains of the unit hypercube and their grid counts.

A :class:`Domain` classifies points as inside the open set, on the boundary,
or outside. Builtin shapes carry an exact signed distance (negative inside)
and their analytic measure. Implicit domains are given by a strict predicate
and classify boundary points as outside.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import exprlang
from .multiindex import GridSize, grid_indices

log = logging.getLogger(__name__)

OUTSIDE, BOUNDARY, INSIDE = 0, 1, 2

# |signed distance| below this counts as on the boundary
BOUNDARY_TOL = 1e-12

SEGMENT_SAMPLES = 64
BISECTION_STEPS = 40

BUILTIN_KINDS = ("hypercube", "disk", "annulus", "triangle", "l_shape", "polygon", "implicit", "mapped")


class DomainError(ValueError):
    pass


def _points(x, d: int) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if d == 1 else pts[None, :]
    if pts.shape[-1] != d:
        raise DomainError(f"expected {d}-dimensional points, got shape {np.shape(x)}")
    return pts


def _ball_volume(r: float, d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


def _segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(pts - proj, axis=1)


def _polygon_parity(pts: np.ndarray, verts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    nv = len(verts)
    for k in range(nv):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % nv]
        crosses = (y1 > y) != (y2 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < xint)
    return inside


@dataclass(frozen=True, eq=False)
class Domain:
    """A measurable subset of [0,1]^d.

    Use the constructors (:meth:`hypercube`, :meth:`disk`, ...) rather than
    building instances directly.
    """

    kind: str
    d: int
    _classify: Callable[[np.ndarray], np.ndarray]
    _sdf: Callable[[np.ndarray], np.ndarray] | None = None
    measure: float | None = None
    params: dict | None = None
    distance_probe: bool = False

    # --- constructors ------------------------------------------------------

    @classmethod
    def hypercube(cls, d: int, lo: Sequence[float] | float = 0.0, hi: Sequence[float] | float = 1.0) -> "Domain":
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (d,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (d,)).copy()
        if np.any(lo >= hi) or np.any(lo < 0) or np.any(hi > 1):
            raise DomainError(f"box [{lo}, {hi}] is not a nondegenerate subset of [0,1]^{d}")

        def sdf(p):
            below, above = lo - p, p - hi
            outside = np.linalg.norm(np.maximum(np.maximum(below, above), 0.0), axis=1)
            inner = np.min(np.minimum(p - lo, hi - p), axis=1)
            return np.where(outside > 0, outside, -inner)

        return cls._from_sdf("hypercube", d, sdf, float(np.prod(hi - lo)),
                             {"lo": lo.tolist(), "hi": hi.tolist()})

    @classmethod
    def disk(cls, center: Sequence[float], radius: float) -> "Domain":
        """Euclidean ball; a disk when ``center`` has two coordinates."""
        c = np.asarray(center, dtype=float)
        d = c.shape[0]
        if radius <= 0 or np.any(c - radius < -BOUNDARY_TOL) or np.any(c + radius > 1 + BOUNDARY_TOL):
            raise DomainError(f"ball center={c.tolist()} radius={radius} not inside [0,1]^{d}")
        return cls._from_sdf("disk", d, lambda p: np.linalg.norm(p - c, axis=1) - radius,
                             _ball_volume(radius, d), {"center": c.tolist(), "radius": radius})

    @classmethod
    def annulus(cls, center: Sequence[float], r_inner: float, r_outer: float) -> "Domain":
        c = np.asarray(center, dtype=float)
        d = c.shape[0]
        if not 0 < r_inner < r_outer:
            raise DomainError("annulus needs 0 < r_inner < r_outer")
        if np.any(c - r_outer < -BOUNDARY_TOL) or np.any(c + r_outer > 1 + BOUNDARY_TOL):
            raise DomainError("annulus not inside the unit hypercube")

        def sdf(p):
            r = np.linalg.norm(p - c, axis=1)
            return np.maximum(r - r_outer, r_inner - r)

        return cls._from_sdf("annulus", d, sdf, _ball_volume(r_outer, d) - _ball_volume(r_inner, d),
                             {"center": c.tolist(), "r_inner": r_inner, "r_outer": r_outer})

    @classmethod
    def polygon(cls, vertices: Sequence[Sequence[float]], kind: str = "polygon") -> "Domain":
        """Simple polygon in [0,1]^2; even-odd rule, edges count as boundary."""
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise DomainError("a polygon needs at least three 2D vertices")
        if np.any(v < -BOUNDARY_TOL) or np.any(v > 1 + BOUNDARY_TOL):
            raise DomainError("polygon vertices must lie in [0,1]^2")
        x, y = v[:, 0], v[:, 1]
        area = 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

        def sdf(p):
            dist = np.min(
                np.stack([_segment_distance(p, v[k], v[(k + 1) % len(v)]) for k in range(len(v))]),
                axis=0,
            )
            return np.where(_polygon_parity(p, v), -dist, dist)

        return cls._from_sdf(kind, 2, sdf, float(area), {"vertices": v.tolist()})

    @classmethod
    def triangle(cls, vertices: Sequence[Sequence[float]] = ((0, 0), (1, 0), (0, 1))) -> "Domain":
        return cls.polygon(vertices, kind="triangle")

    @classmethod
    def l_shape(cls) -> "Domain":
        """[0,1]^2 without the open upper-left quarter (0,0.5)x(0.5,1)."""
        verts = [(0, 0), (1, 0), (1, 1), (0.5, 1), (0.5, 0.5), (0, 0.5)]
        return cls.polygon(verts, kind="l_shape")

    @classmethod
    def implicit(cls, predicate: str | Callable[[np.ndarray], np.ndarray], d: int,
                 distance: str | Callable[[np.ndarray], np.ndarray] | None = None,
                 measure: float | None = None, distance_probe: bool = False) -> "Domain":
        """Domain {x : predicate(x)} intersected with the open unit cube.

        ``distance`` is an optional signed distance (negative inside); without
        it, boundary-distance queries need ``distance_probe=True``, which
        switches on an approximate probe estimator.
        """
        if isinstance(predicate, str):
            node = exprlang.parse(predicate, exprlang.PREDICATE)
            pred = lambda p: exprlang.evaluate(node, p)  # noqa: E731
            label = predicate
        else:
            pred, label = predicate, getattr(predicate, "__name__", "<predicate>")
        sdf = None
        if isinstance(distance, str):
            dnode = exprlang.parse(distance, exprlang.SCALAR)
            sdf = lambda p: exprlang.evaluate(dnode, p)  # noqa: E731
        elif distance is not None:
            sdf = distance

        def classify(p):
            in_cube = np.all((p > 0) & (p < 1), axis=1)
            inside = np.asarray(pred(p), dtype=bool) & in_cube
            return np.where(inside, INSIDE, OUTSIDE)

        return cls("implicit", d, classify, sdf, measure, {"predicate": label},
                   distance_probe=distance_probe)

    @classmethod
    def mapped(cls, base: "Domain", matrix: Sequence[Sequence[float]], offset: Sequence[float]) -> "Domain":
        """Affine image {M y + t : y in base}.

        The signed distance is the base one scaled by the smallest singular
        value of M: exact for similarities, a lower bound in modulus otherwise.
        """
        M = np.asarray(matrix, dtype=float)
        t = np.asarray(offset, dtype=float)
        if M.shape != (base.d, base.d) or t.shape != (base.d,):
            raise DomainError("affine map shape does not match the base domain")
        det = np.linalg.det(M)
        if abs(det) < 1e-14:
            raise DomainError("affine map is singular")
        Minv = np.linalg.inv(M)
        smin = np.linalg.svd(M, compute_uv=False).min()
        pull = lambda p: (p - t) @ Minv.T  # noqa: E731
        sdf = None
        if base._sdf is not None:
            sdf = lambda p: smin * base._sdf(pull(p))  # noqa: E731
        measure = None if base.measure is None else abs(det) * base.measure
        return cls("mapped", base.d, lambda p: base._classify(pull(p)), sdf, measure,
                   {"base": base.kind, "matrix": M.tolist(), "offset": t.tolist()},
                   distance_probe=base.distance_probe)

    @classmethod
    def _from_sdf(cls, kind, d, sdf, measure, params) -> "Domain":
        def classify(p):
            s = sdf(p)
            return np.where(np.abs(s) <= BOUNDARY_TOL, BOUNDARY, np.where(s < 0, INSIDE, OUTSIDE))

        return cls(kind, d, classify, sdf, measure, params)

    @classmethod
    def from_config(cls, cfg: dict, d: int | None = None) -> "Domain":
        kind = cfg.get("kind", "hypercube")
        if kind == "hypercube":
            return cls.hypercube(cfg.get("dimension", d or 2), cfg.get("lo", 0.0), cfg.get("hi", 1.0))
        if kind == "disk":
            return cls.disk(cfg["center"], cfg["radius"])
        if kind == "annulus":
            return cls.annulus(cfg["center"], cfg["r_inner"], cfg["r_outer"])
        if kind == "triangle":
            return cls.triangle(cfg.get("vertices", ((0, 0), (1, 0), (0, 1))))
        if kind == "l_shape":
            return cls.l_shape()
        if kind == "polygon":
            return cls.polygon(cfg["vertices"])
        if kind == "implicit":
            return cls.implicit(cfg["predicate"], cfg.get("dimension", d or 2), cfg.get("distance"),
                                cfg.get("measure"), cfg.get("distance_probe", False))
        if kind == "mapped":
            return cls.mapped(cls.from_config(cfg["base"], d), cfg["matrix"], cfg["offset"])
        raise DomainError(f"unknown domain kind {kind!r}; expected one of {BUILTIN_KINDS}")

    # --- point queries -------------------------------------------------------

    def classify(self, x) -> np.ndarray:
        return np.asarray(self._classify(_points(x, self.d)))

    def inside(self, x) -> np.ndarray:
        """Membership in the open set."""
        return self.classify(x) == INSIDE

    def contains(self, x) -> np.ndarray:
        """Membership in the closure."""
        return self.classify(x) != OUTSIDE

    @property
    def has_distance(self) -> bool:
        return self._sdf is not None

    def signed_distance(self, x) -> np.ndarray:
        if self._sdf is None:
            raise DomainError(f"{self.kind} domain has no signed distance")
        return np.asarray(self._sdf(_points(x, self.d)), dtype=float)

    def boundary_distance(self, x, radius: float) -> np.ndarray:
        """|signed distance|, or a probe estimate for implicit domains.

        The probe estimate returns 0 where membership changes between x and
        one of the 2^d diagonal probes at ``radius`` (a point "within radius"
        of the boundary) and ``inf`` otherwise.
        """
        pts = _points(x, self.d)
        if self._sdf is not None:
            return np.abs(self._sdf(pts))
        if not self.distance_probe:
            raise DomainError("implicit domain has no distance estimator; pass distance= or distance_probe=True")
        here = self.inside(pts)
        near = np.zeros(len(pts), dtype=bool)
        corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * self.d), indexing="ij")).reshape(self.d, -1).T
        for c in corners / math.sqrt(self.d):
            near |= self.inside(pts + radius * c) != here
        return np.where(near, 0.0, np.inf)

    def ray_reach(self, points: np.ndarray, axis: int, sign: int, step: float, tmax: float) -> np.ndarray:
        """sup{t <= tmax : x + sign*r*step*e_axis lies in the open set for all r <= t}.

        Sampled at SEGMENT_SAMPLES equispaced parameters; the first exit
        interval is refined by bisection on the membership predicate. A first
        exit sample lying on the boundary is taken as exact.
        """
        pts = _points(points, self.d)
        P = len(pts)
        if P == 0:
            return np.zeros(0)
        ts = tmax * np.arange(1, SEGMENT_SAMPLES + 1) / SEGMENT_SAMPLES
        probe = np.repeat(pts[:, None, :], SEGMENT_SAMPLES, axis=1)
        probe[:, :, axis] += sign * ts[None, :] * step
        cls_ = self.classify(probe.reshape(-1, self.d)).reshape(P, SEGMENT_SAMPLES)
        bad = cls_ != INSIDE
        reach = np.full(P, float(tmax))
        rows = np.flatnonzero(bad.any(axis=1))
        if rows.size == 0:
            return reach
        first = bad[rows].argmax(axis=1)
        on_boundary = cls_[rows, first] == BOUNDARY
        reach[rows[on_boundary]] = ts[first[on_boundary]]
        rows, first = rows[~on_boundary], first[~on_boundary]
        lo = np.where(first > 0, ts[np.maximum(first - 1, 0)], 0.0)
        hi = ts[first]
        base = pts[rows]
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            q = base.copy()
            q[:, axis] += sign * mid * step
            ok = self.inside(q)
            lo = np.where(ok, mid, lo)
            hi = np.where(ok, hi, mid)
        reach[rows] = lo
        # round-off at the segment end must not break the exact s == tmax test
        reach[reach > tmax * (1 - 1e-10)] = tmax
        return reach

    def __repr__(self) -> str:
        return f"Domain({self.kind}, d={self.d}, {self.params})"


# --- grid operations ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridMask:
    """Bit vector of chi_Omega on the grid points i/(n+1), in lexicographic order."""

    n: GridSize
    bits: np.ndarray

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def indices(self) -> np.ndarray:
        """1-based flat indices of the set bits."""
        return np.flatnonzero(self.bits) + 1

    def toggled(self, flat_indices: Sequence[int]) -> "GridMask":
        bits = self.bits.copy()
        idx = np.asarray(flat_indices, dtype=np.int64) - 1
        bits[idx] = ~bits[idx]
        return GridMask(self.n, bits)


def grid_coordinates(n: GridSize) -> np.ndarray:
    """(N, d) array of the points i/(n+1), i = 1..n, lexicographic order."""
    idx = grid_indices(n)
    return idx / (np.asarray(n.n, dtype=float) + 1.0)


def grid_points(n: GridSize):
    """Yield (d-index, point) pairs of the interior grid in lexicographic order."""
    idx = grid_indices(n)
    pts = grid_coordinates(n)
    for i, p in zip(idx, pts):
        yield tuple(int(c) for c in i), p


def _check_dim(domain: Domain, n: GridSize) -> None:
    if domain.d != n.d:
        raise DomainError(f"domain dimension {domain.d} does not match grid dimension {n.d}")


def mask(domain: Domain, n: GridSize, closure: bool = False) -> GridMask:
    _check_dim(domain, n)
    pts = grid_coordinates(n)
    bits = domain.contains(pts) if closure else domain.inside(pts)
    return GridMask(n, np.asarray(bits, dtype=bool))


def boundary_band_count(domain: Domain, n: GridSize, c: float) -> int:
    """Number of grid points at distance <= c from the boundary."""
    _check_dim(domain, n)
    if c < 0:
        raise ValueError("band width must be non-negative")
    dist = domain.boundary_distance(grid_coordinates(n), c)
    return int(np.count_nonzero(dist <= c))


def near_boundary_points(domain: Domain, n: GridSize, k: float) -> set[tuple[int, ...]]:
    """Interior grid points whose open axis segments of half-length k*h_i leave the open set."""
    return {tuple(int(c) for c in i) for i in grid_indices(n)[near_boundary_flags(domain, n, k)]}


def near_boundary_flags(domain: Domain, n: GridSize, k: float) -> np.ndarray:
    """Boolean vector over the full grid marking the points of :func:`near_boundary_points`."""
    _check_dim(domain, n)
    pts = grid_coordinates(n)
    inner = domain.inside(pts)
    flags = np.zeros(n.N, dtype=bool)
    sel = np.flatnonzero(inner)
    h = n.h
    for axis in range(n.d):
        for sign in (1, -1):
            reach = domain.ray_reach(pts[sel], axis, sign, h[axis], k)
            flags[sel[reach < k]] = True
    return flags


def measure_estimate(domain: Domain, n: GridSize) -> float:
    return mask(domain, n).count / n.N
