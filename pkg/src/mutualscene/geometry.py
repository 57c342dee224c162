"""2D polygon kernel: regions with holes, booleans, signed offsets, rigid
transforms, minimum-area bounding rectangles, and inscribed-shape fitting.

All coordinates are meters. Every operation is a pure function on immutable
values; nothing here keeps mutable state, so concurrent evaluation is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import shapely
import shapely.affinity
from shapely.geometry import MultiPolygon, Point, Polygon
from shapely.geometry.polygon import orient

# Coordinates are snapped to this grid at construction; consecutive duplicate
# vertices closer than the grid collapse.
SNAP_GRID = 1e-9

_JOIN_STYLES = {"miter": "mitre", "round": "round"}
MITER_LIMIT = 4.0


class GeometryError(ValueError):
    """Invalid geometric input (empty region where one is required, bad ring)."""


def _clean(geom) -> MultiPolygon:
    """Normalize any GEOS output to a canonical, snapped MultiPolygon."""
    if geom.is_empty:
        return MultiPolygon()
    # Keep only areal components; booleans may emit point/line artifacts.
    if geom.geom_type == "Polygon":
        polys = [geom]
    elif geom.geom_type == "MultiPolygon":
        polys = list(geom.geoms)
    elif geom.geom_type == "GeometryCollection":
        polys = [g for g in geom.geoms if g.geom_type in ("Polygon", "MultiPolygon")]
        polys = [p for g in polys for p in (g.geoms if g.geom_type == "MultiPolygon" else [g])]
    else:
        polys = []
    polys = [p for p in polys if not p.is_empty and p.area > 0.0]
    if not polys:
        return MultiPolygon()
    merged = shapely.set_precision(MultiPolygon(polys), SNAP_GRID)
    merged = shapely.normalize(merged)
    if merged.is_empty:
        return MultiPolygon()
    if merged.geom_type == "Polygon":
        merged = MultiPolygon([merged])
    return merged


class Region:
    """Planar multipolygon with holes, the shared currency for room boundaries,
    functional areas and mutual spaces.

    Outer rings are reported counter-clockwise and holes clockwise.  The empty
    region has no rings and area 0.
    """

    __slots__ = ("_geom",)

    def __init__(self, rings=()):
        rings = [list(r) for r in rings]
        if not rings:
            self._geom = MultiPolygon()
            return
        outers, holes = [], []
        for i, ring in enumerate(rings):
            ring = _validate_ring(ring, i)
            if _ring_signed_area(ring) >= 0:
                outers.append(ring)
            else:
                holes.append(ring)
        if not outers:
            raise GeometryError("no counter-clockwise outer ring given")
        shells = sorted((Polygon(o) for o in outers), key=lambda p: p.area)
        assigned: list[list] = [[] for _ in shells]
        for hole in holes:
            hp = Polygon(hole)
            for i, shell in enumerate(shells):  # smallest containing shell wins
                if shell.contains(hp):
                    assigned[i].append(hole)
                    break
            else:
                raise GeometryError("hole ring not contained in any outer ring")
        polys = []
        for i, shell in enumerate(shells):
            poly = Polygon(shell.exterior.coords, assigned[i])
            if not poly.is_valid:
                raise GeometryError(f"ring set around outer #{i} is not a valid polygon")
            polys.append(poly)
        geom = shapely.union_all(polys) if len(polys) > 1 else polys[0]
        if not geom.is_valid:
            raise GeometryError("rings do not form a valid region")
        self._geom = _clean(geom)

    # -- constructors -------------------------------------------------------

    @classmethod
    def _wrap(cls, geom) -> "Region":
        """Adopt trusted GEOS output without re-validation."""
        r = cls.__new__(cls)
        r._geom = _clean(geom)
        return r

    @classmethod
    def empty(cls) -> "Region":
        return cls._wrap(MultiPolygon())

    @classmethod
    def rectangle(cls, x0: float, y0: float, x1: float, y1: float) -> "Region":
        return cls._wrap(shapely.box(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1)))

    @classmethod
    def from_polygon(cls, shell, holes=()) -> "Region":
        poly = Polygon(shell, [list(h) for h in holes])
        if not poly.is_valid:
            raise GeometryError("shell/holes do not form a valid polygon")
        return cls._wrap(poly)

    # -- inspection ---------------------------------------------------------

    @property
    def rings(self) -> list[list[tuple[float, float]]]:
        """Closed rings, outers counter-clockwise, holes clockwise."""
        out = []
        for poly in self._geom.geoms:
            poly = orient(poly, 1.0)
            out.append([(x, y) for x, y in poly.exterior.coords])
            for hole in poly.interiors:
                out.append([(x, y) for x, y in hole.coords])
        return out

    @property
    def area(self) -> float:
        return self._geom.area

    @property
    def is_empty(self) -> bool:
        return self._geom.is_empty

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        if self._geom.is_empty:
            raise GeometryError("empty region has no bounds")
        return self._geom.bounds

    @property
    def centroid(self) -> tuple[float, float]:
        if self._geom.is_empty:
            raise GeometryError("empty region has no centroid")
        c = self._geom.centroid
        return (c.x, c.y)

    def contains_point(self, x: float, y: float) -> bool:
        return bool(shapely.intersects(self._geom, Point(x, y)))

    def equals(self, other: "Region", tol: float = 1e-9) -> bool:
        """Symmetric-difference area below ``tol``."""
        return self._geom.symmetric_difference(other._geom).area <= tol

    def __repr__(self) -> str:
        if self.is_empty:
            return "Region(empty)"
        return f"Region(area={self.area:.6g}, rings={len(self.rings)})"


def _validate_ring(ring, index):
    if len(ring) and tuple(ring[0]) == tuple(ring[-1]):
        ring = ring[:-1]
    deduped = []
    for x, y in ring:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise GeometryError(f"ring #{index} has a non-finite vertex")
        if deduped and abs(x - deduped[-1][0]) <= SNAP_GRID and abs(y - deduped[-1][1]) <= SNAP_GRID:
            continue
        deduped.append((float(x), float(y)))
    if len(deduped) > 1 and deduped[0] == deduped[-1]:
        deduped.pop()
    if len(deduped) < 3:
        raise GeometryError(f"ring #{index} has fewer than 3 distinct vertices")
    if not Polygon(deduped).is_valid:
        raise GeometryError(f"ring #{index} is self-intersecting")
    return deduped


def _ring_signed_area(ring) -> float:
    pts = np.asarray(ring, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------------------
# Rigid transforms and scaled placements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RigidTransform2D:
    """Planar rotation by ``theta`` about the origin followed by translation."""

    tx: float = 0.0
    ty: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", self.theta % (2.0 * math.pi))

    @classmethod
    def identity(cls) -> "RigidTransform2D":
        return cls(0.0, 0.0, 0.0)

    @property
    def affine(self) -> tuple[float, float, float, float, float, float]:
        """GEOS affine coefficients (a, b, d, e, xoff, yoff)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c, -s, s, c, self.tx, self.ty)

    def apply_point(self, p: tuple[float, float]) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * p[0] - s * p[1] + self.tx, s * p[0] + c * p[1] + self.ty)

    def apply_vector(self, v: tuple[float, float]) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * v[0] - s * v[1], s * v[0] + c * v[1])

    def compose(self, inner: "RigidTransform2D") -> "RigidTransform2D":
        """Transform equal to applying ``inner`` first, then this one."""
        tx, ty = self.apply_point((inner.tx, inner.ty))
        return RigidTransform2D(tx, ty, self.theta + inner.theta)

    def inverse(self) -> "RigidTransform2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform2D(-(c * self.tx + s * self.ty),
                                -(-s * self.tx + c * self.ty),
                                -self.theta)


@dataclass(frozen=True)
class ScaledPlacement:
    """Anisotropic scale about the origin followed by a rigid transform."""

    transform: RigidTransform2D
    sx: float = 1.0
    sy: float = 1.0

    def __post_init__(self):
        if not (self.sx > 0 and self.sy > 0):
            raise GeometryError("scale factors must be positive")

    @property
    def affine(self) -> tuple[float, float, float, float, float, float]:
        a, b, d, e, xoff, yoff = self.transform.affine
        return (a * self.sx, b * self.sy, d * self.sx, e * self.sy, xoff, yoff)

    def apply_point(self, p: tuple[float, float]) -> tuple[float, float]:
        return self.transform.apply_point((p[0] * self.sx, p[1] * self.sy))

    def apply(self, region: "Region") -> "Region":
        return Region._wrap(shapely.affinity.affine_transform(region._geom, self.affine))


@dataclass(frozen=True)
class ActivityTemplate:
    """Target activity footprint in its own local frame, centroid at origin."""

    shape: Region

    def __post_init__(self):
        if self.shape.is_empty or self.shape.area <= 0:
            raise GeometryError("activity template must have nonzero area")
        if len(self.shape._geom.geoms) != 1 or self.shape._geom.geoms[0].interiors:
            raise GeometryError("activity template must be a single ring without holes")
        cx, cy = self.shape.centroid
        if math.hypot(cx, cy) > 1e-6:
            raise GeometryError("activity template centroid must sit at the origin")

    @classmethod
    def centered(cls, shape: Region) -> "ActivityTemplate":
        """Recenter an arbitrary single-ring region onto the origin."""
        cx, cy = shape.centroid
        moved = Region._wrap(shapely.affinity.translate(shape._geom, -cx, -cy))
        return cls(moved)

    @classmethod
    def square(cls, side: float = 1.0) -> "ActivityTemplate":
        h = side / 2.0
        return cls(Region.rectangle(-h, -h, h, h))

    @classmethod
    def circle(cls, diameter: float = 1.0, segments: int = 64) -> "ActivityTemplate":
        r = diameter / 2.0
        ang = np.arange(segments) * (2.0 * math.pi / segments)
        ring = np.column_stack([r * np.cos(ang), r * np.sin(ang)])
        return cls(Region([ring.tolist()]))


def unit_square() -> Region:
    """Origin-centered unit square; placements map it onto rectangles."""
    return Region.rectangle(-0.5, -0.5, 0.5, 0.5)


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------

def area(r: Region) -> float:
    return r.area


def boolean(op: str, a: Region, b: Region) -> Region:
    if op == "intersect":
        return Region._wrap(a._geom.intersection(b._geom))
    if op == "union":
        return Region._wrap(a._geom.union(b._geom))
    if op == "difference":
        return Region._wrap(a._geom.difference(b._geom))
    raise ValueError(f"unknown boolean op {op!r}")


def union_all(regions) -> Region:
    geoms = [r._geom for r in regions if not r.is_empty]
    if not geoms:
        return Region.empty()
    return Region._wrap(shapely.union_all(geoms))


def intersect_all(regions) -> Region:
    regions = list(regions)
    if not regions:
        raise GeometryError("intersect_all needs at least one region")
    geom = regions[0]._geom
    for r in regions[1:]:
        if geom.is_empty:
            break
        geom = geom.intersection(r._geom)
    return Region._wrap(geom)


def apply_rigid(r: Region, g: RigidTransform2D) -> Region:
    return Region._wrap(shapely.affinity.affine_transform(r._geom, g.affine))


def offset(r: Region, d: float, join: str = "miter") -> Region:
    """Signed parallel offset; negative shrinks, positive grows.

    Loops that degenerate or self-intersect during offsetting are discarded,
    so an inward offset past the inradius yields the empty region.
    """
    if abs(d) >= 1e3:
        raise GeometryError("offset distance out of range")
    if join not in _JOIN_STYLES:
        raise ValueError(f"unknown join style {join!r}")
    if r.is_empty or d == 0.0:
        return Region._wrap(r._geom)
    out = r._geom.buffer(d, join_style=_JOIN_STYLES[join],
                         mitre_limit=MITER_LIMIT, quad_segs=16)
    return Region._wrap(out)


def simplify_region(r: Region, eps: float, join: str = "miter") -> Region:
    """Morphological opening: inward offset by ``eps`` then outward by ``eps``.

    Removes peninsula-like features narrower than ``2 * eps`` while leaving
    wide areas intact, producing a safe activity outline.
    """
    if eps <= 0:
        raise GeometryError("eps must be positive")
    return offset(offset(r, -eps, join), eps, join)


def distance(a, b) -> float:
    """Shortest distance between two regions (or degenerate points); 0 when
    they overlap or touch."""
    ga, gb = _as_geom(a), _as_geom(b)
    if ga.is_empty or gb.is_empty:
        raise GeometryError("distance of an empty region is undefined")
    return ga.distance(gb)


def _as_geom(obj):
    if isinstance(obj, Region):
        return obj._geom
    if isinstance(obj, (tuple, list)) and len(obj) == 2:
        return Point(obj[0], obj[1])
    raise TypeError(f"expected Region or point, got {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Minimum-area bounding rectangle (rotating calipers over the convex hull)
# ---------------------------------------------------------------------------

def min_area_bounding_rect(r: Region, axis_aligned: bool = False) -> ScaledPlacement:
    """Smallest enclosing rectangle, as a placement of the unit square.

    The oriented search enumerates convex-hull edge directions, which is exact
    for the hull.  ``axis_aligned`` switches to the plain bounding box.
    """
    if r.is_empty:
        raise GeometryError("cannot bound an empty region")
    if axis_aligned:
        x0, y0, x1, y1 = r.bounds
        return _rect_placement((x0 + x1) / 2, (y0 + y1) / 2, 0.0, x1 - x0, y1 - y0)
    hull = r._geom.convex_hull
    if hull.geom_type != "Polygon":
        raise GeometryError("region is degenerate (zero-area hull)")
    pts = np.asarray(hull.exterior.coords[:-1], dtype=float)
    edges = np.roll(pts, -1, axis=0) - pts
    angles = np.mod(np.arctan2(edges[:, 1], edges[:, 0]), math.pi / 2.0)
    best = None
    for ang in sorted(set(np.round(angles, 12))):
        c, s = math.cos(-ang), math.sin(-ang)
        rx = c * pts[:, 0] - s * pts[:, 1]
        ry = s * pts[:, 0] + c * pts[:, 1]
        w, h = rx.max() - rx.min(), ry.max() - ry.min()
        if best is None or w * h < best[0] - 1e-15:
            cx, cy = (rx.max() + rx.min()) / 2, (ry.max() + ry.min()) / 2
            best = (w * h, ang, cx, cy, w, h)
    _, ang, cx, cy, w, h = best
    c, s = math.cos(ang), math.sin(ang)
    return _rect_placement(c * cx - s * cy, s * cx + c * cy, ang, w, h)


def _rect_placement(cx, cy, theta, w, h) -> ScaledPlacement:
    return ScaledPlacement(RigidTransform2D(cx, cy, theta), max(w, SNAP_GRID), max(h, SNAP_GRID))


def rect_region(p: ScaledPlacement) -> Region:
    """Materialize a rectangle placement as a region."""
    return p.apply(unit_square())


# ---------------------------------------------------------------------------
# Largest inscribed activity shape
# ---------------------------------------------------------------------------

def largest_inscribed_shape(template: ActivityTemplate, region: Region, *,
                            rotation_step: float = math.radians(15),
                            translation_step: float | None = None,
                            uniform_scale: bool = False) -> ScaledPlacement:
    """Fit the largest scaled/rotated copy of ``template`` inside ``region``.

    Search scheme: grid over rotation and candidate centers, binary search on
    uniform scale per candidate (bracketed by clearance bounds), pattern-search
    refinement of the best center, then coordinate ascent on the two scale
    factors unless ``uniform_scale`` is set.  Rewards only area inside the
    region, so the result never protrudes.
    """
    if region.is_empty:
        raise GeometryError("cannot inscribe into an empty region")
    geom = region._geom
    shapely.prepare(geom)
    boundary = geom.boundary
    tshape = template.shape._geom
    t_area = tshape.area
    verts = np.asarray([c for p in tshape.geoms for c in p.exterior.coords], dtype=float)
    circum = float(np.hypot(verts[:, 0], verts[:, 1]).max())
    inrad = Point(0, 0).distance(tshape.boundary) if shapely.contains_xy(tshape, 0.0, 0.0) else 0.0

    x0, y0, x1, y1 = geom.bounds
    diag = math.hypot(x1 - x0, y1 - y0)
    t_diag = 2.0 * circum
    step = translation_step if translation_step else max(min(x1 - x0, y1 - y0) / 12.0, 1e-3)

    xs = np.arange(x0, x1 + step / 2, step)
    ys = np.arange(y0, y1 + step / 2, step)
    gx, gy = np.meshgrid(xs, ys)
    gx, gy = gx.ravel(), gy.ravel()
    inside = shapely.contains_xy(geom, gx, gy)
    gx, gy = gx[inside], gy[inside]
    if gx.size == 0:
        cx, cy = region.centroid
        gx, gy = np.array([cx]), np.array([cy])
    clearance = shapely.distance(shapely.points(np.column_stack([gx, gy])), boundary)
    order = np.argsort(-clearance, kind="stable")

    n_ang = max(1, int(round(2.0 * math.pi / rotation_step)))
    angles = [k * rotation_step for k in range(n_ang)]

    def fits(cx, cy, th, sx, sy):
        placed = shapely.affinity.affine_transform(
            tshape, ScaledPlacement(RigidTransform2D(cx, cy, th), sx, sy).affine)
        return shapely.contains(geom, placed)

    def max_uniform(cx, cy, th, clear):
        hi = clear / inrad if inrad > 0 else diag / max(t_diag, 1e-12)
        lo = clear / circum if circum > 0 else 0.0
        if hi <= 0:
            return 0.0
        if not fits(cx, cy, th, max(lo, 1e-9), max(lo, 1e-9)):
            lo = 0.0
        if fits(cx, cy, th, hi, hi):
            return hi
        for _ in range(40):
            mid = (lo + hi) / 2
            if fits(cx, cy, th, mid, mid):
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-4 * max(1.0, hi):
                break
        return lo

    best = (0.0, region.centroid[0], region.centroid[1], 0.0)  # (scale, cx, cy, theta)
    for th in angles:
        for idx in order:
            cx, cy, clear = float(gx[idx]), float(gy[idx]), float(clearance[idx])
            ub = clear / inrad if inrad > 0 else diag / max(t_diag, 1e-12)
            if ub <= best[0]:
                continue
            s = max_uniform(cx, cy, th, clear)
            if s > best[0]:
                best = (s, cx, cy, th)

    s, cx, cy, th = best
    if s <= 0:
        return ScaledPlacement(RigidTransform2D(*region.centroid, 0.0), 1e-9, 1e-9)

    # Pattern search on the center, re-measuring the uniform fit each move.
    h = step
    while h > 1e-3:
        moved = False
        for dx, dy in ((h, 0), (-h, 0), (0, h), (0, -h)):
            nx, ny = cx + dx, cy + dy
            if not shapely.contains_xy(geom, nx, ny):
                continue
            clear = Point(nx, ny).distance(boundary)
            ns = max_uniform(nx, ny, th, clear)
            if ns > s * (1 + 1e-6):
                s, cx, cy, moved = ns, nx, ny, True
                break
        if not moved:
            h /= 2.0

    sx = sy = s
    if not uniform_scale:
        tb = shapely.bounds(tshape)
        half_ext = (max(abs(tb[0]), abs(tb[2])), max(abs(tb[1]), abs(tb[3])))
        cap = diag / max(t_diag, 1e-12) * 4
        for _ in range(3):
            for axis in (0, 1):
                sx, sy, cx, cy = _grow_axis_sliding(
                    fits, cx, cy, th, sx, sy, axis, cap, half_ext[axis])
    return ScaledPlacement(RigidTransform2D(cx, cy, th), max(sx, 1e-9), max(sy, 1e-9))


def _grow_axis_sliding(fits, cx, cy, th, sx, sy, axis, cap, half_ext):
    """Binary-search one scale factor upward, letting the center slide along
    the scaled axis (in world coordinates) to keep the shape contained."""
    base = sx if axis == 0 else sy
    if not fits(cx, cy, th, sx, sy):
        return sx, sy, cx, cy
    c, s = math.cos(th), math.sin(th)
    direction = (c, s) if axis == 0 else (-s, c)

    def probe(v):
        budget = (v - base) * half_ext * 1.25 + 1e-6
        shifts = sorted(np.linspace(-budget, budget, 17), key=abs)
        for d in shifts:
            nx, ny = cx + d * direction[0], cy + d * direction[1]
            if axis == 0 and fits(nx, ny, th, v, sy):
                return d
            if axis == 1 and fits(nx, ny, th, sx, v):
                return d
        return None

    lo, hi, best_shift = base, max(cap, base * 1.0001), 0.0
    top = probe(hi)
    if top is not None:
        lo, best_shift = hi, top
    else:
        for _ in range(40):
            mid = (lo + hi) / 2
            d = probe(mid)
            if d is not None:
                lo, best_shift = mid, d
            else:
                hi = mid
            if hi - lo <= 1e-4 * max(1.0, hi):
                break
    nx, ny = cx + best_shift * direction[0], cy + best_shift * direction[1]
    if axis == 0:
        return lo, sy, nx, ny
    return sx, lo, nx, ny
