"""Mutual-space alignment: find per-room rigid motions that maximize the
overlap of functional areas across rooms.

The search is a strength-Pareto evolutionary algorithm (SPEA2) over an integer
lattice genotype: per movable room, a rotation index (about the room centroid)
and a two-axis translation offset of the room centroid relative to the first
room's centroid.  The first room is pinned to the identity, removing the
global-motion redundancy.  All internal computation happens in a canonical
frame derived from the first room (centroid at origin, principal covariance
axis along x, coordinates snapped), so a common rigid motion applied to every
input changes nothing but the reported transforms.

Determinism: one seed fixes the whole run.  Every child in every generation
draws from its own spawned RNG stream keyed by (generation, child index), so
evaluation order cannot perturb results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
import shapely.affinity

from .geometry import (
    GeometryError,
    Region,
    RigidTransform2D,
    apply_rigid,
    min_area_bounding_rect,
)
from .scene import FunctionClass, FunctionRegion, Room, functional_region


@dataclass(frozen=True)
class AlignmentConfig:
    population: int = 100
    generations: int = 80
    mutation_probability: float = 0.10
    mutation_rate: float = 0.50
    crossover_rate: float = 0.80
    translation_step: float = 0.10
    rotation_step: float = math.radians(15.0)
    seed: int = 0
    translation_bounds: float | None = None  # default: sum of two largest room diagonals

    def __post_init__(self):
        for name in ("mutation_probability", "mutation_rate", "crossover_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.translation_step <= 0 or self.rotation_step <= 0:
            raise ValueError("steps must be positive")
        if self.population < 2 or self.generations < 1:
            raise ValueError("population must be >= 2 and generations >= 1")


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which functional classes to maximize (with weights) and which merely
    need a minimum mutual area."""

    maximize: dict[FunctionClass, float]
    constraints: dict[FunctionClass, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.maximize:
            raise ValueError("at least one class must be maximized")
        if any(w <= 0 for w in self.maximize.values()):
            raise ValueError("objective weights must be positive")
        if any(a < 0 for a in self.constraints.values()):
            raise ValueError("constraint areas must be nonnegative")
        if set(self.maximize) & set(self.constraints):
            raise ValueError("a class cannot be both maximized and constrained")

    @property
    def classes(self) -> tuple[FunctionClass, ...]:
        ordered = [c for c in FunctionClass if c in self.maximize or c in self.constraints]
        return tuple(ordered)


@dataclass(frozen=True)
class ParetoSolution:
    transforms: tuple[RigidTransform2D, ...]
    objective_values: dict[FunctionClass, float]
    mutual_regions: dict[FunctionClass, Region]


@dataclass(frozen=True)
class MutualResult:
    """Alignment outcome: mutually non-dominated solutions, or the least
    constraint-violating candidate when no feasible alignment exists."""

    solutions: tuple[ParetoSolution, ...]
    chosen_index: int | None = None
    feasible: bool = True
    best_violation: dict[FunctionClass, float] | None = None

    @property
    def best(self) -> ParetoSolution:
        return self.solutions[self.chosen_index or 0]


# ---------------------------------------------------------------------------
# Mutual-area evaluation
# ---------------------------------------------------------------------------

def evaluate_mutual(rooms: list[Room], transforms: list[RigidTransform2D],
                    function: FunctionClass) -> tuple[Region, float]:
    """Overlap of one functional class across all rooms under the given
    transforms.

    Walkable space intersects directly.  Sittable/workable space matches any
    provider in one room against any provider in another, which equals the
    intersection of the per-room footprint unions.
    """
    if len(rooms) < 2:
        raise ValueError("mutual evaluation needs at least two rooms")
    if len(transforms) != len(rooms):
        raise ValueError("one transform per room required")
    geom = None
    for room, g in zip(rooms, transforms):
        part = apply_rigid(functional_region(room, function), g)
        geom = part if geom is None else Region._wrap(geom._geom.intersection(part._geom))
        if geom.is_empty:
            break
    return geom, geom.area


def mutual_function_pose(contributing: list[FunctionRegion], mutual: Region,
                         room_center: tuple[float, float],
                         tolerance: float = math.radians(15.0)) -> tuple[float, float]:
    """Facing direction for a mutual function region.

    When every contributing region agrees on a pose (pairwise within the
    tolerance) the normalized mean wins; otherwise the region faces the room
    center.
    """
    poses = [fr.pose for fr in contributing]
    if poses and all(p is not None for p in poses):
        agree = all(_angle_between(a, b) <= tolerance
                    for i, a in enumerate(poses) for b in poses[i + 1:])
        if agree:
            sx = sum(p[0] for p in poses)
            sy = sum(p[1] for p in poses)
            n = math.hypot(sx, sy)
            if n > 1e-12:
                return (sx / n, sy / n)
    cx, cy = mutual.centroid
    dx, dy = room_center[0] - cx, room_center[1] - cy
    n = math.hypot(dx, dy)
    if n < 1e-12:
        return (0.0, 1.0)
    return (dx / n, dy / n)


def _angle_between(u, v) -> float:
    dot = max(-1.0, min(1.0, u[0] * v[0] + u[1] * v[1]))
    return math.acos(dot)


# ---------------------------------------------------------------------------
# Canonical frame
# ---------------------------------------------------------------------------

def _region_moments(region: Region):
    """Signed area integrals (A, x, y, x^2, y^2, xy) via Green's theorem;
    hole rings subtract automatically through their orientation."""
    A = mx = my = ixx = iyy = ixy = 0.0
    for ring in region.rings:
        for (x0, y0), (x1, y1) in zip(ring, ring[1:]):
            cr = x0 * y1 - x1 * y0
            A += cr / 2.0
            mx += (x0 + x1) * cr / 6.0
            my += (y0 + y1) * cr / 6.0
            ixx += (x0 * x0 + x0 * x1 + x1 * x1) * cr / 12.0
            iyy += (y0 * y0 + y0 * y1 + y1 * y1) * cr / 12.0
            ixy += (x0 * y1 + 2 * x0 * y0 + 2 * x1 * y1 + x1 * y0) * cr / 24.0
    return A, mx, my, ixx, iyy, ixy


def canonical_gauge(regions: list[Region]) -> RigidTransform2D:
    """Transform mapping the given geometry into a canonical pose: combined
    centroid at the origin and the principal covariance axis along x.

    The quarter-turn ambiguity is settled by comparing the snapped canonical
    geometry itself, so the choice is equivariant under any common rigid
    motion of the inputs.  Exactly tied keys occur only for geometry that is
    itself symmetric, where the remaining choice cannot affect areas.
    """
    A = mx = my = ixx = iyy = ixy = 0.0
    for r in regions:
        if r.is_empty:
            continue
        a, x, y, xx, yy, xy = _region_moments(r)
        A += a; mx += x; my += y; ixx += xx; iyy += yy; ixy += xy
    if A <= 0:
        raise GeometryError("cannot derive a canonical frame from empty geometry")
    cx, cy = mx / A, my / A
    cxx = ixx / A - cx * cx
    cyy = iyy / A - cy * cy
    cxy = ixy / A - cx * cy
    gap = math.hypot(cxx - cyy, 2.0 * cxy)
    if gap > 1e-9 * max(1.0, cxx + cyy):
        axis = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
    else:
        # Isotropic covariance: fall back to the bounding-rect orientation.
        axis = min_area_bounding_rect(regions[0]).transform.theta
    best = None
    for k in range(4):
        phi = axis + k * math.pi / 2.0
        rot = RigidTransform2D(0.0, 0.0, -phi)
        off = rot.apply_point((cx, cy))
        h = RigidTransform2D(-off[0], -off[1], -phi)
        key = tuple(
            tuple((round(x, 6), round(y, 6)) for x, y in ring)
            for r in regions for ring in apply_rigid(r, h).rings)
        if best is None or key > best[0]:
            best = (key, h)
    return best[1]


# ---------------------------------------------------------------------------
# SPEA2 optimizer
# ---------------------------------------------------------------------------

class _Instance:
    """Canonical-frame geometry and genotype decoding shared by one run."""

    def __init__(self, rooms, spec, cfg):
        self.spec = spec
        self.cfg = cfg
        self.classes = spec.classes
        raw = [{c: functional_region(room, c) for c in self.classes} for room in rooms]
        self.gauge = canonical_gauge(
            [rooms[0].boundary] + [raw[0][c] for c in self.classes])
        self.regions = []   # per room: {class: canonical shapely geom}
        self.centroids = []
        diags = []
        for room, klass_regions in zip(rooms, raw):
            canon_boundary = apply_rigid(room.boundary, self.gauge)
            x0, y0, x1, y1 = canon_boundary.bounds
            diags.append(math.hypot(x1 - x0, y1 - y0))
            self.centroids.append(canon_boundary.centroid)
            self.regions.append({
                c: apply_rigid(klass_regions[c], self.gauge)._geom
                for c in self.classes})
        bounds = cfg.translation_bounds
        if bounds is None:
            bounds = sum(sorted(diags)[-2:])
        self.lattice_radius = max(1, int(math.ceil(bounds / cfg.translation_step)))
        self.n_rot = max(1, int(round(2.0 * math.pi / cfg.rotation_step)))
        self.movable = len(rooms) - 1
        self._rot_cache: dict = {}
        self._eval_cache: dict = {}

    def _rotated(self, room_idx, fclass, jr):
        key = (room_idx, fclass, jr)
        if key not in self._rot_cache:
            theta = jr * self.cfg.rotation_step
            cx, cy = self.centroids[room_idx]
            g = self.regions[room_idx][fclass]
            moved = shapely.affinity.translate(g, -cx, -cy)
            if theta:
                moved = shapely.affinity.rotate(moved, theta, origin=(0, 0), use_radians=True)
            self._rot_cache[key] = moved
        return self._rot_cache[key]

    def decode(self, genotype) -> list[RigidTransform2D]:
        """Genotype to canonical-frame transforms (first room identity)."""
        out = [RigidTransform2D.identity()]
        step = self.cfg.translation_step
        c1 = self.centroids[0]
        for i in range(self.movable):
            jx, jy, jr = genotype[3 * i:3 * i + 3]
            theta = jr * self.cfg.rotation_step
            cx, cy = self.centroids[i + 1]
            target = (c1[0] + jx * step, c1[1] + jy * step)
            rot = RigidTransform2D(0.0, 0.0, theta)
            rcx, rcy = rot.apply_point((cx, cy))
            out.append(RigidTransform2D(target[0] - rcx, target[1] - rcy, theta))
        return out

    def mutual_geom(self, genotype, fclass):
        c1 = self.centroids[0]
        geom = self.regions[0][fclass]
        step = self.cfg.translation_step
        for i in range(self.movable):
            jx, jy, jr = genotype[3 * i:3 * i + 3]
            part = shapely.affinity.translate(self._rotated(i + 1, fclass, jr),
                                              c1[0] + jx * step, c1[1] + jy * step)
            geom = geom.intersection(part)
            if geom.is_empty:
                break
        return geom

    def evaluate(self, genotype):
        """(areas per class, total constraint violation)."""
        if genotype not in self._eval_cache:
            areas = {c: self.mutual_geom(genotype, c).area for c in self.classes}
            violation = sum(max(0.0, need - areas[c])
                            for c, need in self.spec.constraints.items())
            self._eval_cache[genotype] = (areas, violation)
        return self._eval_cache[genotype]

    def objective_vector(self, areas) -> tuple[float, ...]:
        return tuple(self.spec.maximize[c] * areas[c]
                     for c in self.classes if c in self.spec.maximize)


def _dominates(a_obj, a_vio, b_obj, b_vio) -> bool:
    """Constrained Pareto domination: feasibility first, then objectives."""
    if a_vio == 0.0 and b_vio > 0.0:
        return True
    if a_vio > 0.0 and b_vio == 0.0:
        return False
    if a_vio > 0.0 and b_vio > 0.0:
        return a_vio < b_vio
    ge = all(x >= y for x, y in zip(a_obj, b_obj))
    gt = any(x > y for x, y in zip(a_obj, b_obj))
    return ge and gt


def _child_rng(seed, generation, index) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(generation, index))))


def _random_genotype(rng, inst) -> tuple[int, ...]:
    genes = []
    J = inst.lattice_radius
    for _ in range(inst.movable):
        if rng.random() < 0.5:
            sigma = max(2.0, J / 20.0)
            jx = int(np.clip(round(rng.normal(0, sigma)), -J, J))
            jy = int(np.clip(round(rng.normal(0, sigma)), -J, J))
        else:
            jx = int(rng.integers(-J, J + 1))
            jy = int(rng.integers(-J, J + 1))
        genes += [jx, jy, int(rng.integers(0, inst.n_rot))]
    return tuple(genes)


def _mutate(genotype, rng, inst) -> tuple[int, ...]:
    genes = list(genotype)
    J = inst.lattice_radius
    for k in range(len(genes)):
        if rng.random() >= inst.cfg.mutation_rate:
            continue
        is_rot = (k % 3) == 2
        if rng.random() < 0.5:  # local jitter keeps refinement cheap
            delta = int(rng.integers(1, 4)) * (1 if rng.random() < 0.5 else -1)
            if is_rot:
                genes[k] = (genes[k] + delta) % inst.n_rot
            else:
                genes[k] = int(np.clip(genes[k] + delta, -J, J))
        else:
            genes[k] = int(rng.integers(0, inst.n_rot)) if is_rot else int(rng.integers(-J, J + 1))
    return tuple(genes)


def _domination_matrix(objs, vios) -> np.ndarray:
    """dom[i, j] true when i constrained-dominates j (vectorized)."""
    pts = np.asarray(objs, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    vio = np.asarray(vios, dtype=float)
    feas = vio == 0.0
    ge = (pts[:, None, :] >= pts[None, :, :]).all(axis=2)
    gt = (pts[:, None, :] > pts[None, :, :]).any(axis=2)
    dom = feas[:, None] & ~feas[None, :]
    dom |= (~feas[:, None] & ~feas[None, :]) & (vio[:, None] < vio[None, :])
    dom |= (feas[:, None] & feas[None, :]) & ge & gt
    np.fill_diagonal(dom, False)
    return dom


def _spea2_fitness(objs, vios):
    """SPEA2 raw fitness + k-th nearest neighbor density."""
    n = len(objs)
    dom = _domination_matrix(objs, vios)
    strength = dom.sum(axis=1).astype(float)
    raw = dom.T @ strength
    pts = np.asarray(objs, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    np.fill_diagonal(dist, np.inf)
    k = max(1, min(n - 1, int(round(math.sqrt(n)))))
    kth = np.sort(dist, axis=1)[:, k - 1]
    density = 1.0 / (kth + 2.0)
    return raw + density, dist


def _truncate_archive(indices, dist, cap):
    """Iteratively drop the member with the smallest nearest-neighbor distance
    (lexicographic over sorted distances), the SPEA2 truncation rule."""
    alive = list(indices)
    while len(alive) > cap:
        sub = dist[np.ix_(alive, alive)]
        order = np.sort(sub, axis=1)
        # Lexicographically smallest row loses; lexsort's last key is primary.
        worst = int(np.lexsort(order.T[::-1])[0])
        alive.pop(worst)
    return alive


def optimize_alignment(rooms: list[Room], spec: ObjectiveSpec,
                       cfg: AlignmentConfig | None = None) -> MutualResult:
    """SPEA2 search for per-room transforms maximizing mutual functional areas
    subject to minimum-area constraints.

    Returns one best solution for a single objective, otherwise the Pareto
    front (capped at the archive size).  With no feasible genotype found, the
    result flags infeasibility and reports the least-violating candidate.
    """
    if len(rooms) < 2:
        raise ValueError("alignment needs at least two rooms")
    cfg = cfg or AlignmentConfig()
    inst = _Instance(rooms, spec, cfg)
    n = cfg.population

    population = [tuple([0] * (3 * inst.movable))]
    for j in range(1, n):
        population.append(_random_genotype(_child_rng(cfg.seed, 0, j), inst))

    archive: list[tuple[int, ...]] = []
    for gen in range(1, cfg.generations + 1):
        merged = population + archive
        evals = [inst.evaluate(g) for g in merged]
        objs = [inst.objective_vector(a) for a, _ in evals]
        vios = [v for _, v in evals]
        fitness, dist = _spea2_fitness(objs, vios)

        nondom = [i for i in range(len(merged)) if fitness[i] < 1.0]
        if len(nondom) > n:
            keep = _truncate_archive(nondom, dist, n)
        elif len(nondom) < n:
            rest = sorted((i for i in range(len(merged)) if fitness[i] >= 1.0),
                          key=lambda i: (fitness[i], i))
            keep = nondom + rest[:n - len(nondom)]
        else:
            keep = nondom
        archive = [merged[i] for i in keep]
        arch_fit = [fitness[i] for i in keep]

        if gen == cfg.generations:
            break
        population = []
        for j in range(n):
            rng = _child_rng(cfg.seed, gen, j)
            p1 = _tournament(rng, archive, arch_fit)
            p2 = _tournament(rng, archive, arch_fit)
            if rng.random() < cfg.crossover_rate:
                child = tuple(p1[k] if rng.random() < 0.5 else p2[k] for k in range(len(p1)))
            else:
                child = p1
            if rng.random() < cfg.mutation_probability:
                child = _mutate(child, rng, inst)
            population.append(child)

    return _collect_result(inst, archive, rooms)


def _tournament(rng, archive, fitness):
    i = int(rng.integers(0, len(archive)))
    j = int(rng.integers(0, len(archive)))
    if fitness[j] < fitness[i] or (fitness[j] == fitness[i] and archive[j] < archive[i]):
        return archive[j]
    return archive[i]


def _collect_result(inst, archive, rooms) -> MutualResult:
    seen = sorted(set(archive))
    evals = {g: inst.evaluate(g) for g in seen}
    feasible = [g for g in seen if evals[g][1] == 0.0]
    if not feasible:
        best = min(seen, key=lambda g: (evals[g][1], g))
        shortfall = {c: max(0.0, need - evals[best][0][c])
                     for c, need in inst.spec.constraints.items()}
        return MutualResult(solutions=(_solution(inst, best),),
                            feasible=False, best_violation=shortfall)

    # Keep the mutually non-dominated subset (pure Pareto among the feasible).
    front = []
    for g in feasible:
        og = inst.objective_vector(evals[g][0])
        if not any(_dominates(inst.objective_vector(evals[h][0]), 0.0, og, 0.0)
                   for h in feasible if h != g):
            front.append(g)
    front.sort(key=lambda g: (tuple(-v for v in inst.objective_vector(evals[g][0])), g))
    # Identical objective vectors add nothing; keep the first representative.
    unique, seen_obj = [], set()
    for g in front:
        key = inst.objective_vector(evals[g][0])
        if key not in seen_obj:
            seen_obj.add(key)
            unique.append(g)
    if len(inst.spec.maximize) == 1:
        unique = unique[:1]
    return MutualResult(solutions=tuple(_solution(inst, g) for g in unique))


def _solution(inst, genotype) -> ParetoSolution:
    canon = inst.decode(genotype)
    inv = inst.gauge.inverse()
    transforms = (RigidTransform2D.identity(),) + tuple(
        inv.compose(g).compose(inst.gauge) for g in canon[1:])
    areas, _ = inst.evaluate(genotype)
    regions = {c: apply_rigid(Region._wrap(inst.mutual_geom(genotype, c)), inv)
               for c in inst.classes}
    return ParetoSolution(transforms=transforms,
                          objective_values={c: areas[c] for c in inst.classes},
                          mutual_regions=regions)


# ---------------------------------------------------------------------------
# Exhaustive oracle
# ---------------------------------------------------------------------------

def brute_force_align(regions: list[Region], rotation_step: float,
                      translation_step: float = 0.1, *,
                      translation_range: float | None = None,
                      budget: int = 10 ** 8) -> tuple[list[RigidTransform2D], float]:
    """Exhaustive grid alignment of 2-3 regions.

    All regions are first centred on the first region's centroid; the grid
    then sweeps every rotation combination (about each region's own centroid)
    and, when ``translation_range`` is nonzero, every lattice offset within it.
    Returns the grid-optimal transforms and intersection area.
    """
    if not 2 <= len(regions) <= 3:
        raise ValueError("brute force supports 2 or 3 regions")
    if any(r.is_empty for r in regions):
        raise GeometryError("cannot align empty regions")
    n_rot = max(1, int(round(2.0 * math.pi / rotation_step)))
    if translation_range is None:
        translation_range = 0.0
    k = int(round(translation_range / translation_step))
    per_region = n_rot * (2 * k + 1) ** 2
    if per_region ** (len(regions) - 1) > budget:
        raise ValueError("grid too fine: evaluation budget exceeded")

    c0 = regions[0].centroid
    base = shapely.affinity.translate(regions[0]._geom, -c0[0], -c0[1])
    offsets = [(jx, jy) for jy in range(-k, k + 1) for jx in range(-k, k + 1)]

    movers = []
    for r in regions[1:]:
        c = r.centroid
        centered = shapely.affinity.translate(r._geom, -c[0], -c[1])
        rotations = []
        for jr in range(n_rot):
            rotations.append(shapely.affinity.rotate(
                centered, jr * rotation_step, origin=(0, 0), use_radians=True))
        movers.append((c, rotations))

    best_area = -1.0
    best_combo = tuple((0, 0, 0) for _ in movers)  # fallback: aligned centroids
    if len(regions) == 2:
        _, rotations = movers[0]
        for jr, rot in enumerate(rotations):
            for jx, jy, ub in _offsets_by_bound(base, rot, offsets, translation_step):
                if ub <= best_area:
                    break
                a = base.intersection(shapely.affinity.translate(
                    rot, jx * translation_step, jy * translation_step)).area
                if a > best_area:
                    best_area = a
                    best_combo = ((jr, jx, jy),)
    else:
        for jr1, rot1 in enumerate(movers[0][1]):
            for jx1, jy1 in offsets:
                g1 = base.intersection(shapely.affinity.translate(
                    rot1, jx1 * translation_step, jy1 * translation_step))
                if g1.is_empty:
                    continue
                for jr2, rot2 in enumerate(movers[1][1]):
                    for jx2, jy2 in offsets:
                        a = g1.intersection(shapely.affinity.translate(
                            rot2, jx2 * translation_step, jy2 * translation_step)).area
                        if a > best_area:
                            best_area = a
                            best_combo = ((jr1, jx1, jy1), (jr2, jx2, jy2))

    transforms = [RigidTransform2D.identity()]
    for (jr, jx, jy), (c, _) in zip(best_combo, movers):
        theta = jr * rotation_step
        rot = RigidTransform2D(0.0, 0.0, theta)
        rcx, rcy = rot.apply_point(c)
        transforms.append(RigidTransform2D(
            c0[0] + jx * translation_step - rcx,
            c0[1] + jy * translation_step - rcy, theta))
    return transforms, max(best_area, 0.0)


def _offsets_by_bound(base, rot, offsets, step):
    """Offsets sorted by a bounding-box upper bound on intersection area, so
    the sweep can stop as soon as the bound falls below the best found."""
    ax0, ay0, ax1, ay1 = base.bounds
    bx0, by0, bx1, by1 = rot.bounds
    out = []
    for jx, jy in offsets:
        dx, dy = jx * step, jy * step
        w = min(ax1, bx1 + dx) - max(ax0, bx0 + dx)
        h = min(ay1, by1 + dy) - max(ay0, by0 + dy)
        if w > 0 and h > 0:
            out.append((jx, jy, w * h))
    out.sort(key=lambda t: (-t[2], t[1], t[0]))
    return out
