"""Virtual scene synthesis: procedural initialization from the aligned rooms,
then iterative conditional augmentation driven by a statistical prior scorer.

The floor is the smallest rectangle circumscribing all aligned rooms, so every
participant can reach their full physical space inside the virtual one.
Objects enter the scene three ways: boxes realizing the mutual function areas,
non-colliding transfers of real furniture, and synthesized furniture placed
where the prior scorer finds it plausible and a matching physical object is
nearby.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np
import shapely
import shapely.affinity

from .align import ParetoSolution, mutual_function_pose
from .geometry import (
    Region,
    RigidTransform2D,
    ScaledPlacement,
    apply_rigid,
    min_area_bounding_rect,
    rect_region,
    union_all,
)
from .scene import (
    FunctionClass,
    FunctionRegion,
    OrientedBox,
    Room,
    SceneObject,
    category_functions,
    extract_walkable,
)

MUTUAL_FUNCTION = "mutual_function"
NON_COLLIDING = "non_colliding_transfer"
SYNTHESIZED = "synthesized"

OVERLAP_TOLERANCE = 1e-6  # pairwise footprint intersections below this pass

_ASSOC_HEADER = "# mutualscene-function-associations v1"


@dataclass(frozen=True)
class Provenance:
    kind: str
    room_id: str | None = None


@dataclass(frozen=True)
class PlacedObject:
    object: SceneObject
    provenance: Provenance


@dataclass(frozen=True)
class SyntheticScene:
    floor: ScaledPlacement
    room_function: str
    objects: tuple[PlacedObject, ...] = ()

    def floor_region(self) -> Region:
        return rect_region(self.floor)

    def floor_center(self) -> tuple[float, float]:
        return (self.floor.transform.tx, self.floor.transform.ty)

    def with_object(self, placed: PlacedObject) -> "SyntheticScene":
        return replace(self, objects=self.objects + (placed,))


@dataclass(frozen=True)
class PlacementCandidate:
    position: tuple[float, float]
    yaw: float
    score: float
    grid_index: int = 0


@dataclass(frozen=True)
class SynthConfig:
    grid_step: float = 0.1
    yaw_step: float = math.radians(15.0)
    top_n: int = 10
    stop_threshold: float = 0.3
    max_objects: int = 20
    category_order: tuple[str, ...] | None = None
    seed: int = 0


def load_association_table(path=None) -> dict[tuple[str, str], str]:
    """(room_function, function_class) -> category table; '*' rows provide the
    fallback for unlisted room functions."""
    if path is None:
        text = resources.files("mutualscene.data").joinpath(
            "function_associations.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_ASSOC_HEADER):
        raise ValueError("association table missing versioned header")
    table = {}
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        room_function, fclass, category = (c.strip() for c in line.split(","))
        table[(room_function, fclass)] = category
    return table


def associated_category(room_function: str, fclass: FunctionClass,
                        table: dict | None = None) -> str:
    table = table if table is not None else load_association_table()
    return table.get((room_function, fclass.value), table[("*", fclass.value)])


# ---------------------------------------------------------------------------
# Procedural initialization
# ---------------------------------------------------------------------------

def init_floor(rooms: list[Room], transforms: list[RigidTransform2D]) -> ScaledPlacement:
    """Smallest circumscribed rectangle of the union of the aligned rooms."""
    moved = [apply_rigid(r.boundary, g) for r, g in zip(rooms, transforms)]
    return min_area_bounding_rect(union_all(moved))


def collect_non_colliding(rooms: list[Room], transforms: list[RigidTransform2D],
                          existing: tuple[PlacedObject, ...] = ()) -> list[PlacedObject]:
    """Transfer every object that neither lands in another room's walkable
    space nor overlaps an already-accepted object.

    The scan is room-major, then object id, so earlier objects win conflicts.
    """
    walkables = [apply_rigid(extract_walkable(r).region, g)._geom
                 for r, g in zip(rooms, transforms)]
    accepted_geoms = [p.object.footprint.region()._geom for p in existing]
    out: list[PlacedObject] = []
    for i, (room, g) in enumerate(zip(rooms, transforms)):
        for obj in sorted(room.objects, key=lambda o: o.id):
            moved = obj.transformed(g)
            geom = moved.footprint.region()._geom
            if any(geom.intersection(w).area > OVERLAP_TOLERANCE
                   for j, w in enumerate(walkables) if j != i):
                continue
            if any(geom.intersection(a).area > OVERLAP_TOLERANCE for a in accepted_geoms):
                continue
            accepted_geoms.append(geom)
            out.append(PlacedObject(moved, Provenance(NON_COLLIDING, room.id)))
    return out


def assign_room_function(rooms: list[Room], user_choice: str | None = None,
                         seed: int = 0) -> str:
    """User choice, else the plurality room function, else a seeded pick among
    the tied labels."""
    if user_choice:
        return user_choice
    counts: dict[str, int] = {}
    for r in rooms:
        counts[r.room_function] = counts.get(r.room_function, 0) + 1
    top = max(counts.values())
    tied = sorted(label for label, c in counts.items() if c == top)
    if len(tied) == 1:
        return tied[0]
    return random.Random(seed).choice(tied)


def initialize_scene(rooms: list[Room], transforms: list[RigidTransform2D],
                     solution: ParetoSolution | None = None, *,
                     room_function: str | None = None, seed: int = 0,
                     association: dict | None = None,
                     min_component_area: float = 0.05) -> SyntheticScene:
    """Floor, mutual-function boxes, and non-colliding transfers.

    Mutual sittable/workable components become objects whose category follows
    the room-function association table; boxes are aligned with the floor
    frame so they always stay inside it.  Transfers that would overlap a
    mutual box or poke outside the floor are dropped.
    """
    floor = init_floor(rooms, transforms)
    function = assign_room_function(rooms, room_function, seed)
    scene = SyntheticScene(floor=floor, room_function=function)
    floor_geom = scene.floor_region()._geom

    if solution is not None:
        for fclass in (FunctionClass.SITTABLE, FunctionClass.WORKABLE):
            mutual = solution.mutual_regions.get(fclass)
            if mutual is None or mutual.is_empty:
                continue
            category = associated_category(function, fclass, association)
            for k, component in enumerate(_components(mutual, min_component_area)):
                box = _floor_aligned_box(component, floor)
                geom = box.region()._geom
                if any(geom.intersection(p.object.footprint.region()._geom).area
                       > OVERLAP_TOLERANCE for p in scene.objects):
                    continue
                pose = mutual_function_pose(
                    _contributing(rooms, transforms, fclass, component),
                    component, scene.floor_center())
                obj = SceneObject(f"mutual-{fclass.value}-{k}", category, box,
                                  pose_direction=pose)
                scene = scene.with_object(PlacedObject(obj, Provenance(MUTUAL_FUNCTION)))

    for placed in collect_non_colliding(rooms, transforms, existing=scene.objects):
        geom = placed.object.footprint.region()._geom
        if geom.difference(floor_geom).area > OVERLAP_TOLERANCE:
            continue
        scene = scene.with_object(placed)
    return scene


def _components(region: Region, min_area: float) -> list[Region]:
    parts = [Region._wrap(g) for g in region._geom.geoms]
    return [p for p in parts if p.area >= min_area]


def _floor_aligned_box(component: Region, floor: ScaledPlacement) -> OrientedBox:
    """Bounding box of a region, axis-aligned in the floor's frame (so any
    subset of the floor gets a box that is still inside the floor)."""
    inv = floor.transform.inverse()
    local = apply_rigid(component, inv)
    x0, y0, x1, y1 = local.bounds
    cx, cy = floor.transform.apply_point(((x0 + x1) / 2, (y0 + y1) / 2))
    return OrientedBox(cx, cy, max((x1 - x0) / 2, 1e-6), max((y1 - y0) / 2, 1e-6),
                       floor.transform.theta)


def _contributing(rooms, transforms, fclass, mutual: Region) -> list[FunctionRegion]:
    from .scene import extract_function_regions
    out = []
    for room, g in zip(rooms, transforms):
        for fr in extract_function_regions(room, fclass):
            moved = apply_rigid(fr.region, g)
            if moved._geom.intersection(mutual._geom).area > OVERLAP_TOLERANCE:
                pose = g.apply_vector(fr.pose) if fr.pose is not None else None
                out.append(FunctionRegion(moved, fclass, pose, fr.source_object_ids))
    return out


# ---------------------------------------------------------------------------
# Prior scorer
# ---------------------------------------------------------------------------

DIST_BIN_WIDTH = 0.25
DIST_BINS = 32          # distances clip into the last bin at 8 m
BEARING_BINS = 12
SMOOTHING = 0.05


@dataclass(frozen=True)
class Histogram:
    lo: float
    width: float
    masses: tuple[float, ...]

    @classmethod
    def from_samples(cls, values, lo, width, nbins) -> "Histogram":
        counts = np.full(nbins, SMOOTHING)
        idx = np.clip(((np.asarray(values, dtype=float) - lo) / width).astype(int), 0, nbins - 1)
        np.add.at(counts, idx, 1.0)
        masses = counts / counts.sum()
        return cls(lo, width, tuple(masses.tolist()))

    @classmethod
    def uniform(cls, lo, width, nbins) -> "Histogram":
        return cls(lo, width, tuple([1.0 / nbins] * nbins))

    @property
    def max_mass(self) -> float:
        return max(self.masses)

    def lookup(self, values: np.ndarray) -> np.ndarray:
        idx = np.clip(((values - self.lo) / self.width).astype(int), 0, len(self.masses) - 1)
        return np.asarray(self.masses)[idx]


@dataclass(frozen=True)
class CategoryPrior:
    count: int
    mean_half_extents: tuple[float, float]
    mean_area: float
    features: dict[str, Histogram]


@dataclass(frozen=True)
class PriorScorer:
    """Per-category empirical feature histograms learned from example rooms.

    Categories never seen in training score uniformly (all collision-free
    candidates tie).
    """

    categories: dict[str, CategoryPrior]

    def prior(self, category: str) -> CategoryPrior | None:
        return self.categories.get(category)

    def half_extents(self, category: str) -> tuple[float, float]:
        p = self.categories.get(category)
        return p.mean_half_extents if p else (0.4, 0.4)

    def default_category_order(self) -> tuple[str, ...]:
        return tuple(sorted(self.categories, key=lambda c: (-self.categories[c].mean_area, c)))

    def to_dict(self) -> dict:
        return {cat: {
            "count": p.count,
            "mean_half_extents": list(p.mean_half_extents),
            "mean_area": p.mean_area,
            "features": {name: {"lo": h.lo, "width": h.width, "masses": list(h.masses)}
                         for name, h in sorted(p.features.items())},
        } for cat, p in sorted(self.categories.items())}

    @classmethod
    def from_dict(cls, data: dict) -> "PriorScorer":
        cats = {}
        for cat, p in data.items():
            feats = {name: Histogram(h["lo"], h["width"], tuple(h["masses"]))
                     for name, h in p["features"].items()}
            cats[cat] = CategoryPrior(p["count"], tuple(p["mean_half_extents"]),
                                      p["mean_area"], feats)
        return cls(cats)


def _facing(yaw: float) -> tuple[float, float]:
    # Furniture faces its local +y axis.
    return (-math.sin(yaw), math.cos(yaw))


def _bearing(from_xy, to_xy, facing) -> float:
    ang = math.atan2(to_xy[1] - from_xy[1], to_xy[0] - from_xy[0])
    rel = ang - math.atan2(facing[1], facing[0])
    return (rel + math.pi) % (2.0 * math.pi) - math.pi


def train_prior_scorer(training_rooms: list[Room]) -> PriorScorer:
    """Collect wall-distance, center-distance, and neighbor distance/bearing
    samples per category and freeze them into smoothed histograms."""
    samples: dict[str, dict[str, list[float]]] = {}
    sizes: dict[str, list[tuple[float, float]]] = {}
    total_objects = 0
    for room in training_rooms:
        walls = room.boundary._geom.boundary
        center = room.boundary.centroid
        objs = sorted(room.objects, key=lambda o: o.id)
        total_objects += len(objs)
        for obj in objs:
            feats = samples.setdefault(obj.category, {})
            sizes.setdefault(obj.category, []).append((obj.footprint.hx, obj.footprint.hy))
            geom = obj.footprint.region()._geom
            feats.setdefault("wall_dist", []).append(geom.distance(walls))
            feats.setdefault("center_dist", []).append(
                math.hypot(obj.footprint.cx - center[0], obj.footprint.cy - center[1]))
            others: dict[str, tuple[float, SceneObject]] = {}
            for other in objs:
                if other.id == obj.id or other.category == obj.category:
                    continue
                d = geom.distance(other.footprint.region()._geom)
                if other.category not in others or d < others[other.category][0]:
                    others[other.category] = (d, other)
            for cat, (d, other) in others.items():
                feats.setdefault(f"near_dist:{cat}", []).append(d)
                feats.setdefault(f"near_bearing:{cat}", []).append(_bearing(
                    (obj.footprint.cx, obj.footprint.cy),
                    (other.footprint.cx, other.footprint.cy), obj.pose_direction))
    if total_objects == 0:
        raise ValueError("training corpus contains no objects")

    categories = {}
    for cat, feats in samples.items():
        hists = {}
        for name, values in feats.items():
            if name.startswith("near_bearing"):
                hists[name] = Histogram.from_samples(values, -math.pi,
                                                     2 * math.pi / BEARING_BINS, BEARING_BINS)
            else:
                hists[name] = Histogram.from_samples(values, 0.0, DIST_BIN_WIDTH, DIST_BINS)
        hx = float(np.mean([s[0] for s in sizes[cat]]))
        hy = float(np.mean([s[1] for s in sizes[cat]]))
        categories[cat] = CategoryPrior(len(sizes[cat]), (hx, hy), 4.0 * hx * hy, hists)
    return PriorScorer(categories)


# ---------------------------------------------------------------------------
# Scoring and conditional re-ranking
# ---------------------------------------------------------------------------

def _candidate_polygons(positions: np.ndarray, yaws: np.ndarray, hx: float, hy: float):
    c, s = np.cos(yaws), np.sin(yaws)
    corners = np.array([(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy), (-hx, -hy)])
    out = np.empty((len(positions), 5, 2))
    for k, (dx, dy) in enumerate(corners):
        out[:, k, 0] = positions[:, 0] + c * dx - s * dy
        out[:, k, 1] = positions[:, 1] + s * dx + c * dy
    return shapely.polygons(out)


def _score_batch(scorer: PriorScorer, scene: SyntheticScene, category: str,
                 positions: np.ndarray, yaws: np.ndarray) -> np.ndarray:
    """Vectorized plausibility over candidate (position, yaw) pairs.

    Zero for any candidate that collides or exits the floor; otherwise the
    geometric mean of per-feature bin masses, each normalized by the feature's
    modal mass so the score tops out at 1.
    """
    hx, hy = scorer.half_extents(category)
    polys = _candidate_polygons(positions, yaws, hx, hy)
    floor_geom = scene.floor_region()._geom
    shapely.prepare(floor_geom)
    ok = shapely.contains(floor_geom, polys)
    obstacles = [p.object.footprint.region()._geom for p in scene.objects]
    if obstacles:
        blocked = shapely.union_all(obstacles)
        shapely.prepare(blocked)
        ok &= ~shapely.intersects(blocked, polys)

    scores = np.where(ok, 1.0, 0.0)
    prior = scorer.prior(category)
    if prior is None or not ok.any():
        return scores

    live = np.flatnonzero(ok)
    ratios = []
    feats = prior.features
    if "wall_dist" in feats:
        d = shapely.distance(polys[live], floor_geom.boundary)
        ratios.append(feats["wall_dist"].lookup(d) / feats["wall_dist"].max_mass)
    if "center_dist" in feats:
        fc = scene.floor_center()
        d = np.hypot(positions[live, 0] - fc[0], positions[live, 1] - fc[1])
        ratios.append(feats["center_dist"].lookup(d) / feats["center_dist"].max_mass)
    by_cat: dict[str, list] = {}
    for p in scene.objects:
        by_cat.setdefault(p.object.category, []).append(p.object)
    for cat, objs in sorted(by_cat.items()):
        dist_h = feats.get(f"near_dist:{cat}")
        bear_h = feats.get(f"near_bearing:{cat}")
        if dist_h is None and bear_h is None:
            continue
        geoms = shapely.union_all([o.footprint.region()._geom for o in objs])
        if dist_h is not None:
            d = shapely.distance(polys[live], geoms)
            ratios.append(dist_h.lookup(d) / dist_h.max_mass)
        if bear_h is not None:
            centers = np.array([(o.footprint.cx, o.footprint.cy) for o in objs])
            diff = centers[None, :, :] - positions[live][:, None, :]
            d2 = (diff ** 2).sum(axis=2)
            nearest = centers[np.argmin(d2, axis=1)]
            ang = np.arctan2(nearest[:, 1] - positions[live, 1],
                             nearest[:, 0] - positions[live, 0])
            rel = ang - (yaws[live] + math.pi / 2.0)
            rel = (rel + math.pi) % (2.0 * math.pi) - math.pi
            ratios.append(bear_h.lookup(rel) / bear_h.max_mass)
    if ratios:
        stack = np.vstack(ratios)
        scores[live] = np.exp(np.log(np.maximum(stack, 1e-300)).mean(axis=0))
    return scores


def score_placement(scorer: PriorScorer, scene: SyntheticScene, category: str,
                    candidate: PlacementCandidate) -> float:
    """Plausibility of placing one object of ``category`` at the candidate."""
    return float(_score_batch(scorer, scene, category,
                              np.array([candidate.position], dtype=float),
                              np.array([candidate.yaw]))[0])


def conditional_rerank(candidates: list[PlacementCandidate], input_rooms: list[Room],
                       transforms: list[RigidTransform2D], category: str, n: int, *,
                       half_extents: tuple[float, float] = (0.4, 0.4),
                       room_filter: str | None = None) -> PlacementCandidate:
    """Among the top-``n`` candidates by score, pick the one closest to a
    physical object of the same functional type (any room, or only
    ``room_filter``); ties prefer higher score, then lower grid index."""
    if not candidates:
        raise ValueError("no candidates to rerank")
    ordered = sorted(candidates, key=lambda c: (-c.score, c.grid_index))
    top = ordered[:max(1, n)]
    functions = category_functions(category)
    targets = []
    for room, g in zip(input_rooms, transforms):
        if room_filter is not None and room.id != room_filter:
            continue
        for obj in room.objects:
            if functions & obj.functions:
                targets.append(obj.transformed(g).footprint.region()._geom)
    if not targets:
        return top[0]
    merged = shapely.union_all(targets)
    hx, hy = half_extents
    positions = np.array([c.position for c in top], dtype=float)
    yaws = np.array([c.yaw for c in top])
    dists = shapely.distance(_candidate_polygons(positions, yaws, hx, hy), merged)
    best = min(range(len(top)), key=lambda i: (dists[i], -top[i].score, top[i].grid_index))
    return top[best]


# ---------------------------------------------------------------------------
# Iterative augmentation
# ---------------------------------------------------------------------------

def sample_candidates(scene: SyntheticScene, cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid of candidate centers (in the floor frame) crossed with the
    yaw grid.  Row-major over yaw, then y, then x; the flat index is the
    candidate's grid index."""
    n_yaw = max(1, int(round(2.0 * math.pi / cfg.yaw_step)))
    half_w, half_h = scene.floor.sx / 2.0, scene.floor.sy / 2.0
    xs = np.arange(-half_w, half_w + 1e-12, cfg.grid_step)
    ys = np.arange(-half_h, half_h + 1e-12, cfg.grid_step)
    yaw = np.arange(n_yaw) * cfg.yaw_step
    gyaw, gy, gx = np.meshgrid(yaw, ys, xs, indexing="ij")
    local = np.column_stack([gx.ravel(), gy.ravel()])
    world = np.empty_like(local)
    t = scene.floor.transform
    c, s = math.cos(t.theta), math.sin(t.theta)
    world[:, 0] = c * local[:, 0] - s * local[:, 1] + t.tx
    world[:, 1] = s * local[:, 0] + c * local[:, 1] + t.ty
    return world, ((gyaw.ravel() + t.theta) % (2.0 * math.pi))


def augment_scene(init: SyntheticScene, rooms: list[Room],
                  transforms: list[RigidTransform2D], scorer: PriorScorer,
                  cfg: SynthConfig | None = None) -> SyntheticScene:
    """Add synthesized furniture category by category until scores drop below
    the stop threshold or the object budget is reached.

    Each step samples the uniform grid, scores every candidate, and re-ranks
    the top-``n`` by proximity to same-function physical objects, so virtual
    furniture gravitates toward its real counterparts.
    """
    cfg = cfg or SynthConfig()
    order = list(cfg.category_order if cfg.category_order is not None
                 else scorer.default_category_order())
    scene = init
    synthesized = sum(1 for p in scene.objects if p.provenance.kind == SYNTHESIZED)
    counter = 0
    active = list(order)
    while active and synthesized < cfg.max_objects:
        category = active.pop(0)
        positions, yaws = sample_candidates(scene, cfg)
        scores = _score_batch(scorer, scene, category, positions, yaws)
        best = float(scores.max(initial=0.0))
        if best <= cfg.stop_threshold:
            continue  # category exhausted; do not requeue
        # Top-n by score (grid index breaks ties), exactly the re-rank pool.
        order_idx = np.lexsort((np.arange(len(scores)), -scores))[:max(1, cfg.top_n)]
        candidates = [PlacementCandidate((float(positions[i, 0]), float(positions[i, 1])),
                                         float(yaws[i]), float(scores[i]), int(i))
                      for i in order_idx]
        choice = conditional_rerank(candidates, rooms, transforms, category, cfg.top_n,
                                    half_extents=scorer.half_extents(category))
        hx, hy = scorer.half_extents(category)
        box = OrientedBox(choice.position[0], choice.position[1], hx, hy, choice.yaw)
        obj = SceneObject(f"synth-{category}-{counter}", category, box,
                          pose_direction=_facing(choice.yaw))
        scene = scene.with_object(PlacedObject(obj, Provenance(SYNTHESIZED)))
        synthesized += 1
        counter += 1
        active.append(category)  # same category may place again next round
    return scene
