"""Mutual-space optimization on three small rooms: single objective, a
minimum-sittable constraint, and a two-objective Pareto front, with the
exhaustive oracle as a sanity baseline.

Run:  python3 demos/demo_alignment.py      (writes demos/output/*.svg)
"""

import math
import os

from mutualscene import (
    AlignmentConfig,
    FunctionClass,
    ObjectiveSpec,
    OrientedBox,
    Region,
    Room,
    SceneObject,
    brute_force_align,
    extract_walkable,
    optimize_alignment,
    union_all,
)
from mutualscene.sceneio import render_svg

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

W, S = FunctionClass.WALKABLE, FunctionClass.SITTABLE


def make_room(rid, function, boundary, objects):
    return Room(rid, boundary, tuple(objects), function)


bedroom = make_room(
    "bedroom", "bedroom",
    Region.rectangle(0, 0, 4.2, 3.4),
    [SceneObject("bed", "bed", OrientedBox(1.1, 2.3, 0.9, 1.0), pose_direction=(1, 0),
                 height_range=(0.0, 0.55)),
     SceneObject("dresser", "dresser", OrientedBox(3.7, 0.8, 0.4, 0.75))])

living = make_room(
    "living", "living",
    union_all([Region.rectangle(0, 0, 5.0, 3.0), Region.rectangle(0, 0, 2.4, 4.6)]),
    [SceneObject("sofa", "sofa", OrientedBox(1.1, 3.6, 1.0, 0.45), pose_direction=(1, 0),
                 height_range=(0.0, 0.8)),
     SceneObject("coffee", "table", OrientedBox(3.4, 1.4, 0.55, 0.35),
                 height_range=(0.0, 0.45))])

office = make_room(
    "office", "office",
    Region.rectangle(0, 0, 3.6, 4.0),
    [SceneObject("desk", "desk", OrientedBox(3.0, 2.0, 0.5, 0.9), pose_direction=(-1, 0),
                 height_range=(0.0, 0.74)),
     SceneObject("chair", "chair", OrientedBox(2.1, 2.0, 0.28, 0.28), pose_direction=(1, 0),
                 height_range=(0.0, 0.95))])

rooms = [bedroom, living, office]
for room in rooms:
    walk = extract_walkable(room).region.area
    print(f"{room.id}: boundary {room.boundary.area:.2f} m^2, walkable {walk:.2f} m^2")

# 1. Maximize the shared walkable space alone.
cfg = AlignmentConfig(population=60, generations=40, seed=1)
result = optimize_alignment(rooms, ObjectiveSpec({W: 1.0}), cfg)
best = result.best
print(f"\nmax mutual walkable: {best.objective_values[W]:.2f} m^2")
for room, g in zip(rooms, best.transforms):
    print(f"  {room.id}: dx={g.tx:+.2f} dy={g.ty:+.2f} rot={math.degrees(g.theta):.0f} deg")
render_svg(result, os.path.join(OUT, "alignment_walkable.svg"), rooms=rooms)

# 2. Same objective, but insist on at least 1 m^2 of shared sittable space.
constrained = optimize_alignment(
    rooms, ObjectiveSpec({W: 1.0}, constraints={S: 1.0}), cfg)
if constrained.feasible:
    b = constrained.best
    print(f"\nwith sittable >= 1 m^2: walkable {b.objective_values[W]:.2f} m^2, "
          f"sittable {b.objective_values[S]:.2f} m^2")
else:
    print(f"\nsittable >= 1 m^2 is infeasible; best shortfall {constrained.best_violation}")

# 3. Two objectives at once: the optimizer returns a Pareto front and the
#    caller picks the trade-off.
front = optimize_alignment(rooms, ObjectiveSpec({W: 1.0, S: 1.0}), cfg)
print(f"\nPareto front ({len(front.solutions)} solutions):")
for k, sol in enumerate(front.solutions):
    print(f"  #{k}: walkable {sol.objective_values[W]:.2f}, "
          f"sittable {sol.objective_values[S]:.2f}")
render_svg(front, os.path.join(OUT, "alignment_pareto.svg"), rooms=rooms)

# 4. Exhaustive baseline on the walkable regions of the two biggest rooms.
regions = [extract_walkable(r).region for r in (living, office)]
transforms, oracle_area = brute_force_align(regions, math.radians(15), 0.1,
                                            translation_range=2.0)
print(f"\noracle (15 deg / 0.1 m grid, living vs office): {oracle_area:.2f} m^2")
