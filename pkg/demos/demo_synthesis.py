"""End-to-end virtual scene synthesis: align two rooms, initialize the shared
floor with mutual-function boxes and non-colliding transfers, then let the
prior-driven augmentation fill in contextually plausible furniture.

Run:  python3 demos/demo_synthesis.py      (writes demos/output/*.svg)
"""

import os

from mutualscene import (
    AlignmentConfig,
    FunctionClass,
    ObjectiveSpec,
    OrientedBox,
    Region,
    Room,
    SceneObject,
    SynthConfig,
    augment_scene,
    initialize_scene,
    optimize_alignment,
    train_prior_scorer,
)
from mutualscene.sceneio import render_svg

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

W, S = FunctionClass.WALKABLE, FunctionClass.SITTABLE


def bedroom(rid, ox, oy):
    return Room(rid, Region.rectangle(ox, oy, ox + 4.4, oy + 3.6), (
        SceneObject(f"{rid}-bed", "bed", OrientedBox(ox + 1.2, oy + 2.4, 1.0, 0.9),
                    pose_direction=(1, 0), height_range=(0.0, 0.55)),
        SceneObject(f"{rid}-desk", "desk", OrientedBox(ox + 3.8, oy + 1.0, 0.5, 0.8),
                    pose_direction=(-1, 0), height_range=(0.0, 0.74)),
        SceneObject(f"{rid}-chair", "chair", OrientedBox(ox + 2.9, oy + 1.0, 0.28, 0.28),
                    pose_direction=(1, 0), height_range=(0.0, 0.95)),
    ), "bedroom")


room_a = bedroom("a", 0.0, 0.0)
room_b = bedroom("b", 10.0, 2.0)

result = optimize_alignment(
    [room_a, room_b],
    ObjectiveSpec({W: 1.0}, constraints={S: 1.0}),
    AlignmentConfig(population=60, generations=40, seed=2))
solution = result.best
print(f"alignment: walkable {solution.objective_values[W]:.2f} m^2, "
      f"sittable {solution.objective_values[S]:.2f} m^2 (feasible={result.feasible})")

# Priors learned from the input rooms themselves; with a larger corpus of
# similar rooms the histograms just get denser.
scorer = train_prior_scorer([room_a, room_b])
print(f"prior categories (largest first): {scorer.default_category_order()}")

scene = initialize_scene([room_a, room_b], list(solution.transforms), solution, seed=2)
kinds = [p.provenance.kind for p in scene.objects]
print(f"initialized scene: floor {scene.floor.sx:.2f} x {scene.floor.sy:.2f} m, "
      f"{kinds.count('mutual_function')} mutual boxes, "
      f"{kinds.count('non_colliding_transfer')} transfers, "
      f"room function {scene.room_function!r}")

scene = augment_scene(scene, [room_a, room_b], list(solution.transforms), scorer,
                      SynthConfig(grid_step=0.2, max_objects=6, seed=2))
for placed in scene.objects:
    box = placed.object.footprint
    print(f"  {placed.object.id:<22} {placed.object.category:<8} "
          f"at ({box.cx:5.2f},{box.cy:5.2f})  [{placed.provenance.kind}]")

render_svg(scene, os.path.join(OUT, "synthetic_scene.svg"))
print(f"\nwrote {os.path.join(OUT, 'synthetic_scene.svg')}")
