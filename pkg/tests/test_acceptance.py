"""Acceptance suite: one test per release criterion, each printing a PASS line
with its measured numbers once the assertions hold."""

import json
import math
import time

import numpy as np
import pytest

from mutualscene.align import (
    AlignmentConfig,
    ObjectiveSpec,
    brute_force_align,
    optimize_alignment,
)
from mutualscene.cli import EXIT_OK, main
from mutualscene.geometry import (
    ActivityTemplate,
    Region,
    RigidTransform2D,
    apply_rigid,
    area,
    boolean,
    largest_inscribed_shape,
    simplify_region,
    union_all,
)
from mutualscene.scene import (
    FunctionClass,
    OrientedBox,
    Room,
    SceneObject,
    extract_walkable,
    transform_room,
)
from mutualscene.synth import (
    NON_COLLIDING,
    OVERLAP_TOLERANCE,
    SYNTHESIZED,
    PlacementCandidate,
    SynthConfig,
    augment_scene,
    conditional_rerank,
    initialize_scene,
    sample_candidates,
    train_prior_scorer,
    _score_batch,
)

W, S, T = FunctionClass.WALKABLE, FunctionClass.SITTABLE, FunctionClass.WORKABLE


def report(num, name, detail=""):
    print(f"\nACCEPTANCE {num:02d} {name}: PASS {detail}".rstrip())


def obj(oid, cat, cx, cy, hx=0.5, hy=0.5, yaw=0.0, pose=(0.0, 1.0), z=(0.0, 1.0)):
    return SceneObject(oid, cat, OrientedBox(cx, cy, hx, hy, yaw),
                       pose_direction=pose, height_range=z)


def random_rectilinear_boundary(rng, max_extent=5.0):
    x0, y0 = rng.uniform(-1, 1, size=2)
    w, h = rng.uniform(2.0, max_extent, size=2)
    parts = [Region.rectangle(x0, y0, x0 + w, y0 + h)]
    for _ in range(int(rng.integers(0, 3))):
        bx = x0 + rng.uniform(0, 0.5 * w)
        by = y0 + rng.uniform(0, 0.5 * h)
        parts.append(Region.rectangle(bx, by, bx + rng.uniform(1.0, w),
                                      by + rng.uniform(1.0, h)))
    return union_all(parts)


def random_room(rng, rid, n_objects=None, max_extent=5.0):
    boundary = random_rectilinear_boundary(rng, max_extent)
    x0, y0, x1, y1 = boundary.bounds
    n = int(rng.integers(0, 11)) if n_objects is None else n_objects
    objects = []
    cats = ["bed", "desk", "chair", "table", "sofa", "crate", "shelf"]
    for k in range(n):
        cx = rng.uniform(x0 + 0.3, x1 - 0.3)
        cy = rng.uniform(y0 + 0.3, y1 - 0.3)
        if not boundary.contains_point(cx, cy):
            continue
        objects.append(obj(f"{rid}-o{k}", cats[int(rng.integers(0, len(cats)))],
                           cx, cy, rng.uniform(0.15, 0.8), rng.uniform(0.15, 0.8),
                           yaw=rng.uniform(0, math.pi)))
    return Room(rid, boundary, tuple(objects))


# ---------------------------------------------------------------------------

def test_criterion_01_walkable_conservation():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    for k in range(200):
        room = random_room(rng, f"r{k}")
        walk = extract_walkable(room).region
        blockers = [o.footprint.region() for o in room.objects if o.blocks_walking()]
        clipped = boolean("intersect", union_all(blockers), room.boundary)
        total = area(walk) + area(clipped)
        assert total == pytest.approx(area(room.boundary), rel=1e-6)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    report(1, "walkable-conservation", f"(200 rooms in {elapsed:.2f}s)")


def test_criterion_02_identity_recovery():
    rng = np.random.default_rng(202)
    worst_ratio, worst_time = 1.0, 0.0
    for k in range(20):
        room = random_room(rng, f"id{k}", n_objects=int(rng.integers(1, 4)))
        twin = Room(f"id{k}b", room.boundary, room.objects)
        single = area(extract_walkable(room).region)
        t0 = time.perf_counter()
        result = optimize_alignment([room, twin], ObjectiveSpec({W: 1.0}),
                                    AlignmentConfig(seed=k))
        elapsed = time.perf_counter() - t0
        ratio = result.best.objective_values[W] / single
        worst_ratio = min(worst_ratio, ratio)
        worst_time = max(worst_time, elapsed)
        assert elapsed < 60.0
        assert ratio >= 0.98
    report(2, "identity-recovery",
           f"(20 pairs, worst ratio {worst_ratio:.4f}, slowest {worst_time:.1f}s)")


def test_criterion_03_oracle_equivalence():
    rng = np.random.default_rng(303)
    worst = math.inf
    for k in range(10):
        rooms = [random_room(rng, f"o{k}a", n_objects=int(rng.integers(0, 3))),
                 random_room(rng, f"o{k}b", n_objects=int(rng.integers(0, 3)))]
        regions = [extract_walkable(r).region for r in rooms]
        diags = []
        for r in regions:
            x0, y0, x1, y1 = r.bounds
            diags.append(math.hypot(x1 - x0, y1 - y0))
        window = sum(sorted(diags)[-2:])
        t0 = time.perf_counter()
        _, oracle = brute_force_align(regions, math.radians(15), 0.1,
                                      translation_range=window)
        result = optimize_alignment(rooms, ObjectiveSpec({W: 1.0}),
                                    AlignmentConfig(seed=k))
        elapsed = time.perf_counter() - t0
        got = result.best.objective_values[W]
        worst = min(worst, got / oracle)
        assert elapsed < 120.0
        assert got >= 0.95 * oracle
    report(3, "oracle-equivalence", f"(10 instances, worst fraction {worst:.4f})")


def test_criterion_04_constraint_satisfaction():
    rng = np.random.default_rng(404)
    cfg = AlignmentConfig(population=60, generations=40, seed=11)
    spec = ObjectiveSpec({W: 1.0}, constraints={S: 1.0})
    n_feasible = n_infeasible = 0
    for k in range(10):  # beds are 3+ square meters; 1 m2 overlap is reachable
        rooms = [_room_with_one_object(rng, f"f{k}a", "bed", 1.0, 0.9),
                 _room_with_one_object(rng, f"f{k}b", "bed", 1.0, 0.9)]
        result = optimize_alignment(rooms, spec, cfg)
        assert result.feasible
        assert all(sol.objective_values[S] >= 1.0 - 1e-9 for sol in result.solutions)
        n_feasible += 1
    for k in range(5):  # chairs cap mutual sittable area at 0.25 m2
        rooms = [_room_with_one_object(rng, f"i{k}a", "chair", 0.25, 0.25),
                 _room_with_one_object(rng, f"i{k}b", "chair", 0.25, 0.25)]
        result = optimize_alignment(rooms, spec, cfg)
        assert not result.feasible
        assert result.best_violation[S] > 0
        n_infeasible += 1
    report(4, "constraint-satisfaction",
           f"({n_feasible} feasible all >= 1.0 m2, {n_infeasible} reported infeasible)")


def _room_with_one_object(rng, rid, category, hx, hy):
    """Random boundary plus one object of the given size fully inside it."""
    boundary = random_rectilinear_boundary(rng)
    x0, y0, x1, y1 = boundary.bounds
    for _ in range(100):
        cx = rng.uniform(x0 + hx, x1 - hx)
        cy = rng.uniform(y0 + hy, y1 - hy)
        box = OrientedBox(cx, cy, hx, hy)
        if area(boolean("difference", box.region(), boundary)) < 1e-9:
            return Room(rid, boundary, (obj(f"{rid}-obj", category, cx, cy, hx, hy),))
    raise AssertionError("could not place object inside boundary")


def test_criterion_05_simplification():
    rng = np.random.default_rng(505)
    eps = 0.3
    for k in range(50):
        w, h = rng.uniform(2.0, 5.0, size=2)
        base = Region.rectangle(0, 0, w, h)
        parts = [base]
        sides = rng.permutation(4)[:int(rng.integers(1, 4))]
        for side in sides:
            width = rng.uniform(0.08, 2 * eps - 0.08)
            length = rng.uniform(0.3, 1.5)
            pos = rng.uniform(0.3, 0.7)
            if side == 0:   # east
                c = pos * h
                parts.append(Region.rectangle(w, c - width / 2, w + length, c + width / 2))
            elif side == 1:  # west
                c = pos * h
                parts.append(Region.rectangle(-length, c - width / 2, 0, c + width / 2))
            elif side == 2:  # north
                c = pos * w
                parts.append(Region.rectangle(c - width / 2, h, c + width / 2, h + length))
            else:            # south
                c = pos * w
                parts.append(Region.rectangle(c - width / 2, -length, c + width / 2, 0))
        shape = union_all(parts)
        once = simplify_region(shape, eps)
        assert area(once) == pytest.approx(area(base), rel=0.01)
        twice = simplify_region(once, eps)
        assert area(twice) == pytest.approx(area(once), rel=0.01)
    report(5, "simplification", "(50 appendaged rectangles cleaned, idempotent)")


def test_criterion_06_inscribed_shapes():
    rect = Region.rectangle(0, 0, 2, 3)
    p = largest_inscribed_shape(ActivityTemplate.square(), rect)
    square_area = area(p.apply(ActivityTemplate.square().shape))
    assert square_area >= 0.98 * 6.0

    circle = ActivityTemplate.circle(segments=64)
    q = largest_inscribed_shape(circle, Region.rectangle(0, 0, 1, 1))
    circle_area = area(q.apply(circle.shape))
    assert circle_area == pytest.approx(math.pi / 4, rel=0.02)
    report(6, "inscribed-shapes",
           f"(square {square_area:.3f}/6.0, circle {circle_area:.4f} vs {math.pi/4:.4f})")


def test_criterion_07_synthesis_invariants():
    rng = np.random.default_rng(707)
    checked = 0
    for k in range(50):
        rooms = [random_room(rng, f"s{k}a", n_objects=int(rng.integers(1, 4)), max_extent=4.0),
                 random_room(rng, f"s{k}b", n_objects=int(rng.integers(1, 4)), max_extent=4.0)]
        transforms = [RigidTransform2D.identity(),
                      RigidTransform2D(rng.uniform(-1, 1), rng.uniform(-1, 1),
                                       rng.integers(0, 24) * math.radians(15))]
        scorer = train_prior_scorer(rooms)
        scene = initialize_scene(rooms, transforms, seed=k)
        scene = augment_scene(scene, rooms, transforms, scorer,
                              SynthConfig(grid_step=0.4, max_objects=4, seed=k))
        floor = scene.floor_region()
        boxes = [p.object.footprint.region() for p in scene.objects]
        for i, a in enumerate(boxes):
            assert area(boolean("difference", a, floor)) < OVERLAP_TOLERANCE
            for b in boxes[i + 1:]:
                assert area(boolean("intersect", a, b)) < OVERLAP_TOLERANCE
        walkables = [apply_rigid(extract_walkable(r).region, g)
                     for r, g in zip(rooms, transforms)]
        for p in scene.objects:
            if p.provenance.kind != NON_COLLIDING:
                continue
            for room, walk in zip(rooms, walkables):
                if room.id == p.provenance.room_id:
                    continue
                assert area(boolean("intersect", p.object.footprint.region(),
                                    walk)) < OVERLAP_TOLERANCE
        checked += len(boxes)
    report(7, "synthesis-invariants", f"(50 seeded scenes, {checked} placements checked)")


def chair_near_table_room(rid, rng=None, gap=0.4, size=6.0):
    table = obj(f"{rid}-table", "table", size - 1.0, size / 2, 0.6, 0.4)
    chair_x = size - 1.0 - 0.6 - gap - 0.25
    chair = obj(f"{rid}-chair", "chair", chair_x, size / 2, 0.25, 0.25, pose=(1.0, 0.0))
    return Room(rid, Region.rectangle(0, 0, size, size), (table, chair))


def test_criterion_08_conditional_reranking():
    rng = np.random.default_rng(808)
    train = [chair_near_table_room(f"t{k}", gap=float(rng.uniform(0.3, 0.45)))
             for k in range(6)]
    scorer = train_prior_scorer(train)
    for k in range(50):
        gap = float(rng.uniform(0.3, 0.45))
        rooms = [chair_near_table_room(f"c{k}a", gap=gap),
                 chair_near_table_room(f"c{k}b", gap=gap)]
        gs = [RigidTransform2D.identity(), RigidTransform2D.identity()]
        init = initialize_scene(rooms, gs, seed=k)
        cfg = SynthConfig(grid_step=0.3, max_objects=1, top_n=10,
                          category_order=("chair",), stop_threshold=0.05, seed=k)
        got = augment_scene(init, rooms, gs, scorer, cfg)
        added = [p for p in got.objects if p.provenance.kind == SYNTHESIZED]
        assert len(added) == 1
        positions, yaws = sample_candidates(init, cfg)
        scores = _score_batch(scorer, init, "chair", positions, yaws)
        order = np.lexsort((np.arange(len(scores)), -scores))[:cfg.top_n]
        top = [PlacementCandidate((float(positions[i, 0]), float(positions[i, 1])),
                                  float(yaws[i]), float(scores[i]), int(i)) for i in order]
        expect = conditional_rerank(top, rooms, gs, "chair", cfg.top_n,
                                    half_extents=scorer.half_extents("chair"))
        placed = added[0].object.footprint
        # placed candidate is in the top-n pool and is its delta-minimizer
        assert (placed.cx, placed.cy, placed.yaw) == (
            expect.position[0], expect.position[1], expect.yaw)

        # n = 1 must equal pure argmax-by-score placement, byte for byte
        from mutualscene.sceneio import synthetic_scene_to_dict
        one = augment_scene(init, rooms, gs, scorer,
                            SynthConfig(grid_step=0.3, max_objects=1, top_n=1,
                                        category_order=("chair",),
                                        stop_threshold=0.05, seed=k))
        best_i = int(np.lexsort((np.arange(len(scores)), -scores))[0])
        ref = init.with_object(_manual_placement(scorer, positions, yaws, best_i, k))
        assert json.dumps(synthetic_scene_to_dict(one), sort_keys=True) == \
            json.dumps(synthetic_scene_to_dict(ref), sort_keys=True)
    report(8, "conditional-reranking", "(50 seeded runs, top-n + argmax checks)")


def _manual_placement(scorer, positions, yaws, idx, seed):
    from mutualscene.scene import SceneObject
    from mutualscene.synth import PlacedObject, Provenance, _facing
    hx, hy = scorer.half_extents("chair")
    box = OrientedBox(float(positions[idx, 0]), float(positions[idx, 1]), hx, hy,
                      float(yaws[idx]))
    return PlacedObject(SceneObject("synth-chair-0", "chair", box,
                                    pose_direction=_facing(float(yaws[idx]))),
                        Provenance(SYNTHESIZED))


def test_criterion_09_cli_determinism(tmp_path):
    scene_a = {
        "schema_version": 1,
        "room": {"id": "a", "boundary": [[0, 0], [5, 0], [5, 4], [0, 4]],
                 "room_function": "office"},
        "objects": [
            {"id": "desk", "category": "desk",
             "obb": {"cx": 4.2, "cy": 2.0, "hx": 0.6, "hy": 0.4, "yaw": 0.0},
             "pose": [-1.0, 0.0], "height_range": [0.0, 0.75]},
            {"id": "chair", "category": "chair",
             "obb": {"cx": 3.2, "cy": 2.0, "hx": 0.25, "hy": 0.25, "yaw": 0.0},
             "pose": [1.0, 0.0], "height_range": [0.0, 0.9]},
        ]}
    scene_b = json.loads(json.dumps(scene_a))
    scene_b["room"]["id"] = "b"
    scene_b["room"]["boundary"] = [[0, 0], [4.5, 0], [4.5, 4.5], [0, 4.5]]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    a.write_text(json.dumps(scene_a))
    b.write_text(json.dumps(scene_b))
    template = tmp_path / "tmpl.json"
    template.write_text(json.dumps({"schema_version": 1, "kind": "activity_template",
                                    "shape": [[0, 0], [1, 0], [1, 1], [0, 1]]}))

    fast = ["--pop", "24", "--gens", "12", "--seed", "7"]
    res = str(tmp_path / "res.json")
    assert main(["align", str(a), str(b), "-o", res] + fast) == EXIT_OK

    runs = {
        "extract": ["extract", str(a), "-o", "{out}", "--svg", "{svg}"],
        "align": ["align", str(a), str(b), "-o", "{out}", "--svg", "{svg}"] + fast,
        "oracle": ["oracle", str(a), str(b), "--rstep", "30", "-o", "{out}"],
        "simplify": ["simplify", res, "--eps", "0.25", "-o", "{out}"],
        "inscribe": ["inscribe", res, "--template", str(template), "-o", "{out}"],
        "synth": ["synth", res, "--solution", "0", "--seed", "42", "--grid", "0.4",
                  "--max-objects", "2", "-o", "{out}", "--svg", "{svg}"],
        "render": ["render", res, "-o", "{svg}"],
        "train-prior": ["train-prior", str(a), str(b), "-o", "{out}"],
    }
    for verb, template_args in runs.items():
        outputs = []
        for attempt in (1, 2):
            out = tmp_path / f"{verb}{attempt}.json"
            svg = tmp_path / f"{verb}{attempt}.svg"
            argv = [s.replace("{out}", str(out)).replace("{svg}", str(svg))
                    for s in template_args]
            assert main(argv) == EXIT_OK, verb
            payload = b""
            if out.exists():
                payload += out.read_bytes()
            if svg.exists():
                payload += svg.read_bytes()
            outputs.append(payload)
        assert outputs[0] == outputs[1], f"{verb} output not byte-identical"
    report(9, "cli-determinism", f"({len(runs)} verbs run twice, byte-identical)")


def test_criterion_10_gauge_invariance():
    rng = np.random.default_rng(1010)
    spec = ObjectiveSpec({W: 1.0}, constraints={S: 1.0})
    cfg = AlignmentConfig(population=40, generations=20, seed=3)
    rooms = [Room("a", random_rectilinear_boundary(rng),
                  (obj("a-bed", "bed", 1.4, 1.2, 1.0, 0.9),
                   obj("a-desk", "desk", 2.6, 0.9, 0.5, 0.35))),
             Room("b", random_rectilinear_boundary(rng),
                  (obj("b-bed", "bed", 1.2, 1.5, 1.0, 0.9),))]
    base = optimize_alignment(rooms, spec, cfg)
    worst = 0.0
    for k in range(5):
        g = RigidTransform2D(rng.uniform(-10, 10), rng.uniform(-10, 10),
                             rng.uniform(0, 2 * math.pi))
        moved = [transform_room(r, g) for r in rooms]
        got = optimize_alignment(moved, spec, cfg)
        assert got.feasible == base.feasible
        assert len(got.solutions) == len(base.solutions)
        for sa, sb in zip(base.solutions, got.solutions):
            for c in sa.objective_values:
                va, vb = sa.objective_values[c], sb.objective_values[c]
                rel = abs(va - vb) / max(abs(va), 1e-12)
                worst = max(worst, rel)
                assert rel < 1e-6
    report(10, "gauge-invariance", f"(5 random common transforms, worst rel {worst:.2e})")
