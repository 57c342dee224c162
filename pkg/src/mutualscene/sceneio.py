"""Scene, template, prior, and result file formats, plus SVG floorplan
rendering.

Files are JSON with a ``schema_version``; angles are stored in degrees and
converted to radians at the boundary.  Every writer is atomic (temp file +
rename) and byte-deterministic: identical data always serializes to identical
bytes, which makes results diffable and reruns verifiable by digest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from xml.sax.saxutils import escape as xml_escape

from .align import AlignmentConfig, MutualResult, ObjectiveSpec, ParetoSolution
from .geometry import (
    ActivityTemplate,
    GeometryError,
    Region,
    RigidTransform2D,
    ScaledPlacement,
    rect_region,
)
from .scene import (
    FunctionClass,
    OrientedBox,
    Room,
    SceneObject,
    extract_function_regions,
    extract_walkable,
    load_category_table,
)
from .synth import PlacedObject, PriorScorer, Provenance, SyntheticScene

log = logging.getLogger("mutualscene")

SCHEMA_VERSION = 1
PX_PER_M = 50.0


class SceneFileError(Exception):
    """Malformed or schema-violating input file; message names the culprit."""


def _deg(rad: float) -> float:
    return round(math.degrees(rad), 9)


def _rad(deg: float) -> float:
    return math.radians(deg)


def file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_json(data, path: str) -> None:
    """Atomic, canonical JSON write (sorted keys, fixed layout)."""
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mutualscene-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text(text: str, path: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".mutualscene-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SceneFileError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise SceneFileError(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# Scene files
# ---------------------------------------------------------------------------

def room_to_dict(room: Room) -> dict:
    ring = room.boundary.rings[0]
    return {
        "schema_version": SCHEMA_VERSION,
        "room": {
            "id": room.id,
            "boundary": [[x, y] for x, y in ring[:-1]],
            "room_function": room.room_function,
        },
        "objects": [{
            "id": o.id,
            "category": o.category,
            "obb": {"cx": o.footprint.cx, "cy": o.footprint.cy,
                    "hx": o.footprint.hx, "hy": o.footprint.hy,
                    "yaw": _deg(o.footprint.yaw)},
            "pose": [o.pose_direction[0], o.pose_direction[1]],
            "height_range": [o.height_range[0], o.height_range[1]],
        } for o in room.objects],
    }


def room_from_dict(data: dict, source: str = "<memory>") -> Room:
    def fail(msg):
        raise SceneFileError(f"{source}: {msg}")

    if not isinstance(data, dict):
        fail("top level must be an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        fail(f"unsupported schema_version {version!r}")
    rd = data.get("room")
    if not isinstance(rd, dict) or "id" not in rd or "boundary" not in rd:
        fail("field 'room' must carry 'id' and 'boundary'")
    ring = rd["boundary"]
    if not isinstance(ring, list) or len(ring) < 3:
        fail("field 'room.boundary' needs at least 3 vertices")
    try:
        boundary = Region([[(float(x), float(y)) for x, y in ring]])
    except (GeometryError, TypeError, ValueError) as exc:
        fail(f"field 'room.boundary' invalid: {exc}")

    table = load_category_table()
    objects = []
    for i, od in enumerate(data.get("objects", [])):
        oid = od.get("id", f"#{i}")
        obb = od.get("obb")
        if not isinstance(obb, dict):
            fail(f"object {oid!r}: field 'obb' missing")
        for key in ("cx", "cy", "hx", "hy", "yaw"):
            if key not in obb:
                fail(f"object {oid!r}: field 'obb.{key}' missing")
        if obb["hx"] <= 0 or obb["hy"] <= 0:
            fail(f"object {oid!r}: field 'obb' has non-positive half-extents")
        pose = od.get("pose", [0.0, 1.0])
        norm = math.hypot(pose[0], pose[1])
        if abs(norm - 1.0) > 1e-6:
            fail(f"object {oid!r}: field 'pose' is not a unit vector")
        hr = od.get("height_range", [0.0, 1.0])
        if hr[0] > hr[1]:
            fail(f"object {oid!r}: field 'height_range' is inverted")
        category = od.get("category", "")
        if category not in table:
            log.warning("%s: object %r has unknown category %r (no function class)",
                        source, oid, category)
        try:
            objects.append(SceneObject(
                str(oid), str(category),
                OrientedBox(float(obb["cx"]), float(obb["cy"]),
                            float(obb["hx"]), float(obb["hy"]), _rad(float(obb["yaw"]))),
                pose_direction=(float(pose[0]), float(pose[1])),
                height_range=(float(hr[0]), float(hr[1]))))
        except ValueError as exc:
            fail(f"object {oid!r}: {exc}")
    try:
        return Room(str(rd["id"]), boundary, tuple(objects),
                    str(rd.get("room_function", "generic")))
    except (GeometryError, ValueError) as exc:
        fail(str(exc))


def load_scene(path: str) -> Room:
    return room_from_dict(read_json(path), source=path)


def save_scene(room: Room, path: str) -> None:
    write_json(room_to_dict(room), path)


def load_template(path: str) -> ActivityTemplate:
    data = read_json(path)
    if data.get("kind") != "activity_template" or "shape" not in data:
        raise SceneFileError(f"{path}: not an activity template file")
    try:
        return ActivityTemplate.centered(Region([[(float(x), float(y))
                                                  for x, y in data["shape"]]]))
    except (GeometryError, TypeError, ValueError) as exc:
        raise SceneFileError(f"{path}: field 'shape' invalid: {exc}") from exc


def save_template(template: ActivityTemplate, path: str) -> None:
    ring = template.shape.rings[0]
    write_json({"schema_version": SCHEMA_VERSION, "kind": "activity_template",
                "shape": [[x, y] for x, y in ring[:-1]]}, path)


def load_prior(path: str) -> PriorScorer:
    data = read_json(path)
    if data.get("kind") != "prior":
        raise SceneFileError(f"{path}: not a prior file")
    return PriorScorer.from_dict(data["categories"])


def save_prior(scorer: PriorScorer, path: str) -> None:
    write_json({"schema_version": SCHEMA_VERSION, "kind": "prior",
                "categories": scorer.to_dict()}, path)


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------

def region_to_rings(region: Region) -> list:
    return [[[x, y] for x, y in ring] for ring in region.rings]


def region_from_rings(rings) -> Region:
    if not rings:
        return Region.empty()
    return Region([[(float(x), float(y)) for x, y in ring] for ring in rings])


def transform_to_dict(g: RigidTransform2D) -> dict:
    return {"tx": g.tx, "ty": g.ty, "theta": _deg(g.theta)}


def transform_from_dict(d: dict) -> RigidTransform2D:
    return RigidTransform2D(float(d["tx"]), float(d["ty"]), _rad(float(d["theta"])))


def config_to_dict(cfg: AlignmentConfig) -> dict:
    return {
        "population": cfg.population,
        "generations": cfg.generations,
        "mutation_probability": cfg.mutation_probability,
        "mutation_rate": cfg.mutation_rate,
        "crossover_rate": cfg.crossover_rate,
        "translation_step": cfg.translation_step,
        "rotation_step": _deg(cfg.rotation_step),
        "seed": cfg.seed,
        "translation_bounds": cfg.translation_bounds,
    }


def config_from_dict(d: dict) -> AlignmentConfig:
    return AlignmentConfig(
        population=d["population"], generations=d["generations"],
        mutation_probability=d["mutation_probability"], mutation_rate=d["mutation_rate"],
        crossover_rate=d["crossover_rate"], translation_step=d["translation_step"],
        rotation_step=_rad(d["rotation_step"]), seed=d["seed"],
        translation_bounds=d["translation_bounds"])


def objective_to_dict(spec: ObjectiveSpec) -> dict:
    return {"maximize": {c.value: w for c, w in sorted(spec.maximize.items(),
                                                       key=lambda kv: kv[0].value)},
            "constraints": {c.value: a for c, a in sorted(spec.constraints.items(),
                                                          key=lambda kv: kv[0].value)}}


def objective_from_dict(d: dict) -> ObjectiveSpec:
    return ObjectiveSpec(
        maximize={FunctionClass(k): float(v) for k, v in d["maximize"].items()},
        constraints={FunctionClass(k): float(v) for k, v in d.get("constraints", {}).items()})


def solution_to_dict(sol: ParetoSolution) -> dict:
    return {
        "transforms": [transform_to_dict(g) for g in sol.transforms],
        "objective_values": {c.value: v for c, v in sorted(
            sol.objective_values.items(), key=lambda kv: kv[0].value)},
        "mutual_regions": {c.value: region_to_rings(r) for c, r in sorted(
            sol.mutual_regions.items(), key=lambda kv: kv[0].value)},
    }


def solution_from_dict(d: dict) -> ParetoSolution:
    return ParetoSolution(
        transforms=tuple(transform_from_dict(t) for t in d["transforms"]),
        objective_values={FunctionClass(k): float(v)
                          for k, v in d["objective_values"].items()},
        mutual_regions={FunctionClass(k): region_from_rings(r)
                        for k, r in d["mutual_regions"].items()})


def result_to_dict(result: MutualResult, inputs: list[tuple[str, str, Room]],
                   cfg: AlignmentConfig, spec: ObjectiveSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "alignment_result",
        "inputs": [{"path": path, "sha256": digest, "scene": room_to_dict(room)}
                   for path, digest, room in inputs],
        "config": config_to_dict(cfg),
        "objective": objective_to_dict(spec),
        "feasible": result.feasible,
        "best_violation": None if result.best_violation is None else
            {c.value: v for c, v in sorted(result.best_violation.items(),
                                           key=lambda kv: kv[0].value)},
        "solutions": [solution_to_dict(s) for s in result.solutions],
        "chosen": result.chosen_index,
        "simplify_eps": None,
        "inscribed": None,
        "synthetic_scene": None,
    }


def result_from_dict(data: dict, source: str = "<memory>"):
    """Returns (MutualResult, rooms, config, objective, raw dict)."""
    if data.get("kind") != "alignment_result":
        raise SceneFileError(f"{source}: not an alignment result file")
    result = MutualResult(
        solutions=tuple(solution_from_dict(s) for s in data["solutions"]),
        chosen_index=data.get("chosen"),
        feasible=data.get("feasible", True),
        best_violation=None if data.get("best_violation") is None else
            {FunctionClass(k): float(v) for k, v in data["best_violation"].items()})
    rooms = [room_from_dict(inp["scene"], source=f"{source}:inputs[{i}]")
             for i, inp in enumerate(data["inputs"])]
    return result, rooms, config_from_dict(data["config"]), \
        objective_from_dict(data["objective"]), data


def load_result(path: str):
    return result_from_dict(read_json(path), source=path)


def placement_to_dict(p: ScaledPlacement) -> dict:
    return {"tx": p.transform.tx, "ty": p.transform.ty,
            "theta": _deg(p.transform.theta), "sx": p.sx, "sy": p.sy}


def placement_from_dict(d: dict) -> ScaledPlacement:
    return ScaledPlacement(RigidTransform2D(float(d["tx"]), float(d["ty"]),
                                            _rad(float(d["theta"]))),
                           float(d["sx"]), float(d["sy"]))


def synthetic_scene_to_dict(scene: SyntheticScene) -> dict:
    return {
        "floor": placement_to_dict(scene.floor),
        "room_function": scene.room_function,
        "objects": [{
            "object": {
                "id": p.object.id, "category": p.object.category,
                "obb": {"cx": p.object.footprint.cx, "cy": p.object.footprint.cy,
                        "hx": p.object.footprint.hx, "hy": p.object.footprint.hy,
                        "yaw": _deg(p.object.footprint.yaw)},
                "pose": [p.object.pose_direction[0], p.object.pose_direction[1]],
                "height_range": [p.object.height_range[0], p.object.height_range[1]],
            },
            "provenance": {"kind": p.provenance.kind, "room_id": p.provenance.room_id},
        } for p in scene.objects],
    }


def synthetic_scene_from_dict(d: dict) -> SyntheticScene:
    objects = []
    for od in d["objects"]:
        o = od["object"]
        objects.append(PlacedObject(
            SceneObject(o["id"], o["category"],
                        OrientedBox(o["obb"]["cx"], o["obb"]["cy"], o["obb"]["hx"],
                                    o["obb"]["hy"], _rad(o["obb"]["yaw"])),
                        pose_direction=tuple(o["pose"]),
                        height_range=tuple(o["height_range"])),
            Provenance(od["provenance"]["kind"], od["provenance"]["room_id"])))
    return SyntheticScene(placement_from_dict(d["floor"]), d["room_function"],
                          tuple(objects))


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_CLASS_FILL = {FunctionClass.WALKABLE: "#cdeccd",
               FunctionClass.SITTABLE: "#f4c98e",
               FunctionClass.WORKABLE: "#a9c2ec"}
_PROVENANCE_FILL = {"mutual_function": "#f4c98e",
                    "non_colliding_transfer": "#c9c9e8",
                    "synthesized": "#9fd6c6"}


class _Canvas:
    """Accumulates SVG elements over a metric viewport (y up)."""

    def __init__(self, bounds, margin=0.5):
        x0, y0, x1, y1 = bounds
        self.x0, self.y1 = x0 - margin, y1 + margin
        self.w = (x1 - x0 + 2 * margin) * PX_PER_M
        self.h = (y1 - y0 + 2 * margin) * PX_PER_M
        self.parts: list[str] = []

    def pt(self, x, y):
        return ((x - self.x0) * PX_PER_M, (self.y1 - y) * PX_PER_M)

    def path(self, region: Region, fill, stroke="none", opacity=1.0, width=1.0):
        if region.is_empty:
            return
        d = []
        for ring in region.rings:
            pts = [self.pt(x, y) for x, y in ring]
            d.append("M " + " L ".join(f"{px:.3f},{py:.3f}" for px, py in pts) + " Z")
        self.parts.append(
            f'<path d="{" ".join(d)}" fill="{fill}" fill-rule="evenodd" '
            f'fill-opacity="{opacity:.3f}" stroke="{stroke}" stroke-width="{width:.3f}"/>')

    def line(self, a, b, stroke="#444", width=1.5):
        ax, ay = self.pt(*a)
        bx, by = self.pt(*b)
        self.parts.append(f'<line x1="{ax:.3f}" y1="{ay:.3f}" x2="{bx:.3f}" y2="{by:.3f}" '
                          f'stroke="{stroke}" stroke-width="{width:.3f}"/>')

    def arrow(self, origin, direction, length=0.45, stroke="#444"):
        tip = (origin[0] + direction[0] * length, origin[1] + direction[1] * length)
        self.line(origin, tip, stroke=stroke, width=2.0)
        left = (-direction[1] - direction[0], direction[0] - direction[1])
        right = (direction[1] - direction[0], -direction[0] - direction[1])
        for side in (left, right):
            self.line(tip, (tip[0] + side[0] * 0.08, tip[1] + side[1] * 0.08),
                      stroke=stroke, width=2.0)

    def text(self, xy, label, size=10.0, color="#333"):
        px, py = self.pt(*xy)
        self.parts.append(f'<text x="{px:.3f}" y="{py:.3f}" font-size="{size:.1f}" '
                          f'font-family="sans-serif" fill="{color}" '
                          f'text-anchor="middle">{xml_escape(label)}</text>')

    def to_svg(self) -> str:
        body = "\n".join(self.parts)
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w:.0f}" '
                f'height="{self.h:.0f}" viewBox="0 0 {self.w:.3f} {self.h:.3f}">\n'
                f'{body}\n</svg>\n')


def _draw_room(canvas: _Canvas, room: Room) -> None:
    canvas.path(room.boundary, fill="#fafafa", stroke="#222222", width=2.0)
    canvas.path(extract_walkable(room).region, fill=_CLASS_FILL[FunctionClass.WALKABLE],
                opacity=0.8)
    for fclass in (FunctionClass.SITTABLE, FunctionClass.WORKABLE):
        for fr in extract_function_regions(room, fclass):
            canvas.path(fr.region, fill=_CLASS_FILL[fclass], opacity=0.9)
            if fr.pose is not None:
                canvas.arrow(fr.region.centroid, fr.pose)
    for obj in sorted(room.objects, key=lambda o: o.id):
        canvas.path(obj.footprint.region(), fill="none", stroke="#555555", width=1.2)
        canvas.text((obj.footprint.cx, obj.footprint.cy), obj.category, size=9.0)


def render_room_svg(room: Room) -> str:
    canvas = _Canvas(room.boundary.bounds)
    _draw_room(canvas, room)
    canvas.text(((room.boundary.bounds[0] + room.boundary.bounds[2]) / 2,
                 room.boundary.bounds[3] + 0.25),
                f"{room.id} ({room.room_function})", size=12.0)
    return canvas.to_svg()


def render_mutual_svg(result: MutualResult, rooms: list[Room]) -> str:
    """One panel per solution: aligned boundaries plus mutual region fills and
    the transform annotations."""
    from .geometry import apply_rigid, union_all

    panels = []
    for sol in result.solutions:
        moved = [apply_rigid(r.boundary, g) for r, g in zip(rooms, sol.transforms)]
        panels.append((sol, moved, union_all(moved).bounds))
    pieces = []
    for idx, (sol, moved, b) in enumerate(panels):
        canvas = _Canvas((b[0], b[1], b[2], b[3] + 1.0), margin=0.5)
        for outline in moved:
            canvas.path(outline, fill="none", stroke="#888888", width=1.2)
        for fclass in (FunctionClass.WALKABLE, FunctionClass.SITTABLE, FunctionClass.WORKABLE):
            region = sol.mutual_regions.get(fclass)
            if region is not None:
                canvas.path(region, fill=_CLASS_FILL[fclass], opacity=0.75,
                            stroke="#333333", width=1.0)
        lines = [f"solution {idx}"]
        lines += [f"{c.value}: {v:.3f} m2" for c, v in sorted(
            sol.objective_values.items(), key=lambda kv: kv[0].value)]
        lines += [f"room {i}: dx={g.tx:.2f} dy={g.ty:.2f} rot={math.degrees(g.theta):.0f}"
                  for i, g in enumerate(sol.transforms)]
        for li, text in enumerate(lines):
            canvas.text(((b[0] + b[2]) / 2, b[3] + 0.9 - 0.22 * li), text, size=9.0)
        pieces.append(canvas)
    total_w = sum(c.w + 10 for c in pieces)
    total_h = max(c.h for c in pieces)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0f}" '
           f'height="{total_h:.0f}" viewBox="0 0 {total_w:.3f} {total_h:.3f}">']
    x = 0.0
    for canvas in pieces:
        out.append(f'<g transform="translate({x:.3f},0)">')
        out.extend(canvas.parts)
        out.append("</g>")
        x += canvas.w + 10
    out.append("</svg>\n")
    return "\n".join(out)


def render_synthetic_svg(scene: SyntheticScene) -> str:
    floor = rect_region(scene.floor)
    canvas = _Canvas(floor.bounds)
    canvas.path(floor, fill="#f6f6f6", stroke="#222222", width=2.0)
    for p in sorted(scene.objects, key=lambda q: q.object.id):
        fill = _PROVENANCE_FILL.get(p.provenance.kind, "#dddddd")
        canvas.path(p.object.footprint.region(), fill=fill, opacity=0.9,
                    stroke="#555555", width=1.0)
        canvas.arrow((p.object.footprint.cx, p.object.footprint.cy), p.object.pose_direction)
        canvas.text((p.object.footprint.cx, p.object.footprint.cy - 0.15),
                    p.object.category, size=8.5)
    x0, y0, x1, y1 = floor.bounds
    canvas.text(((x0 + x1) / 2, y1 + 0.25), f"synthetic ({scene.room_function})", size=12.0)
    return canvas.to_svg()


def render_svg(artifact, path: str, rooms: list[Room] | None = None) -> None:
    """Render a Room, MutualResult (rooms required), or SyntheticScene."""
    if isinstance(artifact, Room):
        svg = render_room_svg(artifact)
    elif isinstance(artifact, MutualResult):
        if rooms is None:
            raise ValueError("rendering a MutualResult needs the input rooms")
        svg = render_mutual_svg(artifact, rooms)
    elif isinstance(artifact, SyntheticScene):
        svg = render_synthetic_svg(artifact)
    else:
        raise TypeError(f"cannot render {type(artifact).__name__}")
    write_text(svg, path)
