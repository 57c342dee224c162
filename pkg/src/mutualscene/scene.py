"""Room data model, functional-region extraction, and semantic scene graphs.

A room is a labeled floor boundary plus oriented-box furniture.  Each object
category maps to zero or more functional classes via a shipped data table;
walkable space is whatever floor remains after subtracting obstacles within
standing height.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .geometry import (
    GeometryError,
    Region,
    RigidTransform2D,
    apply_rigid,
    boolean,
    distance,
    union_all,
)


class FunctionClass(Enum):
    WALKABLE = "walkable"
    SITTABLE = "sittable"
    WORKABLE = "workable"

    def __str__(self) -> str:
        return self.value


# Obstacles intersecting this height band block walking.
WALKABLE_HEIGHT_RANGE = (0.0, 2.0)

# Scene-graph relationship vocabulary and thresholds.
NEXT_TO = "next_to"
EDGE_OF_ROOM = "edge_of_room"
MIDDLE_OF_ROOM = "middle_of_room"
FACING = "facing"
SAME_DIRECTION = "same_direction"
RELATION_NAMES = (NEXT_TO, EDGE_OF_ROOM, MIDDLE_OF_ROOM, FACING, SAME_DIRECTION)

NEXT_TO_MAX_GAP = 0.5
EDGE_MAX_GAP = 0.5
FACING_HALF_ANGLE = math.radians(30.0)
SAME_DIRECTION_MAX_ANGLE = math.radians(45.0)

_CATEGORY_HEADER = "# mutualscene-category-functions v1"
_category_table_cache: dict[str, frozenset[FunctionClass]] | None = None


def load_category_table(path=None) -> dict[str, frozenset[FunctionClass]]:
    """Category -> function-class table from the packaged data file (or a
    user-supplied one in the same format: header line, then `category,fn,...`)."""
    if path is None:
        text = resources.files("mutualscene.data").joinpath("category_functions.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_CATEGORY_HEADER):
        raise ValueError("category table missing versioned header")
    table: dict[str, frozenset[FunctionClass]] = {}
    for line in lines[1:]:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        table[cells[0]] = frozenset(FunctionClass(c) for c in cells[1:] if c)
    return table


def category_functions(category: str) -> frozenset[FunctionClass]:
    global _category_table_cache
    if _category_table_cache is None:
        _category_table_cache = load_category_table()
    return _category_table_cache.get(category, frozenset())


@dataclass(frozen=True)
class OrientedBox:
    """Axis box of half-extents (hx, hy) centered at (cx, cy), rotated by yaw."""

    cx: float
    cy: float
    hx: float
    hy: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.hx > 0 and self.hy > 0):
            raise ValueError("half-extents must be positive")

    def corners(self) -> list[tuple[float, float]]:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        out = []
        for dx, dy in ((-self.hx, -self.hy), (self.hx, -self.hy),
                       (self.hx, self.hy), (-self.hx, self.hy)):
            out.append((self.cx + c * dx - s * dy, self.cy + s * dx + c * dy))
        return out

    def region(self) -> Region:
        return Region([self.corners()])

    def transformed(self, g: RigidTransform2D) -> "OrientedBox":
        cx, cy = g.apply_point((self.cx, self.cy))
        return OrientedBox(cx, cy, self.hx, self.hy, (self.yaw + g.theta) % (2 * math.pi))


@dataclass(frozen=True)
class SceneObject:
    """A piece of furniture: footprint box, facing direction, vertical span."""

    id: str
    category: str
    footprint: OrientedBox
    pose_direction: tuple[float, float] = (0.0, 1.0)
    height_range: tuple[float, float] = (0.0, 1.0)
    functions: frozenset[FunctionClass] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        n = math.hypot(*self.pose_direction)
        if n == 0:
            raise ValueError(f"object {self.id!r} has a zero pose direction")
        object.__setattr__(self, "pose_direction",
                           (self.pose_direction[0] / n, self.pose_direction[1] / n))
        if self.height_range[0] > self.height_range[1]:
            raise ValueError(f"object {self.id!r} height range is inverted")
        if self.functions is None:
            object.__setattr__(self, "functions", category_functions(self.category))

    def transformed(self, g: RigidTransform2D) -> "SceneObject":
        return SceneObject(self.id, self.category, self.footprint.transformed(g),
                           g.apply_vector(self.pose_direction), self.height_range,
                           self.functions)

    def blocks_walking(self, height_range=WALKABLE_HEIGHT_RANGE) -> bool:
        z0, z1 = self.height_range
        return z0 <= height_range[1] and z1 >= height_range[0]


@dataclass(frozen=True)
class Room:
    id: str
    boundary: Region
    objects: tuple[SceneObject, ...] = ()
    room_function: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.boundary.is_empty:
            raise GeometryError(f"room {self.id!r} has an empty boundary")
        if len(self.boundary._geom.geoms) != 1:
            raise GeometryError(f"room {self.id!r} boundary is not connected")
        seen = set()
        for obj in self.objects:
            if obj.id in seen:
                raise ValueError(f"duplicate object id {obj.id!r} in room {self.id!r}")
            seen.add(obj.id)
            if boolean("intersect", obj.footprint.region(), self.boundary).is_empty:
                raise ValueError(f"object {obj.id!r} lies outside room {self.id!r}")

    def object_by_id(self, object_id: str) -> SceneObject:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        raise KeyError(object_id)


def transform_room(room: Room, g: RigidTransform2D) -> Room:
    return Room(room.id, apply_rigid(room.boundary, g),
                tuple(o.transformed(g) for o in room.objects), room.room_function)


@dataclass(frozen=True)
class FunctionRegion:
    """A functional patch of a room: where one can walk, sit, or work."""

    region: Region
    function: FunctionClass
    pose: tuple[float, float] | None = None
    source_object_ids: tuple[str, ...] = ()


def extract_walkable(room: Room, height_range=WALKABLE_HEIGHT_RANGE) -> FunctionRegion:
    """Floor area left after removing footprints of objects within the given
    height band."""
    blockers = [o.footprint.region() for o in room.objects if o.blocks_walking(height_range)]
    region = boolean("difference", room.boundary, union_all(blockers))
    return FunctionRegion(region=region, function=FunctionClass.WALKABLE)


def extract_function_regions(room: Room, function: FunctionClass) -> list[FunctionRegion]:
    """One region per object providing the requested function, clipped to the
    room boundary and carrying the object's facing direction."""
    if function == FunctionClass.WALKABLE:
        raise ValueError("walkable space is extracted as a single region")
    out = []
    for obj in sorted(room.objects, key=lambda o: o.id):
        if function not in obj.functions:
            continue
        clipped = boolean("intersect", obj.footprint.region(), room.boundary)
        if clipped.is_empty:
            continue
        out.append(FunctionRegion(region=clipped, function=function,
                                  pose=obj.pose_direction, source_object_ids=(obj.id,)))
    return out


def functional_region(room: Room, function: FunctionClass) -> Region:
    """Union of a room's area for one functional class."""
    if function == FunctionClass.WALKABLE:
        return extract_walkable(room).region
    return union_all([fr.region for fr in extract_function_regions(room, function)])


# ---------------------------------------------------------------------------
# Semantic scene graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SceneGraphSet:
    """One directed edge list per spatial relationship over object/room nodes."""

    nodes: tuple[str, ...]
    room_node: str
    graphs: dict[str, tuple[tuple[str, str], ...]]

    def edges(self, relation: str) -> tuple[tuple[str, str], ...]:
        return self.graphs.get(relation, ())

    def has_edge(self, relation: str, src: str, dst: str) -> bool:
        return (src, dst) in self.graphs.get(relation, ())


def build_scene_graphs(room: Room) -> SceneGraphSet:
    """Extract positional (next-to, edge/middle of room) and orientational
    (facing, same-direction) relationships between objects and the room."""
    objs = sorted(room.objects, key=lambda o: o.id)
    regions = {o.id: o.footprint.region() for o in objs}
    walls = room.boundary._geom.boundary
    x0, y0, x1, y1 = room.boundary.bounds
    reach = 4.0 * math.hypot(x1 - x0, y1 - y0)

    graphs: dict[str, list[tuple[str, str]]] = {name: [] for name in RELATION_NAMES}
    for a in objs:
        gap = regions[a.id]._geom.distance(walls)
        if gap < EDGE_MAX_GAP:
            graphs[EDGE_OF_ROOM].append((a.id, room.id))
        else:
            graphs[MIDDLE_OF_ROOM].append((a.id, room.id))
        for b in objs:
            if a.id == b.id:
                continue
            if distance(regions[a.id], regions[b.id]) < NEXT_TO_MAX_GAP:
                graphs[NEXT_TO].append((a.id, b.id))
            if _faces(a, regions[b.id], reach):
                graphs[FACING].append((a.id, b.id))
            if _pose_angle_between(a.pose_direction, b.pose_direction) < SAME_DIRECTION_MAX_ANGLE:
                graphs[SAME_DIRECTION].append((a.id, b.id))

    nodes = tuple(o.id for o in objs) + (room.id,)
    return SceneGraphSet(nodes=nodes, room_node=room.id,
                         graphs={k: tuple(sorted(v)) for k, v in graphs.items()})


def _faces(obj: SceneObject, target: Region, reach: float) -> bool:
    """True when the view cone around the object's pose hits the target."""
    apex = (obj.footprint.cx, obj.footprint.cy)
    ang = math.atan2(obj.pose_direction[1], obj.pose_direction[0])
    left, right = ang - FACING_HALF_ANGLE, ang + FACING_HALF_ANGLE
    wedge = Region([[apex,
                     (apex[0] + reach * math.cos(left), apex[1] + reach * math.sin(left)),
                     (apex[0] + reach * math.cos(right), apex[1] + reach * math.sin(right))]])
    return not boolean("intersect", wedge, target).is_empty


def _pose_angle_between(u: tuple[float, float], v: tuple[float, float]) -> float:
    dot = max(-1.0, min(1.0, u[0] * v[0] + u[1] * v[1]))
    return math.acos(dot)
