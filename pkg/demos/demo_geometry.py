"""Tour of the polygon kernel: booleans, offsets, safe-area simplification,
bounding rectangles, and inscribed activity shapes.

Run:  python3 demos/demo_geometry.py
"""

import math

from mutualscene import (
    ActivityTemplate,
    Region,
    RigidTransform2D,
    apply_rigid,
    boolean,
    largest_inscribed_shape,
    min_area_bounding_rect,
    offset,
    rect_region,
    simplify_region,
    union_all,
)

# Regions are multipolygons with holes, measured in meters.
room = Region.from_polygon([(0, 0), (6, 0), (6, 4), (0, 4)],
                           holes=[[(2.5, 1.5), (3.5, 1.5), (3.5, 2.5), (2.5, 2.5)]])
print(f"room with a column: area {room.area:.2f} m^2")

# Booleans keep areas consistent: A + B == union + intersection.
alcove = Region.rectangle(5, 1, 7, 3)
u = boolean("union", room, alcove)
i = boolean("intersect", room, alcove)
print(f"union {u.area:.2f} + intersection {i.area:.2f} "
      f"== {room.area:.2f} + {alcove.area:.2f}")

# Rigid transforms preserve area exactly; composing with the inverse is a no-op.
g = RigidTransform2D(tx=2.0, ty=-1.0, theta=math.radians(30))
moved = apply_rigid(room, g)
back = apply_rigid(moved, g.inverse())
print(f"after rotate+translate and back: area drift {abs(back.area - room.area):.2e}")

# A narrow corridor is useless as activity space.  Opening the shape (inward
# then outward offset) removes anything thinner than twice epsilon.
corridor = Region.rectangle(6, 1.9, 7.5, 2.1)
cluttered = union_all([room, corridor])
safe = simplify_region(cluttered, eps=0.3)
print(f"corridor shape {cluttered.area:.2f} -> safe activity area {safe.area:.2f}")

# Inward offsets shrink; past the inradius nothing remains.
print(f"offset -0.5: {offset(room, -0.5).area:.2f}; "
      f"offset -2.5: empty={offset(room, -2.5).is_empty}")

# Minimum-area bounding rectangle is oriented (rotating calipers on the hull).
diamond = apply_rigid(Region.rectangle(-1, -1, 1, 1), RigidTransform2D(0, 0, math.radians(45)))
p = min_area_bounding_rect(diamond)
print(f"diamond min-area rect: {p.sx:.2f} x {p.sy:.2f} at "
      f"{math.degrees(p.transform.theta):.0f} deg (axis-aligned box would be "
      f"{diamond.bounds[2] - diamond.bounds[0]:.2f} square)")
print(f"rect region area: {rect_region(p).area:.2f}")

# Largest inscribed activity shape: scaled/rotated template inside a region.
ell = union_all([Region.rectangle(0, 0, 4, 2), Region.rectangle(0, 0, 2, 4)])
placement = largest_inscribed_shape(ActivityTemplate.square(), ell, uniform_scale=True)
print(f"largest square inside the L-shape: side {placement.sx:.2f} m at "
      f"({placement.transform.tx:.2f}, {placement.transform.ty:.2f})")

circle = ActivityTemplate.circle(segments=64)
placement = largest_inscribed_shape(circle, Region.rectangle(0, 0, 3, 2))
got = placement.apply(circle.shape)
print(f"largest circle inside a 3x2 room: area {got.area:.3f} "
      f"(disc of diameter 2 would be {math.pi:.3f})")
