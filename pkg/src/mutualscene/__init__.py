"""Mutual functional-space alignment and virtual scene synthesis.

Given several semantically labeled room layouts, this package finds rigid
alignments that maximize the overlap of walkable/sittable/workable space,
post-processes those mutual regions into safe activity areas, and synthesizes
a shared virtual scene whose furniture corresponds to physical objects in the
input rooms.
"""

from .align import (
    AlignmentConfig,
    MutualResult,
    ObjectiveSpec,
    ParetoSolution,
    brute_force_align,
    evaluate_mutual,
    mutual_function_pose,
    optimize_alignment,
)
from .geometry import (
    ActivityTemplate,
    GeometryError,
    Region,
    RigidTransform2D,
    ScaledPlacement,
    apply_rigid,
    area,
    boolean,
    distance,
    largest_inscribed_shape,
    min_area_bounding_rect,
    offset,
    rect_region,
    simplify_region,
    union_all,
    unit_square,
)
from .scene import (
    FunctionClass,
    FunctionRegion,
    OrientedBox,
    Room,
    SceneGraphSet,
    SceneObject,
    build_scene_graphs,
    extract_function_regions,
    extract_walkable,
    transform_room,
)
from .synth import (
    PlacedObject,
    PlacementCandidate,
    PriorScorer,
    SynthConfig,
    SyntheticScene,
    assign_room_function,
    augment_scene,
    collect_non_colliding,
    conditional_rerank,
    init_floor,
    initialize_scene,
    score_placement,
    train_prior_scorer,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
