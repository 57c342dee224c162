"""The same workflow driven entirely through the command-line interface:
scene files in, result/SVG files out.

Run:  python3 demos/demo_pipeline.py       (works in demos/output/pipeline)
"""

import json
import os

from mutualscene.cli import main

OUT = os.path.join(os.path.dirname(__file__), "output", "pipeline")
os.makedirs(OUT, exist_ok=True)


def scene_file(name, rid, function, boundary, objects):
    path = os.path.join(OUT, name)
    with open(path, "w") as fh:
        json.dump({"schema_version": 1,
                   "room": {"id": rid, "boundary": boundary, "room_function": function},
                   "objects": objects}, fh, indent=2)
    return path


a = scene_file("room_a.json", "studio", "living",
               [[0, 0], [5, 0], [5, 3.2], [2.6, 3.2], [2.6, 4.4], [0, 4.4]],
               [{"id": "sofa", "category": "sofa",
                 "obb": {"cx": 1.0, "cy": 3.8, "hx": 0.9, "hy": 0.45, "yaw": 0.0},
                 "pose": [1.0, 0.0], "height_range": [0.0, 0.8]},
                {"id": "table", "category": "table",
                 "obb": {"cx": 3.6, "cy": 1.4, "hx": 0.55, "hy": 0.35, "yaw": 0.0},
                 "pose": [0.0, 1.0], "height_range": [0.0, 0.45]}])

b = scene_file("room_b.json", "den", "living",
               [[0, 0], [4.4, 0], [4.4, 3.8], [0, 3.8]],
               [{"id": "couch", "category": "couch",
                 "obb": {"cx": 3.5, "cy": 1.9, "hx": 0.45, "hy": 0.95, "yaw": 0.0},
                 "pose": [-1.0, 0.0], "height_range": [0.0, 0.8]},
                {"id": "bookshelf", "category": "shelf",
                 "obb": {"cx": 0.3, "cy": 1.0, "hx": 0.25, "hy": 0.8, "yaw": 0.0},
                 "pose": [1.0, 0.0], "height_range": [0.0, 1.9]}])

template = os.path.join(OUT, "square_template.json")
with open(template, "w") as fh:
    json.dump({"schema_version": 1, "kind": "activity_template",
               "shape": [[0, 0], [1, 0], [1, 1], [0, 1]]}, fh)

result = os.path.join(OUT, "alignment.json")
steps = [
    ["extract", a, "-o", os.path.join(OUT, "room_a.extraction.json"),
     "--svg", os.path.join(OUT, "room_a.svg")],
    ["align", a, b, "--objective", "walkable", "--constraint", "sittable>=0.5",
     "--pop", "60", "--gens", "40", "--seed", "5",
     "-o", result, "--svg", os.path.join(OUT, "alignment.svg")],
    ["simplify", result, "--eps", "0.25"],
    ["inscribe", result, "--template", template],
    ["synth", result, "--solution", "0", "--seed", "5", "--grid", "0.2",
     "--max-objects", "5", "--svg", os.path.join(OUT, "synthetic.svg")],
    ["oracle", a, b, "--rstep", "30", "--trange", "1.0",
     "-o", os.path.join(OUT, "oracle.json")],
    ["train-prior", a, b, "-o", os.path.join(OUT, "prior.json")],
    ["render", result, "-o", os.path.join(OUT, "result.svg")],
]
for argv in steps:
    print(f"\n$ mutualscene {' '.join(argv)}")
    code = main(argv)
    assert code == 0, f"verb failed with exit code {code}"

print(f"\nall artifacts in {OUT}")
