import json
import math

import pytest

from mutualscene.cli import EXIT_INFEASIBLE, EXIT_IO, EXIT_OK, main
from mutualscene.geometry import Region, area
from mutualscene.sceneio import (
    SceneFileError,
    load_result,
    load_scene,
    read_json,
    save_scene,
    write_json,
)


def scene_dict(rid="bedroom-1", objects=None):
    return {
        "schema_version": 1,
        "room": {"id": rid, "boundary": [[0, 0], [5, 0], [5, 4], [0, 4]],
                 "room_function": "bedroom"},
        "objects": objects if objects is not None else [
            {"id": "bed", "category": "bed",
             "obb": {"cx": 1.2, "cy": 1.0, "hx": 0.9, "hy": 1.0, "yaw": 0.0},
             "pose": [0.0, 1.0], "height_range": [0.0, 0.55]},
            {"id": "desk", "category": "desk",
             "obb": {"cx": 4.2, "cy": 3.2, "hx": 0.6, "hy": 0.4, "yaw": 90.0},
             "pose": [-1.0, 0.0], "height_range": [0.0, 0.75]},
        ],
    }


def write_scene(tmp_path, name="a.json", **kw):
    path = tmp_path / name
    path.write_text(json.dumps(scene_dict(rid=name.split(".")[0], **kw)))
    return str(path)


# ---------------------------------------------------------------------------
# scene files
# ---------------------------------------------------------------------------

def test_load_valid_scene(tmp_path):
    room = load_scene(write_scene(tmp_path))
    assert room.id == "a"
    assert len(room.objects) == 2
    assert room.objects[0].footprint.yaw == 0.0
    assert room.objects[1].footprint.yaw == pytest.approx(math.pi / 2)
    assert area(room.boundary) == pytest.approx(20.0)


def test_roundtrip_byte_stable(tmp_path):
    src = write_scene(tmp_path)
    room = load_scene(src)
    out1 = tmp_path / "save1.json"
    out2 = tmp_path / "save2.json"
    save_scene(room, str(out1))
    save_scene(load_scene(str(out1)), str(out2))
    assert out1.read_bytes() == out2.read_bytes()


def test_negative_extent_names_object(tmp_path):
    objects = [{"id": "badbed", "category": "bed",
                "obb": {"cx": 1, "cy": 1, "hx": -0.5, "hy": 1, "yaw": 0},
                "pose": [0, 1], "height_range": [0, 1]}]
    path = write_scene(tmp_path, "bad.json", objects=objects)
    with pytest.raises(SceneFileError, match="badbed"):
        load_scene(path)


def test_non_unit_pose_rejected(tmp_path):
    objects = [{"id": "chair1", "category": "chair",
                "obb": {"cx": 1, "cy": 1, "hx": 0.3, "hy": 0.3, "yaw": 0},
                "pose": [1.0, 1.0], "height_range": [0, 1]}]
    path = write_scene(tmp_path, "pose.json", objects=objects)
    with pytest.raises(SceneFileError, match="chair1.*pose|pose.*chair1"):
        load_scene(path)


def test_unknown_category_warns_but_loads(tmp_path, caplog):
    objects = [{"id": "orb1", "category": "orb",
                "obb": {"cx": 1, "cy": 1, "hx": 0.3, "hy": 0.3, "yaw": 0},
                "pose": [0, 1], "height_range": [0, 1]}]
    path = write_scene(tmp_path, "orb.json", objects=objects)
    with caplog.at_level("WARNING", logger="mutualscene"):
        room = load_scene(path)
    assert "orb" in caplog.text
    assert room.objects[0].functions == frozenset()
    from mutualscene.scene import extract_walkable
    assert area(extract_walkable(room).region) == pytest.approx(20.0 - 0.36)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema_version": 1,\n  "room": }\n')
    with pytest.raises(SceneFileError, match="line 2"):
        load_scene(str(path))


def test_wrong_schema_version(tmp_path):
    data = scene_dict()
    data["schema_version"] = 99
    path = tmp_path / "v99.json"
    path.write_text(json.dumps(data))
    with pytest.raises(SceneFileError, match="schema_version"):
        load_scene(str(path))


def test_write_json_atomic_no_partials(tmp_path):
    target = tmp_path / "out.json"
    write_json({"x": 1}, str(target))
    assert [p.name for p in tmp_path.iterdir()] == ["out.json"]


# ---------------------------------------------------------------------------
# CLI: extract / align / simplify / inscribe / synth / oracle / render
# ---------------------------------------------------------------------------

def two_scenes(tmp_path):
    a = write_scene(tmp_path, "roomA.json")
    b = write_scene(tmp_path, "roomB.json")
    return a, b


def run(argv):
    return main(argv)


def test_cli_extract(tmp_path, capsys):
    a, _ = two_scenes(tmp_path)
    out = tmp_path / "ex.json"
    svg = tmp_path / "ex.svg"
    assert run(["extract", a, "-o", str(out), "--svg", str(svg)]) == EXIT_OK
    data = read_json(str(out))
    assert data["kind"] == "extraction"
    assert data["walkable"]["area"] > 0
    assert data["sittable"] and data["workable"]
    assert svg.read_text().startswith("<svg")


def align_args(a, b, out, fast=True, extra=()):
    args = ["align", a, b, "-o", str(out)]
    if fast:
        args += ["--pop", "20", "--gens", "10"]
    return args + list(extra)


def test_cli_align_identical_rooms(tmp_path, capsys):
    a, b = two_scenes(tmp_path)
    out = tmp_path / "res.json"
    assert run(align_args(a, b, out)) == EXIT_OK
    result, rooms, cfg, spec, data = load_result(str(out))
    assert result.feasible and len(result.solutions) == 1
    from mutualscene.scene import FunctionClass, extract_walkable
    single = area(extract_walkable(rooms[0]).region)
    assert result.solutions[0].objective_values[FunctionClass.WALKABLE] >= 0.9 * single


def test_cli_align_deterministic_bytes(tmp_path):
    a, b = two_scenes(tmp_path)
    o1, o2 = tmp_path / "r1.json", tmp_path / "r2.json"
    assert run(align_args(a, b, o1, extra=["--seed", "9"])) == EXIT_OK
    assert run(align_args(a, b, o2, extra=["--seed", "9"])) == EXIT_OK
    assert o1.read_bytes() == o2.read_bytes()


def test_cli_align_infeasible_exit_code(tmp_path, capsys):
    a, b = two_scenes(tmp_path)
    out = tmp_path / "bad.json"
    code = run(align_args(a, b, out, extra=["--constraint", "sittable>=50"]))
    assert code == EXIT_INFEASIBLE
    result, *_ = load_result(str(out))
    assert not result.feasible
    assert "short by" in capsys.readouterr().out


def test_cli_simplify_and_inscribe(tmp_path):
    a, b = two_scenes(tmp_path)
    res = tmp_path / "res.json"
    assert run(align_args(a, b, res)) == EXIT_OK
    assert run(["simplify", str(res), "--eps", "0.3"]) == EXIT_OK
    data = read_json(str(res))
    assert data["simplify_eps"] == 0.3

    template = tmp_path / "square.json"
    template.write_text(json.dumps({
        "schema_version": 1, "kind": "activity_template",
        "shape": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    assert run(["inscribe", str(res), "--template", str(template)]) == EXIT_OK
    data = read_json(str(res))
    assert data["inscribed"]["area"] > 0.5
    walk = Region([[(x, y) for x, y in ring]
                   for ring in data["solutions"][0]["mutual_regions"]["walkable"]])
    inside = Region([[(x, y) for x, y in ring] for ring in data["inscribed"]["rings"]])
    from mutualscene.geometry import boolean
    assert area(boolean("difference", inside, walk)) < 1e-3


def test_cli_synth_deterministic(tmp_path):
    a, b = two_scenes(tmp_path)
    res = tmp_path / "res.json"
    assert run(align_args(a, b, res)) == EXIT_OK
    s1, s2 = tmp_path / "s1.json", tmp_path / "s2.json"
    svg1, svg2 = tmp_path / "s1.svg", tmp_path / "s2.svg"
    base = ["synth", str(res), "--solution", "0", "--seed", "42",
            "--grid", "0.4", "--max-objects", "3"]
    assert run(base + ["-o", str(s1), "--svg", str(svg1)]) == EXIT_OK
    assert run(base + ["-o", str(s2), "--svg", str(svg2)]) == EXIT_OK
    assert s1.read_bytes() == s2.read_bytes()
    assert svg1.read_bytes() == svg2.read_bytes()
    data = read_json(str(s1))
    assert data["synthetic_scene"]["objects"]
    assert data["chosen"] == 0


def test_cli_oracle(tmp_path):
    a, b = two_scenes(tmp_path)
    out = tmp_path / "oracle.json"
    assert run(["oracle", a, b, "-o", str(out), "--rstep", "30"]) == EXIT_OK
    data = read_json(str(out))
    assert data["kind"] == "oracle_result"
    assert data["area"] > 0


def test_cli_render_scene_and_result_deterministic(tmp_path):
    a, b = two_scenes(tmp_path)
    svg1, svg2 = tmp_path / "a1.svg", tmp_path / "a2.svg"
    assert run(["render", a, "-o", str(svg1)]) == EXIT_OK
    assert run(["render", a, "-o", str(svg2)]) == EXIT_OK
    assert svg1.read_bytes() == svg2.read_bytes()
    res = tmp_path / "res.json"
    assert run(align_args(a, b, res)) == EXIT_OK
    out = tmp_path / "res.svg"
    assert run(["render", str(res), "-o", str(out)]) == EXIT_OK
    assert out.read_text().startswith("<svg")


def test_cli_train_prior(tmp_path):
    a, b = two_scenes(tmp_path)
    out = tmp_path / "prior.json"
    assert run(["train-prior", a, b, "-o", str(out)]) == EXIT_OK
    data = read_json(str(out))
    assert data["kind"] == "prior"
    assert "bed" in data["categories"]


def test_cli_io_error_exit_code(tmp_path, capsys):
    assert run(["extract", str(tmp_path / "missing.json")]) == EXIT_IO
    assert "error" in capsys.readouterr().err


def test_cli_empty_room_renders(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({
        "schema_version": 1,
        "room": {"id": "empty", "boundary": [[0, 0], [3, 0], [3, 3], [0, 3]],
                 "room_function": "generic"},
        "objects": []}))
    out = tmp_path / "empty.svg"
    assert run(["render", str(path), "-o", str(out)]) == EXIT_OK
    text = out.read_text()
    assert text.count("<path") >= 1


def test_result_regenerates_from_embedded_config(tmp_path):
    a, b = two_scenes(tmp_path)
    out = tmp_path / "res.json"
    assert run(align_args(a, b, out, extra=["--seed", "3"])) == EXIT_OK
    from mutualscene.align import optimize_alignment
    from mutualscene.sceneio import result_to_dict
    result, rooms, cfg, spec, data = load_result(str(out))
    again = optimize_alignment(rooms, spec, cfg)
    inputs = [(inp["path"], inp["sha256"], room)
              for inp, room in zip(data["inputs"], rooms)]
    regenerated = result_to_dict(again, inputs, cfg, spec)
    assert json.dumps(regenerated, sort_keys=True) == json.dumps(
        {k: v for k, v in data.items()}, sort_keys=True)


def test_angle_converters_precision():
    import math
    for deg in (0.0, 15.0, 90.0, 123.456789, 359.999999):
        rad = math.radians(deg)
        assert abs(math.degrees(rad) - deg) < 1e-12 * max(1.0, deg)


def test_cli_multi_objective_front_and_auto_first(tmp_path):
    a, b = two_scenes(tmp_path)
    res = tmp_path / "front.json"
    code = run(["align", a, b, "--objective", "walkable", "--objective", "sittable:2",
                "--pop", "24", "--gens", "12", "--seed", "1", "-o", str(res)])
    assert code == EXIT_OK
    data = read_json(str(res))
    assert data["objective"]["maximize"] == {"walkable": 1.0, "sittable": 2.0}
    assert len(data["solutions"]) >= 1
    out = tmp_path / "front_synth.json"
    assert run(["synth", str(res), "--auto-first", "--seed", "2", "--grid", "0.4",
                "--max-objects", "2", "-o", str(out)]) == EXIT_OK
    assert read_json(str(out))["chosen"] == 0


def test_cli_synth_with_prior_file(tmp_path):
    a, b = two_scenes(tmp_path)
    res = tmp_path / "res.json"
    prior = tmp_path / "prior.json"
    assert run(align_args(a, b, res)) == EXIT_OK
    assert run(["train-prior", a, b, "-o", str(prior)]) == EXIT_OK
    o1, o2 = tmp_path / "p1.json", tmp_path / "p2.json"
    base = ["synth", str(res), "--solution", "0", "--seed", "4", "--grid", "0.4",
            "--max-objects", "2", "--prior", str(prior)]
    assert run(base + ["-o", str(o1)]) == EXIT_OK
    assert run(base + ["-o", str(o2)]) == EXIT_OK
    assert o1.read_bytes() == o2.read_bytes()
    assert read_json(str(o1))["synth_config"]["prior"] == str(prior)


def test_cli_three_room_pipeline(tmp_path):
    def scene(rid, w, h, objects):
        path = tmp_path / f"{rid}.json"
        path.write_text(json.dumps({
            "schema_version": 1,
            "room": {"id": rid, "boundary": [[0, 0], [w, 0], [w, h], [0, h]],
                     "room_function": "office"},
            "objects": objects}))
        return str(path)

    def furniture(oid, cat, cx, cy, hx, hy):
        return {"id": oid, "category": cat,
                "obb": {"cx": cx, "cy": cy, "hx": hx, "hy": hy, "yaw": 0.0},
                "pose": [0.0, 1.0], "height_range": [0.0, 0.8]}

    a = scene("a", 5.0, 4.0, [furniture("a-desk", "desk", 4.4, 2.0, 0.5, 0.8),
                              furniture("a-chair", "chair", 3.5, 2.0, 0.25, 0.25)])
    b = scene("b", 4.5, 4.5, [furniture("b-desk", "desk", 2.2, 4.0, 0.8, 0.4)])
    c = scene("c", 4.0, 5.0, [furniture("c-table", "table", 2.0, 1.0, 0.6, 0.4),
                              furniture("c-stool", "stool", 1.0, 1.0, 0.2, 0.2)])
    res = tmp_path / "three.json"
    code = run(["align", a, b, c, "--objective", "walkable",
                "--constraint", "workable>=0.2", "--pop", "40", "--gens", "25",
                "--seed", "13", "-o", str(res), "--svg", str(tmp_path / "three.svg")])
    assert code == EXIT_OK
    result, rooms, cfg, spec, data = load_result(str(res))
    assert len(rooms) == 3
    assert all(len(s.transforms) == 3 for s in result.solutions)
    from mutualscene.scene import FunctionClass
    assert all(s.objective_values[FunctionClass.WORKABLE] >= 0.2 - 1e-9
               for s in result.solutions)
    assert run(["simplify", str(res), "--eps", "0.3"]) == EXIT_OK
    assert run(["synth", str(res), "--auto-first", "--seed", "1", "--grid", "0.4",
                "--max-objects", "3", "--svg", str(tmp_path / "three_scene.svg")]) == EXIT_OK
    final = read_json(str(res))
    assert final["synthetic_scene"]["room_function"] == "office"
    assert (tmp_path / "three_scene.svg").exists()
