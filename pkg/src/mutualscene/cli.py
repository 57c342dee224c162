"""Command-line pipeline: semantic extraction, mutual alignment, geometry
post-processing, and virtual scene synthesis.

Verbs chain through files: ``align`` writes a result file embedding the input
scenes, config, and Pareto solutions; ``simplify``/``inscribe``/``synth``
transform that file further.  Exit codes: 0 success, 1 input/output error,
2 usage error, 3 infeasible constraints.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys

from . import sceneio, synth
from .align import AlignmentConfig, ObjectiveSpec, brute_force_align, optimize_alignment
from .geometry import GeometryError, largest_inscribed_shape, simplify_region
from .scene import (
    FunctionClass,
    build_scene_graphs,
    extract_function_regions,
    extract_walkable,
)
from .sceneio import SceneFileError, write_json

EXIT_OK = 0
EXIT_IO = 1
EXIT_INFEASIBLE = 3

log = logging.getLogger("mutualscene")


def _setup_logging():
    level = os.environ.get("MSS_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _parse_function_class(name: str) -> FunctionClass:
    try:
        return FunctionClass(name.strip().lower())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown function class {name!r} (walkable/sittable/workable)")


def _parse_objective(text: str):
    name, _, weight = text.partition(":")
    return _parse_function_class(name), float(weight) if weight else 1.0


def _parse_constraint(text: str):
    if ">=" not in text:
        raise argparse.ArgumentTypeError(
            f"constraint {text!r} must look like CLASS>=AREA")
    name, _, amount = text.partition(">=")
    return _parse_function_class(name), float(amount)


def _config_from_args(args) -> AlignmentConfig:
    return AlignmentConfig(
        population=args.pop, generations=args.gens,
        translation_step=args.tstep, rotation_step=math.radians(args.rstep),
        seed=args.seed, translation_bounds=args.bounds)


def _load_scenes(paths):
    out = []
    for path in paths:
        out.append((path, sceneio.file_digest(path), sceneio.load_scene(path)))
    return out


def _default_out(path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(path)
    return f"{stem}.{suffix}"


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def cmd_extract(args) -> int:
    room = sceneio.load_scene(args.scene)
    walkable = extract_walkable(room)
    graphs = build_scene_graphs(room)
    data = {
        "schema_version": sceneio.SCHEMA_VERSION,
        "kind": "extraction",
        "room_id": room.id,
        "room_function": room.room_function,
        "walkable": {"area": walkable.region.area,
                     "rings": sceneio.region_to_rings(walkable.region)},
        "scene_graphs": {name: [list(e) for e in edges]
                         for name, edges in sorted(graphs.graphs.items())},
    }
    for fclass in (FunctionClass.SITTABLE, FunctionClass.WORKABLE):
        data[fclass.value] = [{
            "source_object_ids": list(fr.source_object_ids),
            "pose": list(fr.pose) if fr.pose else None,
            "area": fr.region.area,
            "rings": sceneio.region_to_rings(fr.region),
        } for fr in extract_function_regions(room, fclass)]
    out = args.output or _default_out(args.scene, "extraction.json")
    write_json(data, out)
    if args.svg:
        sceneio.render_svg(room, args.svg)
    print(f"extract: {room.id}: walkable {walkable.region.area:.3f} m2 -> {out}")
    return EXIT_OK


def cmd_align(args) -> int:
    inputs = _load_scenes(args.scenes)
    rooms = [room for _, _, room in inputs]
    maximize = dict(args.objective or [(FunctionClass.WALKABLE, 1.0)])
    spec = ObjectiveSpec(maximize=maximize, constraints=dict(args.constraint or []))
    cfg = _config_from_args(args)
    result = optimize_alignment(rooms, spec, cfg)
    out = args.output or "alignment.json"
    write_json(sceneio.result_to_dict(result, inputs, cfg, spec), out)
    if args.svg:
        sceneio.render_svg(result, args.svg, rooms=rooms)
    if not result.feasible:
        worst = ", ".join(f"{c.value} short by {v:.3f} m2"
                          for c, v in sorted(result.best_violation.items(),
                                             key=lambda kv: kv[0].value) if v > 0)
        print(f"align: infeasible constraints ({worst}) -> {out}")
        return EXIT_INFEASIBLE
    best = result.solutions[0]
    summary = ", ".join(f"{c.value}={v:.3f}" for c, v in sorted(
        best.objective_values.items(), key=lambda kv: kv[0].value))
    print(f"align: {len(result.solutions)} solution(s); best {summary} -> {out}")
    return EXIT_OK


def cmd_simplify(args) -> int:
    result, rooms, cfg, spec, data = sceneio.load_result(args.result)
    for sol_dict, sol in zip(data["solutions"], result.solutions):
        for fclass, region in sorted(sol.mutual_regions.items(), key=lambda kv: kv[0].value):
            simplified = simplify_region(region, args.eps, join=args.join)
            sol_dict["mutual_regions"][fclass.value] = sceneio.region_to_rings(simplified)
            sol_dict["objective_values"][fclass.value] = simplified.area
    data["simplify_eps"] = args.eps
    out = args.output or args.result
    write_json(data, out)
    print(f"simplify: eps={args.eps} applied to {len(result.solutions)} solution(s) -> {out}")
    return EXIT_OK


def cmd_inscribe(args) -> int:
    result, rooms, cfg, spec, data = sceneio.load_result(args.result)
    idx = args.solution if args.solution is not None else (result.chosen_index or 0)
    if not 0 <= idx < len(result.solutions):
        raise SceneFileError(f"{args.result}: no solution #{idx}")
    sol = result.solutions[idx]
    region = sol.mutual_regions.get(FunctionClass.WALKABLE)
    if region is None or region.is_empty:
        raise SceneFileError(f"{args.result}: solution #{idx} has no mutual walkable region")
    template = sceneio.load_template(args.template)
    placement = largest_inscribed_shape(
        template, region, rotation_step=math.radians(args.rstep),
        translation_step=args.tstep, uniform_scale=args.uniform_scale)
    shape = placement.apply(template.shape)
    data["inscribed"] = {
        "solution": idx,
        "template_path": args.template,
        "uniform_scale": args.uniform_scale,
        "placement": sceneio.placement_to_dict(placement),
        "area": shape.area,
        "rings": sceneio.region_to_rings(shape),
    }
    out = args.output or args.result
    write_json(data, out)
    print(f"inscribe: area {shape.area:.3f} m2 inside solution #{idx} -> {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    result, rooms, cfg, spec, data = sceneio.load_result(args.result)
    if not result.feasible:
        print("synth: result is infeasible; nothing to synthesize", file=sys.stderr)
        return EXIT_INFEASIBLE
    if args.solution is not None:
        idx = args.solution
    elif args.auto_first or len(result.solutions) == 1:
        idx = 0
    else:
        print(f"synth: {len(result.solutions)} solutions; pick one with "
              f"--solution I or --auto-first", file=sys.stderr)
        return EXIT_IO
    if not 0 <= idx < len(result.solutions):
        raise SceneFileError(f"{args.result}: no solution #{idx}")
    sol = result.solutions[idx]
    scorer = sceneio.load_prior(args.prior) if args.prior else synth.train_prior_scorer(rooms)
    scene = synth.initialize_scene(rooms, list(sol.transforms), sol,
                                   room_function=args.room_function, seed=args.seed)
    scfg = synth.SynthConfig(grid_step=args.grid, top_n=args.n, stop_threshold=args.tau,
                             max_objects=args.max_objects, seed=args.seed)
    scene = synth.augment_scene(scene, rooms, list(sol.transforms), scorer, scfg)
    data["chosen"] = idx
    data["synth_config"] = {"grid_step": args.grid, "top_n": args.n, "tau": args.tau,
                            "max_objects": args.max_objects, "seed": args.seed,
                            "room_function": args.room_function, "prior": args.prior}
    data["synthetic_scene"] = sceneio.synthetic_scene_to_dict(scene)
    out = args.output or args.result
    write_json(data, out)
    if args.svg:
        sceneio.render_svg(scene, args.svg)
    n_synth = sum(1 for p in scene.objects if p.provenance.kind == synth.SYNTHESIZED)
    print(f"synth: {len(scene.objects)} objects ({n_synth} synthesized), "
          f"function {scene.room_function!r} -> {out}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    inputs = _load_scenes(args.scenes)
    rooms = [room for _, _, room in inputs]
    fclass = args.function_class
    from .scene import functional_region
    regions = [functional_region(r, fclass) for r in rooms]
    transforms, best = brute_force_align(
        regions, math.radians(args.rstep), args.tstep,
        translation_range=args.trange)
    data = {
        "schema_version": sceneio.SCHEMA_VERSION,
        "kind": "oracle_result",
        "function_class": fclass.value,
        "inputs": [{"path": p, "sha256": d} for p, d, _ in inputs],
        "grid": {"rotation_step": args.rstep, "translation_step": args.tstep,
                 "translation_range": args.trange},
        "transforms": [sceneio.transform_to_dict(g) for g in transforms],
        "area": best,
    }
    out = args.output or "oracle.json"
    write_json(data, out)
    print(f"oracle: best {fclass.value} overlap {best:.3f} m2 -> {out}")
    return EXIT_OK


def cmd_render(args) -> int:
    data = sceneio.read_json(args.artifact)
    kind = data.get("kind")
    out = args.output or _default_out(args.artifact, "svg")
    if kind == "alignment_result":
        if data.get("synthetic_scene"):
            scene = sceneio.synthetic_scene_from_dict(data["synthetic_scene"])
            sceneio.render_svg(scene, out)
        else:
            result, rooms, _, _, _ = sceneio.result_from_dict(data, source=args.artifact)
            sceneio.render_svg(result, out, rooms=rooms)
    elif "room" in data:
        sceneio.render_svg(sceneio.room_from_dict(data, source=args.artifact), out)
    else:
        raise SceneFileError(f"{args.artifact}: no renderable artifact found")
    print(f"render: -> {out}")
    return EXIT_OK


def cmd_train_prior(args) -> int:
    rooms = [room for _, _, room in _load_scenes(args.scenes)]
    try:
        scorer = synth.train_prior_scorer(rooms)
    except ValueError as exc:
        raise SceneFileError(str(exc))
    out = args.output or "prior.json"
    sceneio.save_prior(scorer, out)
    print(f"train-prior: {len(scorer.categories)} categories from "
          f"{len(rooms)} rooms -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutualscene",
        description="Mutual functional-space alignment and virtual scene synthesis.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("extract", help="emit function regions and scene graphs")
    p.add_argument("scene")
    p.add_argument("-o", "--output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("align", help="optimize mutual functional spaces")
    p.add_argument("scenes", nargs="+")
    p.add_argument("--objective", action="append", type=_parse_objective,
                   metavar="CLASS[:WEIGHT]")
    p.add_argument("--constraint", action="append", type=_parse_constraint,
                   metavar="CLASS>=AREA")
    p.add_argument("--pop", type=int, default=100)
    p.add_argument("--gens", type=int, default=80)
    p.add_argument("--tstep", type=float, default=0.1, help="translation step, m")
    p.add_argument("--rstep", type=float, default=15.0, help="rotation step, deg")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bounds", type=float, default=None, help="translation bounds, m")
    p.add_argument("-o", "--output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("simplify", help="double-offset mutual regions")
    p.add_argument("result")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--join", choices=("miter", "round"), default="miter")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("inscribe", help="fit the largest activity shape")
    p.add_argument("result")
    p.add_argument("--template", required=True)
    p.add_argument("--uniform-scale", action="store_true")
    p.add_argument("--solution", type=int, default=None)
    p.add_argument("--rstep", type=float, default=15.0)
    p.add_argument("--tstep", type=float, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_inscribe)

    p = sub.add_parser("synth", help="synthesize the mutual virtual scene")
    p.add_argument("result")
    p.add_argument("--room-function", default=None)
    p.add_argument("--n", type=int, default=10, help="re-rank pool size")
    p.add_argument("--tau", type=float, default=0.3, help="stop threshold")
    p.add_argument("--grid", type=float, default=0.1, help="sampling grid step, m")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-objects", type=int, default=20)
    p.add_argument("--solution", type=int, default=None)
    p.add_argument("--auto-first", action="store_true")
    p.add_argument("--prior", default=None)
    p.add_argument("-o", "--output")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("oracle", help="exhaustive-search alignment baseline")
    p.add_argument("scenes", nargs="+")
    p.add_argument("--class", dest="function_class", type=_parse_function_class,
                   default=FunctionClass.WALKABLE)
    p.add_argument("--rstep", type=float, default=15.0)
    p.add_argument("--tstep", type=float, default=0.1)
    p.add_argument("--trange", type=float, default=None, help="translation window, m")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("render", help="render a scene or result file to SVG")
    p.add_argument("artifact")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("train-prior", help="fit the placement prior from scenes")
    p.add_argument("scenes", nargs="+")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_train_prior)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SceneFileError, GeometryError, ValueError, OSError) as exc:
        print(f"mutualscene {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
