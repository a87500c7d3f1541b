"""Command-line front end: solve single instances, generate testcases,
run the routing flow, and batch-benchmark directories.

Exit codes: 0 success/legal, 2 input error, 3 infeasible or illegal result.
Wall-clock figures are printed to stdout (or --timing-out) only; files
written by any subcommand are bit-reproducible for fixed seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .bench_io import (GenSpec, Instance, ParseError, Unsatisfiable,
                       ValidationError, gen_random, parse_bench, render_svg,
                       write_bench)
from .geometry import Point, Rect
from .groute import CostWeights, Design, GrouteParams, route_flow
from .oarsmt import InfeasibleEdge, OarsmtParams, PinInsideObstacle, \
    oarsmt_generate
from .oracle import TooLarge, check_legality, optimal_oarsmt

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _load_instance(path: str) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".json"):
        return Instance.from_json(text)
    return parse_bench(text, name=Path(path).stem)


def _bbox_filter(inst: Instance) -> list[Rect]:
    xs = [p.x for p in inst.pins]
    ys = [p.y for p in inst.pins]
    bx0, bx1, by0, by1 = min(xs), max(xs), min(ys), max(ys)
    return [r for r in inst.obstacles
            if r.x0 < bx1 and r.x1 > bx0 and r.y0 < by1 and r.y1 > by0]


def _tree_json(tree, legal: bool) -> dict:
    return {"wirelength": tree.wirelength(), "legal": legal,
            "nodes": [[p.x, p.y, role] for p, role in
                      zip(tree.nodes, tree.roles)],
            "edges": [list(e) for e in tree.edges]}


def cmd_solve(args) -> int:
    try:
        inst = _load_instance(args.instance)
    except (ParseError, ValidationError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    obstacles = _bbox_filter(inst) if args.bbox_only else inst.obstacles
    params = OarsmtParams(k_l=args.kl, k_m=args.km, seed=args.seed,
                          enhanced_rules=not args.no_rules)
    t0 = time.perf_counter()
    try:
        tree = oarsmt_generate(inst.pins, obstacles, params)
    except (PinInsideObstacle, InfeasibleEdge) as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    runtime_ms = (time.perf_counter() - t0) * 1000.0
    rep = check_legality(tree.segments(), inst.obstacles, pins=inst.pins)
    legal = rep.ok
    print(json.dumps({"wirelength": tree.wirelength(),
                      "runtime_ms": round(runtime_ms, 3), "legal": legal}))
    if args.json:
        Path(args.json).write_text(
            json.dumps(_tree_json(tree, legal), sort_keys=True, indent=1) + "\n")
    if args.svg:
        render_svg(inst, tree=tree, path=args.svg)
    return EXIT_OK if legal else EXIT_INFEASIBLE


def cmd_gen(args) -> int:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    bounds = Rect(0, 0, args.bounds[0], args.bounds[1])
    for k in range(args.count):
        spec = GenSpec(args.pins, args.obstacles, args.density, bounds,
                       seed=args.seed + k)
        try:
            inst = gen_random(spec)
        except Unsatisfiable as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_INPUT
        (outdir / f"{inst.name}.txt").write_text(write_bench(inst))
    print(f"wrote {args.count} instances to {outdir}")
    return EXIT_OK


def cmd_route(args) -> int:
    try:
        design = Design.from_json(Path(args.design).read_text())
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        weights = CostWeights(alpha_ow=args.alpha_ow, alpha_ov=args.alpha_ov,
                              via_cost=args.via_cost)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    params = GrouteParams(stride=args.stride, guided_width=args.guided_width,
                          rrr_iters=args.iters,
                          use_guided=not args.no_guided,
                          use_obstacle_aware=not args.no_obstacle_aware,
                          congestion_patterns=args.congestion_patterns,
                          seed=args.seed)
    t0 = time.perf_counter()
    solution, metrics, timings = route_flow(design, weights, params)
    total_ms = (time.perf_counter() - t0) * 1000.0
    timings["total_ms"] = total_ms
    print(json.dumps({"wl": metrics["wl"], "vias": metrics["vias"],
                      "ow": metrics["ow"], "ov": metrics["ov"],
                      "total_cost": metrics["total_cost"],
                      "open_nets": metrics["open_nets"],
                      "runtime_ms": {k: round(v, 3) for k, v in timings.items()}}))
    if args.metrics_out:
        Path(args.metrics_out).write_text(
            json.dumps(metrics, sort_keys=True, indent=1) + "\n")
    if args.timing_out:
        Path(args.timing_out).write_text(
            json.dumps({k: round(v, 3) for k, v in timings.items()},
                       sort_keys=True, indent=1) + "\n")
    if args.routes_out:
        dump = {name: {"pins": [list(p) for p in r.pins],
                       "wires": sorted([list(u), list(v)] for (u, v) in r.wire_edges),
                       "vias": sorted([list(u), list(v)] for (u, v) in r.via_edges)}
                for name, r in sorted(solution.nets.items())}
        Path(args.routes_out).write_text(
            json.dumps(dump, sort_keys=True, indent=1) + "\n")
    if args.svg:
        inst = Instance("design", Rect(0, 0, design.grid.nx - 1,
                                       design.grid.ny - 1),
                        [], [Rect(r.x0, r.y0, r.x1 - 1, r.y1 - 1)
                             for r in design.obstacles])
        render_svg(inst, route=solution, path=args.svg)
    if metrics["open_nets"]:
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_bench(args) -> int:
    files = sorted(Path(args.dir).glob("*.txt")) + \
        sorted(Path(args.dir).glob("*.json"))
    rows = []
    any_illegal = False
    for f in files:
        try:
            inst = _load_instance(str(f))
        except (ParseError, ValidationError, ValueError) as e:
            print(f"{f.name}: skipped ({e})", file=sys.stderr)
            any_illegal = True
            continue
        t0 = time.perf_counter()
        try:
            tree = oarsmt_generate(inst.pins, inst.obstacles,
                                   OarsmtParams(seed=args.seed))
        except (PinInsideObstacle, InfeasibleEdge) as e:
            print(f"{f.name}: infeasible ({e})", file=sys.stderr)
            any_illegal = True
            continue
        runtime_ms = (time.perf_counter() - t0) * 1000.0
        legal = check_legality(tree.segments(), inst.obstacles,
                               pins=inst.pins).ok
        any_illegal |= not legal
        ratio = ""
        if len(inst.pins) <= args.oracle_max_pins:
            try:
                opt, _ = optimal_oarsmt(inst.pins, inst.obstacles, inst.bounds)
                if opt > 0:
                    ratio = f"{tree.wirelength() / opt:.4f}"
            except TooLarge:
                pass
        rows.append({"case": f.stem, "pins": len(inst.pins),
                     "obstacles": len(inst.obstacles),
                     "wirelength": tree.wirelength(),
                     "runtime_ms": f"{runtime_ms:.3f}",
                     "legal": str(legal).lower(), "oracle_ratio": ratio})
    fields = ["case", "pins", "obstacles", "wirelength", "runtime_ms",
              "legal", "oracle_ratio"]
    out = sys.stdout if args.out == "-" else open(args.out, "w", newline="")
    try:
        w = csv.DictWriter(out, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_INFEASIBLE if any_illegal else EXIT_OK


def cmd_oracle(args) -> int:
    try:
        inst = _load_instance(args.instance)
    except (ParseError, ValidationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        opt, segs = optimal_oarsmt(inst.pins, inst.obstacles, inst.bounds)
    except TooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(json.dumps({"optimal_wirelength": opt,
                      "segments": [[list(s.a), list(s.b)] for s in segs]}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="oaroute")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", help="generate an OARSMT for one instance")
    s.add_argument("instance")
    s.add_argument("--kl", type=int, default=5)
    s.add_argument("--km", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-rules", action="store_true")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--all-obstacles", action="store_true", default=True)
    g.add_argument("--bbox-only", action="store_true")
    s.add_argument("--svg")
    s.add_argument("--json")
    s.set_defaults(fn=cmd_solve)

    s = sub.add_parser("gen", help="write randomized canonical instances")
    s.add_argument("--pins", type=int, required=True)
    s.add_argument("--obstacles", type=int, required=True)
    s.add_argument("--density", type=float, required=True)
    s.add_argument("--bounds", type=int, nargs=2, default=(512, 512),
                   metavar=("W", "H"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=1)
    s.add_argument("--out", default=".")
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("route", help="run the global routing flow")
    s.add_argument("design")
    s.add_argument("--iters", type=int, default=10)
    s.add_argument("--alpha-ow", type=float, default=500.0)
    s.add_argument("--alpha-ov", type=float, default=1e7)
    s.add_argument("--via-cost", type=float, default=2.0)
    s.add_argument("--stride", type=int, default=4)
    s.add_argument("--guided-width", type=int, default=1)
    s.add_argument("--no-guided", action="store_true")
    s.add_argument("--no-obstacle-aware", action="store_true")
    s.add_argument("--congestion-patterns", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--metrics-out")
    s.add_argument("--timing-out")
    s.add_argument("--routes-out")
    s.add_argument("--svg")
    s.set_defaults(fn=cmd_route)

    s = sub.add_parser("bench", help="batch-solve a directory of instances")
    s.add_argument("dir")
    s.add_argument("--oracle-max-pins", type=int, default=8)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", default="-")
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("oracle", help="exact optimum for a small instance")
    s.add_argument("instance")
    s.set_defaults(fn=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
