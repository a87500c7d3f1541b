"""Instance formats, randomized testcase generation, and SVG rendering.

Canonical text format (ASCII, LF endings, `#` comments):

    bounds <x_lo> <y_lo> <x_hi> <y_hi>
    pins <m>
    <x> <y>            (m lines)
    obstacles <n>
    <x_lo> <y_lo> <x_hi> <y_hi>   (n lines)

A best-effort secondary parser accepts the terminal/obstacle list layout
circulating with the published OARSMT benchmark files; unknown dialects
fail loudly.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import Point, Rect, rects_interior_overlap
from .obstacle_index import RangeIndex


class ParseError(ValueError):
    def __init__(self, line: int, msg: str):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class ValidationError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {msg}" if line else msg)
        self.line = line


class Unsatisfiable(RuntimeError):
    """The generator cannot meet the requested density/count."""


@dataclass
class Instance:
    name: str
    bounds: Rect
    pins: list[Point]
    obstacles: list[Rect]

    def validate(self, lines: Optional[dict] = None) -> None:
        lines = lines or {}
        bx0, by0, bx1, by1 = self.bounds
        seen = set()
        for k, p in enumerate(self.pins):
            if p in seen:
                raise ValidationError(f"duplicate pin {tuple(p)}",
                                      lines.get(("pin", k)))
            seen.add(p)
            if not (bx0 <= p.x <= bx1 and by0 <= p.y <= by1):
                raise ValidationError(f"pin {tuple(p)} outside bounds",
                                      lines.get(("pin", k)))
        for k, r in enumerate(self.obstacles):
            if r.x0 >= r.x1 or r.y0 >= r.y1:
                raise ValidationError(f"obstacle {tuple(r)} has no area",
                                      lines.get(("obs", k)))
            if not (bx0 <= r.x0 and r.x1 <= bx1 and by0 <= r.y0 and r.y1 <= by1):
                raise ValidationError(f"obstacle {tuple(r)} outside bounds",
                                      lines.get(("obs", k)))
        for k, r in enumerate(self.obstacles):
            for j in range(k):
                if rects_interior_overlap(self.obstacles[j], r):
                    raise ValidationError(
                        f"obstacles {j} and {k} overlap", lines.get(("obs", k)))
        idx = RangeIndex.build(self.obstacles) if self.obstacles else None
        for k, p in enumerate(self.pins):
            if idx is not None and idx.point_inside(p) is not None:
                raise ValidationError(f"pin {tuple(p)} inside an obstacle",
                                      lines.get(("pin", k)))

    def coverage(self) -> float:
        area = self.bounds.area()
        return sum(r.area() for r in self.obstacles) / area if area else 0.0

    def to_json(self) -> str:
        doc = {"name": self.name, "bounds": list(self.bounds),
               "pins": [list(p) for p in self.pins],
               "obstacles": [list(r) for r in self.obstacles]}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        doc = json.loads(text)
        inst = cls(doc.get("name", ""), Rect(*doc["bounds"]),
                   [Point(*p) for p in doc["pins"]],
                   [Rect(*r) for r in doc["obstacles"]])
        inst.validate()
        return inst


def write_bench(inst: Instance) -> str:
    out = [f"# {inst.name}" if inst.name else "#",
           f"bounds {inst.bounds.x0} {inst.bounds.y0} {inst.bounds.x1} {inst.bounds.y1}",
           f"pins {len(inst.pins)}"]
    out.extend(f"{p.x} {p.y}" for p in inst.pins)
    out.append(f"obstacles {len(inst.obstacles)}")
    out.extend(f"{r.x0} {r.y0} {r.x1} {r.y1}" for r in inst.obstacles)
    return "\n".join(out) + "\n"


def _ints(tokens: Sequence[str], want: int, ln: int) -> list[int]:
    if len(tokens) != want:
        raise ParseError(ln, f"expected {want} integers, got {len(tokens)}")
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(ln, f"bad integer in {tokens!r}") from None


def parse_bench(text: str, name: str = "") -> Instance:
    lines = text.splitlines()
    rows = [(i + 1, ln.split("#", 1)[0].strip())
            for i, ln in enumerate(lines)]
    rows = [(n, ln) for n, ln in rows if ln]
    if not rows:
        raise ParseError(1, "empty file")
    if rows[0][1].split()[0].lower() != "bounds":
        return _parse_published(rows, name)
    it = iter(rows)
    linemap: dict = {}

    def _next(what: str):
        try:
            return next(it)
        except StopIteration:
            raise ParseError(len(lines), f"unexpected end of file, wanted {what}") from None

    ln, row = _next("bounds")
    tok = row.split()
    if tok[0].lower() != "bounds":
        raise ParseError(ln, "expected 'bounds'")
    bounds = Rect(*_ints(tok[1:], 4, ln))
    ln, row = _next("pins")
    tok = row.split()
    if tok[0].lower() != "pins":
        raise ParseError(ln, "expected 'pins <m>'")
    (m,) = _ints(tok[1:], 1, ln)
    pins = []
    for k in range(m):
        ln, row = _next("a pin")
        x, y = _ints(row.split(), 2, ln)
        pins.append(Point(x, y))
        linemap[("pin", k)] = ln
    ln, row = _next("obstacles")
    tok = row.split()
    if tok[0].lower() != "obstacles":
        raise ParseError(ln, "expected 'obstacles <n>'")
    (n,) = _ints(tok[1:], 1, ln)
    obstacles = []
    for k in range(n):
        ln, row = _next("an obstacle")
        x0, y0, x1, y1 = _ints(row.split(), 4, ln)
        obstacles.append(Rect(x0, y0, x1, y1))
        linemap[("obs", k)] = ln
    leftover = next(it, None)
    if leftover is not None:
        raise ParseError(leftover[0], f"trailing content {leftover[1]!r}")
    inst = Instance(name, bounds, pins, obstacles)
    inst.validate(linemap)
    return inst


_COUNT_RE = re.compile(r"(terminal|pin|obstacle|blockage)s?\D*?(\d+)", re.I)


def _parse_published(rows, name: str) -> Instance:
    """Terminal/obstacle list layout of the published benchmark files."""
    pins: list[Point] = []
    obstacles: list[Rect] = []
    linemap: dict = {}
    want: Optional[str] = None
    remaining = 0
    for ln, row in rows:
        m = _COUNT_RE.search(row)
        if m and not row.lstrip("-").lstrip()[0].isdigit():
            want = "pin" if m.group(1).lower() in ("terminal", "pin") else "obs"
            remaining = int(m.group(2))
            continue
        nums = [int(t) for t in re.findall(r"-?\d+", row)]
        if want is None or remaining <= 0:
            raise ParseError(ln, f"unrecognized content {row!r}")
        if want == "pin":
            if len(nums) < 2:
                raise ParseError(ln, "terminal line needs 2 coordinates")
            linemap[("pin", len(pins))] = ln
            pins.append(Point(nums[-2], nums[-1]))
        else:
            if len(nums) < 4:
                raise ParseError(ln, "obstacle line needs 4 coordinates")
            x0, y0, x1, y1 = nums[-4:]
            linemap[("obs", len(obstacles))] = ln
            obstacles.append(Rect(min(x0, x1), min(y0, y1),
                                  max(x0, x1), max(y0, y1)))
        remaining -= 1
    if not pins:
        raise ParseError(rows[0][0], "no terminals found")
    xs = [p.x for p in pins] + [r.x0 for r in obstacles] + [r.x1 for r in obstacles]
    ys = [p.y for p in pins] + [r.y0 for r in obstacles] + [r.y1 for r in obstacles]
    inst = Instance(name, Rect(min(xs), min(ys), max(xs), max(ys)),
                    pins, obstacles)
    inst.validate(linemap)
    return inst


# ---------------------------------------------------------------------------
# randomized testcase generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenSpec:
    pin_count: int
    obstacle_count: int
    density: float
    bounds: Rect
    seed: int = 0


def _obstacles_by_rejection(rng, bounds: Rect, count: int,
                            budget: float) -> list[Rect]:
    obstacles: list[Rect] = []
    rejections = 0
    shrink = 1.0
    while len(obstacles) < count:
        remaining = count - len(obstacles)
        target = max(1.0, shrink * budget / remaining)
        ratio = rng.uniform(0.4, 2.5)
        w = min(max(1, round((target * ratio) ** 0.5)), bounds.width)
        h = min(max(1, round((target / ratio) ** 0.5)), bounds.height)
        x0 = rng.randint(bounds.x0, bounds.x1 - w)
        y0 = rng.randint(bounds.y0, bounds.y1 - h)
        cand = Rect(x0, y0, x0 + w, y0 + h)
        if any(rects_interior_overlap(cand, o) for o in obstacles):
            rejections += 1
            if rejections > 10 ** 6:
                raise Unsatisfiable("rejection budget exhausted")
            if rejections % 400 == 0:
                shrink *= 0.9  # fragmented free space; try smaller boxes
            continue
        obstacles.append(cand)
        budget -= w * h
        shrink = 1.0
    return obstacles


def _obstacles_by_cells(rng, bounds: Rect, count: int, budget: float,
                        density: float) -> list[Rect]:
    """Jittered one-obstacle-per-cell placement; random sequential placement
    jams near 55% coverage, this reaches dense settings."""
    g = 1
    while g * g < count:
        g += 1
    if count / (g * g) < density + 0.05:
        # a square grid leaves too many empty cells; use an exact factor
        # partition so every cell holds one obstacle
        a = max(d for d in range(1, count + 1) if count % d == 0
                and d * d <= count)
        na, nb = a, count // a
    else:
        na = nb = g
    xs = [bounds.x0 + i * bounds.width // na for i in range(na + 1)]
    ys = [bounds.y0 + j * bounds.height // nb for j in range(nb + 1)]
    cells = [(i, j) for j in range(nb) for i in range(na)]
    chosen = sorted(rng.sample(cells, count))
    rng.shuffle(chosen)
    obstacles: list[Rect] = []
    for k, (i, j) in enumerate(chosen):
        cw, ch = xs[i + 1] - xs[i], ys[j + 1] - ys[j]
        remaining = count - k
        target = max(1.0, budget / remaining)
        ratio = rng.uniform(0.7, 1.4)
        w = round((target * ratio) ** 0.5)
        w = max(w, -(-int(target) // ch))  # wide enough to fit in cell height
        w = min(max(1, w), cw)
        h = min(ch, max(1, -(-int(round(target)) // w)))
        ox = rng.randint(0, cw - w)
        oy = rng.randint(0, ch - h)
        r = Rect(xs[i] + ox, ys[j] + oy, xs[i] + ox + w, ys[j] + oy + h)
        obstacles.append(r)
        budget -= w * h
    return obstacles


def gen_random(spec: GenSpec) -> Instance:
    """Deterministic generator; coverage lands within +-2% absolute of the
    requested density or raises Unsatisfiable."""
    rng = random.Random(spec.seed)
    bounds = Rect(*spec.bounds)
    area = bounds.area()
    if spec.obstacle_count > 0 and (spec.density <= 0 or spec.density >= 1):
        raise Unsatisfiable(f"density {spec.density} with obstacles requested")
    if spec.obstacle_count > spec.density * area + 0.02 * area:
        raise Unsatisfiable("too many obstacles for the requested density")
    budget = spec.density * area
    if spec.obstacle_count == 0:
        obstacles: list[Rect] = []
    elif spec.density <= 0.35:
        obstacles = _obstacles_by_rejection(rng, bounds, spec.obstacle_count,
                                            budget)
    else:
        obstacles = _obstacles_by_cells(rng, bounds, spec.obstacle_count,
                                        budget, spec.density)
    covered = sum(r.area() for r in obstacles) / area if area else 0.0
    if obstacles and abs(covered - spec.density) > 0.02:
        raise Unsatisfiable(
            f"achieved coverage {covered:.3f} misses {spec.density:.3f} by >2%")
    idx = RangeIndex.build(obstacles) if obstacles else None
    pins: list[Point] = []
    rejections = 0
    while len(pins) < spec.pin_count:
        p = Point(rng.randint(bounds.x0, bounds.x1),
                  rng.randint(bounds.y0, bounds.y1))
        if p in pins or (idx is not None and idx.point_inside(p) is not None):
            rejections += 1
            if rejections > 10 ** 6:
                raise Unsatisfiable("no free space left for pins")
            continue
        pins.append(p)
    name = (f"rnd_p{spec.pin_count}_o{spec.obstacle_count}"
            f"_d{int(round(spec.density * 100))}_s{spec.seed}")
    return Instance(name, bounds, pins, obstacles)


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

_LAYER_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd",
                 "#ff7f0e", "#8c564b", "#17becf", "#e377c2")


def _svg_header(bounds: Rect, pad: float) -> list[str]:
    x0, y0 = bounds.x0 - pad, bounds.y0 - pad
    w = bounds.width + 2 * pad
    h = bounds.height + 2 * pad
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{x0} {-(y0 + h)} {w} {h}" width="800" height="{800 * h / w:.0f}">',
        f'<rect x="{x0}" y="{-(y0 + h)}" width="{w}" height="{h}" '
        f'fill="white" stroke="black" stroke-width="{max(w, h) * 0.002}"/>',
    ]


def render_svg(instance: Instance, tree=None, route=None,
               path: str = "out.svg") -> str:
    """Obstacles gray, pins as dots, tree/route edges as colored polylines
    (one color per layer for routes). Writes SVG 1.1 and returns the path."""
    b = instance.bounds
    pad = max(2.0, 0.03 * max(b.width, b.height, 1))
    stroke = max(b.width, b.height, 1) * 0.004
    parts = _svg_header(b, pad)
    for r in instance.obstacles:
        parts.append(f'<rect x="{r.x0}" y="{-r.y1}" width="{r.width}" '
                     f'height="{r.height}" fill="#b0b0b0" stroke="#707070" '
                     f'stroke-width="{stroke / 2}"/>')
    if tree is not None:
        for s in tree.segments():
            parts.append(f'<line x1="{s.a.x}" y1="{-s.a.y}" x2="{s.b.x}" '
                         f'y2="{-s.b.y}" stroke="{_LAYER_COLORS[0]}" '
                         f'stroke-width="{stroke}" stroke-linecap="round"/>')
    if route is not None:
        for net_name in sorted(route.nets):
            net = route.nets[net_name]
            for (u, v) in sorted(net.wire_edges):
                color = _LAYER_COLORS[u[2] % len(_LAYER_COLORS)]
                parts.append(f'<line x1="{u[0]}" y1="{-u[1]}" x2="{v[0]}" '
                             f'y2="{-v[1]}" stroke="{color}" '
                             f'stroke-width="{stroke}" stroke-linecap="round"/>')
    r_pin = max(stroke * 1.8, 0.3)
    for p in instance.pins:
        parts.append(f'<circle cx="{p.x}" cy="{-p.y}" r="{r_pin}" fill="black"/>')
    parts.append("</svg>")
    data = "\n".join(parts) + "\n"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(data)
    return path
