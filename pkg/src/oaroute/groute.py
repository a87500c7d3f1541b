"""Obstacle-avoiding global routing on a 3D GCell grid.

Three stages: initial routing (per-net tree generation against bbox-local
obstacles, then L/Z pattern embedding with greedy layer assignment), tree-
guided sparse maze rerouting for violating or overflowed nets, and
obstacle-aware sparse maze rerouting for whatever still crosses obstacles.
Cost model: unit wirelength + via cost + logistic overflow + a prohibitive
obstacle-violation weight.
"""

from __future__ import annotations

import json
import math
import random
import heapq
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence

from .geometry import Point, Rect
from .oarsmt import OarsmtParams, oarsmt_generate
from .rsmt_seed import RectTree

Cell = tuple[int, int]
Node3 = tuple[int, int, int]
Edge3 = tuple[Node3, Node3]

ORDINARY = "ordinary"
GUIDED = "guided"
OBSTACLE_AWARE = "obstacle_aware"


class DisconnectedNet(RuntimeError):
    pass


@dataclass(frozen=True)
class CostWeights:
    alpha_ow: float = 500.0
    alpha_ov: float = 1e7
    via_cost: float = 2.0
    overflow_slope: float = 1.0

    def __post_init__(self):
        if self.alpha_ov < 1e4 * self.alpha_ow:
            raise ValueError("alpha_ov must dominate alpha_ow by >= 1e4x")


@dataclass(frozen=True)
class GrouteParams:
    stride: int = 4           # ordinary sparse-graph line spacing
    guided_width: int = 1     # GCells kept on each side of a guide line
    rrr_iters: int = 10
    use_guided: bool = True
    use_obstacle_aware: bool = True
    congestion_patterns: bool = False  # congestion-augmented pattern choice
    seed: int = 0


class GcellGrid:
    """Capacitated 3D grid; layer 0 is pin access only, upper layers
    alternate horizontal (odd) / vertical (even) preferred directions."""

    def __init__(self, nx: int, ny: int, layers: int,
                 capacity, blocked: Iterable[Cell]):
        if layers < 3:
            raise ValueError("need a pin layer plus at least one H and one V layer")
        self.nx = nx
        self.ny = ny
        self.layers = layers
        if isinstance(capacity, int):
            self.capacity = [0] + [capacity] * (layers - 1)
        else:
            self.capacity = list(capacity)
            if len(self.capacity) != layers:
                raise ValueError("per-layer capacity list must match layer count")
        self.blocked = frozenset(blocked)

    def layer_dir(self, l: int) -> Optional[str]:
        if l == 0:
            return None
        return "H" if l % 2 == 1 else "V"

    def dir_layers(self, direction: str) -> list[int]:
        return [l for l in range(1, self.layers) if self.layer_dir(l) == direction]

    def in_bounds(self, c: Cell) -> bool:
        return 0 <= c[0] < self.nx and 0 <= c[1] < self.ny


@dataclass
class Net:
    name: str
    pins: list[Cell]


@dataclass
class Design:
    grid: GcellGrid
    nets: list[Net]
    obstacles: list[Rect]  # half-open cell ranges, may overlap in input

    @classmethod
    def from_json(cls, text: str) -> "Design":
        doc = json.loads(text)
        nx, ny = doc["dims"]
        layers = doc["layers"]
        blocked = set()
        obstacles = [Rect(*r) for r in doc.get("obstacles", [])]
        for r in obstacles:
            for x in range(max(0, r.x0), min(nx, r.x1)):
                for y in range(max(0, r.y0), min(ny, r.y1)):
                    blocked.add((x, y))
        grid = GcellGrid(nx, ny, layers, doc.get("edge_capacity", 2), blocked)
        nets = []
        for nd in doc["nets"]:
            pins = [tuple(p) for p in nd["pins"]]
            for p in pins:
                if not grid.in_bounds(p):
                    raise ValueError(f"net {nd['name']}: pin {p} out of bounds")
                if p in grid.blocked:
                    raise ValueError(f"net {nd['name']}: pin {p} on an obstacle GCell")
            nets.append(Net(nd["name"], pins))
        return cls(grid, nets, obstacles)

    def to_json(self) -> str:
        cap = self.grid.capacity
        uniform = len(set(cap[1:])) == 1
        doc = {"dims": [self.grid.nx, self.grid.ny],
               "layers": self.grid.layers,
               "edge_capacity": cap[1] if uniform else cap,
               "obstacles": [list(r) for r in self.obstacles],
               "nets": [{"name": n.name, "pins": [list(p) for p in n.pins]}
                        for n in self.nets]}
        return json.dumps(doc, sort_keys=True, indent=1) + "\n"


@dataclass
class NetRoute:
    name: str
    pins: list[Cell]
    wire_edges: frozenset[Edge3]
    via_edges: frozenset[Edge3]
    guide_segments: tuple = ()  # doubled-plane OARSMT edges for guidance

    def edge_count(self) -> int:
        return len(self.wire_edges) + len(self.via_edges)


@dataclass
class RouteSolution:
    nets: dict[str, NetRoute]
    open_nets: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# demand bookkeeping
# ---------------------------------------------------------------------------

def demand_of(solution: RouteSolution) -> dict[Edge3, int]:
    demand: dict[Edge3, int] = {}
    for name in sorted(solution.nets):
        r = solution.nets[name]
        for e in r.wire_edges:
            demand[e] = demand.get(e, 0) + 1
        for e in r.via_edges:
            demand[e] = demand.get(e, 0) + 1
    return demand


def _add_demand(demand: dict, route: NetRoute, sign: int) -> None:
    for e in list(route.wire_edges) + list(route.via_edges):
        v = demand.get(e, 0) + sign
        if v:
            demand[e] = v
        else:
            demand.pop(e, None)


def _edge_blocked(grid: GcellGrid, e: Edge3) -> bool:
    u, v = e
    return (u[0], u[1]) in grid.blocked or (v[0], v[1]) in grid.blocked


# ---------------------------------------------------------------------------
# initial routing
# ---------------------------------------------------------------------------

def _decompose_blocked(blocked: frozenset[Cell]) -> list[Rect]:
    """Disjoint rectangle cover of the blocked cells (row strips merged
    vertically); tolerates overlapping input obstacles."""
    by_row: dict[int, list[tuple[int, int]]] = {}
    for (x, y) in blocked:
        by_row.setdefault(y, []).append((x, x + 1))
    runs_by_row: dict[int, list[tuple[int, int]]] = {}
    for y, runs in by_row.items():
        runs.sort()
        merged = [list(runs[0])]
        for lo, hi in runs[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        runs_by_row[y] = [tuple(r) for r in merged]
    rects: list[Rect] = []
    open_rects: dict[tuple[int, int], Rect] = {}
    for y in sorted(runs_by_row):
        nxt: dict[tuple[int, int], Rect] = {}
        for lo, hi in runs_by_row[y]:
            prev = open_rects.get((lo, hi))
            if prev is not None and prev.y1 == y:
                nxt[(lo, hi)] = Rect(lo, prev.y0, hi, y + 1)
            else:
                nxt[(lo, hi)] = Rect(lo, y, hi, y + 1)
        for key, r in open_rects.items():
            if key not in nxt:
                rects.append(r)
        open_rects = nxt
    rects.extend(open_rects.values())
    return sorted(rects)


def _double_rect(r: Rect) -> Rect:
    return Rect(2 * r.x0 - 1, 2 * r.y0 - 1, 2 * r.x1 - 1, 2 * r.y1 - 1)


def _cell_of(p: Point, grid: GcellGrid) -> Cell:
    def options(v: int, n: int) -> list[int]:
        if v % 2 == 0:
            return [min(max(v // 2, 0), n - 1)]
        lo, hi = (v - 1) // 2, (v + 1) // 2
        return [min(max(lo, 0), n - 1), min(max(hi, 0), n - 1)]
    cands = [(x, y) for x in options(p.x, grid.nx) for y in options(p.y, grid.ny)]
    for c in cands:
        if c not in grid.blocked:
            return c
    return cands[0]


def _unit_path(a: Cell, b: Cell) -> list[tuple[Cell, Cell]]:
    """Unit 2D edges along an axis-aligned cell segment."""
    out = []
    if a[0] == b[0]:
        lo, hi = sorted((a[1], b[1]))
        out = [((a[0], y), (a[0], y + 1)) for y in range(lo, hi)]
    else:
        lo, hi = sorted((a[0], b[0]))
        out = [((x, a[1]), (x + 1, a[1])) for x in range(lo, hi)]
    return out


def _pattern_paths(a: Cell, b: Cell) -> list[list[Cell]]:
    """Corner sequences of the candidate L and Z patterns from a to b."""
    if a == b:
        return []
    if a[0] == b[0] or a[1] == b[1]:
        return [[a, b]]
    pats = [[a, (b[0], a[1]), b], [a, (a[0], b[1]), b]]
    if abs(a[0] - b[0]) >= 2:
        mx = (a[0] + b[0]) // 2
        pats.append([a, (mx, a[1]), (mx, b[1]), b])
    if abs(a[1] - b[1]) >= 2:
        my = (a[1] + b[1]) // 2
        pats.append([a, (a[0], my), (b[0], my), b])
    return pats


def _logistic(z: float) -> float:
    if z >= 40:
        return 1.0
    if z <= -40:
        return 0.0
    return 1.0 / (1.0 + math.exp(-z))


def initial_route(design: Design, weights: CostWeights, params: GrouteParams,
                  timings: Optional[dict] = None) -> RouteSolution:
    """Per-net OARSMT over bbox-local obstacles, embedded with L/Z patterns
    and greedy layer assignment. Obstacle violations may remain."""
    import time
    grid = design.grid
    rect_cover = _decompose_blocked(grid.blocked)
    doubled = [_double_rect(r) for r in rect_cover]
    demand: dict[Edge3, int] = {}
    routes: dict[str, NetRoute] = {}
    t_tree = 0.0
    t_pattern = 0.0
    for ni, net in enumerate(design.nets):
        cells = sorted(set(net.pins))
        if len(cells) <= 1:
            routes[net.name] = NetRoute(net.name, net.pins, frozenset(),
                                        frozenset())
            continue
        t0 = time.perf_counter()
        bx0 = min(c[0] for c in cells)
        bx1 = max(c[0] for c in cells)
        by0 = min(c[1] for c in cells)
        by1 = max(c[1] for c in cells)
        local = [dr for r, dr in zip(rect_cover, doubled)
                 if r.x0 <= bx1 and r.x1 > bx0 and r.y0 <= by1 and r.y1 > by0]
        dpins = [Point(2 * x, 2 * y) for (x, y) in cells]
        tree = oarsmt_generate(dpins, local,
                               OarsmtParams(seed=params.seed * 1000003 + ni))
        guide = tuple((tuple(s.a), tuple(s.b)) for s in tree.segments())
        t_tree += time.perf_counter() - t0

        t0 = time.perf_counter()
        links = []
        seen = set()
        for i, j in tree.edges:
            ca = _cell_of(tree.nodes[i], grid)
            cb = _cell_of(tree.nodes[j], grid)
            if ca == cb:
                continue
            k = (min(ca, cb), max(ca, cb))
            if k not in seen:
                seen.add(k)
                links.append(k)
        edges2d: set[tuple[Cell, Cell]] = set()
        for ca, cb in links:
            best_path = None
            best_cost = None
            for corners in _pattern_paths(ca, cb):
                cost = weights.via_cost * max(0, len(corners) - 2)
                path_edges = []
                for p, q in zip(corners, corners[1:]):
                    path_edges.extend(_unit_path(p, q))
                for (u, v) in path_edges:
                    if u in grid.blocked or v in grid.blocked:
                        cost += weights.alpha_ov
                    else:
                        cost += 1.0
                        if params.congestion_patterns:
                            best_l = min(
                                _logistic((demand.get(((u[0], u[1], l), (v[0], v[1], l)), 0)
                                           + 1 - grid.capacity[l]) / weights.overflow_slope)
                                for l in grid.dir_layers("H" if u[1] == v[1] else "V"))
                            cost += weights.alpha_ow * best_l
                if best_cost is None or cost < best_cost:
                    best_cost = cost
                    best_path = path_edges
            edges2d.update(best_path or [])
        wire, vias = _assign_layers(edges2d, cells, grid, demand)
        route = NetRoute(net.name, net.pins, frozenset(wire), frozenset(vias),
                         guide)
        _add_demand(demand, route, +1)
        routes[net.name] = route
        t_pattern += time.perf_counter() - t0
    if timings is not None:
        timings["oarsmt_ms"] = t_tree * 1000.0
        timings["pattern_ms"] = t_pattern * 1000.0
    return RouteSolution(routes)


def _assign_layers(edges2d: set[tuple[Cell, Cell]], pin_cells: list[Cell],
                   grid: GcellGrid, demand: dict[Edge3, int]):
    """Greedy per-run layer choice (max worst-case slack, then lowest layer),
    with via stacks at run junctions and pins."""
    hs, vs = [], []
    for (u, v) in edges2d:
        if u[1] == v[1]:
            hs.append((u[1], min(u[0], v[0]), max(u[0], v[0])))
        else:
            vs.append((u[0], min(u[1], v[1]), max(u[1], v[1])))

    def merge(items):
        by_line: dict[int, list[list[int]]] = {}
        for line, lo, hi in items:
            by_line.setdefault(line, []).append([lo, hi])
        out = []
        for line, runs in sorted(by_line.items()):
            runs.sort()
            cur = runs[0]
            for lo, hi in runs[1:]:
                if lo <= cur[1]:
                    cur[1] = max(cur[1], hi)
                else:
                    out.append((line, cur[0], cur[1]))
                    cur = [lo, hi]
            out.append((line, cur[0], cur[1]))
        return out

    wire: set[Edge3] = set()

    def place(run, horizontal: bool):
        line, lo, hi = run
        layers = grid.dir_layers("H" if horizontal else "V")
        best_l, best_slack = None, None
        for l in layers:
            slack = None
            for t in range(lo, hi):
                e = (((t, line, l), (t + 1, line, l)) if horizontal
                     else ((line, t, l), (line, t + 1, l)))
                s = grid.capacity[l] - demand.get(e, 0)
                slack = s if slack is None else min(slack, s)
            if best_slack is None or slack > best_slack:
                best_slack, best_l = slack, l
        l = best_l
        for t in range(lo, hi):
            e = (((t, line, l), (t + 1, line, l)) if horizontal
                 else ((line, t, l), (line, t + 1, l)))
            wire.add(e)
        return (run, horizontal, l)

    placed = [place(r, True) for r in merge(hs)]
    placed += [place(r, False) for r in merge(vs)]

    # junctions: run endpoints, pins, and every same-net H/V crossing
    # (a mid-run crossing can be the only joint between two branches)
    junctions: dict[Cell, set[int]] = {p: {0} for p in pin_cells}
    for (line, lo, hi), horizontal, l in placed:
        a = (lo, line) if horizontal else (line, lo)
        b = (hi, line) if horizontal else (line, hi)
        junctions.setdefault(a, set())
        junctions.setdefault(b, set())
    for (hline, hlo, hhi), horizontal, hl in placed:
        if not horizontal:
            continue
        for (vline, vlo, vhi), h2, vl in placed:
            if h2:
                continue
            if hlo <= vline <= hhi and vlo <= hline <= vhi:
                junctions.setdefault((vline, hline), set())
    for p, layers in junctions.items():
        for (line, lo, hi), horizontal, l in placed:
            if horizontal and p[1] == line and lo <= p[0] <= hi:
                layers.add(l)
            elif not horizontal and p[0] == line and lo <= p[1] <= hi:
                layers.add(l)
    vias: set[Edge3] = set()
    for p, layers in junctions.items():
        if len(layers) <= 1:
            continue
        for l in range(min(layers), max(layers)):
            vias.add(((p[0], p[1], l), (p[0], p[1], l + 1)))
    return wire, vias


# ---------------------------------------------------------------------------
# sparse graphs and maze routing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SparseGraph:
    cols: tuple[int, ...]
    rows: tuple[int, ...]
    kind: str


def build_sparse_graph(kind: str, net: Net, grid: GcellGrid,
                       solution: Optional[RouteSolution],
                       params: GrouteParams,
                       obstacles: Sequence[Rect] = ()) -> SparseGraph:
    cols = set(range(0, grid.nx, params.stride)) | {grid.nx - 1}
    rows = set(range(0, grid.ny, params.stride)) | {grid.ny - 1}
    for (x, y) in net.pins:
        cols.add(x)
        rows.add(y)
    if kind == GUIDED:
        w = params.guided_width
        route = solution.nets.get(net.name) if solution else None
        for (a, b) in (route.guide_segments if route else ()):
            xs = {a[0] // 2, -(-a[0] // 2), b[0] // 2, -(-b[0] // 2)}
            ys = {a[1] // 2, -(-a[1] // 2), b[1] // 2, -(-b[1] // 2)}
            if a[1] == b[1]:  # horizontal guide: widen rows, keep end cols
                for y in ys:
                    rows.update(range(y - w, y + w + 1))
                cols.update(xs)
            elif a[0] == b[0]:
                for x in xs:
                    cols.update(range(x - w, x + w + 1))
                rows.update(ys)
    elif kind == OBSTACLE_AWARE:
        for r in obstacles:
            cols.update((r.x0 - 1, r.x0, r.x1 - 1, r.x1))
            rows.update((r.y0 - 1, r.y0, r.y1 - 1, r.y1))
    elif kind != ORDINARY:
        raise ValueError(f"unknown sparse graph kind {kind!r}")
    cols = tuple(sorted(c for c in cols if 0 <= c < grid.nx))
    rows = tuple(sorted(r for r in rows if 0 <= r < grid.ny))
    return SparseGraph(cols, rows, kind)


def maze_route(net: Net, sgraph: SparseGraph, grid: GcellGrid,
               weights: CostWeights,
               demand: dict[Edge3, int]) -> Optional[NetRoute]:
    """Multi-terminal Dijkstra on the sparse 3D graph; returns None when a
    pin is unreachable."""
    cols, rows = sgraph.cols, sgraph.rows
    xi = {x: i for i, x in enumerate(cols)}
    yi = {y: j for j, y in enumerate(rows)}
    pins = sorted(set(net.pins))
    if len(pins) <= 1:
        return NetRoute(net.name, net.pins, frozenset(), frozenset())
    terms = []
    for (x, y) in pins:
        if x not in xi or y not in yi:
            raise ValueError(f"pin ({x},{y}) off the sparse graph")
        terms.append((xi[x], yi[y], 0))

    blocked = grid.blocked
    cap = grid.capacity
    a_ow, a_ov = weights.alpha_ow, weights.alpha_ov
    slope = weights.overflow_slope
    step_cache: dict[tuple, float] = {}

    def wire_step(i: int, j: int, l: int, horizontal: bool) -> float:
        key = (i, j, l, horizontal)
        c = step_cache.get(key)
        if c is not None:
            return c
        total = 0.0
        if horizontal:
            y = rows[j]
            for x in range(cols[i], cols[i + 1]):
                e = ((x, y, l), (x + 1, y, l))
                if (x, y) in blocked or (x + 1, y) in blocked:
                    total += 1.0 + a_ov
                else:
                    total += 1.0 + a_ow * _logistic(
                        (demand.get(e, 0) + 1 - cap[l]) / slope)
        else:
            x = cols[i]
            for y in range(rows[j], rows[j + 1]):
                e = ((x, y, l), (x, y + 1, l))
                if (x, y) in blocked or (x, y + 1) in blocked:
                    total += 1.0 + a_ov
                else:
                    total += 1.0 + a_ow * _logistic(
                        (demand.get(e, 0) + 1 - cap[l]) / slope)
        step_cache[key] = total
        return total

    def via_step(i: int, j: int) -> float:
        return weights.via_cost + (a_ov if (cols[i], rows[j]) in blocked else 0.0)

    nlayers = grid.layers
    comp: set[Node3] = {terms[0]}
    remaining = set(terms[1:])
    wire: set[Edge3] = set()
    vias: set[Edge3] = set()
    while remaining:
        # A* toward the nearest remaining terminal; the Manhattan bound is
        # admissible since every unit edge costs at least 1
        rem_xy = [(cols[i], rows[j]) for (i, j, _) in remaining]

        def h(i: int, j: int) -> float:
            x, y = cols[i], rows[j]
            return min(abs(x - tx) + abs(y - ty) for (tx, ty) in rem_xy)

        dist: dict[Node3, float] = {n: 0.0 for n in comp}
        prev: dict[Node3, Node3] = {}
        heap: list[tuple[float, Node3]] = [(h(n[0], n[1]), n) for n in sorted(comp)]
        heapq.heapify(heap)
        found = None
        while heap:
            f, node = heapq.heappop(heap)
            d = dist.get(node, math.inf)
            if f > d + h(node[0], node[1]):
                continue
            if node in remaining:
                found = node
                break
            i, j, l = node
            moves: list[tuple[Node3, float]] = []
            if l > 0:
                if grid.layer_dir(l) == "H":
                    if i + 1 < len(cols):
                        moves.append(((i + 1, j, l), wire_step(i, j, l, True)))
                    if i > 0:
                        moves.append(((i - 1, j, l), wire_step(i - 1, j, l, True)))
                else:
                    if j + 1 < len(rows):
                        moves.append(((i, j + 1, l), wire_step(i, j, l, False)))
                    if j > 0:
                        moves.append(((i, j - 1, l), wire_step(i, j - 1, l, False)))
            if l + 1 < nlayers:
                moves.append(((i, j, l + 1), via_step(i, j)))
            if l > 0:
                moves.append(((i, j, l - 1), via_step(i, j)))
            for nxt, w in moves:
                nd = d + w
                if nd < dist.get(nxt, math.inf):
                    dist[nxt] = nd
                    prev[nxt] = node
                    heapq.heappush(heap, (nd + h(nxt[0], nxt[1]), nxt))
        if found is None:
            return None
        # adopt the path into the component
        node = found
        while node not in comp:
            comp.add(node)
            parent = prev[node]
            (i, j, l), (pi, pj, pl) = node, parent
            if l != pl:
                a, b = sorted(((cols[i], rows[j], min(l, pl)),
                               (cols[i], rows[j], max(l, pl))))
                vias.add((a, b))
            elif i != pi:
                x0, x1 = sorted((cols[i], cols[pi]))
                y = rows[j]
                for x in range(x0, x1):
                    wire.add(((x, y, l), (x + 1, y, l)))
            else:
                y0, y1 = sorted((rows[j], rows[pj]))
                x = cols[i]
                for y in range(y0, y1):
                    wire.add(((x, y, l), (x, y + 1, l)))
            node = parent
        remaining.discard(found)
    old_guide = ()
    return NetRoute(net.name, net.pins, frozenset(wire), frozenset(vias),
                    old_guide)


# ---------------------------------------------------------------------------
# rip-up and reroute
# ---------------------------------------------------------------------------

def _net_violation_score(route: NetRoute, grid: GcellGrid,
                         demand: dict[Edge3, int], weights: CostWeights):
    ov = sum(1 for e in route.wire_edges if _edge_blocked(grid, e))
    ov += sum(1 for e in route.via_edges if _edge_blocked(grid, e))
    of = sum(1 for e in route.wire_edges
             if not _edge_blocked(grid, e)
             and demand.get(e, 0) > grid.capacity[e[0][2]])
    return ov, of, weights.alpha_ov * ov + weights.alpha_ow * of


def rip_up_reroute(design: Design, solution: RouteSolution,
                   weights: CostWeights, params: GrouteParams,
                   timings: Optional[dict] = None,
                   stage_metrics: Optional[dict] = None) -> RouteSolution:
    """Guided sparse rerouting of violating/overflowed nets, then
    obstacle-aware rerouting of whatever still crosses obstacles."""
    import time
    grid = design.grid
    nets_by_name = {n.name: n for n in design.nets}
    sol = dict(solution.nets)
    demand = demand_of(solution)
    open_nets = set(solution.open_nets)

    t0 = time.perf_counter()
    kind1 = GUIDED if params.use_guided else ORDINARY

    def _totals() -> tuple[int, int]:
        ov_sum = of_sum = 0
        for name in sol:
            ov, of, _ = _net_violation_score(sol[name], grid, demand, weights)
            ov_sum += ov
            of_sum += of
        return ov_sum, of_sum

    best_totals = _totals()
    for _ in range(params.rrr_iters):
        scored = []
        for name in sorted(sol):
            ov, of, score = _net_violation_score(sol[name], grid, demand, weights)
            if score > 0:
                scored.append((-score, name))
        if not scored:
            break
        scored.sort()
        for _, name in scored:
            old = sol[name]
            _add_demand(demand, old, -1)
            sg = build_sparse_graph(kind1, nets_by_name[name], grid,
                                    RouteSolution(sol), params)
            new = maze_route(nets_by_name[name], sg, grid, weights, demand)
            if new is None:
                open_nets.add(name)
                new = old
            else:
                new = replace(new, guide_segments=old.guide_segments)
                open_nets.discard(name)
            _add_demand(demand, new, +1)
            sol[name] = new
        totals = _totals()
        if totals >= best_totals:
            break  # unavoidable congestion: stop burning iterations
        best_totals = totals
    if timings is not None:
        timings["guided_ms"] = (time.perf_counter() - t0) * 1000.0
    if stage_metrics is not None:
        stage_metrics["guided"] = evaluate(
            design, RouteSolution(dict(sol), sorted(open_nets)), weights)

    t0 = time.perf_counter()
    if params.use_obstacle_aware:
        scored = []
        for name in sorted(sol):
            ov, of, score = _net_violation_score(sol[name], grid, demand, weights)
            if ov > 0:
                scored.append((-score, name))
        scored.sort()
        for _, name in scored:
            old = sol[name]
            _add_demand(demand, old, -1)
            sg = build_sparse_graph(OBSTACLE_AWARE, nets_by_name[name], grid,
                                    None, params, design.obstacles)
            new = maze_route(nets_by_name[name], sg, grid, weights, demand)
            if new is None:
                open_nets.add(name)
                new = old
            else:
                new = replace(new, guide_segments=old.guide_segments)
                open_nets.discard(name)
            _add_demand(demand, new, +1)
            sol[name] = new
    if timings is not None:
        timings["obstacle_aware_ms"] = (time.perf_counter() - t0) * 1000.0
    out = RouteSolution(sol, sorted(open_nets))
    if stage_metrics is not None:
        stage_metrics["obstacle_aware"] = evaluate(design, out, weights)
    return out


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def check_connected(route: NetRoute) -> bool:
    pins = sorted(set(route.pins))
    if len(pins) <= 1 and not route.wire_edges and not route.via_edges:
        return True
    parent: dict[Node3, Node3] = {}

    def find(a):
        root = a
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    for u, v in list(route.wire_edges) + list(route.via_edges):
        parent[find(u)] = find(v)
    roots = {find((x, y, 0)) for (x, y) in pins}
    return len(roots) == 1


def evaluate(design: Design, solution: RouteSolution,
             weights: CostWeights) -> dict:
    """Recompute WL / vias / OW / OV / total cost from scratch.
    OW excludes obstacle-blocked edges; those count toward OV instead."""
    grid = design.grid
    for name in sorted(solution.nets):
        if not check_connected(solution.nets[name]):
            raise DisconnectedNet(name)
    demand = demand_of(solution)
    wl = sum(len(r.wire_edges) for r in solution.nets.values())
    vias = sum(len(r.via_edges) for r in solution.nets.values())
    ow = 0
    ov = 0
    for e, d in demand.items():
        if _edge_blocked(grid, e):
            ov += d
        elif e[0][2] == e[1][2]:
            ow += max(0, d - grid.capacity[e[0][2]])
    total = wl + weights.via_cost * vias + weights.alpha_ow * ow \
        + weights.alpha_ov * ov
    return {"wl": wl, "vias": vias, "ow": ow, "ov": ov,
            "total_cost": total, "nets": len(solution.nets),
            "open_nets": len(solution.open_nets)}


def route_flow(design: Design, weights: CostWeights | None = None,
               params: GrouteParams | None = None):
    """Full flow. Returns (solution, metrics dict, timings dict)."""
    weights = weights or CostWeights()
    params = params or GrouteParams()
    timings: dict = {}
    stages: dict = {}
    initial = initial_route(design, weights, params, timings)
    stages["initial"] = evaluate(design, initial, weights)
    final = rip_up_reroute(design, initial, weights, params, timings, stages)
    stages["final"] = evaluate(design, final, weights)
    metrics = dict(stages["final"])
    metrics["stages"] = stages
    return final, metrics, timings


# ---------------------------------------------------------------------------
# oracles and synthetic designs
# ---------------------------------------------------------------------------

def dense_reachable(design: Design, net: Net) -> bool:
    """BFS over free cells: can all pins be connected obstacle-free at all?"""
    grid = design.grid
    pins = sorted(set(net.pins))
    if len(pins) <= 1:
        return True
    seen = {pins[0]}
    frontier = [pins[0]]
    targets = set(pins[1:])
    while frontier and targets:
        x, y = frontier.pop()
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            c = (nx, ny)
            if (0 <= nx < grid.nx and 0 <= ny < grid.ny
                    and c not in seen and c not in grid.blocked):
                seen.add(c)
                targets.discard(c)
                frontier.append(c)
    return not targets


def random_design(nx: int = 64, ny: int = 64, layers: int = 4,
                  n_nets: int = 400, n_obstacles: int = 20,
                  capacity: int = 3, seed: int = 0,
                  max_pins: int = 5) -> Design:
    """Seeded synthetic design: a few wall-like obstacles plus blocks, nets
    with 2..max_pins pins on free cells."""
    rng = random.Random(seed)
    obstacles: list[Rect] = []
    blocked: set[Cell] = set()
    reserved: set[Cell] = set()  # wall gaps stay open

    def try_place(r: Rect) -> bool:
        if r.x0 < 0 or r.y0 < 0 or r.x1 > nx or r.y1 > ny:
            return False
        cells = [(x, y) for x in range(r.x0, r.x1) for y in range(r.y0, r.y1)]
        if any(c in blocked or c in reserved for c in cells):
            return False
        obstacles.append(r)
        blocked.update(cells)
        return True

    # full-span walls with one narrow gap (two rects each): these make the
    # obstacle-aware lines matter, since an ordinary sparse graph only sees
    # the gap when a stride or pin line happens to land on it. All walls in
    # one design share an orientation so they cannot seal a quadrant.
    walls = min(3, n_obstacles // 4)
    horizontal_walls = rng.random() < 0.5
    placed = 0
    guard = 0
    while placed < walls and guard < 1000:
        guard += 1
        thick = rng.randint(1, 2)
        gap = rng.randint(1, 2)
        before = len(obstacles)
        if horizontal_walls:
            y0 = rng.randint(4, ny - 5 - thick)
            gx = rng.randint(2, nx - 2 - gap)
            ok = try_place(Rect(0, y0, gx, y0 + thick)) and \
                try_place(Rect(gx + gap, y0, nx, y0 + thick))
            gap_cells = [(x, y) for x in range(gx, gx + gap)
                         for y in range(y0, y0 + thick)]
        else:
            x0 = rng.randint(4, nx - 5 - thick)
            gy = rng.randint(2, ny - 2 - gap)
            ok = try_place(Rect(x0, 0, x0 + thick, gy)) and \
                try_place(Rect(x0, gy + gap, x0 + thick, ny))
            gap_cells = [(x, y) for x in range(x0, x0 + thick)
                         for y in range(gy, gy + gap)]
        if not ok:
            while len(obstacles) > before:  # atomic: no half walls
                r = obstacles.pop()
                for x in range(r.x0, r.x1):
                    for y in range(r.y0, r.y1):
                        blocked.discard((x, y))
            continue
        reserved.update(gap_cells)
        placed += 1
    guard = 0
    while len(obstacles) < n_obstacles and guard < 20000:
        guard += 1
        w = rng.randint(2, max(3, nx // 8))
        h = rng.randint(2, max(3, ny // 8))
        x0 = rng.randint(0, nx - w)
        y0 = rng.randint(0, ny - h)
        try_place(Rect(x0, y0, x0 + w, y0 + h))

    # mostly-local nets: a saturated grid would make every metric about
    # unavoidable congestion instead of obstacle handling
    nets = []
    window = max(8, nx // 3)
    for k in range(n_nets):
        m = rng.randint(2, max_pins)
        cx = rng.randint(0, nx - 1)
        cy = rng.randint(0, ny - 1)
        pins = []
        guard = 0
        while len(pins) < m and guard < 10000:
            guard += 1
            c = (min(nx - 1, max(0, cx + rng.randint(-window, window))),
                 min(ny - 1, max(0, cy + rng.randint(-window, window))))
            if c not in blocked and c not in pins:
                pins.append(c)
        nets.append(Net(f"net{k:04d}", pins))
    grid = GcellGrid(nx, ny, layers, capacity, blocked)
    return Design(grid, nets, obstacles)
