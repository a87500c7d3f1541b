"""Rule-based generation of obstacle-avoiding rectilinear Steiner trees.

Flow: seed tree -> legalize nodes inside obstacles -> iterative edge
updating on a FIFO worklist (L-shape reference flipping, sloped reference
lines through hook nodes, obstacle merging; the locally shortest repair
wins) -> post-processing (planarize, break cycles, prune stubs, merge
collinear runs). Edges that exhaust their repair budget fall back to an A*
escape router on a growing Hanan window, so the result is always legal.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right, insort
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .edge_update import (Adj, EdgeUpdateRequest, EdgeUpdateResult,
                          UpdateStatus, _strictly_inside, adj_of_segments,
                          edge_update, legalize_adj, tree_from_adj)
from .geometry import (Line, Point, Rect, Segment, bounding_rect, manhattan)
from .obstacle_index import RangeIndex
from .rsmt_seed import RectTree, rectilinearize, seed_topology


class PinInsideObstacle(ValueError):
    """A pin lies strictly inside an obstacle; no legal tree exists."""


class InfeasibleEdge(RuntimeError):
    """Escape routing failed; the instance is infeasible as modeled."""


@dataclass(frozen=True)
class OarsmtParams:
    k_l: int = 5              # hook nodes per covering ray segment
    k_m: int = 2              # obstacle-merge granularity count
    seed: int = 0
    repair_depth: int = 16    # per-edge re-update budget
    enhanced_rules: bool = True


@dataclass(frozen=True)
class CandidateSet:
    bbox: Rect
    ids: tuple[int, ...]


@dataclass(frozen=True)
class MergePlan:
    groups: tuple[tuple[int, ...], ...]
    merged: tuple[Rect, ...]


EdgeKey = tuple[Point, Point]


def _key(a: Point, b: Point) -> EdgeKey:
    return (a, b) if a <= b else (b, a)


def candidate_obstacles(e: Segment, idx: RangeIndex) -> CandidateSet:
    """Crossing obstacles of e, their joint bounding box, and every
    obstacle that box overlaps."""
    s_be = idx.crossing_obstacles(e)
    bbox = bounding_rect(points=[e.a, e.b],
                         rects=[idx.obstacles[i] for i in s_be])
    return CandidateSet(bbox=bbox, ids=tuple(idx.rect_overlaps(bbox)))


def merge_plans(crossing: Sequence[int], obstacles: Sequence[Rect],
                k_m: int) -> list[MergePlan]:
    """Group the successive crossing obstacles into runs of n_m and merge
    each run into its bounding box; n_m is swept over k_m+1 values."""
    n = len(crossing)
    if n == 0:
        return []
    step = -(-n // k_m)
    values = sorted({1} | {min(n, i * step) for i in range(1, k_m + 1)})
    plans = []
    for nm in values:
        groups = tuple(tuple(crossing[i:i + nm]) for i in range(0, n, nm))
        merged = tuple(bounding_rect(rects=[obstacles[i] for i in g])
                       for g in groups)
        plans.append(MergePlan(groups=groups, merged=merged))
    return plans


@dataclass
class EdgeFix:
    removed: list[EdgeKey]
    segments: list[Segment]
    cost: int = 0


def _hooks_on_rays(adj: Adj, dst: Point, src: Point, e_vertical: bool,
                   bbox: Rect, k_l: int) -> list[Point]:
    """Hook nodes on the ray segments covering dst's orthogonal edges,
    equally spaced inside the candidate bounding box."""
    hooks: list[Point] = []
    dirs: set[str] = set()
    for q in adj.get(dst, ()):
        if q == src:
            continue
        if e_vertical and q.y == dst.y and q.x != dst.x:
            dirs.add("right" if q.x > dst.x else "left")
        elif not e_vertical and q.x == dst.x and q.y != dst.y:
            dirs.add("up" if q.y > dst.y else "down")
    for d in sorted(dirs):
        if d == "left":
            span = dst.x - bbox.x0
        elif d == "right":
            span = bbox.x1 - dst.x
        elif d == "down":
            span = dst.y - bbox.y0
        else:
            span = bbox.y1 - dst.y
        if span <= 0:
            continue
        seen = set()
        for t in range(1, k_l + 1):
            off = t * span // (k_l + 1)
            if off == 0 or off in seen:
                continue
            seen.add(off)
            if d == "left":
                hooks.append(Point(dst.x - off, dst.y))
            elif d == "right":
                hooks.append(Point(dst.x + off, dst.y))
            elif d == "down":
                hooks.append(Point(dst.x, dst.y - off))
            else:
                hooks.append(Point(dst.x, dst.y + off))
    return hooks


def _l_corner(adj: Adj, a: Point, b: Point,
              pins: frozenset[Point]) -> Optional[tuple[Point, Point, Point]]:
    """If e=(a,b) sits on an L-shape, return (corner, far end of e, far end
    of the other leg); the first qualifying endpoint in canonical order.
    A pin never acts as the corner: flipping would strand it."""
    vertical = a.x == b.x
    for c, u in ((a, b), (b, a)) if a <= b else ((b, a), (a, b)):
        if c in pins:
            continue
        nbrs = adj.get(c, set())
        if len(nbrs) != 2:
            continue
        (w,) = (q for q in nbrs if q != u)
        if (w.x == c.x) != vertical:
            return c, u, w
    return None


def update_edge_with_rules(adj: Adj, e: Segment, cand: CandidateSet,
                           idx: RangeIndex, params: OarsmtParams,
                           pins: frozenset[Point] = frozenset()) -> Optional[EdgeFix]:
    """Try every enabled rule combination and keep the locally shortest
    complete repair; None when every candidate aborts."""
    a, b = e.a, e.b
    cand_rects = [idx.obstacles[i] for i in cand.ids]
    lo, hi = (a, b) if a <= b else (b, a)
    plain_line = Line(lo, hi)

    def run(n_s: Point, n_t: Point, l_r: Line, rects) -> Optional[EdgeUpdateResult]:
        if any(_strictly_inside(n_s, r) for r in rects):
            return None  # a merged box swallowed the source
        res = edge_update(EdgeUpdateRequest(n_s, n_t, l_r, rects))
        if res.status is not UpdateStatus.COMPLETE:
            return None
        # reject chains whose bend points land inside a real obstacle
        # (possible when bending around merged boxes)
        for s in res.edges:
            for p in s:
                if p not in (n_s, n_t) and idx.point_inside(p) is not None:
                    return None
        return res

    if not params.enhanced_rules:
        res = run(lo, hi, plain_line, cand_rects)
        if res is None:
            return None
        return EdgeFix([_key(a, b)], res.edges, res.wirelength())

    lshape = _l_corner(adj, a, b, pins)
    if lshape is not None:
        c, u, w = lshape
        diag = Line(u, w)
        best: Optional[EdgeFix] = None
        plain = run(lo, hi, plain_line, cand_rects)
        leg = manhattan(c, w)
        if plain is not None:
            best = EdgeFix([_key(a, b)], plain.edges, plain.wirelength() + leg)
        res_a = run(u, c, diag, cand_rects)
        if res_a is not None and (best is None or res_a.wirelength() + leg < best.cost):
            best = EdgeFix([_key(a, b)], res_a.edges, res_a.wirelength() + leg)
        c2 = Point(u.x + w.x - c.x, u.y + w.y - c.y)
        res_b = None
        if idx.point_inside(c2) is None:
            cand_b = candidate_obstacles(Segment(u, c2), idx)
            res_b = run(u, c2, diag, [idx.obstacles[i] for i in cand_b.ids])
        if res_b is not None:
            segs = list(res_b.edges)
            if c2 != w:
                segs.append(Segment(c2, w))
            cost = res_b.wirelength() + manhattan(c2, w)
            if best is None or cost < best.cost:
                best = EdgeFix([_key(a, b), _key(c, w)], segs, cost)
        return best

    s_be = idx.crossing_obstacles(e)
    plans = merge_plans(s_be, idx.obstacles, params.k_m)
    crossing_set = set(s_be)
    keepers = [idx.obstacles[i] for i in cand.ids if i not in crossing_set]
    e_vertical = a.x == b.x
    refs: list[tuple[Point, Point, Line]] = [(lo, hi, plain_line), (hi, lo, plain_line)]
    for src, dst in ((a, b), (b, a)):
        for h in _hooks_on_rays(adj, dst, src, e_vertical, cand.bbox, params.k_l):
            if h == src:
                continue
            line = Line(src, h)
            refs.append((src, dst, line))
            refs.append((dst, src, line))
    best = None
    for plan in plans:
        rects = list(plan.merged) + keepers
        for n_s, n_t, l_r in refs:
            res = run(n_s, n_t, l_r, rects)
            if res is not None and (best is None or res.wirelength() < best.cost):
                best = EdgeFix([_key(a, b)], res.edges, res.wirelength())
    return best


# ---------------------------------------------------------------------------
# escape routing: A* on a Hanan window, staged growth
# ---------------------------------------------------------------------------

def _astar_window(a: Point, b: Point, idx: RangeIndex,
                  box: Rect) -> Optional[list[Segment]]:
    ids = idx.rect_overlaps(box)
    xs = {a.x, b.x, box.x0, box.x1}
    ys = {a.y, b.y, box.y0, box.y1}
    for i in ids:
        r = idx.obstacles[i]
        xs.update((max(box.x0, min(box.x1, r.x0)), max(box.x0, min(box.x1, r.x1))))
        ys.update((max(box.y0, min(box.y1, r.y0)), max(box.y0, min(box.y1, r.y1))))
    xs = sorted(xs)
    ys = sorted(ys)
    ai, aj = bisect_left(xs, a.x), bisect_left(ys, a.y)
    bi, bj = bisect_left(xs, b.x), bisect_left(ys, b.y)
    start, goal = (ai, aj), (bi, bj)
    gscore = {start: 0}
    came: dict[tuple[int, int], tuple[int, int]] = {}
    heap = [(manhattan(a, b), 0, start)]
    legal_cache: dict[tuple, bool] = {}

    def legal(p: Point, q: Point) -> bool:
        key = (p, q)
        hit = legal_cache.get(key)
        if hit is None:
            hit = not idx.crossing_obstacles(Segment(p, q))
            legal_cache[key] = hit
        return hit

    while heap:
        f, g, node = heapq.heappop(heap)
        if g > gscore.get(node, 1 << 60):
            continue
        if node == goal:
            path = [node]
            while path[-1] != start:
                path.append(came[path[-1]])
            path.reverse()
            pts = [Point(xs[i], ys[j]) for i, j in path]
            segs: list[Segment] = []
            for p, q in zip(pts, pts[1:]):
                if segs and ((segs[-1].a.x == segs[-1].b.x == p.x == q.x)
                             or (segs[-1].a.y == segs[-1].b.y == p.y == q.y)):
                    segs[-1] = Segment(segs[-1].a, q)
                else:
                    segs.append(Segment(p, q))
            return segs
        i, j = node
        p = Point(xs[i], ys[j])
        for ni, nj in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if not (0 <= ni < len(xs) and 0 <= nj < len(ys)):
                continue
            q = Point(xs[ni], ys[nj])
            if not legal(p, q):
                continue
            ng = g + manhattan(p, q)
            if ng < gscore.get((ni, nj), 1 << 60):
                gscore[(ni, nj)] = ng
                came[(ni, nj)] = node
                heapq.heappush(heap, (ng + manhattan(q, b), ng, (ni, nj)))
    return None


def _escape_route(a: Point, b: Point, idx: RangeIndex,
                  seed_box: Rect) -> list[Segment]:
    box = bounding_rect(points=[a, b], rects=[seed_box])
    for scale in (1, 2, 4):
        w = max(box.width, 2) * scale
        h = max(box.height, 2) * scale
        cx, cy = (box.x0 + box.x1) // 2, (box.y0 + box.y1) // 2
        window = Rect(cx - w, cy - h, cx + w, cy + h)
        window = bounding_rect(points=[a, b], rects=[window])
        segs = _astar_window(a, b, idx, window)
        if segs is not None:
            return segs
    if idx.obstacles:
        full = bounding_rect(points=[a, b], rects=idx.obstacles)
        segs = _astar_window(a, b, idx, full)
        if segs is not None:
            return segs
    raise InfeasibleEdge(f"no legal path from {tuple(a)} to {tuple(b)}")


# ---------------------------------------------------------------------------
# post-processing
# ---------------------------------------------------------------------------

def _merge_runs_touching(items):
    by_line: dict[int, list[list[int]]] = {}
    for line, lo, hi in items:
        by_line.setdefault(line, []).append([lo, hi])
    for line, runs in by_line.items():
        runs.sort()
        merged = [runs[0]]
        for lo, hi in runs[1:]:
            if lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        by_line[line] = merged
    return by_line


def _planarize(segments: Sequence[Segment], pins: Sequence[Point]) -> list[tuple[Point, Point]]:
    """Merge collinear overlaps, then split every run at pins and crossings."""
    hs, vs = [], []
    for s in segments:
        (ax, ay), (bx, by) = s
        if ay == by and ax != bx:
            hs.append((ay, min(ax, bx), max(ax, bx)))
        elif ax == bx and ay != by:
            vs.append((ax, min(ay, by), max(ay, by)))
    h_runs = _merge_runs_touching(hs)
    v_runs = _merge_runs_touching(vs)
    h_cuts: dict[tuple[int, int, int], set[int]] = {}
    v_cuts: dict[tuple[int, int, int], set[int]] = {}

    def _h_run_at(y: int, x: int):
        runs = h_runs.get(y)
        if not runs:
            return None
        k = bisect_right([r[0] for r in runs], x) - 1
        if k >= 0 and runs[k][1] >= x:
            return (y, runs[k][0], runs[k][1])
        return None

    def _v_run_at(x: int, y: int):
        runs = v_runs.get(x)
        if not runs:
            return None
        k = bisect_right([r[0] for r in runs], y) - 1
        if k >= 0 and runs[k][1] >= y:
            return (x, runs[k][0], runs[k][1])
        return None

    h_ys = sorted(h_runs)
    for x, runs in sorted(v_runs.items()):
        for lo, hi in runs:
            vk = (x, lo, hi)
            for y in h_ys[bisect_left(h_ys, lo):bisect_right(h_ys, hi)]:
                hk = _h_run_at(y, x)
                if hk is not None:
                    h_cuts.setdefault(hk, set()).add(x)
                    v_cuts.setdefault(vk, set()).add(y)
    for p in pins:
        hk = _h_run_at(p.y, p.x)
        if hk is not None:
            h_cuts.setdefault(hk, set()).add(p.x)
        vk = _v_run_at(p.x, p.y)
        if vk is not None:
            v_cuts.setdefault(vk, set()).add(p.y)

    edges: list[tuple[Point, Point]] = []
    for y, runs in sorted(h_runs.items()):
        for lo, hi in runs:
            cuts = sorted({lo, hi} | h_cuts.get((y, lo, hi), set()))
            edges.extend((Point(p, y), Point(q, y)) for p, q in zip(cuts, cuts[1:]))
    for x, runs in sorted(v_runs.items()):
        for lo, hi in runs:
            cuts = sorted({lo, hi} | v_cuts.get((x, lo, hi), set()))
            edges.extend((Point(x, p), Point(x, q)) for p, q in zip(cuts, cuts[1:]))
    return edges


def _post_segments(segments: Sequence[Segment], pins: Sequence[Point]) -> RectTree:
    pinset = {Point(*p) for p in pins}
    edges = _planarize(segments, sorted(pinset))

    # cycle break: minimum spanning forest keeps connectivity and removes
    # the longest edge on every cycle
    parent: dict[Point, Point] = {}

    def find(p: Point) -> Point:
        root = p
        while parent.setdefault(root, root) != root:
            root = parent[root]
        while parent[p] != root:
            parent[p], p = root, parent[p]
        return root

    adj: Adj = {}
    for a, b in sorted(edges, key=lambda e: (manhattan(*e), e)):
        ra, rb = find(a), find(b)
        if ra == rb:
            continue  # would close a cycle; this is the longest edge on it
        parent[ra] = rb
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)

    # prune non-pin stubs
    stubs = deque(p for p in adj if len(adj[p]) <= 1 and p not in pinset)
    while stubs:
        p = stubs.popleft()
        nbrs = adj.pop(p, None)
        if nbrs is None:
            continue
        for q in nbrs:
            adj[q].discard(p)
            if len(adj[q]) <= 1 and q not in pinset:
                stubs.append(q)

    # splice collinear pass-through nodes
    again = True
    while again:
        again = False
        for p in sorted(adj):
            nbrs = adj.get(p)
            if nbrs is None or len(nbrs) != 2 or p in pinset:
                continue
            q, r = sorted(nbrs)
            if (q.x == p.x == r.x) or (q.y == p.y == r.y):
                adj.pop(p)
                adj[q].discard(p)
                adj[r].discard(p)
                adj[q].add(r)
                adj[r].add(q)
                again = True
    return tree_from_adj(adj, pinset)


def post_process(tree: RectTree) -> RectTree:
    """Prune dangling stubs, merge overlapped edges, break any cycles."""
    return _post_segments(tree.segments(), tree.pins())


# ---------------------------------------------------------------------------
# orchestrator
# ---------------------------------------------------------------------------

def oarsmt_generate(pins: Sequence[Point], obstacles: Sequence[Rect],
                    params: OarsmtParams | None = None) -> RectTree:
    """Legal obstacle-avoiding rectilinear Steiner tree over the pins.

    With enhanced rules on, the rule-based tree replaces the plain one only
    when it is strictly shorter, so enabling rules never worsens a result.
    """
    if params is None:
        params = OarsmtParams()
    pins = [Point(*p) for p in pins]
    if len(pins) < 2:
        raise ValueError("need at least 2 pins")
    if len(set(pins)) != len(pins):
        raise ValueError("pins must be pairwise distinct")
    idx = RangeIndex.build(obstacles)
    for p in pins:
        if idx.point_inside(p) is not None:
            raise PinInsideObstacle(f"pin {tuple(p)} strictly inside an obstacle")

    topo = seed_topology(pins, "heuristic")
    rt = rectilinearize(topo, params.seed)
    base_segments = rt.segments()
    plain = _generate_once(pins, base_segments, idx,
                           OarsmtParams(params.k_l, params.k_m, params.seed,
                                        params.repair_depth, False))
    if not params.enhanced_rules:
        return plain
    ruled = _generate_once(pins, base_segments, idx, params)
    return ruled if ruled.wirelength() < plain.wirelength() else plain


def _generate_once(pins: list[Point], base_segments: Sequence[Segment],
                   idx: RangeIndex, params: OarsmtParams) -> RectTree:
    adj = adj_of_segments(base_segments)
    initial_keys = []
    seen = set()
    for s in base_segments:
        if s.a == s.b:
            continue
        k = _key(s.a, s.b)
        if k not in seen:
            seen.add(k)
            initial_keys.append(k)
    created = legalize_adj(adj, idx)
    for s in created:
        k = _key(s.a, s.b)
        if k not in seen:
            seen.add(k)
            initial_keys.append(k)

    queue: deque[tuple[EdgeKey, int]] = deque((k, 0) for k in initial_keys)
    pop_cap = params.repair_depth * max(1, len(initial_keys))
    crossing_pops = 0
    pinset = frozenset(pins)

    def _apply(fix_removed: list[EdgeKey], new_segments: Sequence[Segment],
               depth: int) -> None:
        for p, q in fix_removed:
            if q in adj.get(p, ()):
                adj[p].discard(q)
                adj[q].discard(p)
        for s in new_segments:
            if s.a == s.b:
                continue
            if s.b in adj.get(s.a, ()):
                continue
            adj.setdefault(s.a, set()).add(s.b)
            adj.setdefault(s.b, set()).add(s.a)
            queue.append((_key(s.a, s.b), depth + 1))

    while queue:
        key, depth = queue.popleft()
        p, q = key
        if q not in adj.get(p, ()):
            continue
        if not idx.crossing_obstacles(Segment(p, q)):
            continue
        crossing_pops += 1
        fix: Optional[EdgeFix] = None
        if depth < params.repair_depth and crossing_pops <= pop_cap:
            cand = candidate_obstacles(Segment(p, q), idx)
            fix = update_edge_with_rules(adj, Segment(p, q), cand, idx,
                                         params, pinset)
        if fix is None:
            cand = candidate_obstacles(Segment(p, q), idx)
            segs = _escape_route(p, q, idx, cand.bbox)
            fix = EdgeFix([key], segs)
            _apply(fix.removed, fix.segments, params.repair_depth)  # final
        else:
            _apply(fix.removed, fix.segments, depth)

    # safety sweep: everything left must already be legal
    for p in sorted(adj):
        for q in sorted(adj[p]):
            if p < q and idx.crossing_obstacles(Segment(p, q)):
                segs = _escape_route(p, q, idx, bounding_rect(points=[p, q]))
                _apply([(p, q)], segs, params.repair_depth)

    segments = [Segment(p, q) for p in adj for q in adj[p] if p < q]
    tree = _post_segments(segments, pins)
    return tree
