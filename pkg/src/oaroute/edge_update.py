"""Extend-and-bend legalization of a single edge against obstacles.

The updater walks from the source toward the target along the original
edge's axis. Whenever the extension ray would enter an obstacle interior it
stops on the blocking boundary, bends to the boundary corner nearer the
reference line, and continues. The final connector back to the target may
still cross obstacles; callers re-queue it.

Also hosts node legalization: tree nodes strictly inside an obstacle are
replaced by the shortest run of boundary edges connecting every point where
the tree pierces that obstacle.
"""

from __future__ import annotations

import enum
import heapq
from bisect import bisect_left
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import (DOWN, LEFT, RIGHT, UP, Line, Point, Rect, Segment,
                       line_cross_mag, rects_interior_overlap)
from .obstacle_index import RangeIndex
from .rsmt_seed import CORNER, PIN, STEINER, RectTree


class UpdateStatus(enum.Enum):
    COMPLETE = "complete"
    ABORTED = "aborted"


@dataclass(frozen=True)
class EdgeUpdateRequest:
    n_s: Point
    n_t: Point
    l_r: Line
    obstacles: tuple[Rect, ...]  # candidate subset, usually resolved from a RangeIndex

    def __init__(self, n_s, n_t, l_r, obstacles):
        object.__setattr__(self, "n_s", Point(*n_s))
        object.__setattr__(self, "n_t", Point(*n_t))
        object.__setattr__(self, "l_r", Line(Point(*l_r[0]), Point(*l_r[1])))
        object.__setattr__(self, "obstacles", tuple(Rect(*r) for r in obstacles))


@dataclass
class EdgeUpdateResult:
    edges: list[Segment]
    status: UpdateStatus

    def wirelength(self) -> int:
        return sum(s.length() for s in self.edges)


class DisconnectedIntersections(RuntimeError):
    """An obstacle holds tree nodes but the tree never pierces its boundary."""


def _first_blocking(cur: Point, rdir: str, stop: int,
                    rects: Sequence[Rect]) -> Optional[tuple[int, int]]:
    """(rect index, entering boundary coordinate) of the nearest blocker."""
    cx, cy = cur
    best = None
    if rdir == DOWN:
        for k, (x0, y0, x1, y1) in enumerate(rects):
            if x0 < cx < x1 and y0 < cy and stop < y1 <= cy:
                if best is None or y1 > best[1]:
                    best = (k, y1)
    elif rdir == UP:
        for k, (x0, y0, x1, y1) in enumerate(rects):
            if x0 < cx < x1 and y1 > cy and cy <= y0 < stop:
                if best is None or y0 < best[1]:
                    best = (k, y0)
    elif rdir == LEFT:
        for k, (x0, y0, x1, y1) in enumerate(rects):
            if y0 < cy < y1 and x0 < cx and stop < x1 <= cx:
                if best is None or x1 > best[1]:
                    best = (k, x1)
    else:  # RIGHT
        for k, (x0, y0, x1, y1) in enumerate(rects):
            if y0 < cy < y1 and x1 > cx and cx <= x0 < stop:
                if best is None or x0 < best[1]:
                    best = (k, x0)
    return best


def _strictly_inside(p: Point, r: Rect) -> bool:
    return r.x0 < p.x < r.x1 and r.y0 < p.y < r.y1


def _overlap_cluster(rects: Sequence[Rect], seed: int) -> list[int]:
    cluster = {seed}
    frontier = [seed]
    while frontier:
        k = frontier.pop()
        for j, r in enumerate(rects):
            if j not in cluster and rects_interior_overlap(rects[k], r):
                cluster.add(j)
                frontier.append(j)
    return sorted(cluster)


def _union_walk(rects: list[Rect], start: Point, rdir: str,
                stop: int) -> Optional[tuple[list[Segment], Point]]:
    """Shortest boundary walk over the union of overlapping rects.

    Starts at a point on the union boundary and ends at the first point
    from which the extension ray toward `stop` clears the whole cluster.
    Returns None when the start is pocketed with no clear exit.
    """
    xs = sorted({r.x0 for r in rects} | {r.x1 for r in rects} | {start.x})
    ys = sorted({r.y0 for r in rects} | {r.y1 for r in rects} | {start.y})
    nx, ny = len(xs), len(ys)

    def covered(i: int, j: int) -> bool:
        if i < 0 or j < 0 or i >= nx - 1 or j >= ny - 1:
            return False
        cx0, cx1, cy0, cy1 = xs[i], xs[i + 1], ys[j], ys[j + 1]
        return any(r.x0 <= cx0 and r.x1 >= cx1 and r.y0 <= cy0 and r.y1 >= cy1
                   for r in rects)

    cov = [[covered(i, j) for j in range(ny - 1)] for i in range(nx - 1)]

    def cell(i: int, j: int) -> bool:
        return 0 <= i < nx - 1 and 0 <= j < ny - 1 and cov[i][j]

    def is_boundary_step(i: int, j: int, horizontal: bool) -> bool:
        # step from grid vertex (i,j) toward +x (horizontal) or +y
        if horizontal:
            return cell(i, j) != cell(i, j - 1)
        return cell(i, j) != cell(i - 1, j)

    si, sj = bisect_left(xs, start.x), bisect_left(ys, start.y)
    dist: dict[tuple[int, int], int] = {(si, sj): 0}
    prev: dict[tuple[int, int], tuple[int, int]] = {}
    heap: list[tuple[int, tuple[int, int]]] = [(0, (si, sj))]
    goal = None
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, 1 << 60):
            continue
        i, j = node
        p = Point(xs[i], ys[j])
        if node != (si, sj) and _first_blocking(p, rdir, stop, rects) is None:
            goal = node
            break
        for (ni, nj, horiz, at) in ((i + 1, j, True, (i, j)),
                                    (i - 1, j, True, (i - 1, j)),
                                    (i, j + 1, False, (i, j)),
                                    (i, j - 1, False, (i, j - 1))):
            if not (0 <= ni < nx and 0 <= nj < ny):
                continue
            if not is_boundary_step(at[0], at[1], horiz):
                continue
            w = abs(xs[ni] - xs[i]) + abs(ys[nj] - ys[j])
            nd = d + w
            if nd < dist.get((ni, nj), 1 << 60):
                dist[(ni, nj)] = nd
                prev[(ni, nj)] = node
                heapq.heappush(heap, (nd, (ni, nj)))
    if goal is None:
        return None
    path = [goal]
    while path[-1] != (si, sj):
        path.append(prev[path[-1]])
    path.reverse()
    pts = [Point(xs[i], ys[j]) for i, j in path]
    segs: list[Segment] = []
    for a, b in zip(pts, pts[1:]):
        if segs and ((segs[-1].a.x == segs[-1].b.x == a.x == b.x)
                     or (segs[-1].a.y == segs[-1].b.y == a.y == b.y)):
            segs[-1] = Segment(segs[-1].a, b)
        else:
            segs.append(Segment(a, b))
    return segs, pts[-1]


def _closer_corner(l_r: Line, c0: Point, c1: Point) -> Point:
    m0 = line_cross_mag(l_r, c0)
    m1 = line_cross_mag(l_r, c1)
    if m0 != m1:
        return c0 if m0 < m1 else c1
    return min(c0, c1)


def edge_update(req: EdgeUpdateRequest) -> EdgeUpdateResult:
    """Algorithm: repeatedly extend toward the target along the edge axis;
    on blocking, stop at the boundary and bend to the corner nearer l_r."""
    n_s, n_t = req.n_s, req.n_t
    if n_s == n_t:
        raise ValueError("source and target coincide")
    if n_s.x == n_t.x:
        rdir = UP if n_t.y > n_s.y else DOWN
        horizontal = False
        stop = n_t.y
    elif n_s.y == n_t.y:
        rdir = RIGHT if n_t.x > n_s.x else LEFT
        horizontal = True
        stop = n_t.x
    else:
        raise ValueError("edge must be axis-aligned")
    rects = list(req.obstacles)
    for r in rects:
        if _strictly_inside(n_s, r):
            raise ValueError(f"source {tuple(n_s)} strictly inside obstacle {tuple(r)}")

    out: list[Segment] = []

    def emit(a: Point, b: Point) -> None:
        if a != b:
            out.append(Segment(a, b))

    cur = n_s
    bends = 0
    budget = 4 * len(rects) + 8
    while True:
        pos = cur.x if horizontal else cur.y
        hit = None
        if (pos < stop) if rdir in (RIGHT, UP) else (pos > stop):
            hit = _first_blocking(cur, rdir, stop, rects)
        if hit is None:
            aligned = Point(n_t.x, cur.y) if horizontal else Point(cur.x, n_t.y)
            emit(cur, aligned)
            emit(aligned, n_t)
            return EdgeUpdateResult(out, UpdateStatus.COMPLETE)
        oid, enter = hit
        n_stop = Point(enter, cur.y) if horizontal else Point(cur.x, enter)
        emit(cur, n_stop)
        cur = n_stop
        cluster = _overlap_cluster(rects, oid)
        if len(cluster) == 1:
            x0, y0, x1, y1 = rects[oid]
            if horizontal:
                c0, c1 = Point(enter, y0), Point(enter, y1)
            else:
                c0, c1 = Point(x0, enter), Point(x1, enter)
            corner = _closer_corner(req.l_r, c0, c1)
            emit(cur, corner)
            cur = corner
            bends += 1
        else:
            walk = _union_walk([rects[k] for k in cluster], cur, rdir, stop)
            if walk is None:
                return EdgeUpdateResult(out, UpdateStatus.ABORTED)
            segs, cur = walk
            out.extend(segs)
            bends += max(1, len(segs))
        if bends > budget:
            return EdgeUpdateResult(out, UpdateStatus.ABORTED)


# ---------------------------------------------------------------------------
# node legalization
# ---------------------------------------------------------------------------

Adj = dict[Point, set[Point]]


def adj_of_segments(segments) -> Adj:
    adj: Adj = {}
    for s in segments:
        a, b = Point(*s[0]), Point(*s[1])
        if a == b:
            continue
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return adj


def tree_from_adj(adj: Adj, pins: set[Point]) -> RectTree:
    nodes = sorted(set(adj) | pins)
    ids = {p: i for i, p in enumerate(nodes)}
    roles = []
    for p in nodes:
        if p in pins:
            roles.append(PIN)
        elif len(adj.get(p, ())) >= 3:
            roles.append(STEINER)
        else:
            roles.append(CORNER)
    edges = sorted({(min(ids[a], ids[b]), max(ids[a], ids[b]))
                    for a in adj for b in adj[a]})
    return RectTree(nodes, roles, edges)


def _exit_point(u: Point, v: Point, b: Rect) -> Point:
    if u.x == v.x:
        return Point(u.x, b.y1 if v.y > u.y else b.y0)
    return Point(b.x1 if v.x > u.x else b.x0, u.y)


def _perimeter_pos(b: Rect, p: Point) -> int:
    w, h = b.width, b.height
    if p.y == b.y0 and b.x0 <= p.x <= b.x1:
        return p.x - b.x0
    if p.x == b.x1:
        return w + (p.y - b.y0)
    if p.y == b.y1:
        return w + h + (b.x1 - p.x)
    return 2 * w + h + (b.y1 - p.y)


def _perimeter_point(b: Rect, t: int) -> Point:
    w, h = b.width, b.height
    t %= 2 * (w + h)
    if t <= w:
        return Point(b.x0 + t, b.y0)
    t -= w
    if t <= h:
        return Point(b.x1, b.y0 + t)
    t -= h
    if t <= w:
        return Point(b.x1 - t, b.y1)
    t -= w
    return Point(b.x0, b.y1 - t)


def _perimeter_path(b: Rect, points: list[Point]) -> list[Segment]:
    """Shortest boundary run touching all points: perimeter minus the
    longest gap between cyclically consecutive points."""
    ts = sorted({_perimeter_pos(b, p) for p in points})
    if len(ts) <= 1:
        return []
    total = 2 * (b.width + b.height)
    gaps = [(ts[(i + 1) % len(ts)] - ts[i]) % total for i in range(len(ts))]
    drop = max(range(len(gaps)), key=lambda i: (gaps[i], -i))
    segs: list[Segment] = []
    corner_ts = (0, b.width, b.width + b.height, 2 * b.width + b.height)
    for i in range(len(ts)):
        if i == drop:
            continue
        t0, t1 = ts[i], ts[(i + 1) % len(ts)]
        if t1 < t0:
            t1 += total
        cuts = sorted({t0, t1} | {c + k * total for c in corner_ts for k in (0, 1)
                                  if t0 < c + k * total < t1})
        for a, c in zip(cuts, cuts[1:]):
            segs.append(Segment(_perimeter_point(b, a), _perimeter_point(b, c)))
    return segs


def legalize_adj(adj: Adj, idx: RangeIndex) -> list[Segment]:
    """Fix all nodes strictly inside obstacles, in place.

    Returns the newly created edges (the boundary runs and clipped stubs)
    so the caller can queue them for edge updating.
    """
    groups: dict[int, set[Point]] = {}
    for p in adj:
        oid = idx.point_inside(p)
        if oid is not None:
            groups.setdefault(oid, set()).add(p)
    created: list[Segment] = []
    for oid in sorted(groups):
        b = idx.obstacles[oid]
        sn = {p for p in groups[oid] if p in adj}
        if not sn:
            continue
        intersections: set[Point] = set()
        for u in sorted(sn):
            for v in sorted(adj[u]):
                adj[u].discard(v)
                adj[v].discard(u)
                if v in sn:
                    continue
                w = _exit_point(u, v, b)
                intersections.add(w)
                if w != v:
                    adj.setdefault(w, set()).add(v)
                    adj.setdefault(v, set()).add(w)
                    created.append(Segment(w, v))
        for u in sn:
            adj.pop(u, None)
        if not intersections:
            raise DisconnectedIntersections(
                f"nodes inside obstacle {oid} have no boundary crossing")
        for s in _perimeter_path(b, sorted(intersections)):
            a, c = s
            if c not in adj.get(a, ()):
                adj.setdefault(a, set()).add(c)
                adj.setdefault(c, set()).add(a)
                created.append(s)
    return created


def legalize_nodes(tree: RectTree, idx: RangeIndex) -> RectTree:
    """Public wrapper over the in-place adjacency version."""
    adj = adj_of_segments(tree.segments())
    pins = set(tree.pins())
    legalize_adj(adj, idx)
    return tree_from_adj(adj, pins)
