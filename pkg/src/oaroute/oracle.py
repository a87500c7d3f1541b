"""Independent ground-truth engines.

Everything here is deliberately redundant with the fast paths elsewhere:
naive O(n) geometry scans mirror the range-list index, the legality checker
re-derives tree structure from raw segments, and the exact OARSMT solver is
a terminal-subset dynamic program over the extended Hanan grid. Acceptance
tests trust this module, not the code under test.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import (DOWN, LEFT, RIGHT, UP, Point, PointLoc, Ray, Rect,
                       Segment, SegRect, point_in_rect, rect_meets_closed,
                       seg_vs_rect)


class TooLarge(ValueError):
    """Instance exceeds the exact solver's terminal or grid limits."""


# ---------------------------------------------------------------------------
# naive query mirror of obstacle_index
# ---------------------------------------------------------------------------

class NaiveQueries:
    """O(n)-per-query reference semantics for the range-list index."""

    def __init__(self, obstacles: Sequence[Rect]):
        self.obstacles = [Rect(*r) for r in obstacles]

    def crossing_obstacles(self, s: Segment) -> list[int]:
        hits = [oid for oid, r in enumerate(self.obstacles)
                if seg_vs_rect(s, r) is SegRect.CROSSES_INTERIOR]
        (ax, ay), (bx, by) = s
        if ay == by:
            hits.sort(key=lambda oid: self.obstacles[oid].x0,
                      reverse=ax > bx)
        else:
            hits.sort(key=lambda oid: self.obstacles[oid].y0,
                      reverse=ay > by)
        return hits

    def first_blocking(self, ray: Ray, stop: int) -> Optional[tuple[int, Segment]]:
        (ox, oy), d = ray
        best = None
        for oid, (x0, y0, x1, y1) in enumerate(self.obstacles):
            if d in (DOWN, UP):
                if not x0 < ox < x1:
                    continue
                lo, hi, pos = y0, y1, oy
            else:
                if not y0 < oy < y1:
                    continue
                lo, hi, pos = x0, x1, ox
            if d in (DOWN, LEFT):
                if lo < pos and hi > stop and (best is None or lo > best[0]):
                    best = (lo, oid, hi)
            else:
                if hi > pos and lo < stop and (best is None or lo < best[0]):
                    best = (lo, oid, lo)
        if best is None:
            return None
        _, oid, enter = best
        x0, y0, x1, y1 = self.obstacles[oid]
        if d in (DOWN, UP):
            return oid, Segment(Point(x0, enter), Point(x1, enter))
        return oid, Segment(Point(enter, y0), Point(enter, y1))

    def rect_overlaps(self, b: Rect) -> list[int]:
        return sorted(oid for oid, r in enumerate(self.obstacles)
                      if rect_meets_closed(r, b))

    def point_inside(self, p: Point) -> Optional[int]:
        for oid, r in enumerate(self.obstacles):
            if point_in_rect(p, r) is PointLoc.INTERIOR:
                return oid
        return None


# ---------------------------------------------------------------------------
# legality checker
# ---------------------------------------------------------------------------

@dataclass
class LegalityReport:
    violating_edges: list[Segment] = field(default_factory=list)
    violating_nodes: list[Point] = field(default_factory=list)
    connected: bool = True
    acyclic: bool = True
    spans_pins: bool = True
    missing_pins: list[Point] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (not self.violating_edges and not self.violating_nodes
                and self.connected and self.acyclic and self.spans_pins)


def _segments_of(tree) -> list[Segment]:
    if hasattr(tree, "segments"):
        return list(tree.segments())
    return [Segment(Point(*s[0]), Point(*s[1])) for s in tree]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> bool:
        """Returns False if a and b were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


def _merge_runs(items: list[tuple[int, int, int]]) -> dict[int, list[tuple[int, int]]]:
    """Group (line, lo, hi) into per-line unions of touching/overlapping runs."""
    by_line: dict[int, list[tuple[int, int]]] = {}
    for line, lo, hi in items:
        by_line.setdefault(line, []).append((lo, hi))
    for line, runs in by_line.items():
        runs.sort()
        merged = [runs[0]]
        for lo, hi in runs[1:]:
            if lo <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((lo, hi))
        by_line[line] = merged
    return by_line


def check_legality(tree, obstacles: Sequence[Rect],
                   pins: Sequence[Point] | None = None) -> LegalityReport:
    """Exhaustively check every segment and node against every obstacle,
    plus tree structure (connected, acyclic, spans all pins)."""
    segs = _segments_of(tree)
    obstacles = [Rect(*r) for r in obstacles]
    if pins is None:
        pins = list(tree.pins()) if hasattr(tree, "pins") else []
    pins = [Point(*p) for p in pins]
    report = LegalityReport()

    nodes = sorted({s.a for s in segs} | {s.b for s in segs} | set(pins))
    if obstacles:
        ob = np.asarray([tuple(r) for r in obstacles], dtype=np.int64)
        x0, y0, x1, y1 = ob[:, 0], ob[:, 1], ob[:, 2], ob[:, 3]
        for s in segs:
            (ax, ay), (bx, by) = s
            lo_x, hi_x = min(ax, bx), max(ax, bx)
            lo_y, hi_y = min(ay, by), max(ay, by)
            crossed = ((y0 < hi_y) & (y1 > lo_y) & (x0 < hi_x) & (x1 > lo_x))
            if crossed.any():
                report.violating_edges.append(s)
        for p in nodes:
            inside = ((x0 < p[0]) & (x1 > p[0]) & (y0 < p[1]) & (y1 > p[1]))
            if inside.any():
                report.violating_nodes.append(p)

    # structure: merge collinear runs, then union runs at crossings
    hs = [(s.a.y, min(s.a.x, s.b.x), max(s.a.x, s.b.x))
          for s in segs if s.horizontal and s.length() > 0]
    vs = [(s.a.x, min(s.a.y, s.b.y), max(s.a.y, s.b.y))
          for s in segs if s.vertical and s.length() > 0]
    h_runs = _merge_runs(hs)
    v_runs = _merge_runs(vs)
    h_ids: dict[tuple[int, int, int], int] = {}
    for y, runs in h_runs.items():
        for lo, hi in runs:
            h_ids[(y, lo, hi)] = len(h_ids)
    v_ids: dict[tuple[int, int, int], int] = {}
    base = len(h_ids)
    for x, runs in v_runs.items():
        for lo, hi in runs:
            v_ids[(x, lo, hi)] = base + len(v_ids)
    n_runs = base + len(v_ids)
    uf = _UnionFind(n_runs + len(pins))

    h_ys = sorted(h_runs)
    for (x, runs) in sorted(v_runs.items()):
        for lo, hi in runs:
            vid = v_ids[(x, lo, hi)]
            for y in h_ys[bisect_left(h_ys, lo):bisect_right(h_ys, hi)]:
                row = h_runs[y]
                starts = [r[0] for r in row]
                k = bisect_right(starts, x) - 1
                if k >= 0 and row[k][1] >= x:
                    hid = h_ids[(y, row[k][0], row[k][1])]
                    if not uf.union(vid, hid):
                        report.acyclic = False

    def _attach_point(p: Point) -> Optional[int]:
        x, y = p
        row = h_runs.get(y)
        if row:
            starts = [r[0] for r in row]
            k = bisect_right(starts, x) - 1
            if k >= 0 and row[k][1] >= x:
                return h_ids[(y, row[k][0], row[k][1])]
        col = v_runs.get(x)
        if col:
            starts = [r[0] for r in col]
            k = bisect_right(starts, y) - 1
            if k >= 0 and col[k][1] >= y:
                return v_ids[(x, col[k][0], col[k][1])]
        return None

    for i, p in enumerate(pins):
        rid = _attach_point(p)
        if rid is None:
            if len(pins) > 1 or n_runs > 0:
                report.missing_pins.append(p)
        else:
            uf.union(n_runs + i, rid)
    if report.missing_pins:
        report.spans_pins = False

    roots = {uf.find(r) for r in range(n_runs)}
    roots |= {uf.find(n_runs + i) for i, p in enumerate(pins)
              if p not in report.missing_pins}
    report.connected = len(roots) <= 1
    return report


# ---------------------------------------------------------------------------
# exact OARSMT on the extended Hanan grid (Dreyfus-Wagner)
# ---------------------------------------------------------------------------

class GridGraph2D:
    """Extended Hanan grid with obstacle-blocked edges removed."""

    def __init__(self, pins: Sequence[Point], obstacles: Sequence[Rect],
                 bound: Rect):
        xs = {p[0] for p in pins} | {bound.x0, bound.x1}
        ys = {p[1] for p in pins} | {bound.y0, bound.y1}
        for r in obstacles:
            xs.update((r.x0, r.x1))
            ys.update((r.y0, r.y1))
        self.xs = sorted(x for x in xs if bound.x0 <= x <= bound.x1)
        self.ys = sorted(y for y in ys if bound.y0 <= y <= bound.y1)
        self.obstacles = [Rect(*r) for r in obstacles]
        nx, ny = len(self.xs), len(self.ys)
        self.n_nodes = nx * ny
        naive = NaiveQueries(self.obstacles)
        self.adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n_nodes)]
        for j, y in enumerate(self.ys):
            for i, x in enumerate(self.xs):
                v = j * nx + i
                if i + 1 < nx:
                    s = Segment(Point(x, y), Point(self.xs[i + 1], y))
                    if not naive.crossing_obstacles(s):
                        w = self.xs[i + 1] - x
                        self.adj[v].append((v + 1, w))
                        self.adj[v + 1].append((v, w))
                if j + 1 < ny:
                    s = Segment(Point(x, y), Point(x, self.ys[j + 1]))
                    if not naive.crossing_obstacles(s):
                        w = self.ys[j + 1] - y
                        self.adj[v].append((v + nx, w))
                        self.adj[v + nx].append((v, w))

    def node_of(self, p: Point) -> int:
        i = bisect_left(self.xs, p[0])
        j = bisect_left(self.ys, p[1])
        if i >= len(self.xs) or self.xs[i] != p[0] or \
                j >= len(self.ys) or self.ys[j] != p[1]:
            raise ValueError(f"{p} is not a grid point")
        return j * len(self.xs) + i

    def point_of(self, v: int) -> Point:
        nx = len(self.xs)
        return Point(self.xs[v % nx], self.ys[v // nx])


_INF = 1 << 60


def optimal_oarsmt(pins: Sequence[Point], obstacles: Sequence[Rect],
                   bound: Rect) -> tuple[int, list[Segment]]:
    """Exact minimum obstacle-avoiding rectilinear Steiner tree.

    Optimal over the extended Hanan grid of pins, obstacle corners and the
    bounding rect, which contains an optimum by the standard Hanan argument.
    """
    pins = [Point(*p) for p in sorted(set(map(tuple, pins)))]
    if len(pins) > 8:
        raise TooLarge(f"{len(pins)} pins > 8")
    g = GridGraph2D(pins, [Rect(*r) for r in obstacles], Rect(*bound))
    if len(g.xs) > 32 or len(g.ys) > 32:
        raise TooLarge(f"grid {len(g.xs)}x{len(g.ys)} exceeds 32x32")
    if len(pins) == 1:
        return 0, []

    terms = [g.node_of(p) for p in pins]
    root = terms[-1]
    rest = terms[:-1]
    t = len(rest)
    full = (1 << t) - 1
    V = g.n_nodes
    dp = [[_INF] * V for _ in range(full + 1)]
    back: list[list] = [[None] * V for _ in range(full + 1)]

    def _relax(mask: int) -> None:
        row = dp[mask]
        brow = back[mask]
        heap = [(c, v) for v, c in enumerate(row) if c < _INF]
        heapq.heapify(heap)
        while heap:
            c, v = heapq.heappop(heap)
            if c > row[v]:
                continue
            for u, w in g.adj[v]:
                nc = c + w
                if nc < row[u]:
                    row[u] = nc
                    brow[u] = ("edge", v)
                    heapq.heappush(heap, (nc, u))

    for i in range(t):
        dp[1 << i][rest[i]] = 0
        _relax(1 << i)
    for mask in range(1, full + 1):
        if mask & (mask - 1) == 0:
            continue
        row = dp[mask]
        brow = back[mask]
        sub = (mask - 1) & mask
        while sub:
            other = mask ^ sub
            if sub < other:  # each split once
                a, b = dp[sub], dp[other]
                for v in range(V):
                    c = a[v] + b[v]
                    if c < row[v]:
                        row[v] = c
                        brow[v] = ("split", sub)
            sub = (sub - 1) & mask
        _relax(mask)

    weight = dp[full][root]
    edges: list[tuple[int, int]] = []
    stack = [(full, root)]
    while stack:
        mask, v = stack.pop()
        step = back[mask][v]
        if step is None:
            continue
        kind, arg = step
        if kind == "edge":
            edges.append((arg, v))
            stack.append((mask, arg))
        else:
            stack.append((arg, v))
            stack.append((mask ^ arg, v))

    segs = _merge_unit_edges(g, edges)
    return weight, segs


def _merge_unit_edges(g: GridGraph2D, edges: list[tuple[int, int]]) -> list[Segment]:
    hs, vs = [], []
    for u, v in set(map(lambda e: tuple(sorted(e)), edges)):
        pu, pv = g.point_of(u), g.point_of(v)
        if pu.y == pv.y:
            hs.append((pu.y, min(pu.x, pv.x), max(pu.x, pv.x)))
        else:
            vs.append((pu.x, min(pu.y, pv.y), max(pu.y, pv.y)))
    out = []
    for y, runs in sorted(_merge_runs(hs).items()):
        out.extend(Segment(Point(lo, y), Point(hi, y)) for lo, hi in runs)
    for x, runs in sorted(_merge_runs(vs).items()):
        out.extend(Segment(Point(x, lo), Point(x, hi)) for lo, hi in runs)
    return out
