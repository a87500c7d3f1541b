"""Sorted per-row/per-column obstacle range lists.

Replaces a general R-tree for the fixed, interior-disjoint obstacles of one
instance: built once, then segment-crossing, first-blocking and box-overlap
queries run in O(log n) against sorted range lists. Lists exist at every grid
coordinate (obstacle boundaries and centers) and for every open band between
consecutive coordinates, so queries at arbitrary integer coordinates are
answered exactly, not only on Hanan lines.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right, insort
from typing import NamedTuple, Optional, Sequence

from .geometry import (DOWN, LEFT, RIGHT, UP, Point, Ray, Rect, Segment)


class OverlappingObstacles(ValueError):
    """Two obstacle interiors intersect; the instance is malformed."""


class RangePair(NamedTuple):
    lo: int
    hi: int
    obstacle_id: int


class _Axis:
    """Range lists for one sweep axis (rows keyed by y, or columns by x)."""

    __slots__ = ("coords", "at", "band")

    def __init__(self, coords, at, band):
        self.coords = coords  # sorted grid coords (ints, plus .5 centers)
        self.at = at          # lists[i] for queries exactly at coords[i]
        self.band = band      # lists[i] for queries in (coords[i], coords[i+1])

    def lists(self, v):
        """(los, his, oids) of obstacles whose open extent contains v."""
        coords = self.coords
        i = bisect_left(coords, v)
        if i < len(coords) and coords[i] == v:
            return self.at[i]
        if i == 0 or i >= len(coords):
            return _EMPTY
        return self.band[i - 1]


_EMPTY = ((), (), ())


def _build_axis(spans: Sequence[tuple[int, int, int, int]]) -> _Axis:
    """spans: (key_lo, key_hi, perp_lo, perp_hi) per obstacle id (list index)."""
    starts: dict[float, list[int]] = {}
    ends: dict[float, list[int]] = {}
    coords_set: set[float] = set()
    for oid, (k0, k1, _, _) in enumerate(spans):
        starts.setdefault(k0, []).append(oid)
        ends.setdefault(k1, []).append(oid)
        c = (k0 + k1) / 2
        ci = (k0 + k1) // 2
        coords_set.update((k0, k1, ci if 2 * ci == k0 + k1 else c))
    coords = sorted(coords_set)
    active: list[tuple[int, int, int]] = []  # (perp_lo, perp_hi, oid) sorted
    at: list[tuple] = []
    band: list[tuple] = []
    for g in coords:
        for oid in ends.get(g, ()):
            _, _, p0, p1 = spans[oid]
            active.remove((p0, p1, oid))
        at.append(tuple(zip(*active)) if active else _EMPTY)
        for oid in starts.get(g, ()):
            _, _, p0, p1 = spans[oid]
            insort(active, (p0, p1, oid))
        band.append(tuple(zip(*active)) if active else _EMPTY)
    return _Axis(coords, at, band)


def _check_disjoint(axis: _Axis, obstacles) -> None:
    for lists in axis.at + axis.band:
        los, his, oids = lists
        for k in range(len(los) - 1):
            if his[k] > los[k + 1]:
                a, b = sorted((oids[k], oids[k + 1]))
                raise OverlappingObstacles(
                    f"obstacles {a} {tuple(obstacles[a])} and "
                    f"{b} {tuple(obstacles[b])} overlap")


class RangeIndex:
    """Immutable blocking-query structure over interior-disjoint obstacles."""

    __slots__ = ("obstacles", "_rows", "_cols")

    def __init__(self, obstacles: Sequence[Rect], rows: _Axis, cols: _Axis):
        self.obstacles = obstacles
        self._rows = rows
        self._cols = cols

    @classmethod
    def build(cls, obstacles: Sequence[Rect]) -> "RangeIndex":
        obstacles = [Rect(*r) for r in obstacles]
        for oid, r in enumerate(obstacles):
            if r.x0 >= r.x1 or r.y0 >= r.y1:
                raise ValueError(f"obstacle {oid} has no area: {tuple(r)}")
        rows = _build_axis([(r.y0, r.y1, r.x0, r.x1) for r in obstacles])
        cols = _build_axis([(r.x0, r.x1, r.y0, r.y1) for r in obstacles])
        _check_disjoint(rows, obstacles)
        return cls(obstacles, rows, cols)

    @property
    def grid_xs(self) -> list:
        return self._cols.coords

    @property
    def grid_ys(self) -> list:
        return self._rows.coords

    def row_pairs(self, y) -> list[RangePair]:
        """Range pairs of obstacles whose open y-extent contains y."""
        los, his, oids = self._rows.lists(y)
        return [RangePair(*t) for t in zip(los, his, oids)]

    def col_pairs(self, x) -> list[RangePair]:
        los, his, oids = self._cols.lists(x)
        return [RangePair(*t) for t in zip(los, his, oids)]

    # -- queries ---------------------------------------------------------

    def crossing_obstacles(self, s: Segment) -> list[int]:
        """Ids of obstacles whose interior s crosses, in order along s."""
        (ax, ay), (bx, by) = s
        if ay == by:
            lists = self._rows.lists(ay)
            lo, hi, rev = (ax, bx, False) if ax <= bx else (bx, ax, True)
        elif ax == bx:
            lists = self._cols.lists(ax)
            lo, hi, rev = (ay, by, False) if ay <= by else (by, ay, True)
        else:
            raise ValueError(f"segment is not axis-aligned: {s}")
        los, his, oids = lists
        out = []
        k = bisect_right(his, lo)
        while k < len(los) and los[k] < hi:
            out.append(oids[k])
            k += 1
        if rev:
            out.reverse()
        return out

    def first_blocking(self, ray: Ray, stop: int) -> Optional[tuple[int, Segment]]:
        """Nearest obstacle whose interior the ray enters before `stop`.

        Returns (obstacle_id, first crossed boundary) or None. Boundary
        grazing does not block. A ray origin strictly inside an obstacle
        reports that obstacle with its near-side boundary.
        """
        (ox, oy), d = ray
        if d in (DOWN, UP):
            los, his, oids = self._cols.lists(ox)
            pos = oy
        else:
            los, his, oids = self._rows.lists(oy)
            pos = ox
        if not los:
            return None
        if d in (DOWN, LEFT):
            k = bisect_left(los, pos) - 1
            if k < 0 or his[k] <= stop:
                return None
            oid = oids[k]
            enter = his[k]
        else:
            k = bisect_right(his, pos)
            if k >= len(los) or los[k] >= stop:
                return None
            oid = oids[k]
            enter = los[k]
        x0, y0, x1, y1 = self.obstacles[oid]
        if d in (DOWN, UP):
            return oid, Segment(Point(x0, enter), Point(x1, enter))
        return oid, Segment(Point(enter, y0), Point(enter, y1))

    def rect_overlaps(self, b: Rect) -> list[int]:
        """Ids of obstacles whose interior meets the closed box b.

        Sweeps the grid lines parallel to b's long boundary (including the
        two long boundaries themselves); obstacle-center lines guarantee no
        obstacle strictly inside b is missed.
        """
        x0, y0, x1, y1 = b
        found: set[int] = set()
        if y1 - y0 <= x1 - x0:
            axis, span_lo, span_hi, q_lo, q_hi = self._rows, y0, y1, x0, x1
        else:
            axis, span_lo, span_hi, q_lo, q_hi = self._cols, x0, x1, y0, y1
        coords = axis.coords
        i = bisect_left(coords, span_lo)
        j = bisect_right(coords, span_hi)
        lines = set(coords[i:j])
        lines.update((span_lo, span_hi))
        for g in sorted(lines):
            los, his, oids = axis.lists(g)
            k = bisect_right(his, q_lo)
            while k < len(los) and los[k] < q_hi:
                found.add(oids[k])
                k += 1
        return sorted(found)

    def point_inside(self, p: Point) -> Optional[int]:
        """Id of the obstacle strictly containing p, if any."""
        x, y = p
        los, his, oids = self._rows.lists(y)
        if not los:
            return None
        k = bisect_left(los, x) - 1
        if k >= 0 and his[k] > x:
            return oids[k]
        return None
