"""Axis-aligned geometry primitives and legality predicates.

All pin and obstacle coordinates are integers, so containment and crossing
tests are exact; only point-to-line distance returns a float. Wires touching
an obstacle boundary are legal, which is why every predicate distinguishes
boundary contact from interior crossing.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, NamedTuple


class Point(NamedTuple):
    x: int
    y: int


class Segment(NamedTuple):
    a: Point
    b: Point

    @classmethod
    def of(cls, ax: int, ay: int, bx: int, by: int) -> "Segment":
        return cls(Point(ax, ay), Point(bx, by))

    @property
    def horizontal(self) -> bool:
        return self.a.y == self.b.y

    @property
    def vertical(self) -> bool:
        return self.a.x == self.b.x

    @property
    def axis_aligned(self) -> bool:
        return self.horizontal or self.vertical

    def length(self) -> int:
        return abs(self.a.x - self.b.x) + abs(self.a.y - self.b.y)


class Rect(NamedTuple):
    """Axis-aligned rectangle with lo=(x0,y0) and hi=(x1,y1), x0<=x1, y0<=y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    @classmethod
    def of(cls, lo: Point, hi: Point) -> "Rect":
        return cls(lo[0], lo[1], hi[0], hi[1])

    @property
    def lo(self) -> Point:
        return Point(self.x0, self.y0)

    @property
    def hi(self) -> Point:
        return Point(self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def area(self) -> int:
        return self.width * self.height

    def corners(self) -> tuple[Point, Point, Point, Point]:
        return (Point(self.x0, self.y0), Point(self.x1, self.y0),
                Point(self.x1, self.y1), Point(self.x0, self.y1))

    def center(self) -> tuple[float, float]:
        return ((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)


LEFT = "left"
RIGHT = "right"
UP = "up"
DOWN = "down"
DIRS = (LEFT, RIGHT, UP, DOWN)

# unit steps per direction
DIR_STEP = {LEFT: (-1, 0), RIGHT: (1, 0), UP: (0, 1), DOWN: (0, -1)}


class Ray(NamedTuple):
    origin: Point
    dir: str


class Line(NamedTuple):
    """Infinite line through two distinct points; may be sloped."""

    p: Point
    q: Point


class SegRect(enum.Enum):
    DISJOINT = "disjoint"
    BOUNDARY_ONLY = "boundary_only"
    CROSSES_INTERIOR = "crosses_interior"


class PointLoc(enum.Enum):
    OUTSIDE = "outside"
    ON_BOUNDARY = "on_boundary"
    INTERIOR = "interior"


def manhattan(p: Point, q: Point) -> int:
    return abs(p[0] - q[0]) + abs(p[1] - q[1])


def seg_vs_rect(s: Segment, r: Rect) -> SegRect:
    """Classify an axis-aligned segment against a rectangle.

    CROSSES_INTERIOR iff the open interior of r meets the (closed) segment;
    BOUNDARY_ONLY iff the segment touches r only on its boundary.
    """
    (ax, ay), (bx, by) = s
    if ax > bx or (ax == bx and ay > by):
        ax, ay, bx, by = bx, by, ax, ay
    x0, y0, x1, y1 = r
    if ay == by:  # horizontal (covers zero-length as a point)
        if y0 < ay < y1 and bx > x0 and ax < x1:
            return SegRect.CROSSES_INTERIOR
        if y0 <= ay <= y1 and bx >= x0 and ax <= x1:
            return SegRect.BOUNDARY_ONLY
        return SegRect.DISJOINT
    if ax == bx:
        if x0 < ax < x1 and by > y0 and ay < y1:
            return SegRect.CROSSES_INTERIOR
        if x0 <= ax <= x1 and by >= y0 and ay <= y1:
            return SegRect.BOUNDARY_ONLY
        return SegRect.DISJOINT
    raise ValueError(f"segment is not axis-aligned: {s}")


def point_in_rect(p: Point, r: Rect) -> PointLoc:
    x, y = p
    x0, y0, x1, y1 = r
    if x0 < x < x1 and y0 < y < y1:
        return PointLoc.INTERIOR
    if x0 <= x <= x1 and y0 <= y <= y1:
        return PointLoc.ON_BOUNDARY
    return PointLoc.OUTSIDE


def line_cross_mag(l: Line, c: Point) -> int:
    """|cross(q-p, c-p)|: proportional to dist(c, line), exact in ints."""
    (px, py), (qx, qy) = l
    return abs((qx - px) * (c[1] - py) - (qy - py) * (c[0] - px))


def dist_point_line(c: Point, l: Line) -> float:
    """Perpendicular Euclidean distance from c to the infinite line l."""
    (px, py), (qx, qy) = l
    if (px, py) == (qx, qy):
        raise ValueError("line requires two distinct points")
    return line_cross_mag(l, c) / math.hypot(qx - px, qy - py)


def rects_interior_overlap(a: Rect, b: Rect) -> bool:
    """True iff the open interiors of a and b intersect."""
    return a.x0 < b.x1 and b.x0 < a.x1 and a.y0 < b.y1 and b.y0 < a.y1


def rect_meets_closed(obstacle: Rect, box: Rect) -> bool:
    """True iff the obstacle's open interior meets the closed box."""
    return (obstacle.x0 < box.x1 and obstacle.x1 > box.x0
            and obstacle.y0 < box.y1 and obstacle.y1 > box.y0
            and obstacle.x0 < obstacle.x1 and obstacle.y0 < obstacle.y1)


def bounding_rect(points: Iterable[Point] = (), rects: Iterable[Rect] = ()) -> Rect:
    xs: list[int] = []
    ys: list[int] = []
    for px, py in points:
        xs.append(px)
        ys.append(py)
    for x0, y0, x1, y1 in rects:
        xs.extend((x0, x1))
        ys.extend((y0, y1))
    if not xs:
        raise ValueError("bounding_rect of nothing")
    return Rect(min(xs), min(ys), max(xs), max(ys))
