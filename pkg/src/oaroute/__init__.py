"""Obstacle-avoiding rectilinear Steiner trees and global routing."""

from .geometry import (Line, Point, PointLoc, Ray, Rect, Segment, SegRect,
                       dist_point_line, point_in_rect, seg_vs_rect)
from .obstacle_index import OverlappingObstacles, RangeIndex

__all__ = [
    "Line", "Point", "PointLoc", "Ray", "Rect", "Segment", "SegRect",
    "dist_point_line", "point_in_rect", "seg_vs_rect",
    "OverlappingObstacles", "RangeIndex",
]
