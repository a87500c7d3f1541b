import random
import time

import pytest

from oaroute.geometry import DOWN, LEFT, RIGHT, UP, Point, Ray, Rect, Segment
from oaroute.obstacle_index import OverlappingObstacles, RangeIndex, RangePair
from oaroute.oracle import NaiveQueries


def seg(ax, ay, bx, by):
    return Segment(Point(ax, ay), Point(bx, by))


# Layout mirroring the paper's range-list walkthrough: row y=1 sees b0 and b1,
# row y=2 additionally sees b2, and b3 sits so that only the grid line through
# its center can discover it inside a query box.
FIG_OBSTACLES = [
    Rect(0, 0, 3, 4),   # b0
    Rect(4, 0, 5, 3),   # b1
    Rect(7, 1, 8, 3),   # b2
    Rect(2, 5, 4, 7),   # b3
]


class TestBuild:
    def test_row_range_pairs(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        assert idx.row_pairs(1) == [RangePair(0, 3, 0), RangePair(4, 5, 1)]
        assert idx.row_pairs(2) == [RangePair(0, 3, 0), RangePair(4, 5, 1),
                                    RangePair(7, 8, 2)]

    def test_empty(self):
        idx = RangeIndex.build([])
        assert idx.row_pairs(0) == []
        assert idx.crossing_obstacles(seg(0, 0, 50, 0)) == []
        assert idx.rect_overlaps(Rect(0, 0, 9, 9)) == []

    def test_single_obstacle_against_naive_scan(self):
        idx = RangeIndex.build([Rect(2, 2, 4, 6)])
        naive = NaiveQueries([Rect(2, 2, 4, 6)])
        assert 3 in idx.grid_xs  # obstacle center coordinate
        for x in range(0, 7):
            assert idx.col_pairs(x) == (
                [RangePair(2, 6, 0)] if 2 < x < 4 else [])
            s = seg(x, -1, x, 9)
            assert idx.crossing_obstacles(s) == naive.crossing_obstacles(s)
        for y in range(0, 9):
            assert idx.row_pairs(y) == (
                [RangePair(2, 4, 0)] if 2 < y < 6 else [])

    def test_overlap_rejected(self):
        with pytest.raises(OverlappingObstacles):
            RangeIndex.build([Rect(0, 0, 4, 4), Rect(3, 3, 6, 6)])

    def test_touching_boundaries_allowed(self):
        idx = RangeIndex.build([Rect(0, 0, 4, 4), Rect(4, 0, 6, 6)])
        assert idx.crossing_obstacles(seg(-1, 2, 9, 2)) == [0, 1]

    def test_zero_area_rejected(self):
        with pytest.raises(ValueError):
            RangeIndex.build([Rect(1, 1, 1, 5)])

    def test_build_is_pure(self):
        a = RangeIndex.build(FIG_OBSTACLES)
        b = RangeIndex.build(FIG_OBSTACLES)
        assert a.grid_xs == b.grid_xs and a.grid_ys == b.grid_ys
        assert [a.row_pairs(y) for y in range(8)] == \
               [b.row_pairs(y) for y in range(8)]


class TestCrossing:
    def test_row_two_blockers(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        assert idx.crossing_obstacles(seg(1, 2, 6, 2)) == [0, 1]

    def test_order_follows_segment_direction(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        assert idx.crossing_obstacles(seg(6, 2, 1, 2)) == [1, 0]

    def test_boundary_segment_is_clear(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        assert idx.crossing_obstacles(seg(0, 4, 9, 4)) == []  # on b0's top
        assert idx.crossing_obstacles(seg(3, 0, 3, 4)) == []  # on b0's right

    def test_off_grid_coordinates(self):
        idx = RangeIndex.build([Rect(0, 0, 10, 10)])
        assert idx.crossing_obstacles(seg(-5, 7, 15, 7)) == [0]
        assert idx.crossing_obstacles(seg(3, 3, 3, 3)) == [0]  # point probe


class TestFirstBlocking:
    def test_ray_down_hits_top_boundary(self):
        idx = RangeIndex.build([Rect(-2, 2, 1, 3)])
        hit = idx.first_blocking(Ray(Point(0, 5), DOWN), 0)
        assert hit == (0, seg(-2, 3, 1, 3))

    def test_empty_space(self):
        idx = RangeIndex.build([Rect(-2, 2, 1, 3)])
        assert idx.first_blocking(Ray(Point(5, 5), DOWN), 0) is None

    def test_grazing_boundary_does_not_block(self):
        idx = RangeIndex.build([Rect(-2, 2, 1, 3)])
        assert idx.first_blocking(Ray(Point(1, 5), DOWN), 0) is None
        assert idx.first_blocking(Ray(Point(-2, 5), DOWN), 0) is None

    def test_stop_bounds_the_ray(self):
        idx = RangeIndex.build([Rect(-2, 2, 1, 3)])
        assert idx.first_blocking(Ray(Point(0, 5), DOWN), 4) is None
        assert idx.first_blocking(Ray(Point(0, 5), DOWN), 3) is None
        assert idx.first_blocking(Ray(Point(0, 5), DOWN), 2) is not None

    def test_all_four_directions(self):
        idx = RangeIndex.build([Rect(2, 2, 5, 5)])
        assert idx.first_blocking(Ray(Point(3, 9), DOWN), 0) == (0, seg(2, 5, 5, 5))
        assert idx.first_blocking(Ray(Point(3, -9), UP), 9) == (0, seg(2, 2, 5, 2))
        assert idx.first_blocking(Ray(Point(9, 3), LEFT), 0) == (0, seg(5, 2, 5, 5))
        assert idx.first_blocking(Ray(Point(-9, 3), RIGHT), 9) == (0, seg(2, 2, 2, 5))

    def test_nearest_of_several(self):
        idx = RangeIndex.build([Rect(0, 0, 4, 2), Rect(0, 4, 4, 6), Rect(0, 8, 4, 9)])
        hit = idx.first_blocking(Ray(Point(1, 7), DOWN), -5)
        assert hit is not None and hit[0] == 1


class TestRectOverlaps:
    def test_center_line_discovery(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        # b3's boundary rows (5 and 7) are outside the open extent; only the
        # center row discovers it.
        assert 3 in idx.rect_overlaps(Rect(1, 4, 6, 8))

    def test_disjoint_box(self):
        idx = RangeIndex.build(FIG_OBSTACLES)
        assert idx.rect_overlaps(Rect(40, 40, 50, 50)) == []

    def test_touching_box_excluded(self):
        idx = RangeIndex.build([Rect(0, 0, 4, 4)])
        assert idx.rect_overlaps(Rect(4, 0, 8, 4)) == []
        assert idx.rect_overlaps(Rect(3, 0, 8, 4)) == [0]


def _random_instance(rng, n, span=200):
    rects = []
    tries = 0
    while len(rects) < n and tries < 20000:
        tries += 1
        x0 = rng.randint(0, span - 2)
        y0 = rng.randint(0, span - 2)
        r = Rect(x0, y0, x0 + rng.randint(1, 12), y0 + rng.randint(1, 12))
        if all(not (r.x0 < o.x1 and o.x0 < r.x1 and r.y0 < o.y1 and o.y0 < r.y1)
               for o in rects):
            rects.append(r)
    return rects


class TestNaiveEquivalence:
    def test_randomized_queries_match_naive(self):
        rng = random.Random(42)
        for round_ in range(8):
            rects = _random_instance(rng, 40)
            idx = RangeIndex.build(rects)
            naive = NaiveQueries(rects)
            for _ in range(300):
                ax, ay = rng.randint(-5, 205), rng.randint(-5, 205)
                if rng.random() < 0.5:
                    s = seg(ax, ay, rng.randint(-5, 205), ay)
                else:
                    s = seg(ax, ay, ax, rng.randint(-5, 205))
                assert idx.crossing_obstacles(s) == naive.crossing_obstacles(s)
                bx0, by0 = rng.randint(-5, 200), rng.randint(-5, 200)
                b = Rect(bx0, by0, bx0 + rng.randint(0, 30), by0 + rng.randint(0, 30))
                assert idx.rect_overlaps(b) == naive.rect_overlaps(b)
                p = Point(rng.randint(-5, 205), rng.randint(-5, 205))
                assert idx.point_inside(p) == naive.point_inside(p)

    def test_first_blocking_matches_naive(self):
        rng = random.Random(11)
        rects = _random_instance(rng, 60)
        idx = RangeIndex.build(rects)
        naive = NaiveQueries(rects)
        dirs = [DOWN, UP, LEFT, RIGHT]
        checked = 0
        for _ in range(2000):
            p = Point(rng.randint(-5, 205), rng.randint(-5, 205))
            if naive.point_inside(p) is not None:
                continue
            d = rng.choice(dirs)
            if d in (DOWN, LEFT):
                stop = (p.y if d == DOWN else p.x) - rng.randint(0, 220)
            else:
                stop = (p.y if d == UP else p.x) + rng.randint(0, 220)
            assert idx.first_blocking(Ray(p, d), stop) == \
                naive.first_blocking(Ray(p, d), stop)
            checked += 1
        assert checked > 1000


@pytest.mark.slow
def test_query_time_scales_sublinearly():
    rng = random.Random(5)
    times = []
    for n in (1000, 2000, 4000, 8000):
        span = int((n * 160) ** 0.5) * 2
        rects = _random_instance(rng, n, span=span)
        assert len(rects) == n
        idx = RangeIndex.build(rects)
        queries = []
        q = random.Random(99)
        for _ in range(10000):
            ax, ay = q.randint(0, span), q.randint(0, span)
            if q.random() < 0.5:
                queries.append(seg(ax, ay, ax + q.randint(1, span // 4), ay))
            else:
                queries.append(seg(ax, ay, ax, ay + q.randint(1, span // 4)))
        t0 = time.perf_counter()
        for s in queries:
            idx.crossing_obstacles(s)
        times.append(time.perf_counter() - t0)
    for prev, cur in zip(times, times[1:]):
        assert cur / prev < 1.7, f"query time ratio {cur / prev:.2f} at {times}"
