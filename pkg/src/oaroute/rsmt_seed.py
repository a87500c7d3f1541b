"""Obstacle-oblivious Steiner-tree seeds and their rectilinear form.

Stands in for a lookup-table wirelength estimator: an exact Hanan-grid
enumeration for tiny nets (useful as an optimality oracle) and an iterated
1-Steiner heuristic seeded from the rectilinear MST for everything else.
Both live behind the same entry point so a table-backed generator could be
swapped in later.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Point, Segment, manhattan

PIN = "pin"
STEINER = "steiner"
CORNER = "corner"


class TooManyPinsForExact(ValueError):
    """exact_small mode only enumerates nets with at most 6 pins."""


@dataclass
class Topology:
    """Connected acyclic link structure over pins and Steiner nodes."""

    nodes: list[Point]
    roles: list[str]
    links: list[tuple[int, int]]

    def wirelength(self) -> int:
        return sum(manhattan(self.nodes[i], self.nodes[j]) for i, j in self.links)


@dataclass
class RectTree:
    """Axis-aligned tree: nodes with roles, edges as node-id pairs."""

    nodes: list[Point]
    roles: list[str]
    edges: list[tuple[int, int]]

    def segments(self) -> list[Segment]:
        return [Segment(self.nodes[i], self.nodes[j]) for i, j in self.edges]

    def pins(self) -> list[Point]:
        return [p for p, r in zip(self.nodes, self.roles) if r == PIN]

    def wirelength(self) -> int:
        return sum(manhattan(self.nodes[i], self.nodes[j]) for i, j in self.edges)


def _mst_links(points: Sequence[Point]) -> list[tuple[int, int]]:
    """Prim over Manhattan distances; numpy above a small size cutoff."""
    n = len(points)
    if n <= 1:
        return []
    if n > 64:
        xs = np.fromiter((p[0] for p in points), dtype=np.int64, count=n)
        ys = np.fromiter((p[1] for p in points), dtype=np.int64, count=n)
        dist = np.abs(xs - xs[0]) + np.abs(ys - ys[0])
        parent = np.zeros(n, dtype=np.int64)
        in_tree = np.zeros(n, dtype=bool)
        in_tree[0] = True
        dist[0] = np.iinfo(np.int64).max
        links = []
        for _ in range(n - 1):
            v = int(np.argmin(np.where(in_tree, np.iinfo(np.int64).max, dist)))
            links.append((int(parent[v]), v))
            in_tree[v] = True
            nd = np.abs(xs - xs[v]) + np.abs(ys - ys[v])
            closer = (nd < dist) & ~in_tree
            dist[closer] = nd[closer]
            parent[closer] = v
        return links
    best = [10 ** 9] * n
    parent = [0] * n
    seen = [False] * n
    best[0] = 0
    links = []
    for _ in range(n):
        v = min((b, i) for i, b in enumerate(best) if not seen[i])[1]
        seen[v] = True
        if v:
            links.append((parent[v], v))
        for u in range(n):
            if not seen[u]:
                d = manhattan(points[v], points[u])
                if d < best[u]:
                    best[u] = d
                    parent[u] = v
    return links


def _mst_length(points: Sequence[Point]) -> int:
    n = len(points)
    best = [10 ** 9] * n
    seen = [False] * n
    best[0] = 0
    total = 0
    for _ in range(n):
        bv, v = min((b, i) for i, b in enumerate(best) if not seen[i])
        seen[v] = True
        total += bv
        px, py = points[v]
        for u in range(n):
            if not seen[u]:
                d = abs(px - points[u][0]) + abs(py - points[u][1])
                if d < best[u]:
                    best[u] = d
    return total


def _hanan_points(pins: Sequence[Point]) -> list[Point]:
    xs = sorted({p[0] for p in pins})
    ys = sorted({p[1] for p in pins})
    pinset = set(pins)
    return [Point(x, y) for x in xs for y in ys if Point(x, y) not in pinset]


def _finish_topology(pins: list[Point], steiners: list[Point]) -> Topology:
    """MST over pins+steiners, then drop/splice low-degree Steiner nodes."""
    nodes = list(pins) + list(steiners)
    adj: dict[int, set[int]] = {i: set() for i in range(len(nodes))}
    for i, j in _mst_links(nodes):
        adj[i].add(j)
        adj[j].add(i)
    m = len(pins)
    changed = True
    while changed:
        changed = False
        for v in range(m, len(nodes)):
            if v not in adj:
                continue
            deg = len(adj[v])
            if deg <= 1:
                for u in adj.pop(v):
                    adj[u].discard(v)
                changed = True
            elif deg == 2:
                a, b = sorted(adj.pop(v))
                adj[a].discard(v)
                adj[b].discard(v)
                if a != b:
                    adj[a].add(b)
                    adj[b].add(a)
                changed = True
    keep = sorted(adj)
    remap = {v: k for k, v in enumerate(keep)}
    out_nodes = [nodes[v] for v in keep]
    roles = [PIN if v < m else STEINER for v in keep]
    links = sorted({(min(remap[i], remap[j]), max(remap[i], remap[j]))
                    for i in adj for j in adj[i]})
    return Topology(out_nodes, roles, links)


def _seed_exact(pins: list[Point]) -> Topology:
    if len(pins) > 6:
        raise TooManyPinsForExact(f"{len(pins)} pins")
    candidates = _hanan_points(pins)
    best_len = _mst_length(pins)
    best_set: tuple[Point, ...] = ()
    for r in range(1, max(0, len(pins) - 2) + 1):
        for combo in itertools.combinations(candidates, r):
            wl = _mst_length(list(pins) + list(combo))
            if wl < best_len:
                best_len = wl
                best_set = combo
    return _finish_topology(pins, list(best_set))


def _seed_heuristic(pins: list[Point]) -> Topology:
    nodes = list(pins)
    if len(pins) <= 12:
        # full iterated 1-Steiner over the Hanan grid
        base = _mst_length(nodes)
        while True:
            best_gain, best_c = 0, None
            for c in _hanan_points(pins):
                if c in nodes:
                    continue
                gain = base - _mst_length(nodes + [c])
                if gain > best_gain:
                    best_gain, best_c = gain, c
            if best_c is None:
                break
            nodes.append(best_c)
            base -= best_gain
        return _finish_topology(pins, nodes[len(pins):])

    # larger nets: greedy median insertion on tree edge pairs; every
    # candidate is still a Hanan point of the current node set
    adj: dict[int, set[int]] = {i: set() for i in range(len(nodes))}
    for i, j in _mst_links(nodes):
        adj[i].add(j)
        adj[j].add(i)

    def _gain(u: int, v: int, w: int) -> tuple[int, Point]:
        (ux, uy), (vx, vy), (wx, wy) = nodes[u], nodes[v], nodes[w]
        sx = ux + vx + wx - min(ux, vx, wx) - max(ux, vx, wx)
        sy = uy + vy + wy - min(uy, vy, wy) - max(uy, vy, wy)
        old = abs(ux - vx) + abs(uy - vy) + abs(ux - wx) + abs(uy - wy)
        new = (abs(ux - sx) + abs(uy - sy) + abs(vx - sx) + abs(vy - sy)
               + abs(wx - sx) + abs(wy - sy))
        return old - new, Point(sx, sy)

    while True:
        cands = []
        for u in sorted(adj):
            nbrs = sorted(adj[u])
            for v, w in itertools.combinations(nbrs, 2):
                gain, s = _gain(u, v, w)
                if gain > 0 and s != nodes[u]:
                    cands.append((-gain, u, v, w))
        if not cands:
            break
        cands.sort()
        applied = False
        for _, u, v, w in cands:
            if v not in adj.get(u, ()) or w not in adj.get(u, ()):
                continue
            gain, s = _gain(u, v, w)
            if gain <= 0 or s == nodes[u]:
                continue
            si = len(nodes)
            nodes.append(s)
            adj[si] = set()
            adj[u].discard(v)
            adj[u].discard(w)
            adj[v].discard(u)
            adj[w].discard(u)
            for t in (u, v, w):
                adj[si].add(t)
                adj[t].add(si)
            applied = True
        if not applied:
            break
    steiners = nodes[len(pins):]
    return _finish_topology(list(pins), steiners)


def seed_topology(pins: Sequence[Point], mode: str = "heuristic") -> Topology:
    """Initial tree topology over the pins, ignoring obstacles.

    exact_small: minimum rectilinear Steiner wirelength by Hanan-grid
    enumeration (m <= 6). heuristic: iterated 1-Steiner from the MST.
    """
    pins = [Point(*p) for p in pins]
    if len(pins) < 2:
        raise ValueError("need at least 2 pins")
    if len(set(pins)) != len(pins):
        raise ValueError("pins must be pairwise distinct")
    if mode == "exact_small":
        return _seed_exact(pins)
    if mode == "heuristic":
        return _seed_heuristic(pins)
    raise ValueError(f"unknown mode {mode!r}")


def rectilinearize(t: Topology, seed: int) -> RectTree:
    """Turn each link into a straight segment or an L-shape.

    The L direction is drawn per link, in link order, from a PRNG seeded
    with `seed`, so the result is deterministic for (topology, seed).
    """
    rng = random.Random(seed)
    node_ids: dict[Point, int] = {}
    nodes: list[Point] = []
    roles: list[str] = []

    def _nid(p: Point, role: str) -> int:
        i = node_ids.get(p)
        if i is None:
            i = len(nodes)
            node_ids[p] = i
            nodes.append(p)
            roles.append(role)
        elif role == PIN and roles[i] != PIN:
            roles[i] = role
        return i

    for p, r in zip(t.nodes, t.roles):
        _nid(p, r)
    edges: list[tuple[int, int]] = []
    for i, j in t.links:
        a, b = t.nodes[i], t.nodes[j]
        ia, ib = _nid(a, t.roles[i]), _nid(b, t.roles[j])
        if a.x == b.x or a.y == b.y:
            rng.random()  # keep the draw stream aligned across link shapes
            if ia != ib:
                edges.append((ia, ib))
            continue
        corner = Point(b.x, a.y) if rng.random() < 0.5 else Point(a.x, b.y)
        ic = _nid(corner, CORNER)
        edges.append((ia, ic))
        edges.append((ic, ib))
    return RectTree(nodes, roles, edges)
