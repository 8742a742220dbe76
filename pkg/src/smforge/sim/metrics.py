"""Emergent-behavior metrics over a world snapshot."""

from __future__ import annotations

import math

from .world import World


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, u: int) -> int:
        while self.parent[u] != u:
            self.parent[u] = self.parent[self.parent[u]]
            u = self.parent[u]
        return u

    def union(self, u: int, v: int) -> None:
        ru, rv = self.find(u), self.find(v)
        if ru != rv:
            self.parent[rv] = ru


def cluster_fraction(world: World, threshold: float) -> float:
    """|largest component| / robot count, linking pairs with center
    distance <= threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    n = world.n_robots
    if n == 0:
        raise ValueError("no robots")
    uf = UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            dx = float(world.x[i] - world.x[j])
            dy = float(world.y[i] - world.y[j])
            if math.hypot(dx, dy) <= threshold:
                uf.union(i, j)
    sizes: dict[int, int] = {}
    for i in range(n):
        root = uf.find(i)
        sizes[root] = sizes.get(root, 0) + 1
    return max(sizes.values()) / n


def taxis_metrics(world: World) -> tuple[float, float]:
    """(centroid-to-beacon distance, max robot distance from centroid),
    both in cm."""
    if world.beacon is None:
        raise ValueError("no beacon configured")
    n = world.n_robots
    if n == 0:
        raise ValueError("no robots")
    cx = float(world.x.mean())
    cy = float(world.y.mean())
    bx, by = world.beacon
    dist = math.hypot(cx - bx, cy - by)
    spread = max(
        math.hypot(float(world.x[i]) - cx, float(world.y[i]) - cy) for i in range(n)
    )
    return dist, spread
