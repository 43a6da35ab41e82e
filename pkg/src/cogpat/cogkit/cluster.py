"""Agglomerative clustering with an exhaustive optimal variant.

Partitions are frozensets of frozensets, so any merge order reaching the
same partition produces the identical value.  Quality defaults to the
negative mean within-block pairwise distance; the staged merge process is
also solvable exactly by the decision-system engine for small n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..dds import DdsProblem, exact_dp


@dataclass(frozen=True)
class Clustering:
    blocks: frozenset            # frozenset of frozensets
    quality: float
    logical_entropy: float


def logical_entropy(blocks, n: int) -> float:
    """1 - sum((|B|/n)^2): chance two random draws land in different blocks."""
    return 1.0 - sum((len(b) / n) ** 2 for b in blocks)


def partition_quality(blocks, distance) -> float:
    """Negative mean pairwise distance within blocks; 0 for all-singletons."""
    pairs = [
        (x, y)
        for block in blocks
        for x, y in itertools.combinations(sorted(block), 2)
    ]
    if not pairs:
        return 0.0
    return -sum(distance(x, y) for x, y in pairs) / len(pairs)


def _merge(blocks: frozenset, a: frozenset, b: frozenset) -> frozenset:
    return (blocks - {a, b}) | {a | b}


def _clustering(blocks, n, distance) -> Clustering:
    return Clustering(frozenset(blocks), partition_quality(blocks, distance),
                      logical_entropy(blocks, n))


def agglomerate(items, distance, k: int, executor: str = "greedy") -> Clustering:
    items = sorted(items)
    n = len(items)
    if not (1 <= k <= n):
        raise ValueError(f"need n >= k >= 1, got n={n}, k={k}")
    start = frozenset(frozenset([x]) for x in items)
    if k == n:
        return _clustering(start, n, distance)
    if executor == "greedy":
        blocks = start
        while len(blocks) > k:
            best = max(
                (
                    _merge(blocks, a, b)
                    for a, b in itertools.combinations(sorted(blocks, key=sorted), 2)
                ),
                key=lambda bl: partition_quality(bl, distance),
            )
            blocks = best
        return _clustering(blocks, n, distance)
    if executor == "exact_dp":
        if n > 7:
            raise ValueError("exact clustering is limited to n <= 7")
        return _agglomerate_exact(items, distance, k)
    raise ValueError(f"unknown executor {executor!r}")


def _agglomerate_exact(items, distance, k: int) -> Clustering:
    n = len(items)
    steps = n - k
    start = frozenset(frozenset([x]) for x in items)

    def actions(t, blocks):
        return [
            (a, b)
            for a, b in itertools.combinations(sorted(blocks, key=sorted), 2)
        ]

    def reward(t, blocks, action):
        merged = _merge(blocks, *action)
        return partition_quality(merged, distance) - partition_quality(blocks, distance)

    layers = [[start]]
    for _ in range(1, steps):
        seen = {}
        for blocks in layers[-1]:
            for act in actions(0, blocks):
                seen.setdefault(_merge(blocks, *act), True)
        layers.append(list(seen))

    problem = DdsProblem(
        n=steps,
        states=lambda t: layers[t - 1] if 1 <= t <= steps else [],
        actions=actions,
        reward=reward,
        transition=lambda t, s, x: [(_merge(s, *x), 1.0)],
        state_key=lambda blocks: tuple(sorted(tuple(sorted(b)) for b in blocks)),
        action_key=lambda act: tuple(sorted(tuple(sorted(b)) for b in act)),
    )
    vf = exact_dp(problem)
    blocks = start
    for t in range(1, steps + 1):
        act = vf.best_action(t, problem.state_key(blocks))
        blocks = _merge(blocks, *act)
    return _clustering(blocks, n, distance)
