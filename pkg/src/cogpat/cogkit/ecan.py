"""Importance spreading: repeatedly move a fixed quantum of short-term
importance from a sampled atom to a sampled linked neighbor.  Total
importance is conserved exactly; values may go negative."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Optional

from ..metagraph import TypedMetagraph


@dataclass
class EcanResult:
    sti: dict                    # atom id -> importance after the run
    rewards: list                # per executed step
    transfers: list              # (step, x, y)
    skipped: list                # steps with no linked neighbor


def ecan_run(view, q: float, steps: int, seed: int = 0,
             link_weight: Optional[Callable] = None,
             utility: Optional[Callable] = None) -> EcanResult:
    """`link_weight(edge) -> weight` biases neighbor choice;
    `utility(step, x, y) -> reward` attributes payoff to each transfer."""
    if q <= 0:
        raise ValueError("transfer quantum must be > 0")
    view = view.snapshot() if isinstance(view, TypedMetagraph) else view
    rng = random.Random(seed)
    sti = {a.id: a.sti for a in view.atoms.values()}
    neighbors: dict = {i: [] for i in sti}
    for e in view.edges():
        w = link_weight(e) if link_weight is not None else 1.0
        refs = [t for t in e.targets if t >= 0]
        for x in refs:
            for y in refs:
                if x != y:
                    neighbors[x].append((y, w))
    rewards = []
    transfers = []
    skipped = []
    ids = sorted(sti)
    for step in range(steps):
        weights = [max(sti[i], 0.0) for i in ids]
        if sum(weights) <= 0.0:
            x = rng.choice(ids)
        else:
            x = rng.choices(ids, weights=weights, k=1)[0]
        links = neighbors[x]
        if not links:
            skipped.append(step)
            continue
        y = rng.choices([n for n, _ in links], weights=[w for _, w in links], k=1)[0]
        sti[x] -= q
        sti[y] += q
        transfers.append((step, x, y))
        rewards.append(utility(step, x, y) if utility is not None else 0.0)
    return EcanResult(sti, rewards, transfers, skipped)
