"""Promising-set search: build a dataset about an objective by combining
arguments that look promising, scored by entropy reduction.

The hypothesis class is a finite weighted list of candidate functions, so
promising sets and their entropies are exactly computable.  The adapter at
the bottom renders the whole loop as a DdsProblem for the dds solvers.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .dds import DdsProblem


class CofoError(Exception):
    pass


class InconsistencyError(CofoError):
    """No hypothesis agrees with the dataset; carries the breaking pair."""

    def __init__(self, pair):
        super().__init__(f"no hypothesis consistent with pair {pair!r}")
        self.pair = pair


@dataclass(frozen=True)
class Hypothesis:
    name: str
    table: Mapping[Any, float]
    prior: float

    def __call__(self, x):
        return self.table[x]


@dataclass
class CofoProblem:
    domain: list            # (x, probability weight) pairs
    objective: Mapping      # x -> F(x), tabulated
    hypotheses: list[Hypothesis]
    rho: float
    combinators: dict[str, Callable[[Any, Any], Any]]
    tol: float = 0.0

    def __post_init__(self):
        total = sum(w for _, w in self.domain)
        if total <= 0:
            raise CofoError("domain weights must have positive mass")
        self.domain = [(x, w / total) for x, w in self.domain]
        if not (0.0 < self.rho < 1.0):
            raise CofoError("rho must lie in (0,1)")
        psum = sum(h.prior for h in self.hypotheses)
        if psum <= 0 or any(h.prior <= 0 for h in self.hypotheses):
            raise CofoError("hypothesis priors must be positive")
        self.hypotheses = [
            Hypothesis(h.name, h.table, h.prior / psum) for h in self.hypotheses
        ]

    @property
    def points(self):
        return [x for x, _ in self.domain]

    def weight(self, x) -> float:
        for p, w in self.domain:
            if p == x:
                return w
        raise KeyError(x)

    def f(self, x) -> float:
        return self.objective[x]


Dataset = tuple  # of (x, F(x)) pairs, insertion order kept


def make_dataset(p: CofoProblem, pairs: Sequence) -> Dataset:
    for x, y in pairs:
        if p.f(x) != y:
            raise CofoError(f"pair ({x!r}, {y!r}) disagrees with the objective")
    return tuple(pairs)


def extend_dataset(d: Dataset, pair) -> Dataset:
    if pair in d:
        return d
    return d + (pair,)


def dataset_key(d: Dataset):
    return tuple(sorted(d, key=repr))


# ---------------------------------------------------------------------------
# Promising sets


def top_set(f: Mapping, domain: Sequence, rho: float) -> set:
    """Points whose f-value puts them in the top-rho probability mass.

    Walks distinct values downward, including whole tie groups, until the
    accumulated mass reaches rho.
    """
    if not (0.0 < rho < 1.0):
        raise CofoError("rho must lie in (0,1)")
    by_value: dict[float, list] = {}
    for x, w in domain:
        by_value.setdefault(f[x], []).append((x, w))
    out: set = set()
    mass = 0.0
    for v in sorted(by_value, reverse=True):
        for x, w in by_value[v]:
            out.add(x)
            mass += w
        if mass >= rho - 1e-12:
            break
    return out


@dataclass
class PromisingSet:
    chi: dict            # x -> membership in [0,1]
    support: list        # points with chi > 0, domain order

    def distribution(self) -> dict:
        z = sum(self.chi[x] for x in self.support)
        return {x: self.chi[x] / z for x in self.support}


def consistent_hypotheses(p: CofoProblem, d: Dataset) -> list[Hypothesis]:
    alive = list(p.hypotheses)
    for pair in d:
        x, y = pair
        alive = [h for h in alive if abs(h(x) - y) <= p.tol]
        if not alive:
            raise InconsistencyError(pair)
    return alive


def promising_set(p: CofoProblem, d: Dataset) -> PromisingSet:
    alive = consistent_hypotheses(p, d)
    mass = sum(h.prior for h in alive)
    chi = {x: 0.0 for x in p.points}
    for h in alive:
        top = top_set(h.table, p.domain, p.rho)
        for x in top:
            chi[x] += h.prior / mass
    support = [x for x in p.points if chi[x] > 0.0]
    return PromisingSet(chi, support)


def quality(p: CofoProblem, d: Dataset) -> float:
    """Shannon entropy (bits) of the normalized membership distribution."""
    ps = promising_set(p, d)
    dist = ps.distribution()
    return -sum(q * math.log2(q) for q in dist.values() if q > 0.0)


@dataclass
class InfoGain:
    bits: float          # quality(before) - quality(after)
    kl_bits: float       # KL(after || before), inf on support escape


def info_gain(p: CofoProblem, d_before: Dataset, d_after: Dataset) -> InfoGain:
    if not set(d_before) <= set(d_after):
        raise CofoError("d_before must be a subset of d_after")
    bits = quality(p, d_before) - quality(p, d_after)
    before = promising_set(p, d_before).distribution()
    after = promising_set(p, d_after).distribution()
    kl = 0.0
    for x, qa in after.items():
        qb = before.get(x, 0.0)
        if qa > 0.0:
            if qb <= 0.0:
                kl = math.inf
                break
            kl += qa * math.log2(qa / qb)
    return InfoGain(bits, max(kl, 0.0))


def combinator_lift(p: CofoProblem, cname: str, d: Dataset, trials: int, seed: int):
    """Empirical P(C(x,y) in support | x,y in support) vs the support's
    weighted share of the domain."""
    if trials < 1:
        raise CofoError("trials must be >= 1")
    ps = promising_set(p, d)
    if not ps.support:
        raise CofoError("promising set has empty support")
    comb = p.combinators[cname]
    dist = ps.distribution()
    points = list(dist)
    weights = [dist[x] for x in points]
    rng = random.Random(seed)
    in_support = set(ps.support)
    hits = 0
    for _ in range(trials):
        x = rng.choices(points, weights=weights, k=1)[0]
        y = rng.choices(points, weights=weights, k=1)[0]
        if comb(x, y) in in_support:
            hits += 1
    p_cond = hits / trials
    p_base = sum(p.weight(x) for x in ps.support)
    return p_cond, p_base


# ---------------------------------------------------------------------------
# DDS adapter


def make_cofo_dds(
    p: CofoProblem,
    horizon: int,
    sampler="exhaustive",
    seed: int = 0,
    d0: Dataset = (),
) -> DdsProblem:
    """State = dataset; action = (x, y, combinator name); reward = entropy
    drop of the promising set after appending the evaluated combination."""
    if horizon < 1:
        raise CofoError("horizon must be >= 1")

    def action_set(d: Dataset):
        ps = promising_set(p, d)
        pool = ps.support if ps.support else p.points
        triples = [
            (x, y, c)
            for x in pool
            for y in pool
            for c in sorted(p.combinators)
            if p.combinators[c](x, y) in p.objective
        ]
        if sampler == "exhaustive":
            return triples
        kind, m = sampler
        if kind != "sample":
            raise CofoError(f"unknown sampler spec: {sampler!r}")
        # seed from a stable string, not hash(), so runs reproduce exactly
        rng = random.Random(repr((seed, dataset_key(d))))
        dist = ps.distribution() if ps.support else {x: 1 / len(pool) for x in pool}
        out = []
        for _ in range(m):
            x = rng.choices(list(dist), weights=list(dist.values()), k=1)[0]
            y = rng.choices(list(dist), weights=list(dist.values()), k=1)[0]
            c = rng.choice(sorted(p.combinators))
            if p.combinators[c](x, y) in p.objective:
                out.append((x, y, c))
        return sorted(set(out))

    def successor(d: Dataset, action) -> Dataset:
        x, y, c = action
        z = p.combinators[c](x, y)
        return extend_dataset(d, (z, p.f(z)))

    # reachable datasets per stage, deduplicated by sorted key
    layers: list[list[Dataset]] = [[d0]]
    for _t in range(1, horizon):
        seen: dict = {}
        for d in layers[-1]:
            for a in action_set(d):
                d2 = successor(d, a)
                seen.setdefault(dataset_key(d2), d2)
        layers.append(list(seen.values()))

    def states(t: int):
        if 1 <= t <= horizon:
            return layers[t - 1]
        return []

    def reward(t, d, action):
        return info_gain(p, d, successor(d, action)).bits

    def transition(t, d, action):
        return [(successor(d, action), 1.0)]

    return DdsProblem(
        n=horizon,
        states=states,
        actions=lambda t, d: action_set(d),
        reward=reward,
        transition=transition,
        alpha=1.0,
        state_key=dataset_key,
    )


# ---------------------------------------------------------------------------
# Fixtures


def two_hypothesis_problem() -> CofoProblem:
    """X = {1..4} uniform, F = identity, hypotheses {identity, 5-x}."""
    xs = [1, 2, 3, 4]
    ident = {x: float(x) for x in xs}
    mirror = {x: float(5 - x) for x in xs}
    return CofoProblem(
        domain=[(x, 1.0) for x in xs],
        objective=ident,
        hypotheses=[Hypothesis("identity", ident, 0.5), Hypothesis("mirror", mirror, 0.5)],
        rho=0.25,
        combinators={"left": lambda x, y: x, "right": lambda x, y: y},
    )
