"""Discrete decision systems and their solvers.

A problem is staged: states per stage, feasible actions per (stage,
state), immediate reward, and a transition distribution (deterministic
transitions are point masses).  Solvers: greedy rollout, exact backward
induction, sampled stochastic backward induction, and a memoized
unfold/collapse solver over the subproblem dag.
"""

from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

from .morphisms import memo_recurse

NEG_INF = float("-inf")
_PROB_TOL = 1e-9


class DdsError(Exception):
    pass


class DeadEndError(DdsError):
    """No feasible action at a reached state before the final stage."""


class SizeError(DdsError):
    """Problem exceeds the configured table budget."""


class PolicyGapError(DdsError):
    """A rollout reached a (stage, state) the policy does not cover."""


class TransitionError(DdsError):
    """Transition probabilities do not sum to one."""


class DegenerateStartError(DdsError):
    """Local search started at a point with no candidates."""


@dataclass
class DdsProblem:
    n: int
    states: Callable[[int], Sequence]
    actions: Callable[[int, Any], Sequence]
    reward: Callable[[int, Any, Any], float]
    transition: Callable[[int, Any, Any], Sequence[tuple[Any, float]]]
    alpha: float = 1.0
    state_key: Callable[[Any], Any] = lambda s: s
    action_key: Callable[[Any], Any] = lambda a: a

    def checked_transition(self, t, s, x):
        dist = list(self.transition(t, s, x))
        total = sum(p for _, p in dist)
        if abs(total - 1.0) > _PROB_TOL:
            raise TransitionError(f"probabilities sum to {total} at t={t}")
        return dist

    def sorted_actions(self, t, s):
        return sorted(self.actions(t, s), key=self.action_key)

    @staticmethod
    def from_tables(spec: Mapping) -> "DdsProblem":
        """Build a problem from the tabulated JSON fixture layout."""
        n = spec["stages"]
        states = {int(t): list(v) for t, v in spec["states"].items()}
        acts: dict[tuple[int, Any], list] = {}
        info: dict[tuple[int, Any, Any], dict] = {}
        for t_str, per_state in spec["actions"].items():
            t = int(t_str)
            for s, actions in per_state.items():
                acts[(t, s)] = [a["name"] for a in actions]
                for a in actions:
                    info[(t, s, a["name"])] = a

        def transition(t, s, x):
            nxt = info[(t, s, x)].get("next", {})
            return list(nxt.items())

        return DdsProblem(
            n=n,
            states=lambda t: states.get(t, []),
            actions=lambda t, s: acts.get((t, s), []),
            reward=lambda t, s, x: float(info[(t, s, x)]["reward"]),
            transition=transition,
            alpha=float(spec.get("alpha", 1.0)),
        )


@dataclass
class Cell:
    value: float
    argmax: tuple = ()


class ValueFunction:
    def __init__(self, n: int):
        self.n = n
        self.table: dict[tuple[int, Any], Cell] = {}
        self.memo_hits = 0

    def set(self, t, skey, value, argmax):
        self.table[(t, skey)] = Cell(value, tuple(argmax))

    def value(self, t, skey) -> float:
        return self.table[(t, skey)].value

    def argmax(self, t, skey) -> tuple:
        return self.table[(t, skey)].argmax

    def best_action(self, t, skey):
        arg = self.table[(t, skey)].argmax
        if not arg:
            raise PolicyGapError(f"no action recorded at (t={t}, {skey!r})")
        return arg[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "state", "value", "argmax"])
        for (t, skey), cell in sorted(self.table.items(), key=lambda kv: (kv[0][0], str(kv[0][1]))):
            w.writerow([t, skey, repr(cell.value), "|".join(str(a) for a in cell.argmax)])
        return buf.getvalue()


@dataclass
class Trajectory:
    steps: list  # (state, action, reward)
    alpha: float

    @property
    def total(self) -> float:
        return sum(self.alpha ** t * r for t, (_, _, r) in enumerate(self.steps))


# ---------------------------------------------------------------------------
# Solvers


def _cell_budget_check(p: DdsProblem, budget_cells: int) -> None:
    cells = 0
    for t in range(1, p.n + 1):
        for s in p.states(t):
            cells += max(1, len(p.actions(t, s)))
            if cells > budget_cells:
                raise SizeError(f"cell budget {budget_cells} exceeded at stage {t}")


def _bellman_value(p, t, s, x, next_value: Callable[[Any], float]) -> float:
    r = p.reward(t, s, x)
    if t >= p.n:
        return r
    cont = 0.0
    for s2, pr in p.checked_transition(t, s, x):
        cont += pr * next_value(s2)
    return r + p.alpha * cont


def _best(p, t, s, value_of_action: Callable[[Any], float]) -> Cell:
    acts = p.sorted_actions(t, s)
    if not acts:
        return Cell(NEG_INF, ())
    vals = [(value_of_action(x), x) for x in acts]
    best = max(v for v, _ in vals)
    # the equality arm keeps -inf ties (their difference is nan, not 0)
    argmax = tuple(x for v, x in vals if v == best or abs(v - best) <= 1e-12)
    return Cell(best, argmax)


def exact_dp(p: DdsProblem, budget_cells: int = 10**6) -> ValueFunction:
    """Backward induction over the full stage/state tables."""
    _cell_budget_check(p, budget_cells)
    vf = ValueFunction(p.n)
    for t in range(p.n, 0, -1):
        for s in p.states(t):
            nxt = lambda s2: vf.value(t + 1, p.state_key(s2))
            cell = _best(p, t, s, lambda x: _bellman_value(p, t, s, x, nxt))
            vf.table[(t, p.state_key(s))] = cell
    return vf


def stochastic_dp(p: DdsProblem, rollouts: int, seed: int, budget_cells: int = 10**6) -> ValueFunction:
    """Monte-Carlo backward induction: continuation values estimated from
    sampled successor states; full action sweep per cell."""
    if rollouts < 1:
        raise DdsError("rollouts must be >= 1")
    _cell_budget_check(p, budget_cells)
    rng = random.Random(seed)
    vf = ValueFunction(p.n)
    for t in range(p.n, 0, -1):
        for s in p.states(t):
            def value_of_action(x):
                r = p.reward(t, s, x)
                if t >= p.n:
                    return r
                dist = p.checked_transition(t, s, x)
                succ, probs = zip(*dist)
                if len(succ) == 1:
                    cont = vf.value(t + 1, p.state_key(succ[0]))  # point mass
                else:
                    draws = rng.choices(succ, weights=probs, k=rollouts)
                    cont = sum(vf.value(t + 1, p.state_key(d)) for d in draws) / rollouts
                return r + p.alpha * cont

            vf.table[(t, p.state_key(s))] = _best(p, t, s, value_of_action)
    return vf


def greedy_run(p: DdsProblem, s0, mode: str = "argmax", seed: int = 0) -> Trajectory:
    """Follow immediate reward only: argmax (ties to lowest action key) or
    sampling proportional to max(reward, 0)."""
    rng = random.Random(seed)
    s = s0
    steps = []
    for t in range(1, p.n + 1):
        acts = p.sorted_actions(t, s)
        if not acts:
            raise DeadEndError(f"no feasible action at stage {t}, state {s!r}")
        rewards = [p.reward(t, s, x) for x in acts]
        if mode == "argmax":
            best = max(rewards)
            x = next(a for a, r in zip(acts, rewards) if r == best)
        elif mode == "proportional":
            weights = [max(r, 0.0) for r in rewards]
            if sum(weights) <= 0.0:
                weights = [1.0] * len(acts)
            x = rng.choices(acts, weights=weights, k=1)[0]
        else:
            raise ValueError(f"unknown greedy mode: {mode}")
        r = p.reward(t, s, x)
        steps.append((s, x, r))
        if t < p.n:
            dist = p.checked_transition(t, s, x)
            succ, probs = zip(*dist)
            s = succ[0] if len(succ) == 1 else rng.choices(succ, weights=probs, k=1)[0]
    return Trajectory(steps, p.alpha)


def evaluate_policy(p: DdsProblem, policy: Mapping, episodes: int, seed: int = 0):
    """Empirical mean total discounted reward of a (t, state_key) -> action
    policy; returns (mean, standard error)."""
    rng = random.Random(seed)
    totals = []
    for _ in range(episodes):
        s = None
        first = p.states(1)
        s = first[0] if len(first) == 1 else rng.choice(list(first))
        total = 0.0
        for t in range(1, p.n + 1):
            key = (t, p.state_key(s))
            if key not in policy:
                raise PolicyGapError(f"policy undefined at {key!r}")
            x = policy[key]
            total += p.alpha ** (t - 1) * p.reward(t, s, x)
            if t < p.n:
                dist = p.checked_transition(t, s, x)
                succ, probs = zip(*dist)
                s = succ[0] if len(succ) == 1 else rng.choices(succ, weights=probs, k=1)[0]
        totals.append(total)
    mean = sum(totals) / episodes
    if episodes > 1:
        var = sum((x - mean) ** 2 for x in totals) / (episodes - 1)
        stderr = math.sqrt(var / episodes)
    else:
        stderr = 0.0
    return mean, stderr


def policy_from(vf: ValueFunction) -> dict:
    return {key: cell.argmax[0] for key, cell in vf.table.items() if cell.argmax}


def chrono_solve(p: DdsProblem, budget_cells: int = 10**6) -> ValueFunction:
    """Unfold the subproblem dag from every stage root, collapse it with a
    memoized recursion on the Bellman step.  Matches exact_dp entrywise."""
    _cell_budget_check(p, budget_cells)
    vf = ValueFunction(p.n)
    memo: dict[tuple[int, Any], Cell] = {}
    hits = 0

    def children_of(seed):
        t, s = seed
        if t >= p.n:
            return []
        out = []
        for x in p.sorted_actions(t, s):
            for s2, _pr in p.checked_transition(t, s, x):
                out.append((t + 1, s2))
        return out

    def solve(seed) -> Cell:
        nonlocal hits
        t, s = seed
        key = (t, p.state_key(s))
        if key in memo:
            hits += 1
            return memo[key]
        nxt = lambda s2: solve((t + 1, s2)).value
        cell = _best(p, t, s, lambda x: _bellman_value(p, t, s, x, nxt))
        memo[key] = cell
        return cell

    for t in range(1, p.n + 1):
        for s in p.states(t):
            vf.table[(t, p.state_key(s))] = solve((t, s))
    vf.memo_hits = hits
    return vf


# ---------------------------------------------------------------------------
# Greedy pattern search over a snapshot


@dataclass
class OptimizeResult:
    best: Any
    best_value: float
    trail: list
    evaluations: int
    converged: bool


def greedy_fold_optimize(view, candidates, objective, start, budget: int) -> OptimizeResult:
    """Iterated local candidate generation + evaluation from `start`.

    `candidates(point)` yields neighboring points; stops at the evaluation
    budget or at a local optimum.  Returns the best visited point and the
    walk taken to reach it.
    """
    view.check_fresh()
    first = list(candidates(start))
    if not first:
        raise DegenerateStartError(f"no candidates at start point {start!r}")
    current = start
    current_val = objective(start)
    evals = 1
    trail = [(start, current_val)]
    converged = False
    while evals < budget:
        cands = sorted(candidates(current))
        scored = []
        for c in cands:
            if evals >= budget:
                break
            scored.append((objective(c), c))
            evals += 1
        if not scored:
            break
        best_val, best_c = max(scored, key=lambda vc: (vc[0], -_key_rank(vc[1], cands)))
        if best_val <= current_val:
            converged = True
            break
        current, current_val = best_c, best_val
        trail.append((current, current_val))
    return OptimizeResult(current, current_val, trail, evals, converged)


def _key_rank(c, cands):
    return cands.index(c)


def single_peak_audit(points, candidates, objective) -> bool:
    """True when every non-maximal point has a strictly improving candidate,
    i.e. greedy ascent cannot get stuck below the global maximum."""
    if not points:
        return True
    best = max(objective(p) for p in points)
    for p in points:
        if objective(p) == best:
            continue
        if not any(objective(c) > objective(p) for c in candidates(p)):
            return False
    return True


# ---------------------------------------------------------------------------
# Random instances (used by verification suites)


def random_problem(seed: int, max_stages: int = 4, max_states: int = 5,
                   max_actions: int = 4, stochastic: bool = False) -> DdsProblem:
    rng = random.Random(seed)
    n = rng.randint(1, max_stages)
    states = {t: [f"s{t}_{i}" for i in range(rng.randint(1, max_states))] for t in range(1, n + 1)}
    acts: dict[tuple[int, str], list[str]] = {}
    rewards: dict[tuple[int, str, str], float] = {}
    trans: dict[tuple[int, str, str], list[tuple[str, float]]] = {}
    for t in range(1, n + 1):
        for s in states[t]:
            names = [f"a{j}" for j in range(rng.randint(1, max_actions))]
            acts[(t, s)] = names
            for x in names:
                rewards[(t, s, x)] = round(rng.uniform(-2, 5), 3)
                if t < n:
                    succ = states[t + 1]
                    if stochastic and len(succ) > 1 and rng.random() < 0.5:
                        chosen = rng.sample(succ, rng.randint(2, min(3, len(succ))))
                        raw = [rng.random() + 0.05 for _ in chosen]
                        z = sum(raw)
                        trans[(t, s, x)] = [(c, w / z) for c, w in zip(chosen, raw)]
                    else:
                        trans[(t, s, x)] = [(rng.choice(succ), 1.0)]
    return DdsProblem(
        n=n,
        states=lambda t: states.get(t, []),
        actions=lambda t, s: acts.get((t, s), []),
        reward=lambda t, s, x: rewards[(t, s, x)],
        transition=lambda t, s, x: trans.get((t, s, x), []),
        alpha=rng.choice([1.0, 0.9]),
    )


GD1_TABLES = {
    "stages": 2,
    "alpha": 1.0,
    "states": {"1": ["A"], "2": ["B", "C"]},
    "actions": {
        "1": {
            "A": [
                {"name": "a1", "reward": 2, "next": {"B": 1.0}},
                {"name": "a2", "reward": 0, "next": {"C": 1.0}},
            ]
        },
        "2": {
            "B": [{"name": "b", "reward": 1}],
            "C": [{"name": "c", "reward": 5}],
        },
    },
}


def gd1() -> DdsProblem:
    return DdsProblem.from_tables(GD1_TABLES)


def gd1_noisy() -> DdsProblem:
    """GD-1 shape whose only first-stage action is stochastic; the exact
    first-stage value is 3, so estimation error is visible."""
    tables = {
        "stages": 2,
        "alpha": 1.0,
        "states": {"1": ["A"], "2": ["B", "C"]},
        "actions": {
            "1": {"A": [{"name": "a3", "reward": 0, "next": {"B": 0.5, "C": 0.5}}]},
            "2": {
                "B": [{"name": "b", "reward": 1}],
                "C": [{"name": "c", "reward": 5}],
            },
        },
    }
    return DdsProblem.from_tables(tables)


def gd1_stochastic() -> DdsProblem:
    """GD-1 plus a stochastic action a3 at A: reward 0, B/C each w.p. 0.5."""
    tables = {
        "stages": 2,
        "alpha": 1.0,
        "states": {"1": ["A"], "2": ["B", "C"]},
        "actions": {
            "1": {
                "A": [
                    {"name": "a1", "reward": 2, "next": {"B": 1.0}},
                    {"name": "a2", "reward": 0, "next": {"C": 1.0}},
                    {"name": "a3", "reward": 0, "next": {"B": 0.5, "C": 0.5}},
                ]
            },
            "2": {
                "B": [{"name": "b", "reward": 1}],
                "C": [{"name": "c", "reward": 5}],
            },
        },
    }
    return DdsProblem.from_tables(tables)
