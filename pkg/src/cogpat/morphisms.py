"""Recursion schemes over metagraph snapshots.

Folds consume a snapshot atom-by-atom in an explicit traversal order;
unfolds grow a metagraph from seeds under an expansion budget.  The
memory-carrying variants (histo / futu / chrono) thread a memo table
through the traversal.  Every scheme runs as a suspendable `MorphRun`
so several of them can be interleaved over the same snapshot.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, NamedTuple, Optional

from .metagraph import (
    Atom,
    MgError,
    MgView,
    StaleSnapshotError,
    TypedMetagraph,
    as_view,
    ref_slot,
    slot_ref,
)


class UnfoldError(MgError):
    """Join failed while emitting; carries the partial result."""

    def __init__(self, msg: str, partial: TypedMetagraph):
        super().__init__(msg)
        self.partial = partial


class Ctx(NamedTuple):
    """What `combine` sees for one frame: the atom, the snapshot it lives
    in (None for fused runs) and, for memory-carrying folds, the structural
    memo key of the sub-metagraph hanging off the atom."""

    atom: Atom
    view: Optional[MgView]
    key: Any


@dataclass
class Algebra:
    unit: Any
    combine: Callable[[Any, Ctx], Any]
    # merge folds two sub-results; required by the fused chronomorphism
    merge: Optional[Callable[[Any, Any], Any]] = None
    declared_associative: bool = False


@dataclass
class Expansion:
    """One coalgebra step: metagraph pieces to emit plus child seeds.

    Each child is (seed, port) where port indexes into the atoms emitted
    by this expansion (concatenated across pieces, insertion order); the
    child's dangling slots get bound to that atom.  port None leaves the
    child unattached.
    """

    pieces: list
    children: list = field(default_factory=list)


@dataclass
class Coalgebra:
    expand: Callable[[Any], Expansion]
    seed_key: Callable[[Any], Any] = lambda s: s


# ---------------------------------------------------------------------------
# Traversal orders


def order_atoms(view: MgView, order) -> list[int]:
    ids = sorted(view.atoms)
    if order == "insertion":
        return ids
    if order == "topological":
        placed: set[int] = set()
        out: list[int] = []
        pending = list(ids)
        while pending:
            for i in pending:
                if all(t in placed for t in view.atoms[i].targets if t >= 0):
                    out.append(i)
                    placed.add(i)
                    pending.remove(i)
                    break
            else:
                raise MgError("target cycle; no topological order")
        return out
    if isinstance(order, tuple) and order[0] == "random":
        rng = random.Random(order[1])
        ids = list(ids)
        rng.shuffle(ids)
        return ids
    raise ValueError(f"unknown traversal order: {order!r}")


# ---------------------------------------------------------------------------
# Runs


class MorphRun:
    def __init__(self, kind: str, view: Optional[MgView] = None):
        self.kind = kind
        self.view = view
        self.stamp = view.stamp if view is not None else None
        self.status = "paused"
        self.frames_done = 0
        self.memo: dict = {}
        self.memo_hits = 0
        self.value: Any = None
        self.truncated = False
        self._gen = None

    def _bind(self, gen) -> "MorphRun":
        self._gen = gen
        return self

    def step(self) -> str:
        if self.status == "done":
            raise RuntimeError("run already finished")
        if self.status == "stale":
            raise StaleSnapshotError("run is stale")
        if self.view is not None and self.view.is_stale():
            self.status = "stale"
            return self.status
        try:
            next(self._gen)
            self.frames_done += 1
            self.status = "paused"
        except StopIteration as st:
            self.value = st.value
            self.status = "done"
        return self.status

    def report(self) -> dict:
        return {
            "kind": self.kind,
            "frames_done": self.frames_done,
            "memo_hits": self.memo_hits,
            "status": self.status,
        }


def run_steps(run: MorphRun, k: int) -> str:
    """Advance up to k frames; stops early on completion or staleness."""
    for _ in range(k):
        if run.status in ("done", "stale"):
            break
        run.step()
    return run.status


def complete(run: MorphRun) -> Any:
    while run.status not in ("done", "stale"):
        run.step()
    if run.status == "stale":
        raise StaleSnapshotError("snapshot changed during run")
    return run.value


# ---------------------------------------------------------------------------
# Fold / histo


def fold_run(view, algebra: Algebra, order="insertion") -> MorphRun:
    view = as_view(view)
    view.check_fresh()
    run = MorphRun("fold", view)

    def gen():
        acc = algebra.unit
        for i in order_atoms(view, order):
            acc = algebra.combine(acc, Ctx(view.atoms[i], view, None))
            yield
        return acc

    return run._bind(gen())


def fold(view, algebra: Algebra, order="insertion") -> Any:
    return complete(fold_run(view, algebra, order))


def _default_key(atom: Atom, child_keys: tuple) -> tuple:
    return (atom.kind, atom.type_label, atom.tv, child_keys)


def _structure_key(view, aid, cache, run, key_fn):
    if aid in cache:
        run.memo_hits += 1
        return cache[aid]
    a = view.atoms[aid]
    child_keys = tuple(
        _structure_key(view, t, cache, run, key_fn) if t >= 0 else ("slot", ref_slot(t))
        for t in a.targets
    )
    k = key_fn(a, child_keys)
    cache[aid] = k
    run.memo.setdefault(k, []).append(aid)
    return k


def histo_fold_run(view, algebra: Algebra, order="insertion", key_fn=_default_key) -> MorphRun:
    view = as_view(view)
    view.check_fresh()
    run = MorphRun("histo", view)
    cache: dict[int, Any] = {}

    def gen():
        acc = algebra.unit
        for i in order_atoms(view, order):
            key = _structure_key(view, i, cache, run, key_fn)
            acc = algebra.combine(acc, Ctx(view.atoms[i], view, key))
            yield
        return acc

    return run._bind(gen())


def histo_fold(view, algebra: Algebra, order="insertion", key_fn=_default_key):
    """Fold with structural memoization; returns (value, memo hit count)."""
    run = histo_fold_run(view, algebra, order, key_fn)
    value = complete(run)
    return value, run.memo_hits


# ---------------------------------------------------------------------------
# Unfold / futu


def _emit_piece(acc: TypedMetagraph, piece, port: Optional[int]) -> list[int]:
    """Copy `piece` atoms into `acc`; dangling slots bind to `port`."""
    id_map: dict[int, int] = {}
    slot_map: dict[int, int] = {}
    new_ids: list[int] = []
    for old_id in sorted(piece.atoms):
        a = piece.atoms[old_id]
        targets = []
        for t in a.targets:
            if t >= 0:
                if t not in id_map:
                    raise UnfoldError(f"piece target {t} emitted out of order", acc)
                targets.append(id_map[t])
            else:
                slot = ref_slot(t)
                label = piece.dangling[slot].type_label
                if port is not None:
                    if acc.atoms[port].type_label != label:
                        raise UnfoldError(
                            f"port type {acc.atoms[port].type_label!r} != slot type {label!r}",
                            acc,
                        )
                    targets.append(port)
                else:
                    if slot not in slot_map:
                        slot_map[slot] = acc.declare_dangling(label)
                    targets.append(slot_ref(slot_map[slot]))
        new_id = acc.add_atom(a.kind, a.type_label, tuple(targets), a.tv, a.sti, a.lti)
        id_map[old_id] = new_id
        new_ids.append(new_id)
    return new_ids


def futu_unfold_run(seed, coalg: Coalgebra, budget: int) -> MorphRun:
    if budget < 0:
        raise ValueError("budget must be >= 0")
    run = MorphRun("futu")

    def gen():
        acc = TypedMetagraph()
        emitted = 0
        agenda: deque = deque([(seed, None)])
        while agenda:
            if emitted >= budget:
                run.truncated = True
                break
            s, port = agenda.popleft()
            exp = coalg.expand(s)
            take = min(len(exp.pieces), budget - emitted)
            if take < len(exp.pieces):
                run.truncated = True
            local_ids: list[int] = []
            for piece in exp.pieces[:take]:
                local_ids.extend(_emit_piece(acc, piece, port))
                emitted += 1
            for child_seed, port_idx in exp.children:
                child_port = local_ids[port_idx] if port_idx is not None else None
                agenda.append((child_seed, child_port))
            yield
        return acc

    return run._bind(gen())


def futu_unfold(seed, coalg: Coalgebra, budget: int) -> TypedMetagraph:
    return complete(futu_unfold_run(seed, coalg, budget))


def unfold_run(seed, coalg: Coalgebra, budget: int) -> MorphRun:
    run = futu_unfold_run(seed, coalg, budget)
    run.kind = "unfold"
    return run


def unfold(seed, coalg: Coalgebra, budget: int) -> TypedMetagraph:
    return complete(unfold_run(seed, coalg, budget))


# ---------------------------------------------------------------------------
# Chrono


def chrono_run(seed, coalg: Coalgebra, algebra: Algebra, budget: int) -> MorphRun:
    if algebra.merge is None:
        raise ValueError("fused chronomorphism needs an algebra with merge")
    if budget < 0:
        raise ValueError("budget must be >= 0")
    run = MorphRun("chrono")
    merge = algebra.merge

    def gen():
        budget_left = budget

        def visit(s):
            nonlocal budget_left
            key = coalg.seed_key(s)
            if key in run.memo:
                run.memo_hits += 1
                return run.memo[key]
            if budget_left <= 0:
                run.truncated = True
                return algebra.unit
            exp = coalg.expand(s)
            take = min(len(exp.pieces), budget_left)
            if take < len(exp.pieces):
                run.truncated = True
            v = algebra.unit
            for piece in exp.pieces[:take]:
                budget_left -= 1
                for i in sorted(piece.atoms):
                    v = algebra.combine(v, Ctx(piece.atoms[i], None, None))
            yield
            for child_seed, _port in exp.children:
                cv = yield from visit(child_seed)
                v = merge(v, cv)
            run.memo[key] = v
            return v

        if budget == 0:
            return algebra.unit
        result = yield from visit(seed)
        return result

    return run._bind(gen())


def chrono(seed, coalg: Coalgebra, algebra: Algebra, budget: int):
    """Fused unfold-then-fold; returns (value, memo hit count)."""
    run = chrono_run(seed, coalg, algebra, budget)
    value = complete(run)
    return value, run.memo_hits


# ---------------------------------------------------------------------------
# Seed-level memoized collapse (the histo half over an unfolded problem dag)


def memo_recurse(
    root,
    children_of: Callable[[Any], list],
    compute: Callable[[Any, list], Any],
    key: Callable[[Any], Any] = lambda s: s,
):
    """Post-order evaluation over the dag spanned by `children_of`, with
    memoization on `key`.  Returns (value at root, memo table, hit count)."""
    memo: dict = {}
    hits = 0

    def visit(s):
        nonlocal hits
        k = key(s)
        if k in memo:
            hits += 1
            return memo[k]
        vals = [visit(c) for c in children_of(s)]
        v = compute(s, vals)
        memo[k] = v
        return v

    visit(root)
    return memo[key(root)], memo, hits


# ---------------------------------------------------------------------------
# Associativity audit


@dataclass
class AuditReport:
    passed: bool
    trials: int
    counterexample: Optional[tuple] = None


def audit_associativity(algebra: Algebra, ctxs: list, trials: int = 1000, seed: int = 0) -> AuditReport:
    """Check the grouping identities order-invariant folding needs: for
    sampled prefix values v and frame pairs (a, b),
    combine(combine(v,a),b) == combine(combine(v,b),a)."""
    if len(ctxs) < 2:
        return AuditReport(True, 0)
    rng = random.Random(seed)
    for t in range(trials):
        prefix = rng.sample(ctxs, rng.randint(0, len(ctxs)))
        v = algebra.unit
        for c in prefix:
            v = algebra.combine(v, c)
        a, b = rng.choice(ctxs), rng.choice(ctxs)
        lhs = algebra.combine(algebra.combine(v, a), b)
        rhs = algebra.combine(algebra.combine(v, b), a)
        if lhs != rhs:
            return AuditReport(False, t + 1, (v, a, b))
    return AuditReport(True, trials)
