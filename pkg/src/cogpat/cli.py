"""Command-line interface: fixture-driven runs of every solver and
verification suite, with deterministic JSON/CSV artifacts.

Exit codes: 0 success, 1 a verification check failed, 2 usage or fixture
error.  The seed defaults to 42; the COGPAT_SEED environment variable
overrides the default only when --seed is absent.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import dds as ddsmod
from .cofo import make_cofo_dds, quality, two_hypothesis_problem
from .cogkit import (
    agglomerate,
    backward_chain_tv,
    conj,
    ecan_run,
    evolve,
    forward_chain,
    mine_patterns,
    one_max,
    point_mutation,
    uniform_crossover,
)
from .cogkit.chain import deduction_rule
from .fixtures import (
    FixtureError,
    load_cofo,
    load_dds,
    load_metagraph,
    load_points,
    load_rules,
    load_subpattern,
)
from .metagraph import TypedMetagraph
from .morphisms import Algebra, fold, fold_run, histo_fold, run_steps, complete
from .relalg import (
    random_dp_instance,
    random_greedy_instance,
    verify_dp_theorem,
    verify_greedy_theorem,
)
from .subpattern import (
    SimplicityMeasure,
    alignment_score,
    build_subpattern_dag,
    check_mutual_associativity,
    disjoint_union,
)

DEFAULT_SEED = 42


class CheckFailure(Exception):
    """A verification suite reported violations; exit code 1."""


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("COGPAT_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise FixtureError(f"COGPAT_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(args, name: str, obj) -> Path:
    path = _outdir(args) / name
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def _write_text(args, name: str, text: str) -> Path:
    path = _outdir(args) / name
    path.write_text(text)
    return path


def _tv_dict(tv) -> dict:
    return {"s": tv.s, "c": tv.c}


# ---------------------------------------------------------------------------
# dds


def cmd_dds_solve(args) -> int:
    problem = load_dds(args.fixture) if args.fixture else ddsmod.gd1()
    seed = _resolve_seed(args)
    s0 = problem.states(1)[0]
    if args.executor == "greedy":
        traj = ddsmod.greedy_run(problem, s0, seed=seed)
        _write_json(args, "solve.json", {
            "executor": "greedy", "total": traj.total,
            "steps": [[repr(s), repr(x), r] for s, x, r in traj.steps],
        })
        return 0
    if args.executor == "sdp":
        vf = ddsmod.stochastic_dp(problem, rollouts=200, seed=seed)
    elif args.executor == "chrono":
        vf = ddsmod.chrono_solve(problem)
    else:
        vf = ddsmod.exact_dp(problem)
    _write_text(args, "value_function.csv", vf.to_csv())
    _write_json(args, "solve.json", {
        "executor": args.executor,
        "value": vf.value(1, problem.state_key(s0)),
        "best_action": repr(vf.best_action(1, problem.state_key(s0))),
    })
    return 0


def cmd_dds_compare(args) -> int:
    problem = load_dds(args.fixture) if args.fixture else ddsmod.gd1()
    seed = _resolve_seed(args)
    s0 = problem.states(1)[0]
    greedy_total = ddsmod.greedy_run(problem, s0, seed=seed).total
    exact_value = ddsmod.exact_dp(problem).value(1, problem.state_key(s0))
    rows = [("greedy", greedy_total), ("exact", exact_value)]
    _write_text(args, "compare.csv", "method,value\n" + "".join(
        f"{m},{v}\n" for m, v in rows
    ))
    return 0


# ---------------------------------------------------------------------------
# cofo


def cmd_cofo_run(args) -> int:
    problem = load_cofo(args.fixture) if args.fixture else two_hypothesis_problem()
    seed = _resolve_seed(args)
    horizon = args.budget if args.budget is not None else 2
    adapter = make_cofo_dds(problem, horizon, seed=seed)
    d0 = ()
    if args.executor == "greedy":
        traj = ddsmod.greedy_run(adapter, d0, seed=seed)
        value = traj.total
    elif args.executor == "sdp":
        vf = ddsmod.stochastic_dp(adapter, rollouts=100, seed=seed)
        value = vf.value(1, adapter.state_key(d0))
    elif args.executor == "chrono":
        value = ddsmod.chrono_solve(adapter).value(1, adapter.state_key(d0))
    else:
        value = ddsmod.exact_dp(adapter).value(1, adapter.state_key(d0))
    _write_json(args, "cofo_run.json", {
        "executor": args.executor,
        "horizon": horizon,
        "starting_quality": quality(problem, d0),
        "achievable_entropy_drop": value,
    })
    return 0


# ---------------------------------------------------------------------------
# relalg


def _verify_suite(args, make_instance, verify) -> int:
    seed0 = _resolve_seed(args)
    want = args.instances
    satisfied = 0
    violations = []
    skipped = 0
    reports = []
    for offset in range(want * 20):
        instance = make_instance(seed0 + offset)
        report = verify(*instance)
        if not report.preconditions_hold:
            skipped += 1
            continue
        satisfied += 1
        if report.violated:
            violations.append(seed0 + offset)
        if len(reports) < 5:
            reports.append(report.to_dict())
        if satisfied >= want:
            break
    result = {
        "requested": want,
        "satisfied": satisfied,
        "skipped": skipped,
        "violating_seeds": violations,
        "sample_reports": reports,
    }
    _write_json(args, "verify.json", result)
    if violations or satisfied < want:
        raise CheckFailure(
            f"{len(violations)} violations over {satisfied}/{want} instances"
        )
    return 0


def cmd_relalg_verify_greedy(args) -> int:
    return _verify_suite(
        args, random_greedy_instance,
        lambda carriers, f, s, r: verify_greedy_theorem(s, r, f, carriers),
    )


def cmd_relalg_verify_dp(args) -> int:
    return _verify_suite(
        args, random_dp_instance,
        lambda carriers, f, s, t, r: verify_dp_theorem(s, t, r, f, carriers),
    )


# ---------------------------------------------------------------------------
# cog


def cmd_cog_chain(args) -> int:
    kb = load_metagraph(args.fixture)
    rules = load_rules(args.rules) if args.rules else [deduction_rule()]
    steps = args.budget if args.budget is not None else 3
    executor = "dds" if args.executor == "dp" else "greedy"
    res = forward_chain(kb, rules, steps, executor=executor, seed=_resolve_seed(args))
    _write_json(args, "chain.json", {
        "statements": {f"{a}->{b}": _tv_dict(tv) for (a, b), tv in sorted(res.statements.items())},
        "trace": [
            {"premises": [f"{a}->{b}" for a, b in premises], "rule": rname,
             "conclusion": f"{c[0]}->{c[1]}", "reward": reward}
            for premises, rname, c, reward in res.trace
        ],
        "stalled": res.stalled,
    })
    return 0


def cmd_cog_backchain(args) -> int:
    kb = load_metagraph(args.fixture)
    src, _, dst = args.target.partition(",")
    if not src or not dst:
        raise FixtureError(f"--target must look like SRC,DST, got {args.target!r}")
    budget = args.budget if args.budget is not None else 5
    tv, bid = backward_chain_tv(kb, (src, dst), budget, seed=_resolve_seed(args))
    _write_json(args, "backchain.json", {
        "target": f"{src}->{dst}",
        "tv": _tv_dict(tv),
        "expansions": bid.expansions,
        "nodes": [
            {"id": n.id, "statement": f"{n.statement[0]}->{n.statement[1]}",
             "rule": n.rule, "tv": _tv_dict(n.tv),
             "children": list(n.children), "leaf_kind": n.leaf_kind}
            for _, n in sorted(bid.nodes.items())
        ],
    })
    return 0


def cmd_cog_cluster(args) -> int:
    points, k = load_points(args.fixture)
    executor = "exact_dp" if args.executor == "dp" else "greedy"
    dist = lambda x, y: (
        (points[x][0] - points[y][0]) ** 2 + (points[x][1] - points[y][1]) ** 2
    ) ** 0.5
    clustering = agglomerate(list(points), dist, k, executor)
    _write_json(args, "clusters.json", {
        "blocks": sorted(sorted(b) for b in clustering.blocks),
        "quality": clustering.quality,
        "logical_entropy": clustering.logical_entropy,
    })
    return 0


def cmd_cog_mine(args) -> int:
    kb = load_metagraph(args.fixture)
    view = kb.snapshot()
    budget = args.budget if args.budget is not None else 5
    types = sorted({e.type_label for e in view.edges() if len(e.targets) == 2})
    seeds = [conj((t, ("X", "Y"))) for t in types]
    mined = mine_patterns(view, seeds, min_freq=args.min_freq, budget=budget,
                          seed=_resolve_seed(args))
    _write_json(args, "mined.json", [
        {"kind": m.pattern.kind,
         "clauses": [[t, list(vs)] for t, vs in m.pattern.sorted_clauses],
         "frequency": m.frequency,
         "surprisingness": m.surprisingness}
        for m in mined
    ])
    return 0


def cmd_cog_evolve(args) -> int:
    import random as _random

    seed = _resolve_seed(args)
    budget = args.budget if args.budget is not None else 2000
    rng = _random.Random(seed)
    pop0 = [tuple(rng.randint(0, 1) for _ in range(8)) for _ in range(20)]
    res = evolve(one_max, pop0, budget=budget, seed=seed,
                 mutate=point_mutation(1 / 8), crossover=uniform_crossover)
    _write_json(args, "evolve.json", {
        "best": list(res.best),
        "best_fitness": res.best_fitness,
        "evaluations": res.evaluations,
    })
    return 0


def cmd_cog_ecan(args) -> int:
    kb = load_metagraph(args.fixture)
    steps = args.budget if args.budget is not None else 10
    res = ecan_run(kb.snapshot(), q=args.quantum, steps=steps, seed=_resolve_seed(args))
    _write_json(args, "ecan.json", {
        "sti": {str(i): v for i, v in sorted(res.sti.items())},
        "transfers": len(res.transfers),
        "skipped": res.skipped,
    })
    return 0


# ---------------------------------------------------------------------------
# subpattern


def cmd_subpattern_audit(args) -> int:
    items, ops, _sm = load_subpattern(args.fixture)
    report = check_mutual_associativity(ops, items, seed=_resolve_seed(args))
    _write_json(args, "audit.json", report.to_dict())
    if not report.passed:
        raise CheckFailure(f"mutual associativity fails, witness {report.witness!r}")
    return 0


def cmd_subpattern_dag(args) -> int:
    items, ops, sm = load_subpattern(args.fixture)
    dag = build_subpattern_dag(items, ops, sm)
    dag.check(ops, sm)
    _write_json(args, "dag.json", dag.to_dict())
    return 0


def _five_item_alignment():
    """Greedy two-group agglomeration of five planar points, aligned against
    the union-merge subpattern dag over the blocks it visits."""
    import itertools

    from .cogkit.cluster import _merge, partition_quality

    points = {0: (0.0, 0.0), 1: (0.0, 1.0), 2: (10.0, 0.0), 3: (10.0, 1.0), 4: (10.0, 2.0)}
    dist = lambda x, y: (
        (points[x][0] - points[y][0]) ** 2 + (points[x][1] - points[y][1]) ** 2
    ) ** 0.5
    blocks = frozenset(frozenset([i]) for i in points)
    trace = []
    while len(blocks) > 2:
        a, b = max(
            itertools.combinations(sorted(blocks, key=sorted), 2),
            key=lambda ab: partition_quality(_merge(blocks, *ab), dist),
        )
        blocks = _merge(blocks, a, b)
        trace.append((a | b, a))
        trace.append((a | b, b))
    items = sorted({v for edge in trace for v in edge}, key=sorted)
    sm = SimplicityMeasure(
        sigma=lambda s: float(len(s) ** 2), sigma_star=lambda name, y, z: 1.0
    )
    dag = build_subpattern_dag(items, {"merge": disjoint_union}, sm)
    mapping = {v: v for v in items}
    return trace, dag, mapping


def cmd_subpattern_align(args) -> int:
    trace, dag, mapping = _five_item_alignment()
    score = alignment_score(trace, dag, mapping)
    _write_json(args, "align.json", {
        "score": score,
        "trace_edges": [[sorted(p), sorted(c)] for p, c in trace],
        "dag_edges": [[sorted(x), sorted(y)] for x, y, _ in dag.edges],
    })
    return 0


# ---------------------------------------------------------------------------
# morph


def cmd_morph_demo(args) -> int:
    mg = TypedMetagraph()
    x = mg.add_node("X")
    y = mg.add_node("Y")
    e1 = mg.add_edge("pair", [x, y])
    e2 = mg.add_edge("pair", [x, y])
    mg.add_edge("top", [e1, e2])
    view = mg.snapshot()
    count = Algebra(unit=0, combine=lambda acc, ctx: acc + 1,
                    merge=lambda a, b: a + b, declared_associative=True)
    total = fold(view, count)
    _value, hits = histo_fold(view, count)
    run = fold_run(view, count)
    run_steps(run, 2)
    resumed = complete(run)
    _write_json(args, "morph.json", {
        "atom_count": total,
        "histo_memo_hits": hits,
        "suspended_resume_matches": resumed == total,
    })
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixture", help="path to a JSON fixture")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default="out", help="artifact directory")
    common.add_argument("--instances", type=int, default=100)
    common.add_argument("--budget", type=int, default=None)
    common.add_argument("--executor", choices=["greedy", "dp", "sdp", "chrono"],
                        default="dp")

    parser = argparse.ArgumentParser(prog="cogpat")
    top = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, handler, **extra):
        p = sub.add_parser(name, parents=[common])
        for flag, kw in extra.items():
            p.add_argument(flag, **kw)
        p.set_defaults(handler=handler)

    dds_sub = top.add_parser("dds").add_subparsers(dest="cmd", required=True)
    leaf(dds_sub, "solve", cmd_dds_solve)
    leaf(dds_sub, "compare", cmd_dds_compare)

    cofo_sub = top.add_parser("cofo").add_subparsers(dest="cmd", required=True)
    leaf(cofo_sub, "run", cmd_cofo_run)

    relalg_sub = top.add_parser("relalg").add_subparsers(dest="cmd", required=True)
    leaf(relalg_sub, "verify-greedy", cmd_relalg_verify_greedy)
    leaf(relalg_sub, "verify-dp", cmd_relalg_verify_dp)

    cog_sub = top.add_parser("cog").add_subparsers(dest="cmd", required=True)
    leaf(cog_sub, "chain", cmd_cog_chain, **{"--rules": {"help": "rule set fixture"}})
    leaf(cog_sub, "backchain", cmd_cog_backchain,
         **{"--target": {"required": True, "help": "SRC,DST statement"}})
    leaf(cog_sub, "cluster", cmd_cog_cluster)
    leaf(cog_sub, "mine", cmd_cog_mine,
         **{"--min-freq": {"type": float, "default": 0.05, "dest": "min_freq"}})
    leaf(cog_sub, "evolve", cmd_cog_evolve)
    leaf(cog_sub, "ecan", cmd_cog_ecan,
         **{"--quantum": {"type": float, "default": 1.0}})

    sp_sub = top.add_parser("subpattern").add_subparsers(dest="cmd", required=True)
    leaf(sp_sub, "audit", cmd_subpattern_audit)
    leaf(sp_sub, "dag", cmd_subpattern_dag)
    leaf(sp_sub, "align", cmd_subpattern_align)

    morph_sub = top.add_parser("morph").add_subparsers(dest="cmd", required=True)
    leaf(morph_sub, "demo", cmd_morph_demo)

    return parser


_NEEDS_FIXTURE = {
    cmd_cog_chain, cmd_cog_backchain, cmd_cog_cluster, cmd_cog_mine,
    cmd_cog_ecan, cmd_subpattern_audit, cmd_subpattern_dag,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        if args.handler in _NEEDS_FIXTURE and not args.fixture:
            raise FixtureError("this command requires --fixture")
        return args.handler(args)
    except FixtureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
