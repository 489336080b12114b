"""Command-line front end.

Subcommands: gen, solve-exact, solve-stratified, simulate, compare,
grid-dump, round.  All numeric times print as exact "num/den" strings;
JSON outputs follow the documented schemas.  Exit code is nonzero on any
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dp_exact import solve_exact
from .dp_stratified import solve_stratified
from .harness import (
    BoundViolation,
    ExperimentSpec,
    compare,
    generate,
    prepare,
    report,
)
from .instances import (
    Instance,
    build_groups,
    instance_to_dict,
    load_instance,
    round_for_divisibility,
    round_to_powers_of_c,
    save_instance,
)
from .numerics import format_rat, parse_rat
from .policies import (
    ExactTablePolicy,
    FixedAssignmentPolicy,
    ReplayError,
    SeptPolicy,
    StratifiedTablePolicy,
    expected_cost_exact,
    expected_cost_mc,
)


def _profile_str(profile):
    return ",".join(format_rat(x) for x in profile)


def state_to_str(key) -> str:
    profile, nu = key
    return f"[{_profile_str(profile)}]|[{','.join(str(v) for v in nu)}]"


def str_to_state(s: str):
    ppart, npart = s.split("|")
    profile = tuple(
        parse_rat(x) for x in ppart.strip("[]").split(",") if x
    )
    nu = tuple(int(x) for x in npart.strip("[]").split(",") if x)
    return profile, nu


def dump_policy(table, kind: str, path: str):
    decisions = {}
    for key, decision in table.items():
        if isinstance(decision, tuple):
            value = "idle" if decision[0] == "idle" else decision[1]
        else:
            value = decision
        decisions[state_to_str(key)] = value
    with open(path, "w") as fh:
        json.dump({"kind": kind, "decisions": decisions}, fh, indent=2)
        fh.write("\n")


def load_policy_file(path: str):
    with open(path) as fh:
        data = json.load(fh)
    table = {}
    for s, value in data["decisions"].items():
        key = str_to_state(s)
        if data["kind"] == "stratified":
            table[key] = ("idle",) if value == "idle" else ("start", int(value))
        else:
            table[key] = int(value)
    return data["kind"], table


def _build_policy(name: str, inst: Instance):
    """Returns (policy, evaluation_instance)."""
    if name == "sept":
        return SeptPolicy(), inst
    if name == "fixed":
        return FixedAssignmentPolicy(), inst
    if name == "exact":
        return ExactTablePolicy(solve_exact(inst)), inst
    if name == "stratified":
        rounded, groups, grid, _ = prepare(inst)
        sol = solve_stratified(rounded, groups, grid)
        return StratifiedTablePolicy(sol, grid), rounded
    if name.startswith("file:"):
        kind, table = load_policy_file(name[5:])
        if kind == "stratified":
            rounded, groups, grid, _ = prepare(inst)

            class _Sol:
                policy = table

            return StratifiedTablePolicy(_Sol(), grid), rounded

        class _Sol:
            policy = table

        return ExactTablePolicy(_Sol()), inst
    raise SystemExit(f"unknown policy {name!r}")


def cmd_gen(args):
    spec = ExperimentSpec(
        n_types=args.types, jobs_per_type=args.jobs, machines=args.machines,
        epsilon=args.epsilon, scheme=args.scheme, count=args.count,
        seed=args.seed, c=args.c,
    )
    instances = generate(spec)
    for k, inst in enumerate(instances):
        path = f"{args.out_prefix}{k:04d}.json"
        save_instance(inst, path)
        print(path)


def cmd_solve_exact(args):
    inst = load_instance(args.instance)
    sol = solve_exact(inst)
    if args.dump_policy:
        dump_policy(sol.policy, "exact", args.dump_policy)
    print(json.dumps({"value": sol.value, "states": sol.states}))


def cmd_solve_stratified(args):
    inst = load_instance(args.instance)
    rounded, groups, grid, merges = prepare(inst)
    sol = solve_stratified(rounded, groups, grid)
    if args.dump_policy:
        dump_policy(sol.policy, "stratified", args.dump_policy)
    if args.diagnostics:
        with open(args.diagnostics, "w") as fh:
            json.dump(sol.diagnostics.as_dict(), fh, indent=2)
            fh.write("\n")
    print(json.dumps({
        "value": sol.value,
        "states": sol.diagnostics.states,
        "merged_sizes": [format_rat(p) for p in merges],
    }))


def cmd_simulate(args):
    inst = load_instance(args.instance)
    policy, eval_inst = _build_policy(args.policy, inst)
    if args.enumerate:
        mean = expected_cost_exact(policy, eval_inst)
        out = {"mean": mean, "stderr": 0.0, "method": "enum"}
    else:
        mean, stderr = expected_cost_mc(
            policy, eval_inst, trials=args.trials, seed=args.seed
        )
        out = {"mean": mean, "stderr": stderr, "method": "mc"}
    print(json.dumps(out))


def cmd_compare(args):
    if args.instances:
        instances = [load_instance(p) for p in args.instances]
    else:
        spec = ExperimentSpec(
            n_types=args.types, jobs_per_type=args.jobs,
            machines=args.machines, epsilon=args.epsilon,
            scheme=args.scheme, count=args.count, seed=args.seed,
        )
        instances = generate(spec)
    try:
        rows = compare(instances)
    except BoundViolation as exc:
        save_instance(exc.instance, "bound_violation_instance.json")
        print(f"BOUND VIOLATION: {exc}", file=sys.stderr)
        print("offending instance saved to bound_violation_instance.json",
              file=sys.stderr)
        raise SystemExit(1)
    summary = report(rows, csv_path=args.csv, json_path=args.json_out)
    print(json.dumps(summary))


def cmd_grid_dump(args):
    inst = load_instance(args.instance)
    rounded, groups, grid, _ = prepare(inst)
    print("thresholds:")
    for h in range(groups.gamma):
        print(f"  group {h + 1}: p*={format_rat(grid.thresholds.p_star[h])}"
              f" p°={format_rat(grid.thresholds.p_circ[h])}")
    print(f"endpoint prefix ({len(grid.prefix)} points, then tail step "
          f"{format_rat(grid.tail_step)} from {format_rat(grid.tail_start)}):")
    shown = grid.prefix[:args.members]
    print("  " + " ".join(format_rat(x) for x in shown))
    for h in range(groups.gamma):
        members = grid.iter_members(h, args.members)
        print(f"Q group {h + 1}: "
              + " ".join(format_rat(x) for x in members))


def cmd_round(args):
    inst = load_instance(args.instance)
    if args.mode == "divisibility":
        groups = build_groups(inst)
        out, _groups, merges = round_for_divisibility(inst, groups)
        if merges:
            print("merged sizes: "
                  + " ".join(format_rat(p) for p in merges), file=sys.stderr)
    else:
        out, scale = round_to_powers_of_c(inst, args.c)
        print(f"pre-scale factor: {format_rat(scale)}", file=sys.stderr)
    if args.out:
        save_instance(out, args.out)
    else:
        print(json.dumps(instance_to_dict(out), indent=2))


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bernsched")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate instance files")
    p.add_argument("--types", type=int, default=2)
    p.add_argument("--jobs", type=int, default=2)
    p.add_argument("--machines", type=int, default=1)
    p.add_argument("--epsilon", default="1/13")
    p.add_argument("--scheme", default="separated",
                   choices=["separated", "grouped", "powers-of-c"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--c", type=int, default=169)
    p.add_argument("--out-prefix", default="instance_")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve-exact", help="optimal value by exact DP")
    p.add_argument("--instance", required=True)
    p.add_argument("--dump-policy")
    p.set_defaults(func=cmd_solve_exact)

    p = sub.add_parser("solve-stratified",
                       help="optimal grid-restricted value")
    p.add_argument("--instance", required=True)
    p.add_argument("--dump-policy")
    p.add_argument("--diagnostics")
    p.set_defaults(func=cmd_solve_stratified)

    p = sub.add_parser("simulate", help="evaluate a policy")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--enumerate", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="exact vs grid-restricted table")
    p.add_argument("--instances", nargs="*")
    p.add_argument("--types", type=int, default=2)
    p.add_argument("--jobs", type=int, default=2)
    p.add_argument("--machines", type=int, default=1)
    p.add_argument("--epsilon", default="1/13")
    p.add_argument("--scheme", default="separated")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("grid-dump", help="print thresholds, endpoints, Q sets")
    p.add_argument("--instance", required=True)
    p.add_argument("--members", type=int, default=20)
    p.set_defaults(func=cmd_grid_dump)

    p = sub.add_parser("round", help="apply a rounding reduction")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", default="divisibility",
                   choices=["divisibility", "powers"])
    p.add_argument("--c", type=int, default=169)
    p.add_argument("--out")
    p.set_defaults(func=cmd_round)

    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ReplayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
