"""Instance generation, solver orchestration, and ratio reporting."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from fractions import Fraction

from .dp_exact import SolverCapError, solve_exact
from .dp_stratified import sandwich_bound, solve_stratified
from .instances import (
    Instance,
    build_groups,
    round_for_divisibility,
    validate_and_canonicalize,
)
from .numerics import SeedStream
from .policies import FixedAssignmentPolicy, SeptPolicy, expected_cost_exact
from .timegrid import build_grid


@dataclass(frozen=True)
class ExperimentSpec:
    """Reproducible generator settings: same spec and seed, same instances."""

    n_types: int = 2
    jobs_per_type: int = 2
    machines: int = 1
    epsilon: str = "1/13"
    scheme: str = "separated"  # separated | grouped | powers-of-c
    q_choices: tuple = (0.25, 0.5, 0.75, 1.0)
    count: int = 10
    seed: int = 0
    c: int = 169


def generate(spec: ExperimentSpec):
    """Instances per the chosen size scheme.

    separated: consecutive sizes obey p_{j+1} <= eps^2 p_j (asserted);
    grouped: sizes cluster within small factors of each other;
    powers-of-c: every size is an exact power of spec.c.
    """
    eps = Fraction(spec.epsilon)
    out = []
    for k in range(spec.count):
        rng = SeedStream(spec.seed, k).generator()
        sizes = []
        if spec.scheme == "separated":
            sep = eps.denominator ** 2
            p = Fraction(int(rng.integers(1, 6)))
            for _ in range(spec.n_types):
                sizes.append(p)
                p = p * sep * int(rng.integers(1, 4))
            sizes.reverse()
            for a, b in zip(sizes, sizes[1:]):
                assert b <= eps * eps * a
        elif spec.scheme == "grouped":
            base = Fraction(int(rng.integers(1, 6)))
            for _ in range(spec.n_types):
                sizes.append(base)
                base = base * (1 + Fraction(int(rng.integers(1, 4)), 5))
            sizes = sorted(set(sizes), reverse=True)
        elif spec.scheme == "powers-of-c":
            # consecutive exponents keep the size ratio at c, so the grid's
            # fine prefix stays desk-scale (its length grows with the ratio)
            start = int(rng.integers(1, 3))
            exps = range(start, start + spec.n_types)
            sizes = [Fraction(spec.c) ** e for e in reversed(exps)]
        else:
            raise ValueError(f"unknown scheme {spec.scheme!r}")
        raw = []
        for p in sizes:
            qs = [
                float(spec.q_choices[int(rng.integers(0, len(spec.q_choices)))])
                for _ in range(spec.jobs_per_type)
            ]
            raw.append((p, qs))
        out.append(
            validate_and_canonicalize(spec.machines, spec.epsilon, raw)
        )
    return out


def prepare(inst: Instance):
    """Divisibility-round and build the grid: (rounded, groups, grid, merges)."""
    groups = build_groups(inst)
    rounded, groups2, merges = round_for_divisibility(inst, groups)
    grid = build_grid(rounded, groups2)
    return rounded, groups2, grid, merges


def solve_pipeline(inst: Instance, **caps):
    """Round, grid, solve: (solution, grid, rounded_instance).

    This is the inner-solver shape the composite policy expects.
    """
    rounded, groups, grid, _merges = prepare(inst)
    solution = solve_stratified(rounded, groups, grid, **caps)
    return solution, grid, rounded


@dataclass
class ComparisonRow:
    instance_id: str
    n_types: int = 0
    total_jobs: int = 0
    machines: int = 0
    exact_value: float = float("nan")
    stratified_value: float = float("nan")
    ratio: float = float("nan")
    bound: float = float("nan")
    sept_value: float = float("nan")
    fixed_value: float = float("nan")
    exact_states: int = 0
    stratified_states: int = 0
    exact_seconds: float = 0.0
    stratified_seconds: float = 0.0
    skipped: str = ""

    FIELDS = (
        "instance_id", "n_types", "total_jobs", "machines", "exact_value",
        "stratified_value", "ratio", "bound", "sept_value", "fixed_value",
        "exact_states", "stratified_states", "exact_seconds",
        "stratified_seconds", "skipped",
    )

    def as_dict(self):
        return {name: getattr(self, name) for name in self.FIELDS}


class BoundViolation(RuntimeError):
    def __init__(self, row, inst):
        super().__init__(
            f"ratio {row.ratio} outside [1, {row.bound}] on {row.instance_id}"
        )
        self.row = row
        self.instance = inst


def compare(instances, heuristics: bool = True, **caps):
    """One row per instance: exact vs grid-restricted values, their ratio
    against the analytic bound, and heuristic baselines.  A ratio outside
    [1 - 1e-9, bound + 1e-9] aborts with the offending instance attached."""
    rows = []
    for idx, inst in enumerate(instances):
        row = ComparisonRow(
            instance_id=f"i{idx:04d}",
            n_types=inst.n_types,
            total_jobs=inst.total_jobs,
            machines=inst.machines,
        )
        row.bound = float(sandwich_bound(inst.n_types, inst.epsilon))
        try:
            t0 = time.perf_counter()
            exact = solve_exact(inst, **caps)
            row.exact_seconds = time.perf_counter() - t0
            row.exact_value = exact.value
            row.exact_states = exact.states

            t0 = time.perf_counter()
            solution, grid, rounded = solve_pipeline(inst, **caps)
            row.stratified_seconds = time.perf_counter() - t0
            row.stratified_value = solution.value
            row.stratified_states = solution.diagnostics.states

            row.ratio = row.stratified_value / row.exact_value \
                if row.exact_value else 1.0
            if heuristics:
                row.sept_value = expected_cost_exact(SeptPolicy(), inst)
                row.fixed_value = expected_cost_exact(
                    FixedAssignmentPolicy(), inst
                )
        except SolverCapError as exc:
            row.skipped = str(exc)
            rows.append(row)
            continue
        if not (1.0 - 1e-9 <= row.ratio <= row.bound + 1e-9):
            raise BoundViolation(row, inst)
        rows.append(row)
    return rows


def report(rows, csv_path=None, json_path=None):
    """CSV (fixed header) and JSON (array plus summary block) outputs."""
    summary = {
        "rows": len(rows),
        "skipped": sum(1 for r in rows if r.skipped),
        "max_ratio": max(
            (r.ratio for r in rows if not r.skipped), default=float("nan")
        ),
        "max_states": max(
            (r.stratified_states for r in rows if not r.skipped), default=0
        ),
    }
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=ComparisonRow.FIELDS)
            writer.writeheader()
            for r in rows:
                writer.writerow(r.as_dict())
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(
                {"rows": [r.as_dict() for r in rows], "summary": summary},
                fh, indent=2,
            )
            fh.write("\n")
    return summary
