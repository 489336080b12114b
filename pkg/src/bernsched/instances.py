"""Instance model: validation, canonical ordering, grouping and rounding.

An instance consists of m identical machines and N Bernoulli jobs.  A job
of type j has processing time p_j (its "size") with probability q and 0
otherwise.  Types are kept in strictly decreasing size order and the jobs
of a type in non-decreasing order of probability; every operation below
preserves (or restores) that canonical form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .numerics import ceil_to_multiple_of, divides, format_rat, parse_rat


class InstanceError(ValueError):
    pass


@dataclass(frozen=True)
class JobType:
    """A distinct size with its per-job success probabilities (ascending)."""

    size: Fraction
    qs: tuple  # floats in (0, 1], non-decreasing

    @property
    def count(self) -> int:
        return len(self.qs)


@dataclass(frozen=True)
class Instance:
    machines: int
    epsilon: Fraction  # 1/E for integer E >= 2
    types: tuple  # JobType, sizes strictly decreasing

    @property
    def n_types(self) -> int:
        return len(self.types)

    @property
    def counts(self) -> tuple:
        return tuple(t.count for t in self.types)

    @property
    def total_jobs(self) -> int:
        return sum(t.count for t in self.types)

    def job_ids(self):
        """All job ids as (type_index, position-within-type)."""
        return [(j, i) for j, t in enumerate(self.types) for i in range(t.count)]

    def job_q(self, job_id) -> float:
        j, i = job_id
        return self.types[j].qs[i]

    def job_size(self, job_id) -> Fraction:
        return self.types[job_id[0]].size


@dataclass(frozen=True)
class GroupStructure:
    """Partition of the types into size groups G_1..G_gamma.

    Consecutive groups are separated by a factor >= 1/eps^2; within a group
    sizes are within eps^{-2(|G_h|-1)} of each other.  The representative of
    a group is its smallest size.
    """

    groups: tuple  # tuple of tuples of type indices, contiguous
    reps: tuple  # Fraction, smallest size per group
    pmaxs: tuple  # Fraction, largest size per group

    @property
    def gamma(self) -> int:
        return len(self.groups)

    @property
    def z(self) -> int:
        return max(len(g) for g in self.groups)

    def group_of(self, type_index: int) -> int:
        for h, g in enumerate(self.groups):
            if type_index in g:
                return h
        raise InstanceError(f"type {type_index} not in any group")

    def group_of_map(self) -> list:
        out = {}
        for h, g in enumerate(self.groups):
            for j in g:
                out[j] = h
        return [out[j] for j in sorted(out)]


@dataclass(frozen=True)
class InstanceStats:
    delta: float  # largest squared coefficient of variation


def validate_and_canonicalize(machines, epsilon, raw_types) -> Instance:
    """Build a canonical instance from raw (size, [q...]) pairs.

    Duplicate sizes are merged into one type, types are sorted by size
    descending and probabilities ascending within each type.
    """
    if machines < 1:
        raise InstanceError("need at least one machine")
    eps = parse_rat(epsilon)
    if eps.numerator != 1 or eps.denominator < 2:
        raise InstanceError(f"epsilon must be 1/E with integer E >= 2, got {eps}")

    by_size = {}
    for size, qs in raw_types:
        p = parse_rat(size)
        if p <= 0:
            raise InstanceError(f"non-positive size {size}")
        for q in qs:
            if not (0.0 < q <= 1.0):
                raise InstanceError(f"probability {q} outside (0, 1]")
        by_size.setdefault(p, []).extend(float(q) for q in qs)

    types = tuple(
        JobType(size=p, qs=tuple(sorted(by_size[p])))
        for p in sorted(by_size, reverse=True)
    )
    if sum(t.count for t in types) == 0:
        raise InstanceError("empty job list")
    return Instance(machines=machines, epsilon=eps, types=types)


def canonicalize(inst: Instance) -> Instance:
    return validate_and_canonicalize(
        inst.machines, inst.epsilon, [(t.size, list(t.qs)) for t in inst.types]
    )


def build_groups(inst: Instance) -> GroupStructure:
    """Greedy partition of types into size groups.

    The next type joins the current group iff its size exceeds eps^2 times
    the previous type's size; otherwise a new group starts.
    """
    eps2 = inst.epsilon * inst.epsilon
    groups = []
    current = [0]
    for j in range(1, inst.n_types):
        if inst.types[j].size > eps2 * inst.types[j - 1].size:
            current.append(j)
        else:
            groups.append(tuple(current))
            current = [j]
    groups.append(tuple(current))

    reps = tuple(inst.types[g[-1]].size for g in groups)  # sizes descend in j
    pmaxs = tuple(inst.types[g[0]].size for g in groups)
    gs = GroupStructure(groups=tuple(groups), reps=reps, pmaxs=pmaxs)
    _check_separation(inst, gs)
    return gs


def _check_separation(inst: Instance, gs: GroupStructure):
    eps2 = inst.epsilon * inst.epsilon
    for h in range(1, gs.gamma):
        for j in gs.groups[h - 1]:
            for jp in gs.groups[h]:
                if inst.types[j].size * eps2 < inst.types[jp].size:
                    raise InstanceError(
                        f"groups {h - 1},{h} not eps^-2 separated "
                        f"({inst.types[j].size} vs {inst.types[jp].size})"
                    )


def round_for_divisibility(inst: Instance, groups: GroupStructure):
    """Round sizes up so representatives divide each other across groups and
    eps * p_{G_h} divides every size in G_h.

    Representatives are processed from the smallest group upward; every size
    grows by a factor at most (1 + eps).  Types whose rounded sizes collide
    are merged (the merges are returned, not an error).

    Returns (rounded_instance, new_groups, merges) where merges is a list of
    rounded sizes that absorbed more than one original type.
    """
    eps = inst.epsilon
    gamma = groups.gamma

    new_reps = list(groups.reps)
    for h in range(gamma - 2, -1, -1):
        new_reps[h] = ceil_to_multiple_of(groups.reps[h], new_reps[h + 1])

    rounded = []  # (new_size, qs, old_size)
    for h, g in enumerate(groups.groups):
        grid = eps * new_reps[h]
        for j in g:
            old = inst.types[j].size
            new = max(ceil_to_multiple_of(old, grid), new_reps[h])
            if new > (1 + eps) * old:
                raise InstanceError(
                    f"divisibility rounding grew {old} to {new}, beyond (1+eps)"
                )
            rounded.append((new, inst.types[j].qs, old))

    by_size = {}
    for new, qs, _old in rounded:
        by_size.setdefault(new, []).extend(qs)
    merges = sorted(
        p for p, _qs in by_size.items()
        if sum(1 for s, _q, _o in rounded if s == p) > 1
    )

    out = validate_and_canonicalize(
        inst.machines, eps, [(p, qs) for p, qs in by_size.items()]
    )
    new_groups = build_groups(out)
    if not partition_unchanged(inst, groups, out, new_groups):
        raise InstanceError("divisibility rounding changed the group partition")
    for h in range(1, new_groups.gamma):
        if not divides(new_groups.reps[h], new_groups.reps[h - 1]):
            raise InstanceError("representative divisibility failed after rounding")
    return out, new_groups, merges


def partition_unchanged(inst_before, groups_before, inst_after, groups_after) -> bool:
    """Check that rounding preserved the partition: same number of groups
    and each group still covers the same number of jobs."""
    if groups_before.gamma != groups_after.gamma:
        return False
    counts_before = [sum(inst_before.types[j].count for j in g)
                     for g in groups_before.groups]
    counts_after = [sum(inst_after.types[j].count for j in g)
                    for g in groups_after.groups]
    return counts_before == counts_after


def round_to_powers_of_c(inst: Instance, c: int):
    """Replace every size by the smallest power c^k >= size, after uniformly
    scaling so the minimum size is at least c (so k >= 1 throughout).

    Returns (rounded_instance, scale) where scale is the uniform multiplier
    applied before rounding.  Uniform scaling does not affect policy
    decisions (scale invariance of the exact DP).
    """
    if c < 2:
        raise InstanceError("c must be at least 2")
    pmin = min(t.size for t in inst.types)
    scale = Fraction(1)
    if pmin < c:
        # smallest integer power of c making pmin >= c
        scale = Fraction(1)
        while pmin * scale < c:
            scale *= c

    by_size = {}
    for t in inst.types:
        target = t.size * scale
        power = Fraction(c)
        while power < target:
            power *= c
        if power >= c * target:
            raise InstanceError("power-of-c rounding exceeded factor c")
        by_size.setdefault(power, []).extend(t.qs)

    out = validate_and_canonicalize(
        inst.machines, inst.epsilon, [(p, qs) for p, qs in by_size.items()]
    )
    return out, scale


def partition_sml(inst: Instance, scale):
    """Split jobs into small / medium / large classes by normalized size.

    ``scale`` is an upper-bound proxy for the optimal expected cost (the
    harness uses SEPT's simulated cost); normalized sizes below 1/N^2 are
    small, those at or above N^8 are large.
    """
    scale = Fraction(scale) if not isinstance(scale, Fraction) else scale
    if scale <= 0:
        raise InstanceError("normalization scale must be positive")
    n_jobs = inst.total_jobs
    lo = Fraction(1, n_jobs * n_jobs)
    hi = Fraction(n_jobs) ** 8
    small, medium, large = [], [], []
    for job in inst.job_ids():
        norm = inst.job_size(job) / scale
        if norm < lo:
            small.append(job)
        elif norm >= hi:
            large.append(job)
        else:
            medium.append(job)
    return small, medium, large


def compute_stats(inst: Instance) -> InstanceStats:
    # Var[X]/E[X]^2 = (1-q)/q for a Bernoulli job
    delta = max((1.0 - q) / q for t in inst.types for q in t.qs)
    return InstanceStats(delta=delta)


def scale_instance(inst: Instance, factor) -> Instance:
    """Multiply all sizes by a positive factor (epsilon unchanged)."""
    factor = Fraction(factor)
    if factor <= 0:
        raise InstanceError("scale factor must be positive")
    return Instance(
        machines=inst.machines,
        epsilon=inst.epsilon,
        types=tuple(JobType(size=t.size * factor, qs=t.qs) for t in inst.types),
    )


# ---------------------------------------------------------------------------
# JSON I/O.  Schema:
# { "machines": int, "epsilon": "1/E",
#   "types": [ { "size": "num/den", "jobs": [q floats ascending] } ] }
# ---------------------------------------------------------------------------

def instance_to_dict(inst: Instance) -> dict:
    return {
        "machines": inst.machines,
        "epsilon": format_rat(inst.epsilon),
        "types": [
            {"size": format_rat(t.size), "jobs": list(t.qs)} for t in inst.types
        ],
    }


def instance_from_dict(d: dict) -> Instance:
    try:
        raw = [(t["size"], t["jobs"]) for t in d["types"]]
        return validate_and_canonicalize(int(d["machines"]), d["epsilon"], raw)
    except (KeyError, TypeError) as exc:
        raise InstanceError(f"malformed instance JSON: {exc}") from exc


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: Instance, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=True)
        fh.write("\n")
