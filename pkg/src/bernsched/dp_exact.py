"""Exact optimal policy by dynamic programming, plus two slow oracles.

The state is a sorted machine load profile together with per-type counts
of unscheduled jobs.  At the earliest machine-available time the policy
picks a type; the next job of that type is the remaining one with the
smallest probability.  With probability q the job is long (the machine's
load grows by p_j), otherwise it completes immediately.

``brute_force_oracle`` deliberately shares none of these compressions:
machine loads stay unsorted and jobs keep their identities, so it serves
as an independent check.  ``idling_oracle`` additionally lets the policy
defer a free machine to the next completion epoch; its value matching the
non-idling one is itself a property under test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .instances import Instance


class SolverCapError(RuntimeError):
    """Raised when the state count exceeds the configured cap."""

    def __init__(self, states):
        super().__init__(f"state cap exceeded ({states} states)")
        self.states = states


def initial_profile(m: int) -> tuple:
    return (Fraction(0),) * m


def next_q(inst: Instance, j: int, nu_j: int) -> float:
    """Probability of the next (minimum-q) remaining job of type j."""
    t = inst.types[j]
    return t.qs[t.count - nu_j]


@dataclass
class ExactSolution:
    value: float
    policy: dict  # (profile, nu) -> type index
    states: int


def solve_exact(inst: Instance, max_jobs: int = 12,
                state_cap: int = 2_000_000) -> ExactSolution:
    """Optimal expected total completion time over all non-anticipatory
    policies, with the chosen type recorded per state.

    Costs are kept as exact rationals internally (the stored q floats
    convert to Fraction without loss), so ties break by lowest type index
    deterministically and decisions are invariant under size scaling; the
    reported value is a float.
    """
    if inst.total_jobs > max_jobs:
        raise SolverCapError(inst.total_jobs)
    sizes = [t.size for t in inst.types]
    counts = inst.counts
    memo = {}
    policy = {}

    def cost(profile, nu):
        if not any(nu):
            return Fraction(0)
        key = (profile, nu)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if len(memo) > state_cap:
            raise SolverCapError(len(memo))
        t_star = profile[0]
        best = None
        best_j = None
        for j in range(len(nu)):
            if nu[j] == 0:
                continue
            q = Fraction(next_q(inst, j, nu[j]))
            nu2 = nu[:j] + (nu[j] - 1,) + nu[j + 1:]
            long_profile = tuple(sorted(profile[1:] + (t_star + sizes[j],)))
            v = q * (cost(long_profile, nu2) + t_star + sizes[j]) \
                + (1 - q) * (cost(profile, nu2) + t_star)
            if best is None or v < best:
                best = v
                best_j = j
        memo[key] = best
        policy[key] = best_j
        return best

    value = float(cost(initial_profile(inst.machines), counts))
    return ExactSolution(value=value, policy=policy, states=len(memo))


def brute_force_oracle(inst: Instance, max_jobs: int = 6) -> float:
    """Expectimax over raw states: unsorted machine-indexed loads and
    explicit job subsets, no within-type compression."""
    if inst.total_jobs > max_jobs:
        raise SolverCapError(inst.total_jobs)
    jobs = inst.job_ids()
    size = {job: inst.job_size(job) for job in jobs}
    prob = {job: inst.job_q(job) for job in jobs}

    @lru_cache(maxsize=None)
    def cost(loads, remaining):
        if not remaining:
            return 0.0
        t_star = min(loads)
        i_star = loads.index(t_star)
        t = float(t_star)
        best = None
        for job in remaining:
            rest = frozenset(remaining) - {job}
            long_loads = loads[:i_star] + (t_star + size[job],) + loads[i_star + 1:]
            q = prob[job]
            v = q * (cost(long_loads, rest) + t + float(size[job])) \
                + (1.0 - q) * (cost(loads, rest) + t)
            if best is None or v < best:
                best = v
        return best

    result = cost((Fraction(0),) * inst.machines, frozenset(jobs))
    cost.cache_clear()
    return result


def idling_oracle(inst: Instance, max_jobs: int = 4) -> float:
    """Expectimax where the free machine may also be deferred to the next
    completion epoch (the next strictly larger load) instead of starting a
    job.  Deferral is only available while some machine is ahead."""
    if inst.total_jobs > max_jobs:
        raise SolverCapError(inst.total_jobs)
    jobs = inst.job_ids()
    size = {job: inst.job_size(job) for job in jobs}
    prob = {job: inst.job_q(job) for job in jobs}

    @lru_cache(maxsize=None)
    def cost(loads, remaining):
        if not remaining:
            return 0.0
        t_star = min(loads)
        i_star = loads.index(t_star)
        t = float(t_star)
        best = None
        for job in remaining:
            rest = frozenset(remaining) - {job}
            long_loads = loads[:i_star] + (t_star + size[job],) + loads[i_star + 1:]
            q = prob[job]
            v = q * (cost(long_loads, rest) + t + float(size[job])) \
                + (1.0 - q) * (cost(loads, rest) + t)
            if best is None or v < best:
                best = v
        ahead = [x for x in loads if x > t_star]
        if ahead:
            idle_loads = loads[:i_star] + (min(ahead),) + loads[i_star + 1:]
            v = cost(idle_loads, remaining)
            if v < best:
                best = v
        return best

    result = cost((Fraction(0),) * inst.machines, frozenset(jobs))
    cost.cache_clear()
    return result
