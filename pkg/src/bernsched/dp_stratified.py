"""Near-optimal policy over grid-restricted start times.

Same state space shape as the exact solver, but machine available-times
live on the allowed-start-time sets of the time grid: a long job of group
h pushes its machine to the next Q_h point at or beyond
max(p_circ[h], completion), and when nothing can start at the earliest
available time all lagging machines are advanced together to the next
allowed point of the smallest remaining type.  The optimum over this
restricted class sandwiches the true optimum to within a factor that
shrinks with eps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .instances import GroupStructure, Instance
from .dp_exact import SolverCapError, initial_profile, next_q
from .timegrid import GridError, TimeGrid


@dataclass(frozen=True)
class Diagnostics:
    relevant_time_points: int
    max_profiles_per_timepoint: int
    states: int

    def as_dict(self):
        return {
            "relevant_time_points": self.relevant_time_points,
            "max_profiles_per_timepoint": self.max_profiles_per_timepoint,
            "states": self.states,
        }


def time_point_ceiling(inst: Instance) -> int:
    """Sanity ceiling on distinct decision times: N^n * eps^(-2n)."""
    n = inst.n_types
    e = inst.epsilon.denominator
    return inst.total_jobs ** n * e ** (2 * n)


def profiles_per_timepoint_ceiling(inst: Instance, groups: GroupStructure) -> int:
    """Sanity ceiling on load profiles sharing one earliest-available time:
    product over groups of C(eps^(-2|G_h|) + m, m)."""
    e = inst.epsilon.denominator
    m = inst.machines
    out = 1
    for g in groups.groups:
        out *= comb(e ** (2 * len(g)) + m, m)
    return out


@dataclass
class StratSolution:
    value: float
    policy: dict  # (profile, nu) -> ("start", j) | ("idle",)
    diagnostics: Diagnostics


def update_profile_long(profile: tuple, j: int, inst: Instance,
                        grid: TimeGrid) -> tuple:
    """Busy the least-loaded machine with a long type-j job: its next
    available time is the first Q point of j's group at or beyond
    max(group threshold, completion)."""
    h = grid.group_of_type(j)
    completion = profile[0] + inst.types[j].size
    target = max(grid.thresholds.p_circ[h], completion)
    return tuple(sorted(profile[1:] + (grid.q_successor(h, target),)))


def update_profile_idle(profile: tuple, nu: tuple, grid: TimeGrid) -> tuple:
    """Advance every machine below the next feasible start time.

    The target is the next allowed point, strictly after the earliest
    available time, for the smallest remaining size's group.  All entries
    below it are raised together, so the profile stays sorted.
    """
    j_star = max(j for j in range(len(nu)) if nu[j] > 0)
    t_star = profile[0]
    target = grid.q_successor(grid.group_of_type(j_star), t_star)
    if target <= t_star:
        raise GridError(
            f"idle advance stalled at {t_star}: type {j_star} already startable"
        )
    return tuple(target if x < target else x for x in profile)


def solve_stratified(inst: Instance, groups: GroupStructure, grid: TimeGrid,
                     max_jobs: int = 12, state_cap: int = 2_000_000,
                     idle_chain_cap: int = 1000) -> StratSolution:
    """Optimal policy within the grid-restricted class, with decisions and
    state-count diagnostics recorded.  Costs are exact rationals internally
    (float in the result), so ties go to the lowest type index and the
    decision table is invariant under size scaling."""
    if inst.total_jobs > max_jobs:
        raise SolverCapError(inst.total_jobs)
    sizes = [t.size for t in inst.types]
    memo = {}
    policy = {}

    def cost(profile, nu, idle_chain=0):
        if not any(nu):
            return Fraction(0)
        key = (profile, nu)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if len(memo) > state_cap:
            raise SolverCapError(len(memo))
        t_star = profile[0]
        startable = [
            j for j in range(len(nu))
            if nu[j] > 0 and grid.q_contains(grid.group_of_type(j), t_star)
        ]
        if not startable:
            if idle_chain >= idle_chain_cap:
                raise GridError(
                    f"idle chain exceeded {idle_chain_cap} advances at {t_star}"
                )
            advanced = update_profile_idle(profile, nu, grid)
            result = cost(advanced, nu, idle_chain + 1)
            memo[key] = result
            policy[key] = ("idle",)
            return result
        best = None
        best_j = None
        for j in startable:
            q = Fraction(next_q(inst, j, nu[j]))
            nu2 = nu[:j] + (nu[j] - 1,) + nu[j + 1:]
            long_profile = update_profile_long(profile, j, inst, grid)
            v = q * (cost(long_profile, nu2) + t_star + sizes[j]) \
                + (1 - q) * (cost(profile, nu2) + t_star)
            if best is None or v < best:
                best = v
                best_j = j
        memo[key] = best
        policy[key] = ("start", best_j)
        return best

    value = float(cost(initial_profile(inst.machines), inst.counts))

    by_time = {}
    for profile, _nu in memo:
        by_time.setdefault(profile[0], set()).add(profile)
    diagnostics = Diagnostics(
        relevant_time_points=len(by_time),
        max_profiles_per_timepoint=max(len(v) for v in by_time.values()),
        states=len(memo),
    )
    return StratSolution(value=value, policy=policy, diagnostics=diagnostics)


def sandwich_bound(n_types: int, epsilon: Fraction) -> Fraction:
    """Worst-case ratio certificate between the restricted and exact optima:
    (1+eps) * (1 + (2n+4)(1+eps)eps) * (1+5eps), exact rational."""
    eps = Fraction(epsilon)
    return (1 + eps) * (1 + (2 * n_types + 4) * (1 + eps) * eps) * (1 + 5 * eps)
