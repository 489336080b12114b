"""Policy execution: one replay loop, many policies.

Every policy — DP-extracted tables and built-in heuristics alike — binds
to an instance and yields a controller with the same two-method surface:

  decide(view)   -> ("start", job_id) | ("advance", time) | ("retire",)
  release(job, start, completion, is_long) -> next available time

so the simulator below is single-sourced.  A realization fixes each job's
outcome bit up front; the replay itself is deterministic, and
non-anticipativity is structural because controllers only ever see
outcomes of jobs already started.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .instances import (
    Instance,
    partition_sml,
    round_to_powers_of_c,
    validate_and_canonicalize,
)
from .numerics import SeedStream
from .timegrid import TimeGrid


class ReplayError(RuntimeError):
    pass


@dataclass
class Schedule:
    """Per-job (machine, start, completion); all times exact."""

    entries: dict  # job_id -> (machine, start, completion)

    @property
    def total_cost(self) -> Fraction:
        return sum((c for _m, _s, c in self.entries.values()), Fraction(0))

    def starts_by_machine(self):
        by_m = {}
        for job, (mach, s, c) in self.entries.items():
            by_m.setdefault(mach, []).append((s, c, job))
        for lst in by_m.values():
            lst.sort()
        return by_m


def validate_schedule(inst: Instance, sched: Schedule, realization):
    """Feasibility: every job placed once, C = S + X, and per machine the
    positive-length execution intervals are pairwise disjoint."""
    assert set(sched.entries) == set(inst.job_ids())
    for job, (_m, s, c) in sched.entries.items():
        x = inst.job_size(job) if realization[job] else Fraction(0)
        assert c == s + x, f"completion mismatch for {job}"
    for mach, runs in sched.starts_by_machine().items():
        busy_until = Fraction(0)
        for s, c, job in runs:
            if c > s:  # zero-length jobs may share an instant
                assert s >= busy_until, f"overlap on machine {mach} at {job}"
                busy_until = c


class SimView:
    """What a controller may look at when deciding."""

    __slots__ = ("avail", "i_star", "t_star", "remaining", "inst")

    def __init__(self, avail, i_star, t_star, remaining, inst):
        self.avail = avail
        self.i_star = i_star
        self.t_star = t_star
        self.remaining = remaining  # set of job_ids
        self.inst = inst

    def counts(self):
        nu = [0] * self.inst.n_types
        for j, _i in self.remaining:
            nu[j] += 1
        return tuple(nu)

    def next_of_type(self, j):
        """Remaining type-j job with the smallest probability."""
        candidates = [i for (tj, i) in self.remaining if tj == j]
        if not candidates:
            raise ReplayError(f"no remaining job of type {j}")
        return (j, min(candidates))

    def sorted_profile(self):
        return tuple(sorted(self.avail))


def replay(policy, inst: Instance, realization) -> Schedule:
    """Run one realization under the policy and return the schedule."""
    ctl = policy.bind(inst)
    avail = [Fraction(0)] * inst.machines
    active = list(range(inst.machines))
    remaining = set(inst.job_ids())
    entries = {}
    guard = 0
    while remaining:
        guard += 1
        if guard > 10000 * (inst.total_jobs + 1):
            raise ReplayError("replay did not terminate")
        i_star = min(active, key=lambda i: (avail[i], i))
        t_star = avail[i_star]
        view = SimView(avail, i_star, t_star, remaining, inst)
        decision = ctl.decide(view)
        kind = decision[0]
        if kind == "start":
            job = decision[1]
            if job not in remaining:
                raise ReplayError(f"policy started unavailable job {job}")
            is_long = bool(realization[job])
            start = t_star
            completion = start + (inst.job_size(job) if is_long else Fraction(0))
            entries[job] = (i_star, start, completion)
            remaining.discard(job)
            avail[i_star] = ctl.release(job, start, completion, is_long)
        elif kind == "advance":
            target = decision[1]
            if target <= t_star:
                raise ReplayError(f"advance to {target} does not progress")
            for i in active:
                if avail[i] < target:
                    avail[i] = target
        elif kind == "retire":
            active.remove(i_star)
            if not active:
                raise ReplayError("all machines retired with jobs remaining")
        else:
            raise ReplayError(f"unknown decision {decision!r}")
    return Schedule(entries=entries)


# -- realizations -----------------------------------------------------------

def enumerate_realizations(inst: Instance, cap: int = 20):
    """Yield (probability, realization) over all outcome vectors.

    Jobs with q = 1 are forced long and do not contribute branches.
    """
    jobs = inst.job_ids()
    free = [job for job in jobs if inst.job_q(job) < 1.0]
    if len(free) > cap:
        raise ReplayError(f"too many stochastic jobs to enumerate ({len(free)})")
    forced = {job: True for job in jobs if inst.job_q(job) >= 1.0}
    for bits in itertools.product((True, False), repeat=len(free)):
        prob = 1.0
        real = dict(forced)
        for job, bit in zip(free, bits):
            q = inst.job_q(job)
            prob *= q if bit else (1.0 - q)
            real[job] = bit
        yield prob, real


def sample_realization(inst: Instance, rng):
    out = {}
    for job in inst.job_ids():
        out[job] = bool(rng.random() < inst.job_q(job))
    return out


def expected_cost_exact(policy, inst: Instance, cap: int = 20) -> float:
    total = 0.0
    for prob, real in enumerate_realizations(inst, cap=cap):
        total += prob * float(replay(policy, inst, real).total_cost)
    return total


def expected_cost_mc(policy, inst: Instance, trials: int, seed: int):
    """(mean, stderr) over independent seeded substreams, one per trial."""
    if trials < 1:
        raise ReplayError("need at least one trial")
    total = 0.0
    total_sq = 0.0
    for i in range(trials):
        rng = SeedStream(seed, i).generator()
        cost = float(replay(policy, inst, sample_realization(inst, rng)).total_cost)
        total += cost
        total_sq += cost * cost
    mean = total / trials
    if trials == 1:
        return mean, 0.0
    var = max(0.0, (total_sq - trials * mean * mean) / (trials - 1))
    return mean, math.sqrt(var / trials)


# -- policies ---------------------------------------------------------------

class Policy:
    name = "policy"

    def bind(self, inst: Instance):
        raise NotImplementedError


class _ListController:
    """Starts jobs in a fixed order, never idles, plain completions."""

    def __init__(self, inst, order):
        self.order = list(order)

    def decide(self, view):
        for job in self.order:
            if job in view.remaining:
                return ("start", job)
        raise ReplayError("list exhausted with jobs remaining")

    def release(self, job, start, completion, is_long):
        return completion


class ListPolicy(Policy):
    """Non-idling policy starting jobs in an explicit fixed order."""

    name = "list"

    def __init__(self, order):
        self.order = list(order)

    def bind(self, inst):
        return _ListController(inst, self.order)


def sept_order(inst: Instance):
    """All jobs ordered by expected size q*p ascending, ties broken by type
    index then probability."""
    jobs = inst.job_ids()
    return sorted(
        jobs,
        key=lambda job: (
            float(inst.job_q(job)) * float(inst.job_size(job)),
            job[0],
            inst.job_q(job),
        ),
    )


class SeptPolicy(ListPolicy):
    name = "sept"

    def __init__(self):
        pass

    def bind(self, inst):
        return _ListController(inst, sept_order(inst))


class _FixedAssignmentController:
    def __init__(self, inst):
        order = sept_order(inst)
        self.queues = [[] for _ in range(inst.machines)]
        for k, job in enumerate(order):
            self.queues[k % inst.machines].append(job)

    def decide(self, view):
        queue = self.queues[view.i_star]
        while queue and queue[0] not in view.remaining:
            queue.pop(0)
        if not queue:
            return ("retire",)
        return ("start", queue[0])

    def release(self, job, start, completion, is_long):
        return completion


class FixedAssignmentPolicy(Policy):
    """Round-robin split of the expected-size order over machines at time 0;
    each machine works through its own queue and never takes others' jobs."""

    name = "fixed"

    def bind(self, inst):
        return _FixedAssignmentController(inst)


class _ExactTableController:
    def __init__(self, inst, table):
        self.table = table

    def decide(self, view):
        key = (view.sorted_profile(), view.counts())
        if key not in self.table:
            raise ReplayError(f"state {key} missing from policy table")
        j = self.table[key]
        return ("start", view.next_of_type(j))

    def release(self, job, start, completion, is_long):
        return completion


class ExactTablePolicy(Policy):
    """Replays the decisions recorded by the exact solver."""

    name = "exact"

    def __init__(self, solution):
        self.table = solution.policy

    def bind(self, inst):
        return _ExactTableController(inst, self.table)


class _StratifiedTableController:
    def __init__(self, inst, table, grid):
        self.inst = inst
        self.table = table
        self.grid = grid

    def decide(self, view):
        key = (view.sorted_profile(), view.counts())
        if key not in self.table:
            raise ReplayError(f"state {key} missing from policy table")
        decision = self.table[key]
        if decision[0] == "idle":
            nu = view.counts()
            j_star = max(j for j in range(len(nu)) if nu[j] > 0)
            target = self.grid.q_successor(
                self.grid.group_of_type(j_star), view.t_star
            )
            return ("advance", target)
        return ("start", view.next_of_type(decision[1]))

    def release(self, job, start, completion, is_long):
        if not is_long:
            return completion
        h = self.grid.group_of_type(job[0])
        target = max(self.grid.thresholds.p_circ[h], completion)
        return self.grid.q_successor(h, target)


class StratifiedTablePolicy(Policy):
    """Replays the grid-restricted solver's decisions, including the
    post-long-job rounding of the machine's next available time."""

    name = "stratified"

    def __init__(self, solution, grid: TimeGrid):
        self.table = solution.policy
        self.grid = grid

    def bind(self, inst):
        return _StratifiedTableController(inst, self.table, self.grid)


# -- space filling ----------------------------------------------------------

def fill_spaces(spaces, jobs, sizes, realization, add_dummy_long=False):
    """Greedy placement of one type's jobs into reserved idle slots.

    ``spaces`` is a list of (machine, left_endpoint, type_j) slots, each of
    length sizes[type_j], ordered by left endpoint.  At each slot the
    remaining job with the smallest probability starts at the left
    endpoint; short jobs stack there and the slot stays open, a long job
    closes it.  With ``add_dummy_long`` an extra always-long job per type
    is appended (it closes one slot but is not reported).

    Returns job -> (machine, start, completion).  Raises if the slots run
    out before the jobs do.
    """
    by_type = {}
    for job in jobs:
        by_type.setdefault(job[0], []).append(job)
    for lst in by_type.values():
        lst.sort(key=lambda job: job[1])

    out = {}
    for j, queue in by_type.items():
        queue = list(queue)
        if add_dummy_long:
            queue.append(("dummy", j))
        slots = [s for s in spaces if s[2] == j]
        slots.sort(key=lambda s: s[1])
        slot_iter = iter(slots)
        current = next(slot_iter, None)
        for job in queue:
            if current is None:
                raise ReplayError(
                    f"type-{j} slots exhausted with jobs remaining"
                )
            machine, left, _j = current
            is_long = True if job[0] == "dummy" else bool(realization[job])
            completion = left + (sizes[j] if is_long else Fraction(0))
            if job[0] != "dummy":
                out[job] = (machine, left, completion)
            if is_long:
                current = next(slot_iter, None)
    return out


# -- composite pipeline -----------------------------------------------------

class _CompositeController:
    """Three-phase adaptive policy.

    Jobs are split by size (normalized by a supplied cost proxy) into
    small, medium and large.  Large jobs go first, greedily; if any of
    them realizes long, everything left is scheduled greedily.  Otherwise
    small jobs go next, and the medium jobs are played from the frontier
    using a grid-restricted policy solved on the power-of-c-rounded medium
    subinstance.  The inner policy's decisions are driven by a virtual
    profile that follows the rounded dynamics, while actual machines run
    at real completions; idle advances shift real time by the virtual
    increment.
    """

    def __init__(self, inst, small, medium, large, inner, t0):
        self.inst = inst
        self.small = [job for job in small]
        self.large = [job for job in large]
        self.medium = sorted(medium)
        self.fallback = False
        self.phase = "large"
        self.t0 = t0
        # inner is None when there are no medium jobs
        self.inner = inner
        if inner is not None:
            self.v_profile = (Fraction(0),) * inst.machines
            self.v_nu = inner["counts"]
            self.m_started = False

    def _greedy(self, view):
        job = min(view.remaining)
        return ("start", job)

    def decide(self, view):
        if self.fallback:
            return self._greedy(view)
        if self.phase == "large":
            left = [job for job in self.large if job in view.remaining]
            if left:
                return ("start", min(left))
            self.phase = "small"
        if self.phase == "small":
            left = [job for job in self.small if job in view.remaining]
            if left:
                return ("start", min(left))
            self.phase = "medium"
        if self.inner is None:
            return self._greedy(view)
        if not self.m_started and view.t_star < self.t0:
            self.m_started = True
            if self.t0 > view.t_star:
                return ("advance", self.t0)
        self.m_started = True
        key = (self.v_profile, self.v_nu)
        table = self.inner["table"]
        if key not in table:
            raise ReplayError(f"inner state {key} missing")
        decision = table[key]
        grid = self.inner["grid"]
        if decision[0] == "idle":
            nu = self.v_nu
            j_star = max(j for j in range(len(nu)) if nu[j] > 0)
            old = self.v_profile[0]
            target = grid.q_successor(grid.group_of_type(j_star), old)
            self.v_profile = tuple(
                target if x < target else x for x in self.v_profile
            )
            return ("advance", view.t_star + (target - old))
        inner_j = decision[1]
        job = self.inner["job_of_inner_type"](inner_j, view)
        self._pending_inner_j = inner_j
        return ("start", job)

    def release(self, job, start, completion, is_long):
        if job in self.large and is_long:
            self.fallback = True
        if (not self.fallback and self.inner is not None
                and self.phase == "medium" and job in self.inner["medium_set"]):
            inner_j = self._pending_inner_j
            grid = self.inner["grid"]
            rinst = self.inner["instance"]
            nu = list(self.v_nu)
            nu[inner_j] -= 1
            self.v_nu = tuple(nu)
            if is_long:
                h = grid.group_of_type(inner_j)
                v_completion = self.v_profile[0] + rinst.types[inner_j].size
                target = max(grid.thresholds.p_circ[h], v_completion)
                self.v_profile = tuple(sorted(
                    self.v_profile[1:] + (grid.q_successor(h, target),)
                ))
            return completion
        return completion


class CompositePolicy(Policy):
    """Size-split adaptive policy with a grid-restricted core for the
    medium class.  ``scale`` is the cost proxy used to normalize sizes
    (callers typically pass the SEPT policy's expected cost)."""

    name = "composite"

    def __init__(self, c: int, scale, inner_solver):
        self.c = c
        self.scale = Fraction(scale)
        self.inner_solver = inner_solver

    def bind(self, inst):
        small, medium, large = partition_sml(inst, self.scale)
        inner = None
        if medium:
            by_size = {}
            for job in medium:
                by_size.setdefault(inst.job_size(job), []).append(
                    inst.job_q(job)
                )
            sub = validate_and_canonicalize(
                inst.machines, inst.epsilon,
                [(p, qs) for p, qs in by_size.items()],
            )
            rounded, _scale = round_to_powers_of_c(sub, self.c)
            solution, grid, rinst = self.inner_solver(rounded)
            # map each medium job's rounded size to an inner type
            size_of_inner = {t.size: j for j, t in enumerate(rinst.types)}
            orig_to_inner = {}
            for p in by_size:
                target = p * _scale
                power = Fraction(self.c)
                while power < target:
                    power *= self.c
                orig_to_inner[p] = size_of_inner[power]
            medium_set = set(medium)

            def job_of_inner_type(inner_j, view):
                candidates = [
                    job for job in view.remaining
                    if job in medium_set
                    and orig_to_inner[view.inst.job_size(job)] == inner_j
                ]
                if not candidates:
                    raise ReplayError(
                        f"no medium job left for inner type {inner_j}"
                    )
                return min(
                    candidates, key=lambda job: (view.inst.job_q(job), job)
                )

            inner = {
                "table": solution.policy,
                "grid": grid,
                "instance": rinst,
                "counts": rinst.counts,
                "medium_set": medium_set,
                "job_of_inner_type": job_of_inner_type,
            }
        n_jobs = inst.total_jobs
        t0 = self.scale / n_jobs if small else Fraction(0)
        return _CompositeController(inst, small, medium, large, inner, t0)


def quasipoly_pipeline(inst: Instance, c: int, inner_solver,
                       scale=None) -> CompositePolicy:
    """Assemble the composite policy; by default the normalization scale is
    the expected cost of the plain expected-size order."""
    if scale is None:
        scale = expected_cost_exact(SeptPolicy(), inst)
        scale = Fraction(scale).limit_denominator(10**9)
    return CompositePolicy(c, scale, inner_solver)
