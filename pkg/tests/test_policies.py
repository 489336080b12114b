from fractions import Fraction

import pytest

from bernsched.dp_exact import solve_exact
from bernsched.dp_stratified import solve_stratified
from bernsched.harness import prepare, solve_pipeline
from bernsched.instances import validate_and_canonicalize
from bernsched.numerics import SeedStream
from bernsched.policies import (
    CompositePolicy,
    ExactTablePolicy,
    FixedAssignmentPolicy,
    ListPolicy,
    ReplayError,
    SeptPolicy,
    StratifiedTablePolicy,
    enumerate_realizations,
    expected_cost_exact,
    expected_cost_mc,
    fill_spaces,
    quasipoly_pipeline,
    replay,
    sept_order,
    validate_schedule,
)


def make(machines, raw, epsilon="1/13"):
    return validate_and_canonicalize(machines, epsilon, raw)


@pytest.fixture(scope="module")
def example_35():
    # A(p=3, q=.5), B(p=1, q=1) on one machine; optimal value 3.5
    return make(1, [(3, [0.5]), (1, [1.0])])


class TestReplay:
    def test_exact_policy_long_branch(self, example_35):
        policy = ExactTablePolicy(solve_exact(example_35))
        real = {(0, 0): True, (1, 0): True}
        sched = replay(policy, example_35, real)
        # B runs 0->1, A runs 1->4
        assert sched.entries[(1, 0)] == (0, 0, 1)
        assert sched.entries[(0, 0)] == (0, 1, 4)
        assert sched.total_cost == 5

    def test_exact_policy_short_branch(self, example_35):
        policy = ExactTablePolicy(solve_exact(example_35))
        real = {(0, 0): False, (1, 0): True}
        sched = replay(policy, example_35, real)
        assert sched.total_cost == 2

    def test_stratified_one_type_both_long(self):
        inst = make(1, [(169, [1.0, 1.0])])
        rounded, groups, grid, _ = prepare(inst)
        sol = solve_stratified(rounded, groups, grid)
        policy = StratifiedTablePolicy(sol, grid)
        real = {(0, 0): True, (0, 1): True}
        sched = replay(policy, rounded, real)
        starts = sorted(s for _m, s, _c in sched.entries.values())
        assert starts == [0, 234]
        assert sched.total_cost == 169 + 403

    def test_feasibility_validated(self, example_35):
        policy = SeptPolicy()
        for _p, real in enumerate_realizations(example_35):
            sched = replay(policy, example_35, real)
            validate_schedule(example_35, sched, real)

    def test_missing_state_errors(self, example_35):
        policy = ExactTablePolicy(solve_exact(example_35))
        bogus = make(1, [(3, [0.5, 0.5]), (1, [1.0])])
        with pytest.raises(ReplayError):
            replay(policy, bogus, {j: True for j in bogus.job_ids()})


class TestExpectedCost:
    def test_exact_policy_matches_dp(self, example_35):
        sol = solve_exact(example_35)
        got = expected_cost_exact(ExactTablePolicy(sol), example_35)
        assert got == pytest.approx(sol.value, abs=1e-9)

    def test_deterministic_single_realization(self):
        inst = make(2, [(4, [1.0]), (2, [1.0, 1.0])])
        reals = list(enumerate_realizations(inst))
        assert len(reals) == 1 and reals[0][0] == 1.0

    def test_sept_on_example(self, example_35):
        assert expected_cost_exact(SeptPolicy(), example_35) == \
            pytest.approx(3.5, abs=1e-9)

    def test_stratified_policy_matches_dp(self):
        inst = make(1, [(169, [0.5, 1.0])])
        rounded, groups, grid, _ = prepare(inst)
        sol = solve_stratified(rounded, groups, grid)
        got = expected_cost_exact(StratifiedTablePolicy(sol, grid), rounded)
        assert got == pytest.approx(sol.value, abs=1e-9)


class TestMonteCarlo:
    def test_deterministic_zero_stderr(self):
        inst = make(1, [(4, [1.0]), (2, [1.0])])
        mean, stderr = expected_cost_mc(SeptPolicy(), inst, trials=50, seed=1)
        assert stderr == 0.0
        assert mean == pytest.approx(2 + 6)

    def test_mean_near_truth(self, example_35):
        mean, stderr = expected_cost_mc(
            SeptPolicy(), example_35, trials=4000, seed=7
        )
        assert abs(mean - 3.5) <= 4 * stderr + 1e-12

    def test_seed_reproducible(self, example_35):
        a = expected_cost_mc(SeptPolicy(), example_35, trials=200, seed=3)
        b = expected_cost_mc(SeptPolicy(), example_35, trials=200, seed=3)
        assert a == b

    def test_trials_validated(self, example_35):
        with pytest.raises(ReplayError):
            expected_cost_mc(SeptPolicy(), example_35, trials=0, seed=0)


class TestSept:
    def test_order_on_example(self, example_35):
        order = sept_order(example_35)
        assert order == [(1, 0), (0, 0)]  # E=1 before E=1.5

    def test_tie_breaks_by_type_index(self):
        inst = make(1, [(4, [0.5]), (2, [1.0])])  # both E=2
        assert sept_order(inst) == [(0, 0), (1, 0)]

    def test_deterministic_instances_optimal(self):
        for k in range(10):
            rng = SeedStream(515, k).generator()
            n_jobs = int(rng.integers(1, 5))
            by_size = {}
            for _ in range(n_jobs):
                by_size.setdefault(int(rng.integers(1, 9)), []).append(1.0)
            inst = make(int(rng.integers(1, 3)),
                        [(p, v) for p, v in by_size.items()])
            got = expected_cost_exact(SeptPolicy(), inst)
            assert got == pytest.approx(solve_exact(inst).value, abs=1e-9)

    def test_all_equal_q_stochastic_order(self):
        # identical q across jobs: expected-size order is optimal
        for k in range(10):
            rng = SeedStream(616, k).generator()
            q = float((0.25, 0.5, 0.75)[int(rng.integers(0, 3))])
            by_size = {}
            for _ in range(int(rng.integers(1, 5))):
                by_size.setdefault(int(rng.integers(1, 9)), []).append(q)
            inst = make(int(rng.integers(1, 3)),
                        [(p, v) for p, v in by_size.items()])
            got = expected_cost_exact(SeptPolicy(), inst)
            assert got == pytest.approx(solve_exact(inst).value, abs=1e-9)


class TestFixedAssignment:
    def test_m1_equals_sept(self, example_35):
        a = expected_cost_exact(FixedAssignmentPolicy(), example_35)
        b = expected_cost_exact(SeptPolicy(), example_35)
        assert a == pytest.approx(b, abs=1e-9)

    def test_round_robin_split(self):
        inst = make(2, [(3, [0.5, 0.5, 0.5, 0.5])])
        for _p, real in enumerate_realizations(inst):
            sched = replay(FixedAssignmentPolicy(), inst, real)
            machines = [m for m, _s, _c in sched.entries.values()]
            assert machines.count(0) == 2 and machines.count(1) == 2

    def test_adaptivity_gap_exists(self):
        inst = make(2, [(3, [0.5] * 4)])
        fixed = expected_cost_exact(FixedAssignmentPolicy(), inst)
        opt = solve_exact(inst).value
        assert fixed > opt + 1e-9


class TestFillSpaces:
    def test_short_jobs_stack(self):
        spaces = [(0, Fraction(0), 0), (0, Fraction(5), 0)]
        jobs = [(0, 0), (0, 1)]
        sizes = {0: Fraction(1)}
        real = {(0, 0): False, (0, 1): True}
        out = fill_spaces(spaces, jobs, sizes, real)
        assert out[(0, 0)] == (0, 0, 0)      # short at left endpoint
        assert out[(0, 1)] == (0, 0, 1)      # long closes the first space

    def test_all_long_one_per_space(self):
        spaces = [(0, Fraction(i * 10), 0) for i in range(4)]
        jobs = [(0, i) for i in range(3)]
        sizes = {0: Fraction(2)}
        real = {j: True for j in jobs}
        out = fill_spaces(spaces, jobs, sizes, real)
        assert [out[j][1] for j in jobs] == [0, 10, 20]

    def test_no_jobs(self):
        assert fill_spaces([(0, Fraction(0), 0)], [], {0: Fraction(1)}, {}) == {}

    def test_exhaustion_raises(self):
        spaces = [(0, Fraction(0), 0)]
        jobs = [(0, 0), (0, 1)]
        real = {j: True for j in jobs}
        with pytest.raises(ReplayError):
            fill_spaces(spaces, jobs, {0: Fraction(1)}, real)

    def test_dummy_long_closes_space(self):
        spaces = [(0, Fraction(0), 0), (0, Fraction(5), 0)]
        jobs = [(0, 0)]
        real = {(0, 0): False}
        out = fill_spaces(spaces, jobs, {0: Fraction(1)}, real,
                          add_dummy_long=True)
        assert out[(0, 0)] == (0, 0, 0)
        assert ("dummy", 0) not in out


class TestComposite:
    def test_all_medium_reduces_to_inner(self):
        inst = make(1, [(169, [1.0, 1.0])])
        policy = quasipoly_pipeline(inst, 169, solve_pipeline)
        real = {j: True for j in inst.job_ids()}
        sched = replay(policy, inst, real)
        validate_schedule(inst, sched, real)
        assert len(sched.entries) == 2

    def test_long_large_job_triggers_greedy(self):
        # large job long -> everything else greedy in index order
        inst = make(1, [(10**10, [0.5]), (1, [1.0, 1.0])])
        policy = CompositePolicy(169, Fraction(4), solve_pipeline)
        real = {(0, 0): True, (1, 0): True, (1, 1): True}
        sched = replay(policy, inst, real)
        validate_schedule(inst, sched, real)
        big_completion = sched.entries[(0, 0)][2]
        assert all(
            sched.entries[j][1] >= big_completion
            for j in [(1, 0), (1, 1)]
        )

    def test_three_phase_order(self):
        inst = make(1, [(10**10, [0.5]), (1, [1.0]),
                        (Fraction(1, 10**4), [1.0])])
        policy = CompositePolicy(169, Fraction(1), solve_pipeline)
        real = {(0, 0): False, (1, 0): True, (2, 0): True}
        sched = replay(policy, inst, real)
        validate_schedule(inst, sched, real)
        # large first (short), then small, then medium
        assert sched.entries[(0, 0)][1] == 0
        assert sched.entries[(2, 0)][1] <= sched.entries[(1, 0)][1]

    def test_expected_cost_finite(self):
        inst = make(2, [(169, [0.5, 1.0]), (1, [1.0])])
        policy = quasipoly_pipeline(inst, 169, solve_pipeline)
        val = expected_cost_exact(policy, inst)
        assert val > 0


class TestListPolicy:
    def test_order_violation_never_cheaper(self):
        # swapping two same-type jobs out of q-order cannot reduce the cost
        inst = make(1, [(3, [0.25, 0.75]), (1, [1.0])])
        good = [(0, 0), (0, 1), (1, 0)]
        bad = [(0, 1), (0, 0), (1, 0)]
        cost_good = expected_cost_exact(ListPolicy(good), inst)
        cost_bad = expected_cost_exact(ListPolicy(bad), inst)
        assert cost_bad >= cost_good - 1e-9
