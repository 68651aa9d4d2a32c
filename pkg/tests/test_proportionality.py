import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import example_two, random_additive, random_direct, rat_values
from recondiv.envy import ef_payments, envy_report, is_ef_able, min_max_envy_payments
from recondiv.errors import ParameterError
from recondiv.model import Allocation
from recondiv.proportionality import (
    base_disproportionality,
    decide_prop_able,
    disproportionality_report,
    exhaustive_min_dp_sum,
    improvement_totals,
    min_disprop_payments,
    minimum_disproportionality_mechanism,
    payment_components,
    utilitarian_assignment,
)

seeds = st.integers(0, 2**32 - 1)


def random_instance(seed, n):
    rng = np.random.default_rng(seed)
    return rng, random_direct(rng, n)


class TestPayments:
    def test_rat_instance(self):
        inst = rat_values()
        assert min_disprop_payments(inst, (1, 0)) == (Fraction(-9, 2), Fraction(9, 2))
        assert min_disprop_payments(inst, (0, 1)) == (Fraction(7, 2), Fraction(-7, 2))

    def test_rat_utilities_tie(self):
        inst = rat_values()
        for perm in ((0, 1), (1, 0)):
            p = min_disprop_payments(inst, perm)
            assert inst.new_values[0][perm[0]] + p[0] == Fraction(27, 2)

    @settings(max_examples=80, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_component_expansion_agrees(self, seed, n):
        rng, inst = random_instance(seed, n)
        perm = tuple(rng.permutation(n).tolist())
        p_a, p_o = payment_components(inst, perm)
        expected = tuple((a - o) / n**2 for a, o in zip(p_a, p_o))
        assert min_disprop_payments(inst, perm) == expected

    @settings(max_examples=80, deadline=None)
    @given(seeds, st.integers(1, 6))
    def test_equalizes_and_balances(self, seed, n):
        rng, inst = random_instance(seed, n)
        perm = tuple(rng.permutation(n).tolist())
        p = min_disprop_payments(inst, perm)
        assert sum(p) == 0
        rep = disproportionality_report(inst, Allocation(perm, p))
        share = sum(base_disproportionality(inst, perm)) / n
        assert set(rep.dp) == {share}
        assert rep.dp_sum == n * share


class TestReport:
    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(2, 5), st.integers(0, 4), st.integers(-20, 20))
    def test_payment_response(self, seed, n, who, delta):
        rng, inst = random_instance(seed, n)
        who %= n
        perm = tuple(rng.permutation(n).tolist())
        p = [Fraction(int(x)) for x in rng.integers(-5, 6, size=n)]
        before = disproportionality_report(inst, Allocation(perm, tuple(p))).dp
        p[who] += delta
        after = disproportionality_report(inst, Allocation(perm, tuple(p))).dp
        for i in range(n):
            step = Fraction(delta, n) - (delta if i == who else 0)
            assert after[i] - before[i] == step

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(1, 5))
    def test_sum_is_payment_independent(self, seed, n):
        rng, inst = random_instance(seed, n)
        perm = tuple(rng.permutation(n).tolist())
        p = tuple(Fraction(int(x)) for x in rng.integers(-9, 10, size=n))
        rep = disproportionality_report(inst, Allocation(perm, p))
        assert sum(rep.dp) == rep.dp_sum
        assert rep.total == improvement_totals(inst)

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(2, 5))
    def test_envy_free_implies_proportional(self, seed, n):
        rng = np.random.default_rng(seed)
        inst = random_direct(rng, n, old_high=3)
        perm = tuple(rng.permutation(n).tolist())
        if is_ef_able(inst, perm):
            rep = disproportionality_report(inst, Allocation(perm, ef_payments(inst, perm)))
            assert rep.max_dp <= 0

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_two_agents_dp_is_half_envy(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_direct(rng, 2)
        perm = tuple(rng.permutation(2).tolist())
        p = tuple(Fraction(int(x)) for x in rng.integers(-9, 10, size=2))
        dp = disproportionality_report(inst, Allocation(perm, p)).dp
        envy = envy_report(inst, Allocation(perm, p)).envy
        assert dp == tuple(e / 2 for e in envy)


class TestMechanism:
    def test_example_two_is_not_prop_able(self):
        for eps, delta in ((1, 3), (2, 2), (5, 1)):
            decision = decide_prop_able(example_two(eps, delta))
            assert not decision
            assert decision.min_max_dp == Fraction(eps + delta, 4)
            assert decision.allocation is None

    def test_example_two_envy_and_dp(self):
        inst = example_two()
        out = min_max_envy_payments(inst, (0, 1))
        assert disproportionality_report(inst, out.allocation).max_dp == 1

    @settings(max_examples=80, deadline=None)
    @given(seeds, st.integers(1, 5), st.booleans())
    def test_optimal_over_all_assignments_and_payments(self, seed, n, additive):
        rng = np.random.default_rng(seed)
        inst = random_additive(rng, n, 3) if additive else random_direct(rng, n)
        outcome = minimum_disproportionality_mechanism(inst)
        perm, best_sum = exhaustive_min_dp_sum(inst)
        assert outcome.report.max_dp == best_sum / n
        assert sum(base_disproportionality(inst, outcome.allocation.assignment)) == best_sum
        decision = decide_prop_able(inst)
        assert bool(decision) == (best_sum <= 0)
        if decision:
            assert disproportionality_report(inst, decision.allocation).max_dp <= 0
        # random balanced payments on any assignment never do better
        for other in itertools.islice(itertools.permutations(range(n)), 6):
            for _ in range(5):
                q = [Fraction(int(x)) for x in rng.integers(-20, 21, size=n)]
                q = tuple(x - sum(q) / n for x in q)
                assert disproportionality_report(inst, Allocation(other, q)).max_dp >= outcome.report.max_dp

    def test_welfare_maximizing(self):
        rng = np.random.default_rng(4)
        inst = random_direct(rng, 5)
        perm = utilitarian_assignment(inst)
        welfare = sum(inst.new_values[i][perm[i]] for i in range(5))
        for other in itertools.permutations(range(5)):
            assert welfare >= sum(inst.new_values[i][other[i]] for i in range(5))

    def test_float_instance(self):
        rng = np.random.default_rng(2)
        inst = random_direct(rng, 7, exact=False)
        out = minimum_disproportionality_mechanism(inst)
        assert abs(sum(out.allocation.payments)) < 1e-9
        assert max(out.report.dp) - min(out.report.dp) < 1e-9

    def test_exhaustive_guard(self):
        with pytest.raises(ParameterError):
            exhaustive_min_dp_sum(random_direct(np.random.default_rng(0), 9))
