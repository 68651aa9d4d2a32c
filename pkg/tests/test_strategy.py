from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import random_direct
from recondiv.errors import DomainError, NoManipulationError, ParameterError
from recondiv.fileio import load
from recondiv.model import Additive, Instance, Multiplicative
from recondiv.strategy import (
    PROFITABLE_AND_SAFE,
    PROFITABLE_UNSAFE,
    UNPROFITABLE,
    Misreport,
    Scenario,
    build_rat_adversarial_scenario,
    classify_manipulation,
    enumerate_beta_scenarios,
    evaluate_scenario,
    naive_value_manipulation_demo,
    random_direct_scenarios,
    random_scenarios,
    rat_gain_terms,
    true_utility_under_report,
)

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
seeds = st.integers(0, 2**32 - 1)


def rat_file():
    return load(INSTANCES / "rat_multiplicative.json")


def with_owned_characteristics(rng, n, t, model, exact=False):
    """Random characteristic instance; characteristic 0 is in o_1 only, characteristic 1 in o_1 and every new apartment."""
    beta = rng.integers(0, 2, size=(t, 2 * n))
    beta[0, :] = 0
    beta[0, 0] = 1
    beta[1, :] = 0
    beta[1, 0] = 1
    beta[1, n:] = 1
    ids = (tuple(f"o{i + 1}" for i in range(n)), tuple(f"a{i + 1}" for i in range(n)))
    if model == "additive":
        alpha = rng.integers(0, 20, size=(n, t))
        alpha = [[Fraction(int(x)) for x in r] for r in alpha] if exact else alpha.astype(float).tolist()
        return Instance(*ids, Additive(alpha, beta.tolist()))
    rho = np.exp(rng.normal(0, 0.2, size=(n, t))).tolist()
    price = rng.uniform(1, 3, size=2 * n).tolist()
    return Instance(*ids, Multiplicative(rho, beta.tolist(), price))


class TestMisreport:
    def test_partition(self):
        inst = rat_file()
        plus, minus, zero = Misreport(0, {"t1": 1.5, "t3": 0.5}).partition(inst)
        assert plus == (0,) and minus == (2,) and zero == (1, 3, 4, 5)

    def test_apply_touches_only_the_agent(self):
        inst = rat_file()
        out = Misreport(0, {"t1": 2}).apply(inst)
        assert out.valuation.scores[0][0] == 4
        assert out.valuation.scores[1] == inst.valuation.scores[1]
        assert out.valuation.beta == inst.valuation.beta

    def test_rejects_bad_factor_and_keys(self):
        inst = rat_file()
        with pytest.raises(DomainError):
            Misreport(0, {"t1": 0}).apply(inst)
        with pytest.raises(DomainError):
            Misreport(0, {"nope": 2}).apply(inst)
        with pytest.raises(DomainError):
            Misreport(0, {"t1": 2, 0: 3}).apply(inst)
        with pytest.raises(DomainError):
            Misreport(7, {"t1": 2}).apply(inst)

    def test_additive_bounds(self):
        inst = Instance(("o1",), ("a1",), Additive([[1, 1]], [[1, 1], [0, 1]]))
        with pytest.raises(DomainError):
            Misreport(0, {0: -2}).apply(inst)

    def test_direct_keys(self):
        inst = random_direct(np.random.default_rng(0), 3)
        out = Misreport(1, {"a2": 4, 0: -1}).apply(inst)
        assert out.values[1][4] == inst.values[1][4] + 4
        assert out.values[1][0] == inst.values[1][0] - 1


class TestRatExample:
    def test_truthful_utility(self):
        inst = rat_file()
        res = evaluate_scenario(inst, 0, Misreport(0))
        assert res.truthful_utility == pytest.approx(13.5)
        assert res.gain == 0

    @pytest.mark.parametrize("x", [2.25, 2.5, 3.0, 4.0, 10.0])
    def test_overstating_gets_a2_and_pays(self, x):
        inst = rat_file()
        res = evaluate_scenario(inst, 0, Misreport(0, {"t1": x / 2}))
        alloc = res.manipulated.allocation
        assert alloc.assignment == (1, 0)
        assert alloc.payments[0] == pytest.approx((-3 * x - 12) / 4)
        assert res.manipulated_utility < 13.5

    @pytest.mark.parametrize("x", [0.1, 0.5, 1.0, 1.5, 1.9])
    def test_understating_gets_a1(self, x):
        inst = rat_file()
        utility = true_utility_under_report(inst, 0, Misreport(0, {"t1": x / 2}))
        res = evaluate_scenario(inst, 0, Misreport(0, {"t1": x / 2}))
        assert res.manipulated.allocation.assignment == (0, 1)
        assert res.manipulated.allocation.payments[0] == pytest.approx((5 * x + 4) / 4)
        assert utility < 13.5


class TestClassify:
    def test_empty_set(self):
        with pytest.raises(ParameterError):
            classify_manipulation(rat_file(), 0, Misreport(0, {"t1": 2}), [])

    def test_agent_mismatch(self):
        with pytest.raises(DomainError):
            classify_manipulation(rat_file(), 1, Misreport(0, {"t1": 2}), [Scenario()])

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(2, 4))
    def test_identity_is_fixed_point(self, seed, n):
        rng = np.random.default_rng(seed)
        inst = with_owned_characteristics(rng, n, 4, "additive", exact=True)
        scen = random_scenarios(inst, 0, 5, seed=seed)
        verdict = classify_manipulation(inst, 0, Misreport(0, {0: 0}), scen)
        assert verdict.classification == UNPROFITABLE
        assert set(verdict.gains) == {0}

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(2, 4), st.sampled_from(["additive", "multiplicative"]))
    def test_unique_old_characteristic(self, seed, n, model):
        rng = np.random.default_rng(seed)
        inst = with_owned_characteristics(rng, n, 4, model)
        scen = random_scenarios(inst, 0, 6, seed=seed, forced_absent=[0])
        mis = Misreport(0, {0: 1.5 if model == "multiplicative" else 5.0})
        verdict = classify_manipulation(inst, 0, mis, scen)
        assert verdict.classification == PROFITABLE_AND_SAFE
        assert not any(verdict.assignment_changed)
        assert all(d > 0 for d in verdict.payment_deltas)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(2, 4), st.integers(1, 30))
    def test_shared_characteristic_additive(self, seed, n, amount):
        rng = np.random.default_rng(seed)
        inst = with_owned_characteristics(rng, n, 4, "additive", exact=True)
        scen = random_scenarios(inst, 0, 6, seed=seed, forced_present=[1])
        verdict = classify_manipulation(inst, 0, Misreport(0, {1: amount}), scen)
        assert verdict.classification == PROFITABLE_AND_SAFE
        assert not any(verdict.assignment_changed)
        assert set(verdict.payment_deltas) == {Fraction(amount * (n - 1) ** 2, n**2)}

    def test_enumerated_scenarios_cover_all_patterns(self):
        inst = rat_file()
        scen = enumerate_beta_scenarios(inst, characteristics=["t3", "t4"])
        assert len(scen) == 16
        with pytest.raises(ParameterError):
            enumerate_beta_scenarios(inst, limit=100)


class TestAdversarial:
    def test_degenerate_misreport(self):
        with pytest.raises(NoManipulationError):
            build_rat_adversarial_scenario(rat_file(), 0, Misreport(0, {"t1": 1}))

    def test_direct_refused(self):
        inst = random_direct(np.random.default_rng(0), 2)
        with pytest.raises(DomainError):
            build_rat_adversarial_scenario(inst, 0, Misreport(0, {0: 1}))

    def test_additive_midpoints(self):
        inst = Instance(("o1", "o2"), ("a1", "a2"), Additive([[4, 6], [1, 1]], [[1, 0, 1, 1], [0, 1, 1, 0]]))
        scen = build_rat_adversarial_scenario(inst, 0, Misreport(0, {0: 2, 1: -4}))
        assert scen.others == ((5, 4),)
        assert scen.new_beta == ((1, 0), (0, 1))

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(2, 5))
    def test_additive_gain_negative_and_closed_form(self, seed, n):
        rng = np.random.default_rng(seed)
        t = 4
        alpha = [[Fraction(int(x)) for x in r] for r in rng.integers(5, 20, size=(n, t))]
        beta = rng.integers(0, 2, size=(t, 2 * n)).tolist()
        inst = Instance(tuple(f"o{i + 1}" for i in range(n)), tuple(f"a{i + 1}" for i in range(n)),
                        Additive(alpha, beta))
        z, y = int(rng.integers(1, 5)), -int(rng.integers(1, 5))
        mis = Misreport(0, {0: z, 1: y})
        scen = build_rat_adversarial_scenario(inst, 0, mis)
        terms = rat_gain_terms(inst, 0, mis, scen)
        assert terms.gain < 0
        assert terms.gain == terms.closed_form_gain
        assert terms.gain == (terms.delta_a - terms.delta_o) / n**2 + terms.delta_v
        verdict = classify_manipulation(inst, 0, mis, [Scenario(), scen])
        assert verdict.classification != PROFITABLE_AND_SAFE
        assert 1 in verdict.loss_witnesses

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.integers(2, 5))
    def test_multiplicative_gain_negative(self, seed, n):
        rng = np.random.default_rng(seed)
        inst = with_owned_characteristics(rng, n, 5, "multiplicative")
        plus = rng.uniform(1.05, 2.0, size=2)
        minus = rng.uniform(0.3, 0.95, size=2)
        mis = Misreport(0, {0: plus[0], 2: plus[1], 3: minus[0], 4: minus[1]})
        scen = build_rat_adversarial_scenario(inst, 0, mis)
        terms = rat_gain_terms(inst, 0, mis, scen)
        assert terms.gain < 0
        assert terms.gain == pytest.approx(terms.closed_form_gain, rel=1e-9, abs=1e-9)

    def test_multiplicative_profitable_unsafe(self):
        inst = rat_file()
        mis = Misreport(0, {"t3": 1.2, "t4": 0.5})
        scen = [build_rat_adversarial_scenario(inst, 0, mis)]
        scen += random_scenarios(inst, 0, 200, seed=1, resample_others=True)
        verdict = classify_manipulation(inst, 0, mis, scen)
        assert verdict.classification == PROFITABLE_UNSAFE
        assert 0 in verdict.loss_witnesses


class TestNaiveDemo:
    def test_zero_amount(self):
        inst = random_direct(np.random.default_rng(1), 3)
        verdict = naive_value_manipulation_demo(inst, 0, 0)
        assert verdict.classification == UNPROFITABLE

    def test_characteristic_model_refused(self):
        with pytest.raises(DomainError):
            naive_value_manipulation_demo(rat_file(), 0, 1)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.integers(2, 5), st.integers(1, 20))
    def test_payment_rises_by_fixed_share(self, seed, n, amount):
        rng = np.random.default_rng(seed)
        inst = random_direct(rng, n)
        agent = int(rng.integers(0, n))
        scen = random_direct_scenarios(inst, agent, 20, seed=seed)
        verdict = naive_value_manipulation_demo(inst, agent, amount, scen)
        assert verdict.classification == PROFITABLE_AND_SAFE
        assert not any(verdict.assignment_changed)
        assert set(verdict.payment_deltas) == {Fraction(amount * (n - 1) ** 2, n**2)}
