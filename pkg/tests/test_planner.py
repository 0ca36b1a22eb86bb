import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sgdlangevin.errors import InfeasiblePlan, InvalidArgument, UnsupportedTarget
from sgdlangevin.planner import (Condition, best_plan, candidate_plans, lmc_bound_first_order,
                                 lmc_bound_second_order, plan_lmc, plan_sgd_first_order, plan_sgd_second_order,
                                 sgd_first_order_budget_bound, sgd_second_order_budget_bound, w0_upper_bound)
from sgdlangevin.potentials import make_isotropic_gaussian_target


def unit_target(n=100, p=1, L_g=None, m_g=1.0):
    return make_isotropic_gaussian_target(p, n, m_g, np.zeros((n, p)), L_g=L_g)


class TestFirstOrderBound:
    def test_branches_agree_at_split(self):
        m, M, p, W0 = 1.0, 3.0, 2, 1.7
        h = 2 / (m + M)
        for K in (0, 1, 5):
            left = (1 - m * h) ** K * W0 + 1.65 * (M / m) * math.sqrt(h * p)
            right = (M * h - 1) ** K * W0 + 1.65 * M * h / (2 - M * h) * math.sqrt(h * p)
            assert left == pytest.approx(right, rel=1e-14)
            assert lmc_bound_first_order(h, K, W0, m, M, p) == pytest.approx(left, rel=1e-14)
            assert lmc_bound_first_order(h * (1 + 1e-9), K, W0, m, M, p) == pytest.approx(left, rel=1e-7)

    def test_long_run_limit(self):
        assert lmc_bound_first_order(0.5, 10_000, 3.0, 1, 1, 1) == pytest.approx(1.65 * math.sqrt(0.5))
        assert 1.65 * math.sqrt(0.5) == pytest.approx(1.1667, abs=1e-4)

    def test_zero_initial_distance(self):
        assert lmc_bound_first_order(0.1, 3, 0.0, 1, 2, 4) == pytest.approx(1.65 * 2 * math.sqrt(0.4))
        assert lmc_bound_first_order(0.1, 3, 0.0, 1, 2, 4) == pytest.approx(2.087, abs=5e-4)

    def test_second_branch(self):
        m, M, h, p = 1.0, 3.0, 0.6, 1
        expected = (M * h - 1) ** 2 * 1.0 + 1.65 * M * h / (2 - M * h) * math.sqrt(h * p)
        assert lmc_bound_first_order(h, 2, 1.0, m, M, p) == pytest.approx(expected)

    @pytest.mark.parametrize("h", [0.0, -0.1, 1.0, 1.5])
    def test_step_outside_range(self, h):
        with pytest.raises(InvalidArgument):
            lmc_bound_first_order(h, 1, 1.0, 1.0, 2.0, 1)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 1.0), st.floats(1.0, 10.0), st.floats(0.001, 0.999), st.floats(0, 10),
           st.integers(1, 8), st.integers(0, 200))
    def test_monotone_in_k_and_h(self, m, kappa, frac, W0, p, K):
        M = m * kappa
        h = frac * 2 / (m + M)
        assert lmc_bound_first_order(h, K + 1, W0, m, M, p) <= lmc_bound_first_order(h, K, W0, m, M, p)
        h2 = min(h * 1.1, 0.9999 * 2 / M)
        assert lmc_bound_first_order(h2, K, 0.0, m, M, p) >= lmc_bound_first_order(h, K, 0.0, m, M, p)


class TestSecondOrderBound:
    def test_examples(self):
        assert lmc_bound_second_order(0.1, 5, 0.0, 1, 1, 0.0, 1) == pytest.approx(0.22)
        assert lmc_bound_second_order(0.1, 5, 0.0, 1, 1, 1.0, 4) == pytest.approx(0.64)

    def test_linear_in_step(self):
        a = lmc_bound_second_order(0.2, 7, 0.0, 1, 2, 3.0, 3)
        b = lmc_bound_second_order(0.1, 7, 0.0, 1, 2, 3.0, 3)
        assert b == pytest.approx(a / 2, rel=1e-14)

    def test_step_at_split_rejected(self):
        with pytest.raises(InvalidArgument):
            lmc_bound_second_order(2 / 3, 1, 0.0, 1, 2, 1.0, 1)

    def test_negative_hessian_lipschitz_rejected(self):
        with pytest.raises(InvalidArgument):
            lmc_bound_second_order(0.1, 1, 0.0, 1, 2, -1.0, 1)


class TestW0:
    @pytest.mark.parametrize("f0,m,p,expected", [(0, 1, 1, 1.0), (2, 1, 4, 4.0), (0, 4, 4, 1.0)])
    def test_examples(self, f0, m, p, expected):
        assert w0_upper_bound(f0, m, p) == pytest.approx(expected)

    def test_negative_potential(self):
        with pytest.raises(InvalidArgument):
            w0_upper_bound(-1.0, 1, 1)

    def test_dominates_exact_distance(self):
        # isotropic Gaussian: W2(delta, pi)^2 = |theta0 - mu|^2 + p/m and f - min f = m |theta0 - mu|^2 / 2
        rng = np.random.default_rng(0)
        for _ in range(20):
            p, m = int(rng.integers(1, 6)), float(rng.uniform(0.1, 5))
            d = rng.standard_normal(p) * 3
            exact = math.sqrt(d @ d + p / m)
            assert w0_upper_bound(0.5 * m * d @ d, m, p) >= exact


class TestPlanLMC:
    def test_example(self):
        plan = plan_lmc(0.5, 1, 2, 4, 0)
        assert plan.h == pytest.approx(1 / 704)
        assert plan.K == math.ceil(704 * math.log(16)) == 1952
        assert plan.b == 1 and plan.budget == plan.K
        assert plan.valid

    def test_saturated_cap(self):
        plan = plan_lmc(100.0, 2, 2, 1, 0.0)
        assert plan.h == pytest.approx(0.5)
        assert 1 - 2 * plan.h == 0

    def test_doubling_dimension(self):
        a, b = plan_lmc(0.05, 1, 1, 4, 0), plan_lmc(0.05, 1, 1, 8, 0)
        assert b.h == pytest.approx(a.h / 2)
        # Q = 2p/eps grows with p as well
        assert b.K / a.K == pytest.approx(2 * math.log(320) / math.log(160), rel=1e-3)

    def test_loose_accuracy_note(self):
        plan = plan_lmc(1e6, 1, 1, 1, 0)
        assert plan.K >= 1
        assert any("Q" in note for note in plan.notes)

    @pytest.mark.parametrize("eps", [0.0, -1.0, float("inf")])
    def test_bad_epsilon(self, eps):
        with pytest.raises(InvalidArgument):
            plan_lmc(eps, 1, 2, 1, 0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-3, 5.0), st.floats(0.1, 5.0), st.floats(1.0, 20.0), st.integers(1, 50), st.floats(0, 1e3))
    def test_sound(self, eps, m, kappa, p, f0):
        M = m * kappa
        plan = plan_lmc(eps, m, M, p, f0)
        W0 = w0_upper_bound(f0, m, p)
        assert lmc_bound_first_order(plan.h, plan.K, W0, m, M, p) <= eps * (1 + 1e-12)
        assert plan.valid


class TestPlanSGDFirstOrder:
    def test_example(self):
        plan = plan_sgd_first_order(0.1, unit_target(), 0.0)
        assert plan.h == pytest.approx(2.5e-3)
        assert plan.b_real == pytest.approx(25 / 2.25)
        assert plan.budget_bound == pytest.approx(400 * math.log(100) / 9)
        assert plan.budget_bound == pytest.approx(204.7, abs=0.05)
        assert plan.b == 11
        assert plan.h_eff == pytest.approx(2 * 11 / (100 * 89))
        assert plan.K * plan.b == plan.budget
        assert plan.valid

    def test_lower_edge_batch_at_least_one(self):
        for n in (9, 10, 50, 1000):
            for p in (1, 3):
                target = unit_target(n=n, p=p)
                eps = 3 * math.sqrt(p) / n
                h = eps**2 / (4 * p)
                b_real = h * n * n / (2 + h * n)
                assert b_real == pytest.approx(n * n * eps**2 / (8 * p + n * eps**2))
                assert b_real >= 1
                upper = 2 * math.sqrt(p) / math.sqrt(n)
                if eps <= upper:
                    assert plan_sgd_first_order(eps, target, 0.0).b >= 1

    def test_budget_limit_in_n(self):
        eps, p = 0.1, 1
        limit = 4 * p / eps**2 * math.log((p) / (0.1 * eps))
        assert sgd_first_order_budget_bound(eps, 10**9, p, 1.0, 1.0, 0.0) == pytest.approx(limit, rel=1e-6)

    @pytest.mark.parametrize("eps,side", [(0.01, "eps >="), (0.5, "eps <=")])
    def test_window_violation_names_side(self, eps, side):
        with pytest.raises(InfeasiblePlan) as info:
            plan_sgd_first_order(eps, unit_target(), 0.0)
        assert [c.name for c in info.value.failed][0].startswith(side)
        assert side in str(info.value)

    def test_too_few_components(self):
        with pytest.raises(InfeasiblePlan, match="n >= 9"):
            plan_sgd_first_order(0.5, unit_target(n=8), 0.0)

    def test_window_edges_accepted(self):
        target = unit_target()
        for eps in (0.03, 0.2):
            assert plan_sgd_first_order(eps, target, 0.0).valid

    def test_budget_formula_consistency(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n, p, kappa, m_g = int(rng.integers(9, 10_000)), int(rng.integers(1, 20)), rng.uniform(1, 5), rng.uniform(0.1, 3)
            eps, f0 = rng.uniform(0.01, 1), rng.uniform(0, 100)
            b = n * n * eps**2 / (8 * kappa**2 * p + n * eps**2)
            h = eps**2 / (4 * kappa**2 * p)
            assert b == pytest.approx(h * n * n / (2 + h * n), rel=1e-13)
            Qp = (2 * f0 + m_g * p) / (0.1 * m_g * eps)
            K = math.log(Qp) / (m_g * n * 2 * b / (n * (n - b)))
            assert K * b == pytest.approx(sgd_first_order_budget_bound(eps, n, p, kappa, m_g, f0), rel=1e-12)


class TestPlanSGDSecondOrder:
    def test_window(self):
        target = unit_target(L_g=1.0)
        assert plan_sgd_second_order(0.4, target, 0.0).h == pytest.approx(0.01)
        assert plan_sgd_second_order(8 / 990, target, 0.0).valid
        with pytest.raises(InfeasiblePlan):
            plan_sgd_second_order(0.41, target, 0.0)
        with pytest.raises(InfeasiblePlan):
            plan_sgd_second_order(8 / 990 * 0.99, target, 0.0)

    def test_step(self):
        for eps in (0.05, 0.1, 0.3):
            assert plan_sgd_second_order(eps, unit_target(L_g=1.0), 0.0).h == pytest.approx(eps / 40)

    def test_missing_hessian_lipschitz(self):
        with pytest.raises(UnsupportedTarget, match="unsupported-target"):
            plan_sgd_second_order(0.1, unit_target(), 0.0)

    def test_constants_below_one(self):
        with pytest.raises(InfeasiblePlan, match="L_g >= 1"):
            plan_sgd_second_order(0.1, unit_target(L_g=0.0), 0.0)

    def test_budget_order_in_n(self):
        eps, p = 0.1, 1
        for n in (10**10, 10**12):
            S = math.sqrt(p * n)
            Qpp = p / (0.3 * eps)
            approx = 4 * n * S * math.log(Qpp) / (8 * S + n * eps)
            assert sgd_second_order_budget_bound(eps, n, p, 1.0, 1.0, 1.0, 1.0, 0.0) == pytest.approx(approx)
        ratio = (sgd_second_order_budget_bound(eps, 10**12, p, 1, 1, 1, 1, 0)
                 / sgd_second_order_budget_bound(eps, 10**10, p, 1, 1, 1, 1, 0))
        assert ratio == pytest.approx(10.0, rel=1e-2)


soundness_cases = st.tuples(
    st.integers(9, 2000), st.integers(1, 5), st.floats(1.0, 3.0), st.floats(0.0, 1.0), st.floats(0, 500))


@settings(max_examples=150, deadline=None)
@given(soundness_cases, st.booleans())
def test_emitted_plans_are_sound(case, second):
    n, p, M_g, frac, f0 = case
    target = make_isotropic_gaussian_target(p, n, M_g, np.zeros((n, p)), L_g=1.0)
    if second:
        S = math.sqrt(p * max(p, n))
        lo, hi = 2 * S / (n * (n - 1)), S / (M_g * n)
        assume(lo < hi)
        eps = 4 * math.sqrt(M_g) * (lo + frac * (hi - lo))
        plan = plan_sgd_second_order(eps, target, f0)
        m, M, L, h = target.m, target.M, target.L, plan.h_eff
        # explicit formula: the upper window edge can put h_eff exactly at 2/(m+M)
        value = ((1 - m * h) ** plan.K * w0_upper_bound(f0, m, p) + L * h * p / (2 * m)
                 + 11 * M**1.5 * h * math.sqrt(p) / (5 * m))
    else:
        lo, hi = 3 * math.sqrt(p) / n, 2 * math.sqrt(p) / math.sqrt(n * M_g)
        assume(lo < hi)
        eps = lo + frac * (hi - lo)
        plan = plan_sgd_first_order(eps, target, f0)
        value = lmc_bound_first_order(plan.h_eff, plan.K, w0_upper_bound(f0, target.m, p), target.m, target.M, p)
    assert value <= eps * (1 + 1e-12)
    assert plan.valid and plan.K >= 1 and 1 <= plan.b <= n
    assert plan.budget == plan.K * plan.b
    assert plan.h_eff <= plan.h * (1 + 1e-12)


class TestBestPlan:
    def test_first_order_only_without_hessian_lipschitz(self):
        target = unit_target()
        assert isinstance(candidate_plans(0.1, target, 0.0)["sgd_second_order"], UnsupportedTarget)
        assert best_plan(0.1, target, 0.0).theorem == "sgd_first_order"

    def test_second_order_wins_for_small_accuracy(self):
        target = unit_target(L_g=1.0)
        f0 = 1e4
        plans = candidate_plans(0.03, target, f0)
        assert plans["sgd_second_order"].budget < plans["sgd_first_order"].budget
        assert best_plan(0.03, target, f0).theorem == "sgd_second_order"
        plans = candidate_plans(0.2, target, f0)
        assert plans["sgd_second_order"].budget > plans["sgd_first_order"].budget
        assert best_plan(0.2, target, f0).theorem == "sgd_first_order"

    def test_no_valid_plan_lists_conditions(self):
        with pytest.raises(InfeasiblePlan) as info:
            best_plan(5.0, unit_target(L_g=1.0), 0.0)
        names = [c.name for c in info.value.failed]
        assert any(name.startswith("eps <=") for name in names)
        assert any("sqrt(p*max(p,n))/(M_g*n)" in name for name in names)

    def test_json_shape(self):
        d = best_plan(0.1, unit_target(), 0.0).to_dict()
        assert {"theorem", "h", "h_eff", "b", "K", "budget", "epsilon", "conditions"} <= set(d)
        assert all({"name", "lhs", "rhs", "pass"} <= set(c) for c in d["conditions"])


def test_condition_slack():
    assert Condition("x", 1.0 + 1e-14, 1.0).passed
    assert not Condition("x", 1.0 + 1e-9, 1.0).passed
    assert Condition("y", 1.0 - 1e-14, 1.0, ">=").passed
