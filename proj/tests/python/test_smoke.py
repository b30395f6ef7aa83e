import json

import numpy as np
import pytest

import blockmm


def small_instance(seed=3, m=4, n=12, p=5):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(m, n)), rng.normal(size=(n, p))


def test_exact_product_matches_numpy():
    M, N = small_instance()
    np.testing.assert_allclose(blockmm.multiply_exact(M, N), M @ N, rtol=1e-13, atol=1e-13)


def test_norms():
    M, N = small_instance()
    np.testing.assert_allclose(blockmm.column_norms(M), np.linalg.norm(M, axis=0))
    np.testing.assert_allclose(blockmm.row_norms(N), np.linalg.norm(N, axis=1))
    assert blockmm.frobenius_norm(M) == pytest.approx(np.linalg.norm(M))


def test_plan_budgets_sum_to_c():
    M, N = small_instance()
    for method in ("OPL", "ONC", "UU", "ONU", "ONMCNR"):
        plan = blockmm.make_plan(method, M, N, 3, 9, c0=6, seed=2)
        assert sum(plan.budgets) == 9
        assert plan.method == method
        for probs in plan.probabilities:
            assert sum(probs) == pytest.approx(1.0)


def test_sabmm_is_exact_when_every_column_is_taken_once_per_unit_block():
    M, N = small_instance(n=6)
    plan = blockmm.make_plan("OPL", M, N, 6, 6)
    out = blockmm.sabmm(M, N, plan, seed=11)
    np.testing.assert_allclose(out["product"], M @ N, rtol=1e-12, atol=1e-12)
    assert out["C"].shape == (4, 6) and out["D"].shape == (6, 5)


def test_sabmm_deterministic_for_seed():
    M, N = small_instance()
    plan = blockmm.make_plan("ONC", M, N, [5, 7], 8)
    a = blockmm.sabmm(M, N, plan, seed=5)["product"]
    b = blockmm.sabmm(M, N, plan, seed=5)["product"]
    assert np.array_equal(a, b)


def test_analytics_consistency():
    M, N = small_instance()
    plan = blockmm.make_plan("OPL", M, N, 3, 10)
    var = blockmm.elementwise_variance(M, N, plan)
    assert var.sum() == pytest.approx(blockmm.expected_sq_error(M, N, plan), rel=1e-12)
    assert blockmm.optimal_objective(M, N, 3, 10.0) <= blockmm.expected_sq_error(M, N, plan) * (1 + 1e-9)
    b = blockmm.bounds(M, N, plan, 0.1)
    assert b["optimal_sizes"]["variance_bound"] >= blockmm.expected_sq_error(M, N, plan)


def test_plan_json_round_trip():
    M, N = small_instance()
    plan = blockmm.make_plan("UU", M, N, 4, 8)
    back = blockmm.plan_from_json(plan.to_json())
    assert back.budgets == plan.budgets
    assert json.loads(back.to_json()) == json.loads(plan.to_json())


def test_integerize_and_errors():
    assert blockmm.integerize([1.0, 1.0, 1.0], 10) == [4, 3, 3]
    M, N = small_instance()
    with pytest.raises(ValueError):
        blockmm.make_plan("OPL", M, N, 5, 8)
    with pytest.raises(ValueError):
        blockmm.multiply_exact(M, M)


def test_generate_and_ssm():
    M, N = blockmm.generate("II", 3, 20, 4, seed=9)
    assert M.shape == (3, 20) and N.shape == (20, 4)
    out = blockmm.ssm_estimate(M, N, 4, 4, seed=1)
    assert out["product"].shape == (3, 4)
    assert np.isfinite(out["product"]).all()
