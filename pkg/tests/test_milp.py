import math

import numpy as np
import pytest

from netinterdict.instances import GenConfig, worked_example_spi, generate_mfi, generate_spi
from netinterdict.milp import (
    BUDGET_EXCEEDED,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SolverConfig,
    check_feasible,
    solve_lp,
    solve_milp,
    solve_milp_with_extra,
)
from netinterdict.reduction import Constraint, MilpInstance, Variable, VarGroup, build_mfi_milp, dualize_spi


def _lp(sense, cont, rows, binaries=(Variable("z", 0, 1, True),)):
    """Small helper: binaries in group 0, continuous variables in group 1."""
    return MilpInstance(sense, (VarGroup(0, binaries), VarGroup(1, cont)), rows)


def test_max_x_le_5():
    m = _lp("max", (Variable("x", 0, math.inf, False, 1.0),), [Constraint((((1, 0), 1.0),), "<=", 5.0)])
    res = solve_lp(m)
    assert res.status == OPTIMAL and res.value == pytest.approx(5.0)
    assert solve_milp(m).value == pytest.approx(5.0)


def test_textbook_lp():
    # max 3a + 5b, a <= 4, 2b <= 12, 3a + 2b <= 18  ->  36 at (2, 6)
    cont = (Variable("a", 0, math.inf, False, 3.0), Variable("b", 0, math.inf, False, 5.0))
    rows = [
        Constraint((((1, 0), 1.0),), "<=", 4.0),
        Constraint((((1, 1), 2.0),), "<=", 12.0),
        Constraint((((1, 0), 3.0), ((1, 1), 2.0)), "<=", 18.0),
    ]
    res = solve_lp(_lp("max", cont, rows))
    assert res.value == pytest.approx(36.0)
    np.testing.assert_allclose(res.x[1:], [2.0, 6.0], atol=1e-9)


def test_equality_and_ge_rows():
    # min a + b, a + b = 3, a >= 1, b in [0, 10]  ->  3
    cont = (Variable("a", -5, 5, False, 1.0), Variable("b", 0, 10, False, 1.0))
    rows = [
        Constraint((((1, 0), 1.0), ((1, 1), 1.0)), "=", 3.0),
        Constraint((((1, 0), 1.0),), ">=", 1.0),
    ]
    res = solve_lp(_lp("min", cont, rows))
    assert res.status == OPTIMAL and res.value == pytest.approx(3.0)


def test_infeasible_rows():
    cont = (Variable("x", 0, math.inf, False, 1.0),)
    rows = [Constraint((((1, 0), 1.0),), "<=", 1.0), Constraint((((1, 0), 1.0),), ">=", 2.0)]
    m = _lp("max", cont, rows)
    assert solve_lp(m).status == INFEASIBLE
    sol = solve_milp(m)
    assert sol.status == INFEASIBLE and sol.x is None and math.isnan(sol.value)


def test_unbounded_lp():
    m = _lp("max", (Variable("x", 0, math.inf, False, 1.0),), [])
    assert solve_lp(m).status == UNBOUNDED
    assert solve_milp(m).status == UNBOUNDED


def test_free_and_mirrored_bounds():
    # min a - b with a free, b <= 2 (no lower bound), a >= -3 via a row
    cont = (Variable("a", -math.inf, math.inf, False, 1.0), Variable("b", -math.inf, 2.0, False, -1.0))
    rows = [Constraint((((1, 0), 1.0),), ">=", -3.0)]
    res = solve_lp(_lp("min", cont, rows))
    assert res.status == OPTIMAL and res.value == pytest.approx(-5.0)
    np.testing.assert_allclose(res.x[1:], [-3.0, 2.0], atol=1e-9)


def test_integer_rounding_matters():
    # max z0 + z1 + z2 with 2 z0 + 2 z1 + 2 z2 <= 3: LP 1.5, MILP 1
    zs = tuple(Variable(f"z{k}", 0, 1, True, 1.0) for k in range(3))
    rows = [Constraint(tuple(((0, k), 2.0) for k in range(3)), "<=", 3.0)]
    m = MilpInstance("max", (VarGroup(0, zs),), rows)
    assert solve_lp(m).value == pytest.approx(1.5)
    sol = solve_milp(m)
    assert sol.value == pytest.approx(1.0)
    assert sol.bound == pytest.approx(1.0)
    assert sol.node_count > 1


def test_deterministic_and_log_monotone():
    milp = dualize_spi(generate_spi(GenConfig(8, density=0.6, budget=3, seed=5)))
    a = solve_milp(milp)
    b = solve_milp(milp)
    np.testing.assert_array_equal(a.x, b.x)
    assert a.node_count == b.node_count
    assert [v for _, v in a.incumbent_log] == [v for _, v in b.incumbent_log]
    vals = [v for _, v in a.incumbent_log]
    assert all(y > x for x, y in zip(vals, vals[1:]))  # maximize: strictly improving
    times = [t for t, _ in a.incumbent_log]
    assert times == sorted(times)
    assert vals[-1] == a.value


def test_mfi_log_decreasing():
    milp = build_mfi_milp(generate_mfi(GenConfig(6, budget=2, seed=2)))
    sol = solve_milp(milp)
    vals = [v for _, v in sol.incumbent_log]
    assert all(y < x for x, y in zip(vals, vals[1:]))
    assert check_feasible(milp, sol.x)


def test_incumbent_csv():
    sol = solve_milp(dualize_spi(worked_example_spi()))
    lines = sol.incumbent_csv().splitlines()
    assert lines[0] == "time_ms,value"
    assert len(lines) == 1 + len(sol.incumbent_log)


def test_zero_time_budget():
    sol = solve_milp(dualize_spi(worked_example_spi()), SolverConfig(time_limit_ms=0))
    assert sol.status == BUDGET_EXCEEDED
    assert sol.node_count == 0


def test_node_limit():
    milp = dualize_spi(generate_spi(GenConfig(9, density=0.7, budget=3, seed=1)))
    full = solve_milp(milp)
    capped = solve_milp(milp, SolverConfig(node_limit=1))
    assert full.node_count > 1
    assert capped.status == BUDGET_EXCEEDED
    assert capped.node_count == 1


def test_weak_duality_on_incumbents():
    # every incumbent is feasible, so it never beats the optimum, and the bound never undercuts it
    for seed in range(10):
        milp = dualize_spi(generate_spi(GenConfig(6, density=0.7, budget=2, seed=seed)))
        sol = solve_milp(milp)
        relax = solve_lp(milp)
        assert relax.value >= sol.value - 1e-6
        assert all(v <= sol.value + 1e-9 for _, v in sol.incumbent_log)


def test_solver_config_from_dict():
    cfg = SolverConfig.from_dict({"node_limit": 5, "time_limit_ms": 100})
    assert cfg.node_limit == 5 and cfg.time_limit_ms == 100
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"nodes": 5})


def test_extra_rows_restrict_solution():
    milp = dualize_spi(worked_example_spi())
    # forbid interdicting (3, 6) and (0, 3): the best remaining value is lower
    k36, k03 = 8, 2
    rows = [Constraint((((0, k36), 1.0),), "<=", 0.0), Constraint((((0, k03), 1.0),), "<=", 0.0)]
    sol = solve_milp_with_extra(milp, (), rows)
    assert sol.x.shape == (milp.n_vars,)
    assert sol.x[k36] == 0 and sol.x[k03] == 0
    assert sol.value < 8.0
    sol2 = solve_milp_with_extra(milp, [Variable("d", 0, 1, True)], [Constraint((((2, 0), 1.0),), "<=", 1.0)])
    assert sol2.x.shape == (milp.n_vars,)
    assert sol2.value == pytest.approx(8.0)
