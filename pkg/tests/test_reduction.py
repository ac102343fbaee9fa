import numpy as np
import pytest

from netinterdict.instances import GenConfig, MfiInstance, SpiInstance, worked_example_spi, generate_mfi, generate_spi
from netinterdict.milp import OPTIMAL, check_feasible, solve_lp, solve_milp
from netinterdict.reduction import (
    Constraint,
    MilpInstance,
    Variable,
    VarGroup,
    build_mfi_milp,
    dualize_spi,
    fix_interdiction,
    reduce_instance,
)


def test_worked_example_shape():
    milp = dualize_spi(worked_example_spi())
    assert milp.sense == "max"
    assert milp.p == 1
    assert [len(g) for g in milp.var_groups] == [12, 7]
    assert len(milp.constraints) == 13
    assert [r.tag for r in milp.constraints].count("dual") == 12
    assert [r.tag for r in milp.constraints].count("budget") == 1
    c, A, rel, b, lb, ub, integral = milp.dense()
    assert integral.sum() == 12
    # objective pi_s - pi_t, pi_t pinned to 0
    assert c[12 + 0] == 1.0 and c[12 + 6] == -1.0
    assert lb[12 + 6] == ub[12 + 6] == 0.0


def test_worked_example_row_coefficients():
    inst = worked_example_spi()
    milp = dualize_spi(inst)
    for k, (i, j, cost, d) in enumerate(inst.edges):
        row = dict(milp.constraints[k].coeffs)
        assert row == {(1, i): 1.0, (1, j): -1.0, (0, k): -d}
        assert milp.constraints[k].rhs == cost
        assert milp.constraints[k].relation == "<="
    budget = milp.constraints[-1]
    assert dict(budget.coeffs) == {(0, k): 1.0 for k in range(12)}
    assert budget.rhs == 1.0


def test_zero_delay_coefficient_omitted():
    inst = SpiInstance(3, 0, 2, [(0, 1, 1.0, 0.0), (1, 2, 2.0, 3.0)], 1)
    milp = dualize_spi(inst)
    assert (0, 0) not in dict(milp.constraints[0].coeffs)
    assert dict(milp.constraints[1].coeffs)[(0, 1)] == -3.0


def test_worked_example_milp_optimum():
    sol = solve_milp(dualize_spi(worked_example_spi()))
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(8.0, abs=1e-6)


def test_budget_zero_spi_equals_shortest_path():
    inst = SpiInstance(7, 0, 6, worked_example_spi().edges, 0)
    sol = solve_milp(dualize_spi(inst))
    assert sol.value == pytest.approx(7.0, abs=1e-6)
    assert np.all(sol.x[:12] == 0)


def test_diamond_mfi(diamond):
    milp = build_mfi_milp(diamond)
    assert milp.sense == "min"
    assert [len(g) for g in milp.var_groups] == [4, 4, 4]
    assert all(v.binary for g in milp.var_groups for v in g.variables)
    sol = solve_milp(milp)
    assert sol.value == pytest.approx(3.0, abs=1e-6)


def test_diamond_with_one_removal(diamond):
    inst = MfiInstance(4, 0, 3, diamond.edges, 1.0)
    sol = solve_milp(build_mfi_milp(inst))
    assert sol.value == pytest.approx(1.0, abs=1e-6)
    gamma = sol.x[:4]
    # either s->a or a->t is removed; both leave only the b branch of capacity 1
    assert gamma.sum() == 1 and (gamma[0] == 1 or gamma[1] == 1)


def test_mfi_zero_removal_costs_row_is_valid():
    inst = MfiInstance(3, 0, 2, [(0, 1, 2.0, 0.0), (1, 2, 5.0, 0.0)], 0.0)
    milp = build_mfi_milp(inst)
    assert milp.constraints[-1].tag == "budget"
    # free removals cut everything
    assert solve_milp(milp).value == pytest.approx(0.0, abs=1e-9)


def test_fix_interdiction():
    milp = dualize_spi(worked_example_spi())
    x = np.zeros(12)
    x[8] = 1
    fixed = fix_interdiction(milp, x)
    _, _, _, _, lb, ub, _ = fixed.dense()
    np.testing.assert_array_equal(lb[:12], x)
    np.testing.assert_array_equal(ub[:12], x)
    lp = solve_lp(fixed, relaxed=False)
    assert lp.status == OPTIMAL and lp.value == pytest.approx(8.0)
    with pytest.raises(ValueError):
        fix_interdiction(milp, np.zeros(5))


def test_relaxed_false_rejects_free_integers():
    with pytest.raises(ValueError):
        solve_lp(dualize_spi(worked_example_spi()), relaxed=False)


def test_solution_is_feasible():
    milp = dualize_spi(generate_spi(GenConfig(6, density=0.7, budget=2, seed=11)))
    sol = solve_milp(milp)
    assert check_feasible(milp, sol.x)


def test_json_roundtrip():
    for milp in (
        dualize_spi(worked_example_spi()),
        build_mfi_milp(generate_mfi(GenConfig(4, budget=1, seed=0))),
    ):
        back = MilpInstance.from_dict(milp.to_dict())
        assert back == milp
        assert back.to_json() == milp.to_json()


def test_reduce_dispatch(diamond):
    assert reduce_instance(diamond).sense == "min"
    assert reduce_instance(worked_example_spi()).sense == "max"
    with pytest.raises(TypeError):
        reduce_instance("nope")


def test_structure_validation():
    with pytest.raises(ValueError):
        VarGroup(0, (Variable("y", 0, 1, False),))
    with pytest.raises(ValueError):
        VarGroup(1, ())
    g0 = VarGroup(0, (Variable("z", 0, 1, True),))
    with pytest.raises(ValueError):
        MilpInstance("max", (g0,), (Constraint((((0, 3), 1.0),), "<=", 1.0),))
    with pytest.raises(ValueError):
        MilpInstance("maximize", (g0,), ())
    with pytest.raises(ValueError):
        Constraint((), "<", 0.0)
    with pytest.raises(ValueError):
        Constraint((), "<=", 0.0, "mystery")


def test_augment_adds_group():
    milp = dualize_spi(worked_example_spi())
    aug = milp.augment([Variable("d", 0, 1, True)], [Constraint((((2, 0), 1.0),), "<=", 0.0)])
    assert aug.p == 2 and aug.n_vars == milp.n_vars + 1
    assert aug.provenance["augmented"] is True
