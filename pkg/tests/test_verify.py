import numpy as np
import pytest

from vtneumann import FieldModel, Grid, LCFunction, NeumannProblem, ParameterError, solve_weak
from vtneumann.operators import assemble_vt
from vtneumann.verify import (
    all_passed,
    oracle_apply_vt,
    projection_inequality_check,
    random_lcfunction,
    residual_report,
    run_identity_suite,
)

G = Grid(FieldModel(2, 1, 2.0), 1, 2, 2)


def test_suite_passes_on_default_grid():
    reps = run_identity_suite(G, 20, 0)
    assert all_passed(reps)
    names = {r.name for r in reps}
    assert names == {
        "tail_mass", "resolvent_nullity", "spectral_minimum", "antisymmetry",
        "flux_balance", "green_identity", "regional_decomposition", "projection_inequality",
    }
    assert sum(r.name == "green_identity" for r in reps) == 20
    assert max(r.rel_defect for r in reps if r.kind == "equality") <= 1e-10


def test_suite_is_deterministic():
    a = [r.to_dict() for r in run_identity_suite(G, 5, 42)]
    b = [r.to_dict() for r in run_identity_suite(G, 5, 42)]
    assert a == b
    c = [r.to_dict() for r in run_identity_suite(G, 5, 43)]
    assert a != c


def test_suite_detects_perturbation():
    reps = run_identity_suite(G, 5, 0, perturb=1e-6)
    failed = {r.name for r in reps if not r.passed}
    assert {"flux_balance", "green_identity", "regional_decomposition"} <= failed


def test_suite_rejects_zero_trials():
    with pytest.raises(ParameterError):
        run_identity_suite(G, 0, 0)


def test_projection_examples():
    g = Grid(FieldModel(2, 1, 2.0), 0, 0, 1)
    f = LCFunction(g, [1, -1])
    fine = projection_inequality_check(f, 1)
    assert fine.passed and fine.lhs == 0
    coarse = projection_inequality_check(f, 0)
    # ||f - 0||^2 = 1 against Q**0 * (4 * 1/4 * 2) = 2
    assert coarse.passed
    assert coarse.lhs == pytest.approx(1.0)
    assert coarse.rhs == pytest.approx(2.0)


def test_oracle_matches_assembly():
    rng = np.random.default_rng(9)
    u = random_lcfunction(G, rng)
    du = assemble_vt(G).apply(u)
    for i in (0, 3, 7, 12):
        assert oracle_apply_vt(u, G.coset(i)) == pytest.approx(du[i], rel=1e-12, abs=1e-13)


def test_oracle_refined_grid_agrees():
    rng = np.random.default_rng(10)
    g = Grid(FieldModel(3, 1, 1.2), 0, 1, 1)
    u = random_lcfunction(g, rng)
    for i in range(g.coset_count):
        base = oracle_apply_vt(u, g.coset(i))
        assert oracle_apply_vt(u, g.coset(i), refine_nu=2, truncate_M=2) == pytest.approx(base, rel=1e-12, abs=1e-13)


def test_residual_report_hand_example():
    g = Grid(FieldModel(2, 1, 2.0), 0, 0, 1)
    p = NeumannProblem.homogeneous(g, [1, -1])
    reps = {r.name: r for r in residual_report(solve_weak(p), p)}
    assert reps["pde_residual"].passed and reps["pde_residual"].lhs <= 1e-12
    assert reps["neumann_residual"].passed and reps["neumann_residual"].lhs <= 1e-12
    assert reps["compatibility"].passed
    assert reps["critical_point"].passed
    # the fixed-point form as printed does not vanish while the direct residuals do
    assert reps["printed_fredholm_form"].kind == "diagnostic"
    assert reps["printed_fredholm_form"].lhs == pytest.approx(1 / 28, rel=1e-12)


def test_residual_report_flags_wrong_solution():
    g = Grid(FieldModel(2, 1, 2.0), 0, 0, 1)
    p = NeumannProblem.homogeneous(g, [1, -1])
    sol = solve_weak(p)
    bad = type(sol)(sol.u + LCFunction(g, [1e-3, 0.0], 0.0), sol.h, sol.method, sol.residuals)
    reps = {r.name: r for r in residual_report(bad, p)}
    assert not reps["pde_residual"].passed
    assert not reps["critical_point"].passed
