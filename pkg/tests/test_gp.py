import numpy as np
import pytest

from cfrelay.gp import (GpInfeasible, GpNotConverged, GpProblem, GpUnbounded, Monomial,
                        posynomial_value, solve_gp)

from gp_cases import feasible_random_gps


def test_single_variable():
    sol = solve_gp(GpProblem(["x"], Monomial(1.0, {"x": 1.0}), [[Monomial(2.0, {"x": -1.0})]]))
    assert sol.x["x"] == pytest.approx(2.0, rel=1e-7)
    assert sol.duality_gap < 1e-8


def test_two_variables():
    gp = GpProblem(["x", "y"], Monomial(1.0, {"x": 1.0, "y": 1.0}),
                   [[Monomial(1.0, {"x": -1.0})], [Monomial(1.0, {"y": -1.0})]])
    sol = solve_gp(gp)
    assert sol.x["x"] == pytest.approx(1.0, rel=1e-7) and sol.x["y"] == pytest.approx(1.0, rel=1e-7)
    assert sol.kkt_residual < 1e-6


def test_box_volume():
    # maximize h w d s.t. 2(hw + hd) <= 100, wd <= 10: optimum (100/6)^1.5... checked below
    gp = GpProblem(["h", "w", "d"], Monomial(1.0, {"h": -1.0, "w": -1.0, "d": -1.0}),
                   [[Monomial(0.02, {"h": 1.0, "w": 1.0}), Monomial(0.02, {"h": 1.0, "d": 1.0})],
                    [Monomial(0.1, {"w": 1.0, "d": 1.0})]])
    sol = solve_gp(gp)
    vol = sol.x["h"] * sol.x["w"] * sol.x["d"]
    # at the optimum w = d = sqrt(10), h = 50 / (2 sqrt(10))
    assert vol == pytest.approx(50 / (2 * np.sqrt(10)) * 10, rel=1e-6)


def test_infeasible_certificate():
    gp = GpProblem(["x"], Monomial(1.0, {"x": 1.0}),
                   [[Monomial(2.0, {"x": -1.0})], [Monomial(1.0, {"x": 1.0})]])
    with pytest.raises(GpInfeasible) as exc:
        solve_gp(gp)
    assert exc.value.min_violation == pytest.approx(0.5 * np.log(2), rel=1e-3)
    assert exc.value.multipliers == pytest.approx([0.5, 0.5], abs=1e-3)


def test_unbounded():
    gp = GpProblem(["x", "y"], Monomial(1.0, {"x": 1.0}), [[Monomial(1.0, {"x": 1.0, "y": -1.0})]])
    with pytest.raises(GpUnbounded):
        solve_gp(gp)


def test_newton_budget():
    gp = GpProblem(["x"], Monomial(1.0, {"x": 1.0}), [[Monomial(2.0, {"x": -1.0})]])
    with pytest.raises(GpNotConverged) as exc:
        solve_gp(gp, max_newton=1, x0={"x": 5.0})
    assert exc.value.best is not None


def test_start_point_feasibility_irrelevant():
    gp = GpProblem(["x"], Monomial(1.0, {"x": 1.0}), [[Monomial(2.0, {"x": -1.0})]])
    for x0 in (0.01, 3.0, 1e6):
        assert solve_gp(gp, x0={"x": x0}).x["x"] == pytest.approx(2.0, rel=1e-6)


def test_problem_validation():
    with pytest.raises(ValueError):
        Monomial(0.0)
    with pytest.raises(ValueError):
        GpProblem(["x", "x"], Monomial(1.0), [])
    with pytest.raises(ValueError):
        GpProblem(["x"], Monomial(1.0, {"z": 1.0}), [])
    with pytest.raises(ValueError):
        GpProblem(["x"], Monomial(1.0), [[]])
    with pytest.raises(ValueError):
        GpProblem(["x"], Monomial(1.0), [[Monomial(1.0)]], labels=["a", "b"])


def test_monomial_algebra():
    m = Monomial(2.0, {"x": 1.0}) * Monomial(3.0, {"x": 2.0, "y": -1.0})
    assert m.coef == 6.0 and m.exps == {"x": 3.0, "y": -1.0}
    assert m({"x": 2.0, "y": 4.0}) == pytest.approx(12.0)
    assert posynomial_value([m, Monomial(1.0)], {"x": 1.0, "y": 1.0}) == pytest.approx(7.0)


@pytest.mark.parametrize("gp, best", feasible_random_gps(seed=99, count=10))
def test_random_gp_against_grid(gp, best):
    sol = solve_gp(gp)
    assert gp.max_violation(sol.x) <= 1e-8
    assert sol.objective <= best * (1 + 1e-9)
    assert sol.objective >= best * (1 - 0.01)
