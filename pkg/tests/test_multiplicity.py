"""分岐図と多重度のテスト"""

import math

import numpy as np
import pytest

from khessian.errors import DomainError, RegimeError
from khessian.multiplicity import (
    LambdaStarEstimate,
    PicardStatus,
    bifurcation_curve,
    count_solutions,
    estimate_lambda_star,
    lambda_star_lower_bound,
    picard_maximal,
    reconstruct_u,
    solve_all,
    turning_points,
)
from khessian.params import RegimeTag, make_params, q_star
from khessian.radial_ivp import integrate_ivp
from khessian.solution import SolutionSource


@pytest.fixture(scope="module")
def spiral():
    params = make_params(13, 2, 5)
    return params, integrate_ivp(params)


@pytest.fixture(scope="module")
def spiral_curve(spiral):
    params, profile = spiral
    return bifurcation_curve(params, profile=profile)


def singular_lambda(params):
    """c_{n,k} λ̃"""
    return float(params.constants.c_nk) * params.constants.lambda_tilde


class TestBifurcationCurve:
    """bifurcation_curve のテスト"""

    def test_small_s(self, spiral_curve):
        params = spiral_curve.params
        expected = params.constants.lambda_tilde * spiral_curve.s[0] ** 4
        assert spiral_curve.lambda_rescaled[0] == pytest.approx(expected, rel=1e-6)

    def test_limit(self, spiral_curve):
        assert spiral_curve.lambda_physical[-1] == pytest.approx(
            singular_lambda(spiral_curve.params), rel=1e-2)

    def test_physical_convention(self, spiral_curve):
        assert np.allclose(spiral_curve.lambda_physical, 6.0 * spiral_curve.lambda_rescaled)

    def test_origin_value_decreasing(self, spiral_curve):
        assert np.all(np.diff(spiral_curve.A) <= 0)
        assert spiral_curve.A[-1] < -10

    def test_custom_grid(self, spiral):
        params, profile = spiral
        curve = bifurcation_curve(params, [0.5, 1.0, 2.0], profile=profile)
        assert curve.s.tolist() == [0.5, 1.0, 2.0]
        assert len(curve.rows()) == 3

    def test_nonpositive_grid(self, spiral):
        params, profile = spiral
        with pytest.raises(DomainError):
            bifurcation_curve(params, [0.0, 1.0], profile=profile)

    def test_subcritical(self):
        with pytest.raises(RegimeError):
            bifurcation_curve(make_params(13, 2, 3))

    def test_turning_points_alternate(self, spiral_curve):
        points = turning_points(spiral_curve)
        limit = singular_lambda(spiral_curve.params)
        assert len(points) >= 2
        assert points[0][1] > limit
        assert points[1][1] < limit
        assert points[0][0] < points[1][0]

    def test_node_has_no_turning_points(self):
        curve = bifurcation_curve(make_params(11, 1, 8))
        assert turning_points(curve) == []

    def test_to_dict(self, spiral_curve):
        data = spiral_curve.to_dict()
        assert "c_nk" in data["conventions"]
        assert len(data["A"]) == spiral_curve.s.size


class TestCountSolutions:
    """count_solutions のテスト"""

    def test_below_fold_single(self, spiral):
        params, profile = spiral
        report = count_solutions(params, 0.1 * singular_lambda(params), profile=profile)
        assert report.count == 1
        assert not report.truncated
        assert report.regime is RegimeTag.SPIRAL

    def test_above_fold_none(self, spiral):
        params, profile = spiral
        report = count_solutions(params, 10 * singular_lambda(params), profile=profile)
        assert report.count == 0
        assert not report.truncated

    def test_roots_solve_equation(self, spiral):
        params, profile = spiral
        lam = 0.5 * singular_lambda(params)
        _, roots = count_solutions(params, lam, profile=profile)
        curve = bifurcation_curve(params, roots, profile=profile)
        assert np.allclose(curve.lambda_physical, lam, rtol=1e-9)

    def test_singular_lambda_many_solutions(self):
        params = make_params(13, 2, 3.4)
        lam = singular_lambda(params)
        report = count_solutions(params, lam)
        assert report.count >= 5
        assert report.truncated
        assert count_solutions(params, lam, s_max=1e6).count > report.count

    def test_node_at_most_one(self):
        params = make_params(11, 1, 8)
        profile = integrate_ivp(params)
        lam = singular_lambda(params)
        assert count_solutions(params, 0.5 * lam, profile=profile).count == 1
        assert count_solutions(params, 2.0 * lam, profile=profile).count == 0

    def test_center_rejected(self):
        with pytest.raises(RegimeError):
            count_solutions(make_params(5, 1, q_star(5, 1)), 1.0)

    def test_subcritical_rejected(self):
        with pytest.raises(RegimeError):
            count_solutions(make_params(13, 2, 3), 1.0)

    def test_nonpositive_lambda(self, spiral):
        params, profile = spiral
        with pytest.raises(DomainError):
            count_solutions(params, -1.0, profile=profile)

    def test_profile_mismatch(self, spiral):
        _, profile = spiral
        with pytest.raises(DomainError):
            count_solutions(make_params(13, 2, 6), 1.0, profile=profile)

    def test_to_dict(self, spiral):
        params, profile = spiral
        data = count_solutions(params, 1.0, profile=profile).to_dict()
        assert data["regime"] == "spiral"
        assert data["count"] == len(data["roots"])


class TestReconstructU:
    """reconstruct_u のテスト"""

    @pytest.fixture(scope="class")
    def solution(self, spiral):
        params, profile = spiral
        lam = 0.5 * singular_lambda(params)
        _, roots = count_solutions(params, lam, profile=profile)
        return reconstruct_u(params, roots[0], profile=profile, index=0)

    def test_boundary(self, solution):
        assert abs(solution.u[-1]) < 1e-12
        assert np.all(solution.u[:-1] < 0)

    def test_lambda(self, solution):
        assert solution.lambda_physical == pytest.approx(0.5 * singular_lambda(solution.params),
                                                         rel=1e-9)
        assert solution.params.lam == solution.lambda_physical

    def test_origin_value(self, solution, spiral):
        _, profile = spiral
        v0 = profile.v_at(solution.s0)[0]
        assert solution.origin_value == pytest.approx(1.0 + 1.0 / v0)
        assert solution.evaluate(np.array([0.0]))[0] == pytest.approx(solution.origin_value)

    def test_residuals(self, solution):
        assert solution.residuals["operator"] < 1e-5
        assert solution.residuals["identity"] < 1e-6
        assert solution.residuals["pohozaev"] < 1e-6
        assert solution.residuals["boundary"] < 1e-12
        assert solution.source is SolutionSource.SHOOTING

    def test_invalid_s0(self, spiral):
        params, profile = spiral
        with pytest.raises(DomainError):
            reconstruct_u(params, 0.0, profile=profile)


class TestPicard:
    """Picard 反復のテスト"""

    def test_converges_to_minimal_branch(self, spiral):
        params, profile = spiral
        lam = 0.5 * singular_lambda(params)
        result = picard_maximal(params, lam)
        assert result.status is PicardStatus.CONVERGED
        assert result.converged
        assert result.monotone
        _, roots = count_solutions(params, lam, profile=profile)
        shooting = reconstruct_u(params, roots[0], profile=profile)
        assert result.solution.origin_value == pytest.approx(shooting.origin_value, rel=1e-5)

    def test_solution_quality(self, spiral):
        params, _ = spiral
        result = picard_maximal(params, 0.5 * singular_lambda(params))
        solution = result.solution
        assert solution.source is SolutionSource.PICARD
        assert abs(solution.u[-1]) < 1e-14
        assert solution.residuals["identity"] < 1e-5

    def test_diverges_above_fold(self, spiral):
        params, _ = spiral
        result = picard_maximal(params, 100 * singular_lambda(params))
        assert result.status is PicardStatus.DIVERGED
        assert result.solution is None
        assert result.reason
        assert result.to_dict()["origin_value"] is None

    def test_subcritical_allowed(self):
        result = picard_maximal(make_params(13, 2, 3), 0.5)
        assert result.converged

    def test_nonpositive_lambda(self, spiral):
        params, _ = spiral
        with pytest.raises(DomainError):
            picard_maximal(params, 0.0)


class TestLambdaStar:
    """λ* の推定のテスト"""

    def test_lower_bound(self):
        assert lambda_star_lower_bound(5, 1, 3) == pytest.approx(1.1 ** -3)

    def test_matches_first_turning_point(self, spiral_curve):
        estimate = estimate_lambda_star(spiral_curve.params)
        fold = turning_points(spiral_curve)[0][1]
        assert isinstance(estimate, LambdaStarEstimate)
        assert estimate.lower <= estimate.value <= estimate.upper
        assert float(estimate) == pytest.approx(fold, rel=2e-2)
        assert estimate.value > lambda_star_lower_bound(13, 2, 5)


class TestNodeBranch:
    """結節点 (n, k, q) = (11, 1, 8) の単調な分岐"""

    @pytest.fixture(scope="class")
    def node(self):
        params = make_params(11, 1, 8)
        return params, integrate_ivp(params)

    @pytest.mark.parametrize("lam", [0.3, 1.0, 2.0])
    def test_unique_solution(self, node, lam):
        params, profile = node
        assert count_solutions(params, lam, profile=profile).count == 1

    @pytest.mark.parametrize("lam", [1e-8, 1e-9])
    def test_unique_solution_for_tiny_lambda(self, node, lam):
        """s_init より内側の根も級数解で見つける"""
        params, profile = node
        report = count_solutions(params, lam, profile=profile)
        assert report.count == 1
        expected = (lam / params.constants.lambda_tilde) ** 0.5
        assert report.roots[0] == pytest.approx(expected, rel=1e-6)
        solution = reconstruct_u(params, report.roots[0], profile=profile)
        assert solution.lambda_physical == pytest.approx(lam, rel=1e-9)
        assert solution.u[-1] == pytest.approx(0.0, abs=1e-15)

    def test_resolved_branch_increasing(self, node):
        """O2 と区別できる範囲では λ は s について狭義単調増加"""
        params, profile = node
        curve = bifurcation_curve(params, profile=profile)
        part = curve.resolved()
        assert part.s.size > 0.5 * curve.s.size
        assert np.all(part.distance_to_o2 > 1e-11)
        assert np.all(np.diff(part.lambda_rescaled) > 0)

    def test_picard_matches_shooting(self, node):
        """最大解と射撃法の解が一致する"""
        params, profile = node
        _, roots = count_solutions(params, 0.1, profile=profile)
        shooting = reconstruct_u(params, roots[0], profile=profile)
        result = picard_maximal(params, 0.1)
        r = np.linspace(0.0, 1.0, 201)
        assert np.max(np.abs(result.solution.evaluate(r) - shooting.evaluate(r))) < 1e-5

    def test_maximal_solutions_ordered(self, node):
        """λ が大きいほど最大解は小さい"""
        params, _ = node
        r = np.linspace(0.0, 1.0, 101)
        values = [picard_maximal(params, lam).solution.evaluate(r) for lam in (0.05, 0.1, 0.2)]
        assert np.all(values[2] <= values[1] + 1e-12)
        assert np.all(values[1] <= values[0] + 1e-12)

    def test_lambda_star_is_singular_value(self, node):
        params, _ = node
        estimate = estimate_lambda_star(params, 1e-2)
        assert estimate.value == pytest.approx(122 / 49, rel=2e-2)


class TestSolveAll:
    """solve_all のテスト"""

    def test_center_uses_closed_forms(self):
        params = make_params(5, 1, q_star(5, 1))
        report, solutions = solve_all(params, 2.0)
        assert report.count == 2
        assert all(s.source is SolutionSource.CLOSED_FORM for s in solutions)

    def test_center_above_mu_star(self):
        report, solutions = solve_all(make_params(5, 1, q_star(5, 1)), 4.0)
        assert report.count == 0
        assert solutions == []

    def test_spiral(self):
        params = make_params(13, 2, 5)
        report, solutions = solve_all(params, 0.5 * singular_lambda(params))
        assert report.count == len(solutions) == 1
        assert solutions[0].index == 0
        assert math.isclose(solutions[0].s0, report.roots[0])

    def test_subcritical(self):
        with pytest.raises(RegimeError):
            solve_all(make_params(13, 2, 3), 1.0)
