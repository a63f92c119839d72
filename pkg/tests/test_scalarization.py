"""Scalarization backends and the solver wire protocol."""

import math

import numpy as np
import pytest

from hyperboxing.problems import make_problem
from hyperboxing.scalarization import (
    ContractError,
    GridScalarizer,
    NoIntersection,
    ProtocolError,
    PSQuery,
    PSSolution,
    decode_query,
    decode_solution,
    encode_done,
    encode_query,
    encode_solution,
    solve_grid_ps,
    solve_quadric_ps,
)


class TestPSQuery:
    def test_valid(self):
        q = PSQuery(0, (0.0, 0.0), (1.0, 1.0))
        assert q.dim == 2

    def test_nonpositive_direction_rejected(self):
        with pytest.raises(ValueError):
            PSQuery(0, (0.0, 0.0), (1.0, 0.0))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            PSQuery(0, (0.0, 0.0), (1.0, 1.0, 1.0))

    def test_solution_s_is_z_plus_lambda(self):
        sol = PSSolution(0, -0.5, (0.25, 0.5), (0.25, 0.0))
        assert sol.s == (0.5, 0.5)


class TestQuadricSolver:
    def test_unit_circle_diagonal(self):
        sol = solve_quadric_ps(PSQuery(0, (0.0, 0.0), (1.0, 1.0)), (1.0, 1.0))
        root = -1.0 / math.sqrt(2.0)
        assert sol.alpha == pytest.approx(root, abs=1e-12)
        assert sol.z == pytest.approx((root, root), abs=1e-12)
        assert sol.lam == (0.0, 0.0)

    def test_ellipse_intersection(self):
        sol = solve_quadric_ps(PSQuery(0, (0.0, 0.0), (2.0, 1.0)), (2.0, 1.0))
        assert sol.alpha == pytest.approx(-1.0 / math.sqrt(2.0), abs=1e-12)
        assert sol.z == pytest.approx((-math.sqrt(2.0), -1.0 / math.sqrt(2.0)), abs=1e-12)
        z1, z2 = sol.z
        assert z1**2 / 4.0 + z2**2 == pytest.approx(1.0, abs=1e-12)

    def test_missing_line_raises(self):
        with pytest.raises(NoIntersection):
            solve_quadric_ps(PSQuery(0, (0.0, -3.0), (1.0, 1.0)), (1.0, 1.0))

    def test_boundary_membership_random(self):
        rng = np.random.default_rng(11)
        a = (3.0, 1.0, 1.0)
        for _ in range(100):
            p = tuple(rng.uniform(-0.5, 0.0, 3))
            q = tuple(rng.uniform(0.5, 2.0, 3))
            sol = solve_quadric_ps(PSQuery(0, p, q), a)
            assert sum((zi / ai) ** 2 for zi, ai in zip(sol.z, a)) == pytest.approx(
                1.0, abs=1e-10
            )

    def test_smaller_root_selected(self):
        sol = solve_quadric_ps(PSQuery(0, (0.0, 0.0), (1.0, 1.0)), (1.0, 1.0))
        other = 1.0 / math.sqrt(2.0)
        assert sol.alpha <= other

    def test_translation_along_diagonal_shifts_alpha(self):
        # Moving the reference point by t q slides the whole ray, so the
        # optimal alpha changes by exactly -t while z stays put.
        rng = np.random.default_rng(5)
        a = (1.0, 1.0)
        for _ in range(50):
            p = tuple(rng.uniform(-0.3, 0.0, 2))
            q = tuple(rng.uniform(0.5, 1.5, 2))
            t = float(rng.uniform(-0.1, 0.1))
            moved = tuple(pi + t * qi for pi, qi in zip(p, q))
            s1 = solve_quadric_ps(PSQuery(0, p, q), a)
            s2 = solve_quadric_ps(PSQuery(0, moved, q), a)
            assert s2.alpha == pytest.approx(s1.alpha - t, abs=1e-12)
            assert s2.z == pytest.approx(s1.z, abs=1e-10)


class _ToyLineProblem:
    """F(x) = (x, 1 - x) on [0, 1]: a straight front for closed-form checks."""

    name = "toyline"
    decision_box = ((0.0, 1.0),)
    default_grid_resolution = 256

    @staticmethod
    def evaluate_batch(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[:, 0], 1.0 - x[:, 0]], axis=1)

    @staticmethod
    def feasible_batch(x):
        return np.ones(len(np.atleast_2d(x)), dtype=bool)


class TestGridSolver:
    def test_toy_line_closed_form(self):
        # One refinement pass leaves an error of about one refined cell,
        # (2/255)/255 ~ 3e-5 here.
        sol = solve_grid_ps(PSQuery(0, (1.0, 1.0), (1.0, 1.0)), _ToyLineProblem())
        assert sol.alpha == pytest.approx(-0.5, abs=1e-4)
        assert sol.z == pytest.approx((0.5, 0.5), abs=1e-4)
        assert sol.decision == pytest.approx((0.5,), abs=1e-4)

    def test_alpha_nonpositive_when_p_attainable(self):
        # With 257 grid nodes x = 0.25 is the 65th node, so the attainable
        # point F(0.25) = (0.25, 0.75) = p is hit exactly and alpha <= 0.
        sol = solve_grid_ps(
            PSQuery(0, (0.25, 0.75), (1.0, 1.0)), _ToyLineProblem(), resolution=257
        )
        assert sol.alpha <= 0.0

    def test_s_on_query_line_and_z_below_s(self):
        problem = make_problem("nonconvex")
        solver = GridScalarizer(problem, 32)
        query = PSQuery(0, problem.nadir, tuple(n - i for i, n in zip(problem.ideal, problem.nadir)))
        sol = solver.solve(query)
        expected_s = tuple(pi + sol.alpha * qi for pi, qi in zip(query.p, query.q))
        assert sol.s == pytest.approx(expected_s, abs=1e-9)
        assert all(zi <= si + 1e-12 for zi, si in zip(sol.z, sol.s))
        assert all(v >= 0 for v in sol.lam)

    def test_agrees_with_quadric_on_sphere(self):
        problem = make_problem("sphere", 2)
        solver = GridScalarizer(problem, 400)
        rng = np.random.default_rng(2)
        for _ in range(10):
            p = tuple(rng.uniform(-0.3, 0.0, 2))
            q = tuple(rng.uniform(0.5, 1.5, 2))
            query = PSQuery(0, p, q)
            exact = solve_quadric_ps(query, (1.0, 1.0))
            approx = solver.solve(query)
            assert approx.alpha == pytest.approx(exact.alpha, abs=2.0 / 400)

    def test_comet_spot_values(self):
        problem = make_problem("comet")
        assert problem.evaluate((3.5, 0.0, 0.0)) == (-35.0, -35.0, 36.75)
        assert problem.evaluate((2.0, 0.0, 1.0)) == (-40.0, -40.0, 24.0)

    def test_resolution_must_be_sane(self):
        with pytest.raises(ValueError):
            GridScalarizer(make_problem("nonconvex"), 1)


class TestWireProtocol:
    def test_query_round_trip(self):
        query = PSQuery(3, (0.0, 0.0), (1.0, 1.0))
        line = encode_query(query)
        assert '"query_id": 3' in line
        back = decode_query(line)
        assert back == query

    def test_done_record(self):
        assert decode_query(encode_done()) is None

    def test_solution_round_trip_17_digits(self):
        z = (-0.70710678118654746, -0.70710678118654757)
        sol = PSSolution(7, -0.70710678118654746, z, (0.0, 0.0), (0.5, 0.25))
        back = decode_solution(encode_solution(sol), expected_id=7, dim=2)
        assert back.alpha == sol.alpha
        assert back.z == sol.z
        assert back.decision == sol.decision

    def test_tiny_negative_lambda_clamped(self):
        line = '{"query_id": 0, "alpha": -0.5, "z": [0.1, 0.2], "lambda": [-1e-15, 0.0]}'
        sol = decode_solution(line, expected_id=0, dim=2)
        assert sol.lam == (0.0, 0.0)

    def test_negative_lambda_beyond_tolerance(self):
        line = '{"query_id": 0, "alpha": -0.5, "z": [0.1, 0.2], "lambda": [-1e-3, 0.0]}'
        with pytest.raises(ContractError):
            decode_solution(line, expected_id=0, dim=2)

    def test_wrong_dimension_rejected(self):
        line = '{"query_id": 0, "alpha": -0.5, "z": [0.1, 0.2, 0.3], "lambda": [0, 0, 0]}'
        with pytest.raises(ProtocolError):
            decode_solution(line, expected_id=0, dim=2)

    def test_wrong_id_rejected(self):
        line = '{"query_id": 4, "alpha": -0.5, "z": [0.1, 0.2], "lambda": [0, 0]}'
        with pytest.raises(ProtocolError):
            decode_solution(line, expected_id=3, dim=2)

    def test_malformed_line_rejected(self):
        with pytest.raises(ProtocolError):
            decode_solution("{not json", expected_id=0, dim=2)
        with pytest.raises(ProtocolError):
            decode_solution('[1, 2, 3]', expected_id=0, dim=2)

    def test_missing_field_rejected(self):
        with pytest.raises(ProtocolError):
            decode_solution('{"query_id": 0, "alpha": -0.5, "z": [0.1, 0.2]}')
