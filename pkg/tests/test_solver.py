import numpy as np
import pytest

from mosqp.pareto import nondominated_filter
from mosqp.penalty import PenaltyState, penalty_gradient, penalty_value
from mosqp.problems import Problem, make_problem1, make_zdt1
from mosqp.qp import build_stage2_qp, solve_qp
from mosqp.smoothing import SmoothingConfig
from mosqp.solver import (
    EvalCounter,
    InitializationError,
    SolverConfig,
    armijo_feasible,
    armijo_penalty,
    check_pareto_critical,
    counted,
    damped_bfgs_update,
    initialize_points,
    optimize_point,
    pareto_stage,
    solve,
    spread_stage,
)


def line_problem(f1, df1, f2, df2, g=None, dg=None) -> Problem:
    """One-variable problem; unconstrained unless ``g`` is given."""
    a = 0 if g is None else 1
    return Problem(
        name="line",
        n=1,
        m=2,
        a=a,
        objectives=lambda x: np.array([f1(x[0]), f2(x[0])]),
        constraints=(lambda x: np.zeros(0)) if g is None else (lambda x: np.array([g(x[0])])),
        objective_jacobian=lambda x: np.array([[df1(x[0])], [df2(x[0])]]),
        constraint_jacobian=(lambda x: np.zeros((0, 1))) if g is None else (lambda x: np.array([[dg(x[0])]])),
        lower=np.array([-2.0]),
        upper=np.array([2.0]),
    )


SQUARES = line_problem(lambda t: t * t, lambda t: 2 * t, lambda t: 2 * t * t, lambda t: 4 * t)
SMALL = SolverConfig(n_points=6, spreads=2, max_iters=100)


class TestConfig:
    def test_benchmark_defaults(self):
        cfg = SolverConfig()
        assert (cfg.k_exp, cfg.b_shape, cfg.sigma, cfg.penalty_growth, cfg.backtrack, cfg.spreads) == (
            0.5, 4.0, 0.2, 2.0, 0.5, 5)
        assert cfg.n_points == 20

    @pytest.mark.parametrize(
        "field, value",
        [("sigma", 1.0), ("backtrack", 0.0), ("penalty_growth", 1.0), ("k_exp", 0.2),
         ("k_exp", 1.0), ("eps0", 0.0), ("pi0", -1.0), ("n_points", 0), ("top_q", 0)],
    )
    def test_invalid(self, field, value):
        with pytest.raises(ValueError):
            SolverConfig(**{field: value})

    def test_replace(self):
        assert SolverConfig().replace(seed=3).seed == 3


class TestInitialize:
    def test_problem1_feasible(self):
        pts = initialize_points(make_problem1(), SolverConfig(seed=42))
        assert len(pts) == 20
        assert all(x @ x <= 0.5 for x in pts)

    def test_zdt1_box(self):
        pts = initialize_points(make_zdt1(), SolverConfig(n_points=7))
        assert len(pts) == 7 and all(np.all((0 <= x) & (x <= 1)) for x in pts)

    def test_deterministic(self):
        a = initialize_points(make_problem1(), SolverConfig(seed=5))
        b = initialize_points(make_problem1(), SolverConfig(seed=5))
        np.testing.assert_array_equal(np.array(a), np.array(b))

    def test_empty_feasible_set(self):
        p = line_problem(lambda t: t, lambda t: 1.0, lambda t: -t, lambda t: -1.0,
                         g=lambda t: 1.0, dg=lambda t: 0.0)
        with pytest.raises(InitializationError, match="too thin"):
            initialize_points(p, SolverConfig(n_points=1))


class TestArmijoFeasible:
    def test_hand_chain(self):
        alpha = armijo_feasible(SQUARES, 0, np.array([1.0]), np.array([-2.0]), SolverConfig())
        assert alpha == 0.5

    def test_linear_full_step(self):
        p = line_problem(lambda t: t, lambda t: 1.0, lambda t: -t, lambda t: -1.0)
        assert armijo_feasible(p, 0, np.array([0.0]), np.array([-1.0]), SolverConfig(sigma=1e-4)) == 1.0

    def test_outward_from_boundary(self):
        x = np.array([np.sqrt(0.5), 0.0])
        assert armijo_feasible(make_problem1(), 0, x, np.array([1.0, 0.0]), SolverConfig()) is None


class TestArmijoPenalty:
    def state(self, x_hat, pi=1.0, eps=0.01):
        return PenaltyState(SmoothingConfig(0.5, 4.0, eps), pi, np.asarray(x_hat, dtype=float))

    def test_quadratic_newton_step(self):
        # x_hat far up the parabola keeps every bound term on its flat branch
        st = self.state([1.9])
        assert armijo_penalty(SQUARES, np.array([1.0]), np.array([-1.0]), st, SolverConfig()) == 1.0

    def test_ascent_direction(self):
        st = self.state([1.9])
        cfg = SolverConfig(max_backtracks=10)
        assert armijo_penalty(SQUARES, np.array([1.0]), np.array([1.0]), st, cfg) is None

    def test_inequality_holds_on_reevaluation(self, rng):
        p, cfg = make_problem1(), SolverConfig()
        for _ in range(10):
            x_hat = initialize_points(p, SolverConfig(n_points=1, seed=int(rng.integers(1000))))[0]
            x = x_hat * 0.9
            st = PenaltyState(SmoothingConfig(0.5, 4.0, 0.1), 10.0, x_hat)
            d = solve_qp(build_stage2_qp(p, x, x_hat, np.eye(2))).direction
            slope = float(penalty_gradient(p, x, st) @ d)
            if slope >= 0:
                continue
            alpha = armijo_penalty(p, x, d, st, cfg)
            assert alpha is not None
            lhs = penalty_value(p, x + alpha * d, st)
            assert lhs <= penalty_value(p, x, st) + cfg.sigma * alpha * slope


class TestBFGS:
    def test_identity_secant(self):
        s = np.array([0.3, -1.2])
        np.testing.assert_allclose(damped_bfgs_update(np.eye(2), s, s), np.eye(2), atol=1e-15)

    def test_damped_example(self):
        out = damped_bfgs_update(np.eye(2), np.array([1.0, 0.0]), np.array([-1.0, 0.0]))
        np.testing.assert_allclose(out, np.diag([0.2, 1.0]), atol=1e-15)

    def test_zero_step(self):
        B = np.diag([2.0, 3.0])
        np.testing.assert_array_equal(damped_bfgs_update(B, np.zeros(2), np.ones(2)), B)

    def test_random_stays_positive_definite(self, rng):
        for _ in range(1000):
            n = int(rng.integers(1, 6))
            M = rng.normal(size=(n, n))
            B = M @ M.T + 0.05 * np.eye(n)
            out = damped_bfgs_update(B, rng.normal(size=n), rng.normal(size=n))
            np.testing.assert_allclose(out, out.T)
            assert np.linalg.eigvalsh(out)[0] > 0

    def test_secant_condition_when_undamped(self, rng):
        s = rng.normal(size=3)
        y = 2.0 * s + 0.1 * rng.normal(size=3)
        out = damped_bfgs_update(np.eye(3), s, y)
        np.testing.assert_allclose(out @ s, y, rtol=1e-10)


class TestParetoCritical:
    def test_stationary_sum(self):
        # f1 + f2 = 3 t^2 is stationary at 0
        assert check_pareto_critical(SQUARES, np.array([0.0]), np.zeros(2)) == 0.0

    def test_noncritical_point(self):
        res = check_pareto_critical(make_problem1(), np.array([0.1, 0.3]), np.zeros(3))
        assert res > 1.0

    def test_missing_multipliers(self):
        assert check_pareto_critical(make_problem1(), np.zeros(2), None) is None

    def test_negative_multiplier_counts(self):
        assert check_pareto_critical(SQUARES, np.array([0.0]), np.array([-0.5, 0.0])) == 0.5

    def test_normalized(self):
        x, mult = np.array([0.1, 0.3]), np.array([1.0, 3.0, 0.0])
        raw = check_pareto_critical(make_problem1(), x, mult)
        assert check_pareto_critical(make_problem1(), x, mult, normalize=True) == pytest.approx(raw / 6.0)


class TestSpreadStage:
    def test_stationary_point_passes_through(self):
        out = spread_stage(SQUARES, [np.array([0.0])], SolverConfig(spreads=2))
        assert len(out) == 1 and out[0][0] == 0.0

    def test_problem1_origin_one_round(self):
        p = make_problem1()
        out = spread_stage(p, [np.zeros(2)], SolverConfig(spreads=1, crowding_min=0.0))
        assert all(p.is_feasible(x) for x in out)
        assert min(p.objectives(x)[0] for x in out) < p.objectives(np.zeros(2))[0]

    def test_feasible_and_bounded(self):
        p = make_problem1()
        cfg = SolverConfig(n_points=5, spreads=3)
        x0 = initialize_points(p, cfg)
        out = spread_stage(p, x0, cfg)
        assert all(np.max(p.constraints(x)) <= 1e-6 for x in out)
        assert len(out) <= cfg.n_points * (p.m * cfg.spreads + 1)


class TestOptimizePoint:
    def test_critical_start_is_unchanged(self):
        res = optimize_point(SQUARES, np.array([0.0]), SolverConfig())
        assert res.converged and res.reason == "converged"
        assert res.iterations == 0 and res.iterates == []
        np.testing.assert_array_equal(res.x, [0.0])

    def test_trajectory_invariants(self):
        p = make_problem1()
        cfg = SolverConfig()
        for x_hat in initialize_points(p, SolverConfig(n_points=4, seed=3)):
            res = optimize_point(p, x_hat, cfg, record=True)
            assert res.history, "expected at least one step"
            for rec in res.history:
                assert rec.merit_after < rec.merit_before
                assert rec.min_eig > 0
            if res.converged:
                # intermediate iterates may overshoot a curved bound; the QP rows
                # force the bound back once the step vanishes
                assert np.all(p.objectives(res.x) <= p.objectives(x_hat) + 1e-6)
                assert check_pareto_critical(p, res.x, res.multipliers) <= 1e-4
                assert np.max(p.constraints(res.x)) <= 1e-6


@pytest.fixture(scope="module")
def small_run():
    return solve(make_problem1(), SMALL)


class TestPipeline:

    def test_front_postconditions(self, small_run):
        p = make_problem1()
        front = small_run.front
        assert len(front) > 0
        assert all(np.max(p.constraints(x)) <= 1e-6 for x in front.x)
        np.testing.assert_array_equal(nondominated_filter(front.f), np.arange(len(front)))
        for x, f in zip(front.x, front.f):
            np.testing.assert_array_equal(p.objectives(x), f)

    def test_counters(self, small_run):
        assert small_run.counters.objectives > 0
        assert small_run.front.meta["counters"] == small_run.counters.as_dict()

    def test_deterministic(self, small_run):
        again = solve(make_problem1(), SMALL)
        np.testing.assert_array_equal(again.front.x, small_run.front.x)

    def test_pareto_stage_direct(self):
        p = make_problem1()
        starts = initialize_points(p, SolverConfig(n_points=3, seed=1))
        front = pareto_stage(p, starts, SolverConfig(max_iters=50))
        assert len(front.meta["runs"]) == 3
        np.testing.assert_array_equal(nondominated_filter(front.f), np.arange(len(front)))


def test_counted_wrapper():
    counter = EvalCounter()
    p = counted(make_problem1(), counter)
    p.objectives(np.zeros(2))
    p.objectives(np.zeros(2))
    p.constraint_jacobian(np.zeros(2))
    assert counter.as_dict() == {"objectives": 2, "constraints": 0, "objective_jacobian": 0,
                                 "constraint_jacobian": 1}
