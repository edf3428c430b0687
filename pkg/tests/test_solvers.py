import logging

import numpy as np
import pytest

from app.core.errors import ConfigurationError, DegenerateRowError, DegenerateSystemError
from app.models.solver import GuardRule, SolverConfig, SolverMethod
from app.models.system import LinearSystem
from app.services.datagen import gen_gaussian_system
from app.services.jl_sketch import build_sketch
from app.services.row_clustering import furthest_cluster
from app.services.solvers import (
    SOLVERS,
    BlockSolver,
    ClassicalSolver,
    ClusterJLSolver,
    JLSolver,
    RandomizedSolver,
    block_step,
    kaczmarz_step,
    make_solver,
    run_solver,
    solve_classical,
    solve_rka,
    solve_rka_block,
    solve_rka_cluster_block,
    solve_rka_cluster_jl,
    solve_rka_jl,
)

SINGLE_ROW = [SolverMethod.CLASSICAL, SolverMethod.RKA, SolverMethod.RKA_JL, SolverMethod.RKA_CLUSTER_JL]
BLOCK = [SolverMethod.RKA_BLOCK, SolverMethod.RKA_CLUSTER_BLOCK]


def take(solver, x0, steps):
    generator = solver.iterates(np.asarray(x0, dtype=float))
    return [next(generator) for _ in range(steps)]


class TestKaczmarzStep:
    def test_projection(self):
        assert np.allclose(kaczmarz_step(np.zeros(2), np.array([1.0, 0.0]), 3.0), [3.0, 0.0])

    def test_on_hyperplane_is_fixed(self):
        x = np.array([3.0, -1.0])
        assert np.array_equal(kaczmarz_step(x, np.array([1.0, 0.0]), 3.0), x)

    def test_scale_invariance(self, rng):
        x, a = rng.standard_normal(5), rng.standard_normal(5)
        assert np.allclose(kaczmarz_step(x, 7 * a, 7 * 0.4), kaczmarz_step(x, a, 0.4), atol=1e-12)

    def test_hits_hyperplane_along_the_row(self, rng):
        x, a = rng.standard_normal(5), rng.standard_normal(5)
        y = kaczmarz_step(x, a, 1.5)
        assert abs(a @ y - 1.5) <= 1e-10 * 2.5
        assert np.linalg.matrix_rank(np.vstack([y - x, a]), tol=1e-10) == 1

    def test_zero_row(self):
        with pytest.raises(DegenerateRowError):
            kaczmarz_step(np.zeros(2), np.zeros(2), 1.0)


class TestBlockStep:
    def test_identity_block(self):
        assert np.allclose(block_step(np.zeros(2), np.eye(2), np.array([1.0, 2.0])), [1.0, 2.0])

    def test_single_row_matches_kaczmarz_step(self, rng):
        x, a = rng.standard_normal(6), rng.standard_normal(6)
        assert np.allclose(block_step(x, a[None, :], np.array([0.7])), kaczmarz_step(x, a, 0.7), atol=1e-12)

    def test_consistent_block(self, rng):
        A_tau = rng.standard_normal((3, 8))
        b_tau = rng.standard_normal(3)
        y = block_step(rng.standard_normal(8), A_tau, b_tau)
        assert np.linalg.norm(b_tau - A_tau @ y) < 1e-9


class TestClassical:
    def test_identity_takes_n_steps(self, identity_system):
        state = solve_classical(identity_system, SolverConfig(method="classical"))
        assert state.converged
        assert state.iteration == 6
        assert np.allclose(state.x, identity_system.b)
        assert [record.selected for record in state.trace[1:]] == list(range(6))

    def test_consistent_system(self, consistent_system):
        state = solve_classical(consistent_system, SolverConfig(method="classical", max_iters=5000))
        assert state.final.residual < 1e-6

    def test_starting_at_solution(self, consistent_system):
        state = ClassicalSolver(consistent_system, SolverConfig(method="classical")).solve(consistent_system.x_star)
        assert state.iteration == 0
        assert len(state.trace) == 1

    def test_zero_rows_are_skipped(self):
        A = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
        system = LinearSystem(A=A, b=np.array([2.0, 0.0, 3.0]))
        state = solve_classical(system, SolverConfig(method="classical"))
        assert state.converged
        assert 1 not in [record.selected for record in state.trace]

    def test_all_zero_rows(self):
        system = LinearSystem(A=np.zeros((3, 2)), b=np.ones(3))
        with pytest.raises(DegenerateSystemError):
            solve_classical(system, SolverConfig(method="classical"))
        with pytest.raises(DegenerateSystemError):
            solve_rka(system, SolverConfig(method="rka"))

    def test_rows_touched_is_p_per_step(self, consistent_system):
        state = solve_classical(consistent_system, SolverConfig(method="classical", max_iters=30, residual_tol=1e-15))
        assert [record.rows_touched for record in state.trace] == [10 * i for i in range(31)]


class TestRandomized:
    def test_identity_converges(self, identity_system):
        state = solve_rka(identity_system, SolverConfig(method="rka", seed=4))
        assert state.converged
        assert np.allclose(state.x, identity_system.b)
        assert {record.selected for record in state.trace[1:]} == set(range(6))

    def test_same_seed_same_trace(self, consistent_system):
        cfg = SolverConfig(method="rka", seed=17, max_iters=300)
        assert solve_rka(consistent_system, cfg).trace == solve_rka(consistent_system, cfg).trace

    def test_different_seeds_differ(self, consistent_system):
        first = solve_rka(consistent_system, SolverConfig(method="rka", seed=1, max_iters=50))
        second = solve_rka(consistent_system, SolverConfig(method="rka", seed=2, max_iters=50))
        assert [r.selected for r in first.trace] != [r.selected for r in second.trace]

    @pytest.mark.bench
    def test_sampling_frequencies(self):
        A = np.diag([1.0, 2.0, 3.0, 4.0])
        system = LinearSystem(A=A, b=np.zeros(4))
        draws = 100_000
        selected = np.array([step.selected for step in take(RandomizedSolver(system, SolverConfig(method="rka")),
                                                            np.zeros(4), draws)])
        expected = np.array([1.0, 4.0, 9.0, 16.0]) / 30.0
        observed = np.bincount(selected, minlength=4) / draws
        standard_error = np.sqrt(expected * (1 - expected) / draws)
        assert np.all(np.abs(observed - expected) <= 3 * standard_error)


class TestJL:
    def test_identity_sketch_selects_the_only_violated_row(self):
        n = 8
        A = np.eye(n)
        b = np.zeros(n)
        b[5] = 4.0
        system = LinearSystem(A=A, b=b)
        cfg = SolverConfig(method="rka-jl", sample_count=n, seed=2)
        solver = JLSolver(system, cfg, sketch=build_sketch(A, n, seed=0, phi=np.eye(n)))
        state = solver.solve()
        assert state.converged
        assert state.final.selected == 5
        assert np.allclose(state.x, b)

    def test_chosen_row_never_worse_than_guard(self, consistent_system):
        for guard in GuardRule:
            cfg = SolverConfig(method="rka-jl", sample_count=5, seed=3, guard=guard)
            for step in take(JLSolver(consistent_system, cfg), np.zeros(10), 200):
                assert step.chosen_distance >= step.guard_distance

    def test_fixed_guard_is_first_nonzero_row(self, consistent_system):
        solver = JLSolver(consistent_system, SolverConfig(method="rka-jl", guard="fixed-first-row"))
        assert solver.guard_row == 0

    def test_rows_touched(self, consistent_system):
        cfg = SolverConfig(method="rka-jl", sample_count=4, jl_dim=6, max_iters=20, residual_tol=1e-15)
        state = solve_rka_jl(consistent_system, cfg)
        increments = np.diff([record.rows_touched for record in state.trace])
        assert np.all(increments == 4 * 6 + 2 * 10)

    def test_sample_count_above_n(self, consistent_system):
        with pytest.raises(ConfigurationError):
            solve_rka_jl(consistent_system, SolverConfig(method="rka-jl", sample_count=51))

    def test_default_sample_count_is_p(self, consistent_system):
        assert JLSolver(consistent_system, SolverConfig(method="rka-jl")).sample_count == 10


class TestClusterJL:
    def test_single_cluster_reduces_to_jl(self, consistent_system):
        jl = solve_rka_jl(consistent_system, SolverConfig(method="rka-jl", seed=21, max_iters=200))
        cluster = solve_rka_cluster_jl(
            consistent_system, SolverConfig(method="rka-cluster-jl", cluster_count=1, seed=21, max_iters=200))
        assert [r.selected for r in jl.trace] == [r.selected for r in cluster.trace]
        assert [r.residual for r in jl.trace] == [r.residual for r in cluster.trace]

    def test_cost_includes_centroids(self, consistent_system):
        cfg = SolverConfig(method="rka-cluster-jl", cluster_count=3, sample_count=4, jl_dim=6,
                           max_iters=10, residual_tol=1e-15)
        state = solve_rka_cluster_jl(consistent_system, cfg)
        increments = np.diff([record.rows_touched for record in state.trace])
        assert np.all(increments == 3 * 10 + 4 * 6 + 2 * 10)

    def test_targets_the_unsolved_cluster(self, rng):
        e1, e2 = np.eye(6)[0], np.eye(6)[1]
        A = np.vstack([e1 + 0.01 * rng.standard_normal(6) for _ in range(10)] +
                      [e2 + 0.01 * rng.standard_normal(6) for _ in range(10)])
        x_star = np.array([2.0, -1.5, 0.5, 0.0, 0.0, 0.0])
        system = LinearSystem(A=A, b=A @ x_star)
        solver = ClusterJLSolver(system, SolverConfig(method="rka-cluster-jl", cluster_count=2, seed=1))

        # x agrees with x* along e2 only, so the e1 cluster is the one still far away
        x = np.zeros(6)
        x[1] = x_star[1]
        assert furthest_cluster(solver.clustering, x) == solver.clustering.assignments[0]

    def test_selected_rows_come_from_the_furthest_cluster(self, clustered_instance):
        system, _ = clustered_instance
        solver = ClusterJLSolver(system, SolverConfig(method="rka-cluster-jl", seed=5))
        x = np.zeros(system.p)
        generator = solver.iterates(x)
        for _ in range(50):
            target = furthest_cluster(solver.clustering, x)
            step = next(generator)
            members = solver.clustering.members(target)
            # the guard row is drawn globally and may win the test step
            assert step.selected in members or step.chosen_distance == step.guard_distance
            x = step.x


class TestBlock:
    def test_single_square_block_converges_in_one_step(self, rng):
        A = rng.standard_normal((5, 5))
        x_star = rng.standard_normal(5)
        system = LinearSystem(A=A, b=A @ x_star, x_star=x_star)
        state = solve_rka_block(system, SolverConfig(method="rka-block", block_size=5, residual_tol=1e-10))
        assert state.iteration == 1
        assert state.converged

    def test_unit_blocks_are_kaczmarz_steps(self, consistent_system):
        solver = BlockSolver(consistent_system, SolverConfig(method="rka-block", block_size=1, seed=8))
        x = np.zeros(10)
        for step in take(solver, x, 40):
            (row,) = solver.paving.blocks[step.selected]
            assert np.allclose(step.x, kaczmarz_step(x, consistent_system.A[row], consistent_system.b[row]),
                               atol=1e-12)
            x = step.x

    def test_consistent_random_system(self):
        system = gen_gaussian_system(200, 40, seed=6)
        state = solve_rka_block(system, SolverConfig(method="rka-block", block_size=4, max_iters=2000,
                                                     residual_tol=1e-8))
        assert state.converged

    def test_trace_carries_block_statistics(self, consistent_system):
        solver = BlockSolver(consistent_system, SolverConfig(method="rka-block", max_iters=5, residual_tol=1e-15))
        state = solver.solve()
        for record in state.trace[1:]:
            spectrum = solver.paving.per_block[record.selected]
            assert record.block_cond == spectrum.cond
            assert record.block_spectral_norm == spectrum.spectral_norm

    def test_rows_touched_counts_block_rows(self, consistent_system):
        solver = BlockSolver(consistent_system, SolverConfig(method="rka-block", block_size=4,
                                                             max_iters=30, residual_tol=1e-15))
        state = solver.solve()
        for previous, record in zip(state.trace, state.trace[1:]):
            size = len(solver.paving.blocks[record.selected])
            assert record.rows_touched - previous.rows_touched == size * 10

    def test_block_larger_than_p_warns(self, caplog):
        system = gen_gaussian_system(12, 3, seed=1)
        with caplog.at_level(logging.WARNING, logger="app.services.solvers"):
            BlockSolver(system, SolverConfig(method="rka-block", block_size=4))
        assert any("exceeds p" in message for message in caplog.messages)

    def test_cluster_block_uses_cluster_paving(self, clustered_instance):
        system, _ = clustered_instance
        state_solver = make_solver(system, SolverConfig(method="rka-cluster-block", seed=3))
        assert state_solver.paving.kind == "cluster"
        assert sorted(i for block in state_solver.paving.blocks for i in block) == list(range(system.n))
        state = solve_rka_cluster_block(system, SolverConfig(method="rka-cluster-block", seed=3, max_iters=500))
        assert state.final.residual < state.trace[0].residual


class TestDriver:
    def test_dispatch_table(self):
        assert set(SOLVERS) == set(SolverMethod)

    def test_trace_every(self, consistent_system):
        state = run_solver(consistent_system, SolverConfig(method="rka", trace_every=7, max_iters=50,
                                                           residual_tol=1e-15))
        assert [record.iteration for record in state.trace] == [0, 7, 14, 21, 28, 35, 42, 49, 50]
        touched = [record.rows_touched for record in state.trace]
        assert touched == sorted(touched)

    def test_wall_time_off_by_default(self, consistent_system):
        state = run_solver(consistent_system, SolverConfig(method="rka", max_iters=20))
        assert all(record.wall_nanos == 0 for record in state.trace)

    def test_input_system_is_not_mutated(self, consistent_system):
        A, b = consistent_system.A.copy(), consistent_system.b.copy()
        for method in SolverMethod:
            run_solver(consistent_system, SolverConfig(method=method, max_iters=20))
        assert np.array_equal(consistent_system.A, A)
        assert np.array_equal(consistent_system.b, b)

    @pytest.mark.parametrize("method", list(SolverMethod))
    def test_solution_is_a_fixed_point(self, consistent_system, method):
        solver = make_solver(consistent_system, SolverConfig(method=method, seed=2))
        for step in take(solver, consistent_system.x_star, 50):
            assert np.linalg.norm(step.x - consistent_system.x_star) <= 1e-12 * max(1.0, np.linalg.norm(step.x))


def _check_monotone(system, method, seed, steps=100):
    solver = make_solver(system, SolverConfig(method=method, seed=seed))
    x = np.zeros(system.p)
    for step in take(solver, x, steps):
        before = np.sum((x - system.x_star) ** 2)
        after = np.sum((step.x - system.x_star) ** 2)
        assert np.sqrt(after) <= np.sqrt(before) + 1e-12
        if method in SINGLE_ROW:
            moved = np.sum((step.x - x) ** 2)
            assert abs(after - (before - moved)) <= 1e-9 * before
        x = step.x


@pytest.mark.parametrize("method", SINGLE_ROW + BLOCK)
def test_error_is_monotone(method):
    for seed in range(3):
        _check_monotone(gen_gaussian_system(200, 30, seed=seed), method, seed)


@pytest.mark.bench
@pytest.mark.parametrize("method", SINGLE_ROW)
def test_error_is_monotone_many_seeds(method):
    for seed in range(100):
        _check_monotone(gen_gaussian_system(200, 30, seed=seed), method, seed)


def _check_least_squares_oracle(n, p, seed):
    system = gen_gaussian_system(n, p, seed=seed)
    direct = np.linalg.lstsq(system.A, system.b, rcond=None)[0]
    for method in SolverMethod:
        cfg = SolverConfig(method=method, seed=seed, residual_tol=1e-10, max_iters=50000)
        state = run_solver(system, cfg)
        assert state.converged, method
        assert np.linalg.norm(state.x - direct) <= 1e-6, method


def test_matches_least_squares():
    _check_least_squares_oracle(60, 12, seed=0)


@pytest.mark.bench
def test_matches_least_squares_many_systems():
    rng = np.random.default_rng(99)
    for seed in range(20):
        p = int(rng.integers(4, 21))
        n = int(rng.integers(max(p, 8) * 2, 101))
        _check_least_squares_oracle(n, p, seed)
