import numpy as np
import pytest

from lyapcum import (
    DiagonalCumulant,
    DimensionMismatch,
    DirectedGraph,
    NoiseSpec,
    ParameterMatrix,
    UnstableMatrix,
    recover_noise,
    recursive_residual,
    sample_stable_matrix,
    series_cumulant,
    simulate_and_estimate,
    solve_cumulant,
    spectral_radius,
)
from lyapcum.tensors import SymmetricTensor, multiset_indices
from conftest import two_node_chain, unit_noise, unit_parameters


def fig1_matrix() -> ParameterMatrix:
    return ParameterMatrix(two_node_chain(), np.array([[0.5, 0.0], [1.0, 0.0]]))


def random_pattern(rng, p, edge_prob=0.45):
    edges = {(i, j) for i in range(p) for j in range(p) if rng.uniform() < edge_prob}
    return DirectedGraph(p, edges) if edges else DirectedGraph(p, [(0, 0)])


class TestSpectralRadius:
    def test_zero(self):
        assert spectral_radius(np.zeros((3, 3))) == 0.0

    def test_diagonal(self):
        assert spectral_radius(np.diag([0.5, 0.5])) == pytest.approx(0.5)

    def test_triangular_path(self):
        # lower-triangular: eigenvalues are the diagonal entries
        a = np.diag([0.5] * 4)
        for k in range(3):
            a[k + 1, k] = 1.0
        assert spectral_radius(a) == pytest.approx(0.5, rel=1e-12)


class TestParameterMatrix:
    def test_sparsity_enforced(self):
        with pytest.raises(ValueError):
            ParameterMatrix(two_node_chain(), np.array([[0.5, 0.2], [1.0, 0.0]]))

    def test_stability_certificate(self):
        assert fig1_matrix().stable
        unstable = ParameterMatrix(two_node_chain(), np.array([[1.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(UnstableMatrix):
            unstable.require_stable()


class TestSolveCumulant:
    def test_two_node_worked_example(self):
        pm = fig1_matrix()
        s = solve_cumulant(pm, DiagonalCumulant(2, [1.0, 1.0]))
        assert s[(0, 0)] == pytest.approx(4 / 3, rel=1e-12)
        assert s[(0, 1)] == pytest.approx(2 / 3, rel=1e-12)
        assert s[(1, 1)] == pytest.approx(7 / 3, rel=1e-12)

    def test_zero_matrix_returns_noise(self):
        g = DirectedGraph(3, [(0, 0)])
        pm = ParameterMatrix(g, np.zeros((3, 3)))
        omega = DiagonalCumulant(3, [1.0, -2.0, 0.5])
        t = solve_cumulant(pm, omega)
        np.testing.assert_allclose(t.to_dense(), omega.to_dense(), atol=1e-15)

    def test_collider_square_determinant(self):
        g = DirectedGraph(4, [(0, 1), (0, 3), (2, 3)] + [(i, i) for i in range(4)])
        pm = unit_parameters(g, diag=0.5, off=1.0)
        s = solve_cumulant(pm, DiagonalCumulant(2, np.ones(4))).to_dense()
        det = np.linalg.det(s[np.ix_([1, 0], [3, 0])])
        assert det == pytest.approx(256 / 81, rel=1e-12)

    def test_requires_stability(self):
        pm = ParameterMatrix(two_node_chain(), np.array([[1.2, 0.0], [1.0, 0.0]]))
        with pytest.raises(UnstableMatrix):
            solve_cumulant(pm, DiagonalCumulant(2, [1.0, 1.0]))

    def test_size_cap(self):
        g = DirectedGraph(9, [(0, 0)])
        pm = ParameterMatrix(g, np.zeros((9, 9)))
        with pytest.raises(DimensionMismatch):
            solve_cumulant(pm, DiagonalCumulant(2, np.ones(9)))

    def test_symmetry_defect_small(self, rng):
        g = random_pattern(rng, 3)
        pm = sample_stable_matrix(g, seed=5, target_radius=0.6)
        t = solve_cumulant(pm, DiagonalCumulant(3, rng.uniform(0.5, 2, 3)))
        assert t.sym_defect <= 1e-10 * max(t.max_abs(), 1.0)


class TestSeriesCumulant:
    def test_single_term_is_noise(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(2, [1.0, 2.0])
        np.testing.assert_allclose(
            series_cumulant(pm, omega, 1).to_dense(), omega.to_dense(), atol=1e-15
        )

    def test_matches_solver_on_two_node(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(2, [1.0, 1.0])
        series = series_cumulant(pm, omega, 200)
        exact = solve_cumulant(pm, omega)
        for key in exact.keys():
            assert series[key] == pytest.approx(exact[key], rel=1e-12)

    def test_error_decreases_with_length(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(2, [1.0, 1.0])
        exact = solve_cumulant(pm, omega).to_dense()
        errors = [
            np.max(np.abs(series_cumulant(pm, omega, terms).to_dense() - exact))
            for terms in (5, 10, 20, 40)
        ]
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] < errors[0]

    def test_oracle_equivalence_random_patterns(self, rng):
        # series is the independent oracle for the Kronecker solve
        for p in (2, 3, 4):
            for _ in range(4):
                g = random_pattern(rng, p)
                pm = sample_stable_matrix(g, seed=int(rng.integers(1e6)), target_radius=0.6)
                for order in (2, 3, 4):
                    omega = DiagonalCumulant(order, rng.uniform(0.5, 2, p))
                    exact = solve_cumulant(pm, omega)
                    approx = series_cumulant(pm, omega, 200)
                    scale = max(exact.max_abs(), 1e-300)
                    dev = max(abs(exact[k] - approx[k]) for k in exact.keys())
                    assert dev / scale <= 1e-10


class TestResidualAndRecovery:
    def test_solver_output_residual(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(3, [1.0, 1.0])
        t = solve_cumulant(pm, omega)
        assert recursive_residual(t, pm, omega) <= 1e-12

    def test_noise_is_not_a_solution(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(2, [1.0, 1.0])
        assert recursive_residual(omega.to_tensor(), pm, omega) > 0.1

    def test_perturbation_scales_linearly(self, rng):
        g = random_pattern(rng, 3)
        pm = sample_stable_matrix(g, seed=3, target_radius=0.4)
        omega = DiagonalCumulant(2, [1.0, 1.0, 1.0])
        t = solve_cumulant(pm, omega)
        eps = 1e-4
        bumped = SymmetricTensor(2, 3, dict(t.values))
        bumped.values[(0, 1)] += eps
        residual = recursive_residual(bumped, pm, omega)
        assert 0.1 * eps <= residual <= 10 * eps

    def test_round_trip(self, rng):
        for order in (2, 3, 4):
            g = random_pattern(rng, 3)
            pm = sample_stable_matrix(g, seed=order, target_radius=0.6)
            omega = DiagonalCumulant(order, rng.uniform(0.5, 2, 3))
            recovered, defect = recover_noise(solve_cumulant(pm, omega), pm)
            np.testing.assert_allclose(recovered.w, omega.w, atol=1e-10)
            assert defect <= 1e-10

    def test_zero_matrix_recovers_tensor(self):
        g = DirectedGraph(2, [(0, 0)])
        pm = ParameterMatrix(g, np.zeros((2, 2)))
        t = SymmetricTensor.diagonal([1.5, 2.5], 2)
        recovered, defect = recover_noise(t, pm)
        np.testing.assert_allclose(recovered.w, [1.5, 2.5])
        assert defect == 0.0

    def test_wrong_matrix_leaves_defect(self, rng):
        g = DirectedGraph(3, [(0, 0), (0, 1), (1, 2), (1, 1), (2, 2)])
        pm = sample_stable_matrix(g, seed=1, target_radius=0.6)
        other = sample_stable_matrix(g, seed=2, target_radius=0.6)
        t = solve_cumulant(pm, DiagonalCumulant(3, [1.0, 1.0, 1.0]))
        _, defect = recover_noise(t, other)
        assert defect > 1e-4


class TestSampleStableMatrix:
    def test_diagonal_only_within_target(self):
        g = DirectedGraph(3, [(i, i) for i in range(3)])
        for seed in range(5):
            pm = sample_stable_matrix(g, seed=seed, target_radius=0.6)
            assert pm.radius() <= 0.6 + 1e-12
            assert np.count_nonzero(pm.entries - np.diag(np.diag(pm.entries))) == 0

    def test_loopless_dag_is_nilpotent(self):
        g = DirectedGraph(3, [(0, 1), (0, 2), (1, 2)])
        pm = sample_stable_matrix(g, seed=0, target_radius=0.6)
        assert pm.radius() <= 1e-12

    def test_always_certified(self):
        g = DirectedGraph(4, [(0, 1), (1, 0), (2, 3), (0, 0), (3, 3)])
        for seed in range(10):
            pm = sample_stable_matrix(g, seed=seed, target_radius=0.7)
            assert pm.stable
            assert pm.radius() == pytest.approx(0.7, abs=1e-9)

    def test_deterministic(self):
        g = DirectedGraph(3, [(0, 1), (1, 2), (0, 0)])
        a = sample_stable_matrix(g, seed=42, target_radius=0.6)
        b = sample_stable_matrix(g, seed=42, target_radius=0.6)
        np.testing.assert_array_equal(a.entries, b.entries)


class TestModelSymmetries:
    def test_sign_flip_preserves_covariance_exactly(self, rng):
        g = random_pattern(rng, 3)
        pm = sample_stable_matrix(g, seed=9, target_radius=0.6)
        omega = DiagonalCumulant(2, [1.0, 0.7, 1.3])
        plus = solve_cumulant(pm, omega)
        minus = solve_cumulant(pm.negated(), omega)
        for key in plus.keys():
            assert plus[key] == minus[key]

    def test_sign_flip_changes_third_order(self):
        pm = fig1_matrix()
        omega = DiagonalCumulant(3, [1.0, 1.0])
        plus = solve_cumulant(pm, omega)
        minus = solve_cumulant(pm.negated(), omega)
        assert max(
            abs(plus[k] - minus[k]) for k in multiset_indices(2, 3)
        ) > 1e-3

    def test_gaussian_specialization(self, rng):
        g = random_pattern(rng, 4)
        pm = sample_stable_matrix(g, seed=11, target_radius=0.6)
        d = rng.uniform(0.5, 2, 4)
        sigma = solve_cumulant(pm, DiagonalCumulant(2, d)).to_dense()
        lhs = pm.entries @ sigma @ pm.entries.T + np.diag(d)
        np.testing.assert_allclose(lhs, sigma, atol=1e-12 * max(1, np.max(np.abs(sigma))))


class TestSimulation:
    def test_zero_noise_gives_zero_cumulants(self):
        pm = fig1_matrix()
        est = simulate_and_estimate(
            pm, NoiseSpec("zero", [1.0, 1.0]), t_max=2000, burn_in=100, order=2, seed=0
        )
        assert est.estimate.max_abs() == 0.0

    def test_gaussian_third_order_vanishes(self):
        pm = fig1_matrix()
        est = simulate_and_estimate(
            pm,
            NoiseSpec("gaussian", [1.0, 1.0]),
            t_max=200_000,
            burn_in=1000,
            order=3,
            seed=4,
        )
        for key in est.estimate.keys():
            assert abs(est.estimate[key]) <= 3 * est.stderr[key] + 1e-3

    def test_noise_spec_cumulants(self):
        spec = NoiseSpec("centered_exponential", [1.0, 2.0])
        np.testing.assert_allclose(spec.cumulant(2).w, [1.0, 4.0])
        np.testing.assert_allclose(spec.cumulant(3).w, [2.0, 16.0])
        np.testing.assert_allclose(spec.cumulant(4).w, [6.0, 96.0])
