from fractions import Fraction
from math import comb

import numpy as np
import pytest

from lyapcum import (
    DiagonalCumulant,
    DirectedGraph,
    PoleAtUnit,
    UnstableEffective,
    base_trek_coefficient,
    base_trek_covariance,
    check_placement_recursions,
    conjectured_placement_poly,
    effective_matrix,
    enumerate_base_treks,
    enumerate_equitreks,
    placement_polynomial,
    sample_stable_matrix,
    solve_cumulant,
    trek_rule_entry,
    validate_conjecture_order3,
)
from lyapcum.treks import (
    conjectured_coefficient,
    placement_table_csv,
    trek_monomial,
)
from conftest import sink_loop_chain, two_node_chain, unit_parameters


def fig1_pm():
    return unit_parameters(two_node_chain(), diag=0.5, off=1.0)


def random_dag(rng, p, edge_prob=0.5):
    edges = [(i, j) for i in range(p) for j in range(i + 1, p) if rng.uniform() < edge_prob]
    return DirectedGraph(p, edges) if edges else DirectedGraph(p, [(0, 1)])


class TestTrekRuleEntry:
    def test_two_node_closed_form(self):
        value = trek_rule_entry(
            two_node_chain(), fig1_pm(), DiagonalCumulant(2, [1.0, 1.0]), (0, 1), 200
        )
        assert value == pytest.approx(2 / 3, rel=1e-12)

    def test_no_equitrek_means_zero(self):
        g = sink_loop_chain()
        pm = unit_parameters(g, diag=0.5, off=1.0)
        value = trek_rule_entry(g, pm, DiagonalCumulant(2, [1.0, 1.0]), (0, 1), 50)
        assert value == 0.0

    def test_matches_solver(self, rng):
        for seed in range(5):
            edges = {(i, j) for i in range(3) for j in range(3) if rng.uniform() < 0.5}
            g = DirectedGraph(3, edges) if edges else DirectedGraph(3, [(0, 0)])
            pm = sample_stable_matrix(g, seed=seed, target_radius=0.5)
            for order in (2, 3):
                omega = DiagonalCumulant(order, rng.uniform(0.5, 2, 3))
                exact = solve_cumulant(pm, omega)
                for key in exact.keys():
                    approx = trek_rule_entry(g, pm, omega, key, 220)
                    assert approx == pytest.approx(exact[key], rel=1e-10, abs=1e-12)

    def test_matches_literal_enumeration(self):
        # short truncation cross-checked monomial by monomial
        g = two_node_chain()
        pm = fig1_pm()
        omega = DiagonalCumulant(2, [1.0, 1.0])
        length = 6
        literal = sum(
            omega.w[trek.top] * trek_monomial(pm.entries, trek)
            for trek in enumerate_equitreks(g, (0, 1), length)
        )
        assert trek_rule_entry(g, pm, omega, (0, 1), length) == pytest.approx(
            literal, rel=1e-13
        )

    def test_geometric_convergence(self):
        g = two_node_chain()
        pm = fig1_pm()
        omega = DiagonalCumulant(2, [1.0, 1.0])
        at_100 = trek_rule_entry(g, pm, omega, (0, 1), 100)
        at_200 = trek_rule_entry(g, pm, omega, (0, 1), 200)
        assert abs(at_200 - at_100) <= 0.5 ** (2 * 100) * 100


class TestPlacementPolynomial:
    def test_first_row_constant(self):
        for y in range(6):
            assert placement_polynomial(0, y) == [1]

    def test_displayed_entries(self):
        assert placement_polynomial(2, 3) == [3, 6, 1]
        assert placement_polynomial(3, 3) == [1, 9, 9, 1]

    def test_symmetry(self):
        for x in range(6):
            for y in range(6):
                assert placement_polynomial(x, y) == placement_polynomial(y, x)

    def test_value_at_one_counts_lattice_paths(self):
        # independent oracle: grid DP for monotone lattice paths (0,0)->(x,y)
        for x in range(11):
            for y in range(11):
                grid = np.zeros((x + 1, y + 1), dtype=object)
                grid[0, :] = 1
                grid[:, 0] = 1
                for a in range(1, x + 1):
                    for b in range(1, y + 1):
                        grid[a, b] = grid[a - 1, b] + grid[a, b - 1]
                assert sum(placement_polynomial(x, y)) == grid[x, y]


class TestBaseTrekCoefficient:
    def test_empty_trek(self):
        t = 0.3
        assert base_trek_coefficient(0, 0, t) == pytest.approx(1 / (1 - t * t))

    def test_exact_fraction_display_value(self):
        t = Fraction(1, 2)
        value = base_trek_coefficient(2, 3, t)
        expected = t * (3 + 6 * t**2 + t**4) / (1 - t**2) ** 6
        assert value == expected

    def test_pole(self):
        with pytest.raises(PoleAtUnit):
            base_trek_coefficient(1, 1, 1.0)

    def test_matches_loop_insertion_sum(self):
        # oracle: a broom graph with disjoint chains of lengths x and y; the
        # truncated equitrek sum counts exactly the self-loop insertions
        for x, y in [(0, 2), (1, 1), (2, 3), (3, 2)]:
            p = x + y + 1
            edges = [(v, v) for v in range(p)]
            chain_x = list(range(0, x + 1))
            chain_y = [0] + list(range(x + 1, x + y + 1))
            edges += list(zip(chain_x, chain_x[1:]))
            edges += list(zip(chain_y, chain_y[1:]))
            g = DirectedGraph(p, edges)
            t = 0.4
            pm = unit_parameters(g, diag=t, off=1.0)
            w = np.zeros(p)
            w[0] = 1.0
            total = trek_rule_entry(
                g, pm, DiagonalCumulant(2, w), (chain_x[-1], chain_y[-1]), 300
            )
            assert total == pytest.approx(
                float(base_trek_coefficient(x, y, t)), rel=1e-10
            )


class TestBaseTrekCovariance:
    def test_four_path_displayed_entry(self):
        g = DirectedGraph(4, [(0, 1), (1, 2), (2, 3)])
        weights = {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0}
        t = 0.5
        s = base_trek_covariance(g, t, weights, DiagonalCumulant(2, np.ones(4)))
        expected = (
            t * (3 + 6 * t**2 + t**4) / (1 - t**2) ** 6
            + t * (2 + t**2) / (1 - t**2) ** 4
            + t / (1 - t**2) ** 2
        )
        assert s[(2, 3)] == pytest.approx(expected, rel=1e-12)

    def test_polytree_single_top_form(self):
        # in a polytree each pair has one base trek per common ancestor
        g = DirectedGraph(4, [(0, 1), (0, 2), (2, 3)])
        t = 0.3
        weights = {(0, 1): 0.8, (0, 2): -0.6, (2, 3): 1.1}
        s = base_trek_covariance(g, t, weights, DiagonalCumulant(2, np.ones(4)))
        # pair (1,3): unique common ancestor 0, distances 1 and 2
        expected = (
            float(base_trek_coefficient(1, 2, t)) * 0.8 * (-0.6) * 1.1
        )
        assert s[(1, 3)] == pytest.approx(expected, rel=1e-12)

    def test_matches_solver_random_dags(self, rng):
        for seed in range(6):
            p = int(rng.integers(3, 6))
            g = random_dag(rng, p)
            weights = {
                (i, j): float(rng.uniform(0.3, 1.0) * rng.choice([-1, 1]))
                for i, j in g.edges
                if i != j
            }
            t = float(rng.uniform(-0.6, 0.6))
            omega = DiagonalCumulant(2, rng.uniform(0.5, 2, p))
            direct = base_trek_covariance(g, t, weights, omega)
            exact = solve_cumulant(effective_matrix(g, t, weights), omega)
            scale = max(exact.max_abs(), 1e-300)
            for key in exact.keys():
                assert abs(direct[key] - exact[key]) / scale <= 1e-10

    def test_zero_without_base_trek(self):
        g = DirectedGraph(3, [(0, 1), (2, 1)])
        s = base_trek_covariance(
            g, 0.5, {(0, 1): 1.0, (2, 1): 1.0}, DiagonalCumulant(2, np.ones(3))
        )
        assert s[(0, 2)] == 0.0

    def test_unstable_rejected(self):
        g = DirectedGraph(2, [(0, 1)])
        with pytest.raises(UnstableEffective):
            base_trek_covariance(g, 1.0, {(0, 1): 1.0}, DiagonalCumulant(2, np.ones(2)))


class TestRecursions:
    def test_smallest_case(self):
        assert placement_polynomial(1, 1) == [1, 1]

    def test_all_bounds_pass(self):
        report = check_placement_recursions(10, 10)
        assert report.ok, report.failures
        assert report.polynomial_checks == 66

    def test_degenerate_at_zero(self):
        for x in range(4):
            for y in range(x, 4):
                lhs = base_trek_coefficient(x + 1, y + 1, Fraction(0))
                rhs = base_trek_coefficient(x, y, Fraction(0)) if x == y else 0
                assert lhs == rhs


class TestConjecture:
    def test_two_leg_specialization(self):
        for x in range(7):
            for y in range(7):
                assert conjectured_placement_poly([x, y]) == placement_polynomial(x, y)

    def test_equal_legs_generating_function(self):
        # oracle: convolve the cubed-binomial series against (1-s)^(3x+1)
        for x in range(4):
            series = [comb(x + i, i) ** 3 for i in range(2 * x + 1)]
            binom_part = [(-1) ** k * comb(3 * x + 1, k) for k in range(3 * x + 2)]
            coeffs = []
            for l in range(2 * x + 1):
                coeffs.append(
                    sum(
                        series[i] * binom_part[l - i]
                        for i in range(max(0, l - len(binom_part) + 1), l + 1)
                    )
                )
            got = conjectured_placement_poly([x, x, x])
            assert [got[2 * x - l] for l in range(2 * x + 1)] == coeffs

    def test_order3_validator_on_path(self):
        g = DirectedGraph(3, [(0, 1), (1, 2)])
        report = validate_conjecture_order3(
            g, 0.5, {(0, 1): 1.0, (1, 2): 1.0}, DiagonalCumulant(3, np.ones(3))
        )
        assert report.tag == "CONJECTURE"
        assert report.max_rel_deviation <= 1e-9

    def test_coefficient_pole(self):
        with pytest.raises(PoleAtUnit):
            conjectured_coefficient([1, 1, 1], 1.0)

    def test_three_leg_coefficient_matches_loop_insertion(self):
        # oracle: a broom with three disjoint chains out of vertex 0; the
        # truncated three-leg equitrek sum counts the self-loop insertions
        for dists in [(0, 1, 2), (1, 1, 1), (2, 1, 0), (2, 2, 1)]:
            p = 1 + sum(dists)
            edges = [(v, v) for v in range(p)]
            tips = []
            nxt = 1
            for d in dists:
                chain = [0] + list(range(nxt, nxt + d))
                nxt += d
                edges += list(zip(chain, chain[1:]))
                tips.append(chain[-1])
            g = DirectedGraph(p, edges)
            t = 0.45
            pm = unit_parameters(g, diag=t, off=1.0)
            w = np.zeros(p)
            w[0] = 1.0
            total = trek_rule_entry(
                g, pm, DiagonalCumulant(3, w), tuple(tips), 300
            )
            assert total == pytest.approx(
                conjectured_coefficient(list(dists), t), rel=1e-10
            )


class TestBaseTrekEnumeration:
    def test_caps_at_simple_paths(self):
        g = DirectedGraph(3, [(0, 0), (0, 1), (1, 2), (0, 2)])
        treks = enumerate_base_treks(g, (1, 2))
        assert all(trek.is_base_trek for trek in treks)
        # top 0 pairs the edge to 1 with either route to 2; top 1 pairs the
        # empty leg with the edge 1 -> 2
        assert {(t.top, t.legs) for t in treks} == {
            (0, ((0, 1), (0, 1, 2))),
            (0, ((0, 1), (0, 2))),
            (1, ((1,), (1, 2))),
        }


def test_placement_table_csv():
    table = placement_table_csv(3, 3)
    lines = table.strip().splitlines()
    assert lines[0] == "x\\y,0,1,2,3"
    assert lines[3].split(",")[3] == "1;4;1"
