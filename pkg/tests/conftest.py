"""Shared graph fixtures: the small worked-example graphs used throughout."""

import numpy as np
import pytest

from lyapcum import DirectedGraph, DiagonalCumulant, ParameterMatrix


def two_node_chain() -> DirectedGraph:
    """0 -> 1 with a self-loop at the source only."""
    return DirectedGraph(2, [(0, 0), (0, 1)])


def two_node_both_loops() -> DirectedGraph:
    """0 -> 1 with self-loops at both vertices."""
    return DirectedGraph(2, [(0, 0), (0, 1), (1, 1)])


def sink_loop_chain() -> DirectedGraph:
    """0 -> 1 with a self-loop at the sink only (non-identifiable)."""
    return DirectedGraph(2, [(0, 1), (1, 1)])


def bare_two_cycle() -> DirectedGraph:
    """0 <-> 1 without self-loops (non-identifiable)."""
    return DirectedGraph(2, [(0, 1), (1, 0)])


def two_cycle_with_loops() -> DirectedGraph:
    """Complete graph on two vertices: 0 <-> 1 plus both loops."""
    return DirectedGraph(2, [(0, 0), (1, 1), (0, 1), (1, 0)])


def collider_square() -> DirectedGraph:
    """0->1, 0->3, 2->3 with all self-loops (the CI worked example)."""
    return DirectedGraph(4, [(0, 1), (0, 3), (2, 3), (0, 0), (1, 1), (2, 2), (3, 3)])


def diamond() -> DirectedGraph:
    """0->1, 0->2, 1->3, 2->3, loop at 0 only (non-identifiable family)."""
    return DirectedGraph(4, [(0, 0), (0, 1), (0, 2), (1, 3), (2, 3)])


def four_node_tree() -> DirectedGraph:
    """Directed tree 0->1, 1->2, 1->3, source loop (toric fixture)."""
    return DirectedGraph(4, [(0, 0), (0, 1), (1, 2), (1, 3)])


def five_node_tree() -> DirectedGraph:
    """Directed tree 0->1, 0->2, 2->3, 2->4, source loop."""
    return DirectedGraph(5, [(0, 0), (0, 1), (0, 2), (2, 3), (2, 4)])


def fork_three(loop_at_source_only: bool = True) -> DirectedGraph:
    """0->1, 0->2 with loop at 0 (parents rank-bound fixture)."""
    return DirectedGraph(3, [(0, 0), (0, 1), (0, 2)])


def end_loop_path() -> DirectedGraph:
    """Path 0->1->2->3 with self-loops at the two ends."""
    return DirectedGraph(4, [(0, 0), (3, 3), (0, 1), (1, 2), (2, 3)])


def chain_with_end_loops() -> DirectedGraph:
    """Path 0->1->2 with loops at 0 and 2 (polytree fixture)."""
    return DirectedGraph(3, [(0, 0), (2, 2), (0, 1), (1, 2)])


def unit_parameters(g: DirectedGraph, diag: float, off: float) -> ParameterMatrix:
    """Matrix with every self-loop at ``diag`` and every other edge at ``off``."""
    entries = np.zeros((g.p, g.p))
    for i, j in g.edges:
        entries[j, i] = diag if i == j else off
    return ParameterMatrix(g, entries)


def unit_noise(p: int, orders=(2, 3, 4)) -> dict[int, DiagonalCumulant]:
    return {n: DiagonalCumulant(n, np.ones(p)) for n in orders}


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
