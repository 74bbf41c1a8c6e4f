"""Directed graphs with self-loops and their trek combinatorics.

Vertices are integers ``0..p-1``.  An edge ``(i, j)`` means ``i -> j``; self
loops ``(i, i)`` are ordinary edges.  Graphs are immutable after construction
and all derived classifiers are memoized per instance, so instances are safe
to share across threads.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence


class CyclicGraph(Exception):
    """A directed cycle of length >= 2 was found where a DAG was required."""


class DisconnectedGraph(Exception):
    """The undirected skeleton is disconnected."""


class DirectedGraph:
    """Directed graph on ``p`` vertices with an explicit edge set.

    Parameters
    ----------
    p : int
        Number of vertices, labeled ``0..p-1``.
    edges : iterable of (int, int)
        Ordered pairs ``(i, j)`` for edges ``i -> j``.  Duplicates are
        rejected; self-loops are allowed.
    """

    def __init__(self, p: int, edges: Iterable[tuple[int, int]]):
        if p <= 0:
            raise ValueError(f"vertex count must be positive, got {p}")
        edge_list = [(int(i), int(j)) for i, j in edges]
        if len(edge_list) != len(set(edge_list)):
            raise ValueError("duplicate edges are not allowed")
        for i, j in edge_list:
            if not (0 <= i < p and 0 <= j < p):
                raise ValueError(f"edge ({i},{j}) out of range for p={p}")
        self.p = p
        self.edges = frozenset(edge_list)

    # -- basic structure ---------------------------------------------------

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DirectedGraph)
            and self.p == other.p
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.p, self.edges))

    def __repr__(self) -> str:
        return f"DirectedGraph(p={self.p}, edges={sorted(self.edges)})"

    @cached_property
    def sorted_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        """``parents[v]`` lists u with u -> v, self included on a loop."""
        out: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.sorted_edges:
            out[j].append(i)
        return tuple(tuple(v) for v in out)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.p)]
        for i, j in self.sorted_edges:
            out[i].append(j)
        return tuple(tuple(v) for v in out)

    @cached_property
    def self_loops(self) -> frozenset[int]:
        return frozenset(i for i, j in self.edges if i == j)

    def has_self_loop(self, v: int) -> bool:
        return (v, v) in self.edges

    @cached_property
    def sources(self) -> tuple[int, ...]:
        """Vertices with no incoming edge other than a self-loop."""
        return tuple(
            v
            for v in range(self.p)
            if all(u == v for u in self.parents[v])
        )

    @cached_property
    def isolated_vertices(self) -> tuple[int, ...]:
        """Vertices touching no edge except possibly their own loop."""
        touched = set()
        for i, j in self.edges:
            if i != j:
                touched.add(i)
                touched.add(j)
        return tuple(v for v in range(self.p) if v not in touched)

    @cached_property
    def is_dag(self) -> bool:
        """True if acyclic once self-loops are ignored."""
        try:
            self.topological_order()
        except CyclicGraph:
            return False
        return True

    @cached_property
    def has_all_self_loops(self) -> bool:
        return len(self.self_loops) == self.p

    @cached_property
    def skeleton(self) -> frozenset[frozenset[int]]:
        """Undirected edge set, self-loops dropped."""
        return frozenset(frozenset((i, j)) for i, j in self.edges if i != j)

    @cached_property
    def skeleton_neighbors(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.p)]
        for i, j in self.edges:
            if i != j:
                nbrs[i].add(j)
                nbrs[j].add(i)
        return tuple(tuple(sorted(s)) for s in nbrs)

    @cached_property
    def is_skeleton_connected(self) -> bool:
        if self.p == 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for u in self.skeleton_neighbors[v]:
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == self.p

    @cached_property
    def skeleton_components(self) -> tuple[tuple[int, ...], ...]:
        seen: set[int] = set()
        comps = []
        for start in range(self.p):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                v = stack.pop()
                for u in self.skeleton_neighbors[v]:
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            seen |= comp
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    @cached_property
    def is_polytree(self) -> bool:
        """True if directed cycles are absent and the skeleton is a tree."""
        if not self.is_skeleton_connected or not self.is_dag:
            return False
        return len(self.skeleton) == self.p - 1

    def topological_order(self) -> list[int]:
        """Linear order with every non-loop edge forward, minimal index first.

        Raises
        ------
        CyclicGraph
            If a directed cycle of length >= 2 exists.
        """
        indeg = [0] * self.p
        for i, j in self.edges:
            if i != j:
                indeg[j] += 1
        ready = [v for v in range(self.p) if indeg[v] == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            v = heapq.heappop(ready)
            order.append(v)
            for c in self.children[v]:
                if c == v:
                    continue
                indeg[c] -= 1
                if indeg[c] == 0:
                    heapq.heappush(ready, c)
        if len(order) != self.p:
            raise CyclicGraph(
                f"graph has a directed cycle through "
                f"{sorted(set(range(self.p)) - set(order))}"
            )
        return order

    @cached_property
    def descendant_sets(self) -> tuple[frozenset[int], ...]:
        """``descendant_sets[v]`` = vertices reachable from v (v included)."""
        out = []
        for v in range(self.p):
            seen = {v}
            stack = [v]
            while stack:
                x = stack.pop()
                for c in self.children[x]:
                    if c not in seen:
                        seen.add(c)
                        stack.append(c)
            out.append(frozenset(seen))
        return tuple(out)

    def relabel(self, perm: Sequence[int]) -> "DirectedGraph":
        """New graph with vertex v renamed to perm[v]."""
        return DirectedGraph(self.p, [(perm[i], perm[j]) for i, j in self.edges])

    # -- JSON wire format --------------------------------------------------

    def to_json_dict(self) -> dict:
        return {"p": self.p, "edges": [list(e) for e in self.sorted_edges]}

    @classmethod
    def from_json_dict(cls, data: dict) -> "DirectedGraph":
        if not isinstance(data, dict) or "p" not in data or "edges" not in data:
            raise ValueError("graph JSON must contain 'p' and 'edges'")
        return cls(int(data["p"]), [tuple(e) for e in data["edges"]])


@dataclass(frozen=True)
class Trek:
    """Tuple of directed paths (legs) out of one common top vertex.

    Each leg is a vertex sequence starting at ``top``; consecutive vertices
    must be graph edges.  A trek is an equitrek when all legs have equal edge
    length and a base trek when no leg repeats a vertex.
    """

    top: int
    legs: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not self.legs:
            raise ValueError("a trek needs at least one leg")
        if any(leg[0] != self.top for leg in self.legs):
            raise ValueError("all legs must start at the top vertex")

    @property
    def leaves(self) -> tuple[int, ...]:
        return tuple(leg[-1] for leg in self.legs)

    @property
    def leg_lengths(self) -> tuple[int, ...]:
        return tuple(len(leg) - 1 for leg in self.legs)

    @property
    def is_equitrek(self) -> bool:
        return len(set(self.leg_lengths)) == 1

    @property
    def is_base_trek(self) -> bool:
        return all(len(set(leg)) == len(leg) for leg in self.legs)

    def validate(self, g: DirectedGraph) -> None:
        for leg in self.legs:
            for a, b in zip(leg, leg[1:]):
                if (a, b) not in g.edges:
                    raise ValueError(f"({a},{b}) is not an edge of the graph")


@dataclass(frozen=True)
class EquitrekGraph:
    """Bidirected graph with an edge {i, j} iff an equitrek joins i and j."""

    p: int
    biedges: frozenset[tuple[int, int]]  # stored as (min, max)

    def has_biedge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.biedges

    def neighbors(self, v: int) -> tuple[int, ...]:
        out = set()
        for a, b in self.biedges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return tuple(sorted(out))


# ---------------------------------------------------------------------------
# equitrek search
# ---------------------------------------------------------------------------


def _paths_from(g: DirectedGraph, start: int, length: int) -> list[tuple[int, ...]]:
    """All directed walks of the given edge length starting at ``start``."""
    paths = [(start,)]
    for _ in range(length):
        paths = [path + (c,) for path in paths for c in g.children[path[-1]]]
    return paths


def iter_equitreks(
    g: DirectedGraph, leaves: Sequence[int], max_len: int
) -> Iterator[Trek]:
    """Yield equitreks with the given leaf tuple, by length then leg order."""
    leaves = tuple(leaves)
    if not leaves:
        raise ValueError("leaf tuple must be nonempty")
    for length in range(max_len + 1):
        for top in range(g.p):
            per_leaf = [
                sorted(p for p in _paths_from(g, top, length) if p[-1] == leaf)
                for leaf in leaves
            ]
            if any(not options for options in per_leaf):
                continue
            for combo in itertools.product(*per_leaf):
                yield Trek(top=top, legs=tuple(combo))


def enumerate_equitreks(
    g: DirectedGraph, leaves: Sequence[int], max_len: int
) -> list[Trek]:
    """All equitreks with leg length <= ``max_len``, deterministically ordered."""
    return list(iter_equitreks(g, leaves, max_len))


def equitrek_graph(g: DirectedGraph) -> EquitrekGraph:
    """Bidirected equitrek graph, decided exactly on the pair-product graph.

    A pair {i, j} gets a biedge iff the state (i, j) is forward-reachable
    from some diagonal state (r, r) under synchronized steps, which is
    equivalent to existence of an equitrek between i and j.
    """
    seen = {(r, r) for r in range(g.p)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for x, y in frontier:
            for cx in g.children[x]:
                for cy in g.children[y]:
                    state = (cx, cy)
                    if state not in seen:
                        seen.add(state)
                        nxt.append(state)
        frontier = nxt
    biedges = frozenset((min(x, y), max(x, y)) for x, y in seen)
    return EquitrekGraph(p=g.p, biedges=biedges)


_EQUITREK_CACHE: dict[DirectedGraph, EquitrekGraph] = {}


def _cached_equitrek_graph(g: DirectedGraph) -> EquitrekGraph:
    eg = _EQUITREK_CACHE.get(g)
    if eg is None:
        eg = equitrek_graph(g)
        _EQUITREK_CACHE[g] = eg
    return eg


def equitrek_exists(g: DirectedGraph, i: int, j: int) -> bool:
    """True iff some equitrek joins i and j (the empty trek covers i == j)."""
    if i == j:
        return True
    return _cached_equitrek_graph(g).has_biedge(i, j)


def implied_marginal_independence(
    g: DirectedGraph, group_i: Iterable[int], group_j: Iterable[int]
) -> bool:
    """True iff no equitrek-graph biedge joins the two vertex groups."""
    set_i, set_j = set(group_i), set(group_j)
    if not set_i or not set_j:
        raise ValueError("vertex groups must be nonempty")
    if set_i & set_j:
        raise ValueError("vertex groups must be disjoint")
    eg = _cached_equitrek_graph(g)
    return not any(eg.has_biedge(a, b) for a in set_i for b in set_j)


def implied_conditional_independence(
    g: DirectedGraph,
    group_i: Iterable[int],
    group_j: Iterable[int],
    group_k: Iterable[int],
) -> bool:
    """Separation of I and J by the complement of I+J+K in the equitrek graph.

    Holds iff no equitrek-graph path from I to J stays inside I+J+K; this is
    the sufficient criterion for the conditional independence X_I _||_ X_J
    given X_K in the Gaussian second-order model.
    """
    set_i, set_j, set_k = set(group_i), set(group_j), set(group_k)
    if not set_i or not set_j:
        raise ValueError("I and J must be nonempty")
    if set_i & set_j or set_i & set_k or set_j & set_k:
        raise ValueError("I, J, K must be pairwise disjoint")
    eg = _cached_equitrek_graph(g)
    allowed = set_i | set_j | set_k
    frontier = list(set_i)
    seen = set(set_i)
    while frontier:
        v = frontier.pop()
        for u in eg.neighbors(v):
            if u in set_j:
                return False
            if u in allowed and u not in seen:
                seen.add(u)
                frontier.append(u)
    return True


# ---------------------------------------------------------------------------
# skeleton classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StarClassification:
    """Skeleton shape report: 'star', 'generalized-two-star', or 'neither'."""

    kind: str
    center: int | None = None


def _three_vertex_paths(g: DirectedGraph) -> list[tuple[int, int, int]]:
    """All skeleton paths on 3 distinct vertices, middle vertex second."""
    paths = []
    for mid in range(g.p):
        nbrs = g.skeleton_neighbors[mid]
        for a, b in itertools.combinations(nbrs, 2):
            paths.append((a, mid, b))
    return paths


def classify_star(g: DirectedGraph) -> StarClassification:
    """Classify the undirected skeleton of a connected graph.

    A star has one hub on every edge.  A generalized two star has one vertex
    shared by every 3-vertex skeleton path.  The hub / center is reported;
    ties break to the smallest index.

    Raises
    ------
    DisconnectedGraph
        If the skeleton is not connected.
    """
    if not g.is_skeleton_connected:
        raise DisconnectedGraph("star classification needs a connected skeleton")
    hubs = set(range(g.p))
    for e in g.skeleton:
        hubs &= e
    if g.skeleton and hubs:
        return StarClassification(kind="star", center=min(hubs))
    if not g.skeleton:  # single vertex
        return StarClassification(kind="star", center=0)
    paths = _three_vertex_paths(g)
    common = set(range(g.p))
    for path in paths:
        common &= set(path)
    if common:
        return StarClassification(kind="generalized-two-star", center=min(common))
    return StarClassification(kind="neither")
