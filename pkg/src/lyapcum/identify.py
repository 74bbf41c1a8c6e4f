"""Constructive parameter recovery from steady-state cumulants.

Implements the closed-form two-node recoveries, the topological-order
elimination for DAGs with all self-loops, the polytree variant with
self-loops at all sources, and an equation-counting diagnostic for
non-identifiable patterns.  All block solves are rank revealing and report
condition numbers; non-generic inputs surface as diagnostics instead of
silent garbage.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .engine import (
    DiagonalCumulant,
    ParameterMatrix,
    UnstableMatrix,
    recover_noise,
    solve_cumulant,
)
from .graphs import DirectedGraph
from .tensors import SymmetricTensor, multiset_indices

DEGENERACY_TOL = 1e-12
# blocks are declared singular when the smallest singular value sits at the
# noise floor; structurally singular patterns land near machine epsilon
# while merely ill-conditioned (still solvable) draws stay well above
BLOCK_RCOND = 1e-12


class DegenerateDenominator(Exception):
    """A closed-form denominator is numerically zero (non-generic point)."""


class HypothesisViolated(Exception):
    """The graph does not satisfy the method's structural hypotheses."""


class SingularBlock(Exception):
    """A linear block in the elimination is numerically singular."""

    def __init__(self, vertex: int, cond: float, message: str = ""):
        self.vertex = vertex
        self.cond = cond
        super().__init__(
            message
            or f"singular block at vertex {vertex} (condition number {cond:.3g})"
        )


@dataclass
class CumulantStack:
    """Second-, third-, and optionally fourth-order cumulant tensors."""

    s: SymmetricTensor
    t: SymmetricTensor
    r: SymmetricTensor | None = None

    def __post_init__(self):
        if self.s.order != 2 or self.t.order != 3:
            raise ValueError("stack needs an order-2 s and an order-3 t")
        if self.s.p != self.t.p or (self.r is not None and self.r.p != self.s.p):
            raise ValueError("stack tensors must share the dimension p")
        if self.r is not None and self.r.order != 4:
            raise ValueError("r must have order 4")

    @property
    def p(self) -> int:
        return self.s.p

    def tensor(self, order: int) -> SymmetricTensor:
        if order == 2:
            return self.s
        if order == 3:
            return self.t
        if order == 4 and self.r is not None:
            return self.r
        raise KeyError(f"no order-{order} tensor in the stack")

    @property
    def orders(self) -> tuple[int, ...]:
        return (2, 3) if self.r is None else (2, 3, 4)

    def relabel(self, perm) -> "CumulantStack":
        return CumulantStack(
            s=self.s.relabel(perm),
            t=self.t.relabel(perm),
            r=None if self.r is None else self.r.relabel(perm),
        )


def model_stack(a: ParameterMatrix, omegas: dict[int, DiagonalCumulant]) -> CumulantStack:
    """Forward map: solve the Lyapunov equations into a stack."""
    tensors = {n: solve_cumulant(a, w) for n, w in omegas.items()}
    return CumulantStack(
        s=tensors[2], t=tensors[3], r=tensors.get(4)
    )


@dataclass
class IdentifiabilityReport:
    method: str
    verdict: str  # recovered | degenerate | hypothesis-violated
    a: np.ndarray | None = None
    noise: dict[int, np.ndarray] | None = None
    forward_residuals: dict[int, float] = field(default_factory=dict)
    block_conditions: dict[str, float] = field(default_factory=dict)
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "verdict": self.verdict,
            "a": None if self.a is None else [list(row) for row in self.a],
            "noise": None
            if self.noise is None
            else {str(k): list(v) for k, v in self.noise.items()},
            "forward_residuals": {str(k): v for k, v in self.forward_residuals.items()},
            "block_conditions": dict(self.block_conditions),
            "detail": self.detail,
        }


# ---------------------------------------------------------------------------
# two-node closed forms
# ---------------------------------------------------------------------------


@dataclass
class TwoNodeResult:
    a00: float
    a10: float
    a11: float | None
    noise: dict[int, np.ndarray]


def _guard(name: str, value: float, scale: float, tol: float) -> float:
    # a denominator is degenerate when cancellation or an exact structural
    # zero wipes out its significant digits relative to the assembled terms
    if abs(value) <= tol * scale:
        raise DegenerateDenominator(f"denominator {name} = {value:.3g} is degenerate")
    return value


def _both_loops_edge(
    s00, s01, t000, t001, r0000, r0001, tol=DEGENERACY_TOL
) -> tuple[float, float, float]:
    """Closed-form (a00, a10, a11) for the pair model with both self-loops."""
    core = s00 * t001 - s01 * t000
    core_scale = abs(s00 * t001) + abs(s01 * t000)
    mix = r0000 * t001 - r0001 * t000
    mix_scale = abs(r0000 * t001) + abs(r0001 * t000)
    _guard(
        "s01 (r0000 t001 - r0001 t000)", s01 * mix, abs(s01) * mix_scale, tol
    )
    _guard(
        "r0001^2 (s00 t001 - s01 t000)^3",
        r0001**2 * core**3,
        r0001**2 * core_scale**3,
        tol,
    )
    if abs(s01 * mix) == 0.0 or abs(r0001) == 0.0:
        raise DegenerateDenominator("structurally zero denominator")
    a00 = -r0001 * core / (s01 * mix)
    a10 = (
        -(s01**2)
        * t001
        * (r0000 * s01 * t001 + r0001 * s00 * t001 - 2 * r0001 * s01 * t000)
        * mix
        / (r0001**2 * core**3)
    )
    a11 = mix * s01**2 * (r0000 * s00 * t001**2 - r0001 * s01 * t000**2) / (
        core**3 * r0001**2
    )
    return a00, a10, a11


def _source_loop_only_edge(s00, s01, t000, t001, tol=DEGENERACY_TOL):
    """Closed-form (a00, a10) when only the source carries a self-loop."""
    t_scale = max(abs(t000), abs(t001))
    _guard("s01 t000", s01 * t000, abs(s00) * t_scale, tol)
    _guard("s00^2 t001", s00**2 * t001, s00**2 * t_scale, tol)
    a00 = s00 * t001 / (s01 * t000)
    a10 = s01**2 * t000 / (s00**2 * t001)
    return a00, a10


def identify_two_node(
    stack: CumulantStack, variant: str, tol: float = DEGENERACY_TOL
) -> TwoNodeResult:
    """Recover the two-node chain 0 -> 1 by the closed-form expressions.

    ``variant='both-loops'`` solves the model with self-loops at 0 and 1 from
    (S, T, R); ``variant='source-loop-only'`` solves the model with a loop
    only at 0 from (S, T).

    Raises
    ------
    DegenerateDenominator
        When a denominator vanishes relative to its assembled terms
        (threshold ``tol``), signalling a non-generic input.
    """
    if stack.p != 2:
        raise HypothesisViolated("two-node recovery needs p = 2")
    s00, s01, s11 = stack.s[(0, 0)], stack.s[(0, 1)], stack.s[(1, 1)]
    t000, t001 = stack.t[(0, 0, 0)], stack.t[(0, 0, 1)]
    t111 = stack.t[(1, 1, 1)]
    if variant == "both-loops":
        if stack.r is None:
            raise HypothesisViolated("both-loops variant needs fourth-order input")
        r0000, r0001 = stack.r[(0, 0, 0, 0)], stack.r[(0, 0, 0, 1)]
        a00, a10, a11 = _both_loops_edge(s00, s01, t000, t001, r0000, r0001, tol)
        g = DirectedGraph(2, [(0, 0), (0, 1), (1, 1)])
        entries = np.array([[a00, 0.0], [a10, a11]])
        noise = {}
        for order in stack.orders:
            w, _ = recover_noise(stack.tensor(order), ParameterMatrix(g, entries))
            noise[order] = w.w
        return TwoNodeResult(a00=a00, a10=a10, a11=a11, noise=noise)
    if variant == "source-loop-only":
        a00, a10 = _source_loop_only_edge(s00, s01, t000, t001, tol)
        noise = {
            2: np.array([s00 * (1 - a00**2), s11 - a10**2 * s00]),
            3: np.array([t000 * (1 - a00**3), t111 - a10**3 * t000]),
        }
        return TwoNodeResult(a00=a00, a10=a10, a11=None, noise=noise)
    raise ValueError(f"unknown variant {variant!r}")


# ---------------------------------------------------------------------------
# shared elimination machinery
# ---------------------------------------------------------------------------


def _ancestors(g: DirectedGraph, v: int) -> set[int]:
    seen = {v}
    stack = [v]
    while stack:
        x = stack.pop()
        for u in g.parents[x]:
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return seen


def _min_source_ancestor(g: DirectedGraph, v: int) -> int:
    anc = _ancestors(g, v)
    candidates = [s for s in g.sources if s in anc]
    if not candidates:
        raise HypothesisViolated(f"vertex {v} has no source ancestor")
    return min(candidates)


def _solve_block(matrix: np.ndarray, rhs: np.ndarray, vertex: int):
    """Rank-revealing solve; returns (solution, condition number)."""
    u, sing, vt = np.linalg.svd(matrix)
    smax = sing[0] if len(sing) else 0.0
    smin = sing[-1] if len(sing) else 0.0
    cond = np.inf if smin == 0.0 else smax / smin
    if smax == 0.0 or smin <= smax * BLOCK_RCOND:
        raise SingularBlock(vertex, cond)
    solution = vt.T @ ((u.T @ rhs) / sing)
    return solution, float(cond)


def _source_self_loop(
    g: DirectedGraph, stack: CumulantStack, source: int, child: int
) -> float:
    """Base-case recovery of a source's self-loop from the (source, child) pair.

    Valid whenever all walks from the source to the child stay on the pair's
    own edges, which holds when no other non-self parent of the child is
    reachable from the source.
    """
    reachable = g.descendant_sets[source]
    outside = [
        q for q in g.parents[child] if q != child and q != source and q in reachable
    ]
    if outside:
        raise HypothesisViolated(
            f"pair ({source},{child}) is contaminated by parents {outside}"
        )
    s = stack.s
    t = stack.t
    see, sec = s[(source, source)], s[(source, child)]
    teee, teec = t[(source,) * 3], t[(source, source, child)]
    if g.has_self_loop(child):
        if stack.r is None:
            raise HypothesisViolated(
                "fourth-order cumulants required for a looped child base case"
            )
        r = stack.r
        a00, _, _ = _both_loops_edge(
            see, sec, teee, teec, r[(source,) * 4], r[(source,) * 3 + (child,)]
        )
        return a00
    a00, _ = _source_loop_only_edge(see, sec, teee, teec)
    return a00


def _finish_report(
    method: str,
    g: DirectedGraph,
    stack: CumulantStack,
    entries: np.ndarray,
    conditions: dict[str, float],
    tol: float,
) -> IdentifiabilityReport:
    """Recover noise at every stack order, attach forward residuals, verdict."""
    recovered = ParameterMatrix(g, entries)
    noise = {}
    residuals = {}
    detail = ""
    for order in stack.orders:
        w, _ = recover_noise(stack.tensor(order), recovered)
        noise[order] = w.w
        try:
            forward = solve_cumulant(recovered, DiagonalCumulant(order, w.w))
        except UnstableMatrix:
            # an unstable recovery cannot be residual-certified
            residuals[order] = np.inf
            detail = f"recovered matrix is unstable (radius {recovered.radius():.4g})"
            continue
        residuals[order] = max(
            abs(forward[key] - stack.tensor(order)[key])
            for key in multiset_indices(g.p, order)
        )
    verdict = "recovered" if max(residuals.values()) <= tol else "degenerate"
    return IdentifiabilityReport(
        method=method,
        verdict=verdict,
        a=entries,
        noise=noise,
        forward_residuals=residuals,
        block_conditions=conditions,
        detail=detail,
    )


# ---------------------------------------------------------------------------
# DAGs with all self-loops
# ---------------------------------------------------------------------------


def identify_dag_all_loops(
    g: DirectedGraph, stack: CumulantStack, tol: float = 1e-8
) -> IdentifiabilityReport:
    """Recover A and the noise cumulants for a DAG with all self-loops.

    Vertices are processed in topological order.  Each source's self-loop is
    solved on the pair it forms with its first topological child; every
    non-source vertex j solves one (d+1)x(d+1) linear block whose rows are
    the recursive equations for s_(i_m j) over the non-self parents i_m plus
    the third-order equation for t_(z z j), where z is the minimal-index
    source ancestor of j.

    Raises
    ------
    HypothesisViolated
        If the graph is cyclic or has isolated vertices.
    SingularBlock
        If a block is numerically singular (non-generic point or violated
        self-loop hypotheses, e.g. the diamond pattern).
    """
    if stack.p != g.p:
        raise HypothesisViolated("stack dimension does not match the graph")
    if g.isolated_vertices:
        raise HypothesisViolated(
            f"isolated vertices {g.isolated_vertices} are never identifiable"
        )
    order = g.topological_order()  # raises CyclicGraph on cycles
    pos = {v: idx for idx, v in enumerate(order)}
    entries = np.zeros((g.p, g.p))
    conditions: dict[str, float] = {}
    s_dense = stack.s.to_dense()
    t = stack.t

    for source in g.sources:
        children = [c for c in g.children[source] if c != source]
        if not children:
            raise HypothesisViolated(f"source {source} has no outgoing edge")
        child = min(children, key=pos.__getitem__)
        entries[source, source] = _source_self_loop(g, stack, source, child)

    for j in order:
        if j in g.sources:
            continue
        parents = sorted(q for q in g.parents[j] if q != j)
        unknowns = parents + [j]
        z = _min_source_ancestor(g, j)
        block = np.zeros((len(unknowns), len(unknowns)))
        rhs = np.zeros(len(unknowns))
        for row, i_m in enumerate(parents):
            block[row] = [entries[i_m] @ s_dense[:, l] for l in unknowns]
            rhs[row] = s_dense[i_m, j]
        azz2 = entries[z, z] ** 2
        block[-1] = [azz2 * t[(z, z, l)] for l in unknowns]
        rhs[-1] = t[(z, z, j)]
        solution, cond = _solve_block(block, rhs, j)
        conditions[f"vertex-{j}"] = cond
        # a vertex tolerated without its self-loop still gets an a_jj
        # unknown (it should solve to zero); only pattern entries are kept
        # and the forward residual certifies the consistency
        for val, l in zip(solution, unknowns):
            if (l, j) in g.edges:
                entries[j, l] = val

    return _finish_report("dag-all-loops", g, stack, entries, conditions, tol)


# ---------------------------------------------------------------------------
# polytrees with source self-loops
# ---------------------------------------------------------------------------


def identify_polytree(
    g: DirectedGraph, stack: CumulantStack, tol: float = 1e-8
) -> IdentifiabilityReport:
    """Recover A and the noise cumulants for a polytree with looped sources.

    Sources are handled by the two-node closed forms on a child pair.  A
    non-source j without a self-loop solves the diagonal system
    ``a_(j i_k) = s_(e_k j) / (a_(e_k e_k) s_(e_k i_k))`` over distinct
    source ancestors e_k of its parents; with a self-loop the system gains
    the t_(z z j) row and the a_jj unknown.

    Raises
    ------
    HypothesisViolated
        If the skeleton is not a tree, a vertex is isolated, or a source
        lacks its self-loop.
    SingularBlock
        If a block is numerically singular.
    """
    if stack.p != g.p:
        raise HypothesisViolated("stack dimension does not match the graph")
    if not g.is_polytree:
        raise HypothesisViolated("graph is not a polytree")
    if g.p < 2 or g.isolated_vertices:
        raise HypothesisViolated("polytree recovery needs p >= 2 without isolation")
    missing = [v for v in g.sources if not g.has_self_loop(v)]
    if missing:
        raise HypothesisViolated(f"sources {missing} lack self-loops")

    order = g.topological_order()
    entries = np.zeros((g.p, g.p))
    conditions: dict[str, float] = {}
    s = stack.s
    t = stack.t

    for source in g.sources:
        children = [c for c in g.children[source] if c != source]
        if not children:
            raise HypothesisViolated(f"source {source} has no outgoing edge")
        entries[source, source] = _source_self_loop(g, stack, source, min(children))

    for j in order:
        if j in g.sources:
            continue
        parents = sorted(q for q in g.parents[j] if q != j)
        anchors = [_min_source_ancestor(g, i_k) for i_k in parents]
        if g.has_self_loop(j):
            z = anchors[0]
            unknowns = parents + [j]
            block = np.zeros((len(unknowns), len(unknowns)))
            rhs = np.zeros(len(unknowns))
            block[0] = [entries[z, z] * s[(z, l)] for l in unknowns]
            rhs[0] = s[(z, j)]
            for row, e_k in enumerate(anchors[1:], start=1):
                block[row] = [entries[e_k, e_k] * s[(e_k, l)] for l in unknowns]
                rhs[row] = s[(e_k, j)]
            block[-1] = [entries[z, z] ** 2 * t[(z, z, l)] for l in unknowns]
            rhs[-1] = t[(z, z, j)]
        else:
            unknowns = list(parents)
            block = np.zeros((len(unknowns), len(unknowns)))
            rhs = np.zeros(len(unknowns))
            for row, e_k in enumerate(anchors):
                block[row] = [entries[e_k, e_k] * s[(e_k, l)] for l in unknowns]
                rhs[row] = s[(e_k, j)]
        solution, cond = _solve_block(block, rhs, j)
        conditions[f"vertex-{j}"] = cond
        for val, l in zip(solution, unknowns):
            entries[j, l] = val

    return _finish_report("polytree", g, stack, entries, conditions, tol)


# ---------------------------------------------------------------------------
# equation counting
# ---------------------------------------------------------------------------


@dataclass
class EquationCount:
    params: int
    equations: int
    bound_satisfied: bool
    zero_entries: dict[int, int]

    def to_json_dict(self) -> dict:
        return {
            "params": self.params,
            "equations": self.equations,
            "bound_satisfied": self.bound_satisfied,
            "zero_entries": {str(k): v for k, v in self.zero_entries.items()},
        }


def _equitrek_multisets(g: DirectedGraph, order: int) -> set[tuple[int, ...]]:
    """Index multisets joined by an order-leg equitrek: synchronized BFS."""
    seen = {(r,) * order for r in range(g.p)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for state in frontier:
            for combo in itertools.product(*(g.children[v] for v in state)):
                succ = tuple(sorted(combo))
                if succ not in seen:
                    seen.add(succ)
                    nxt.append(succ)
        frontier = nxt
    return seen


def count_equations_vs_parameters(g: DirectedGraph, n_max: int) -> EquationCount:
    """Parameter count |E| + p(n-1) against nonzero cumulant equations.

    Cumulant entries forced to zero by missing equitreks are excluded from
    the equation count; ``bound_satisfied`` is False when parameters exceed
    equations, certifying non-identifiability.
    """
    if n_max < 2:
        raise ValueError("need n_max >= 2")
    params = len(g.edges) + g.p * (n_max - 1)
    zero_entries = {}
    equations = 0
    for order in range(2, n_max + 1):
        reachable = _equitrek_multisets(g, order)
        total = comb(order + g.p - 1, order)
        nonzero = sum(1 for key in multiset_indices(g.p, order) if key in reachable)
        zero_entries[order] = total - nonzero
        equations += nonzero
    return EquationCount(
        params=params,
        equations=equations,
        bound_satisfied=params <= equations,
        zero_entries=zero_entries,
    )


# ---------------------------------------------------------------------------
# experimental: two-node solutions from (S, T) only
# ---------------------------------------------------------------------------


@dataclass
class TwoNodeCandidate:
    a00: float
    a10: float
    a11: float
    stable: bool
    residual: float


def _two_node_ratio_residual(theta: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # the cumulant ratios are rational functions of the parameters; evaluate
    # them by the raw linear solve so roots outside the stability region are
    # still visible to the search
    a00, a10, a11 = theta
    a = np.array([[a00, 0.0], [a10, a11]])
    try:
        flat2 = np.linalg.solve(
            np.eye(4) - np.kron(a, a), np.array([1.0, 0.0, 0.0, 0.0])
        )
        flat3 = np.linalg.solve(
            np.eye(8) - np.kron(a, np.kron(a, a)),
            np.array([1.0] + [0.0] * 7),
        )
    except np.linalg.LinAlgError:
        return np.full(3, 1e6)
    s = flat2.reshape(2, 2)
    t = flat3.reshape(2, 2, 2)
    if abs(s[0, 0]) < 1e-300 or abs(t[0, 0, 0]) < 1e-300:
        return np.full(3, 1e6)
    model = np.array(
        [s[0, 1] / s[0, 0], t[0, 0, 1] / t[0, 0, 0], t[0, 1, 1] / t[0, 0, 0]]
    )
    return model - targets


def _two_node_theta_of_x(x: float, u: float, v: float) -> np.ndarray | None:
    """Eliminate (a10, a11) from the first two ratio equations."""
    denom = x * x * (v - u)
    if abs(x) < 1e-9 or abs(denom) < 1e-12:
        return None
    a11 = (v - u * x) / denom
    a10 = u * (1 - x * a11) / x
    return np.array([x, a10, a11])


def two_node_st_solutions(
    stack: CumulantStack, grid: int = 4001, span: float = 1.8
) -> list[TwoNodeCandidate]:
    """Experimental root finder for the both-loops pair from (S, T) alone.

    The ratio system from s01/s00, t001/t000, and t011/t000 reduces to one
    equation in a00 after exact elimination; roots are located by a sign
    scan with bisection over [-span, span] and each is tagged with Schur
    stability.  Observationally only one root tends to be stable, but
    nothing here relies on that.
    """
    targets = np.array(
        [
            stack.s[(0, 1)] / stack.s[(0, 0)],
            stack.t[(0, 0, 1)] / stack.t[(0, 0, 0)],
            stack.t[(0, 1, 1)] / stack.t[(0, 0, 0)],
        ]
    )
    u, v = targets[0], targets[1]

    def profile(x: float) -> float:
        theta = _two_node_theta_of_x(x, u, v)
        if theta is None:
            return np.nan
        value = _two_node_ratio_residual(theta, targets)[2]
        return value if abs(value) < 1e5 else np.nan

    xs = np.linspace(-span, span, grid)
    values = np.array([profile(x) for x in xs])
    found: list[TwoNodeCandidate] = []
    for k in range(grid - 1):
        lo, hi = xs[k], xs[k + 1]
        flo, fhi = values[k], values[k + 1]
        if np.isnan(flo) or np.isnan(fhi) or flo * fhi > 0:
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fmid = profile(mid)
            if np.isnan(fmid):
                break
            if flo * fmid <= 0:
                hi, fhi = mid, fmid
            else:
                lo, flo = mid, fmid
        theta = _two_node_theta_of_x(0.5 * (lo + hi), u, v)
        if theta is None:
            continue
        residual = float(np.max(np.abs(_two_node_ratio_residual(theta, targets))))
        if residual > 1e-8:
            continue
        if any(abs(c.a00 - theta[0]) < 1e-7 for c in found):
            continue
        radius = max(abs(theta[0]), abs(theta[2]))
        found.append(
            TwoNodeCandidate(
                a00=float(theta[0]),
                a10=float(theta[1]),
                a11=float(theta[2]),
                stable=bool(radius < 1.0),
                residual=residual,
            )
        )
    found.sort(key=lambda c: (round(c.a00, 9), round(c.a10, 9)))
    return found


# ---------------------------------------------------------------------------
# method auto-selection
# ---------------------------------------------------------------------------


class NoMethodApplies(Exception):
    """No constructive identification method matches the graph predicates."""


def _two_node_pattern(g: DirectedGraph) -> tuple[int, str] | None:
    """(source, variant) when the graph is one of the closed-form pairs."""
    if g.p != 2:
        return None
    for src in (0, 1):
        if {(i, j) for i, j in g.edges if i != j} != {(src, 1 - src)}:
            continue
        if g.self_loops == frozenset({src, 1 - src}):
            return src, "both-loops"
        if g.self_loops == frozenset({src}):
            return src, "source-loop-only"
    return None


def _identify_two_node_report(
    g: DirectedGraph, stack: CumulantStack, src: int, variant: str, tol: float
) -> IdentifiabilityReport:
    relabeled = src != 0
    work = stack.relabel([1, 0]) if relabeled else stack
    result = identify_two_node(work, variant)
    entries = np.zeros((2, 2))
    entries[0, 0] = result.a00
    entries[1, 0] = result.a10
    if result.a11 is not None:
        entries[1, 1] = result.a11
    if relabeled:
        entries = entries[::-1, ::-1]
    return _finish_report("two-node", g, stack, entries, {}, tol)


def auto_identify(g: DirectedGraph, stack: CumulantStack, tol: float = 1e-8):
    """Pick the constructive method from graph predicates and run it."""
    pair = _two_node_pattern(g)
    if pair is not None:
        src, variant = pair
        if variant == "both-loops" and stack.r is None:
            raise NoMethodApplies("two-node both-loops pattern needs fourth order")
        return _identify_two_node_report(g, stack, src, variant, tol)
    if g.is_dag and g.has_all_self_loops and not g.isolated_vertices:
        return identify_dag_all_loops(g, stack, tol=tol)
    if (
        g.is_polytree
        and g.p >= 2
        and all(g.has_self_loop(v) for v in g.sources)
    ):
        return identify_polytree(g, stack, tol=tol)
    raise NoMethodApplies("graph matches neither constructive hypothesis class")
