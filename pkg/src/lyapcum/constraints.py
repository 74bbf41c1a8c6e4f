"""Algebraic constraints satisfied by model cumulants.

Directed trees with a single self-loop at the source admit a monomial
(toric) cumulant parametrization via shortest equitreks; its integer
exponent matrix yields binomial invariants through exact kernel
computation, and two trees give the same constraint ideal exactly when
their level partitions and shortest-equitrek tops agree.  For general
graphs, parent and grandparent counts of a vertex set bound the rank of
certain cumulant submatrices.

All toric arithmetic is exact (Python integers and Fractions) so that
kernel vectors and row-equivalence checks are identities rather than
float comparisons.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, gcd
from typing import Sequence

import numpy as np

from .graphs import DirectedGraph
from .identify import CumulantStack, HypothesisViolated
from .jacobian import numeric_rank
from .tensors import multiset_indices

VANISH_RTOL = 1e-9
NONZERO_FLOOR = 1e-6
MINOR_BUDGET = 5000


class ModelInconsistency(Exception):
    """An observed rank exceeded its structural bound on a model stack."""


# ---------------------------------------------------------------------------
# directed-tree structure
# ---------------------------------------------------------------------------


def _tree_structure(g: DirectedGraph) -> tuple[int, list[int], list[tuple[int, ...]]]:
    """(source, levels, source paths) for a directed tree, or raise.

    Hypotheses: single source, tree skeleton, and the source's self-loop is
    the only loop.  Such a graph is an arborescence: every non-source vertex
    has exactly one parent and a unique path from the source.
    """
    if len(g.sources) != 1:
        raise HypothesisViolated(f"need exactly one source, found {g.sources}")
    source = g.sources[0]
    if g.self_loops != frozenset({source}):
        raise HypothesisViolated(
            f"need the source self-loop only, found loops at {sorted(g.self_loops)}"
        )
    if not g.is_polytree:
        raise HypothesisViolated("skeleton must be a tree")
    paths: list[tuple[int, ...] | None] = [None] * g.p
    paths[source] = (source,)
    frontier = [source]
    while frontier:
        v = frontier.pop()
        for c in g.children[v]:
            if c == v:
                continue
            if paths[c] is not None:
                raise HypothesisViolated(f"vertex {c} has two tree parents")
            paths[c] = paths[v] + (c,)
            frontier.append(c)
    if any(path is None for path in paths):
        raise HypothesisViolated("some vertex is unreachable from the source")
    levels = [len(path) - 1 for path in paths]
    return source, levels, paths


def level_partition(g: DirectedGraph) -> list[list[int]]:
    """Vertex sets by shortest-path distance from the source."""
    _, levels, _ = _tree_structure(g)
    out: list[list[int]] = [[] for _ in range(max(levels) + 1)]
    for v, level in enumerate(levels):
        out[level].append(v)
    return out


def shortest_equitrek_top(g: DirectedGraph, indices: Sequence[int]) -> int:
    """Top vertex of the unique shortest equitrek between the given vertices.

    With self-loops only at the source, unequal leaf levels force the top to
    the source (only it can pad short legs); equal levels put the top at the
    deepest common ancestor.
    """
    source, levels, paths = _tree_structure(g)
    idx = list(indices)
    if len({levels[i] for i in idx}) > 1:
        return source
    prefix = paths[idx[0]]
    for i in idx[1:]:
        other = paths[i]
        keep = 0
        while keep < min(len(prefix), len(other)) and prefix[keep] == other[keep]:
            keep += 1
        prefix = prefix[:keep]
    return prefix[-1]


# ---------------------------------------------------------------------------
# toric exponent matrix
# ---------------------------------------------------------------------------


@dataclass
class ToricMatrix:
    """Integer exponent matrix of the shortest-equitrek parametrization.

    Rows: one block of v parameters per order (vertex-indexed), then the
    edges (source loop first).  Columns: canonical cumulant multisets per
    order.  Entry = exponent of the row parameter in the column's monomial.
    """

    matrix: np.ndarray
    row_labels: list[tuple]
    col_labels: list[tuple[int, tuple[int, ...]]]

    def to_csv(self) -> str:
        header = "row," + ",".join(
            "|".join(map(str, (order,) + key)) for order, key in self.col_labels
        )
        lines = [header]
        for label, row in zip(self.row_labels, self.matrix):
            name = "-".join(map(str, label))
            lines.append(name + "," + ",".join(str(int(x)) for x in row))
        return "\n".join(lines) + "\n"


def toric_matrix(g: DirectedGraph, order: int) -> ToricMatrix:
    """Exponent matrix of the monomial cumulant parametrization up to ``order``.

    Each cumulant entry equals ``v^(m)_top * a^(leg_1) ... a^(leg_m)`` over
    its unique shortest equitrek; the column records the exponents of the
    v parameter and of every edge (self-loop padding counts on the source
    loop row).
    """
    if order < 2:
        raise ValueError("order must be at least 2")
    source, levels, paths = _tree_structure(g)
    edges = sorted(g.edges)
    row_labels: list[tuple] = []
    for m in range(2, order + 1):
        row_labels.extend(("v", m, i) for i in range(g.p))
    row_labels.extend(("a", i, j) for i, j in edges)
    edge_row = {edge: len(row_labels) - len(edges) + k for k, edge in enumerate(edges)}
    v_row = {
        (m, i): (m - 2) * g.p + i for m in range(2, order + 1) for i in range(g.p)
    }

    col_labels: list[tuple[int, tuple[int, ...]]] = []
    for m in range(2, order + 1):
        col_labels.extend((m, key) for key in multiset_indices(g.p, m))

    matrix = np.zeros((len(row_labels), len(col_labels)), dtype=int)
    for col, (m, key) in enumerate(col_labels):
        top = shortest_equitrek_top(g, key)
        matrix[v_row[(m, top)], col] = 1
        # unequal leaf levels force top = source and source-loop padding up
        # to the deepest leaf; equal levels need no padding at all
        key_levels = [levels[i] for i in key]
        depth = max(key_levels)
        padded = len(set(key_levels)) > 1
        for i in key:
            if padded:
                matrix[edge_row[(source, source)], col] += depth - levels[i]
            walk = paths[i][paths[i].index(top):]
            for aa, bb in zip(walk, walk[1:]):
                matrix[edge_row[(aa, bb)], col] += 1
    return ToricMatrix(matrix=matrix, row_labels=row_labels, col_labels=col_labels)


def integer_kernel(matrix: np.ndarray) -> list[np.ndarray]:
    """Integer basis of the rational kernel via exact elimination."""
    rows, cols = matrix.shape
    work = [[Fraction(int(matrix[r, c])) for c in range(cols)] for r in range(rows)]
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if work[i][c] != 0), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = work[r][c]
        work[r] = [x / inv for x in work[r]]
        for i in range(rows):
            if i != r and work[i][c] != 0:
                factor = work[i][c]
                work[i] = [x - factor * y for x, y in zip(work[i], work[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * cols
        vec[f] = Fraction(1)
        for row_idx, c in enumerate(pivots):
            vec[c] = -work[row_idx][f]
        denom = 1
        for x in vec:
            denom = denom * x.denominator // gcd(denom, x.denominator)
        basis.append(np.array([int(x * denom) for x in vec], dtype=object))
    return basis


def _rref(matrix: np.ndarray) -> list[list[Fraction]]:
    rows, cols = matrix.shape
    work = [[Fraction(int(matrix[r, c])) for c in range(cols)] for r in range(rows)]
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if work[i][c] != 0), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = work[r][c]
        work[r] = [x / inv for x in work[r]]
        for i in range(rows):
            if i != r and work[i][c] != 0:
                factor = work[i][c]
                work[i] = [x - factor * y for x, y in zip(work[i], work[r])]
        r += 1
        if r == rows:
            break
    return [row for row in work if any(x != 0 for x in row)]


def kernel_binomial_values(
    tm: ToricMatrix, stack: CumulantStack
) -> list[tuple[np.ndarray, float, float]]:
    """Evaluate each kernel binomial on a stack: (vector, value, scale).

    A kernel vector k splits into positive and negative parts; the binomial
    is ``prod c_i^(k_i+) - prod c_i^(k_i-)`` over the column cumulants, and
    it vanishes on every model point of the tree.
    """
    entries = []
    for order, key in tm.col_labels:
        entries.append(stack.tensor(order)[key])
    results = []
    for vec in integer_kernel(tm.matrix):
        pos = 1.0
        neg = 1.0
        for exponent, value in zip(vec, entries):
            if exponent > 0:
                pos *= value ** int(exponent)
            elif exponent < 0:
                neg *= value ** int(-exponent)
        scale = max(abs(pos), abs(neg), 1e-300)
        results.append((vec, pos - neg, scale))
    return results


# ---------------------------------------------------------------------------
# level and top-trek polynomial checks
# ---------------------------------------------------------------------------


@dataclass
class PolynomialCheck:
    family: str
    indices: tuple[int, ...]
    value: float
    scale: float
    expected_zero: bool

    @property
    def ok(self) -> bool:
        if self.expected_zero:
            return abs(self.value) <= VANISH_RTOL * self.scale
        return abs(self.value) >= NONZERO_FLOOR * self.scale


def level_polynomial_checks(
    g: DirectedGraph, stack: CumulantStack
) -> list[PolynomialCheck]:
    """Evaluate the level-detecting polynomials on a numeric model stack.

    Families: (source-balance) ``s_ij^3 t_iii^2 - s_ii^3 t_iij t_ijj``
    vanishes for every j iff i is the source; (same-level)
    ``s_0i t_00j - s_0j t_00i`` vanishes iff i and j share a level;
    (level-order) for cross-level pairs ``s_ij t_00j - s_0j t_0ij``
    vanishes iff j is deeper than i.  The source-balance family is
    aggregated over j; the others are per-pair.
    """
    source, levels, _ = _tree_structure(g)
    s, t = stack.s, stack.t
    checks: list[PolynomialCheck] = []
    for i in range(g.p):
        worst_value = 0.0
        worst_scale = 1e-300
        for j in range(g.p):
            if j == i:
                continue
            lhs = s[(i, j)] ** 3 * t[(i, i, i)] ** 2
            rhs = s[(i, i)] ** 3 * t[(i, i, j)] * t[(i, j, j)]
            scale = max(abs(lhs), abs(rhs), 1e-300)
            if abs(lhs - rhs) / scale > abs(worst_value) / worst_scale:
                worst_value, worst_scale = lhs - rhs, scale
        checks.append(
            PolynomialCheck(
                family="source-balance",
                indices=(i,),
                value=worst_value,
                scale=worst_scale,
                expected_zero=(i == source),
            )
        )
    for i, j in itertools.combinations(range(g.p), 2):
        lhs = s[(source, i)] * t[(source, source, j)]
        rhs = s[(source, j)] * t[(source, source, i)]
        checks.append(
            PolynomialCheck(
                family="same-level",
                indices=(i, j),
                value=lhs - rhs,
                scale=max(abs(lhs), abs(rhs), 1e-300),
                expected_zero=(levels[i] == levels[j]),
            )
        )
    for i, j in itertools.permutations(range(g.p), 2):
        if levels[i] == levels[j]:
            continue
        lhs = s[(i, j)] * t[(source, source, j)]
        rhs = s[(source, j)] * t[(source, i, j)]
        checks.append(
            PolynomialCheck(
                family="level-order",
                indices=(i, j),
                value=lhs - rhs,
                scale=max(abs(lhs), abs(rhs), 1e-300),
                expected_zero=(levels[j] > levels[i]),
            )
        )
    return checks


def top_trek_polynomial_check(
    g: DirectedGraph, stack: CumulantStack, i: int, j: int, top: int
) -> PolynomialCheck:
    """Evaluate ``s_0l s_ij t_llj - s_0i s_ll t_ljj`` for a candidate top l.

    Vanishes exactly when l tops the shortest (i, j)-equitrek and that trek
    needs no source padding, i.e. i and j sit on one level.  Cross-level
    pairs leave an uncancelled source-loop power even at the padded top, so
    they are predicted nonzero for every l.
    """
    source, levels, _ = _tree_structure(g)
    s, t = stack.s, stack.t
    lhs = s[(source, top)] * s[(i, j)] * t[(top, top, j)]
    rhs = s[(source, i)] * s[(top, top)] * t[(top, j, j)]
    return PolynomialCheck(
        family="top-trek",
        indices=(i, j, top),
        value=lhs - rhs,
        scale=max(abs(lhs), abs(rhs), 1e-300),
        expected_zero=(
            levels[i] == levels[j] and top == shortest_equitrek_top(g, (i, j))
        ),
    )


# ---------------------------------------------------------------------------
# tree model equivalence
# ---------------------------------------------------------------------------


@dataclass
class TreeEquivalence:
    equal: bool
    witness: str | None = None
    row_equivalence_checked: bool = False


def tree_equivalence(
    g: DirectedGraph, h: DirectedGraph, order: int = 3
) -> TreeEquivalence:
    """Decide whether two directed trees carve out the same constraint ideal.

    True iff the labeled level partitions coincide and every vertex pair has
    the same shortest-equitrek top.  A positive answer is cross-checked by
    exact row reduction: the two toric exponent matrices must span the same
    row space.
    """
    if g.p != h.p:
        raise HypothesisViolated("trees must share the vertex count")
    levels_g = [set(level) for level in level_partition(g)]
    levels_h = [set(level) for level in level_partition(h)]
    if levels_g != levels_h:
        return TreeEquivalence(
            equal=False, witness=f"level partitions differ: {levels_g} vs {levels_h}"
        )
    for i, j in itertools.combinations(range(g.p), 2):
        top_g = shortest_equitrek_top(g, (i, j))
        top_h = shortest_equitrek_top(h, (i, j))
        if top_g != top_h:
            return TreeEquivalence(
                equal=False,
                witness=f"pair ({i},{j}) has tops {top_g} vs {top_h}",
            )
    rref_g = _rref(toric_matrix(g, order).matrix)
    rref_h = _rref(toric_matrix(h, order).matrix)
    if rref_g != rref_h:
        raise RuntimeError(
            "tops and levels agree but exponent row spaces differ; "
            "this contradicts the swap construction"
        )
    return TreeEquivalence(equal=True, row_equivalence_checked=True)


# ---------------------------------------------------------------------------
# determinantal rank constraints
# ---------------------------------------------------------------------------


@dataclass
class RankConstraintResult:
    kind: str  # parents-S | parents-stacked-Q | grandparents
    u: tuple[int, ...]
    bound: int
    rank: int
    shape: tuple[int, int]
    minors_checked: int = 0
    max_minor: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "U": list(self.u),
            "bound": self.bound,
            "rank": self.rank,
            "shape": list(self.shape),
            "minors_checked": self.minors_checked,
            "max_violation": self.max_minor,
        }


def parent_set(g: DirectedGraph, u: Sequence[int]) -> set[int]:
    out: set[int] = set()
    for v in u:
        out.update(g.parents[v])
    return out


def grandparent_set(g: DirectedGraph, u: Sequence[int]) -> set[int]:
    return parent_set(g, sorted(parent_set(g, u)))


def sibling_set(g: DirectedGraph, u: Sequence[int]) -> set[int]:
    pa_u = parent_set(g, u)
    return {w for w in range(g.p) if set(g.parents[w]) <= pa_u}


def _minor_scan(matrix: np.ndarray, size: int) -> tuple[int, float | None]:
    """Max |minor| of the given size, if the combinatorial budget allows."""
    rows, cols = matrix.shape
    if size > min(rows, cols):
        return 0, None
    count = comb(rows, size) * comb(cols, size)
    if count > MINOR_BUDGET:
        return 0, None
    worst = 0.0
    checked = 0
    for ridx in itertools.combinations(range(rows), size):
        for cidx in itertools.combinations(range(cols), size):
            worst = max(worst, abs(np.linalg.det(matrix[np.ix_(ridx, cidx)])))
            checked += 1
    return checked, worst


def _constraint_matrices(
    g: DirectedGraph, stack: CumulantStack, u: tuple[int, ...]
) -> list[tuple[str, int, np.ndarray]]:
    p = g.p
    s_dense = stack.s.to_dense()
    t_dense = stack.t.to_dense()
    u_set = set(u)
    cols = list(u)
    pa = parent_set(g, u)
    an2 = grandparent_set(g, u)
    sib = sibling_set(g, u)

    s_rows = [i for i in range(p) if i not in u_set]
    s_part = s_dense[np.ix_(s_rows, cols)]

    q_blocks = [s_part]
    for i in range(p):
        keep = [j for j in range(p) if not (i == j and i in u_set)]
        q_blocks.append(t_dense[i][np.ix_(keep, cols)])
    q_matrix = np.vstack(q_blocks)

    g_rows = [i for i in range(p) if i not in sib]
    g_blocks = [s_dense[np.ix_(g_rows, cols)]] if g_rows else []
    for i in range(p):
        if i in sib:
            keep = [j for j in range(p) if j not in sib]
        else:
            keep = list(range(p))
        if keep:
            g_blocks.append(t_dense[i][np.ix_(keep, cols)])
    g_matrix = (
        np.vstack(g_blocks) if g_blocks else np.zeros((0, len(cols)))
    )

    return [
        ("parents-S", len(pa), s_part),
        ("parents-stacked-Q", len(pa), q_matrix),
        ("grandparents", len(an2), g_matrix),
    ]


def rank_constraints_scan(
    g: DirectedGraph, stack: CumulantStack, max_subset: int
) -> list[RankConstraintResult]:
    """Check every parent/grandparent rank bound over subsets U.

    For each U with |U| <= max_subset: the off-diagonal S columns, the
    stacked S-plus-T-slices matrix Q, and the sibling-pruned grandparent
    variant must have rank bounded by |pa(U)|, |pa(U)|, |an2(U)|
    respectively.  Small matrices also get an exhaustive (bound+1)-minor
    scan.

    Raises
    ------
    ModelInconsistency
        If an observed rank exceeds its bound (the stack cannot come from a
        model point of this graph).
    """
    results = []
    violations = []
    for size in range(1, max_subset + 1):
        for u in itertools.combinations(range(g.p), size):
            for kind, bound, matrix in _constraint_matrices(g, stack, u):
                rank, _ = numeric_rank(matrix)
                checked, worst = _minor_scan(matrix, bound + 1)
                result = RankConstraintResult(
                    kind=kind,
                    u=u,
                    bound=bound,
                    rank=rank,
                    shape=(matrix.shape[0], matrix.shape[1]),
                    minors_checked=checked,
                    max_minor=worst,
                )
                results.append(result)
                if rank > bound:
                    violations.append(result)
    if violations:
        worst = violations[0]
        raise ModelInconsistency(
            f"{len(violations)} rank bounds violated, first: kind={worst.kind} "
            f"U={worst.u} rank={worst.rank} > bound={worst.bound}"
        )
    return results
