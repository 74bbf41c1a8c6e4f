"""Modified Jacobian of the cumulant parametrization and generic-rank tests.

The Jacobian of the map (A, noise cumulants) -> (S, T, ...) factors into an
invertible Kronecker block times the "modified" Jacobian assembled here, so
their ranks agree.  Noise columns are unit vectors on diagonal cumulant
rows, which reduces the full-rank question to the off-diagonal rows of the
edge-derivative columns: the model is locally identifiable iff that block
has rank |E| generically.

Generic rank is certified by the maximum numeric rank over repeated random
draws: one full-rank witness suffices because rank is lower semicontinuous
on the parameter variety, while a deficiency verdict requires unanimity
across trials plus a wide singular-value gap.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np

from .engine import (
    DiagonalCumulant,
    ParameterMatrix,
    random_omegas,
    sample_stable_matrix,
    solve_cumulant,
)
from .graphs import DirectedGraph
from .tensors import SymmetricTensor, k_mode_product, multiset_indices

FOLD_TOL = 1e-10
RANK_EPS = 1e-12
GAP_STRUCTURAL = 1e6


def jacobian_entry_order2(
    a: np.ndarray, s: SymmetricTensor, row: tuple[int, int], col: tuple[int, int]
) -> float:
    """Entry of the order-2 modified Jacobian at row (i,j), column alpha->beta.

    ``delta_j(beta) sum_l a_il s_(l alpha) + delta_i(beta) sum_k a_jk s_(k alpha)``.
    """
    i, j = row
    alpha, beta = col
    value = 0.0
    if j == beta:
        value += sum(a[i, l] * s[(l, alpha)] for l in range(s.p))
    if i == beta:
        value += sum(a[j, k] * s[(k, alpha)] for k in range(s.p))
    return value


def jacobian_entry_order3(
    a: np.ndarray,
    t: SymmetricTensor,
    row: tuple[int, int, int],
    col: tuple[int, int],
) -> float:
    """Entry of the order-3 modified Jacobian: the three-term delta sum."""
    i, j, k = row
    alpha, beta = col
    p = t.p
    value = 0.0
    if i == beta:
        value += sum(
            a[j, m] * a[k, n] * t[(alpha, m, n)] for m in range(p) for n in range(p)
        )
    if j == beta:
        value += sum(
            a[i, l] * a[k, n] * t[(l, alpha, n)] for l in range(p) for n in range(p)
        )
    if k == beta:
        value += sum(
            a[i, l] * a[j, m] * t[(l, m, alpha)] for l in range(p) for m in range(p)
        )
    return value


@dataclass
class ModifiedJacobian:
    """Cumulant-derivative block matrix with row/column index metadata.

    Rows are canonical index multisets per included order; columns are the
    edge derivatives followed by one noise block per order.
    """

    matrix: np.ndarray
    rows: list[tuple[int, tuple[int, ...]]]
    cols: list[tuple]
    orders: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def offdiag_row_indices(self) -> list[int]:
        return [
            idx for idx, (_, key) in enumerate(self.rows) if len(set(key)) > 1
        ]

    def a_col_indices(self) -> list[int]:
        return [idx for idx, tag in enumerate(self.cols) if tag[0] == "a"]

    def offdiag_a_block(self) -> np.ndarray:
        return self.matrix[np.ix_(self.offdiag_row_indices(), self.a_col_indices())]


def _fold_to_multisets(
    dense: np.ndarray, keys: list[tuple[int, ...]], scale: float
) -> np.ndarray:
    """Take the representative entry per multiset; permuted entries must agree."""
    out = np.empty(len(keys))
    for idx, key in enumerate(keys):
        perms = {perm: dense[perm] for perm in set(itertools.permutations(key))}
        vals = list(perms.values())
        spread = max(vals) - min(vals)
        if spread > FOLD_TOL * max(1.0, scale):
            raise RuntimeError(
                f"permuted rows disagree at {key}: spread {spread:.3g}"
            )
        out[idx] = dense[key]
    return out


def build_modified_jacobian(
    g: DirectedGraph,
    a: ParameterMatrix,
    omegas: dict[int, DiagonalCumulant],
    orders: Sequence[int] = (2, 3),
    order4_rows: Sequence[tuple[int, ...]] | None = None,
) -> ModifiedJacobian:
    """Assemble the modified Jacobian for the requested cumulant orders.

    Edge columns hold ``sum_k T_n x_1 A ... x_k E_(beta alpha) ... x_n A``
    folded to multiset rows; noise columns are unit vectors on the diagonal
    rows of their order.  Order-4 rows default to all multisets but can be
    restricted (``order4_rows``) for targeted augmentation.
    """
    orders = tuple(sorted(orders))
    if any(n not in omegas for n in orders):
        raise ValueError("an omega is required for every requested order")
    a.require_stable()
    p = g.p
    edges = tuple(g.sorted_edges)
    rows: list[tuple[int, tuple[int, ...]]] = []
    per_order_keys: dict[int, list[tuple[int, ...]]] = {}
    for n in orders:
        if n == 4 and order4_rows is not None:
            keys = [tuple(sorted(k)) for k in order4_rows]
        else:
            keys = multiset_indices(p, n)
        per_order_keys[n] = keys
        rows.extend((n, key) for key in keys)

    cols: list[tuple] = [("a", alpha, beta) for alpha, beta in edges]
    for n in orders:
        cols.extend(("w", n, i) for i in range(p))

    matrix = np.zeros((len(rows), len(cols)))
    row_offset = 0
    for n in orders:
        keys = per_order_keys[n]
        tensor = solve_cumulant(a, omegas[n]).to_dense()
        scale = float(np.max(np.abs(tensor))) if tensor.size else 1.0
        for col_idx, (alpha, beta) in enumerate(edges):
            basis = np.zeros((p, p))
            basis[beta, alpha] = 1.0
            deriv = np.zeros_like(tensor)
            for k in range(n):
                term = tensor
                for axis in range(n):
                    term = k_mode_product(
                        term, basis if axis == k else a.entries, axis
                    )
                deriv = deriv + term
            matrix[row_offset : row_offset + len(keys), col_idx] = _fold_to_multisets(
                deriv, keys, scale
            )
        w_base = len(edges) + sum(p for m in orders if m < n)
        for i in range(p):
            diag_key = (i,) * n
            if diag_key in keys:
                matrix[row_offset + keys.index(diag_key), w_base + i] = 1.0
        row_offset += len(keys)

    return ModifiedJacobian(
        matrix=matrix, rows=rows, cols=cols, orders=orders, edges=edges
    )


# ---------------------------------------------------------------------------
# numeric rank
# ---------------------------------------------------------------------------


def default_rank_policy(singular_values: np.ndarray, shape: tuple[int, int]) -> int:
    if len(singular_values) == 0 or singular_values[0] == 0.0:
        return 0
    threshold = singular_values[0] * max(shape) * RANK_EPS
    return int(np.sum(singular_values > threshold))


def numeric_rank(
    matrix: np.ndarray,
    tol_policy: Callable[[np.ndarray, tuple[int, int]], int] | None = None,
) -> tuple[int, np.ndarray]:
    if matrix.size == 0:
        return 0, np.array([])
    sing = np.linalg.svd(matrix, compute_uv=False)
    policy = tol_policy or default_rank_policy
    return policy(sing, matrix.shape), sing


def offdiag_rank(
    mj: ModifiedJacobian,
    tol_policy: Callable[[np.ndarray, tuple[int, int]], int] | None = None,
) -> tuple[int, np.ndarray]:
    """Numeric rank (and singular values) of the off-diagonal edge block."""
    return numeric_rank(mj.offdiag_a_block(), tol_policy)


# ---------------------------------------------------------------------------
# local identifiability verdict
# ---------------------------------------------------------------------------


def two_cycle_components(g: DirectedGraph) -> list[tuple[int, int]]:
    """Skeleton components of size two whose vertices form a directed 2-cycle."""
    pairs = []
    for comp in g.skeleton_components:
        if len(comp) == 2:
            i, j = comp
            if (i, j) in g.edges and (j, i) in g.edges:
                pairs.append((i, j))
    return pairs


def augmentation_rows(g: DirectedGraph) -> list[tuple[int, ...]]:
    """Fourth-order rows repairing two-cycle pairs: both diagonals plus one mixed."""
    rows = []
    for i, j in two_cycle_components(g):
        rows.extend([(i, i, i, i), (j, j, j, j), (i, i, i, j)])
    return rows


@dataclass
class TrialRecord:
    rank: int
    top_singular: float
    bottom_singular: float
    gap: float
    augmented: bool
    singular_values: tuple[float, ...] = ()


@dataclass
class LocalIdReport:
    verdict: str  # locally-identifiable | rank-deficient | not-identifiable | inconclusive
    n_edges: int
    generic_rank: int
    deficiency: int
    orders: tuple[int, ...]
    augmented: bool
    row_counts: dict[int, int] = field(default_factory=dict)
    trials: list[TrialRecord] = field(default_factory=list)
    reason: str = ""

    def to_json_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "n_edges": self.n_edges,
            "generic_rank": self.generic_rank,
            "deficiency": self.deficiency,
            "orders": list(self.orders),
            "augmented": self.augmented,
            "row_counts": {str(k): v for k, v in self.row_counts.items()},
            "reason": self.reason,
            "trials": [
                {
                    "rank": t.rank,
                    "top_singular": t.top_singular,
                    "bottom_singular": t.bottom_singular,
                    "gap": t.gap,
                    "augmented": t.augmented,
                }
                for t in self.trials
            ],
        }

    def singular_values_csv(self) -> str:
        lines = ["trial,augmented,rank,singular_values"]
        for idx, t in enumerate(self.trials):
            values = ";".join(repr(float(s)) for s in t.singular_values)
            lines.append(f"{idx},{int(t.augmented)},{t.rank},{values}")
        return "\n".join(lines) + "\n"


def local_identifiability_verdict(
    g: DirectedGraph, trials: int = 5, seed: int = 0, threads: int = 1
) -> LocalIdReport:
    """Sample-based generic-rank verdict for local identifiability.

    Each trial draws a stable parameter point (alternating between two
    magnitude scales) and measures the off-diagonal block rank at orders
    {2,3}; two-cycle pair components escalate to the fourth-order
    augmentation rows.  Any full-rank trial certifies the verdict.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    n_edges = len(g.edges)
    if g.isolated_vertices:
        return LocalIdReport(
            verdict="not-identifiable",
            n_edges=n_edges,
            generic_rank=0,
            deficiency=n_edges,
            orders=(2, 3),
            augmented=False,
            reason=(
                f"isolated vertices {g.isolated_vertices}: one more parameter "
                "than available equations at every order"
            ),
        )
    needs_augment = bool(two_cycle_components(g))
    extra_rows = augmentation_rows(g) if needs_augment else None

    def run_trial(trial: int) -> TrialRecord:
        radius = 0.45 if trial % 2 == 0 else 0.85
        a = sample_stable_matrix(g, seed=seed * 1000 + trial, target_radius=radius)
        rng = np.random.default_rng(seed * 1000 + trial + 7)
        orders = (2, 3)
        mj = build_modified_jacobian(g, a, random_omegas(rng, g.p, orders), orders)
        rank, sing = offdiag_rank(mj)
        augmented = False
        if rank < n_edges and needs_augment:
            orders = (2, 3, 4)
            mj = build_modified_jacobian(
                g, a, random_omegas(rng, g.p, orders), orders, order4_rows=extra_rows
            )
            rank, sing = offdiag_rank(mj)
            augmented = True
        nonzero = sing[sing > 0]
        gap = float(nonzero[0] / nonzero[-1]) if len(nonzero) else np.inf
        return TrialRecord(
            rank=rank,
            top_singular=float(sing[0]) if len(sing) else 0.0,
            bottom_singular=float(sing[-1]) if len(sing) else 0.0,
            gap=gap,
            augmented=augmented,
            singular_values=tuple(float(s) for s in sing),
        )

    # trials are independent; reduction order stays deterministic either way
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_trial, range(trials)))
    else:
        records = [run_trial(trial) for trial in range(trials)]
    best_rank = max(r.rank for r in records)

    used_orders = (2, 3, 4) if any(r.augmented for r in records) else (2, 3)
    row_counts = {
        n: comb(g.p + n - 1, n) if n < 4 else 3 * len(two_cycle_components(g))
        for n in used_orders
    }
    deficiency = n_edges - best_rank
    if deficiency == 0:
        verdict = "locally-identifiable"
        reason = "a full-rank witness certifies generic full rank"
    else:
        unanimous = all(r.rank == best_rank for r in records)
        wide_gap = all(
            r.gap >= GAP_STRUCTURAL or np.isinf(r.gap) for r in records
        )
        if unanimous and wide_gap:
            verdict = "rank-deficient"
            reason = f"all trials agree on deficiency {deficiency} with a wide gap"
        else:
            verdict = "inconclusive"
            reason = "trials disagree or sit near the rank threshold"
    return LocalIdReport(
        verdict=verdict,
        n_edges=n_edges,
        generic_rank=best_rank,
        deficiency=deficiency,
        orders=used_orders,
        augmented=any(r.augmented for r in records),
        row_counts=row_counts,
        trials=records,
        reason=reason,
    )
