"""Steady-state cumulants of sparse VAR(1) processes.

The process ``X_t = A X_{t-1} + eps_t`` with Schur stable ``A`` and
independent diagonal noise has stationary cumulant tensors ``T_n`` solving
the order-n discrete Lyapunov equation

    T_n = T_n x_1 A ... x_n A + Omega_n.

This module solves that equation exactly by the vectorized Kronecker form,
cross-checks it with the truncated mode-product series, recovers the noise
cumulants from a solution, and simulates the process for empirical
estimates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .graphs import DirectedGraph
from .tensors import (
    DimensionMismatch,
    SymmetricTensor,
    k_mode_product,
    tucker_product,
)

# rho(A) must stay below 1 - STABILITY_MARGIN to certify stability
STABILITY_MARGIN = 1e-9

# dense Kronecker solves are capped at p^n <= 8^4 unknowns
MAX_VERTICES = 8
MAX_ORDER = 4


class SingularSystem(Exception):
    """The vectorized Lyapunov system is numerically singular."""


class UnstableMatrix(Exception):
    """Spectral radius certificate failed (rho >= 1 - margin)."""


def spectral_radius(a: np.ndarray) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


@dataclass(frozen=True)
class DiagonalCumulant:
    """Order-n noise cumulant stored as its p diagonal entries."""

    order: int
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        if self.order < 2:
            raise ValueError("cumulant order must be at least 2")
        if self.w.ndim != 1:
            raise ValueError("diagonal entries must form a vector")

    @property
    def p(self) -> int:
        return len(self.w)

    def to_tensor(self) -> SymmetricTensor:
        return SymmetricTensor.diagonal(self.w, self.order)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.p,) * self.order)
        for i, wi in enumerate(self.w):
            dense[(i,) * self.order] = wi
        return dense


class ParameterMatrix:
    """Dense p x p matrix respecting a graph's sparsity pattern.

    The entry convention is ``entries[j, i]`` for the edge ``i -> j`` (row
    index = edge target).  Off-pattern entries must be exactly zero.
    """

    def __init__(self, g: DirectedGraph, entries: np.ndarray):
        entries = np.array(entries, dtype=float)  # own copy; frozen below
        if entries.shape != (g.p, g.p):
            raise DimensionMismatch(
                f"entries must be {g.p}x{g.p}, got {entries.shape}"
            )
        for j in range(g.p):
            for i in range(g.p):
                if entries[j, i] != 0.0 and (i, j) not in g.edges:
                    raise ValueError(
                        f"entry ({j},{i}) is nonzero but edge {i}->{j} is absent"
                    )
        self.g = g
        self.entries = entries
        self.entries.setflags(write=False)
        self._radius: float | None = None

    @property
    def p(self) -> int:
        return self.g.p

    def radius(self) -> float:
        if self._radius is None:
            self._radius = spectral_radius(self.entries)
        return self._radius

    @property
    def stable(self) -> bool:
        return self.radius() < 1.0 - STABILITY_MARGIN

    def require_stable(self) -> None:
        if not self.stable:
            raise UnstableMatrix(
                f"spectral radius {self.radius():.6g} is not below "
                f"{1.0 - STABILITY_MARGIN}"
            )

    def negated(self) -> "ParameterMatrix":
        return ParameterMatrix(self.g, -self.entries)

    def __repr__(self) -> str:
        return f"ParameterMatrix(p={self.p}, radius={self.radius():.4g})"


def _check_size(p: int, order: int) -> None:
    if p > MAX_VERTICES or order > MAX_ORDER:
        raise DimensionMismatch(
            f"dense solve capped at p<={MAX_VERTICES}, order<={MAX_ORDER}; "
            f"got p={p}, order={order}"
        )


def solve_cumulant(a: ParameterMatrix, omega: DiagonalCumulant) -> SymmetricTensor:
    """Exact steady-state cumulant via the vectorized Kronecker solve.

    Solves ``vec(T) = (I - A (x) ... (x) A)^{-1} vec(Omega)`` densely, then
    folds back to canonical storage; the fold records the symmetry defect of
    the raw solution on the result.
    """
    p, n = a.p, omega.order
    if omega.p != p:
        raise DimensionMismatch("noise cumulant dimension does not match matrix")
    _check_size(p, n)
    a.require_stable()
    kron = reduce(np.kron, [a.entries] * n)
    lhs = np.eye(p**n) - kron
    try:
        flat = np.linalg.solve(lhs, omega.to_dense().reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    return SymmetricTensor.from_dense(flat.reshape((p,) * n))


def _diagonal_tucker(w: np.ndarray, b: np.ndarray, order: int) -> np.ndarray:
    """Dense Tucker product of a diagonal tensor diag(w) with matrix b."""
    letters = "ijkl"[:order]
    spec = ",".join(f"{c}r" for c in letters) + ",r->" + letters
    return np.einsum(spec, *([b] * order), w)


def default_series_terms(a: ParameterMatrix, omega: DiagonalCumulant) -> int:
    """Truncation length: first L with rho^(n L) * ||Omega|| < 1e-14, capped at 500."""
    rho = a.radius()
    norm = float(np.max(np.abs(omega.w)))
    if rho == 0.0 or norm == 0.0:
        return a.p + 1
    length = 1
    while rho ** (omega.order * length) * norm >= 1e-14 and length < 500:
        length += 1
    return length


def series_cumulant(
    a: ParameterMatrix, omega: DiagonalCumulant, terms: int | None = None
) -> SymmetricTensor:
    """Partial sum of ``sum_i Omega x_1 A^i ... x_n A^i``.

    The independent oracle for :func:`solve_cumulant`; with ``terms=None``
    the truncation length follows the geometric tail bound.
    """
    p, n = a.p, omega.order
    if omega.p != p:
        raise DimensionMismatch("noise cumulant dimension does not match matrix")
    if terms is None:
        a.require_stable()
        terms = default_series_terms(a, omega)
    if terms < 1:
        raise ValueError("series needs at least one term")
    acc = np.zeros((p,) * n)
    power = np.eye(p)
    for _ in range(terms):
        acc += _diagonal_tucker(omega.w, power, n)
        power = a.entries @ power
    return SymmetricTensor.from_dense(acc)


def recursive_residual(
    t: SymmetricTensor, a: ParameterMatrix, omega: DiagonalCumulant
) -> float:
    """Max-norm of ``T - (T x_1 A ... x_n A + Omega)``.

    Zero certifies that T solves the order-n discrete Lyapunov equation.
    """
    if t.order != omega.order or t.p != a.p or omega.p != a.p:
        raise DimensionMismatch("orders or dimensions do not match")
    dense = t.to_dense()
    resid = dense - tucker_product(dense, a.entries) - omega.to_dense()
    return float(np.max(np.abs(resid)))


def recover_noise(
    t: SymmetricTensor, a: ParameterMatrix
) -> tuple[DiagonalCumulant, float]:
    """Invert the recursion: ``Omega = T - T x_1 A ... x_n A``.

    Returns the diagonal together with the largest off-diagonal magnitude of
    the recovered tensor, which vanishes for model-consistent inputs.
    """
    if t.p != a.p:
        raise DimensionMismatch("tensor dimension does not match matrix")
    dense = t.to_dense()
    omega_full = dense - tucker_product(dense, a.entries)
    diag = np.array([omega_full[(i,) * t.order] for i in range(t.p)])
    off = omega_full.copy()
    for i in range(t.p):
        off[(i,) * t.order] = 0.0
    defect = float(np.max(np.abs(off))) if off.size else 0.0
    return DiagonalCumulant(t.order, diag), defect


def sample_stable_matrix(
    g: DirectedGraph, seed: int, target_radius: float = 0.6
) -> ParameterMatrix:
    """Random certified-stable matrix on the graph's sparsity pattern.

    Entries are drawn uniformly from [-1,1] excluding (-0.05, 0.05), then the
    matrix is rescaled to the target spectral radius.  Patterns whose draw is
    nilpotent keep radius zero, and diagonal-only patterns already inside the
    target are left unscaled.
    """
    if not 0.0 < target_radius < 1.0:
        raise ValueError("target radius must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    entries = np.zeros((g.p, g.p))
    for i, j in g.sorted_edges:
        magnitude = rng.uniform(0.05, 1.0)
        sign = 1.0 if rng.uniform() < 0.5 else -1.0
        entries[j, i] = sign * magnitude
    rho = spectral_radius(entries)
    diagonal_only = all(i == j for i, j in g.edges)
    if rho > 1e-14 and not (diagonal_only and rho < target_radius):
        entries *= target_radius / rho
    pm = ParameterMatrix(g, entries)
    pm.require_stable()
    return pm


def forward_stack(
    a: ParameterMatrix, omegas: dict[int, DiagonalCumulant]
) -> dict[int, SymmetricTensor]:
    """Solve the Lyapunov equation at every supplied order."""
    return {n: solve_cumulant(a, omega) for n, omega in sorted(omegas.items())}


def random_omegas(
    rng: np.random.Generator, p: int, orders=(2, 3, 4)
) -> dict[int, DiagonalCumulant]:
    """Model-valid noise draws: even orders positive, odd orders sign-mixed.

    Magnitudes are uniform in [0.5, 2], matching the admissible parameter
    region (even-order diagonals positive, odd-order nonzero).
    """
    omegas = {}
    for n in orders:
        magnitude = rng.uniform(0.5, 2.0, p)
        if n % 2 == 1:
            magnitude = magnitude * np.where(rng.uniform(size=p) < 0.5, -1.0, 1.0)
        omegas[n] = DiagonalCumulant(n, magnitude)
    return omegas


# ---------------------------------------------------------------------------
# simulation and k-statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Independent diagonal noise: per-coordinate scale and distribution kind.

    Kinds: ``gaussian`` (scale = standard deviation), ``centered_exponential``
    (scale * (Exp(1) - 1)), and ``zero``.
    """

    kind: str
    scale: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=float))
        if self.kind not in ("gaussian", "centered_exponential", "zero"):
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @property
    def p(self) -> int:
        return len(self.scale)

    def cumulant(self, order: int) -> DiagonalCumulant:
        """Exact noise cumulant of the given order."""
        s = self.scale
        if self.kind == "zero":
            w = np.zeros_like(s)
        elif self.kind == "gaussian":
            w = s**2 if order == 2 else np.zeros_like(s)
        else:  # centered exponential: all cumulants of Exp(1) equal (n-1)!
            factorial = 1
            for m in range(1, order):
                factorial *= m
            w = factorial * s**order
        return DiagonalCumulant(order, w)

    def draw(self, rng: np.random.Generator, steps: int) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros((steps, self.p))
        if self.kind == "gaussian":
            return rng.standard_normal((steps, self.p)) * self.scale
        return (rng.exponential(1.0, (steps, self.p)) - 1.0) * self.scale


def _k_statistics(window: np.ndarray, order: int) -> np.ndarray:
    """Dense k-statistic tensor (unbiased covariance / third k-statistic)."""
    n = window.shape[0]
    centered = window - window.mean(axis=0)
    if order == 2:
        return centered.T @ centered / (n - 1)
    if order == 3:
        m3 = np.einsum("ti,tj,tk->ijk", centered, centered, centered) / n
        return m3 * n * n / ((n - 1) * (n - 2))
    raise ValueError("sample cumulants are implemented for orders 2 and 3")


@dataclass(frozen=True)
class SimulationEstimate:
    estimate: SymmetricTensor
    stderr: SymmetricTensor
    nsamples: int


def simulate_and_estimate(
    a: ParameterMatrix,
    noise: NoiseSpec,
    t_max: int,
    burn_in: int,
    order: int,
    seed: int,
    batches: int = 40,
) -> SimulationEstimate:
    """Simulate the VAR(1) recursion and estimate a steady-state cumulant.

    Runs ``burn_in + t_max`` steps, keeps the last ``t_max``, and returns the
    k-statistic of the window.  Standard errors come from batch means, which
    absorb the serial correlation of the trajectory.
    """
    if order not in (2, 3):
        raise ValueError("simulation estimates support orders 2 and 3")
    if noise.p != a.p:
        raise DimensionMismatch("noise dimension does not match matrix")
    a.require_stable()
    rng = np.random.default_rng(seed)
    steps = burn_in + t_max
    eps = noise.draw(rng, steps)
    x = np.zeros(a.p)
    window = np.empty((t_max, a.p))
    mat = a.entries
    for step in range(steps):
        x = mat @ x + eps[step]
        if step >= burn_in:
            window[step - burn_in] = x
    estimate = _k_statistics(window, order)
    batch_stats = np.stack(
        [_k_statistics(chunk, order) for chunk in np.array_split(window, batches)]
    )
    stderr = batch_stats.std(axis=0, ddof=1) / np.sqrt(batches)
    return SimulationEstimate(
        estimate=SymmetricTensor.from_dense(estimate),
        stderr=SymmetricTensor.from_dense(stderr),
        nsamples=t_max,
    )
