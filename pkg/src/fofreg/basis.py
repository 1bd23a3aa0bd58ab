"""Grids, quadrature weights, B-spline bases, and roughness penalties.

Everything downstream (design assembly, diagnostics, the simulation
harness) is built on the types defined here. All objects are immutable
after construction and validate their own invariants, so they can be
shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

#: Relative tolerance below which singular values / eigenvalues are
#: treated as zero, repo-wide.
RANK_RTOL = 1e-10


def numerical_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Number of singular values above ``rtol`` times the largest."""
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-major (Fortran) vectorization, the ordering used throughout."""
    return np.asarray(mat).ravel(order="F")


def unvec(v: np.ndarray, n_rows: int, n_cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((n_rows, n_cols), order="F")


@dataclass(frozen=True, eq=False)
class Grid:
    """Ordered evaluation locations inside a closed interval.

    Attributes
    ----------
    points : ndarray
        Strictly increasing locations, all inside ``interval``.
    interval : (float, float)
        The closed interval ``[a, b]`` the grid discretizes.
    """

    points: np.ndarray
    interval: tuple[float, float]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        a, b = float(self.interval[0]), float(self.interval[1])
        object.__setattr__(self, "interval", (a, b))
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not np.all(np.diff(pts) > 0):
            raise ValueError("grid points must be strictly increasing")
        if a >= b:
            raise ValueError("degenerate interval")
        if pts[0] < a or pts[-1] > b:
            raise ValueError("grid points outside the interval")

    def __len__(self) -> int:
        return self.points.size


def make_equidistant_grid(n: int, interval: tuple[float, float]) -> Grid:
    """``n`` equally spaced points including both interval endpoints."""
    if n < 2:
        raise ValueError("need n >= 2 grid points")
    a, b = float(interval[0]), float(interval[1])
    if a >= b:
        raise ValueError("degenerate interval")
    return Grid(np.linspace(a, b, n), (a, b))


@dataclass(frozen=True, eq=False)
class QuadratureWeights:
    """Trapezoid-style integration weights for a grid.

    ``w`` has one positive entry per grid point and sums to the interval
    length, so ``w @ f(points)`` approximates the integral of ``f``.
    """

    w: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)
        if w.shape != (len(self.grid),):
            raise ValueError("one weight per grid point required")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        a, b = self.grid.interval
        if abs(w.sum() - (b - a)) > 1e-12 * (b - a):
            raise ValueError("weights must sum to the interval length")

    @property
    def matrix(self) -> np.ndarray:
        """The diagonal weight matrix ``diag(w)``."""
        return np.diag(self.w)


def quadrature_weights(grid: Grid) -> QuadratureWeights:
    """Trapezoid weights on ``grid``, with boundary gaps to the interval
    endpoints assigned to the first and last point."""
    s = grid.points
    a, b = grid.interval
    w = np.empty(s.size)
    w[1:-1] = 0.5 * (s[2:] - s[:-2])
    w[0] = 0.5 * (s[1] - s[0]) + (s[0] - a)
    w[-1] = 0.5 * (s[-1] - s[-2]) + (b - s[-1])
    return QuadratureWeights(w, grid)


@dataclass(frozen=True, eq=False)
class BasisMatrix:
    """B-spline basis functions evaluated on a grid.

    Rows sum to one (partition of unity) and the matrix has full column
    rank whenever the grid has at least ``K`` points; both facts are
    checked at construction.
    """

    values: np.ndarray
    K: int
    degree: int
    knots: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "knots", np.asarray(self.knots, dtype=float))
        if v.shape != (len(self.grid), self.K):
            raise ValueError("basis matrix shape mismatch")
        if np.max(np.abs(v.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("basis rows must sum to 1 (partition of unity)")
        if len(self.grid) >= self.K and numerical_rank(v) < self.K:
            raise ValueError("basis matrix is column rank deficient")


def bspline_basis(grid: Grid, K: int, degree: int = 3) -> BasisMatrix:
    """Evaluate ``K`` B-splines of the given degree on ``grid``.

    Knots are equally spaced over the grid's interval with coincident
    boundary knots (an open/clamped knot vector).
    """
    if K < degree + 1:
        raise ValueError("need K >= degree + 1 basis functions")
    if len(grid) < K:
        raise ValueError("grid too coarse for K basis functions")
    a, b = grid.interval
    knots = np.concatenate(
        [np.full(degree, a), np.linspace(a, b, K - degree + 1), np.full(degree, b)]
    )
    values = BSpline.design_matrix(grid.points, knots, degree).toarray()
    return BasisMatrix(values, K, degree, knots, grid)


@dataclass(frozen=True, eq=False)
class MarginalPenalty:
    """Symmetric positive semi-definite roughness penalty for one margin.

    ``nullspace_dim`` is derived from the spectrum at construction (count
    of eigenvalues below :data:`RANK_RTOL` relative to the largest).
    """

    matrix: np.ndarray
    kind: str
    nullspace_dim: int = field(init=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("penalty must be square")
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if np.abs(m - m.T).max(initial=0.0) > 1e-12 * scale:
            raise ValueError("penalty must be symmetric")
        evals = np.linalg.eigvalsh(m)
        top = evals[-1] if evals.size else 0.0
        if top > 0 and evals[0] < -1e-10 * top:
            raise ValueError("penalty must be positive semi-definite")
        ndim = int(np.count_nonzero(evals < RANK_RTOL * max(top, 0.0))) if top > 0 else m.shape[0]
        object.__setattr__(self, "nullspace_dim", ndim)

    @property
    def K(self) -> int:
        return self.matrix.shape[0]


def difference_penalty(K: int, order: int) -> MarginalPenalty:
    """Squared forward-difference penalty of the given order.

    The null space has dimension ``order`` (constants for order 1,
    constants and arithmetic sequences for order 2).
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if K <= order:
        raise ValueError("need K > order")
    delta = np.diff(np.eye(K), order, axis=0)
    return MarginalPenalty(delta.T @ delta, f"difference-order-{order}")


@dataclass(frozen=True, eq=False)
class TensorPenalty:
    """Anisotropic tensor-product penalty for a coefficient matrix.

    For a K_s x K_t coefficient matrix stacked column-major into a
    vector, ``assembled`` equals
    ``lambda_s * kron(I_Kt, P_s) + lambda_t * kron(P_t, I_Ks)``.
    """

    P_s: MarginalPenalty
    P_t: MarginalPenalty
    lambda_s: float
    lambda_t: float
    assembled: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "lambda_s", float(self.lambda_s))
        object.__setattr__(self, "lambda_t", float(self.lambda_t))
        if self.lambda_s < 0 or self.lambda_t < 0:
            raise ValueError("smoothing parameters must be non-negative")
        ks, kt = self.P_s.K, self.P_t.K
        assembled = self.lambda_s * np.kron(np.eye(kt), self.P_s.matrix)
        assembled += self.lambda_t * np.kron(self.P_t.matrix, np.eye(ks))
        object.__setattr__(self, "assembled", assembled)

    @property
    def K_s(self) -> int:
        return self.P_s.K

    @property
    def K_t(self) -> int:
        return self.P_t.K


def assemble_tensor_penalty(
    P_s: MarginalPenalty, P_t: MarginalPenalty, lambda_s: float, lambda_t: float
) -> TensorPenalty:
    """Combine marginal penalties into the tensor-product penalty."""
    return TensorPenalty(P_s, P_t, float(lambda_s), float(lambda_t))


@dataclass(frozen=True, eq=False)
class BasisSystem:
    """Marginal bases plus their quadrature weights for both directions."""

    s_basis: BasisMatrix
    t_basis: BasisMatrix
    s_weights: QuadratureWeights
    t_weights: QuadratureWeights
