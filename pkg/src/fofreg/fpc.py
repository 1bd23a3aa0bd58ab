"""Functional samples, centering utilities, and empirical FPC decomposition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import RANK_RTOL, Grid, QuadratureWeights


@dataclass(frozen=True, eq=False)
class FunctionalSample:
    """N curves evaluated on a shared grid, one curve per row."""

    values: np.ndarray
    grid: Grid
    label: str = "X"

    def __post_init__(self) -> None:
        v = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", v)
        if v.shape[1] != len(self.grid):
            raise ValueError("column count must equal grid length")
        if not np.all(np.isfinite(v)):
            raise ValueError("curve values must be finite")

    @property
    def n_curves(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class FpcDecomposition:
    """Empirical functional principal components of a sample.

    ``eigenvectors`` holds the M retained component functions as rows,
    orthonormal under the quadrature inner product (or the plain
    Euclidean one when ``weighted`` is False). ``scores @ eigenvectors``
    reconstructs the input up to the discarded components. ``complement``
    holds the remaining rows of the full decomposition - an orthonormal
    completion of the curve span, needed by penalties built on the
    covariate's null directions.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    scores: np.ndarray
    rank: int
    weights: QuadratureWeights
    complement: np.ndarray
    weighted: bool = True
    label: str = "X"

    def __post_init__(self) -> None:
        phi = np.asarray(self.eigenvectors, dtype=float)
        if phi.shape[0] != self.rank:
            raise ValueError("rank must match the number of component rows")
        if self.rank:
            if not np.all(np.diff(self.eigenvalues) <= 0) or self.eigenvalues[-1] <= 0:
                raise ValueError("eigenvalues must be positive and sorted descending")
            gram = (phi * self._metric()) @ phi.T
            if np.abs(gram - np.eye(self.rank)).max() > 1e-10:
                raise ValueError("component rows must be orthonormal")

    def _metric(self) -> np.ndarray:
        return self.weights.w if self.weighted else np.ones(len(self.weights.grid))

    @property
    def n_curves(self) -> int:
        return self.scores.shape[0]


def center_mean_function(sample: FunctionalSample) -> FunctionalSample:
    """Subtract the cross-sectional mean curve, making every column mean zero."""
    if sample.n_curves < 2:
        raise ValueError("need at least 2 curves to estimate a mean function")
    centered = sample.values - sample.values.mean(axis=0, keepdims=True)
    return FunctionalSample(centered, sample.grid, sample.label)


def center_curvewise(
    sample: FunctionalSample, weights: QuadratureWeights
) -> tuple[FunctionalSample, np.ndarray]:
    """Remove each curve's quadrature-weighted mean level.

    Returns the centered sample and the removed per-curve means. After
    centering, ``sum_l w_l X_i(s_l) = 0`` for every curve, which puts the
    constant function into the empirical covariance's kernel.
    """
    w = weights.w
    means = (sample.values @ w) / w.sum()
    centered = sample.values - means[:, None]
    return FunctionalSample(centered, sample.grid, sample.label), means


def empirical_fpc(
    sample: FunctionalSample, weights: QuadratureWeights, weighted: bool = True
) -> FpcDecomposition:
    """Empirical FPC decomposition of a functional sample.

    By default the SVD is taken of ``X diag(w)^(1/2)`` so the component
    functions are orthonormal in the quadrature approximation of the L2
    inner product; ``weighted=False`` uses the plain SVD of ``X``.
    Components with singular value below :data:`RANK_RTOL` relative to
    the largest are dropped into ``complement``. Eigenvalues follow the
    ``sigma^2 / N`` convention.
    """
    if len(weights.grid) != len(sample.grid):
        raise ValueError("weights and sample live on different grids")
    x = sample.values
    n = x.shape[0]
    sqrt_w = np.sqrt(weights.w) if weighted else np.ones(x.shape[1])
    u, s, vt = np.linalg.svd(x * sqrt_w, full_matrices=True)
    rank = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    phi = vt[:rank] / sqrt_w
    complement = vt[rank:] / sqrt_w
    scores = u[:, :rank] * s[:rank]
    eigenvalues = s[:rank] ** 2 / n
    return FpcDecomposition(
        eigenvectors=phi,
        eigenvalues=eigenvalues,
        scores=scores,
        rank=rank,
        weights=weights,
        complement=complement,
        weighted=weighted,
        label=sample.label,
    )


def truncate_fpc(decomp: FpcDecomposition, K: int) -> FunctionalSample:
    """Reconstruct the sample from its leading ``K`` components (presmoothing)."""
    if not 1 <= K <= decomp.rank:
        raise ValueError("K must be between 1 and the decomposition rank")
    values = decomp.scores[:, :K] @ decomp.eigenvectors[:K]
    return FunctionalSample(values, decomp.weights.grid, decomp.label)
