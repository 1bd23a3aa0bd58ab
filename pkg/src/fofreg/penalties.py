"""Remedial penalties for non-identifiable specifications.

Three ways to empty the penalty null space so a unique penalized
solution always exists: a plain ridge, full-rank shrinkage of a
difference penalty (replace zero eigenvalues with a fraction of the
smallest positive one), and a FAME-style penalty built from the
covariate's own principal components weighted by inverse eigenvalues.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .basis import RANK_RTOL, BasisMatrix, MarginalPenalty, QuadratureWeights
from .fpc import FpcDecomposition

DEFAULT_EPSILON = 0.1
DEFAULT_FAME_FLOOR = 1e-10


@dataclass(frozen=True)
class PenaltyRecipe:
    """Penalty kind plus the tuning constants the remedies depend on."""

    kind: str
    epsilon: float = DEFAULT_EPSILON
    fame_floor: float = DEFAULT_FAME_FLOOR

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("shrinkage epsilon must be positive")
        if self.fame_floor <= 0:
            raise ValueError("eigenvalue floor factor must be positive")


def ridge_penalty(K: int) -> MarginalPenalty:
    """Identity penalty; no null space, hence never flagged."""
    if K < 1:
        raise ValueError("need K >= 1")
    return MarginalPenalty(np.eye(K), "ridge")


def fullrank_shrinkage(P: MarginalPenalty, epsilon: float = DEFAULT_EPSILON) -> MarginalPenalty:
    """Replace a penalty's zero eigenvalues with ``epsilon`` times its
    smallest positive one, keeping the eigenvectors and the rest of the
    spectrum untouched.

    A penalty that is already full rank is returned unchanged with a
    warning.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    evals, evecs = np.linalg.eigh(P.matrix)
    top = evals[-1]
    zero = evals < RANK_RTOL * top if top > 0 else np.ones_like(evals, dtype=bool)
    if not zero.any():
        warnings.warn("penalty already has full rank; shrinkage is a no-op", stacklevel=2)
        return P
    positive = evals[~zero]
    if positive.size == 0:
        raise ValueError("penalty has no positive eigenvalues to shrink towards")
    shrunk = np.where(zero, epsilon * positive.min(), evals)
    matrix = (evecs * shrunk) @ evecs.T
    return MarginalPenalty(0.5 * (matrix + matrix.T), "fullrank-shrinkage")


def fame_penalty(
    decomp: FpcDecomposition,
    B_s: BasisMatrix,
    weights: QuadratureWeights,
    floor: float = DEFAULT_FAME_FLOOR,
) -> MarginalPenalty:
    """Penalty from the covariate's principal components scaled by inverse
    eigenvalues.

    Sums ``nu_m^{-1} B_s' diag(w * phi_m^2) B_s`` over min(N, S)
    components, so coefficient variation in directions where the
    covariate varies little is penalized heavily. Components beyond the
    numerical rank have their (zero) eigenvalues floored at
    ``floor * nu_1``; their eigenfunctions come from the orthonormal
    completion stored in the decomposition.
    """
    if floor <= 0:
        raise ValueError("floor must be positive")
    if decomp.rank == 0:
        raise ValueError("empty decomposition: no components to build a penalty from")
    if len(decomp.weights.grid) != len(B_s.grid):
        raise ValueError("decomposition and basis live on different grids")
    n_components = min(decomp.n_curves, len(B_s.grid))
    n_floored = max(0, n_components - decomp.rank)
    phis = np.vstack([decomp.eigenvectors, decomp.complement[:n_floored]])
    nus = np.concatenate([decomp.eigenvalues, np.zeros(n_floored)])
    nus = np.maximum(nus, floor * decomp.eigenvalues[0])
    diag = (weights.w * phis**2 / nus[:, None]).sum(axis=0)
    matrix = B_s.values.T @ (diag[:, None] * B_s.values)
    return MarginalPenalty(0.5 * (matrix + matrix.T), "fame")


def unit_spectral_norm(P: MarginalPenalty) -> MarginalPenalty:
    """Rescale a penalty to unit largest eigenvalue.

    Rescaling only reparameterizes the smoothing parameter; it is needed
    before grid-searched smoothing when a penalty's natural scale (the
    FAME penalty's inverse eigenvalue floors reach ~1/floor) would push
    the useful smoothing range off a fixed grid.
    """
    top = float(np.linalg.eigvalsh(P.matrix)[-1])
    if top <= 0:
        raise ValueError("cannot rescale a zero penalty")
    return MarginalPenalty(P.matrix / top, P.kind)
