"""Identifiability diagnostics for function-on-function designs.

The central question: does the coefficient basis admit directions that
are simultaneously invisible to the data (kernel of the covariate's
empirical covariance) and free under the roughness penalty (its null
space)? Such overlap makes even the penalized problem non-unique. The
measures here quantify that overlap and drive the flag rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import RANK_RTOL, BasisMatrix, MarginalPenalty, QuadratureWeights
from .fpc import FunctionalSample

#: Condition-number cutoff for declaring the partial design numerically
#: rank deficient.
KAPPA_THRESHOLD = 1e6
#: Overlap cutoff: values at or above this indicate an (at least)
#: one-dimensional subspace common to both kernels.
OVERLAP_THRESHOLD = 0.95


def _left_singular_basis(a: np.ndarray) -> np.ndarray:
    """Left singular vectors with positive singular values (repo tolerance)."""
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0))
    r = int(np.count_nonzero(s > RANK_RTOL * s[0]))
    return u[:, :r]


def span_overlap(A: np.ndarray, B: np.ndarray) -> float:
    """Trace measure of overlap between the column spans of two matrices.

    Equals the squared Frobenius norm of ``V_A' V_B`` where ``V_Z`` holds
    the left singular vectors of ``Z``. Symmetric in its arguments,
    bounded by ``[0, min(rank A, rank B)]``, attaining the upper bound iff
    one span contains the other and zero iff the spans are orthogonal.
    Empty matrices give 0.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[0] != B.shape[0]:
        raise ValueError("matrices must share their row count")
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0.0
    va = _left_singular_basis(A)
    vb = _left_singular_basis(B)
    if va.shape[1] == 0 or vb.shape[1] == 0:
        return 0.0
    return float(np.sum((va.T @ vb) ** 2))


def orthogonal_complement(A: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of ``A``'s column space.

    Taken from the null side of the full SVD; a full-row-rank input
    yields a matrix with zero columns.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    if A.shape[1] == 0:
        return np.eye(n)
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    r = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
    return u[:, r:]


def penalty_nullspace_basis(P: MarginalPenalty) -> np.ndarray:
    """Orthonormal eigenvectors of the penalty with (numerically) zero eigenvalue."""
    evals, evecs = np.linalg.eigh(P.matrix)
    top = evals[-1]
    if top <= 0:
        return evecs
    return evecs[:, evals < RANK_RTOL * top]


def kernel_overlap_measure(
    X: FunctionalSample,
    weights: QuadratureWeights,
    B_s: BasisMatrix,
    P_s: MarginalPenalty,
) -> float:
    """Overlap between the covariate's empirical null directions and the
    unpenalized function space, evaluated on the observation grid.

    Computes the span overlap of the orthogonal complement of the curve
    space with ``W B_s`` applied to the penalty null-space basis. A full
    rank penalty has an empty null space and returns 0.
    """
    nullbasis = penalty_nullspace_basis(P_s)
    if nullbasis.shape[1] == 0:
        return 0.0
    comp = orthogonal_complement(X.values.T)
    if comp.shape[1] == 0:
        return 0.0
    target = weights.w[:, None] * (B_s.values @ nullbasis)
    return span_overlap(comp, target)


def condition_number(D_s: np.ndarray) -> float:
    """Condition number of ``D_s' D_s`` from the singular values of ``D_s``.

    Returns ``inf`` when the smallest singular value falls below the
    repo-wide rank tolerance (numerical rank deficiency), including for
    the zero matrix.
    """
    D_s = np.atleast_2d(np.asarray(D_s, dtype=float))
    s = np.linalg.svd(D_s, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return math.inf
    if s.size < D_s.shape[1] or s[-1] < RANK_RTOL * s[0]:
        return math.inf
    return float((s[0] / s[-1]) ** 2)


def overlap_constraint_basis(
    X: FunctionalSample,
    weights: QuadratureWeights,
    B_s: BasisMatrix,
    P_nullbasis: np.ndarray,
) -> np.ndarray:
    """Orthonormal basis (grid evaluations) of the kernel overlap.

    Projects the unpenalized function directions ``W B_s P_nullbasis``
    onto the orthogonal complement of the curve space via the QR
    factorization of that complement; the left singular vectors with
    positive singular values span the intersection and become the
    constraint directions for a constrained fit.
    """
    P_nullbasis = np.atleast_2d(np.asarray(P_nullbasis, dtype=float))
    S = len(X.grid)
    if P_nullbasis.shape[1] == 0:
        return np.zeros((S, 0))
    comp = orthogonal_complement(X.values.T)
    if comp.shape[1] == 0:
        return np.zeros((S, 0))
    q, _ = np.linalg.qr(comp)
    target = weights.w[:, None] * (B_s.values @ P_nullbasis)
    projected = q @ (q.T @ target)
    return _left_singular_basis(projected)


@dataclass(frozen=True, eq=False)
class DiagnosticReport:
    """Outcome of the identifiability checks for one model specification."""

    kappa: float
    overlap: float
    flagged: bool
    constraint_basis: np.ndarray
    kappa_threshold: float = KAPPA_THRESHOLD
    overlap_threshold: float = OVERLAP_THRESHOLD
    rank_rtol: float = RANK_RTOL

    @property
    def n_constraints(self) -> int:
        return self.constraint_basis.shape[1]

    def to_dict(self) -> dict:
        """JSON-ready summary; infinity is serialized as the string "inf"."""
        return {
            "kappa": "inf" if math.isinf(self.kappa) else self.kappa,
            "overlap": self.overlap,
            "flagged": self.flagged,
            "n_constraints": self.n_constraints,
            "thresholds": {
                "kappa": self.kappa_threshold,
                "overlap": self.overlap_threshold,
            },
        }


def diagnose(
    X: FunctionalSample,
    weights: QuadratureWeights,
    B_s: BasisMatrix,
    P_s: MarginalPenalty,
    kappa_threshold: float = KAPPA_THRESHOLD,
    overlap_threshold: float = OVERLAP_THRESHOLD,
) -> DiagnosticReport:
    """Run both identifiability checks and apply the flag rule.

    A specification is flagged as persistently non-identifiable when the
    partial design ``X W B_s`` is numerically rank deficient (condition
    number at or above ``kappa_threshold``) and the kernel overlap
    measure reaches ``overlap_threshold``. When flagged, the constraint
    basis spanning the overlap is included in the report.
    """
    d_s = (X.values * weights.w) @ B_s.values
    kappa = condition_number(d_s)
    overlap = kernel_overlap_measure(X, weights, B_s, P_s)
    flagged = bool(kappa >= kappa_threshold and overlap >= overlap_threshold)
    if flagged:
        basis = overlap_constraint_basis(X, weights, B_s, penalty_nullspace_basis(P_s))
    else:
        basis = np.zeros((len(X.grid), 0))
    return DiagnosticReport(
        kappa=kappa,
        overlap=overlap,
        flagged=flagged,
        constraint_basis=basis,
        kappa_threshold=kappa_threshold,
        overlap_threshold=overlap_threshold,
    )
