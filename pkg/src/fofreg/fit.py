"""Design assembly and penalized least-squares fitting.

The full design is the Kronecker product of the response-side basis with
the integrated covariate matrix; it is never materialized for solving.
Normal equations are assembled from the small Gram factors and solved by
Cholesky, with a condition check that refuses (rather than regularizes
away) genuinely singular systems - the signature of a persistently
non-identifiable specification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import (
    RANK_RTOL,
    BasisMatrix,
    Grid,
    MarginalPenalty,
    QuadratureWeights,
    TensorPenalty,
    assemble_tensor_penalty,
    unvec,
    vec,
)
from .diagnostics import DiagnosticReport, diagnose
from .fpc import FunctionalSample

#: Largest dense design (in matrix entries) tests and oracles may build.
DENSE_ENTRY_CAP = 10**7

DEFAULT_LAMBDA_GRID = np.logspace(-4, 4, 7)


class NonIdentifiableError(RuntimeError):
    """Raised when the penalized normal equations are numerically singular,
    i.e. the data plus penalty do not determine a unique coefficient
    surface. Carries the diagnostic report when one can be computed.
    ``deep`` marks a machine-zero eigenvalue: an exact kernel overlap,
    which no choice of positive smoothing parameters can repair."""

    def __init__(
        self,
        message: str,
        report: DiagnosticReport | None = None,
        deep: bool = False,
    ):
        super().__init__(message)
        self.report = report
        self.deep = deep


@dataclass(eq=False)
class TensorDesign:
    """Factorized design for the discretized function-on-function model.

    Holds the integrated covariate factor ``D_s = X W B_s``, the
    response-side basis, and cached SVDs of both factors split into
    positive and null parts at the repo rank tolerance. The full design
    ``kron(B_t, D_s)`` is only ever materialized through
    :meth:`dense_design`, which enforces the entry cap.
    """

    ds: np.ndarray
    bt: np.ndarray
    bs: np.ndarray
    x: np.ndarray
    w: np.ndarray
    s_grid: Grid
    t_grid: Grid
    x_sample: FunctionalSample | None = None
    weights: QuadratureWeights | None = None
    s_basis: BasisMatrix | None = None
    ds_left: np.ndarray = field(init=False)
    ds_vals: np.ndarray = field(init=False)
    ds_right_pos: np.ndarray = field(init=False)
    ds_right_null: np.ndarray = field(init=False)
    bt_left: np.ndarray = field(init=False)
    bt_vals: np.ndarray = field(init=False)
    bt_right_pos: np.ndarray = field(init=False)
    bt_right_null: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        u, s, vt = np.linalg.svd(self.ds, full_matrices=True)
        r = int(np.count_nonzero(s > RANK_RTOL * s[0])) if s.size and s[0] > 0 else 0
        self.ds_left = u[:, :r]
        self.ds_vals = s[:r]
        self.ds_right_pos = vt[:r].T
        self.ds_right_null = vt[r:].T
        ut, st, vtt = np.linalg.svd(self.bt, full_matrices=False)
        rt = int(np.count_nonzero(st > RANK_RTOL * st[0])) if st.size and st[0] > 0 else 0
        self.bt_left = ut[:, :rt]
        self.bt_vals = st[:rt]
        self.bt_right_pos = vtt[:rt].T
        self.bt_right_null = vtt[rt:].T

    @property
    def n_curves(self) -> int:
        return self.ds.shape[0]

    @property
    def K_s(self) -> int:
        return self.ds.shape[1]

    @property
    def K_t(self) -> int:
        return self.bt.shape[1]

    @property
    def T(self) -> int:
        return self.bt.shape[0]

    @property
    def rank(self) -> int:
        """Rank of the full design: the product of the factor ranks."""
        return self.ds_vals.size * self.bt_vals.size

    def apply(self, theta: np.ndarray) -> np.ndarray:
        """Fitted-value matrix ``D_s Theta B_t'`` for a coefficient vector."""
        th = unvec(theta, self.K_s, self.K_t)
        return self.ds @ th @ self.bt.T

    def dense_design(self) -> np.ndarray:
        """Materialize ``kron(B_t, D_s)``; guarded by the entry cap."""
        entries = self.n_curves * self.T * self.K_s * self.K_t
        if entries > DENSE_ENTRY_CAP:
            raise RuntimeError(
                f"dense design would hold {entries} entries, above the cap {DENSE_ENTRY_CAP}"
            )
        return np.kron(self.bt, self.ds)


@dataclass(eq=False)
class FitResult:
    """A fitted coefficient surface with its smoothing state."""

    theta: np.ndarray
    surface: np.ndarray
    fitted: np.ndarray
    lambda_s: float
    lambda_t: float
    gcv: float
    edf: float
    penalty_s: str
    penalty_t: str
    constrained: bool
    n_constraints: int
    s_grid: Grid
    t_grid: Grid
    diagnostics: DiagnosticReport | None = None
    n_singular_skipped: int = 0

    def to_dict(self, include_theta: bool = False) -> dict:
        out = {
            "lambda_s": self.lambda_s,
            "lambda_t": self.lambda_t,
            "gcv": self.gcv,
            "edf": self.edf,
            "penalty_s": self.penalty_s,
            "penalty_t": self.penalty_t,
            "constrained": self.constrained,
            "n_constraints": self.n_constraints,
            "n_singular_skipped": self.n_singular_skipped,
            "smoother": "gcv-grid",
            "diagnostics": self.diagnostics.to_dict() if self.diagnostics else None,
        }
        if include_theta:
            out["theta"] = self.theta.tolist()
        return out


def assemble_design(
    X: FunctionalSample,
    weights: QuadratureWeights,
    B_s: BasisMatrix,
    B_t: BasisMatrix,
) -> TensorDesign:
    """Build the factorized design from covariate curves and both bases."""
    if len(X.grid) != len(B_s.grid) or not np.array_equal(X.grid.points, B_s.grid.points):
        raise ValueError("covariate and basis grids differ")
    if not np.array_equal(weights.grid.points, X.grid.points):
        raise ValueError("weights and covariate grids differ")
    ds = (X.values * weights.w) @ B_s.values
    return TensorDesign(
        ds=ds,
        bt=B_t.values,
        bs=B_s.values,
        x=X.values,
        w=weights.w,
        s_grid=X.grid,
        t_grid=B_t.grid,
        x_sample=X,
        weights=weights,
        s_basis=B_s,
    )


def _singularity_report(design: TensorDesign, P_s: MarginalPenalty) -> DiagnosticReport | None:
    if design.x_sample is None or design.weights is None or design.s_basis is None:
        return None
    return diagnose(design.x_sample, design.weights, design.s_basis, P_s)


#: dpocon reciprocal-condition band: estimates above it certify positive
#: definiteness at the repo tolerance, estimates below the reject level
#: certify singularity; in between the exact eigenvalue rule adjudicates.
_RCOND_ACCEPT = 1e-8
_RCOND_REJECT = 1e-13
#: Relative eigenvalue level treated as an exact (machine-zero) overlap.
_DEEP_RTOL = 1e-16


def _solve_normal(
    design: TensorDesign, penalty: TensorPenalty, y: np.ndarray
) -> tuple[np.ndarray, float, float]:
    """Solve the penalized normal equations; returns (theta, rss, edf).

    Cholesky with a cheap reciprocal-condition estimate on the fast path;
    borderline systems are adjudicated by the exact eigenvalue rule
    (singular iff the smallest eigenvalue falls below :data:`RANK_RTOL`
    relative to the largest) and refused.
    """
    gt = design.bt.T @ design.bt
    gs = design.ds.T @ design.ds
    gram = np.kron(gt, gs)
    a = gram + penalty.assembled

    def refuse(deep: bool):
        raise NonIdentifiableError(
            "penalized normal matrix is numerically singular "
            "(kernel overlap between design and penalty null spaces)",
            report=_singularity_report(design, penalty.P_s),
            deep=deep,
        )

    factor = None
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
        anorm = float(np.abs(a).sum(axis=0).max())
        rcond = scipy.linalg.lapack.dpocon(factor[0], anorm, uplo="L")[0]
        if not rcond > _RCOND_REJECT:
            refuse(deep=not rcond > 1e-18)
        suspicious = not rcond > _RCOND_ACCEPT
    except np.linalg.LinAlgError:
        suspicious = True
    if suspicious:
        evals = np.linalg.eigvalsh(a)
        if evals.size == 0 or evals[-1] <= 0 or evals[0] < RANK_RTOL * evals[-1]:
            refuse(deep=evals.size == 0 or evals[-1] <= 0 or evals[0] < _DEEP_RTOL * evals[-1])
    rhs = vec(design.ds.T @ y @ design.bt)
    if factor is not None:
        theta = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
        ainv_gram = scipy.linalg.cho_solve(factor, gram, check_finite=False)
        edf = float(np.trace(ainv_gram))
    else:
        # PD by the eigenvalue rule but Cholesky broke down: solve through
        # the eigendecomposition instead.
        evals, evecs = np.linalg.eigh(a)
        theta = evecs @ ((evecs.T @ rhs) / evals)
        edf = float(np.einsum("ji,jk,ki->", evecs, gram, evecs / evals))
    fitted = design.apply(theta)
    rss = float(np.sum((y - fitted) ** 2))
    return theta, rss, edf


def _gcv_score(rss: float, edf: float, n_obs: int) -> float:
    return n_obs * rss / (n_obs - edf) ** 2


def penalized_solve(design: TensorDesign, penalty: TensorPenalty, y: np.ndarray) -> FitResult:
    """Penalized least-squares fit at fixed smoothing parameters.

    Exploits the Kronecker structure of the normal equations; never forms
    the full design. Raises :class:`NonIdentifiableError` (with the
    diagnostic report attached when available) if the penalized system is
    singular.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (design.n_curves, design.T):
        raise ValueError("response matrix shape mismatch")
    if penalty.K_s != design.K_s or penalty.K_t != design.K_t:
        raise ValueError("penalty dimensions do not match the design")
    theta, rss, edf = _solve_normal(design, penalty, y)
    return FitResult(
        theta=theta,
        surface=design.bs @ unvec(theta, design.K_s, design.K_t) @ design.bt.T,
        fitted=design.apply(theta),
        lambda_s=penalty.lambda_s,
        lambda_t=penalty.lambda_t,
        gcv=_gcv_score(rss, edf, y.size),
        edf=edf,
        penalty_s=penalty.P_s.kind,
        penalty_t=penalty.P_t.kind,
        constrained=False,
        n_constraints=0,
        s_grid=design.s_grid,
        t_grid=design.t_grid,
    )


def _constraint_nullspace(C: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ke(C) via the full QR factorization of C'."""
    q_all, _ = np.linalg.qr(C.T, mode="complete")
    z = q_all[:, C.shape[0]:]
    if np.abs(C @ z).max(initial=0.0) > 1e-10 * max(1.0, np.abs(C).max()):
        raise ValueError("constraint matrix is rank deficient")
    return z


def _reduced_problem(
    design: TensorDesign, P_s: MarginalPenalty, z: np.ndarray
) -> tuple[TensorDesign, MarginalPenalty]:
    reduced = TensorDesign(
        ds=design.ds @ z,
        bt=design.bt,
        bs=design.bs @ z,
        x=design.x,
        w=design.w,
        s_grid=design.s_grid,
        t_grid=design.t_grid,
    )
    reduced_ps = MarginalPenalty(z.T @ P_s.matrix @ z, P_s.kind)
    return reduced, reduced_ps


def constrained_solve(
    design: TensorDesign,
    penalty: TensorPenalty,
    y: np.ndarray,
    constraint_basis: np.ndarray,
    weights: QuadratureWeights,
    B_s: BasisMatrix,
) -> FitResult:
    """Penalized fit with the surface forced orthogonal to the kernel overlap.

    Builds the constraint matrix ``C = V' diag(w) B_s`` from the overlap
    basis ``V``, reparameterizes the s-direction coefficients on an
    orthonormal basis of ke(C), solves the reduced penalized problem, and
    maps back. An empty constraint basis reduces to the plain fit.
    """
    cb = np.atleast_2d(np.asarray(constraint_basis, dtype=float))
    q = cb.shape[1]
    if q == 0:
        return penalized_solve(design, penalty, y)
    if q >= design.K_s:
        raise ValueError("at least as many constraints as s-direction coefficients")
    c = cb.T @ (weights.w[:, None] * B_s.values)
    z = _constraint_nullspace(c)
    reduced, reduced_ps = _reduced_problem(design, penalty.P_s, z)
    reduced_penalty = assemble_tensor_penalty(
        reduced_ps, penalty.P_t, penalty.lambda_s, penalty.lambda_t
    )
    gamma, rss, edf = _solve_normal(reduced, reduced_penalty, np.asarray(y, dtype=float))
    theta_mat = z @ unvec(gamma, z.shape[1], design.K_t)
    theta = vec(theta_mat)
    return FitResult(
        theta=theta,
        surface=design.bs @ theta_mat @ design.bt.T,
        fitted=design.ds @ theta_mat @ design.bt.T,
        lambda_s=penalty.lambda_s,
        lambda_t=penalty.lambda_t,
        gcv=_gcv_score(rss, edf, np.asarray(y).size),
        edf=edf,
        penalty_s=penalty.P_s.kind,
        penalty_t=penalty.P_t.kind,
        constrained=True,
        n_constraints=q,
        s_grid=design.s_grid,
        t_grid=design.t_grid,
    )


def select_smoothing(
    design: TensorDesign,
    P_s: MarginalPenalty,
    P_t: MarginalPenalty,
    y: np.ndarray,
    lambdas_s: np.ndarray | None = None,
    lambdas_t: np.ndarray | None = None,
    constraint_basis: np.ndarray | None = None,
    weights: QuadratureWeights | None = None,
    B_s: BasisMatrix | None = None,
) -> FitResult:
    """Grid-search the smoothing parameters by generalized cross-validation.

    Evaluates every (lambda_s, lambda_t) pair on a log grid (default 7x7
    over 1e-4..1e4), skipping numerically singular points, and returns
    the fit with the smallest GCV score; ties break toward heavier
    smoothing (larger lambda_s, then larger lambda_t). Raises
    :class:`NonIdentifiableError` when every grid point is singular.
    """
    lams_s = DEFAULT_LAMBDA_GRID if lambdas_s is None else np.asarray(lambdas_s, dtype=float)
    lams_t = DEFAULT_LAMBDA_GRID if lambdas_t is None else np.asarray(lambdas_t, dtype=float)
    y = np.asarray(y, dtype=float)
    use_constraints = constraint_basis is not None and np.size(constraint_basis) > 0
    if use_constraints:
        if weights is None:
            weights = design.weights
        if B_s is None:
            B_s = design.s_basis
        if weights is None or B_s is None:
            raise ValueError("constrained selection needs the weights and s-basis")

    best: FitResult | None = None
    skipped = 0
    last_error: NonIdentifiableError | None = None
    for lam_s in np.sort(lams_s):
        for lam_t in np.sort(lams_t):
            penalty = assemble_tensor_penalty(P_s, P_t, lam_s, lam_t)
            try:
                if use_constraints:
                    fit = constrained_solve(design, penalty, y, constraint_basis, weights, B_s)
                else:
                    fit = penalized_solve(design, penalty, y)
            except NonIdentifiableError as err:
                skipped += 1
                last_error = err
                if err.deep and lam_s > 0 and lam_t > 0:
                    # exact kernel overlap: singular at every positive
                    # smoothing level, no point scanning the rest
                    raise NonIdentifiableError(
                        "every smoothing-grid point produced a singular system "
                        "(exact kernel overlap)",
                        report=err.report,
                        deep=True,
                    ) from None
                continue
            if best is None or fit.gcv <= best.gcv:
                best = fit
    if best is None:
        raise NonIdentifiableError(
            "every smoothing-grid point produced a singular system",
            report=last_error.report if last_error else _singularity_report(design, P_s),
        )
    best.n_singular_skipped = skipped
    return best


def smoothest_representative(
    theta: np.ndarray, design: TensorDesign, penalty: TensorPenalty
) -> np.ndarray:
    """Minimum-penalty point on the hyperplane of coefficients with the
    same fitted values as ``theta``.

    The projection exists and is unique only when the design's null
    directions are all penalized; otherwise the projected quadratic form
    is singular and :class:`NonIdentifiableError` is raised.
    """
    theta = np.asarray(theta, dtype=float)
    if design.bt_right_null.shape[1] > 0:
        raise ValueError("response-side basis must have full column rank")
    u0 = np.kron(design.bt_right_pos, design.ds_right_null)
    if u0.shape[1] == 0:
        return theta.copy()
    p = penalty.assembled
    g = u0.T @ p @ u0
    evals = np.linalg.eigvalsh(g)
    if evals[-1] <= 0 or evals[0] < RANK_RTOL * evals[-1]:
        raise NonIdentifiableError(
            "no unique smoothest representative: penalty is blind to part "
            "of the design null space",
            report=_singularity_report(design, penalty.P_s),
        )
    correction = u0 @ np.linalg.solve(g, u0.T @ (p @ theta))
    return theta - correction


def predict(
    fit: FitResult,
    X_new: FunctionalSample,
    weights: QuadratureWeights,
    B_t: BasisMatrix,
) -> FunctionalSample:
    """Fitted response curves for new covariate curves on the training grids."""
    if not np.array_equal(X_new.grid.points, fit.s_grid.points):
        raise ValueError("new curves must be observed on the training s-grid")
    if B_t.values.shape[0] != fit.surface.shape[1]:
        raise ValueError("response basis grid does not match the fitted surface")
    y_hat = (X_new.values * weights.w) @ fit.surface
    return FunctionalSample(y_hat, fit.t_grid, "Yhat")
