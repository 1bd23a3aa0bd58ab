"""Data-generating processes for the simulation study.

Covariate curves are sampled from truncated Karhunen-Loeve expansions
with a configurable eigenfunction system; coefficient surfaces are drawn
from a smoothness prior; responses are the quadrature-discretized
integral signal plus Gaussian noise at a controlled signal-to-noise
ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisSystem,
    Grid,
    QuadratureWeights,
    assemble_tensor_penalty,
    bspline_basis,
    difference_penalty,
    quadrature_weights,
    unvec,
)
from .fpc import FunctionalSample

PROCESS_KINDS = (
    "PolyLin",
    "PolyExp",
    "FourierConst",
    "FourierExp",
    "Wiener",
    "BrownBridge",
    "Poly1Plus",
    "Poly2Plus",
    "PolyMinus1",
)


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Evaluated, quadrature-orthonormal eigenfunctions with their variances."""

    kind: str
    M: int
    functions: np.ndarray
    eigenvalues: np.ndarray
    weights: QuadratureWeights

    def __post_init__(self) -> None:
        if self.functions.shape[0] != self.M:
            raise ValueError("M must match the number of eigenfunction rows")
        if np.any(self.eigenvalues <= 0):
            raise ValueError("eigenvalues must be positive")
        gram = (self.functions * self.weights.w) @ self.functions.T
        if np.abs(gram - np.eye(self.M)).max() > 1e-8:
            raise ValueError("eigenfunctions must be orthonormal under the weights")


@dataclass(frozen=True, eq=False)
class CoefSurface:
    """A coefficient surface together with the spline representation it came from."""

    theta: np.ndarray
    values: np.ndarray
    gen_basis: BasisSystem


@dataclass(frozen=True)
class SimScenario:
    """One cell of the factorial simulation design."""

    process_kind: str
    M: int
    K_s: int
    penalty_kind: str
    snr: float
    gen_basis_size: int
    gen_lambda: float
    replicate_seed: int

    def __post_init__(self) -> None:
        if self.process_kind not in PROCESS_KINDS:
            raise ValueError(f"unknown process kind {self.process_kind!r}")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.gen_basis_size not in (4, 8):
            raise ValueError("generator basis size must be 4 or 8")
        if self.gen_lambda not in (0.1, 1, 1.0):
            raise ValueError("generator lambda must be 0.1 or 1")


def _poly_degrees(kind: str, m: int) -> list[int]:
    if kind in ("PolyLin", "PolyExp"):
        return list(range(m))
    if kind == "Poly1Plus":
        return list(range(1, m + 1))
    if kind == "Poly2Plus":
        return list(range(2, m + 2))
    # PolyMinus1: the full family without the linear member
    return [0] + list(range(2, m + 2))


def _orthonormalize(raw: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Gram-Schmidt rows of ``raw`` under the weighted inner product.

    Signs are fixed so each output row correlates positively with its
    input row, keeping analytic shapes recognizable.
    """
    a = raw.T * np.sqrt(w)[:, None]
    q, r = np.linalg.qr(a)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return (q * signs).T / np.sqrt(w)


def eigen_system(
    kind: str,
    M: int,
    grid: Grid,
    weights: QuadratureWeights,
    include_constant: bool = False,
) -> EigenSystem:
    """Build one of the study's eigenfunction systems on a grid.

    Polynomial kinds select members (by degree) of the full orthogonal
    polynomial family, so omitted degrees stay orthogonal to the span.
    Fourier, Wiener, and Brownian-bridge kinds evaluate their analytic
    forms and re-orthonormalize numerically under the quadrature weights.
    ``include_constant`` prepends the constant function for the Fourier
    kinds (excluded by default). Note that PolyMinus1 yields ``M + 1``
    functions: degrees 0 and 2..M+1.
    """
    if kind not in PROCESS_KINDS:
        raise ValueError(f"unknown process kind {kind!r}")
    if M < 1:
        raise ValueError("need at least one eigenfunction")
    s = grid.points
    a, b = grid.interval
    u = (s - a) / (b - a)
    w = weights.w

    if kind.startswith("Poly"):
        degrees = _poly_degrees(kind, M)
        if len(s) < max(degrees) + 1:
            raise ValueError("grid too coarse for the requested polynomial degrees")
        vander = np.vander(u, N=max(degrees) + 1, increasing=True)
        family = _orthonormalize(vander.T, w)
        functions = family[degrees]
    elif kind.startswith("Fourier"):
        rows = []
        if include_constant:
            rows.append(np.ones_like(u))
        freq = 1
        while len(rows) < M:
            rows.append(np.sqrt(2.0) * np.sin(2 * np.pi * freq * u))
            if len(rows) < M:
                rows.append(np.sqrt(2.0) * np.cos(2 * np.pi * freq * u))
            freq += 1
        functions = _orthonormalize(np.array(rows), w)
    elif kind == "Wiener":
        m = np.arange(1, M + 1)
        functions = _orthonormalize(
            np.sqrt(2.0) * np.sin(np.pi * (m[:, None] - 0.5) * u[None, :]), w
        )
    else:  # BrownBridge
        m = np.arange(1, M + 1)
        functions = _orthonormalize(
            np.sqrt(2.0) * np.sin(np.pi * m[:, None] * u[None, :]), w
        )

    count = functions.shape[0]
    if count > len(s):
        raise ValueError("more eigenfunctions than grid points")
    idx = np.arange(1, count + 1)
    if kind in ("PolyLin", "Poly1Plus", "Poly2Plus", "PolyMinus1"):
        eigenvalues = (count + 1 - idx) / count
    elif kind in ("PolyExp", "FourierExp"):
        eigenvalues = np.exp(-(idx - 1) / 2.0)
    elif kind == "FourierConst":
        eigenvalues = np.ones(count)
    elif kind == "Wiener":
        eigenvalues = (np.pi / 2.0 * (2 * idx + 1)) ** -2.0
    else:  # BrownBridge
        eigenvalues = 1.0 / (np.pi * idx)
    return EigenSystem(kind, count, functions, eigenvalues, weights)


def sample_covariate(system: EigenSystem, N: int, rng: np.random.Generator) -> FunctionalSample:
    """Draw N curves with independent Gaussian scores of variance ``nu_m``."""
    if N < 1:
        raise ValueError("need at least one curve")
    scores = rng.standard_normal((N, system.M)) * np.sqrt(system.eigenvalues)
    return FunctionalSample(scores @ system.functions, system.weights.grid, "X")


def sample_coef_surface(
    K_gen: int,
    lam: float,
    grid_s: Grid,
    grid_t: Grid,
    rng: np.random.Generator,
) -> CoefSurface:
    """Draw a random smooth coefficient surface on a cubic tensor spline basis.

    Coefficients are Gaussian with precision ``0.1 I + P(lam, lam)`` where
    P is the first-order-difference tensor penalty; larger ``lam`` yields
    smoother surfaces, while the ridge term keeps the draw proper.
    """
    bs = bspline_basis(grid_s, K_gen, 3)
    bt = bspline_basis(grid_t, K_gen, 3)
    pen = assemble_tensor_penalty(
        difference_penalty(K_gen, 1), difference_penalty(K_gen, 1), lam, lam
    )
    precision = 0.1 * np.eye(K_gen * K_gen) + pen.assembled
    chol = np.linalg.cholesky(precision)
    z = rng.standard_normal(K_gen * K_gen)
    theta_vec = np.linalg.solve(chol.T, z)
    theta = unvec(theta_vec, K_gen, K_gen)
    values = bs.values @ theta @ bt.values.T
    system = BasisSystem(bs, bt, quadrature_weights(grid_s), quadrature_weights(grid_t))
    return CoefSurface(theta, values, system)


def gen_response(
    X: FunctionalSample,
    beta: CoefSurface,
    weights: QuadratureWeights,
    snr: float,
    rng: np.random.Generator,
) -> tuple[FunctionalSample, FunctionalSample]:
    """Integrate curves against a coefficient surface and add noise.

    The signal is ``f_i(t_k) = sum_j w_j X_i(s_j) beta(s_j, t_k)``; noise
    is i.i.d. Gaussian with standard deviation ``sd(signal) / snr``.
    Returns ``(noisy response, noiseless signal)``.
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    if len(weights.grid) != len(X.grid):
        raise ValueError("weights and covariate live on different grids")
    if beta.values.shape[0] != len(X.grid):
        raise ValueError("surface rows must match the covariate grid")
    signal = (X.values * weights.w) @ beta.values
    sd = float(np.std(signal))
    if sd == 0.0:
        raise ValueError("zero signal: noise level sd(signal)/snr is undefined")
    noise = rng.normal(0.0, sd / snr, size=signal.shape)
    t_grid = beta.gen_basis.t_basis.grid
    return (
        FunctionalSample(signal + noise, t_grid, "Y"),
        FunctionalSample(signal, t_grid, "signal"),
    )
