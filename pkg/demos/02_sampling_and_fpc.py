"""Karhunen-Loeve sampling, empirical FPC decomposition, and the two
preprocessing steps that matter for identifiability: FPC presmoothing
(rank reduction) and curve-wise centering (puts constants into the
covariance kernel).

Run:  python demos/02_sampling_and_fpc.py
"""

import numpy as np

from fofreg import (
    center_curvewise,
    eigen_system,
    empirical_fpc,
    make_equidistant_grid,
    quadrature_weights,
    sample_covariate,
    truncate_fpc,
)

rng = np.random.default_rng(42)
grid = make_equidistant_grid(100, (0.0, 1.0))
weights = quadrature_weights(grid)

# --- sample curves from a Brownian-bridge eigensystem -------------------------
system = eigen_system("BrownBridge", 8, grid, weights)
print("eigenvalues:", np.round(system.eigenvalues, 4))
x = sample_covariate(system, 50, rng)
print("sampled", x.n_curves, "curves on", len(grid), "points")
print("numerical rank of the sample:",
      np.linalg.matrix_rank(x.values, tol=1e-10 * np.linalg.norm(x.values, 2)))

# --- empirical FPC decomposition ----------------------------------------------
decomp = empirical_fpc(x, weights)
print("\nretained components:", decomp.rank)
print("leading empirical variances:", np.round(decomp.eigenvalues[:4], 4))
gram = (decomp.eigenvectors * weights.w) @ decomp.eigenvectors.T
print("component orthonormality error:", np.abs(gram - np.eye(decomp.rank)).max())

# --- presmoothing drops the rank ----------------------------------------------
smooth = truncate_fpc(decomp, 4)
resid = np.linalg.norm(x.values - smooth.values) / np.linalg.norm(x.values)
print("\ntruncated to 4 components; relative residual:", round(resid, 4))
print("rank after presmoothing:",
      np.linalg.matrix_rank(smooth.values, tol=1e-10 * np.linalg.norm(smooth.values, 2)))

# --- curve-wise centering puts constants into the kernel -----------------------
centered, removed = center_curvewise(smooth, weights)
print("\nremoved per-curve means, first five:", np.round(removed[:5], 3))
print("weighted integrals after centering:", np.abs(centered.values @ weights.w).max())
print("-> the constant function is now invisible to the data; a fit whose")
print("   penalty ignores constants has lost its anchor (see demo 03).")
