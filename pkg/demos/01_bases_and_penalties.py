"""Grids, quadrature weights, B-spline bases, and roughness penalties.

The building blocks: a shared evaluation grid with trapezoid integration
weights, a clamped cubic B-spline basis, and difference penalties whose
null spaces (constants, or constants plus linear trends) are exactly the
directions the identifiability story revolves around.

Run:  python demos/01_bases_and_penalties.py
"""

import numpy as np

from fofreg import (
    assemble_tensor_penalty,
    bspline_basis,
    difference_penalty,
    make_equidistant_grid,
    quadrature_weights,
)

# --- a grid and its integration weights ------------------------------------
grid = make_equidistant_grid(100, (0.0, 1.0))
weights = quadrature_weights(grid)
print("grid: 100 points on [0, 1], spacing", grid.points[1] - grid.points[0])
print("weights sum to the interval length:", weights.w.sum())
print("integral of f(s) = 2s via the weights:", weights.w @ (2 * grid.points), "(exact: 1)")

# --- a cubic B-spline basis --------------------------------------------------
basis = bspline_basis(grid, K=12, degree=3)
print("\nbasis matrix:", basis.values.shape)
print("partition of unity, max |row sum - 1|:", np.abs(basis.values.sum(axis=1) - 1).max())

# --- difference penalties and their null spaces ------------------------------
p1 = difference_penalty(12, 1)
p2 = difference_penalty(12, 2)
print("\nfirst-order penalty null-space dimension:", p1.nullspace_dim, "(constants)")
print("second-order penalty null-space dimension:", p2.nullspace_dim, "(constants + linear)")
const = np.ones(12)
print("P1 @ constant coefficients:", np.abs(p1.matrix @ const).max())

# --- the anisotropic tensor-product penalty ----------------------------------
pen = assemble_tensor_penalty(p1, difference_penalty(10, 1), lambda_s=1.0, lambda_t=0.5)
print("\ntensor penalty:", pen.assembled.shape)
theta = np.random.default_rng(0).standard_normal((12, 10))
v = theta.ravel(order="F")
colwise = sum(theta[:, k] @ p1.matrix @ theta[:, k] for k in range(10))
print("quadratic form matches the column-wise sum:",
      np.isclose(v @ pen.assembled @ v, colwise + 0.5 * sum(
          theta[j, :] @ difference_penalty(10, 1).matrix @ theta[j, :] for j in range(12))))
