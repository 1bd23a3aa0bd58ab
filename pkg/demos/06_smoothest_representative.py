"""Simple non-identifiability and the smoothest representative.

With a rank-deficient design, whole hyperplanes of coefficient vectors
produce identical fitted values - predictive checks cannot tell them
apart. When the penalty sees every lost direction, each hyperplane still
has a unique minimum-roughness point; projecting onto it gives every
equivalent coefficient vector the same canonical form. When the penalty
is blind to part of the lost space (kernel overlap), no such point
exists and the projection refuses.

Run:  python demos/06_smoothest_representative.py
"""

import numpy as np

from fofreg import (
    NonIdentifiableError,
    assemble_design,
    assemble_tensor_penalty,
    bspline_basis,
    difference_penalty,
    eigen_system,
    make_equidistant_grid,
    quadrature_weights,
    sample_covariate,
    smoothest_representative,
)

rng = np.random.default_rng(3)
grid_s = make_equidistant_grid(60, (0.0, 1.0))
grid_t = make_equidistant_grid(25, (0.0, 1.0))
w_s = quadrature_weights(grid_s)
b_s = bspline_basis(grid_s, 8, 3)
b_t = bspline_basis(grid_t, 5, 3)
penalty = assemble_tensor_penalty(
    difference_penalty(8, 1), difference_penalty(5, 1), 1.0, 1.0
)

# rank-deficient but benign: 4 polynomial components against 8 basis functions
x = sample_covariate(eigen_system("PolyLin", 4, grid_s, w_s), 30, rng)
design = assemble_design(x, w_s, b_s, b_t)
print("design rank:", design.rank, "of", design.K_s * design.K_t, "coefficients")

u0 = np.kron(design.bt_right_pos, design.ds_right_null)
theta = rng.standard_normal(40)
shadow = theta + u0 @ rng.standard_normal(u0.shape[1]) * 25.0
print("fitted-value gap between theta and its shadow:",
      np.abs(design.apply(theta) - design.apply(shadow)).max())
print("coefficient gap:", np.abs(theta - shadow).max())

rep_a = smoothest_representative(theta, design, penalty)
rep_b = smoothest_representative(shadow, design, penalty)
print("projections agree:", np.abs(rep_a - rep_b).max() < 1e-8)
print("roughness  theta %.4f  shadow %.4f  representative %.4f"
      % (theta @ penalty.assembled @ theta,
         shadow @ penalty.assembled @ shadow,
         rep_a @ penalty.assembled @ rep_a))

# antagonistic curves: the projection does not exist
x_bad = sample_covariate(eigen_system("Poly1Plus", 4, grid_s, w_s), 30, rng)
design_bad = assemble_design(x_bad, w_s, b_s, b_t)
try:
    smoothest_representative(theta, design_bad, penalty)
except NonIdentifiableError as err:
    print("\nkernel overlap:", err)
