"""Acceptance suite: one test per criterion, each printing a PASS line
with its runtime (visible with ``pytest -s``). Criterion 7 runs the
desk-scale factorial study once as a module fixture; everything else is
self-contained and fast."""

import math
import multiprocessing
import time

import numpy as np
import pytest

from fofreg import (
    FunctionalSample,
    NonIdentifiableError,
    assemble_design,
    assemble_tensor_penalty,
    bspline_basis,
    center_curvewise,
    default_config,
    diagnose,
    difference_penalty,
    eigen_system,
    empirical_fpc,
    fame_penalty,
    fullrank_shrinkage,
    gen_response,
    make_equidistant_grid,
    orthogonal_complement,
    penalized_solve,
    quadrature_weights,
    ridge_penalty,
    rimse_beta,
    run_config,
    sample_coef_surface,
    sample_covariate,
    score_flags,
    select_smoothing,
    smoothest_representative,
    span_overlap,
    truncate_fpc,
)
from fofreg.basis import unvec, vec
from fofreg.penalties import unit_spectral_norm

JOBS = min(4, multiprocessing.cpu_count())


def _report(capsys, num: int, name: str, elapsed: float, limit: float) -> None:
    with capsys.disabled():  # the per-criterion line always shows
        print(f"ACCEPTANCE {num} PASS ({name}; {elapsed:.1f} s < {limit:.0f} s)")
    assert elapsed < limit


@pytest.fixture(scope="module")
def study_results():
    """The desk-scale factorial study (10 replicates per cell)."""
    tic = time.perf_counter()
    results = run_config(default_config(), jobs=JOBS)
    return results, time.perf_counter() - tic


def test_criterion_1_penalty_structure(capsys):
    tic = time.perf_counter()
    assert difference_penalty(8, 1).nullspace_dim == 1
    assert difference_penalty(8, 2).nullspace_dim == 2
    shrunk = fullrank_shrinkage(difference_penalty(3, 1), 0.1)
    spectrum = np.linalg.eigvalsh(shrunk.matrix)
    assert np.abs(spectrum - np.array([0.1, 1.0, 3.0])).max() < 1e-10
    _report(capsys, 1, "penalty structure exact", time.perf_counter() - tic, 1.0)


def test_criterion_2_overlap_measure_properties(capsys):
    tic = time.perf_counter()
    rng = np.random.default_rng(202)
    n = 20
    for _ in range(50):  # symmetry
        a = rng.standard_normal((n, int(rng.integers(1, 6))))
        b = rng.standard_normal((n, int(rng.integers(1, 6))))
        assert abs(span_overlap(a, b) - span_overlap(b, a)) < 1e-10
    for _ in range(50):  # bounds
        a = rng.standard_normal((n, int(rng.integers(1, 8))))
        b = rng.standard_normal((n, int(rng.integers(1, 8))))
        val = span_overlap(a, b)
        assert -1e-10 <= val <= min(a.shape[1], b.shape[1]) + 1e-10
    for _ in range(50):  # containment attains the max
        pa = int(rng.integers(2, 7))
        pb = int(rng.integers(1, pa + 1))
        a = rng.standard_normal((n, pa))
        b = a @ rng.standard_normal((pa, pb))
        assert abs(span_overlap(a, b) - pb) < 1e-10
    for _ in range(50):  # orthogonality attains zero
        pa = int(rng.integers(1, 6))
        a = rng.standard_normal((n, pa))
        comp = orthogonal_complement(a)
        b = comp @ rng.standard_normal((comp.shape[1], int(rng.integers(1, 6))))
        assert span_overlap(a, b) < 1e-10
    _report(capsys, 2, "overlap-measure properties, 200 constructions", time.perf_counter() - tic, 10.0)


def test_criterion_3_rank_dichotomy(capsys):
    tic = time.perf_counter()
    rng = np.random.default_rng(303)
    s = 60
    grid = make_equidistant_grid(s, (0.0, 1.0))
    weights = quadrature_weights(grid)

    def kappa_for(functions, ks):
        b_s = bspline_basis(grid, ks, 3)
        scores = rng.standard_normal((functions.shape[0] + 5, functions.shape[0]))
        x = FunctionalSample(scores @ functions, grid)
        return diagnose(x, weights, b_s, difference_penalty(ks, 1)).kappa

    def random_rows(m):
        q, _ = np.linalg.qr(rng.standard_normal((s, m)))
        return q.T

    cases = []
    for _ in range(20):  # deficient: M < K_s
        ks = int(rng.integers(5, 13))
        m = int(rng.integers(2, ks))
        cases.append((random_rows(m), ks, True))
    for _ in range(20):  # generic: M >= K_s
        ks = int(rng.integers(4, 13))
        m = int(rng.integers(ks, 21))
        cases.append((random_rows(m), ks, False))
    for _ in range(10):  # planted collapse despite M >= K_s
        ks = int(rng.integers(4, 9))
        m = int(rng.integers(ks, 15))
        b_s = bspline_basis(grid, ks, 3)
        killed = weights.w * (b_s.values @ rng.standard_normal(ks))
        comp = orthogonal_complement(killed[:, None])
        q, _ = np.linalg.qr(comp @ rng.standard_normal((s - 1, m)))
        cases.append((q.T, ks, True))

    assert len(cases) == 50
    for functions, ks, expect_deficient in cases:
        assert math.isinf(kappa_for(functions, ks)) == expect_deficient
    _report(capsys, 3, "rank dichotomy, 50 cases, zero misclassifications",
            time.perf_counter() - tic, 30.0)


def test_criterion_4_penalized_uniqueness_dichotomy(capsys):
    tic = time.perf_counter()
    grid_s = make_equidistant_grid(50, (0.0, 1.0))
    grid_t = make_equidistant_grid(20, (0.0, 1.0))
    w_s = quadrature_weights(grid_s)
    b_t = bspline_basis(grid_t, 5, 3)
    p_t = difference_penalty(5, 1)

    cases = []
    for i in range(20):  # kernel overlap: penalty null space inside ke
        rng = np.random.default_rng(400 + i)
        ks = (7, 8, 9, 10)[i % 4]
        order = 1 if i % 2 == 0 else 2
        kind = "Poly1Plus" if order == 1 else "Poly2Plus"
        x = sample_covariate(eigen_system(kind, 4, grid_s, w_s), 25, rng)
        cases.append((x, ks, order, i % 2 * 1.0, True))
    for i in range(20):  # rank-deficient but disjoint kernels
        rng = np.random.default_rng(450 + i)
        ks = (7, 8, 9, 10)[i % 4]
        order = 1 if i % 2 == 0 else 2
        x = sample_covariate(eigen_system("PolyLin", 4, grid_s, w_s), 25, rng)
        cases.append((x, ks, order, i % 2 * 1.0, False))

    rng = np.random.default_rng(499)
    for x, ks, order, lam_t, overlap in cases:
        b_s = bspline_basis(grid_s, ks, 3)
        design = assemble_design(x, w_s, b_s, b_t)
        penalty = assemble_tensor_penalty(difference_penalty(ks, order), p_t, 1.0, lam_t)
        gram = np.kron(b_t.values.T @ b_t.values, design.ds.T @ design.ds)
        evals = np.linalg.eigvalsh(gram + penalty.assembled)
        assert (evals[0] > 1e-10 * evals[-1]) == (not overlap)
        theta = rng.standard_normal(ks * 5)
        if overlap:
            with pytest.raises(NonIdentifiableError):
                smoothest_representative(theta, design, penalty)
        else:
            rep = smoothest_representative(theta, design, penalty)
            fit_diff = np.abs(design.apply(rep) - design.apply(theta)).max()
            assert fit_diff < 1e-8
            u0 = np.kron(design.bt_right_pos, design.ds_right_null)
            base = rep @ penalty.assembled @ rep
            for _ in range(100):
                shifted = theta + u0 @ rng.standard_normal(u0.shape[1])
                assert base <= shifted @ penalty.assembled @ shifted + 1e-10 * max(1.0, base)
    _report(capsys, 4, "penalized uniqueness dichotomy, 20+20 cases",
            time.perf_counter() - tic, 60.0)


def test_criterion_5_structured_vs_dense_oracle(capsys):
    tic = time.perf_counter()
    rng = np.random.default_rng(505)
    for i in range(25):
        n = int(rng.integers(6, 13))
        s = int(rng.integers(8, 17))
        t = int(rng.integers(6, 11))
        ks = int(rng.integers(4, 7))
        kt = int(rng.integers(4, 6))
        m = int(rng.integers(3, 9))
        grid_s = make_equidistant_grid(s, (0.0, 1.0))
        grid_t = make_equidistant_grid(t, (0.0, 1.0))
        w_s = quadrature_weights(grid_s)
        x = sample_covariate(eigen_system("PolyLin", m, grid_s, w_s), n, rng)
        b_s = bspline_basis(grid_s, ks, 3)
        b_t = bspline_basis(grid_t, kt, 3)
        beta = sample_coef_surface(4, 1.0, grid_s, grid_t, rng)
        y, _ = gen_response(x, beta, w_s, 20.0, rng)
        order = 1 if i % 2 == 0 else 2
        penalty = assemble_tensor_penalty(
            difference_penalty(ks, order),
            difference_penalty(kt, 1),
            10.0 ** rng.uniform(-3, 2),
            10.0 ** rng.uniform(-3, 2),
        )
        design = assemble_design(x, w_s, b_s, b_t)
        fit = penalized_solve(design, penalty, y.values)
        dense = design.dense_design()
        oracle = np.linalg.solve(
            dense.T @ dense + penalty.assembled, dense.T @ vec(y.values)
        )
        rel = np.abs(fit.theta - oracle).max() / max(1.0, np.abs(oracle).max())
        assert rel < 1e-8
    _report(capsys, 5, "structured solve matches dense oracle, 25 instances",
            time.perf_counter() - tic, 60.0)


def test_criterion_6_fit_coefficient_decoupling(capsys):
    tic = time.perf_counter()
    rng = np.random.default_rng(606)
    grid_s = make_equidistant_grid(30, (0.0, 1.0))
    grid_t = make_equidistant_grid(15, (0.0, 1.0))
    w_s = quadrature_weights(grid_s)
    w_t = quadrature_weights(grid_t)
    x = sample_covariate(eigen_system("PolyLin", 3, grid_s, w_s), 12, rng)
    b_s = bspline_basis(grid_s, 6, 3)
    b_t = bspline_basis(grid_t, 4, 3)
    beta = sample_coef_surface(4, 1.0, grid_s, grid_t, rng)
    design = assemble_design(x, w_s, b_s, b_t)
    u0 = np.kron(design.bt_right_pos, design.ds_right_null)
    assert u0.shape[1] > 0
    theta_a = rng.standard_normal(24)
    shift = u0 @ rng.standard_normal(u0.shape[1])
    theta_b = theta_a + shift * (2000.0 / np.linalg.norm(shift))
    fit_gap = np.abs(design.apply(theta_b) - design.apply(theta_a)).max()
    assert fit_gap < 1e-10
    surf_a = b_s.values @ unvec(theta_a, 6, 4) @ b_t.values.T
    surf_b = b_s.values @ unvec(theta_b, 6, 4) @ b_t.values.T
    r_a = rimse_beta(surf_a, beta.values, w_s.w, w_t.w)
    r_b = rimse_beta(surf_b, beta.values, w_s.w, w_t.w)
    assert max(r_a, r_b) / min(r_a, r_b) > 100.0
    _report(capsys, 6, "identical fits, coefficient errors differ 100x",
            time.perf_counter() - tic, 10.0)


class TestCriterion7DeskScaleStudy:
    @staticmethod
    def _rank_deficient(row):
        return math.isinf(row.kappa) or row.kappa >= 1e6

    def test_a_non_antagonistic_accuracy(self, study_results, capsys):
        results, elapsed = study_results
        group = [
            r.rimse_beta
            for r in results
            if r.process in ("PolyLin", "PolyExp", "FourierConst", "FourierExp",
                             "Wiener", "BrownBridge")
            and r.penalty == "d1" and r.snr == 1000
        ]
        med = float(np.median(group))
        with capsys.disabled():
            print(f"ACCEPTANCE 7a PASS (median rIMSE_beta {med:.3g} < 0.1, n={len(group)})")
        assert med < 0.1

    def test_b_antagonistic_blowup(self, study_results, capsys):
        results, _ = study_results
        bad = [r.rimse_beta for r in results
               if r.process == "Poly2Plus" and r.penalty == "d2" and self._rank_deficient(r)]
        benign = [r.rimse_beta for r in results
                  if r.process in ("PolyLin", "PolyExp") and r.penalty == "d2"
                  and self._rank_deficient(r)]
        med_bad, med_ok = float(np.median(bad)), float(np.median(benign))
        with capsys.disabled():
            print(f"ACCEPTANCE 7b PASS (Poly2Plus/d2 median {med_bad:.3g} >= 10x Poly {med_ok:.3g})")
        assert med_bad >= 10.0 * med_ok

    def test_c_flag_sensitivity(self, study_results, capsys):
        results, _ = study_results
        score = score_flags([r for r in results if r.penalty in ("d1", "d2")], 1.0)
        with capsys.disabled():
            print(
                f"ACCEPTANCE 7c PASS (sensitivity {score.sensitivity:.3f} >= 0.7; "
                f"specificity {score.specificity:.3f})"
            )
        assert score.sensitivity >= 0.7

    def test_d_fitted_value_accuracy(self, study_results, capsys):
        results, _ = study_results
        ys = [r.rimse_y for r in results if r.status == "ok"]
        p90 = float(np.percentile(ys, 90))
        with capsys.disabled():
            print(f"ACCEPTANCE 7d PASS (90th pct rIMSE_Y {p90:.4g} < 0.05, n={len(ys)})")
        assert p90 < 0.05

    def test_e_countermeasures_beat_plain_penalty(self, study_results, capsys):
        results, elapsed = study_results
        flagged_cells = {
            (r.process, r.M, r.Ks, r.snr, r.genK, r.genLambda, r.rep)
            for r in results
            if r.penalty == "d1" and r.flagged
        }
        assert flagged_cells

        def median_for(penalty):
            vals = [
                r.rimse_beta for r in results
                if r.penalty == penalty
                and (r.process, r.M, r.Ks, r.snr, r.genK, r.genLambda, r.rep) in flagged_cells
            ]
            return float(np.median(vals))

        med_d1 = median_for("d1")
        med_d1c = median_for("d1c")
        med_ridge = median_for("ridge")
        with capsys.disabled():
            print(
                f"ACCEPTANCE 7e PASS (flagged cells: d1c {med_d1c:.3g} and ridge "
                f"{med_ridge:.3g} below d1 {med_d1:.3g}); study ran {elapsed:.0f} s "
                f"on {JOBS} workers (< 900 s)"
            )
        assert med_d1c < med_d1
        assert med_ridge < med_d1
        assert elapsed < 900.0


def test_criterion_8_case_study_end_to_end(capsys):
    tic = time.perf_counter()
    grid_s = make_equidistant_grid(100, (0.0, 1.0))
    grid_t = make_equidistant_grid(50, (0.0, 1.0))
    w_s = quadrature_weights(grid_s)
    w_t = quadrature_weights(grid_t)
    rng = np.random.default_rng(2024)

    # rich noisy curves, presmoothed to their 6 leading components and
    # curve-wise centered - the preprocessing that manufactures overlap
    raw = sample_covariate(eigen_system("BrownBridge", 12, grid_s, w_s), 60, rng)
    noisy = FunctionalSample(raw.values + 0.05 * rng.standard_normal(raw.values.shape), grid_s)
    smooth = truncate_fpc(empirical_fpc(noisy, w_s), 6)
    x, _ = center_curvewise(smooth, w_s)
    beta = sample_coef_surface(8, 1.0, grid_s, grid_t, rng)
    y, signal = gen_response(x, beta, w_s, 10.0, rng)

    b_s = bspline_basis(grid_s, 12, 3)
    b_t = bspline_basis(grid_t, 12, 3)
    report_d1 = diagnose(x, w_s, b_s, difference_penalty(12, 1))
    report_d2 = diagnose(x, w_s, b_s, difference_penalty(12, 2))
    assert math.isinf(report_d1.kappa)
    assert report_d1.overlap >= 0.95
    assert report_d1.flagged and report_d2.flagged

    design = assemble_design(x, w_s, b_s, b_t)
    p_t = difference_penalty(12, 1)
    fits = {
        "d1c": select_smoothing(design, difference_penalty(12, 1), p_t, y.values,
                                constraint_basis=report_d1.constraint_basis),
        "d2c": select_smoothing(design, difference_penalty(12, 2), p_t, y.values,
                                constraint_basis=report_d2.constraint_basis),
        "ridge": select_smoothing(design, ridge_penalty(12), p_t, y.values),
        "fame": select_smoothing(
            design,
            unit_spectral_norm(fame_penalty(empirical_fpc(x, w_s), b_s, w_s, 1e-10)),
            p_t,
            y.values,
        ),
    }
    imse = {
        name: float(np.mean(((fit.fitted - y.values) ** 2) @ w_t.w))
        for name, fit in fits.items()
    }
    spread = max(imse.values()) / min(imse.values())
    assert spread < 1.2
    elapsed = time.perf_counter() - tic
    with capsys.disabled():
        print(
            f"ACCEPTANCE 8 PASS (overlap {report_d1.overlap:.2f} [{report_d2.overlap:.2f}], "
            f"kappa inf; fitted-value iMSE spread {spread:.4f} < 1.2)"
        )
    assert elapsed < 120.0
