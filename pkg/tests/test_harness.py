import math

import numpy as np
import pytest

from fofreg import (
    SimScenario,
    StudyConfig,
    default_config,
    enumerate_scenarios,
    make_equidistant_grid,
    quadrature_weights,
    rimse_beta,
    rimse_y,
    run_config,
    run_scenario,
    score_flags,
)
from fofreg.harness import RESULT_COLUMNS, SimResult, plot_data_tables
from fofreg.io import read_results_csv, write_results_csv

FAST_STUDY = StudyConfig(n=25, S=50, T=25, K_t=8, lambda_num=5)


class TestRimseBeta:
    def setup_method(self):
        gs = make_equidistant_grid(20, (0.0, 1.0))
        gt = make_equidistant_grid(15, (0.0, 1.0))
        self.w_s = quadrature_weights(gs).w
        self.w_t = quadrature_weights(gt).w
        rng = np.random.default_rng(0)
        self.beta = rng.standard_normal((20, 15))

    def test_exact_estimate(self):
        assert rimse_beta(self.beta, self.beta, self.w_s, self.w_t) == 0.0

    def test_zero_estimate(self):
        assert abs(rimse_beta(np.zeros_like(self.beta), self.beta, self.w_s, self.w_t) - 1.0) < 1e-12

    def test_doubled_estimate(self):
        assert abs(rimse_beta(2 * self.beta, self.beta, self.w_s, self.w_t) - 1.0) < 1e-12

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError):
            rimse_beta(self.beta, np.zeros_like(self.beta), self.w_s, self.w_t)


class TestRimseY:
    def setup_method(self):
        gt = make_equidistant_grid(15, (0.0, 1.0))
        self.w_t = quadrature_weights(gt).w
        rng = np.random.default_rng(1)
        self.signal = rng.standard_normal((8, 15))
        self.y_obs = self.signal + 0.1 * rng.standard_normal((8, 15))

    def test_exact_fit(self):
        assert rimse_y(self.signal, self.signal, self.y_obs, self.w_t) == 0.0

    def test_flat_fit_at_own_mean_scores_one(self):
        flat = np.repeat(self.y_obs.mean(axis=1, keepdims=True), 15, axis=1)
        value = rimse_y(flat, self.y_obs, self.y_obs, self.w_t)
        assert abs(value - 1.0) < 1e-12

    def test_constant_curve_rejected(self):
        y = self.y_obs.copy()
        y[2] = 3.14
        with pytest.raises(ValueError):
            rimse_y(self.signal, self.signal, y, self.w_t)


class TestRunScenario:
    def test_deterministic_rows(self):
        sc = SimScenario("PolyLin", 5, 5, "d1", 1000.0, 4, 1.0, 77)
        a = run_scenario(sc, 2, FAST_STUDY, record_runtime=False)
        b = run_scenario(sc, 2, FAST_STUDY, record_runtime=False)
        assert a == b

    def test_identifiable_cell_accuracy(self):
        # near-noiseless, full-rank: very accurate surfaces
        sc = SimScenario("PolyLin", 8, 5, "d1", 1000.0, 4, 1.0, 77)
        rows = run_scenario(sc, 10, FAST_STUDY)
        values = sorted(r.rimse_beta for r in rows)
        assert rows[0].status == "ok"
        assert np.median(values) < 0.01

    def test_antagonistic_cell_extreme_errors(self):
        sc = SimScenario("Poly2Plus", 5, 12, "d2", 1000.0, 4, 1.0, 77)
        rows = run_scenario(sc, 10, FAST_STUDY)
        assert sum(1 for r in rows if r.rimse_beta > 1.0) >= 1
        assert all(r.flagged for r in rows)

    def test_skip_rule(self):
        sc = SimScenario("PolyLin", 5, 5, "d1", 10.0, 8, 1.0, 77)
        rows = run_scenario(sc, 3, FAST_STUDY)
        assert all(r.status == "skipped" for r in rows)
        assert all(math.isnan(r.rimse_beta) for r in rows)

    def test_penalties_see_identical_draws(self):
        # the data stream ignores the penalty, making comparisons paired:
        # the diagnosed kappa/overlap agree across penalty kinds
        a = run_scenario(
            SimScenario("Wiener", 5, 12, "d1", 10.0, 4, 1.0, 77), 2, FAST_STUDY
        )
        b = run_scenario(
            SimScenario("Wiener", 5, 12, "d1c", 10.0, 4, 1.0, 77), 2, FAST_STUDY
        )
        for ra, rb in zip(a, b):
            assert ra.kappa == rb.kappa and ra.overlap == rb.overlap


class TestRunConfig:
    def _tiny_config(self):
        return {
            "n": 25,
            "S": 50,
            "T": 25,
            "Kt": 8,
            "processes": ["PolyLin", "Poly1Plus"],
            "M": [3],
            "Ks": [5],
            "penalties": ["d1"],
            "snr": [1000],
            "gen_basis": [4],
            "gen_lambda": [1.0],
            "replicates": 2,
            "seed": 123,
            "lambda_grid": {"min": 1e-4, "max": 1e4, "num": 5},
        }

    def test_cell_independence(self):
        config = self._tiny_config()
        full = run_config(config, record_runtime=False)
        solo = dict(config, processes=["Poly1Plus"])
        alone = run_config(solo, record_runtime=False)
        assert full[2:] == alone

    def test_parallel_matches_serial(self):
        config = self._tiny_config()
        serial = run_config(config, jobs=1, record_runtime=False)
        parallel = run_config(config, jobs=2, record_runtime=False)
        assert serial == parallel

    def test_enumeration_order(self):
        scenarios = enumerate_scenarios(self._tiny_config())
        assert [s.process_kind for s in scenarios] == ["PolyLin", "Poly1Plus"]

    def test_default_config_is_valid(self):
        config = default_config()
        assert config["replicates"] == 10
        scenarios = enumerate_scenarios(config)
        assert len(scenarios) == 8 * 3 * 2 * 4 * 2


def _result(process="PolyLin", rimse=0.5, flagged=False, status="ok", rep=0):
    return SimResult(
        process=process,
        M=3,
        Ks=5,
        penalty="d1",
        snr=10.0,
        genK=4,
        genLambda=1.0,
        rep=rep,
        rimse_beta=rimse,
        rimse_y=0.01,
        kappa=10.0,
        overlap=0.1,
        flagged=flagged,
        lambda_s=1.0,
        lambda_t=1.0,
        status=status,
        runtime_ms=5,
    )


class TestScoreFlags:
    def test_counts(self):
        rows = [
            _result(rimse=2.0, flagged=True),
            _result(rimse=2.0, flagged=False),
            _result(rimse=0.1, flagged=True),
            _result(rimse=0.1, flagged=False),
        ]
        score = score_flags(rows, 1.0)
        assert (score.true_positive, score.false_negative) == (1, 1)
        assert (score.false_positive, score.true_negative) == (1, 1)
        assert score.sensitivity == 0.5 and score.specificity == 0.5
        assert score.accuracy == 0.5 and score.ppv == 0.5 and score.npv == 0.5

    def test_one_class_rates_undefined(self):
        rows = [_result(rimse=2.0, flagged=True) for _ in range(4)]
        score = score_flags(rows, 1.0)
        assert score.sensitivity == 1.0
        assert math.isnan(score.specificity)

    def test_failures_count_as_flagged_and_extreme(self):
        rows = [_result(rimse=math.inf, flagged=False, status="non-identifiable")]
        score = score_flags(rows, 1.0)
        assert score.true_positive == 1

    def test_skipped_excluded(self):
        rows = [_result(status="skipped"), _result(rimse=2.0, flagged=True)]
        score = score_flags(rows, 1.0)
        assert score.true_positive == 1
        assert score.false_positive + score.true_negative + score.false_negative == 0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        rows = [
            _result(rimse=float(rng.exponential()), flagged=bool(rng.integers(2)), rep=i)
            for i in range(30)
        ]
        direct = score_flags(rows, 0.5)
        shuffled = list(rows)
        rng.shuffle(shuffled)
        assert score_flags(shuffled, 0.5) == direct


class TestResultsCsv:
    def test_roundtrip_identical(self, tmp_path):
        sc = SimScenario("Poly1Plus", 3, 12, "d1", 10.0, 4, 1.0, 5)
        rows = run_scenario(sc, 2, FAST_STUDY)
        path = tmp_path / "results.csv"
        write_results_csv(rows, path)
        back = read_results_csv(path)
        assert back == rows
        assert score_flags(back, 1.0) == score_flags(rows, 1.0)

    def test_header_order(self, tmp_path):
        path = tmp_path / "results.csv"
        write_results_csv([_result()], path)
        header = path.read_text().splitlines()[0]
        assert header == ",".join(RESULT_COLUMNS)
        assert header.startswith(
            "process,M,Ks,penalty,snr,genK,genLambda,rep,rimse_beta,rimse_y,"
            "kappa,overlap,flagged,lambda_s,lambda_t,status,runtime_ms"
        )

    def test_infinities_roundtrip(self, tmp_path):
        row = _result(rimse=math.inf, status="non-identifiable")
        path = tmp_path / "results.csv"
        write_results_csv([row], path)
        assert read_results_csv(path)[0].rimse_beta == math.inf


class TestPlotDataTables:
    def test_groupings(self):
        rows = [
            _result(rimse=2.0, flagged=True),
            _result(rimse=0.1, flagged=False),
            _result(status="skipped"),
        ]
        tables = plot_data_tables(rows)
        assert len(tables["by_overlap"]) == 2
        assert len(tables["by_penalty"]) == 2
        assert len(tables["flagged_only"]) == 1
        assert set(tables["by_overlap"][0]) == {
            "penalty", "rank_deficient", "overlap_bin", "process", "rimse_beta",
        }
