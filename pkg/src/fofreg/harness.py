"""Simulation-study runner: metrics, factorial execution, flag scoring.

Each cell of the factorial design draws covariate curves, a random true
surface, and a noisy response, then diagnoses and fits with the cell's
penalty. Replicate data streams are keyed by the data-generating part of
the scenario only, so different penalties see identical draws and the
countermeasure comparisons are paired.
"""

from __future__ import annotations

import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .basis import (
    bspline_basis,
    difference_penalty,
    make_equidistant_grid,
    quadrature_weights,
)
from .dgp import (
    SimScenario,
    eigen_system,
    gen_response,
    sample_coef_surface,
    sample_covariate,
)
from .diagnostics import diagnose
from .fit import NonIdentifiableError, assemble_design, select_smoothing
from .fpc import empirical_fpc
from .penalties import (
    DEFAULT_EPSILON,
    DEFAULT_FAME_FLOOR,
    PenaltyRecipe,
    fame_penalty,
    fullrank_shrinkage,
    ridge_penalty,
    unit_spectral_norm,
)

PENALTY_KINDS = ("d1", "d2", "ridge", "d1c", "d2c", "fullrank-d1", "fullrank-d2", "fame")

#: Columns of the results CSV, in their fixed order.
RESULT_COLUMNS = (
    "process",
    "M",
    "Ks",
    "penalty",
    "snr",
    "genK",
    "genLambda",
    "rep",
    "rimse_beta",
    "rimse_y",
    "kappa",
    "overlap",
    "flagged",
    "lambda_s",
    "lambda_t",
    "status",
    "runtime_ms",
    "smoother",
)


def rimse_beta(
    beta_hat: np.ndarray,
    beta_true: np.ndarray,
    w_s: np.ndarray,
    w_t: np.ndarray,
) -> float:
    """Relative integrated squared error of a coefficient-surface estimate."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta_true = np.asarray(beta_true, dtype=float)
    if beta_hat.shape != beta_true.shape:
        raise ValueError("surface shapes differ")
    den = float(w_s @ beta_true**2 @ w_t)
    if den == 0.0:
        raise ValueError("true surface is identically zero")
    num = float(w_s @ (beta_true - beta_hat) ** 2 @ w_t)
    return num / den


def rimse_y(
    y_hat: np.ndarray,
    signal: np.ndarray,
    y_obs: np.ndarray,
    w_t: np.ndarray,
) -> float:
    """Relative integrated squared error of the fitted responses.

    Per curve: integrated squared deviation of the fit from the noiseless
    signal, over the integrated squared deviation of the observed curve
    from its own mean level; averaged over curves.
    """
    y_hat = np.asarray(y_hat, dtype=float)
    signal = np.asarray(signal, dtype=float)
    y_obs = np.asarray(y_obs, dtype=float)
    if not (y_hat.shape == signal.shape == y_obs.shape):
        raise ValueError("response matrix shapes differ")
    centered = y_obs - y_obs.mean(axis=1, keepdims=True)
    den = centered**2 @ w_t
    if np.any(den == 0.0):
        raise ValueError("an observed curve is constant in t")
    num = (y_hat - signal) ** 2 @ w_t
    return float(np.mean(num / den))


@dataclass(frozen=True)
class StudyConfig:
    """Ambient dimensions and tuning constants shared by all cells."""

    n: int = 50
    S: int = 100
    T: int = 50
    K_t: int = 10
    lambda_min: float = 1e-4
    lambda_max: float = 1e4
    lambda_num: int = 7
    epsilon: float = DEFAULT_EPSILON
    fame_floor: float = DEFAULT_FAME_FLOOR

    def lambda_grid(self) -> np.ndarray:
        return np.logspace(
            math.log10(self.lambda_min), math.log10(self.lambda_max), self.lambda_num
        )


@dataclass(frozen=True, eq=False)
class SimResult:
    """One replicate's outcome, one row of the results CSV.

    Equality compares the serialized row, so NaN fields (skipped or
    failed replicates) compare equal, matching the byte-level
    determinism contract of the output CSV.
    """

    process: str
    M: int
    Ks: int
    penalty: str
    snr: float
    genK: int
    genLambda: float
    rep: int
    rimse_beta: float
    rimse_y: float
    kappa: float
    overlap: float
    flagged: bool
    lambda_s: float
    lambda_t: float
    status: str
    runtime_ms: int
    smoother: str = "gcv-grid"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimResult):
            return NotImplemented
        return result_to_row(self) == result_to_row(other)


def _data_stream(scenario: SimScenario, rep: int) -> np.random.Generator:
    """Replicate RNG keyed by the data-generating scenario fields.

    The penalty kind is excluded on purpose: estimators are compared on
    identical draws.
    """
    key = (
        f"{scenario.process_kind}|{scenario.M}|{scenario.K_s}|{scenario.snr!r}"
        f"|{scenario.gen_basis_size}|{scenario.gen_lambda!r}"
    )
    digest = hashlib.sha256(key.encode()).digest()
    cell_hash = int.from_bytes(digest[:8], "big")
    seq = np.random.SeedSequence([scenario.replicate_seed, cell_hash, rep])
    return np.random.default_rng(seq)


def build_s_penalty(recipe: PenaltyRecipe, K_s, X, w_s, B_s):
    """Construct the s-direction penalty a recipe describes.

    Data-dependent kinds (fame) are built from the covariate sample; the
    FAME penalty is rescaled to unit spectral norm so the fixed lambda
    grid spans useful smoothing strengths.
    """
    kind = recipe.kind
    if kind == "d1" or kind == "d1c":
        return difference_penalty(K_s, 1)
    if kind == "d2" or kind == "d2c":
        return difference_penalty(K_s, 2)
    if kind == "ridge":
        return ridge_penalty(K_s)
    if kind == "fullrank-d1":
        return fullrank_shrinkage(difference_penalty(K_s, 1), recipe.epsilon)
    if kind == "fullrank-d2":
        return fullrank_shrinkage(difference_penalty(K_s, 2), recipe.epsilon)
    if kind == "fame":
        return unit_spectral_norm(
            fame_penalty(empirical_fpc(X, w_s), B_s, w_s, recipe.fame_floor)
        )
    raise ValueError(f"unknown penalty kind {kind!r}")


def run_scenario(
    scenario: SimScenario,
    n_replicates: int,
    study: StudyConfig | None = None,
    record_runtime: bool = True,
) -> list[SimResult]:
    """Run every replicate of one factorial cell.

    Cells whose generator basis exceeds the fitting basis are recorded as
    skipped. Individual replicate failures (non-identifiable systems or
    unexpected numerical errors) are recorded in the status column and
    never abort the batch.
    """
    study = study or StudyConfig()
    base = dict(
        process=scenario.process_kind,
        M=scenario.M,
        Ks=scenario.K_s,
        penalty=scenario.penalty_kind,
        snr=scenario.snr,
        genK=scenario.gen_basis_size,
        genLambda=scenario.gen_lambda,
    )
    nan = float("nan")
    if scenario.gen_basis_size > scenario.K_s:
        return [
            SimResult(
                **base,
                rep=rep,
                rimse_beta=nan,
                rimse_y=nan,
                kappa=nan,
                overlap=nan,
                flagged=False,
                lambda_s=nan,
                lambda_t=nan,
                status="skipped",
                runtime_ms=0,
            )
            for rep in range(n_replicates)
        ]

    grid_s = make_equidistant_grid(study.S, (0.0, 1.0))
    grid_t = make_equidistant_grid(study.T, (0.0, 1.0))
    w_s = quadrature_weights(grid_s)
    w_t = quadrature_weights(grid_t)
    b_s = bspline_basis(grid_s, scenario.K_s, 3)
    b_t = bspline_basis(grid_t, study.K_t, 3)
    p_t = difference_penalty(study.K_t, 1)
    system = eigen_system(scenario.process_kind, scenario.M, grid_s, w_s)
    lam_grid = study.lambda_grid()

    recipe = PenaltyRecipe(scenario.penalty_kind, study.epsilon, study.fame_floor)
    results = []
    for rep in range(n_replicates):
        tic = time.perf_counter()
        rng = _data_stream(scenario, rep)
        x = sample_covariate(system, study.n, rng)
        beta = sample_coef_surface(
            scenario.gen_basis_size, scenario.gen_lambda, grid_s, grid_t, rng
        )
        y, signal = gen_response(x, beta, w_s, scenario.snr, rng)
        kappa = overlap = nan
        flagged = False
        try:
            p_s = build_s_penalty(recipe, scenario.K_s, x, w_s, b_s)
            report = diagnose(x, w_s, b_s, p_s)
            kappa, overlap, flagged = report.kappa, report.overlap, report.flagged
            constraints = (
                report.constraint_basis
                if scenario.penalty_kind in ("d1c", "d2c") and report.flagged
                else None
            )
            design = assemble_design(x, w_s, b_s, b_t)
            fit = select_smoothing(
                design,
                p_s,
                p_t,
                y.values,
                lambdas_s=lam_grid,
                lambdas_t=lam_grid,
                constraint_basis=constraints,
                weights=w_s,
                B_s=b_s,
            )
            row = dict(
                rimse_beta=rimse_beta(fit.surface, beta.values, w_s.w, w_t.w),
                rimse_y=rimse_y(fit.fitted, signal.values, y.values, w_t.w),
                lambda_s=fit.lambda_s,
                lambda_t=fit.lambda_t,
                status="ok",
            )
        except NonIdentifiableError:
            row = dict(
                rimse_beta=math.inf,
                rimse_y=math.inf,
                lambda_s=nan,
                lambda_t=nan,
                status="non-identifiable",
            )
        except (ValueError, np.linalg.LinAlgError):
            row = dict(
                rimse_beta=math.inf,
                rimse_y=math.inf,
                lambda_s=nan,
                lambda_t=nan,
                status="error",
            )
        runtime = int(round((time.perf_counter() - tic) * 1000)) if record_runtime else 0
        results.append(
            SimResult(
                **base,
                rep=rep,
                kappa=kappa,
                overlap=overlap,
                flagged=flagged,
                runtime_ms=runtime,
                **row,
            )
        )
    return results


def default_config() -> dict:
    """Desk-scale factorial design: a documented subset of the full study."""
    return {
        "n": 50,
        "S": 100,
        "T": 50,
        "Kt": 10,
        "processes": [
            "PolyLin",
            "PolyExp",
            "FourierConst",
            "FourierExp",
            "Wiener",
            "BrownBridge",
            "Poly1Plus",
            "Poly2Plus",
        ],
        "M": [3, 5, 8],
        "Ks": [5, 12],
        "penalties": ["d1", "d2", "d1c", "ridge"],
        "snr": [10, 1000],
        "gen_basis": [4],
        "gen_lambda": [1.0],
        "replicates": 10,
        "seed": 20240801,
        "lambda_grid": {"min": 1e-4, "max": 1e4, "num": 7},
        "epsilon": DEFAULT_EPSILON,
        "fame_floor": DEFAULT_FAME_FLOOR,
    }


def study_from_config(config: dict) -> StudyConfig:
    grid = config.get("lambda_grid", {})
    return StudyConfig(
        n=config.get("n", 50),
        S=config.get("S", 100),
        T=config.get("T", 50),
        K_t=config.get("Kt", 10),
        lambda_min=grid.get("min", 1e-4),
        lambda_max=grid.get("max", 1e4),
        lambda_num=grid.get("num", 7),
        epsilon=config.get("epsilon", DEFAULT_EPSILON),
        fame_floor=config.get("fame_floor", DEFAULT_FAME_FLOOR),
    )


def enumerate_scenarios(config: dict) -> list[SimScenario]:
    """Expand a factorial config into scenario cells, in CSV row order."""
    seed = config.get("seed", 0)
    scenarios = []
    for process in config["processes"]:
        for m in config["M"]:
            for ks in config["Ks"]:
                for penalty in config["penalties"]:
                    if penalty not in PENALTY_KINDS:
                        raise ValueError(f"unknown penalty kind {penalty!r}")
                    for snr in config["snr"]:
                        for gen_k in config.get("gen_basis", [4]):
                            for gen_lam in config.get("gen_lambda", [1.0]):
                                scenarios.append(
                                    SimScenario(
                                        process_kind=process,
                                        M=m,
                                        K_s=ks,
                                        penalty_kind=penalty,
                                        snr=float(snr),
                                        gen_basis_size=int(gen_k),
                                        gen_lambda=float(gen_lam),
                                        replicate_seed=int(seed),
                                    )
                                )
    return scenarios


def _run_cell(args) -> list[SimResult]:
    scenario, n_replicates, study, record_runtime = args
    return run_scenario(scenario, n_replicates, study, record_runtime)


def run_config(
    config: dict, jobs: int = 1, record_runtime: bool = True
) -> list[SimResult]:
    """Run the whole factorial design, optionally on a process pool.

    Output order is by scenario enumeration then replicate, independent
    of the number of workers.
    """
    scenarios = enumerate_scenarios(config)
    study = study_from_config(config)
    n_reps = config.get("replicates", 10)
    tasks = [(sc, n_reps, study, record_runtime) for sc in scenarios]
    if jobs <= 1 or len(tasks) <= 1:
        batches = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_cell, tasks, chunksize=1))
    return [row for batch in batches for row in batch]


@dataclass(frozen=True)
class FlagScore:
    """2x2 confusion table of the flag rule against an error threshold.

    Positives are replicates whose coefficient error exceeds the
    threshold; the flag rule is the predictor. Rates are derived
    properties so they always recompute exactly from the stored counts;
    a rate with an empty denominator is NaN.
    """

    threshold: float
    true_positive: int
    false_positive: int
    true_negative: int
    false_negative: int

    @staticmethod
    def _rate(num: int, den: int) -> float:
        return num / den if den else math.nan

    @property
    def sensitivity(self) -> float:
        return self._rate(self.true_positive, self.true_positive + self.false_negative)

    @property
    def specificity(self) -> float:
        return self._rate(self.true_negative, self.true_negative + self.false_positive)

    @property
    def accuracy(self) -> float:
        total = (
            self.true_positive + self.false_positive + self.true_negative + self.false_negative
        )
        return self._rate(self.true_positive + self.true_negative, total)

    @property
    def ppv(self) -> float:
        return self._rate(self.true_positive, self.true_positive + self.false_positive)

    @property
    def npv(self) -> float:
        return self._rate(self.true_negative, self.true_negative + self.false_negative)


def score_flags(results: Sequence[SimResult], threshold: float) -> FlagScore:
    """Score the flag rule against the coefficient-error threshold.

    Skipped cells are excluded. Replicates whose fit failed outright
    count as both flagged and extreme: the solver's refusal is the
    conservative reading of an estimate with unbounded error.
    """
    tp = fp = tn = fn = 0
    for row in results:
        if row.status == "skipped":
            continue
        failed = row.status != "ok"
        flagged = bool(row.flagged) or failed
        extreme = failed or row.rimse_beta > threshold
        if flagged and extreme:
            tp += 1
        elif flagged:
            fp += 1
        elif extreme:
            fn += 1
        else:
            tn += 1
    return FlagScore(threshold, tp, fp, tn, fn)


def _is_rank_deficient(row: SimResult) -> bool:
    return math.isinf(row.kappa) or row.kappa >= 1e6


def _overlap_bin(value: float) -> str:
    if math.isnan(value):
        return "nan"
    if value < 0.5:
        return "<0.5"
    if value < 0.95:
        return "0.5-0.95"
    if value < 1.5:
        return "0.95-1.5"
    return ">=1.5"


def plot_data_tables(results: Sequence[SimResult]) -> dict[str, list[dict]]:
    """Long-format tables mirroring the study's figure groupings.

    ``by_overlap``: error grouped by penalty, design rank status, overlap
    bin, and process. ``by_penalty``: error by process, penalty, and rank
    status. ``flagged_only``: the same restricted to flagged replicates.
    """
    rows = [r for r in results if r.status != "skipped"]
    by_overlap = [
        {
            "penalty": r.penalty,
            "rank_deficient": _is_rank_deficient(r),
            "overlap_bin": _overlap_bin(r.overlap),
            "process": r.process,
            "rimse_beta": r.rimse_beta,
        }
        for r in rows
    ]
    by_penalty = [
        {
            "process": r.process,
            "penalty": r.penalty,
            "rank_deficient": _is_rank_deficient(r),
            "rimse_beta": r.rimse_beta,
        }
        for r in rows
    ]
    flagged_only = [
        {"process": r.process, "penalty": r.penalty, "rimse_beta": r.rimse_beta}
        for r in rows
        if r.flagged or r.status != "ok"
    ]
    return {
        "by_overlap": by_overlap,
        "by_penalty": by_penalty,
        "flagged_only": flagged_only,
    }


def result_to_row(result: SimResult) -> list[str]:
    """Serialize one result in the fixed column order (round-trip exact)."""
    out = []
    for name in RESULT_COLUMNS:
        value = getattr(result, name)
        if isinstance(value, bool):
            out.append("true" if value else "false")
        elif isinstance(value, (float, np.floating)):
            out.append(repr(float(value)))
        else:
            out.append(str(value))
    return out


def result_from_row(row: Sequence[str]) -> SimResult:
    """Inverse of :func:`result_to_row`."""
    kwargs = {}
    for name, raw, f in zip(RESULT_COLUMNS, row, fields(SimResult)):
        if f.type == "bool":
            kwargs[name] = raw == "true"
        elif f.type == "int":
            kwargs[name] = int(raw)
        elif f.type == "float":
            kwargs[name] = float(raw)
        else:
            kwargs[name] = raw
    return SimResult(**kwargs)
