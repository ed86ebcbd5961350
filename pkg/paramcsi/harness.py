# -*- coding: utf-8 -*-
"""
Seeded Monte-Carlo sweeps over the full estimation pipeline.

Per sweep point:
- draw n_profiles multipath profiles, each with its eigenbeams and theory values
- run n_realizations trials per profile: realize -> delays -> quantize ->
  feed forward -> merge -> LS -> regenerate (plus the genie MMSE baseline)
- average per-trial metrics in trial-index order

Every trial owns a random stream derived from (seed, role, profile, realization),
so results do not depend on how many worker threads ran them.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from .amp_est import (
    EffectiveCovariance,
    build_design_matrix,
    effective_covariance,
    ls_amplitudes,
    merge_delays,
    mmse_estimate,
    regenerate_cfr,
)
from .analysis import (
    TheoryInputs,
    capacity,
    mmse_conditional,
    mmse_theoretical,
    mse_approx,
    mse_approx_per_path,
    mse_empirical,
    mse_exact,
    mse_noise_conditional,
    mse_worst_case,
    quantization_variance,
)
from .channel import MultipathProfile, SpatialCovariance, make_profile, realize, spatial_covariance
from .config import ConfigManager, ExperimentConfig
from .delay_est import (
    Sigma2Measurement,
    build_report,
    estimate_delays,
    measure_sigma2,
    synth_estimate,
)
from .errors import ParamCsiError
from .precoding import effective_channel, eigenbeams, training, transmit

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "sweep_axis",
    "sweep_value",
    "mse_empirical",
    "mse_se",
    "mse_exact",
    "mse_approx",
    "mse_worst",
    "mmse_theory",
    "mmse_empirical",
    "capacity",
    "capacity_se",
    "trials",
    "seed",
)

# stream roles
ROLE_PROFILE = 0
ROLE_TRIAL = 1
ROLE_SIGMA2 = 2

MIN_SIGMA2_TRIALS = 100

NAN = float("nan")


@dataclass
class MseRow:
    sweep_axis: str
    sweep_value: float
    mse_empirical: float = NAN
    mse_se: float = NAN
    mse_exact: float = NAN
    mse_approx: float = NAN
    mse_worst: float = NAN
    mmse_theory: float = NAN
    mmse_empirical: float = NAN
    capacity: float = NAN
    capacity_se: float = NAN
    trials: int = 0
    seed: int = 0
    # not part of the CSV
    mse_conditional_floor: float = NAN
    mmse_conditional: float = NAN
    capacity_ideal: float = NAN
    merged_fraction: float = NAN
    unreliable_fraction: float = NAN
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def csv_record(self) -> dict:
        data = asdict(self)
        return {k: data[k] for k in CSV_COLUMNS}


@dataclass
class MseReport:
    rows: List[MseRow] = field(default_factory=list)
    config_hash: str = ""
    seed: int = 0
    trials_per_point: int = 0
    wall_time: float = 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.csv_record() for r in self.rows], columns=list(CSV_COLUMNS))


@dataclass
class _ProfileContext:
    profile: MultipathProfile
    spatial: SpatialCovariance
    basis: np.ndarray
    traces: np.ndarray
    cov: Optional[EffectiveCovariance]
    mmse_theory: float


@dataclass
class _TrialResult:
    mse: float = NAN
    mse_exact: float = NAN
    conditional_floor: float = NAN
    mmse: float = NAN
    mmse_conditional: float = NAN
    capacity: float = NAN
    capacity_ideal: float = NAN
    delay_sq_err: Optional[np.ndarray] = None  # (tau_tilde - tau)^2 per path
    merged: bool = False
    unreliable: bool = False


# ---------------------------
# Random streams
# ---------------------------

def _stream(config: ExperimentConfig, role: int, *counters: int, point_index: int = 0) -> np.random.Generator:
    words = [config.seed, role, *counters]
    if not config.common_random_numbers:
        words.append(point_index)
    return np.random.default_rng(np.random.SeedSequence(words))


# ---------------------------
# Sweep points
# ---------------------------

def point_config(config: ExperimentConfig, sweep_value: float) -> ExperimentConfig:
    """Config with the swept quantity set to sweep_value."""
    axis = config.sweep_axis
    if axis == "bits":
        return config.replace(bits=int(round(sweep_value)))
    if axis == "sigma2":
        return config.replace(sigma2_db=float(sweep_value))
    if axis == "snr":
        return config.replace(noise_var=10.0 ** (-float(sweep_value) / 10.0))
    raise ValueError(f"unknown sweep axis {axis!r}")


def _prepare_profile(config: ExperimentConfig, index: int, point_index: int) -> _ProfileContext:
    p = config.params
    rng = _stream(config, ROLE_PROFILE, index, point_index=point_index)
    profile = make_profile(
        p,
        config.pdp_decay,
        config.n_subpaths,
        rng,
        min_gap=config.effective_min_gap,
        max_redraws=config.max_redraws,
        uplink_decay=config.uplink_decay,
    )
    spatial = spatial_covariance(profile, p.n_antennas)
    basis = eigenbeams(spatial, p.n_beams)
    traces = TheoryInputs.from_basis(basis, spatial, p, config.bits, config.sigma2).traces

    cov = None
    mmse_theory = NAN
    if p.noise_var > 0:
        cov = effective_covariance(basis, spatial, profile.delays, p)
        mmse_theory = mmse_theoretical(cov.rb_eigenvalues(exact=True), p.noise_var)
    logger.debug(
        "profile %d: trace %.4g, mmse theory %.4g", index, float(np.sum(traces)), mmse_theory
    )
    return _ProfileContext(
        profile=profile,
        spatial=spatial,
        basis=basis,
        traces=traces,
        cov=cov,
        mmse_theory=mmse_theory,
    )


def _run_trial(
    config: ExperimentConfig,
    ctx: _ProfileContext,
    profile_index: int,
    realization_index: int,
    point_index: int,
) -> _TrialResult:
    p = config.params
    K, T, N0 = p.n_subcarriers, p.symbol_duration, p.noise_var
    rng = _stream(config, ROLE_TRIAL, profile_index, realization_index, point_index=point_index)
    out = _TrialResult()

    realization = realize(ctx.profile, p, rng)
    eff = effective_channel(ctx.basis, realization, ctx.profile, p)

    if config.delay_source == "esprit":
        est = estimate_delays(
            realization.cfr_ul, p, rng, config.uplink_snr_db, config.esprit_variant
        )
        est_delays = est.delays
        out.unreliable = est.unreliable
    else:
        est_delays = synth_estimate(ctx.profile.delays, config.sigma2, rng, p.tau_max)
    report = build_report(
        ctx.profile.delays,
        est_delays,
        config.bits,
        p.tau_max,
        config.sigma2,
        unreliable=out.unreliable,
    )
    out.delay_sq_err = (report.est_delays - report.true_delays) ** 2

    block = training(p.n_beams, K, rng)
    y = transmit(block, eff, N0, rng)

    if N0 > 0:
        out.capacity_ideal = capacity(eff.cfr, eff.cfr, N0)

    if "ls_parametric" in config.estimators:
        merged, mapping = merge_delays(
            report.quant_delays,
            K,
            T,
            eta=config.eta,
            representative=config.merge_representative,
            powers=ctx.profile.powers,
        )
        out.merged = merged.size < report.quant_delays.size
        design = build_design_matrix(block, merged, p, mapping)
        beta_hat = ls_amplitudes(design, y, config.condition_cap)
        b_hat = regenerate_cfr(beta_hat, merged, p)
        out.mse = mse_empirical(b_hat, eff.cfr)
        out.mse_exact = mse_exact(
            TheoryInputs(
                traces=ctx.traces,
                params=p,
                bits=config.bits,
                sigma2=config.sigma2,
                delay_errors=report.delay_errors,
            )
        )
        out.conditional_floor = mse_noise_conditional(design, p, N0)
        if N0 > 0:
            out.capacity = capacity(eff.cfr, b_hat, N0)

    if "mmse_genie" in config.estimators and ctx.cov is not None:
        b_mmse = mmse_estimate(y, block, ctx.cov, N0, p)
        out.mmse = mse_empirical(b_mmse, eff.cfr)
        out.mmse_conditional = mmse_conditional(block, ctx.cov, N0, p)
        if np.isnan(out.capacity):
            out.capacity = capacity(eff.cfr, b_mmse, N0)
    return out


def _mean(values: np.ndarray) -> float:
    return float(np.mean(values)) if values.size else NAN


def _standard_error(values: np.ndarray) -> float:
    if values.size < 2 or np.any(np.isnan(values)):
        return 0.0 if values.size == 1 else NAN
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def _theory_columns(
    config: ExperimentConfig,
    contexts: Sequence[_ProfileContext],
    results: Sequence[_TrialResult],
) -> dict:
    p = config.params
    R = config.n_realizations
    approx, worst = [], []
    for i, ctx in enumerate(contexts):
        if config.delay_source == "esprit":
            # the estimator's error variance is not known up front; use the profile's own trials
            sq = np.stack([r.delay_sq_err for r in results[i * R:(i + 1) * R]])
            err_vars = np.mean(sq, axis=0)
            qvar = quantization_variance(config.bits, p.tau_max)
            approx.append(mse_approx_per_path(ctx.traces, err_vars + qvar, p))
            worst.append(mse_worst_case(p, config.bits, float(np.mean(err_vars))))
        else:
            inputs = TheoryInputs(traces=ctx.traces, params=p, bits=config.bits, sigma2=config.sigma2)
            approx.append(mse_approx(inputs))
            worst.append(mse_worst_case(p, config.bits, config.sigma2))
    return {
        "mse_approx": float(np.mean(approx)),
        "mse_worst": float(np.mean(worst)),
        "mmse_theory": float(np.mean([c.mmse_theory for c in contexts])),
    }


def run_point(
    config: ExperimentConfig,
    sweep_value: float,
    point_index: int = 0,
    threads: int = 1,
) -> MseRow:
    """One report row; numeric failures yield a diagnostic row instead of raising."""
    if threads < 1:
        raise ValueError("threads must be >= 1")
    row = MseRow(
        sweep_axis=config.sweep_axis,
        sweep_value=float(sweep_value),
        trials=config.n_trials,
        seed=config.seed,
    )
    cfg = point_config(config, sweep_value)
    try:
        cfg.validate()
        contexts = [_prepare_profile(cfg, i, point_index) for i in range(cfg.n_profiles)]
        jobs = [(i, r) for i in range(cfg.n_profiles) for r in range(cfg.n_realizations)]

        def job(item):
            i, r = item
            return _run_trial(cfg, contexts[i], i, r, point_index)

        if threads == 1:
            results = [job(item) for item in jobs]
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(job, jobs))
    except ParamCsiError as e:
        logger.warning("%s=%s aborted: %s", config.sweep_axis, sweep_value, e)
        row.error = f"{type(e).__name__}: {e}"
        return row

    def column(name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in results], dtype=float)

    mse = column("mse")
    cap = column("capacity")
    row.mse_empirical = _mean(mse)
    row.mse_se = _standard_error(mse)
    row.mse_exact = _mean(column("mse_exact"))
    row.mmse_empirical = _mean(column("mmse"))
    row.capacity = _mean(cap)
    row.capacity_se = _standard_error(cap)
    row.mse_conditional_floor = _mean(column("conditional_floor"))
    row.mmse_conditional = _mean(column("mmse_conditional"))
    row.capacity_ideal = _mean(column("capacity_ideal"))
    row.merged_fraction = _mean(column("merged"))
    row.unreliable_fraction = _mean(column("unreliable"))
    for key, value in _theory_columns(cfg, contexts, results).items():
        setattr(row, key, value)

    if row.unreliable_fraction > 0:
        logger.warning(
            "%s=%s: %.1f%% of ESPRIT estimates unreliable",
            config.sweep_axis,
            sweep_value,
            100.0 * row.unreliable_fraction,
        )
    if row.merged_fraction > 0:
        logger.warning(
            "%s=%s: delays merged in %.1f%% of trials",
            config.sweep_axis,
            sweep_value,
            100.0 * row.merged_fraction,
        )
    return row


def sweep(config: ExperimentConfig, threads: int = 1) -> MseReport:
    report = MseReport(
        config_hash=config.config_hash(),
        seed=config.seed,
        trials_per_point=config.n_trials,
    )
    started = time.perf_counter()
    for index, value in enumerate(config.sweep_values):
        t0 = time.perf_counter()
        logger.info(
            "point %d/%d: %s=%s (%d trials)",
            index + 1,
            len(config.sweep_values),
            config.sweep_axis,
            value,
            config.n_trials,
        )
        row = run_point(config, value, index, threads)
        report.rows.append(row)
        logger.info(
            "point %d done in %.2fs: mse %.4g, capacity %.4g",
            index + 1,
            time.perf_counter() - t0,
            row.mse_empirical,
            row.capacity,
        )
    report.wall_time = time.perf_counter() - started
    return report


def measure_config_sigma2(config: ExperimentConfig) -> Sigma2Measurement:
    """Empirical ESPRIT error variance averaged over the config's profiles."""
    p = config.params
    n_trials = max(MIN_SIGMA2_TRIALS, config.n_realizations)
    values, unreliable = [], 0
    for i in range(config.n_profiles):
        ctx_rng = _stream(config, ROLE_PROFILE, i)
        profile = make_profile(
            p,
            config.pdp_decay,
            config.n_subpaths,
            ctx_rng,
            min_gap=config.effective_min_gap,
            max_redraws=config.max_redraws,
            uplink_decay=config.uplink_decay,
        )
        m = measure_sigma2(
            p,
            profile,
            n_trials,
            _stream(config, ROLE_SIGMA2, i),
            variant=config.esprit_variant,
            uplink_snr_db=config.uplink_snr_db,
        )
        values.append(m.sigma2)
        unreliable += m.n_unreliable
    return Sigma2Measurement(
        sigma2=float(np.mean(values)),
        n_trials=n_trials * config.n_profiles,
        n_unreliable=unreliable,
    )


# ---------------------------
# Files
# ---------------------------

def emit_csv(report: MseReport, path) -> None:
    path = Path(path)
    try:
        report.to_frame().to_csv(path, index=False, lineterminator="\n")
    except OSError as e:
        raise OSError(f"cannot write report {path}: {e}") from e


def load_config(path) -> ExperimentConfig:
    return ConfigManager(Path(path)).load()


def save_config(config: ExperimentConfig, path) -> None:
    ConfigManager(Path(path)).save(config)
