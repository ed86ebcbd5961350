# -*- coding: utf-8 -*-
"""
BS-side path delay handling.

1) estimate delays from uplink CFRs (antenna-averaged frequency covariance + ESPRIT),
   or perturb the true delays synthetically with a given error variance
2) quantize each delay with a B-bit mid-rise quantizer over [0, tau_max]
3) feed the indices forward to the UE (error-free by default)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .channel import MultipathProfile, SystemParams, complex_normal, realize
from .errors import NumericError

logger = logging.getLogger(__name__)

ESPRIT_VARIANTS = ("ls", "tls")

# Indices and (index + 0.5) * step stay exact in int64 / float64 up to here.
MAX_BITS = 52

# |eigenvalue| - 1 beyond this marks an estimate as unreliable.
UNRELIABLE_MAGNITUDE_GAP = 0.5

FeedforwardLink = Callable[[np.ndarray], np.ndarray]


@dataclass
class EspritEstimate:
    delays: np.ndarray  # (L,) ascending
    rotation_eigs: np.ndarray  # eigenvalues of Psi in the same order

    @property
    def unreliable(self) -> bool:
        return bool(np.any(np.abs(np.abs(self.rotation_eigs) - 1.0) > UNRELIABLE_MAGNITUDE_GAP))


@dataclass
class DelayReport:
    true_delays: np.ndarray
    est_delays: np.ndarray  # matched to true_delays entry by entry
    quant_indices: np.ndarray
    quant_delays: np.ndarray
    bits: int
    tau_max: float
    sigma2_est: float
    unreliable: bool = False

    @property
    def step(self) -> float:
        return quantization_step(self.bits, self.tau_max)

    @property
    def delay_errors(self) -> np.ndarray:
        """tau_hat - tau per path."""
        return self.quant_delays - self.true_delays


@dataclass
class Sigma2Measurement:
    sigma2: float
    n_trials: int
    n_unreliable: int = 0


# ---------------------------
# Estimation
# ---------------------------

def freq_covariance(cfr_ul: np.ndarray) -> np.ndarray:
    """R_f = (1/M) sum_m h_m h_m^H over the rows of the (M, K) uplink CFR."""
    H = np.atleast_2d(cfr_ul)
    if H.shape[0] < 1:
        raise ValueError("need at least one antenna")
    R = (H.T @ H.conj()) / H.shape[0]
    return 0.5 * (R + R.conj().T)


def add_uplink_noise(
    cfr_ul: np.ndarray,
    snr_db: float,
    rng: np.random.Generator,
    signal_power: float = 1.0,
) -> np.ndarray:
    noise_var = signal_power * 10.0 ** (-snr_db / 10.0)
    return cfr_ul + complex_normal(rng, cfr_ul.shape, noise_var)


def _rotation(e1: np.ndarray, e2: np.ndarray, variant: str) -> np.ndarray:
    if variant == "ls":
        psi, *_ = scipy.linalg.lstsq(e1, e2)
        return psi
    if variant == "tls":
        n = e1.shape[1]
        c = np.hstack((e1, e2))
        _, v = scipy.linalg.eigh(c.conj().T @ c)
        v = v[:, ::-1]
        v12 = v[:n, n:]
        v22 = v[n:, n:]
        return -v12 @ np.linalg.inv(v22)
    raise ValueError(f"unknown ESPRIT variant {variant!r}; expected one of {ESPRIT_VARIANTS}")


def esprit(
    r_f: np.ndarray,
    n_paths: int,
    symbol_duration: float,
    variant: str = "ls",
) -> EspritEstimate:
    """Shift-invariance delay estimate from a K x K frequency covariance."""
    K = r_f.shape[0]
    if not 1 <= n_paths < K:
        raise ValueError(f"n_paths={n_paths} must lie in [1, {K - 1}]")
    try:
        _, signal = scipy.linalg.eigh(r_f, subset_by_index=[K - n_paths, K - 1])
        psi = _rotation(signal[:-1, :], signal[1:, :], variant)
        z = scipy.linalg.eigvals(psi)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NumericError(f"ESPRIT failed: {e}") from e

    T = symbol_duration
    tau = np.mod(-np.angle(z), 2.0 * np.pi) * T / (2.0 * np.pi)
    # phase jitter just below zero delay wraps to T
    tau[tau > T * (1.0 - 1e-9)] = 0.0
    order = np.argsort(tau, kind="stable")
    est = EspritEstimate(delays=tau[order], rotation_eigs=z[order])
    if est.unreliable:
        logger.warning("ESPRIT rotation eigenvalues off the unit circle: %s", np.abs(est.rotation_eigs))
    return est


def estimate_delays(
    cfr_ul: np.ndarray,
    params: SystemParams,
    rng: Optional[np.random.Generator] = None,
    uplink_snr_db: Optional[float] = None,
    variant: str = "ls",
) -> EspritEstimate:
    if uplink_snr_db is not None:
        if rng is None:
            raise ValueError("uplink noise needs a random stream")
        cfr_ul = add_uplink_noise(cfr_ul, uplink_snr_db, rng)
    return esprit(freq_covariance(cfr_ul), params.n_paths, params.symbol_duration, variant)


def synth_estimate(
    true_delays,
    sigma2: float,
    rng: np.random.Generator,
    tau_max: float,
) -> np.ndarray:
    """tau_tilde = tau + N(0, sigma2), clamped to [0, tau_max]."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    tau = np.asarray(true_delays, dtype=float)
    err = rng.normal(0.0, np.sqrt(sigma2), tau.shape)
    return np.clip(tau + err, 0.0, tau_max)


def sigma2_from_db(sigma2_db: float, tau_max: float) -> float:
    """Error variance from dB relative to tau_max^2 / 12."""
    return 10.0 ** (sigma2_db / 10.0) * tau_max ** 2 / 12.0


def sigma2_to_db(sigma2: float, tau_max: float) -> float:
    if sigma2 <= 0:
        return float("-inf")
    return 10.0 * np.log10(sigma2 / (tau_max ** 2 / 12.0))


def match_delays(true_delays, est_delays) -> np.ndarray:
    """Reorder est_delays so entry l is the estimate assigned to true path l."""
    true = np.asarray(true_delays, dtype=float)
    est = np.asarray(est_delays, dtype=float)
    if true.size != est.size:
        raise ValueError(f"cannot match {est.size} estimates to {true.size} paths")
    cost = np.abs(true[:, None] - est[None, :])
    rows, cols = linear_sum_assignment(cost)
    out = np.empty_like(true)
    out[rows] = est[cols]
    return out


# ---------------------------
# Quantization / feedforward
# ---------------------------

def _check_bits(bits: int) -> None:
    if not 1 <= bits <= MAX_BITS:
        raise ValueError(f"bits must lie in [1, {MAX_BITS}], got {bits}")


def quantization_step(bits: int, tau_max: float) -> float:
    return tau_max / 2 ** bits


def quantize(tau, bits: int, tau_max: float):
    """Mid-rise quantizer; returns (index, tau_hat), scalars for scalar input."""
    _check_bits(bits)
    step = quantization_step(bits, tau_max)
    t = np.clip(np.asarray(tau, dtype=float), 0.0, tau_max)
    index = np.minimum(np.floor(t / step), 2 ** bits - 1).astype(np.int64)
    tau_hat = (index + 0.5) * step
    if index.ndim == 0:
        return int(index), float(tau_hat)
    return index, tau_hat


def dequantize(indices, bits: int, tau_max: float) -> np.ndarray:
    _check_bits(bits)
    step = quantization_step(bits, tau_max)
    return (np.asarray(indices, dtype=np.int64) + 0.5) * step


def feedforward(indices) -> np.ndarray:
    """Error-free BS -> UE link. Substitute another FeedforwardLink to impair it."""
    return np.array(indices, dtype=np.int64, copy=True).reshape(-1)


def build_report(
    true_delays,
    est_delays,
    bits: int,
    tau_max: float,
    sigma2: float,
    link: FeedforwardLink = feedforward,
    unreliable: bool = False,
) -> DelayReport:
    true = np.asarray(true_delays, dtype=float)
    matched = match_delays(true, est_delays)
    indices, _ = quantize(matched, bits, tau_max)
    received = link(indices)
    return DelayReport(
        true_delays=true,
        est_delays=matched,
        quant_indices=received,
        quant_delays=dequantize(received, bits, tau_max),
        bits=bits,
        tau_max=tau_max,
        sigma2_est=sigma2,
        unreliable=unreliable,
    )


def measure_sigma2(
    params: SystemParams,
    profile: MultipathProfile,
    n_trials: int,
    rng: np.random.Generator,
    variant: str = "ls",
    uplink_snr_db: Optional[float] = None,
) -> Sigma2Measurement:
    """Empirical ESPRIT error variance, mean over paths and trials."""
    if n_trials < 100:
        raise ValueError("n_trials must be >= 100")
    sq_err = np.empty(n_trials)
    unreliable = 0
    for i in range(n_trials):
        realization = realize(profile, params, rng)
        est = estimate_delays(realization.cfr_ul, params, rng, uplink_snr_db, variant)
        unreliable += int(est.unreliable)
        matched = match_delays(profile.delays, est.delays)
        sq_err[i] = np.mean((matched - profile.delays) ** 2)
    if unreliable:
        logger.warning("%d of %d ESPRIT trials flagged unreliable", unreliable, n_trials)
    return Sigma2Measurement(sigma2=float(np.mean(sq_err)), n_trials=n_trials, n_unreliable=unreliable)
