# -*- coding: utf-8 -*-
"""
Closed-form performance expressions and the capacity metric.

MSE values follow the raw convention: a sum over all beams and subcarriers.
Divide by D*K for a per-coefficient figure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .amp_est import DesignMatrix, EffectiveCovariance, build_design_matrix
from .channel import SpatialCovariance, SystemParams, steering_matrix
from .precoding import TrainingBlock, energy_capture


@dataclass
class TheoryInputs:
    traces: np.ndarray  # Tr{U^H R_{s,l} U} per path
    params: SystemParams
    bits: float
    sigma2: float
    delay_errors: Optional[np.ndarray] = None  # tau_hat - tau per path
    trace_total: Optional[float] = None

    def __post_init__(self) -> None:
        self.traces = np.asarray(self.traces, dtype=float)
        if self.delay_errors is not None:
            self.delay_errors = np.asarray(self.delay_errors, dtype=float)
        if np.any(self.traces < 0):
            raise ValueError("per-path traces must be nonnegative")
        total = float(np.sum(self.traces))
        if self.trace_total is None:
            self.trace_total = total
        elif abs(self.trace_total - total) > 1e-9 * max(1.0, abs(total)):
            raise ValueError("trace_total does not match the per-path traces")

    @classmethod
    def from_basis(
        cls,
        basis: np.ndarray,
        spatial: SpatialCovariance,
        params: SystemParams,
        bits: float,
        sigma2: float,
        delay_errors=None,
    ) -> "TheoryInputs":
        traces = np.array([energy_capture(basis, r) for r in spatial.per_path])
        errors = None if delay_errors is None else np.asarray(delay_errors, dtype=float)
        return cls(traces=traces, params=params, bits=bits, sigma2=sigma2, delay_errors=errors)

    @property
    def n_paths(self) -> int:
        return int(self.traces.size)


def sinc(x):
    """sin(x)/x with sinc(0) = 1 (unnormalized)."""
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def noise_floor(params: SystemParams, n_paths: Optional[int] = None) -> float:
    """N0 * L * D."""
    L = params.n_paths if n_paths is None else n_paths
    return params.noise_var * L * params.n_beams


def quantization_variance(bits: float, tau_max: float) -> float:
    """Delta^2 / 12 = tau_max^2 / (12 * 4^B)."""
    return tau_max ** 2 / (12.0 * 4.0 ** bits)


def mse_slope(params: SystemParams) -> float:
    """pi^2 K^3 / (3 T^2), MSE per unit of trace and delay-error variance."""
    K = params.n_subcarriers
    T = params.symbol_duration
    return np.pi ** 2 * K ** 3 / (3.0 * T ** 2)


def mse_empirical(b_hat: np.ndarray, b: np.ndarray) -> float:
    if np.shape(b_hat) != np.shape(b):
        raise ValueError(f"shape mismatch {np.shape(b_hat)} vs {np.shape(b)}")
    return float(np.sum(np.abs(np.asarray(b_hat) - np.asarray(b)) ** 2))


def mse_exact(inputs: TheoryInputs) -> float:
    if inputs.delay_errors is None:
        raise ValueError("mse_exact needs per-path delay errors")
    p = inputs.params
    K = p.n_subcarriers
    x = np.pi * inputs.delay_errors * K / p.symbol_duration
    loss = 1.0 - sinc(x) ** 2
    return float(K * np.sum(inputs.traces * loss)) + noise_floor(p, inputs.n_paths)


def mse_approx(inputs: TheoryInputs) -> float:
    p = inputs.params
    err = quantization_variance(inputs.bits, p.tau_max) + inputs.sigma2
    return mse_slope(p) * inputs.trace_total * err + noise_floor(p, inputs.n_paths)


def mse_approx_per_path(traces, error_vars, params: SystemParams) -> float:
    """Small-error MSE with a separate E|tau_hat - tau|^2 for each path."""
    traces = np.asarray(traces, dtype=float)
    error_vars = np.asarray(error_vars, dtype=float)
    return float(mse_slope(params) * np.sum(traces * error_vars)) + noise_floor(params, traces.size)


def mse_worst_case(params: SystemParams, bits: float, sigma2: float) -> float:
    """mse_approx with Tr{U^H R_s U} replaced by its bound M."""
    err = quantization_variance(bits, params.tau_max) + sigma2
    return mse_slope(params) * params.n_antennas * err + noise_floor(params)


def mmse_theoretical(eigenvalues, noise_var: float) -> float:
    """N0 * sum_i lambda_i / (lambda_i + N0) over the D*L eigenvalues of R_b."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < -1e-12 * max(1.0, float(np.max(np.abs(lam), initial=0.0)))):
        raise ValueError("eigenvalues must be nonnegative")
    lam = np.clip(lam, 0.0, None)
    return float(noise_var * np.sum(lam / (lam + noise_var)))


def mse_noise_conditional(design: DesignMatrix, params: SystemParams, noise_var: float) -> float:
    """Exact LS noise term N0 Tr{(I (x) S^H S)(X^H X)^{-1}} for one training draw."""
    S = steering_matrix(design.delays, params.n_subcarriers, params.symbol_duration)
    g0 = np.kron(np.eye(design.n_beams), S.conj().T @ S)
    gram = design.X.conj().T @ design.X
    return float(noise_var * np.real(np.trace(scipy.linalg.solve(gram, g0, assume_a="her"))))


def mmse_conditional(
    block: TrainingBlock,
    cov: EffectiveCovariance,
    noise_var: float,
    params: SystemParams,
) -> float:
    """Exact MMSE MSE with the drawn A^H A, Tr{(R_b^-1 + A^H A / N0)^-1} in factored form."""
    if noise_var <= 0:
        raise ValueError("noise_var must be positive")
    X = build_design_matrix(block, cov.delays, params).X
    n = cov.r_beta.shape[0]
    posterior = noise_var * scipy.linalg.solve(
        cov.r_beta @ (X.conj().T @ X) + noise_var * np.eye(n), cov.r_beta
    )
    g0 = np.kron(np.eye(cov.n_beams), cov.steering.conj().T @ cov.steering)
    return float(np.real(np.trace(g0 @ posterior)))


def capacity(b_true: np.ndarray, b_est: np.ndarray, noise_var: float) -> float:
    """Average rate with per-subcarrier matched beamforming on the estimate, bits/s/Hz."""
    if np.shape(b_true) != np.shape(b_est):
        raise ValueError(f"shape mismatch {np.shape(b_true)} vs {np.shape(b_est)}")
    b_true = np.atleast_2d(b_true)
    b_est = np.atleast_2d(b_est)
    norms = np.linalg.norm(b_est, axis=0)
    inner = np.sum(b_true * b_est.conj(), axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    gains = np.where(norms > 0, np.abs(inner) ** 2 / safe ** 2, 0.0)
    return float(np.mean(np.log2(1.0 + gains / noise_var)))


def sinc_approx_error(delay_error, n_subcarriers: int, symbol_duration: float):
    """|sinc(x) - (1 - x^2/6)| with x = pi * delay_error * K / T."""
    x = np.pi * np.asarray(delay_error, dtype=float) * n_subcarriers / symbol_duration
    out = np.abs(sinc(x) - (1.0 - x ** 2 / 6.0))
    return out if out.ndim else float(out)
