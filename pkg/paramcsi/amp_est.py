# -*- coding: utf-8 -*-
"""
UE-side amplitude estimation.

Given fed-forward (quantized) delays the UE solves y = X beta + z by least
squares, merging delays it cannot separate, and regenerates the effective CFR.
A genie MMSE estimator working from the true effective covariance is kept as
the reference baseline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from .channel import SpatialCovariance, SystemParams, steering_matrix
from .errors import NumericError, SingularSystemError
from .precoding import TrainingBlock

logger = logging.getLogger(__name__)

DEFAULT_MERGE_ETA = 4.0
DEFAULT_CONDITION_CAP = 1e6
MERGE_REPRESENTATIVES = ("mean", "strongest")


@dataclass
class DesignMatrix:
    X: np.ndarray  # (K, D*L')
    delays: np.ndarray  # (L',) delays behind the columns
    merged_map: np.ndarray  # original path index -> column index in delays
    n_beams: int

    @property
    def n_delays(self) -> int:
        return int(self.delays.size)

    def gram(self) -> np.ndarray:
        """(1/K) X^H X."""
        return self.X.conj().T @ self.X / self.X.shape[0]


@dataclass
class EffectiveCovariance:
    r_beta: np.ndarray  # (D*L, D*L), index d*L + l
    steering: np.ndarray  # S at the true delays, (K, L)
    delays: np.ndarray
    n_beams: int

    @property
    def n_paths(self) -> int:
        return int(self.delays.size)

    def factor(self) -> np.ndarray:
        """I_D (x) S, shape (D*K, D*L)."""
        return np.kron(np.eye(self.n_beams), self.steering)

    def dense_rb(self) -> np.ndarray:
        """R_b = (I (x) S) R_beta (I (x) S^H). Only for small K."""
        F = self.factor()
        return F @ self.r_beta @ F.conj().T

    def _sqrt_r_beta(self) -> np.ndarray:
        w, v = scipy.linalg.eigh(self.r_beta)
        return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T

    def rb_eigenvalues(self, exact: bool = True) -> np.ndarray:
        """The D*L significant eigenvalues of R_b, descending.

        exact=False uses S^H S = K I, i.e. K times the spectrum of R_beta.
        """
        if not exact:
            K = self.steering.shape[0]
            values = K * scipy.linalg.eigvalsh(self.r_beta)
        else:
            half = self._sqrt_r_beta()
            gram = np.kron(np.eye(self.n_beams), self.steering.conj().T @ self.steering)
            values = scipy.linalg.eigvalsh(half @ gram @ half)
        return np.clip(np.sort(values)[::-1], 0.0, None)

    def numeric_rank(self, rtol: float = 1e-10) -> int:
        w = scipy.linalg.eigvalsh(self.r_beta)
        return int(np.sum(w > rtol * np.max(w)))


# ---------------------------
# Delay merging and LS
# ---------------------------

def merge_delays(
    delays,
    n_subcarriers: int,
    symbol_duration: float,
    eta: float = DEFAULT_MERGE_ETA,
    representative: str = "mean",
    powers=None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Merge delays closer than T/(eta*K) into one column.

    The default eta = 4 merges only below a quarter resolution cell, so true
    paths drawn at the default T/(2K) minimum gap stay separate. Pass eta = 1
    to merge everything within one cell T/K.

    Returns (merged delays ascending, map from original index to merged index).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if representative not in MERGE_REPRESENTATIVES:
        raise ValueError(f"unknown representative {representative!r}")
    if representative == "strongest" and powers is None:
        raise ValueError("'strongest' representative needs path powers")
    tau = np.asarray(delays, dtype=float).reshape(-1)
    n = tau.size
    threshold = symbol_duration / (eta * n_subcarriers)

    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(tau[i] - tau[j]) < threshold:
                parent[find(j)] = find(i)

    roots = [find(i) for i in range(n)]
    clusters = {}
    for i, root in enumerate(roots):
        clusters.setdefault(root, []).append(i)

    reps = []
    for members in clusters.values():
        if representative == "mean":
            reps.append(float(np.mean(tau[members])))
        else:
            weights = np.asarray(powers, dtype=float)[members]
            reps.append(float(tau[members[int(np.argmax(weights))]]))

    order = np.argsort(reps, kind="stable")
    rank_of_cluster = np.empty(len(reps), dtype=np.int64)
    rank_of_cluster[order] = np.arange(len(reps))
    cluster_index = {root: c for c, root in enumerate(clusters)}
    mapping = np.array([rank_of_cluster[cluster_index[r]] for r in roots], dtype=np.int64)
    merged = np.asarray(reps, dtype=float)[order]
    if merged.size < n:
        logger.debug("merged %d delays into %d columns", n, merged.size)
    return merged, mapping


def build_design_matrix(
    block: TrainingBlock,
    delays,
    params: SystemParams,
    merged_map: Optional[np.ndarray] = None,
) -> DesignMatrix:
    """X = [A_0 S, ..., A_{D-1} S]; column d*L' + l."""
    tau = np.asarray(delays, dtype=float).reshape(-1)
    K = block.n_subcarriers
    if K != params.n_subcarriers:
        raise ValueError(f"training has {K} subcarriers, params {params.n_subcarriers}")
    S = steering_matrix(tau, K, params.symbol_duration)
    cols = block.symbols[:, :, None] * S[None, :, :]  # (D, K, L')
    X = np.transpose(cols, (1, 0, 2)).reshape(K, -1)
    if merged_map is None:
        merged_map = np.arange(tau.size, dtype=np.int64)
    return DesignMatrix(X=X, delays=tau, merged_map=np.asarray(merged_map), n_beams=block.n_beams)


def ls_amplitudes(
    design: DesignMatrix,
    y: np.ndarray,
    condition_cap: float = DEFAULT_CONDITION_CAP,
) -> np.ndarray:
    """beta_hat = argmin ||y - X beta|| via economic QR."""
    try:
        q, r = scipy.linalg.qr(design.X, mode="economic")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NumericError(f"QR of design matrix failed: {e}") from e
    # cond(X^H X) = cond(R)^2
    condition = float(np.linalg.cond(r)) ** 2
    if not np.isfinite(condition) or condition > condition_cap:
        raise SingularSystemError(condition, condition_cap)
    return scipy.linalg.solve_triangular(r, q.conj().T @ y)


def regenerate_cfr(
    beta_hat: np.ndarray,
    delays,
    params: SystemParams,
) -> np.ndarray:
    """b_hat[d, k] = sum_l beta_hat[d, l] e^{-j 2 pi k tau_l / T}."""
    tau = np.asarray(delays, dtype=float).reshape(-1)
    beta = np.asarray(beta_hat)
    if beta.ndim == 1:
        beta = beta.reshape(-1, tau.size)
    S = steering_matrix(tau, params.n_subcarriers, params.symbol_duration)
    return beta @ S.T


# ---------------------------
# Genie MMSE
# ---------------------------

def effective_covariance(
    basis: np.ndarray,
    spatial: SpatialCovariance,
    delays,
    params: SystemParams,
) -> EffectiveCovariance:
    """R_beta with blocks E(beta_d1[l] beta_d2[l]*) = u_d1^H R_{s,l} u_d2."""
    tau = np.asarray(delays, dtype=float).reshape(-1)
    D = basis.shape[1]
    L = tau.size
    r_beta = np.zeros((D * L, D * L), dtype=complex)
    for l in range(L):
        block = basis.conj().T @ spatial.per_path[l] @ basis
        idx = np.arange(D) * L + l
        r_beta[np.ix_(idx, idx)] = block
    r_beta = 0.5 * (r_beta + r_beta.conj().T)
    S = steering_matrix(tau, params.n_subcarriers, params.symbol_duration)
    return EffectiveCovariance(r_beta=r_beta, steering=S, delays=tau, n_beams=D)


def mmse_amplitudes(
    y: np.ndarray,
    block: TrainingBlock,
    cov: EffectiveCovariance,
    noise_var: float,
    params: SystemParams,
) -> np.ndarray:
    """Posterior mean of beta, (R_beta X^H X + N0 I)^{-1} R_beta X^H y."""
    if noise_var <= 0:
        raise ValueError("MMSE needs noise_var > 0")
    X = build_design_matrix(block, cov.delays, params).X
    n = cov.r_beta.shape[0]
    lhs = cov.r_beta @ (X.conj().T @ X) + noise_var * np.eye(n)
    try:
        return scipy.linalg.solve(lhs, cov.r_beta @ (X.conj().T @ y))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise NumericError(f"MMSE solve failed: {e}") from e


def mmse_estimate(
    y: np.ndarray,
    block: TrainingBlock,
    cov: EffectiveCovariance,
    noise_var: float,
    params: SystemParams,
) -> np.ndarray:
    """b_hat = R_b A^H (A R_b A^H + N0 I)^{-1} y as a (D, K) matrix.

    With R_b = F R_beta F^H and A F = X this reduces to a (D*L) system.
    """
    beta = mmse_amplitudes(y, block, cov, noise_var, params)
    return beta.reshape(cov.n_beams, cov.n_paths) @ cov.steering.T
