# -*- coding: utf-8 -*-
"""
Inner precoder eigenbeams, the effective channel and the training model.

The inner precoder W = U_s* is never formed; the effective channel is taken
directly as b_d[k] = u_s[d]^H h[k].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.linalg

from .channel import (
    ChannelRealization,
    MultipathProfile,
    SpatialCovariance,
    SystemParams,
    complex_normal,
    steering_matrix,
)
from .errors import NumericError

logger = logging.getLogger(__name__)

CovarianceLike = Union[SpatialCovariance, np.ndarray]

# Relative gap below which two eigenvalues are treated as one eigenspace.
DEGENERACY_TOL = 1e-10
PIVOT_TIE_TOL = 1e-8


@dataclass
class EffectiveChannel:
    basis: np.ndarray  # U_s, (M, D)
    beta: np.ndarray  # (D, L)
    cfr: np.ndarray  # b, (D, K)


@dataclass
class TrainingBlock:
    phases: np.ndarray  # (D, K) in [-pi, pi)

    @classmethod
    def constant(cls, n_beams: int, n_subcarriers: int) -> "TrainingBlock":
        """All-zero phases, i.e. a_d[k] = 1."""
        return cls(phases=np.zeros((n_beams, n_subcarriers)))

    @property
    def n_beams(self) -> int:
        return int(self.phases.shape[0])

    @property
    def n_subcarriers(self) -> int:
        return int(self.phases.shape[1])

    @property
    def symbols(self) -> np.ndarray:
        """a_d[k] = e^{j phi_d[k]}, shape (D, K)."""
        return np.exp(1j * self.phases)

    def diag(self, d: int) -> np.ndarray:
        return np.diag(self.symbols[d])

    def stacked(self) -> np.ndarray:
        """Dense A = [A_0, ..., A_{D-1}], shape (K, D*K). Small cases only."""
        return np.hstack([self.diag(d) for d in range(self.n_beams)])


def _as_matrix(covariance: CovarianceLike) -> np.ndarray:
    if isinstance(covariance, SpatialCovariance):
        return covariance.total
    return np.asarray(covariance)


def _pivoted_basis(projector: np.ndarray, size: int) -> np.ndarray:
    # Column-pivoted Gram-Schmidt on the projector; near-ties go to the lowest index.
    residual = projector.astype(complex)
    out = np.empty((projector.shape[0], size), dtype=complex)
    for j in range(size):
        norms = np.linalg.norm(residual, axis=0)
        pick = int(np.argmax(norms >= (1.0 - PIVOT_TIE_TOL) * norms.max()))
        q = residual[:, pick] / norms[pick]
        out[:, j] = q
        residual -= np.outer(q, q.conj() @ residual)
    return out


def _canonical_eigenspaces(values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    # Replace the arbitrary basis of each degenerate cluster by a pivoted basis
    # of its projector so the result depends only on the eigenspace.
    scale = max(float(np.max(np.abs(values))), np.finfo(float).tiny)
    out = vectors.copy()
    start = 0
    n = values.size
    while start < n:
        stop = start + 1
        while stop < n and values[stop - 1] - values[stop] <= DEGENERACY_TOL * scale:
            stop += 1
        if stop - start > 1:
            block = vectors[:, start:stop]
            out[:, start:stop] = _pivoted_basis(block @ block.conj().T, stop - start)
        start = stop
    return out


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column becomes real positive.
    idx = np.argmax(np.abs(vectors), axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    return vectors * (np.abs(pivots) / pivots)[None, :]


def eigenbeams(covariance: CovarianceLike, n_beams: int) -> np.ndarray:
    """Top-D eigenvectors of R_s, eigenvalues descending, deterministic phase."""
    R = _as_matrix(covariance)
    if n_beams > R.shape[0]:
        raise ValueError(f"n_beams={n_beams} exceeds matrix size {R.shape[0]}")
    try:
        values, vectors = scipy.linalg.eigh(R)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"eigendecomposition of spatial covariance failed: {e}") from e
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = _canonical_eigenspaces(values, vectors[:, order])
    return _fix_phases(vectors[:, :n_beams])


def top_eigen_sum(matrix: np.ndarray, n: int) -> float:
    """g_D: sum of the n largest eigenvalues of a Hermitian matrix."""
    values = scipy.linalg.eigvalsh(matrix)
    return float(np.sum(np.sort(values)[::-1][:n]))


def energy_capture(basis: np.ndarray, matrix: np.ndarray) -> float:
    """Tr{U^H R U}."""
    return float(np.real(np.trace(basis.conj().T @ matrix @ basis)))


def effective_channel(
    basis: np.ndarray,
    realization: ChannelRealization,
    profile: MultipathProfile,
    params: SystemParams,
    check: bool = __debug__,
) -> EffectiveChannel:
    beta = basis.conj().T @ realization.alpha
    b = basis.conj().T @ realization.cfr
    if check:
        S = steering_matrix(profile.delays, params.n_subcarriers, params.symbol_duration)
        gap = float(np.max(np.abs(beta @ S.T - b))) if b.size else 0.0
        if gap > 1e-10 * max(1.0, float(np.max(np.abs(b)))):
            raise NumericError(f"effective CFR paths disagree by {gap:.3g}")
    return EffectiveChannel(basis=basis, beta=beta, cfr=b)


def training(n_beams: int, n_subcarriers: int, rng: np.random.Generator) -> TrainingBlock:
    if n_beams < 1 or n_subcarriers < 1:
        raise ValueError("training needs D, K >= 1")
    return TrainingBlock(phases=rng.uniform(-np.pi, np.pi, (n_beams, n_subcarriers)))


def transmit(
    block: TrainingBlock,
    eff: EffectiveChannel,
    noise_var: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """y[k] = sum_d a_d[k] b_d[k] + z[k]."""
    if noise_var < 0:
        raise ValueError("noise_var must be >= 0")
    if block.phases.shape != eff.cfr.shape:
        raise ValueError(f"training {block.phases.shape} does not match channel {eff.cfr.shape}")
    noise = complex_normal(rng, block.n_subcarriers, noise_var)
    return np.sum(block.symbols * eff.cfr, axis=0) + noise
