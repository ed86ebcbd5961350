# -*- coding: utf-8 -*-
"""
Physical multipath channel for a half-wavelength ULA.

- SystemParams: OFDM / array dimensions shared by every module
- MultipathProfile: delays, powers and subpath departure angles (geometry)
- ChannelRealization: per-antenna path amplitudes and the derived CFRs
- SpatialCovariance: analytic per-path and total spatial covariance

Delays are in seconds, angles in radians. Each path is a sum of equal-variance
complex Gaussian rays whose angles are fixed per profile; only the ray gains
are redrawn per realization, independently for downlink and uplink.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DelayDomainError, GenerationError

logger = logging.getLogger(__name__)

DEFAULT_MAX_REDRAWS = 1000


@dataclass(frozen=True)
class SystemParams:
    n_subcarriers: int = 256
    subcarrier_spacing: float = 15e3
    n_antennas: int = 64
    n_beams: int = 6
    n_paths: int = 6
    noise_var: float = 0.1
    tau_max: float = 5e-6

    @property
    def symbol_duration(self) -> float:
        # T = 1/delta_f exactly; never stored separately.
        return 1.0 / self.subcarrier_spacing

    @property
    def resolution(self) -> float:
        """Steering-vector resolution T/K in seconds."""
        return self.symbol_duration / self.n_subcarriers

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    def problems(self) -> List[Tuple[Tuple[str, ...], str]]:
        """(offending keys, message) for every violated constraint."""
        out: List[Tuple[Tuple[str, ...], str]] = []
        if self.n_subcarriers < 1:
            out.append((("n_subcarriers",), "n_subcarriers must be positive"))
        if self.subcarrier_spacing <= 0:
            out.append((("subcarrier_spacing",), "subcarrier_spacing must be positive"))
        if self.n_antennas < 1:
            out.append((("n_antennas",), "n_antennas must be positive"))
        if self.n_paths < 1:
            out.append((("n_paths",), "n_paths must be >= 1"))
        if self.n_beams < 1 or self.n_beams > self.n_antennas:
            out.append((("n_beams", "n_antennas"), "n_beams must lie in [1, n_antennas]"))
        if self.n_subcarriers < 2 * self.n_paths:
            out.append((("n_subcarriers", "n_paths"), "n_subcarriers must be >= 2 * n_paths"))
        if self.noise_var < 0:
            out.append((("noise_var",), "noise_var must be >= 0"))
        if self.subcarrier_spacing > 0 and not 0 < self.tau_max < self.symbol_duration:
            out.append((("tau_max",), "tau_max must lie in (0, 1/subcarrier_spacing)"))
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ValueError("; ".join(msg for _, msg in problems))


@dataclass
class MultipathProfile:
    delays: np.ndarray  # (L,) seconds, ascending
    powers: np.ndarray  # (L,) downlink sigma_l^2, sums to 1
    powers_ul: np.ndarray  # (L,) uplink
    subpath_angles: np.ndarray  # (L, N_p) radians
    centers: Optional[np.ndarray] = None
    spreads: Optional[np.ndarray] = None

    @property
    def n_paths(self) -> int:
        return int(self.delays.size)

    @property
    def n_subpaths(self) -> int:
        return int(self.subpath_angles.shape[1])

    def validate(self, min_gap: float = 0.0) -> None:
        if abs(float(np.sum(self.powers)) - 1.0) > 1e-12:
            raise ValueError("downlink powers must sum to 1")
        if self.n_paths > 1:
            gaps = np.diff(self.delays)
            if np.any(gaps <= 0):
                raise ValueError("delays must be strictly increasing")
            if np.any(gaps < min_gap):
                raise ValueError(f"delay gap below {min_gap:.3g} s")
        if self.subpath_angles.shape[0] != self.n_paths:
            raise ValueError("one row of subpath angles per path")


@dataclass
class ChannelRealization:
    alpha: np.ndarray  # (M, L) downlink amplitudes
    alpha_ul: np.ndarray  # (M, L) uplink amplitudes
    cfr: np.ndarray  # (M, K)
    cfr_ul: np.ndarray  # (M, K)


@dataclass
class SpatialCovariance:
    per_path: np.ndarray  # (L, M, M)
    total: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.total = np.sum(self.per_path, axis=0)


def complex_normal(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """Circular complex Gaussian samples with E|x|^2 = var."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def ula_response(angles: np.ndarray, n_antennas: int) -> np.ndarray:
    """(M, N) matrix with entries e^{-j pi m sin(theta_i)}."""
    m = np.arange(n_antennas)[:, None]
    return np.exp(-1j * np.pi * m * np.sin(np.asarray(angles, dtype=float))[None, :])


def _normalized_pdp(delays: np.ndarray, decay: float) -> np.ndarray:
    weights = np.exp(-delays / decay)
    return weights / np.sum(weights)


def make_profile(
    params: SystemParams,
    decay: float,
    n_subpaths: int,
    rng: np.random.Generator,
    min_gap: Optional[float] = None,
    max_redraws: int = DEFAULT_MAX_REDRAWS,
    uplink_decay: Optional[float] = None,
) -> MultipathProfile:
    """Draw an exponential-PDP profile with uniform delays and clustered AoDs.

    Delays are redrawn as a whole until every adjacent gap is at least
    `min_gap` (default T/(2K)).
    """
    if decay <= 0:
        raise ValueError("decay must be positive")
    if n_subpaths < 1:
        raise ValueError("n_subpaths must be >= 1")
    L = params.n_paths
    if min_gap is None:
        min_gap = params.resolution / 2.0

    for attempt in range(max_redraws):
        delays = np.sort(rng.uniform(0.0, params.tau_max, L))
        if L == 1 or np.min(np.diff(delays)) >= min_gap:
            break
    else:
        raise GenerationError(
            f"no delay draw with gaps >= {min_gap:.3g} s after {max_redraws} attempts"
        )
    if attempt:
        logger.debug("delay draw accepted after %d redraws", attempt)

    powers = _normalized_pdp(delays, decay)
    powers_ul = powers.copy() if uplink_decay is None else _normalized_pdp(delays, uplink_decay)

    centers = rng.uniform(-np.pi, np.pi, L)
    spreads = rng.uniform(0.0, np.pi / 2.0, L)
    offsets = rng.uniform(-0.5, 0.5, (L, n_subpaths))
    angles = centers[:, None] + offsets * spreads[:, None]

    return MultipathProfile(
        delays=delays,
        powers=powers,
        powers_ul=powers_ul,
        subpath_angles=angles,
        centers=centers,
        spreads=spreads,
    )


def spatial_covariance(profile: MultipathProfile, n_antennas: int) -> SpatialCovariance:
    n_sub = profile.n_subpaths
    per_path = np.empty((profile.n_paths, n_antennas, n_antennas), dtype=complex)
    for l in range(profile.n_paths):
        a = ula_response(profile.subpath_angles[l], n_antennas)
        per_path[l] = (profile.powers[l] / n_sub) * (a @ a.conj().T)
    return SpatialCovariance(per_path=per_path)


def steering_vector(tau: float, n_subcarriers: int, symbol_duration: float) -> np.ndarray:
    if not 0.0 <= tau < symbol_duration:
        raise DelayDomainError(f"delay {tau!r} outside [0, {symbol_duration!r})")
    k = np.arange(n_subcarriers)
    return np.exp(-2j * np.pi * k * tau / symbol_duration)


def steering_matrix(delays, n_subcarriers: int, symbol_duration: float) -> np.ndarray:
    """(K, L) matrix S whose columns are steering vectors."""
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    bad = (delays < 0.0) | (delays >= symbol_duration)
    if np.any(bad):
        raise DelayDomainError(f"delays {delays[bad]!r} outside [0, {symbol_duration!r})")
    k = np.arange(n_subcarriers)[:, None]
    return np.exp(-2j * np.pi * k * delays[None, :] / symbol_duration)


def dirichlet(delta, n_subcarriers: int, symbol_duration: float):
    """Exact (1/K) s^H(tau_l) s(tau_p) as a function of delta = tau_l - tau_p."""
    K = n_subcarriers
    x = np.asarray(delta, dtype=float) / symbol_duration
    num = np.sin(np.pi * K * x)
    den = K * np.sin(np.pi * x)
    at_pole = np.abs(np.sin(np.pi * x)) < 1e-12
    # l'Hopital at integer x
    safe_den = np.where(at_pole, 1.0, den)
    ratio = np.where(at_pole, np.cos(np.pi * K * x) / np.cos(np.pi * x), num / safe_den)
    out = np.exp(1j * np.pi * (K - 1) * x) * ratio
    return out if out.ndim else complex(out)


def realize(
    profile: MultipathProfile,
    params: SystemParams,
    rng: np.random.Generator,
) -> ChannelRealization:
    M = params.n_antennas
    L, n_sub = profile.subpath_angles.shape
    response = np.stack([ula_response(profile.subpath_angles[l], M) for l in range(L)])

    gains = complex_normal(rng, (L, n_sub)) * np.sqrt(profile.powers / n_sub)[:, None]
    gains_ul = complex_normal(rng, (L, n_sub)) * np.sqrt(profile.powers_ul / n_sub)[:, None]
    alpha = np.einsum("lmi,li->ml", response, gains)
    alpha_ul = np.einsum("lmi,li->ml", response, gains_ul)

    S = steering_matrix(profile.delays, params.n_subcarriers, params.symbol_duration)
    return ChannelRealization(
        alpha=alpha,
        alpha_ul=alpha_ul,
        cfr=alpha @ S.T,
        cfr_ul=alpha_ul @ S.T,
    )
