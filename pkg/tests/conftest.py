# -*- coding: utf-8 -*-
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from paramcsi.channel import MultipathProfile, SystemParams  # noqa: E402
from paramcsi.config import ExperimentConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def reference_params():
    """OFDM / array setup of the reference simulation (K=256, M=64, D=L=6)."""
    return SystemParams()


@pytest.fixture
def scaled_params():
    """Desk-speed variant: K=64, M=32, D=L=4."""
    return SystemParams(n_subcarriers=64, n_antennas=32, n_beams=4, n_paths=4)


@pytest.fixture
def tiny_params():
    return SystemParams(n_subcarriers=16, n_antennas=8, n_beams=2, n_paths=2)


@pytest.fixture
def wide_profile():
    """Two equal-power paths with wide, disjoint angular support (M=8 friendly)."""
    angles = np.stack(
        [
            np.linspace(-1.2, 0.2, 10),
            np.linspace(0.1, 1.4, 10),
        ]
    )
    powers = np.array([0.5, 0.5])
    return MultipathProfile(
        delays=np.array([1.0e-6, 3.5e-6]),
        powers=powers,
        powers_ul=powers.copy(),
        subpath_angles=angles,
    )


@pytest.fixture
def tiny_config():
    params = SystemParams(n_subcarriers=32, n_antennas=8, n_beams=2, n_paths=2)
    return ExperimentConfig(
        params=params,
        n_profiles=2,
        n_realizations=3,
        sweep_axis="bits",
        sweep_values=(6.0, 10.0),
        seed=7,
    )
