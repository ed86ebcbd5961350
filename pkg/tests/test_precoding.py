# -*- coding: utf-8 -*-
"""Tests for eigenbeams, the effective channel and training."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from paramcsi.amp_est import build_design_matrix
from paramcsi.channel import MultipathProfile, make_profile, realize, spatial_covariance
from paramcsi.errors import NumericError
from paramcsi.precoding import (
    EffectiveChannel,
    TrainingBlock,
    effective_channel,
    eigenbeams,
    energy_capture,
    top_eigen_sum,
    training,
    transmit,
)


def _random_psd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T


class TestEigenbeams:
    def test_identity_gives_canonical_vectors(self):
        np.testing.assert_allclose(eigenbeams(np.eye(4), 2), np.eye(4)[:, :2], atol=1e-12)

    def test_all_ones_gives_uniform_vector(self):
        u = eigenbeams(np.ones((8, 8)), 1)
        np.testing.assert_allclose(u[:, 0], np.full(8, 1 / np.sqrt(8)), atol=1e-12)

    def test_orthonormal_columns(self, rng):
        u = eigenbeams(_random_psd(rng, 12), 5)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(5), atol=1e-10)

    def test_captures_largest_eigenvalues(self, rng):
        r = _random_psd(rng, 8)
        u = eigenbeams(r, 3)
        brute = np.sort(np.linalg.eigvalsh(r))[::-1][:3].sum()
        assert energy_capture(u, r) == pytest.approx(brute, rel=1e-9)
        assert top_eigen_sum(r, 3) == pytest.approx(brute, rel=1e-9)

    def test_phase_convention(self, rng):
        u = eigenbeams(_random_psd(rng, 10), 4)
        for col in u.T:
            pivot = col[np.argmax(np.abs(col))]
            assert abs(pivot.imag) < 1e-12
            assert pivot.real > 0

    def test_accepts_spatial_covariance(self, reference_params, rng):
        profile = make_profile(reference_params, 1e-6, 20, rng)
        cov = spatial_covariance(profile, 64)
        np.testing.assert_allclose(eigenbeams(cov, 6), eigenbeams(cov.total, 6))

    def test_too_many_beams(self):
        with pytest.raises(ValueError):
            eigenbeams(np.eye(3), 4)


class TestEnergyCapture:
    def test_trace_bound(self, reference_params, rng):
        for _ in range(20):
            cov = spatial_covariance(make_profile(reference_params, 1e-6, 20, rng), 64)
            u = eigenbeams(cov, 6)
            assert energy_capture(u, cov.total) <= 64 * (1 + 1e-9)

    def test_equal_split_identity(self, reference_params, rng):
        cov = spatial_covariance(make_profile(reference_params, 1e-6, 20, rng), 64)
        L = 6
        assert L * top_eigen_sum(cov.total / L, 6) == pytest.approx(top_eigen_sum(cov.total, 6))

    def test_equality_when_rank_fits_beams(self):
        angles = np.array([[0.3], [0.3]])
        profile = MultipathProfile(
            delays=np.array([1e-6, 2e-6]),
            powers=np.array([0.5, 0.5]),
            powers_ul=np.array([0.5, 0.5]),
            subpath_angles=angles,
        )
        cov = spatial_covariance(profile, 16)
        np.testing.assert_allclose(cov.per_path[0], cov.total / 2)
        u = eigenbeams(cov, 2)
        assert energy_capture(u, cov.total) == pytest.approx(16, rel=1e-9)


class TestEffectiveChannel:
    def test_fourier_identity(self, scaled_params, rng):
        profile = make_profile(scaled_params, 1e-6, 20, rng)
        cov = spatial_covariance(profile, scaled_params.n_antennas)
        u = eigenbeams(cov, scaled_params.n_beams)
        real = realize(profile, scaled_params, rng)
        eff = effective_channel(u, real, profile, scaled_params, check=True)
        np.testing.assert_allclose(eff.beta, u.conj().T @ real.alpha)
        assert eff.cfr.shape == (4, 64)

    def test_canonical_basis_selects_rows(self, scaled_params, rng):
        profile = make_profile(scaled_params, 1e-6, 20, rng)
        real = realize(profile, scaled_params, rng)
        u = np.eye(scaled_params.n_antennas)[:, :4]
        eff = effective_channel(u, real, profile, scaled_params)
        np.testing.assert_array_equal(eff.beta, real.alpha[:4])

    def test_check_detects_inconsistent_delays(self, scaled_params, rng):
        profile = make_profile(scaled_params, 1e-6, 20, rng)
        real = realize(profile, scaled_params, rng)
        u = np.eye(scaled_params.n_antennas)[:, :4]
        shifted = dataclasses.replace(profile, delays=profile.delays + scaled_params.resolution / 3)
        with pytest.raises(NumericError):
            effective_channel(u, real, shifted, scaled_params, check=True)

    def test_beam_power_matches_projected_covariance(self, wide_profile, tiny_params):
        rng = np.random.default_rng(21)
        cov = spatial_covariance(wide_profile, 8)
        u = eigenbeams(cov, 2)
        n = 20000
        power = np.zeros((2, 2))
        for _ in range(n):
            real = realize(wide_profile, tiny_params, rng)
            power += np.abs(u.conj().T @ real.alpha) ** 2
        power /= n
        for l in range(2):
            expected = np.real(np.einsum("md,mn,nd->d", u.conj(), cov.per_path[l], u))
            np.testing.assert_allclose(power[:, l], expected, rtol=0.05)


class TestTraining:
    def test_unit_modulus(self, rng):
        block = training(3, 128, rng)
        assert block.symbols.shape == (3, 128)
        np.testing.assert_allclose(np.abs(block.symbols), 1.0)
        assert np.all(block.phases >= -np.pi) and np.all(block.phases < np.pi)

    def test_phases_have_zero_mean(self, rng):
        block = training(1, 1_000_000, rng)
        assert abs(np.mean(block.symbols)) < 0.005

    def test_single_beam_stacks_to_diagonal(self, rng):
        block = training(1, 8, rng)
        a = block.stacked()
        assert a.shape == (8, 8)
        np.testing.assert_allclose(a, np.diag(np.diag(a)))

    def test_stacked_shape(self):
        assert TrainingBlock.constant(3, 5).stacked().shape == (5, 15)

    def test_bad_dimensions(self, rng):
        with pytest.raises(ValueError):
            training(0, 8, rng)


class TestTransmit:
    def test_noiseless_constant_training_returns_cfr(self, rng):
        b = rng.standard_normal((1, 32)) + 1j * rng.standard_normal((1, 32))
        eff = EffectiveChannel(basis=np.eye(1), beta=np.zeros((1, 1)), cfr=b)
        y = transmit(TrainingBlock.constant(1, 32), eff, 0.0, rng)
        np.testing.assert_allclose(y, b[0])

    def test_noiseless_matches_design_matrix(self, scaled_params, rng):
        profile = make_profile(scaled_params, 1e-6, 20, rng)
        u = eigenbeams(spatial_covariance(profile, 32), 4)
        eff = effective_channel(u, realize(profile, scaled_params, rng), profile, scaled_params)
        block = training(4, 64, rng)
        y = transmit(block, eff, 0.0, rng)
        X = build_design_matrix(block, profile.delays, scaled_params).X
        np.testing.assert_allclose(y, X @ eff.beta.reshape(-1), atol=1e-10)

    def test_noise_power(self, rng):
        n = 200000
        eff = EffectiveChannel(basis=np.eye(1), beta=np.zeros((1, 1)), cfr=np.zeros((1, n)))
        y = transmit(training(1, n, rng), eff, 0.3, rng)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(0.3, rel=0.02)

    def test_received_power_accounting(self, rng):
        n = 100000
        b = np.vstack([np.full(n, 1.0 + 0j), np.full(n, 0.5j)])
        eff = EffectiveChannel(basis=np.eye(2), beta=np.zeros((2, 1)), cfr=b)
        y = transmit(training(2, n, rng), eff, 0.1, rng)
        assert np.mean(np.abs(y) ** 2) == pytest.approx(1.0 + 0.25 + 0.1, rel=0.02)

    def test_shape_mismatch(self, rng):
        eff = EffectiveChannel(basis=np.eye(1), beta=np.zeros((1, 1)), cfr=np.zeros((1, 8)))
        with pytest.raises(ValueError):
            transmit(TrainingBlock.constant(2, 8), eff, 0.1, rng)
