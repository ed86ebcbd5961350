# -*- coding: utf-8 -*-
"""Tests for the key = value experiment config."""

from __future__ import annotations

from pathlib import Path

import pytest

from paramcsi.channel import SystemParams
from paramcsi.config import ConfigManager, ExperimentConfig
from paramcsi.delay_est import MAX_BITS
from paramcsi.errors import ConfigError

EXAMPLE = Path(__file__).resolve().parents[1] / "config.example.cfg"


class TestDefaults:
    def test_reference_setup(self):
        cfg = ExperimentConfig()
        assert cfg.params == SystemParams()
        assert (cfg.n_profiles, cfg.n_realizations) == (20, 500)
        assert cfg.n_trials == 10000
        assert cfg.eta == 4.0
        assert cfg.min_gap is None
        assert cfg.effective_min_gap == pytest.approx(cfg.params.resolution / 2)
        assert cfg.common_random_numbers is True

    def test_sigma2_normalization(self):
        cfg = ExperimentConfig(sigma2_db=-40.0)
        assert cfg.sigma2 == pytest.approx(1e-4 * 5e-6 ** 2 / 12)
        assert ExperimentConfig(sigma2_db=float("-inf")).sigma2 == 0.0

    def test_replace_routes_system_keys(self):
        cfg = ExperimentConfig().replace(noise_var=0.01, bits=12)
        assert cfg.params.noise_var == 0.01
        assert cfg.bits == 12


class TestTextFormat:
    def test_round_trip(self):
        cfg = ExperimentConfig(
            sweep_axis="sigma2",
            sweep_values=(-50.0, -25.0, -10.5),
            estimators=("ls_parametric",),
            min_gap=1e-7,
            uplink_snr_db=15.0,
            common_random_numbers=False,
        )
        assert ExperimentConfig.loads(cfg.dumps()) == cfg

    def test_dict_round_trip(self):
        cfg = ExperimentConfig(sweep_values=(1.0, 2.0))
        assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg

    def test_comments_blank_lines_and_missing_keys(self):
        cfg = ExperimentConfig.loads(
            "# header\n\nbits = 12   # trailing comment\nsigma2_db = -inf\nuplink_decay = none\n"
        )
        assert cfg.bits == 12
        assert cfg.sigma2 == 0.0
        assert cfg.uplink_decay is None
        assert cfg.n_profiles == 20

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads("bits = 8\nn_antenas = 32\n")
        assert info.value.keys == ("n_antenas",)
        assert "n_antenas" in str(info.value)

    def test_all_bad_keys_listed(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads("n_beams = six\nseed = 1.5\ncommon_random_numbers = maybe\n")
        assert set(info.value.keys) == {"n_beams", "seed", "common_random_numbers"}

    def test_invalid_values(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads("n_beams = 80\nsweep_axis = delay\nestimators = ls_parametric, music\n")
        assert {"n_beams", "sweep_axis", "estimators"} <= set(info.value.keys)

    def test_tau_max_beyond_symbol(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads("tau_max = 1e-3\n")
        assert "tau_max" in info.value.keys

    def test_bits_sweep_needs_integers(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.loads("sweep_axis = bits\nsweep_values = 1, 2.5\n")

    def test_bits_upper_bound(self):
        assert ExperimentConfig.loads(f"bits = {MAX_BITS}\n").bits == MAX_BITS
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads(f"bits = {MAX_BITS + 1}\n")
        assert info.value.keys == ("bits",)
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads(f"sweep_axis = bits\nsweep_values = 8, {MAX_BITS + 1}\n")
        assert info.value.keys == ("sweep_values",)

    def test_system_checks_map_to_keys(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig.loads("subcarrier_spacing = 0\nnoise_var = -1\n")
        assert set(info.value.keys) == {"subcarrier_spacing", "noise_var"}
        assert "noise_var must be >= 0" in str(info.value)

    def test_non_finite_sweep_value(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.loads("sweep_axis = sigma2\nsweep_values = -inf\n")

    def test_duplicate_and_malformed_lines(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.loads("bits = 8\nbits = 9\n")
        with pytest.raises(ConfigError):
            ExperimentConfig.loads("just some words\n")

    def test_config_error_is_value_error(self):
        with pytest.raises(ValueError):
            ExperimentConfig.loads("nope = 1\n")


class TestHash:
    def test_stable_for_equal_configs(self):
        assert ExperimentConfig(seed=3).config_hash() == ExperimentConfig(seed=3).config_hash()

    def test_changes_with_content(self):
        assert ExperimentConfig(seed=3).config_hash() != ExperimentConfig(seed=4).config_hash()


class TestConfigManager:
    def test_save_and_load(self, tmp_path):
        cfg = ExperimentConfig(sweep_values=(4.0, 8.0), seed=99)
        manager = ConfigManager(tmp_path / "exp.cfg")
        manager.save(cfg)
        assert manager.load() == cfg

    def test_missing_file_names_path(self, tmp_path):
        path = tmp_path / "absent.cfg"
        with pytest.raises(OSError, match="absent.cfg"):
            ConfigManager(path).load()

    def test_shipped_example_is_reference_setup(self):
        cfg = ConfigManager(EXAMPLE).load()
        assert cfg.params == SystemParams()
        assert cfg.sweep_axis == "bits"
        assert cfg.sweep_values == tuple(float(b) for b in range(1, 13))
        assert cfg.sigma2_db == -40.0
        assert cfg.estimators == ("ls_parametric", "mmse_genie")
        assert cfg.n_subpaths == 20
