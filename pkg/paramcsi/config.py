# -*- coding: utf-8 -*-
"""
Experiment config persistence in a human-readable key = value file.

Format:
- one `key = value` per line, UTF-8, `#` starts a comment
- lists are comma-separated, `none` marks an absent optional value
- floats accept `inf` / `-inf` (e.g. sigma2_db = -inf for error-free delays)

Missing keys take the defaults below (the reference simulation setup).
Unknown keys and malformed values raise ConfigError naming every offending key.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from .amp_est import DEFAULT_CONDITION_CAP, DEFAULT_MERGE_ETA, MERGE_REPRESENTATIVES
from .channel import DEFAULT_MAX_REDRAWS, SystemParams
from .delay_est import ESPRIT_VARIANTS, MAX_BITS, sigma2_from_db
from .errors import ConfigError

DEFAULT_CONFIG_FILENAME = "config.cfg"

SWEEP_AXES = ("bits", "sigma2", "snr")
DELAY_SOURCES = ("esprit", "synthetic")
ESTIMATORS = ("ls_parametric", "mmse_genie")

PARAM_KEYS = tuple(f.name for f in dataclasses.fields(SystemParams))


def _to_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return bool(value)
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("1", "true", "yes", "on"):
            return True
        if s in ("0", "false", "no", "off"):
            return False
    raise ValueError(f"not a boolean: {value!r}")


def _to_int(value: Any) -> int:
    if isinstance(value, bool):
        raise ValueError("boolean is not an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ValueError(f"not an integer: {value!r}")
        return int(value)
    return int(str(value).strip()) if isinstance(value, str) else int(value)


def _to_float(value: Any) -> float:
    if isinstance(value, bool):
        raise ValueError("boolean is not a number")
    return float(value.strip()) if isinstance(value, str) else float(value)


def _optional(parse: Callable[[Any], Any]) -> Callable[[Any], Any]:
    def inner(value: Any) -> Any:
        if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
            return None
        return parse(value)

    return inner


def _split(value: Any) -> List[str]:
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return list(value)


def _float_list(value: Any) -> Tuple[float, ...]:
    return tuple(_to_float(v) for v in _split(value))


def _str_list(value: Any) -> Tuple[str, ...]:
    return tuple(str(v).strip() for v in _split(value))


def _to_str(value: Any) -> str:
    return str(value).strip()


_PARAM_PARSERS: Dict[str, Callable[[Any], Any]] = {
    "n_subcarriers": _to_int,
    "subcarrier_spacing": _to_float,
    "n_antennas": _to_int,
    "n_beams": _to_int,
    "n_paths": _to_int,
    "noise_var": _to_float,
    "tau_max": _to_float,
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: SystemParams = field(default_factory=SystemParams)
    n_profiles: int = 20
    n_realizations: int = 500
    sweep_axis: str = "bits"
    sweep_values: Tuple[float, ...] = ()
    delay_source: str = "synthetic"
    estimators: Tuple[str, ...] = ESTIMATORS
    seed: int = 2024
    bits: int = 10
    sigma2_db: float = -40.0
    pdp_decay: float = 1e-6
    n_subpaths: int = 20
    eta: float = DEFAULT_MERGE_ETA
    min_gap: Optional[float] = None
    max_redraws: int = DEFAULT_MAX_REDRAWS
    condition_cap: float = DEFAULT_CONDITION_CAP
    uplink_snr_db: Optional[float] = None
    uplink_decay: Optional[float] = None
    esprit_variant: str = "ls"
    merge_representative: str = "mean"
    common_random_numbers: bool = True

    # --------- derived values ---------
    @property
    def sigma2(self) -> float:
        return sigma2_from_db(self.sigma2_db, self.params.tau_max)

    @property
    def effective_min_gap(self) -> float:
        return self.params.resolution / 2.0 if self.min_gap is None else self.min_gap

    @property
    def n_trials(self) -> int:
        return self.n_profiles * self.n_realizations

    def replace(self, **changes) -> "ExperimentConfig":
        param_changes = {k: changes.pop(k) for k in list(changes) if k in PARAM_KEYS}
        if param_changes:
            changes["params"] = self.params.replace(**param_changes)
        return dataclasses.replace(self, **changes)

    # --------- dict conversion ---------
    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        bad: List[str] = []
        details: List[str] = []
        known = set(PARAM_KEYS) | set(_PARSERS)
        for key in data:
            if key not in known:
                bad.append(key)
                details.append(f"unknown key {key!r}")

        values: Dict[str, Any] = {}
        defaults = cls()
        for key in PARAM_KEYS:
            raw = data.get(key, getattr(defaults.params, key))
            try:
                values[key] = _PARAM_PARSERS[key](raw)
            except (TypeError, ValueError) as e:
                bad.append(key)
                details.append(f"{key}: {e}")
        for key, parse in _PARSERS.items():
            raw = data.get(key, getattr(defaults, key))
            try:
                values[key] = parse(raw)
            except (TypeError, ValueError) as e:
                bad.append(key)
                details.append(f"{key}: {e}")
        if bad:
            raise ConfigError(bad, "; ".join(details))

        params = SystemParams(**{k: values.pop(k) for k in PARAM_KEYS})
        cfg = cls(params=params, **values)
        cfg.validate()
        return cfg

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {k: getattr(self.params, k) for k in PARAM_KEYS}
        for key in _PARSERS:
            out[key] = getattr(self, key)
        return out

    def validate(self) -> None:
        bad: List[str] = []

        def check(ok: bool, *keys: str) -> None:
            if not ok:
                bad.extend(k for k in keys if k not in bad)

        param_problems = self.params.problems()
        for keys, _ in param_problems:
            check(False, *keys)
        check(self.n_profiles >= 1, "n_profiles")
        check(self.n_realizations >= 1, "n_realizations")
        check(self.sweep_axis in SWEEP_AXES, "sweep_axis")
        check(all(math.isfinite(v) for v in self.sweep_values), "sweep_values")
        if self.sweep_axis == "bits":
            check(
                all(1 <= v <= MAX_BITS and float(v).is_integer() for v in self.sweep_values),
                "sweep_values",
            )
        check(self.delay_source in DELAY_SOURCES, "delay_source")
        check(len(self.estimators) > 0 and set(self.estimators) <= set(ESTIMATORS), "estimators")
        check(self.seed >= 0, "seed")
        check(1 <= self.bits <= MAX_BITS, "bits")
        check(not math.isnan(self.sigma2_db) and self.sigma2_db < math.inf, "sigma2_db")
        check(self.pdp_decay > 0, "pdp_decay")
        check(self.n_subpaths >= 1, "n_subpaths")
        check(self.eta > 0, "eta")
        check(self.min_gap is None or self.min_gap >= 0, "min_gap")
        check(self.max_redraws >= 1, "max_redraws")
        check(self.condition_cap > 1, "condition_cap")
        check(self.uplink_decay is None or self.uplink_decay > 0, "uplink_decay")
        check(self.esprit_variant in ESPRIT_VARIANTS, "esprit_variant")
        check(self.merge_representative in MERGE_REPRESENTATIVES, "merge_representative")
        if bad:
            raise ConfigError(bad, "; ".join(msg for _, msg in param_problems))

    # --------- text format ---------
    def dumps(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            lines.append(f"{key} = {_format_value(value)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        data: Dict[str, str] = {}
        bad: List[str] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                bad.append(f"line {lineno}")
                continue
            key, value = line.split("=", 1)
            key = key.strip()
            if key in data:
                bad.append(key)
            data[key] = value.strip()
        if bad:
            raise ConfigError(bad, "expected unique `key = value` lines")
        return cls.from_dict(data)

    def config_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


_PARSERS: Dict[str, Callable[[Any], Any]] = {
    "n_profiles": _to_int,
    "n_realizations": _to_int,
    "sweep_axis": _to_str,
    "sweep_values": _float_list,
    "delay_source": _to_str,
    "estimators": _str_list,
    "seed": _to_int,
    "bits": _to_int,
    "sigma2_db": _to_float,
    "pdp_decay": _to_float,
    "n_subpaths": _to_int,
    "eta": _to_float,
    "min_gap": _optional(_to_float),
    "max_redraws": _to_int,
    "condition_cap": _to_float,
    "uplink_snr_db": _optional(_to_float),
    "uplink_decay": _optional(_to_float),
    "esprit_variant": _to_str,
    "merge_representative": _to_str,
    "common_random_numbers": _to_bool,
}


def _format_value(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)


class ConfigManager:
    def __init__(self, config_path: Path):
        self.config_path = Path(config_path)

    def load(self) -> ExperimentConfig:
        try:
            text = self.config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise OSError(f"cannot read config {self.config_path}: {e}") from e
        return ExperimentConfig.loads(text)

    def save(self, config: ExperimentConfig) -> None:
        header = "# paramcsi experiment config\n"
        try:
            self.config_path.write_text(header + config.dumps(), encoding="utf-8")
        except OSError as e:
            raise OSError(f"cannot write config {self.config_path}: {e}") from e
