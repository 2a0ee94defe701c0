"""Experiment configuration: parameter record, use-case presets, loading and validation.

Scenario files are flat ``key=value`` text. Keys are the :class:`ScenarioConfig`
field names; ``#`` starts a comment. Durations (keys ending in ``_s``) accept
``ms``/``us``/``s`` suffixes, frequencies (``_hz``) accept ``kHz``/``MHz``/``GHz``
and rates (``_bps``) accept ``kbps``/``Mbps``. A ``preset=`` key selects a
:class:`UseCasePreset`.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import re
from dataclasses import dataclass, fields
from pathlib import Path

logger = logging.getLogger(__name__)

SCHEDULER_KINDS = ("BSPS", "SSPS", "ASPS")


class ConfigError(ValueError):
    """Raised when a scenario document cannot be parsed or fails validation."""


@dataclass(frozen=True)
class UseCasePreset:
    name: str
    n_lines: int
    machines_per_line: int
    floor_length_m: float
    floor_width_m: float
    floor_height_m: float
    inter_machine_distance_m: float
    machine_side_m: float

    def fields_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("name")
        return d


PRESETS: dict[str, UseCasePreset] = {
    "augmented_reality": UseCasePreset(
        name="augmented_reality", n_lines=4, machines_per_line=4,
        floor_length_m=20.0, floor_width_m=20.0, floor_height_m=4.0,
        inter_machine_distance_m=5.0, machine_side_m=2.0,
    ),
    "remote_access_maintenance": UseCasePreset(
        name="remote_access_maintenance", n_lines=2, machines_per_line=8,
        floor_length_m=50.0, floor_width_m=10.0, floor_height_m=10.0,
        # 16 machines cannot sit 10 m apart on a 50 x 10 m floor
        inter_machine_distance_m=5.0, machine_side_m=3.0,
    ),
}


@dataclass(frozen=True)
class ScenarioConfig:
    # radio
    carrier_frequency_hz: float = 3.5e9
    bandwidth_hz: float = 60e6
    subcarrier_spacing_hz: float = 60e3
    snr_threshold_db: float = -5.0
    noise_temperature_k: float = 290.0
    qam16_threshold_db: float = 10.0
    qam64_threshold_db: float = 20.0
    shadowing_enabled: bool = True
    # fixed latency terms
    t_p_symbols: int = 7
    t_tx_symbols: int = 4
    tau_p_s: float = 0.0
    t_fh_s: float = 0.05e-3
    tau_fh_s: float = 0.0
    t_gnb_symbols: int = 7
    t_cn_s: float = 0.1e-3
    sim_time_s: float = 10.0
    # link budget
    antenna_gain_ue_db: float = 0.0
    antenna_gain_gnb_db: float = 0.0
    tx_power_ul_dbm: float = 23.0
    tx_power_dl_dbm: float = 30.0
    # deployment
    use_case: str | None = "augmented_reality"
    inter_machine_distance_m: float = 5.0
    machine_side_m: float = 2.0
    min_machines: int = 16
    floor_length_m: float = 20.0
    floor_width_m: float = 20.0
    floor_height_m: float = 4.0
    n_lines: int = 4
    machines_per_line: int = 4
    num_ues: int = 60
    # traffic
    header_bytes: int = 72
    bucket_fraction: float = 0.4
    ue_activation_prob: float = 1.0
    tau_on_s: float = 8e-3
    n_on: int = 5
    traffic_mix: float = 0.0
    periodic_period_s: float = 2e-3
    aperiodic_tmin_s: float = 2e-3
    aperiodic_tmax_s: float = 6e-3
    offered_traffic_bps: float = 2.75e6
    # scheduling
    scheduler_kind: str = "SSPS"
    dropping_enabled: bool = False
    rng_seed: int = 0

    def replace(self, **changes) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, **changes)
        validate(cfg)
        return cfg

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def num_machines(self) -> int:
        return self.n_lines * self.machines_per_line


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}

_SUFFIX_SCALE = {
    "_s": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
    "_hz": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "_bps": {"bps": 1.0, "kbps": 1e3, "mbps": 1e6},
}
_NUM_SUFFIX = re.compile(r"^\s*([-+0-9.eE]+)\s*([A-Za-z]*)\s*$")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key: str, raw: str, where: str):
    typ = _FIELD_TYPES[key]
    text = raw.strip()
    if typ == "bool":
        low = text.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{where}: {key} expects a boolean, got {raw!r}")
    if typ == "int":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: {key} expects an integer, got {raw!r}") from None
    if typ == "str":
        return text
    if typ == "str | None":
        return None if text.lower() in ("", "none") else text
    # float, possibly with a unit suffix
    m = _NUM_SUFFIX.match(text)
    if not m:
        raise ConfigError(f"{where}: {key} expects a number, got {raw!r}")
    number, unit = m.groups()
    scale = 1.0
    if unit:
        table = next((t for suf, t in _SUFFIX_SCALE.items() if key.endswith(suf)), None)
        if table is None or unit.lower() not in table:
            raise ConfigError(f"{where}: unknown unit {unit!r} for {key}")
        scale = table[unit.lower()]
    try:
        value = float(number)
    except ValueError:
        raise ConfigError(f"{where}: {key} expects a number, got {raw!r}") from None
    # keep decimal literals like "8ms" exact as 0.008 rather than 8 * 1e-3
    return float(f"{number}e{round(math.log10(scale))}") if scale != 1.0 else value


def parse_document(text: str) -> dict[str, str]:
    """Split a ``key=value`` document into raw strings, with line-aware errors."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {line.strip()!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def config_from_mapping(raw: dict[str, str], base: ScenarioConfig | None = None,
                        ) -> tuple[ScenarioConfig, list[str]]:
    """Build a validated config from raw string values.

    Returns the config and a list of human-readable preset resolutions
    (free-form keys overridden by the preset).
    """
    base = base or ScenarioConfig()
    values: dict = {}
    preset_name = raw.get("preset")
    for key, text in raw.items():
        if key == "preset":
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, text, f"key {key!r}")

    resolutions: list[str] = []
    if preset_name is not None and preset_name.lower() != "none":
        if preset_name not in PRESETS:
            raise ConfigError(f"unknown preset {preset_name!r}; choose from {sorted(PRESETS)}")
        for key, pval in PRESETS[preset_name].fields_dict().items():
            if key in values and values[key] != pval:
                resolutions.append(f"{key}={values[key]!r} overridden by preset "
                                   f"{preset_name} ({pval!r})")
            values[key] = pval
        values["use_case"] = preset_name
    elif preset_name is not None:
        values["use_case"] = None

    cfg = dataclasses.replace(base, **values)
    validate(cfg)
    return cfg, resolutions


def load_config(source: str | Path, *, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Load a scenario from a path or from document text.

    A string containing ``=`` or a newline is treated as document text.
    Unspecified keys take the reference defaults in :class:`ScenarioConfig`.
    """
    if isinstance(source, Path) or ("=" not in source and "\n" not in source):
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"config not found: {path}")
        text = path.read_text(encoding="utf-8")
    else:
        text = source
    cfg, resolutions = config_from_mapping(parse_document(text), base)
    for note in resolutions:
        logger.warning(note)
    return cfg


def dump_config(cfg: ScenarioConfig) -> str:
    """Emit ``cfg`` as a document that :func:`load_config` reads back identically."""
    lines = []
    preset_keys: set[str] = set()
    if cfg.use_case is not None:
        pfields = PRESETS[cfg.use_case].fields_dict()
        if all(getattr(cfg, k) == v for k, v in pfields.items()):
            lines.append(f"preset={cfg.use_case}")
            preset_keys = set(pfields) | {"use_case"}
    for f in fields(cfg):
        if f.name in preset_keys:
            continue
        v = getattr(cfg, f.name)
        lines.append(f"{f.name}={'none' if v is None else repr(v) if isinstance(v, float) else v}")
    return "\n".join(lines) + "\n"


def validate(cfg: ScenarioConfig) -> None:
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    need(cfg.bandwidth_hz in (60e6, 120e6), "bandwidth_hz in {60e6, 120e6} violated")
    need(cfg.subcarrier_spacing_hz == 60e3, "subcarrier_spacing_hz = 60e3 violated")
    need(0 < cfg.bucket_fraction <= 1, "0 < bucket_fraction <= 1 violated")
    need(0 <= cfg.ue_activation_prob <= 1, "0 <= ue_activation_prob <= 1 violated")
    need(0 <= cfg.traffic_mix <= 1, "0 <= traffic_mix <= 1 violated")
    need(cfg.aperiodic_tmin_s > 0, "t_min > 0 violated")
    need(cfg.aperiodic_tmin_s < cfg.aperiodic_tmax_s, "t_min < t_max violated")
    need(cfg.aperiodic_tmax_s <= cfg.tau_on_s, "t_max <= tau_on_s violated")
    need(cfg.n_on >= 1, "n_on >= 1 violated")
    need(cfg.n_lines >= 1 and cfg.machines_per_line >= 1, "n_lines, machines_per_line >= 1 violated")
    need(cfg.num_ues >= 0, "num_ues >= 0 violated")
    need(cfg.tau_on_s > 0 and cfg.periodic_period_s > 0, "tau_on_s > 0 and periodic_period_s > 0 violated")
    need(cfg.offered_traffic_bps > 0, "offered_traffic_bps > 0 violated")
    need(cfg.sim_time_s > 0, "sim_time_s > 0 violated")
    need(cfg.header_bytes >= 0, "header_bytes >= 0 violated")
    need(cfg.scheduler_kind in SCHEDULER_KINDS, f"scheduler_kind in {SCHEDULER_KINDS} violated")
    need(cfg.floor_height_m > 0 and cfg.floor_length_m > 0 and cfg.floor_width_m > 0,
         "floor dimensions > 0 violated")
    need(cfg.snr_threshold_db <= cfg.qam16_threshold_db <= cfg.qam64_threshold_db,
         "snr_threshold_db <= qam16_threshold_db <= qam64_threshold_db violated")
    for name in ("t_p_symbols", "t_tx_symbols", "tau_p_s", "t_fh_s", "tau_fh_s",
                 "t_gnb_symbols", "t_cn_s"):
        need(getattr(cfg, name) >= 0, f"{name} >= 0 violated")
    if cfg.use_case is not None:
        need(cfg.use_case in PRESETS, f"unknown use_case {cfg.use_case!r}")
        need(cfg.num_machines >= cfg.min_machines,
             "n_lines*machines_per_line >= min_machines violated")


def derive_block_size_bytes(cfg: ScenarioConfig) -> int:
    """Application payload per data block: ceil(G * tau / 8) bytes."""
    if cfg.offered_traffic_bps <= 0 or cfg.periodic_period_s <= 0:
        raise ConfigError("offered_traffic_bps > 0 and periodic_period_s > 0 required")
    bits = cfg.offered_traffic_bps * cfg.periodic_period_s
    # 2.75e6 * 2e-3 lands a hair above 5500.0 in binary; round before ceiling
    return max(1, math.ceil(round(bits / 8, 9)))


def preset_config(name: str, **overrides) -> ScenarioConfig:
    """Default config with a use-case preset applied, then ``overrides``."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    cfg = dataclasses.replace(ScenarioConfig(), use_case=name, **PRESETS[name].fields_dict())
    return cfg.replace(**overrides)
