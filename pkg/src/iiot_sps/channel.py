"""3GPP InF (indoor factory) link model: LOS probability, path loss, shadowing, SNR, modulation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .rng import substream

BOLTZMANN = 1.380649e-23
# D at or below this (m) counts as dense clutter
DENSE_CLUTTER_MAX_D_M = 7.5
# clutter densities r of TR 38.901 Table 7.2-4 (sparse 20 %, dense 60 %)
CLUTTER_DENSITY = {False: 0.2, True: 0.6}
D3D_RANGE_M = (1.0, 600.0)


@dataclass(frozen=True)
class InfScenario:
    kind: str           # InF-SL | InF-DL | InF-SH | InF-DH
    dense: bool
    high_tx: bool
    clutter_size_m: float
    clutter_height_m: float

    @property
    def clutter_density(self) -> float:
        return CLUTTER_DENSITY[self.dense]


@dataclass(frozen=True)
class LinkState:
    ue_id: int
    distance_3d_m: float
    distance_2d_m: float
    los: bool
    path_loss_db: float
    shadowing_db: float
    snr_db: float
    modulation_bits_per_symbol: int | None
    adequate: bool


@dataclass(frozen=True)
class _Row:
    intercept: float
    distance_slope: float
    frequency_slope: float
    sigma_db: float

    def median(self, d3d_m: float, fc_ghz: float) -> float:
        return (self.intercept + self.distance_slope * math.log10(d3d_m)
                + self.frequency_slope * math.log10(fc_ghz))


@lru_cache(maxsize=1)
def coefficients() -> dict[tuple[str, str], _Row]:
    text = resources.files(__package__).joinpath("data/inf_coefficients.csv").read_text()
    rows = csv.DictReader(line for line in text.splitlines() if not line.startswith("#"))
    return {
        (r["scenario"], r["branch"]): _Row(float(r["intercept"]), float(r["distance_slope"]),
                                           float(r["frequency_slope"]),
                                           float(r["shadowing_sigma_db"]))
        for r in rows
    }


def classify_inf_scenario(cfg) -> InfScenario:
    dense = cfg.inter_machine_distance_m <= DENSE_CLUTTER_MAX_D_M
    high = cfg.floor_height_m > cfg.machine_side_m
    kind = "InF-" + ("D" if dense else "S") + ("H" if high else "L")
    return InfScenario(kind=kind, dense=dense, high_tx=high,
                       clutter_size_m=cfg.machine_side_m, clutter_height_m=cfg.machine_side_m)


def los_probability(scenario: InfScenario, d2d_m: float, h_bs_m: float, h_ue_m: float) -> float:
    if d2d_m < 0:
        raise ValueError("d2d_m >= 0 required")
    r = scenario.clutter_density
    k = -scenario.clutter_size_m / math.log(1 - r)
    if scenario.high_tx:
        h_c = scenario.clutter_height_m
        if h_ue_m >= h_c:
            return 1.0  # UE above the clutter
        k *= (h_bs_m - h_ue_m) / (h_c - h_ue_m)
    return math.exp(-d2d_m / k)


def median_path_loss_db(scenario: InfScenario, los: bool, d3d_m: float, fc_hz: float) -> float:
    lo, hi = D3D_RANGE_M
    if not lo <= d3d_m <= hi:
        raise ValueError(f"d3D = {d3d_m} m outside the InF range [{lo}, {hi}] m")
    fc = fc_hz / 1e9
    table = coefficients()
    pl_los = table[("InF", "LOS")].median(d3d_m, fc)
    if los:
        return pl_los
    pl = max(table[(scenario.kind, "NLOS")].median(d3d_m, fc), pl_los)
    if scenario.kind == "InF-DL":
        pl = max(pl, table[("InF-SL", "NLOS")].median(d3d_m, fc))
    return pl


def shadowing_sigma_db(scenario: InfScenario, los: bool) -> float:
    return coefficients()[("InF", "LOS") if los else (scenario.kind, "NLOS")].sigma_db


def path_loss_db(scenario: InfScenario, los: bool, d3d_m: float, fc_hz: float,
                 rng: np.random.Generator | None = None) -> tuple[float, float]:
    """Median path loss and a log-normal shadowing sample (0 when ``rng`` is None)."""
    pl = median_path_loss_db(scenario, los, d3d_m, fc_hz)
    shadow = 0.0 if rng is None else float(rng.normal(0.0, shadowing_sigma_db(scenario, los)))
    return pl, shadow


def noise_power_dbm(cfg, allocated_rbs: int) -> float:
    bw = allocated_rbs * 12 * cfg.subcarrier_spacing_hz
    return 10 * math.log10(BOLTZMANN * cfg.noise_temperature_k * bw) + 30


def snr_db(cfg, link_path_loss_db: float, allocated_rbs: int = 1) -> float:
    """Uplink SNR over ``allocated_rbs`` RBs; noise figure 0 dB."""
    if allocated_rbs < 1:
        raise ValueError("allocated_rbs >= 1 required")
    rx = (cfg.tx_power_ul_dbm + cfg.antenna_gain_ue_db + cfg.antenna_gain_gnb_db
          - link_path_loss_db)
    return rx - noise_power_dbm(cfg, allocated_rbs)


def modulation_order(snr: float, snr_threshold_db: float = -5.0, qam16_db: float = 10.0,
                     qam64_db: float = 20.0) -> int | None:
    """Bits per symbol for a link, or None when the link is inadequate."""
    if snr < snr_threshold_db:
        return None
    if snr < qam16_db:
        return 2
    if snr < qam64_db:
        return 4
    return 6


def build_link_table(cfg, topology) -> list[LinkState]:
    """LOS state and shadowing drawn once per link, from per-UE substreams."""
    scen = classify_inf_scenario(cfg)
    gx, gy, gz = topology.gnb_position
    out = []
    for ue in topology.ues:
        x, y, z = ue.position
        d2d = math.hypot(x - gx, y - gy)
        d3d = math.sqrt(d2d * d2d + (gz - z) ** 2)
        rng = substream(cfg.rng_seed, "link", ue.id)
        los = bool(rng.random() < los_probability(scen, d2d, gz, z))
        pl, shadow = path_loss_db(scen, los, d3d, cfg.carrier_frequency_hz,
                                  rng if cfg.shadowing_enabled else None)
        snr = snr_db(cfg, pl + shadow, 1)
        bits = modulation_order(snr, cfg.snr_threshold_db, cfg.qam16_threshold_db,
                                cfg.qam64_threshold_db)
        out.append(LinkState(ue_id=ue.id, distance_3d_m=d3d, distance_2d_m=d2d, los=los,
                             path_loss_db=pl, shadowing_db=shadow, snr_db=snr,
                             modulation_bits_per_symbol=bits,
                             adequate=snr >= cfg.snr_threshold_db))
    return out
