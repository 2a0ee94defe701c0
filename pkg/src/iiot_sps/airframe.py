"""Time/frequency discretization: OFDM symbols, scheduling units (SUs), RBs, grid layout."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

# coding rate of the PUSCH; 1 means every modulated bit carries payload
CODING_RATE = 1
SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_SLOT = 14

# n_RB per channel bandwidth at 60 kHz SCS
_N_RB = {60e6: 84, 120e6: 167}


class SuPurpose(str, Enum):
    PUCCH = "PUCCH"
    PROCESSING = "PROCESSING"
    PDCCH = "PDCCH"
    DATA = "DATA"
    GUARD = "GUARD"


CONTROL_PURPOSES = (SuPurpose.PUCCH, SuPurpose.PROCESSING, SuPurpose.PDCCH)


@dataclass(frozen=True)
class FrameParams:
    subcarrier_spacing_hz: float
    symbol_duration: Fraction          # seconds, cyclic prefix included
    symbols_per_su: int
    n_rb: int
    rbs_pucch: int = 1
    rbs_pdcch: int = 1
    rbs_harq: int = 1
    pusch_data_symbols: int = 4
    switch_symbols: int = 1

    @property
    def su_duration(self) -> Fraction:
        return self.symbols_per_su * self.symbol_duration

    @property
    def symbol_duration_s(self) -> float:
        return float(self.symbol_duration)

    @property
    def su_duration_s(self) -> float:
        return float(self.su_duration)

    @property
    def data_rbs_per_su(self) -> int:
        """PUSCH RBs in a DATA/GUARD SU; HARQ keeps one."""
        return self.n_rb - self.rbs_harq

    def su_start_s(self, su: int) -> float:
        return float(su * self.su_duration)

    def sus(self, seconds: float) -> int:
        """Snap a duration to an integer number of SUs."""
        return int(round(Fraction(seconds).limit_denominator(10**9) / self.su_duration))

    def symbols(self, seconds: float) -> int:
        return int(round(Fraction(seconds).limit_denominator(10**9) / self.symbol_duration))


def make_frame(subcarrier_spacing_hz: float = 60e3, bandwidth_hz: float = 60e6,
               symbols_per_su: int = 7) -> FrameParams:
    mu = int(round(math.log2(subcarrier_spacing_hz / 15e3)))
    if 15e3 * 2**mu != subcarrier_spacing_hz:
        raise ValueError(f"unsupported subcarrier spacing {subcarrier_spacing_hz}")
    if bandwidth_hz not in _N_RB:
        raise ValueError(f"no RB count known for bandwidth {bandwidth_hz}")
    slot = Fraction(1, 1000 * 2**mu)
    return FrameParams(
        subcarrier_spacing_hz=subcarrier_spacing_hz,
        symbol_duration=slot / SYMBOLS_PER_SLOT,
        symbols_per_su=symbols_per_su,
        n_rb=_N_RB[bandwidth_hz],
    )


def frame_from_config(cfg) -> FrameParams:
    return make_frame(cfg.subcarrier_spacing_hz, cfg.bandwidth_hz)


def slot_sus(tau_on_s: float, frame: FrameParams) -> int:
    """SUs per activation slot: the snapped activation period plus the 2-SU guard interval."""
    return frame.sus(tau_on_s) + 2


def compute_t_ip(tau_on_s: float, n_on: int, frame: FrameParams) -> float:
    """Inter-PUCCH time (tau_on + 2 SU) * n_on, with tau_on snapped to whole SUs."""
    if n_on < 1 or tau_on_s <= 0:
        raise ValueError("n_on >= 1 and tau_on_s > 0 required")
    return float(slot_sus(tau_on_s, frame) * n_on * frame.su_duration)


def rb_capacity_bits(bits_per_symbol: int, frame: FrameParams) -> int:
    return SUBCARRIERS_PER_RB * frame.pusch_data_symbols * bits_per_symbol * CODING_RATE


def rbs_needed(pdu_bytes: int, bits_per_symbol: int, frame: FrameParams) -> int:
    if pdu_bytes < 1:
        raise ValueError("pdu_bytes >= 1 required")
    cap = rb_capacity_bits(bits_per_symbol, frame)
    return -(-8 * pdu_bytes // cap)


@dataclass
class ResourceGrid:
    """SU x RB allocation map over a run.

    SU purposes repeat with the inter-PUCCH cycle; ``allocations`` holds the
    PUSCH grants actually placed, keyed by absolute SU index.
    """

    frame: FrameParams
    cycle_purposes: list[SuPurpose]
    allocations: dict[int, list[tuple[int, int, int, int]]] = field(default_factory=dict)
    _next_rb: dict[int, int] = field(default_factory=dict, repr=False)

    @property
    def cycle_sus(self) -> int:
        return len(self.cycle_purposes)

    def purpose(self, su: int) -> SuPurpose:
        return self.cycle_purposes[su % self.cycle_sus]

    def is_data(self, su: int) -> bool:
        return self.purpose(su) in (SuPurpose.DATA, SuPurpose.GUARD)

    def first_data_su(self, su: int) -> int:
        while not self.is_data(su):
            su += 1
        return su

    def allocate(self, su: int, n_rbs: int, ue_id: int, block_id: int) -> range:
        """Place ``n_rbs`` contiguous PUSCH RBs in ``su``; RB 0 carries HARQ."""
        if not self.is_data(su):
            raise ValueError(f"SU {su} is {self.purpose(su).value}, not a data SU")
        start = self._next_rb.get(su, self.frame.rbs_harq)
        if start + n_rbs > self.frame.n_rb:
            raise ValueError(f"SU {su} over-allocated: {start + n_rbs} > {self.frame.n_rb}")
        self._next_rb[su] = start + n_rbs
        self.allocations.setdefault(su, []).append((start, n_rbs, ue_id, block_id))
        return range(start, start + n_rbs)

    def used_rbs(self, su: int) -> int:
        return sum(n for _, n, _, _ in self.allocations.get(su, ()))

    def dump_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["su", "purpose", "rb_start", "rb_count", "ue_id", "block_id"])
        for su in sorted(self.allocations):
            for start, n, ue, blk in self.allocations[su]:
                w.writerow([su, self.purpose(su).value, start, n, ue, blk])
        return buf.getvalue()


def layout_control_plane(t_ip_s: float, frame: FrameParams, tau_on_s: float) -> ResourceGrid:
    """Skeleton grid for one inter-PUCCH cycle.

    SU_0 = PUCCH, SU_1 = processing, SU_2 = PDCCH; every other SU is DATA
    inside an activation period or GUARD in the 2-SU interval closing it.
    """
    cycle = frame.sus(t_ip_s)
    period = slot_sus(tau_on_s, frame)
    if cycle % period:
        raise ValueError("T_IP must be a whole number of activation slots")
    purposes = []
    for su in range(cycle):
        if su < len(CONTROL_PURPOSES):
            purposes.append(CONTROL_PURPOSES[su])
        elif su % period >= period - 2:
            purposes.append(SuPurpose.GUARD)
        else:
            purposes.append(SuPurpose.DATA)
    return ResourceGrid(frame=frame, cycle_purposes=purposes)
