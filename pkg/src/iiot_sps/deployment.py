"""Factory topology: machine and UE placement, production lines, UE-machine association."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .rng import substream

ATTEMPT_BUDGET = 10_000
# Metropolis sweeps (single-machine moves per machine) used to decorrelate a
# feasible machine layout from the way it was seeded.
RELAX_SWEEPS = 200


class PlacementError(RuntimeError):
    """The floor cannot admit the requested machines at the required spacing."""


@dataclass(frozen=True)
class Machine:
    id: int
    position: tuple[float, float, float]
    line_id: int = -1
    index_in_line: int = -1


@dataclass(frozen=True)
class UserEquipment:
    id: int
    position: tuple[float, float, float]
    machine_id: int
    traffic_kind: str  # "periodic" | "aperiodic"


@dataclass(frozen=True)
class Topology:
    machines: list[Machine]
    ues: list[UserEquipment]
    gnb_position: tuple[float, float, float]
    lines: list[list[int]]
    machines_per_line: int = field(default=0)

    def ues_of_machine(self, machine_id: int) -> list[int]:
        return [u.id for u in self.ues if u.machine_id == machine_id]

    def to_json(self) -> str:
        return json.dumps({
            "gnb_position": list(self.gnb_position),
            "machines": [asdict(m) for m in self.machines],
            "ues": [asdict(u) for u in self.ues],
            "lines": self.lines,
        }, indent=1, sort_keys=True)


def _min_dist_ok(pts: np.ndarray, cand: np.ndarray, d_min: float, skip: int = -1) -> np.ndarray:
    """Mask of candidate rows keeping distance >= d_min from every row of pts."""
    if len(pts) == 0:
        return np.ones(len(cand), dtype=bool)
    d2 = ((cand[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    if skip >= 0:
        d2[:, skip] = np.inf
    return (d2 >= d_min * d_min - 1e-9).all(axis=1)


def _sequential(rng, m, lo, hi, d_min, budget):
    pts = np.empty((0, 2))
    batch = 250
    for _ in range(m):
        placed = False
        for _ in range(budget // batch):
            cand = rng.uniform(lo, hi, size=(batch, 2))
            ok = np.flatnonzero(_min_dist_ok(pts, cand, d_min))
            if ok.size:
                pts = np.vstack([pts, cand[ok[0]]])
                placed = True
                break
        if not placed:
            return None
    return pts


def _lattice(m, lo, hi, d_min):
    """Deterministic feasible seed layout (rectangular or staggered rows), or None."""
    span = hi - lo
    for rows in range(1, m + 1):
        cols = math.ceil(m / rows)
        for stagger in (False, True):
            xs = np.linspace(lo[0], hi[0], cols) if cols > 1 else np.array([(lo[0] + hi[0]) / 2])
            ys = np.linspace(lo[1], hi[1], rows) if rows > 1 else np.array([(lo[1] + hi[1]) / 2])
            pts = []
            for r, y in enumerate(ys):
                row_xs = xs
                if stagger and cols > 1 and r % 2:
                    step = xs[1] - xs[0]
                    row_xs = np.clip(xs + step / 2, lo[0], hi[0])
                pts.extend((x, y) for x in row_xs)
            pts = np.array(pts[:m])
            if len(pts) < m or span.min() < 0:
                continue
            d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1)) + np.eye(m) * 1e9
            if d.min() >= d_min - 1e-9:
                return pts
    return None


def place_machines(cfg, rng: np.random.Generator | None = None) -> list[Machine]:
    """Uniformly distributed machine layout with pairwise spacing >= D.

    Targets the uniform distribution over feasible layouts: sequential
    rejection sampling (attempt budget per machine) or, when that jams, a
    lattice seed; then hard-core Metropolis relaxation with uniform proposals.
    """
    rng = rng if rng is not None else substream(cfg.rng_seed, "machines")
    m = cfg.num_machines
    half = cfg.machine_side_m / 2
    lo = np.array([half, half])
    hi = np.array([cfg.floor_length_m - half, cfg.floor_width_m - half])
    d_min = cfg.inter_machine_distance_m
    if (hi < lo).any():
        raise PlacementError("machine footprint larger than the floor")

    pts = _sequential(rng, m, lo, hi, d_min, ATTEMPT_BUDGET)
    if pts is None:
        pts = _lattice(m, lo, hi, d_min)
        if pts is None:
            raise PlacementError(
                f"cannot place {m} machines {d_min} m apart on a "
                f"{cfg.floor_length_m} x {cfg.floor_width_m} m floor")
    for _ in range(RELAX_SWEEPS):
        idx = rng.integers(0, m, size=m)
        prop = rng.uniform(lo, hi, size=(m, 2))
        for i, p in zip(idx, prop):
            if _min_dist_ok(pts, p[None], d_min, skip=i)[0]:
                pts[i] = p
    return [Machine(id=i, position=(float(x), float(y), 0.0)) for i, (x, y) in enumerate(pts)]


def assign_lines(machines: list[Machine], n_lines: int) -> tuple[list[Machine], list[list[int]]]:
    """Machine i joins line i mod n_lines at position i div n_lines."""
    if n_lines < 1 or len(machines) % n_lines:
        raise ValueError(f"{len(machines)} machines not divisible into {n_lines} lines")
    out = [Machine(m.id, m.position, m.id % n_lines, m.id // n_lines) for m in machines]
    lines = [[m.id for m in out if m.line_id == k] for k in range(n_lines)]
    return out, lines


def nearest_machine(pos, machines: list[Machine]) -> int:
    ref = np.array([m.position for m in machines])
    d2 = ((ref - np.asarray(pos)) ** 2).sum(axis=1)
    return int(np.argmin(d2))  # argmin returns the lowest id on ties


def place_ues(cfg, machines: list[Machine], rng: np.random.Generator | None = None,
              ) -> list[UserEquipment]:
    rng = rng if rng is not None else substream(cfg.rng_seed, "ues")
    n = cfg.num_ues
    xyz = np.column_stack([
        rng.uniform(0, cfg.floor_length_m, n),
        rng.uniform(0, cfg.floor_width_m, n),
        rng.uniform(0, cfg.machine_side_m, n),
    ])
    n_aperiodic = math.floor(cfg.traffic_mix * n + 0.5)
    return [
        UserEquipment(
            id=i,
            position=tuple(float(v) for v in xyz[i]),
            machine_id=nearest_machine(xyz[i], machines),
            traffic_kind="aperiodic" if i < n_aperiodic else "periodic",
        )
        for i in range(n)
    ]


def build_topology(cfg) -> Topology:
    machines = place_machines(cfg)
    machines, lines = assign_lines(machines, cfg.n_lines)
    ues = place_ues(cfg, machines)
    gnb = (cfg.floor_length_m / 2, cfg.floor_width_m / 2, cfg.floor_height_m)
    return Topology(machines=machines, ues=ues, gnb_position=gnb, lines=lines,
                    machines_per_line=cfg.machines_per_line)
