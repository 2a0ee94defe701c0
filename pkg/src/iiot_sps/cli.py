"""Command-line front end: single runs, parameter sweeps and preset listing.

    iiot-sps run scenario.cfg --seed 3 --set num_ues=80
    iiot-sps sweep latency_vs_n.sweep --jobs 4 --out latency_vs_n.csv
    iiot-sps presets

Sweep files use the scenario ``key=value`` syntax. Plain keys (and
``preset``) set the base point, ``config=`` names a base scenario file
relative to the sweep file, ``axis.<name>=v1,v2,...`` adds an axis, and
``replicas``, ``base_seed``, ``max_points`` control the expansion.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .deployment import PlacementError
from .engine import RunMetrics, grant_log_csv, run, simulate
from .scenario import (PRESETS, ConfigError, ScenarioConfig, config_from_mapping, dump_config,
                       load_config, parse_document)

logger = logging.getLogger("iiot_sps")

OUTDIR_ENV = "IIOT_SPS_OUTDIR"
EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

COLUMNS = ("scheduler", "use_case", "N", "B_MHz", "G_Mbps", "n_on", "tau_on_ms", "t_min_ms",
           "traffic_mix", "dropping", "seed", "mean_e2e_ms", "p99_e2e_ms", "loss_ratio",
           "delivered", "dropped", "error")

AXIS_FIELDS = {
    "N": "num_ues",
    "G": "offered_traffic_bps",
    "B": "bandwidth_hz",
    "n_on": "n_on",
    "t_min": "aperiodic_tmin_s",
    "scheduler_kind": "scheduler_kind",
    "dropping_enabled": "dropping_enabled",
    "traffic_mix": "traffic_mix",
    "use_case": "preset",
}

DEFAULT_REPLICAS = 5
DEFAULT_MAX_POINTS = 10_000


def _ms(x: float | None) -> str:
    return "" if x is None else f"{x * 1e3:.6f}"


def result_row(cfg: ScenarioConfig, metrics: RunMetrics | None, error: str = "") -> dict:
    row = {
        "scheduler": cfg.scheduler_kind,
        "use_case": cfg.use_case or "",
        "N": cfg.num_ues,
        "B_MHz": f"{cfg.bandwidth_hz / 1e6:g}",
        "G_Mbps": f"{cfg.offered_traffic_bps / 1e6:g}",
        "n_on": cfg.n_on,
        "tau_on_ms": f"{cfg.tau_on_s * 1e3:g}",
        "t_min_ms": f"{cfg.aperiodic_tmin_s * 1e3:g}",
        "traffic_mix": f"{cfg.traffic_mix:g}",
        "dropping": int(cfg.dropping_enabled),
        "seed": cfg.rng_seed,
        "mean_e2e_ms": "", "p99_e2e_ms": "", "loss_ratio": "", "delivered": "", "dropped": "",
        "error": error,
    }
    if metrics is not None:
        row.update(mean_e2e_ms=_ms(metrics.mean_e2e_s), p99_e2e_ms=_ms(metrics.p99_e2e_s),
                   loss_ratio="" if metrics.loss_ratio is None else f"{metrics.loss_ratio:.6f}",
                   delivered=metrics.delivered_count, dropped=metrics.dropped_count)
    return row


def write_table(rows: list[dict], echo: str, fmt: str = "csv") -> str:
    """Results as CSV (config echo in leading ``#`` lines) or as a JSON document."""
    if fmt == "json":
        return json.dumps({"config": echo.splitlines(), "columns": list(COLUMNS), "rows": rows},
                          indent=2) + "\n"
    buf = io.StringIO()
    for line in echo.splitlines():
        buf.write(f"# {line}\n")
    w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def read_table(text: str) -> list[dict]:
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(body))


# -- sweeps -------------------------------------------------------------------

@dataclass
class SweepSpec:
    base: dict[str, str] = field(default_factory=dict)
    axes: list[tuple[str, list[str]]] = field(default_factory=list)
    replicas: int = DEFAULT_REPLICAS
    base_seed: int = 0
    max_points: int = DEFAULT_MAX_POINTS

    @property
    def n_points(self) -> int:
        return math.prod(len(v) for _, v in self.axes)

    def points(self) -> list[dict[str, str]]:
        names = [n for n, _ in self.axes]
        return [dict(zip(names, combo))
                for combo in itertools.product(*(v for _, v in self.axes))]

    def configs(self) -> list[list[ScenarioConfig]]:
        """Validated configs, point-major then replica-minor."""
        if self.replicas < 1:
            raise ConfigError("replicas >= 1 violated")
        if self.n_points > self.max_points:
            raise ConfigError(f"sweep has {self.n_points} points, cap is {self.max_points}")
        out = []
        for point in self.points():
            raw = dict(self.base)
            for name, value in point.items():
                raw[AXIS_FIELDS[name]] = value
            cfg, _ = config_from_mapping(raw)
            out.append([dataclasses.replace(cfg, rng_seed=self.base_seed + r)
                        for r in range(self.replicas)])
        return out


def parse_sweep(text: str, origin: Path | None = None) -> SweepSpec:
    spec = SweepSpec()
    for key, value in parse_document(text).items():
        if key.startswith("axis."):
            name = key[len("axis."):]
            if name not in AXIS_FIELDS:
                raise ConfigError(f"unknown axis {name!r}; choose from {sorted(AXIS_FIELDS)}")
            values = [v.strip() for v in value.split(",") if v.strip()]
            if not values:
                raise ConfigError(f"axis {name!r} is empty")
            spec.axes.append((name, values))
        elif key in ("replicas", "base_seed", "max_points"):
            try:
                setattr(spec, key, int(value))
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        elif key == "config":
            path = Path(value) if origin is None else origin.parent / value
            if not path.exists():
                raise FileNotFoundError(f"config not found: {path}")
            spec.base = {**parse_document(path.read_text(encoding="utf-8")), **spec.base}
        else:
            spec.base[key] = value
    return spec


def _run_one(cfg: ScenarioConfig) -> dict:
    try:
        return result_row(cfg, run(cfg))
    except Exception as exc:  # error rows keep the sweep going
        return result_row(cfg, None, f"{type(exc).__name__}: {exc}")


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[dict]:
    flat = [cfg for point in spec.configs() for cfg in point]
    if jobs <= 1 or len(flat) <= 1:
        return [_run_one(c) for c in flat]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, flat))  # map keeps submission order


def sweep_echo(spec: SweepSpec) -> str:
    lines = [f"iiot-sps {__version__} sweep", f"replicas={spec.replicas}",
             f"base_seed={spec.base_seed}"]
    lines += [f"{k}={v}" for k, v in spec.base.items()]
    lines += [f"axis.{n}={','.join(v)}" for n, v in spec.axes]
    return "\n".join(lines)


# -- commands -------------------------------------------------------------------

def _outdir() -> Path:
    return Path(os.environ.get(OUTDIR_ENV, "."))


def _apply_sets(cfg: ScenarioConfig, sets: list[str]) -> ScenarioConfig:
    raw = {}
    for item in sets:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        raw[key.strip()] = value.strip()
    if not raw:
        return cfg
    cfg, notes = config_from_mapping(raw, cfg)
    for note in notes:
        logger.warning(note)
    return cfg


def cmd_run(args) -> int:
    cfg = load_config(Path(args.config))
    cfg = _apply_sets(cfg, args.set or [])
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, rng_seed=args.seed)
    if args.grant_log:
        result = simulate(cfg)
        metrics = result.metrics
        Path(args.grant_log).write_text(grant_log_csv(result.grants), encoding="utf-8")
    else:
        metrics = run(cfg)
    out = Path(args.out) if args.out else _outdir() / f"run_{cfg.scheduler_kind}_{cfg.rng_seed}.{args.format}"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_table([result_row(cfg, metrics)], dump_config(cfg), args.format),
                   encoding="utf-8")
    mean = "n/a" if metrics.mean_e2e_s is None else f"{metrics.mean_e2e_s * 1e3:.3f} ms"
    loss = "n/a" if metrics.loss_ratio is None else f"{metrics.loss_ratio:.3f}"
    print(f"{cfg.scheduler_kind} N={cfg.num_ues} seed={cfg.rng_seed}: mean E2E {mean}, "
          f"loss {loss}, delivered {metrics.delivered_count}, dropped {metrics.dropped_count}, "
          f"queued at end {metrics.queued_at_end}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    path = Path(args.spec)
    if not path.exists():
        raise FileNotFoundError(f"sweep spec not found: {path}")
    spec = parse_sweep(path.read_text(encoding="utf-8"), path)
    rows = run_sweep(spec, args.jobs)
    out = Path(args.out) if args.out else _outdir() / f"{path.stem}.{args.format}"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(write_table(rows, sweep_echo(spec), args.format), encoding="utf-8")
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} rows ({spec.n_points} points x {spec.replicas} replicas), "
          f"{failed} failed; wrote {out}")
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, preset in PRESETS.items():
        desc = ", ".join(f"{k}={v}" for k, v in preset.fields_dict().items())
        print(f"{name}: {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iiot-sps", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--set", action="append", metavar="KEY=VALUE")
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--grant-log", metavar="PATH", help="also write the per-grant log")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("spec")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_sweep)

    pr = sub.add_parser("presets", help="list use-case presets")
    pr.set_defaults(func=cmd_presets)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, PlacementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:
        print(f"runtime fault: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
