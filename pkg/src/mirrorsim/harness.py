"""Sweeps and the command-line driver."""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import math
import os
import statistics
import sys
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .config import ConfigError, ConfigWarning, RunConfig, format_config, load_config, parse_config
from .metrics import Counters, RunResult, csv_text, read_csv, replay_matches
from .radio import max_range
from .simulation import Simulation

AXES = ("selfish_fraction", "nodes")
PROTOCOLS = ("PDSR", "MDSR")
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    protocols: list = field(default_factory=lambda: list(PROTOCOLS))

    def __post_init__(self) -> None:
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        bad = [p for p in self.protocols if p.upper() not in PROTOCOLS]
        if bad:
            raise ValueError(f"unknown protocol(s) {bad}")
        if self.axis == "nodes":
            odd = [v for v in self.values if math.isqrt(int(v)) ** 2 != int(v)]
            if odd:
                raise ValueError(f"grid placement needs perfect-square node counts, got {odd}")

    def points(self) -> list[tuple]:
        """Canonical run order: axis value, then seed, then protocol."""
        return [(v, s, p.upper()) for v in self.values for s in self.seeds for p in self.protocols]


def point_config(base: RunConfig, axis: str, value, seed: int, protocol: str) -> RunConfig:
    cfg = base.replace(seed=int(seed), protocol=protocol)
    if axis == "nodes":
        return cfg.replace(nodes=int(value))
    return cfg.replace(**{"scenario.selfish_fraction": float(value)})


def _execute(cfg: RunConfig, log_path: str | None, audit: bool = False) -> RunResult:
    try:
        sim = Simulation(cfg, event_log=True if (log_path or audit) else None)
        result = sim.run()
        if log_path is not None:
            sim.log.dump(log_path)
        if audit:
            text = sim.log.text()
            result = dataclasses.replace(
                result, log_digest=hashlib.sha256(text.encode()).hexdigest(),
                audit=tuple(replay_matches(result.counters, sim.log.lines)))
        return result
    except Exception as exc:  # reported per point, the sweep carries on
        return RunResult(cfg.protocol, cfg.nodes, cfg.scenario.selfish_fraction, cfg.seed,
                         Counters(), error=f"{type(exc).__name__}: {exc}\n{traceback.format_exc()}")


def workers() -> int:
    cap = os.environ.get("MIRROR_SIM_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def run_sweep(config: RunConfig, sweep: SweepSpec, log_dir=None,
              audit: bool = False) -> list[RunResult]:
    """Run every point of ``sweep``; results come back in ``sweep.points()`` order.

    With ``audit`` each run keeps its event log in memory, replays it against
    the counters and records the log's sha256.
    """
    points = sweep.points()
    if not points:
        return []
    jobs = []
    for value, seed, proto in points:
        cfg = point_config(config, sweep.axis, value, seed, proto)
        log = None
        if log_dir is not None:
            log = str(Path(log_dir) / f"{proto}_{sweep.axis}={value}_seed={seed}.log")
        jobs.append((cfg, log))
    n = min(workers(), len(jobs))
    if n <= 1:
        return [_execute(cfg, log, audit) for cfg, log in jobs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(_execute, cfg, log, audit) for cfg, log in jobs]
        return [f.result() for f in futures]


def aggregate(rows: list[dict], axis: str) -> list[dict]:
    """Mean and sample stddev of pdr and total_packets per (protocol, axis value)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["protocol"], r[axis]), []).append(r)
    out = []
    for (proto, value), rs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        entry = {"protocol": proto, axis: value, "runs": len(rs)}
        for col in ("pdr", "total_packets"):
            xs = [float(r[col]) for r in rs]
            entry[f"{col}_mean"] = statistics.fmean(xs)
            entry[f"{col}_std"] = statistics.stdev(xs) if len(xs) > 1 else 0.0
        out.append(entry)
    return out


# --- command line -------------------------------------------------------------------------

def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _seeds(text: str) -> list[int]:
    """``10`` means seeds 1..10; a comma list is taken literally."""
    if "," in text:
        return [int(t) for t in _csv_list(text)]
    return list(range(1, int(text) + 1))


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config, strict=args.strict) if args.config else RunConfig()
    for item in args.set or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError("expected KEY=VALUE", item)
        cfg = parse_config(f"{key.strip()} {value.strip()}", strict=False, base=cfg)
    return cfg


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    cfg = _base_config(args)
    if args.protocol:
        cfg = cfg.replace(protocol=args.protocol.upper())
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.selfish is not None:
        cfg = cfg.replace(**{"scenario.selfish_fraction": args.selfish})
    result = _execute(cfg, args.log)
    if result.error:
        print(result.error, file=sys.stderr)
        return EXIT_RUNTIME
    _write(csv_text([result]), args.out)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _base_config(args)
    values = [float(v) if args.axis == "selfish_fraction" else int(v) for v in _csv_list(args.values)]
    spec = SweepSpec(args.axis, values, _seeds(args.seeds), [p.upper() for p in _csv_list(args.protocols)])
    if args.log_dir:
        Path(args.log_dir).mkdir(parents=True, exist_ok=True)
    results = run_sweep(cfg, spec, args.log_dir)
    failed = [r for r in results if r.error]
    for r in failed:
        print(f"run failed: {r.protocol} {args.axis} seed={r.seed}: {r.error}", file=sys.stderr)
    _write(csv_text([r for r in results if not r.error]), args.out)
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_range(args) -> int:
    cfg = _base_config(args)
    # truncated, not rounded, to three decimals
    print(f"{math.floor(max_range(cfg.radio) * 1000) / 1000:.3f}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    _write(format_config(_base_config(args)), args.out)
    return EXIT_OK


def _cmd_summarize(args) -> int:
    rows = read_csv(Path(args.csv))
    table = aggregate(rows, args.axis)
    cols = ["protocol", args.axis, "runs", "pdr_mean", "pdr_std", "total_packets_mean",
            "total_packets_std"]
    lines = [",".join(cols)]
    for e in table:
        lines.append(",".join(f"{e[c]:.4f}" if isinstance(e[c], float) and c != args.axis
                              else str(e[c]) for c in cols))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mirrorsim", description="DSR and Mirror Model simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key-value configuration file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--lenient", dest="strict", action="store_false",
                       help="allow mandatory keys to fall back to defaults")
        p.add_argument("--out", help="output file (stdout when omitted)")

    p = sub.add_parser("run", help="single run, one CSV row")
    common(p)
    p.add_argument("--protocol", choices=["pdsr", "mdsr", "PDSR", "MDSR"])
    p.add_argument("--seed", type=int)
    p.add_argument("--selfish", type=float, help="selfish fraction")
    p.add_argument("--log", help="write the event log here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="cross-product of axis values, seeds and protocols")
    common(p)
    p.add_argument("--axis", choices=AXES, default="selfish_fraction")
    p.add_argument("--values", required=True, help="comma list of axis values")
    p.add_argument("--seeds", default="10", help="count N (seeds 1..N) or comma list")
    p.add_argument("--protocols", default="pdsr,mdsr")
    p.add_argument("--log-dir", help="write one event log per run into this directory")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("range", help="print the radio range in metres")
    common(p)
    p.set_defaults(func=_cmd_range)

    p = sub.add_parser("validate", help="parse a config and print effective values")
    common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("summarize", help="mean and stddev per protocol and axis value")
    p.add_argument("csv")
    p.add_argument("--axis", choices=AXES, default="selfish_fraction")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_summarize)
    return ap


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always", ConfigWarning)
            warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli())
