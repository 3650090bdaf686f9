"""Delivery ratio, transmission overhead, the audit log and CSV output."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

PACKET_KINDS = ("DATA", "RREQ", "RREP", "RERR", "PFR", "LBP")
DROP_CAUSES = ("selfish", "punishment", "no_route", "buffer_expiry", "link_break")
MIRROR_KINDS = ("PFR", "LBP")


@dataclass
class Counters:
    """Streaming run counters.

    ``drops_by_cause`` counts Data packets only: ``no_route`` means route
    discovery gave up, ``buffer_expiry`` means the send buffer was full.
    Control packets discarded by the punishment gate go to ``control_drops``.
    """

    data_sent: int = 0
    data_received: int = 0
    tx_by_kind: dict[str, int] = field(default_factory=lambda: dict.fromkeys(PACKET_KINDS, 0))
    drops_by_cause: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DROP_CAUSES, 0))
    control_drops: dict[str, int] = field(default_factory=Counter)
    in_flight: int = 0

    @property
    def dropped(self) -> int:
        return sum(self.drops_by_cause.values())

    def conserved(self) -> bool:
        return self.data_sent == self.data_received + self.dropped + self.in_flight


def pdr(counters: Counters) -> float:
    """Delivered / originated Data packets; 1.0 when nothing was sent."""
    if counters.data_sent == 0:
        return 1.0
    return counters.data_received / counters.data_sent


def overhead(counters: Counters) -> int:
    """Total transmissions of every packet kind (each hop counts once)."""
    return sum(counters.tx_by_kind.values())


def mirror_transmissions(counters: Counters) -> int:
    return sum(counters.tx_by_kind[k] for k in MIRROR_KINDS)


def fmt_time(us: int) -> str:
    return f"{us // 1_000_000}.{us % 1_000_000:06d}"


class EventLog:
    """Line records ``time kind node detail``, kept in memory."""

    def __init__(self) -> None:
        self.lines: list[str] = []

    def write(self, us: int, kind: str, node: int, detail: str) -> None:
        self.lines.append(f"{fmt_time(us)} {kind} {node} {detail}")

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines)

    def dump(self, path) -> None:
        Path(path).write_text(self.text())


@dataclass
class Replay:
    data_sent: int
    data_received: int
    tx_by_kind: dict[str, int]
    drops_by_cause: dict[str, int]
    in_flight: int
    duplicates: int


def replay(lines) -> Replay:
    """Recount Data fates and transmissions from raw log lines.

    Works from the log alone, so it is independent of the streaming counters.
    ``duplicates`` counts uids with more than one terminal record (must be 0).
    """
    sent: set[str] = set()
    terminal: Counter = Counter()
    received = 0
    tx: Counter = Counter()
    drops: Counter = Counter()
    for line in lines:
        parts = line.split()
        if len(parts) < 4:
            continue
        kind = parts[1]
        if kind == "orig":
            sent.add(parts[3])
        elif kind == "tx":
            tx[parts[3]] += 1
        elif kind == "recv":
            received += 1
            terminal[parts[3]] += 1
        elif kind == "drop":
            drops[parts[4]] += 1
            terminal[parts[3]] += 1
    duplicates = sum(1 for c in terminal.values() if c > 1)
    in_flight = len(sent - set(terminal))
    return Replay(len(sent), received,
                  {k: tx.get(k, 0) for k in PACKET_KINDS},
                  {c: drops.get(c, 0) for c in DROP_CAUSES},
                  in_flight, duplicates)


def replay_matches(counters: Counters, lines) -> list[str]:
    """Differences between the replayed log and the counters (empty means equal)."""
    r = replay(lines)
    problems = []
    for name in ("data_sent", "data_received", "in_flight"):
        if getattr(r, name) != getattr(counters, name):
            problems.append(f"{name}: log {getattr(r, name)} != counter {getattr(counters, name)}")
    if r.tx_by_kind != counters.tx_by_kind:
        problems.append(f"tx_by_kind: log {r.tx_by_kind} != counter {counters.tx_by_kind}")
    if r.drops_by_cause != counters.drops_by_cause:
        problems.append(f"drops: log {r.drops_by_cause} != counter {counters.drops_by_cause}")
    if r.duplicates:
        problems.append(f"{r.duplicates} packets with several terminal records")
    if r.data_sent != r.data_received + sum(r.drops_by_cause.values()) + r.in_flight:
        problems.append("log does not conserve originations")
    return problems


@dataclass
class RunResult:
    protocol: str
    nodes: int
    selfish_fraction: float
    seed: int
    counters: Counters
    wall_time: float = 0.0
    error: str | None = None
    # filled by audited runs: sha256 of the event log and replay mismatches
    log_digest: str | None = None
    audit: tuple = ()

    @property
    def pdr(self) -> float:
        return pdr(self.counters)

    @property
    def total_packets(self) -> int:
        return overhead(self.counters)


CSV_COLUMNS = ("protocol", "nodes", "selfish_fraction", "seed", "data_sent", "data_received",
               "pdr", "total_packets", "rreq", "rrep", "rerr", "data_tx", "pfr_bcast",
               "lbp_bcast", "drops_selfish", "drops_punishment")


def csv_row(r: RunResult) -> dict[str, str]:
    c = r.counters
    return {
        "protocol": r.protocol,
        "nodes": str(r.nodes),
        "selfish_fraction": repr(float(r.selfish_fraction)),
        "seed": str(r.seed),
        "data_sent": str(c.data_sent),
        "data_received": str(c.data_received),
        "pdr": f"{r.pdr:.4f}",
        "total_packets": str(r.total_packets),
        "rreq": str(c.tx_by_kind["RREQ"]),
        "rrep": str(c.tx_by_kind["RREP"]),
        "rerr": str(c.tx_by_kind["RERR"]),
        "data_tx": str(c.tx_by_kind["DATA"]),
        "pfr_bcast": str(c.tx_by_kind["PFR"]),
        "lbp_bcast": str(c.tx_by_kind["LBP"]),
        "drops_selfish": str(c.drops_by_cause["selfish"]),
        "drops_punishment": str(c.drops_by_cause["punishment"]),
    }


def csv_text(results) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in results:
        w.writerow(csv_row(r))
    return buf.getvalue()


def emit_csv(results, path) -> Path:
    results = list(results)
    if not results:
        raise ValueError("no results to write")
    path = Path(path)
    path.write_text(csv_text(results))
    return path


def read_csv(path_or_text) -> list[dict]:
    """Parse a results CSV back into typed dictionaries."""
    text = path_or_text
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text()
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if k == "protocol":
                row[k] = v
            elif k in ("pdr", "selfish_fraction"):
                row[k] = float(v)
            else:
                row[k] = int(v)
        rows.append(row)
    return rows
