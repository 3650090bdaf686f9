"""Reputation layer: watchdog counters, grades, bonus points and punishment.

Arithmetic on forwarding ratios is exact. Ratios are kept as
:class:`fractions.Fraction`, floats are read through their shortest decimal
repr, and values cross the air as integers scaled by 1000. ``ceil`` therefore
never sees ``3.0000000000000004`` where the data says 3.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

SCALE = 1000
MAX_BP = 10


class Mode(enum.Enum):
    PROTECTED = "PON"
    NORMAL = "POFF"


class Verdict(enum.Enum):
    ADMIT = "admit"
    DROP = "drop"


class AccountingError(ValueError):
    """Watchdog counters became inconsistent (npf > nprf)."""


def exact(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(repr(float(value)))


def pfr_exact(npf: int, nprf: int) -> Fraction:
    if npf > nprf or npf < 0:
        raise AccountingError(f"npf={npf} exceeds nprf={nprf}")
    if nprf == 0:
        return Fraction(1)
    return Fraction(npf, nprf)


def compute_pfr(npf: int, nprf: int) -> float:
    """Packet forwarding ratio; no observations count as fully cooperative."""
    return float(pfr_exact(npf, nprf))


def grade_exact(pfr_list: Iterable) -> Fraction:
    values = [exact(v) for v in pfr_list]
    if not values:
        raise ValueError("grade of an empty PFR list is undefined")
    g = sum(values, Fraction(0)) / len(values)
    return min(max(g, Fraction(0)), Fraction(1))


def compute_grade(pfr_list: Iterable) -> float:
    """Mean of the collected forwarding ratios, clamped to [0, 1]."""
    return float(grade_exact(pfr_list))


def lbp_exact(grade) -> Fraction:
    return (1 - exact(grade)) * 10


def compute_lbp(grade) -> float:
    return float(lbp_exact(grade))


def compute_bp(lbp_list: Iterable) -> int:
    values = [exact(v) for v in lbp_list]
    if not values:
        raise ValueError("bonus points of an empty LBP list are undefined")
    mean = sum(values, Fraction(0)) / len(values)
    return min(max(math.ceil(mean), 0), MAX_BP)


def encode(value: Fraction) -> int:
    """Fixed-point wire encoding (value * 1000, half-up)."""
    return int(math.floor(value * SCALE + Fraction(1, 2)))


def decode(milli: int) -> Fraction:
    return Fraction(milli, SCALE)


@dataclass
class NiEntry:
    ip: int
    nprf: int = 0
    npf: int = 0
    g: float = 1.0
    bp: int = 0


@dataclass
class TempEntry:
    ip: int
    pfr_list: list[Fraction] = field(default_factory=list)
    g: Fraction | None = None
    lbp_list: list[Fraction] = field(default_factory=list)
    bp: int | None = None
    observed: bool = False


@dataclass(frozen=True)
class MirrorConfig:
    round_length: float = 5.0
    window: float = 2.0
    watchdog_timeout: float = 0.1
    grade_threshold: float = 0.5
    duty_cycle: float = 1.0
    punish_replies: bool = False
    count_rreq: bool = False

    def __post_init__(self) -> None:
        if self.round_length <= 2 * self.window:
            raise ValueError("round length must exceed both collection windows")
        if not 0 < self.duty_cycle <= 1:
            raise ValueError("duty cycle must lie in (0, 1]")


def grade_filter(ni: dict[int, NiEntry], route, threshold: float) -> bool:
    """True when no known intermediate hop of ``route`` has a grade below ``threshold``."""
    for hop in route[1:-1]:
        e = ni.get(hop)
        if e is not None and e.g < threshold:
            return False
    return True


class MirrorAgent:
    """Per-node reputation state machine.

    Counters live in ``ni``. A round runs expiry, then PFR collection, then
    LBP collection, then the table update, and the simulator drives each
    step. Times are integer microseconds.
    """

    def __init__(self, node: int, config: MirrorConfig) -> None:
        self.node = node
        self.config = config
        self.ni: dict[int, NiEntry] = {}
        self.temp: dict[int, TempEntry] | None = None
        self.collecting: str | None = None
        self.pending: dict[tuple, int] = {}
        # uids already charged against an entry's bp by the watchdog
        self.charged: dict[int, set] = defaultdict(set)
        self._round_len = round(config.round_length * 1_000_000)
        self._timeout = round(config.watchdog_timeout * 1_000_000)

    def entry(self, ip: int) -> NiEntry:
        e = self.ni.get(ip)
        if e is None:
            e = self.ni[ip] = NiEntry(ip)
        return e

    def mode(self, now: int) -> Mode:
        offset = now % self._round_len
        if offset < self.config.duty_cycle * self._round_len:
            return Mode.PROTECTED
        return Mode.NORMAL

    # --- watchdog -----------------------------------------------------------

    def observe_receive(self, target: int, uid, now: int) -> bool:
        """``target`` just received ``uid`` for forwarding.

        Returns True when a pending-forward record was opened. While the target
        still owes bonus points the drop is allowed, and one point is spent
        instead of counting.
        """
        if target == self.node or self.mode(now) is not Mode.PROTECTED:
            return False
        e = self.entry(target)
        if e.bp > 0:
            charged = self.charged[target]
            if uid not in charged:
                charged.add(uid)
                e.bp -= 1
            return False
        key = (uid, target)
        if key in self.pending:
            return False
        e.nprf += 1
        self.pending[key] = now + self._timeout
        return True

    def observe_forward(self, target: int, uid, now: int) -> bool:
        deadline = self.pending.pop((uid, target), None)
        if deadline is None:
            return False
        if now > deadline:
            return False
        self.ni[target].npf += 1
        return True

    def excuse(self, target: int, uid) -> None:
        """Withdraw an observation; the target's drop was a legitimate punishment."""
        if self.pending.pop((uid, target), None) is not None:
            self.ni[target].nprf -= 1

    # --- round processing ---------------------------------------------------

    def round_expiry(self, now: int) -> tuple[tuple[int, int], ...]:
        """Close the observation window and return the (ip, PFR*1000) pairs to broadcast.

        A record still inside its deadline moves to the next round with its
        nprf count.
        """
        carried: dict[int, int] = defaultdict(int)
        still = {}
        for (uid, target), deadline in self.pending.items():
            if deadline >= now:
                carried[target] += 1
                still[(uid, target)] = deadline
        self.pending = still
        self.temp = {}
        pairs = []
        for ip in sorted(self.ni):
            e = self.ni[ip]
            resolved = e.nprf - carried.get(ip, 0)
            if resolved > 0:
                pfr = pfr_exact(e.npf, resolved)
                self.temp[ip] = TempEntry(ip, [pfr], observed=True)
                pairs.append((ip, encode(pfr)))
            e.nprf = carried.get(ip, 0)
            e.npf = 0
        self.collecting = "pfr"
        return tuple(pairs)

    def receive_pfr(self, sender: int, pairs) -> None:
        if self.collecting != "pfr":
            return
        for ip, milli in pairs:
            if ip == self.node:
                continue
            row = self.temp.get(ip)
            if row is None:
                row = self.temp[ip] = TempEntry(ip)
            row.pfr_list.append(decode(milli))

    def grade_phase(self) -> tuple[tuple[int, int], ...]:
        """Compute grade and own LBP per Temp row; return (ip, LBP*1000) pairs."""
        pairs = []
        for ip in sorted(self.temp):
            row = self.temp[ip]
            if not row.pfr_list:
                continue
            row.g = grade_exact(row.pfr_list)
            lbp = lbp_exact(row.g)
            row.lbp_list.append(lbp)
            pairs.append((ip, encode(lbp)))
        self.collecting = "lbp"
        return tuple(pairs)

    def receive_lbp(self, sender: int, pairs) -> None:
        if self.collecting != "lbp":
            return
        for ip, milli in pairs:
            if ip == self.node:
                continue
            row = self.temp.get(ip)
            if row is None:
                row = self.temp[ip] = TempEntry(ip)
            row.lbp_list.append(decode(milli))

    def update_phase(self) -> None:
        """Write grades and bonus points back into the NI table and drop the Temp table.

        Every row updates the grade. Only rows this node observed itself
        update bp, so punishment stays with direct neighbours.
        """
        for ip in sorted(self.temp):
            row = self.temp[ip]
            if row.g is None and not row.observed:
                continue
            e = self.entry(ip)
            if row.g is not None:
                e.g = float(row.g)
            if row.observed and row.lbp_list:
                row.bp = compute_bp(row.lbp_list)
                e.bp = row.bp
        self.temp = None
        self.collecting = None
        self.charged.clear()

    # --- routing hooks ------------------------------------------------------

    def punish_gate(self, originator: int, final_dest: int, prev_hop: int, uid) -> int | None:
        """Return the culprit whose packet is dropped, or None to admit.

        The originator is checked first, then the final destination, then the
        transmitting neighbour. A drop spends one of the culprit's points,
        unless the watchdog already charged this packet.
        """
        for c in (originator, final_dest, prev_hop):
            if c == self.node:
                continue
            e = self.ni.get(c)
            if e is not None and e.bp > 0:
                if uid not in self.charged.get(c, ()):
                    e.bp -= 1
                return c
        return None

    def verdict(self, originator: int, final_dest: int, prev_hop: int, uid) -> Verdict:
        if self.punish_gate(originator, final_dest, prev_hop, uid) is None:
            return Verdict.ADMIT
        return Verdict.DROP

    def grade_of(self, ip: int) -> float:
        e = self.ni.get(ip)
        return 1.0 if e is None else e.g

    def route_ok(self, route) -> bool:
        return grade_filter(self.ni, route, self.config.grade_threshold)

    def low_grade_nodes(self) -> frozenset:
        thr = self.config.grade_threshold
        return frozenset(ip for ip, e in self.ni.items() if e.g < thr)

    def note_grade(self, ip: int, g: float) -> None:
        """Adopt a grade reported by a route error for a node we cannot observe."""
        e = self.entry(ip)
        e.g = min(e.g, g)
