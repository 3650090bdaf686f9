"""Dynamic Source Routing with reputation hooks.

The agent talks to the rest of the simulator only through ``net``. The simulator
supplies transmission, timers, accounting and the optional reputation agent.
With no reputation agent the protocol is plain DSR.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

DATA_HEADER = 24
CONTROL_HEADER = 32
PER_HOP = 4
MIRROR_HEADER = 8
MIRROR_PAIR = 6
MAX_ROUTE_LEN = 32
DISCOVERY_BACKOFF_US = (500_000, 1_000_000, 2_000_000)
MAX_DISCOVERY_ATTEMPTS = 3
MAX_REPLIES_PER_REQUEST = 4


class Kind(enum.Enum):
    DATA = "DATA"
    RREQ = "RREQ"
    RREP = "RREP"
    RERR = "RERR"
    PFR = "PFR"
    LBP = "LBP"


BROADCAST_KINDS = frozenset({Kind.RREQ, Kind.PFR, Kind.LBP})


@dataclass(slots=True)
class Packet:
    """One frame on the air.

    ``path`` is the hop sequence the packet travels: the source route for
    Data, the reversed discovered route for RREP, the route so far for RREQ.
    ``hop_index`` is the position in ``path`` of the node receiving it.
    """

    kind: Kind
    uid: tuple
    originator: int
    final_dest: int
    path: tuple = ()
    hop_index: int = 0
    size: int = 0
    route: tuple = ()
    exclude: frozenset = frozenset()
    link: tuple | None = None
    low_grade: float | None = None
    dropped: tuple | None = None
    pairs: tuple = ()

    @property
    def next_hop(self) -> int | None:
        if self.kind in BROADCAST_KINDS:
            return None
        return self.path[self.hop_index]

    def advanced(self) -> "Packet":
        return Packet(self.kind, self.uid, self.originator, self.final_dest, self.path,
                      self.hop_index + 1, self.size, self.route, self.exclude, self.link,
                      self.low_grade, self.dropped, self.pairs)


def uid_str(uid: tuple) -> str:
    return ":".join(str(p) for p in uid)


def control_size(route_len: int, extra: int = 0) -> int:
    return CONTROL_HEADER + PER_HOP * (route_len + extra)


def data_size(route_len: int, payload: int) -> int:
    return DATA_HEADER + PER_HOP * route_len + payload


class RouteCache:
    """Per-destination source routes, each stamped with the time it was learned."""

    def __init__(self, capacity: int = 5) -> None:
        self.capacity = capacity
        self.routes: dict[int, list[list]] = {}

    def add(self, route, now: int) -> None:
        route = tuple(route)
        if len(set(route)) != len(route):
            raise ValueError(f"route {route} contains a cycle")
        entries = self.routes.setdefault(route[-1], [])
        for e in entries:
            if e[0] == route:
                e[1] = now
                return
        entries.append([route, now])
        if len(entries) > self.capacity:
            entries.remove(min(entries, key=lambda e: e[1]))

    def get(self, dst: int) -> list[tuple]:
        return [e[0] for e in self.routes.get(dst, ())]

    def best(self, dst: int, accept=None):
        """Shortest acceptable route, ties broken by the most recently learned."""
        best = None
        for route, learned in self.routes.get(dst, ()):
            if accept is not None and not accept(route):
                continue
            key = (len(route), -learned)
            if best is None or key < best[0]:
                best = (key, route)
        return None if best is None else best[1]

    def purge_link(self, a: int, b: int) -> int:
        removed = 0
        for dst in list(self.routes):
            keep = [e for e in self.routes[dst] if not _has_link(e[0], a, b)]
            removed += len(self.routes[dst]) - len(keep)
            if keep:
                self.routes[dst] = keep
            else:
                del self.routes[dst]
        return removed

    def __contains__(self, route) -> bool:
        route = tuple(route)
        return route in self.get(route[-1])


def _has_link(route, a, b) -> bool:
    return any(route[i] == a and route[i + 1] == b for i in range(len(route) - 1))


@dataclass
class Buffered:
    uid: tuple
    dst: int
    payload: int
    attempts: int = 0


@dataclass
class Discovery:
    req_id: int
    handle: object = None


@dataclass
class SendBuffer:
    capacity: int = 64
    entries: list[Buffered] = field(default_factory=list)

    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    def for_dst(self, dst: int) -> list[Buffered]:
        return [e for e in self.entries if e.dst == dst]

    def take(self, dst: int) -> list[Buffered]:
        out = [e for e in self.entries if e.dst == dst]
        self.entries = [e for e in self.entries if e.dst != dst]
        return out

    def destinations(self) -> list[int]:
        return sorted({e.dst for e in self.entries})

    def __len__(self) -> int:
        return len(self.entries)


class DsrAgent:
    def __init__(self, node: int, net, buffer_capacity: int = 64) -> None:
        self.node = node
        self.net = net
        self.cache = RouteCache()
        self.seen: set[tuple] = set()
        self.replied: dict[tuple, int] = {}
        self.buffer = SendBuffer(buffer_capacity)
        self.discovery: dict[int, Discovery] = {}
        self.data_seq = 0
        self.req_seq = 0
        self.reported: set[tuple] = set()

    @property
    def mirror(self):
        return self.net.mirrors[self.node] if self.net.mirrors else None

    def new_round(self) -> None:
        self.reported.clear()

    # --- origination ----------------------------------------------------------

    def select_route(self, dst: int):
        m = self.mirror
        return self.cache.best(dst, m.route_ok if m is not None else None)

    def originate(self, dst: int, payload: int) -> tuple:
        uid = ("D", self.node, self.data_seq)
        self.data_seq += 1
        self.net.data_originated(self.node, uid, dst)
        self._send_or_buffer(Buffered(uid, dst, payload))
        return uid

    def _send_or_buffer(self, item: Buffered) -> None:
        while True:
            route = self.select_route(item.dst)
            if route is None:
                break
            if self._send_data(item, route):
                return
        if self.buffer.full():
            self.net.data_dropped(self.node, item.uid, "buffer_expiry")
            return
        self.buffer.entries.append(item)
        if item.dst not in self.discovery:
            self._request(item.dst)

    def _send_data(self, item: Buffered, route) -> bool:
        """Transmit along ``route``; on a dead first hop, purge it and report False."""
        pkt = Packet(Kind.DATA, item.uid, self.node, item.dst, tuple(route), 1,
                     data_size(len(route), item.payload))
        if self.net.transmit(self.node, pkt):
            return True
        self.cache.purge_link(self.node, route[1])
        return False

    def _request(self, dst: int) -> None:
        waiting = self.buffer.for_dst(dst)
        for e in waiting:
            e.attempts += 1
        attempt = max((e.attempts for e in waiting), default=1)
        uid = ("Q", self.node, self.req_seq)
        self.req_seq += 1
        self.seen.add(uid)
        m = self.mirror
        exclude = frozenset()
        if m is not None:
            exclude = m.low_grade_nodes() - {dst}
        pkt = Packet(Kind.RREQ, uid, self.node, dst, (self.node,), 0,
                     control_size(1, len(exclude)), exclude=exclude)
        d = Discovery(uid[2])
        self.discovery[dst] = d
        self.net.transmit(self.node, pkt)
        delay = DISCOVERY_BACKOFF_US[min(attempt, len(DISCOVERY_BACKOFF_US)) - 1]
        d.handle = self.net.set_timer(delay, self._discovery_timeout, (dst, d.req_id))

    def _discovery_timeout(self, dst: int, req_id: int) -> None:
        d = self.discovery.get(dst)
        if d is None or d.req_id != req_id:
            return
        del self.discovery[dst]
        route = self.select_route(dst)
        if route is not None:
            self._flush(dst)
            return
        keep = []
        for e in self.buffer.entries:
            if e.dst == dst and e.attempts >= MAX_DISCOVERY_ATTEMPTS:
                self.net.data_dropped(self.node, e.uid, "no_route")
            else:
                keep.append(e)
        self.buffer.entries = keep
        if self.buffer.for_dst(dst):
            self._request(dst)

    def _flush(self, dst: int) -> None:
        d = self.discovery.pop(dst, None)
        if d is not None and d.handle is not None:
            self.net.cancel_timer(d.handle)
        for item in self.buffer.take(dst):
            route = self.select_route(dst)
            if route is not None and self._send_data(item, route):
                continue
            self._send_or_buffer(item)

    # --- reception ------------------------------------------------------------

    def _gate(self, pkt: Packet, sender: int) -> bool:
        """True when the reputation layer drops ``pkt`` as punishment."""
        m = self.mirror
        if m is None:
            return False
        return m.punish_gate(pkt.originator, pkt.final_dest, sender, pkt.uid) is not None

    def _low_grade_relay(self, path) -> bool:
        # checked before the copy is marked seen, so a later copy over good relays still gets through
        m = self.mirror
        if m is None:
            return False
        thr = m.config.grade_threshold
        return any(m.grade_of(ip) < thr for ip in path[1:])

    def on_rreq(self, pkt: Packet, sender: int) -> None:
        me = self.node
        is_target = pkt.final_dest == me
        if me in pkt.path:
            return
        if is_target:
            route = pkt.path + (me,)
            key = (pkt.uid, route)
            if key in self.seen or self.replied.get(pkt.uid, 0) >= MAX_REPLIES_PER_REQUEST:
                return
        elif pkt.uid in self.seen:
            return
        if me in pkt.exclude or sender in pkt.exclude or self._low_grade_relay(pkt.path):
            self.net.watch_excuse(me, pkt.uid)
            return
        if self._gate(pkt, sender):
            self.net.control_dropped(me, pkt, "punishment")
            self.net.watch_excuse(me, pkt.uid)
            return
        if is_target:
            self.seen.add(key)
            self.replied[pkt.uid] = self.replied.get(pkt.uid, 0) + 1
            back = tuple(reversed(route))
            rrep = Packet(Kind.RREP, ("P", me, self.net.next_packet_id()), me,
                          pkt.originator, back, 1, control_size(len(route)), route=route)
            self.net.transmit(me, rrep)
            return
        self.seen.add(pkt.uid)
        if len(pkt.path) + 1 >= MAX_ROUTE_LEN:
            return
        fwd = Packet(Kind.RREQ, pkt.uid, pkt.originator, pkt.final_dest, pkt.path + (me,), 0,
                     pkt.size + PER_HOP, exclude=pkt.exclude)
        self.net.transmit_later(self.net.jitter_us(), me, fwd)

    def rreq_duty(self, pkt: Packet) -> bool:
        """Would this node be expected to rebroadcast ``pkt``?"""
        me = self.node
        return (pkt.final_dest != me and me not in pkt.path and pkt.uid not in self.seen
                and len(pkt.path) + 1 < MAX_ROUTE_LEN)

    def on_rrep(self, pkt: Packet, sender: int) -> None:
        me = self.node
        if self.net.punish_replies and self._gate(pkt, sender):
            self.net.control_dropped(me, pkt, "punishment")
            return
        if pkt.hop_index == len(pkt.path) - 1:
            self.cache.add(pkt.route, self.net.now)
            dst = pkt.route[-1]
            if self.buffer.for_dst(dst) and self.select_route(dst) is not None:
                self._flush(dst)
            return
        fwd = pkt.advanced()
        if not self.net.transmit(me, fwd):
            self._report_break(pkt, fwd.next_hop, pkt.originator)

    def on_rerr(self, pkt: Packet, sender: int) -> None:
        me = self.node
        if self.net.punish_replies and self._gate(pkt, sender):
            self.net.control_dropped(me, pkt, "punishment")
            return
        a, b = pkt.link
        self.cache.purge_link(a, b)
        if pkt.hop_index == len(pkt.path) - 1:
            m = self.mirror
            if pkt.low_grade is not None and m is not None:
                m.note_grade(b, pkt.low_grade)
            for dst in self.buffer.destinations():
                if dst not in self.discovery:
                    self._request(dst)
            return
        self.net.transmit(me, pkt.advanced())

    def on_data(self, pkt: Packet, sender: int) -> None:
        me = self.node
        if self._gate(pkt, sender):
            self.net.data_dropped(me, pkt.uid, "punishment")
            self.net.watch_excuse(me, pkt.uid)
            return
        if pkt.final_dest == me:
            self.net.data_delivered(me, pkt)
            return
        if not self.net.forwards(me):
            self.net.data_dropped(me, pkt.uid, "selfish")
            return
        fwd = pkt.advanced()
        nxt = fwd.next_hop
        m = self.mirror
        if m is not None and nxt != pkt.final_dest:
            g = m.grade_of(nxt)
            if g < m.config.grade_threshold and (pkt.originator, nxt) not in self.reported:
                self.reported.add((pkt.originator, nxt))
                self._send_rerr(pkt, nxt, low_grade=g)
        if not self.net.transmit(me, fwd):
            self.net.data_dropped(me, pkt.uid, "link_break")
            self.net.watch_forward(me, pkt.uid)
            self.cache.purge_link(me, nxt)
            self._send_rerr(pkt, nxt, dropped=pkt.uid)

    def _send_rerr(self, pkt: Packet, broken_to: int, low_grade=None, dropped=None) -> None:
        me = self.node
        back = tuple(reversed(pkt.path[:pkt.hop_index + 1]))
        if len(back) < 2:
            return
        rerr = Packet(Kind.RERR, ("E", me, self.net.next_packet_id()), me, back[-1], back, 1,
                      control_size(len(back), 2), link=(me, broken_to), low_grade=low_grade,
                      dropped=dropped)
        self.net.transmit(me, rerr)

    def _report_break(self, pkt: Packet, broken_to: int, dest: int) -> None:
        self.cache.purge_link(self.node, broken_to)
        self._send_rerr(pkt, broken_to)
