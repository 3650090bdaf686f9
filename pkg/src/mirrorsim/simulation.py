"""One simulated network: nodes, medium, protocol agents and bookkeeping."""

from __future__ import annotations

import math
import time

import numpy as np

from .config import RunConfig
from .dsr import MIRROR_HEADER, MIRROR_PAIR, DsrAgent, Kind, Packet, uid_str
from .engine import Engine, EventKind, RngStreams, to_us
from .metrics import Counters, EventLog, RunResult
from .mirror import MirrorAgent
from .mobility import MobilityModel, MobilityParams, grid_place
from .radio import Medium, tx_delay_us
from .scenario import BehaviorPolicy, assign_selfish, random_flows, should_forward


class Simulation:
    """A single deterministic run.

    ``positions``, ``flows`` and ``policies`` override what the config would
    generate, which is how scripted topologies are built.
    """

    def __init__(self, config: RunConfig, *, positions=None, flows=None,
                 policies: dict[int, BehaviorPolicy] | None = None,
                 event_log: bool | None = None) -> None:
        self.config = cfg = config
        if cfg.protocol not in ("PDSR", "MDSR"):
            raise ValueError(f"unknown protocol {cfg.protocol}")
        self.engine = Engine()
        self.streams = RngStreams(cfg.seed)
        n = self.n = cfg.nodes
        if positions is None:
            if cfg.placement == "GRID":
                positions = grid_place(n, cfg.terrain)
            else:
                positions = self.streams.get("placement").uniform((0, 0), cfg.terrain, size=(n, 2))
        positions = np.asarray(positions, dtype=float)
        if positions.shape != (n, 2):
            raise ValueError(f"expected {n} positions, got shape {positions.shape}")
        motion = cfg.motion
        if cfg.mobility == "NONE":
            motion = MobilityParams(0.0, 0.0, 0.0, cfg.motion.granularity)
        self.mobility = MobilityModel(positions, cfg.terrain, motion,
                                      [self.streams.get("mobility", i) for i in range(n)])
        sc = cfg.scenario
        if policies is None:
            policies = assign_selfish(range(n), sc.selfish_fraction,
                                      self.streams.get("selfish-assign"), sc.drop_prob)
        self.policies = policies
        if flows is None:
            flows = random_flows(n, sc.flows, sc.flow_rate, sc.payload, sc.flow_start,
                                 sc.flow_stop, self.streams.get("traffic"))
        self.flows = list(flows)
        self.mdsr = cfg.protocol == "MDSR"
        self.mirrors = [MirrorAgent(i, cfg.mirror) for i in range(n)] if self.mdsr else None
        self.agents = [DsrAgent(i, self, cfg.send_buffer) for i in range(n)]
        self.punish_replies = self.mdsr and cfg.mirror.punish_replies
        self.counters = Counters()
        self.log = EventLog() if (cfg.event_log if event_log is None else event_log) else None
        self.delivered: set[tuple] = set()
        self.watchers: dict[tuple, list[int]] = {}
        self._pid = 0
        self._radio = cfg.radio
        self.medium = Medium(cfg.radio)
        self._horizon = to_us(cfg.sim_time)
        self._max_jitter = max(to_us(cfg.rreq_jitter), 0)
        self._drop_rng = self.streams.get("selfish-drop")
        self._jitter_rng = self.streams.get("jitter")
        self._schedule_start()

    # --- setup ------------------------------------------------------------------

    def _schedule_start(self) -> None:
        for i in range(self.n):
            self._schedule_waypoint(i)
        for k, flow in enumerate(self.flows):
            start, stop, step = to_us(flow.start), to_us(flow.stop), to_us(flow.interval)
            if start < stop:
                self.engine.schedule_us(start, EventKind.TRAFFIC, self._emit, (k, start, stop, step))
        if self.mdsr:
            self.engine.schedule_us(to_us(self.config.mirror.round_length),
                                    EventKind.ROUND_EXPIRY, self._round_expiry)

    def _schedule_waypoint(self, i: int) -> None:
        arrival = self.mobility.arrival(i)
        if math.isfinite(arrival):
            at = max(to_us(arrival), self.engine.clock)
            if at <= self._horizon:
                self.engine.schedule_us(at, EventKind.WAYPOINT, self._waypoint, (i,))

    def _waypoint(self, i: int) -> None:
        state = self.mobility.advance(i, self.engine.now)
        if self.log is not None:
            self.log.write(self.engine.clock, "wp", i,
                           f"{state.target[0]:.6f},{state.target[1]:.6f} {state.speed:.6f}")
        self._schedule_waypoint(i)

    def _emit(self, k: int, at: int, stop: int, step: int) -> None:
        flow = self.flows[k]
        self.agents[flow.src].originate(flow.dst, flow.payload)
        nxt = at + step
        if nxt < stop:
            self.engine.schedule_us(nxt, EventKind.TRAFFIC, self._emit, (k, nxt, stop, step))

    # --- services used by the agents ------------------------------------------------

    @property
    def now(self) -> int:
        return self.engine.clock

    def next_packet_id(self) -> int:
        self._pid += 1
        return self._pid

    def positions(self) -> np.ndarray:
        return self.mobility.positions(self.engine.now)

    def in_range(self, a: int, b: int) -> bool:
        pos = self.positions()
        return self.medium.hears(pos[a], pos[b])

    def set_timer(self, delay_us: int, action, args=()):
        return self.engine.schedule_in_us(delay_us, EventKind.DISCOVERY_TIMEOUT, action, args)

    def cancel_timer(self, handle) -> bool:
        return self.engine.cancel(handle)

    def jitter_us(self) -> int:
        if self._max_jitter == 0:
            return 0
        return int(self._jitter_rng.integers(0, self._max_jitter + 1))

    def transmit_later(self, delay_us: int, sender: int, pkt: Packet) -> None:
        self.engine.schedule_in_us(delay_us, EventKind.TRANSMIT, self.transmit, (sender, pkt))

    def forwards(self, node: int) -> bool:
        return should_forward(self.policies[node], self._drop_rng)

    def transmit(self, sender: int, pkt: Packet) -> bool:
        """Put ``pkt`` on the air from ``sender``.

        A unicast whose next hop is out of range is not sent, and the call
        returns False.
        """
        pos = self.positions()
        delta = pos - pos[sender]
        delta *= delta
        ok = self.medium.reach(delta[:, 0] + delta[:, 1])
        ok[sender] = False
        nh = pkt.next_hop
        if nh is not None and not ok[nh]:
            return False
        kind = pkt.kind
        self.counters.tx_by_kind[kind.value] += 1
        if self.log is not None:
            self.log.write(self.engine.clock, "tx", sender, f"{kind.value} {uid_str(pkt.uid)}")
        recv = np.flatnonzero(ok)
        observers = ()
        if self.mdsr and kind is Kind.DATA:
            if self.watchers:
                self.watch_forward(sender, pkt.uid)
            if nh != pkt.final_dest and self.config.promiscuous:
                others = recv[recv != nh]
                if len(others):
                    d2 = pos[others] - pos[nh]
                    d2 *= d2
                    near = self.medium.reach(d2[:, 0] + d2[:, 1])
                    observers = (sender, *others[near].tolist())
                else:
                    observers = (sender,)
        elif self.mdsr and kind is Kind.RREQ and self.config.mirror.count_rreq:
            self.watch_forward(sender, pkt.uid)
        self.engine.schedule_in_us(tx_delay_us(self._radio, pkt.size), EventKind.DELIVERY,
                                   self._deliver, (sender, pkt, recv.tolist(), observers))
        return True

    def _deliver(self, sender: int, pkt: Packet, recv: list, observers) -> None:
        kind = pkt.kind
        now = self.engine.clock
        if observers:
            target, uid = pkt.next_hop, pkt.uid
            key = (uid, target)
            for o in observers:
                if self.mirrors[o].observe_receive(target, uid, now):
                    self.watchers.setdefault(key, []).append(o)
        if kind is Kind.DATA:
            self.agents[pkt.next_hop].on_data(pkt, sender)
        elif kind is Kind.RREQ:
            if self.mdsr and self.config.mirror.count_rreq and self.config.promiscuous:
                self._observe_rreq(sender, pkt, recv, now)
            for r in recv:
                self.agents[r].on_rreq(pkt, sender)
        elif kind is Kind.RREP:
            self.agents[pkt.next_hop].on_rrep(pkt, sender)
        elif kind is Kind.RERR:
            self.agents[pkt.next_hop].on_rerr(pkt, sender)
        elif kind is Kind.PFR:
            for r in recv:
                self.mirrors[r].receive_pfr(sender, pkt.pairs)
        elif kind is Kind.LBP:
            for r in recv:
                self.mirrors[r].receive_lbp(sender, pkt.pairs)

    def _observe_rreq(self, sender: int, pkt: Packet, recv: list, now: int) -> None:
        pos = self.positions()
        heard = set(recv)
        for target in recv:
            if not self.agents[target].rreq_duty(pkt):
                continue
            key = (pkt.uid, target)
            for o in [sender, *recv]:
                if o == target or (o != sender and o not in heard):
                    continue
                if o != sender and not self.medium.hears(pos[o], pos[target]):
                    continue
                if self.mirrors[o].observe_receive(target, pkt.uid, now):
                    self.watchers.setdefault(key, []).append(o)

    def watch_forward(self, target: int, uid) -> None:
        observers = self.watchers.pop((uid, target), None)
        if observers:
            now = self.engine.clock
            for o in observers:
                self.mirrors[o].observe_forward(target, uid, now)

    def watch_excuse(self, target: int, uid) -> None:
        observers = self.watchers.pop((uid, target), None)
        if observers:
            for o in observers:
                self.mirrors[o].excuse(target, uid)

    # --- accounting ---------------------------------------------------------------------

    def data_originated(self, node: int, uid, dst: int) -> None:
        self.counters.data_sent += 1
        if self.log is not None:
            self.log.write(self.engine.clock, "orig", node, f"{uid_str(uid)} dst={dst}")

    def data_delivered(self, node: int, pkt: Packet) -> None:
        self.counters.data_received += 1
        self.delivered.add(pkt.uid)
        if self.log is not None:
            self.log.write(self.engine.clock, "recv", node, uid_str(pkt.uid))

    def data_dropped(self, node: int, uid, cause: str) -> None:
        self.counters.drops_by_cause[cause] += 1
        if self.log is not None:
            self.log.write(self.engine.clock, "drop", node, f"{uid_str(uid)} {cause}")

    def control_dropped(self, node: int, pkt: Packet, cause: str) -> None:
        self.counters.control_drops[f"{pkt.kind.value}:{cause}"] += 1
        if self.log is not None:
            self.log.write(self.engine.clock, "cdrop", node, f"{pkt.kind.value} {uid_str(pkt.uid)} {cause}")

    # --- reputation rounds ----------------------------------------------------------------

    def _broadcast_mirror(self, node: int, kind: Kind, pairs) -> None:
        if self.policies[node].selfish and self.config.scenario.selfish_mute:
            return
        pkt = Packet(kind, ("B", node, self.next_packet_id()), node, -1, (node,), 0,
                     MIRROR_HEADER + MIRROR_PAIR * len(pairs), pairs=pairs)
        self.transmit(node, pkt)

    def _round_expiry(self) -> None:
        now = self.engine.clock
        for i in range(self.n):
            self.agents[i].new_round()
            pairs = self.mirrors[i].round_expiry(now)
            self._broadcast_mirror(i, Kind.PFR, pairs)
        self.watchers = {key: obs for key, obs in self.watchers.items()
                         if any(key in self.mirrors[o].pending for o in obs)}
        window = to_us(self.config.mirror.window)
        self.engine.schedule_us(now + window, EventKind.ROUND_PHASE, self._grade_phase)
        self.engine.schedule_us(now + to_us(self.config.mirror.round_length),
                                EventKind.ROUND_EXPIRY, self._round_expiry)

    def _grade_phase(self) -> None:
        for i in range(self.n):
            self._broadcast_mirror(i, Kind.LBP, self.mirrors[i].grade_phase())
        self.engine.schedule_us(self.engine.clock + to_us(self.config.mirror.window),
                                EventKind.ROUND_PHASE, self._update_phase)

    def _update_phase(self) -> None:
        for m in self.mirrors:
            m.update_phase()

    # --- running ------------------------------------------------------------------------------

    def in_flight(self) -> int:
        buffered = sum(len(a.buffer) for a in self.agents)
        airborne = 0
        for ev in self.engine.pending():
            if ev.kind is EventKind.DELIVERY and ev.payload[1].kind is Kind.DATA:
                airborne += 1
        return buffered + airborne

    def run(self) -> RunResult:
        t0 = time.perf_counter()
        self.engine.run_until_us(self._horizon)
        self.counters.in_flight = self.in_flight()
        sc = self.config.scenario
        return RunResult(self.config.protocol, self.n, sc.selfish_fraction, self.config.seed,
                         self.counters, wall_time=time.perf_counter() - t0)


def run(config: RunConfig, **kwargs) -> tuple[RunResult, Simulation]:
    sim = Simulation(config, **kwargs)
    return sim.run(), sim
