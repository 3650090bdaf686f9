import pytest

from mirrorsim.dsr import (DISCOVERY_BACKOFF_US, MAX_DISCOVERY_ATTEMPTS, Buffered, DsrAgent, Kind,
                           Packet, RouteCache, control_size, data_size)
from mirrorsim.mirror import MirrorAgent, MirrorConfig


class FakeNet:
    """Records what an agent asks of the network; links listed in ``down`` are broken."""

    def __init__(self, mirrors=None):
        self.mirrors = mirrors
        self.sent = []
        self.later = []
        self.timers = []
        self.drops = []
        self.cdrops = []
        self.delivered = []
        self.originated = []
        self.down = set()
        self.honest = True
        self.now = 0
        self.punish_replies = False
        self._pid = 0

    def transmit(self, sender, pkt):
        nh = pkt.next_hop
        if nh is not None and (sender, nh) in self.down:
            return False
        self.sent.append((sender, pkt))
        return True

    def transmit_later(self, delay, sender, pkt):
        self.later.append((delay, sender, pkt))

    def jitter_us(self):
        return 0

    def set_timer(self, delay, action, args=()):
        handle = [delay, action, args, False]
        self.timers.append(handle)
        return handle

    def cancel_timer(self, handle):
        handle[3] = True
        return True

    def fire(self):
        live = [t for t in self.timers if not t[3]]
        self.timers = []
        for _, action, args, _ in live:
            action(*args)

    def next_packet_id(self):
        self._pid += 1
        return self._pid

    def forwards(self, node):
        return self.honest

    def data_originated(self, node, uid, dst):
        self.originated.append(uid)

    def data_delivered(self, node, pkt):
        self.delivered.append(pkt.uid)

    def data_dropped(self, node, uid, cause):
        self.drops.append((node, uid, cause))

    def control_dropped(self, node, pkt, cause):
        self.cdrops.append((node, pkt.kind, cause))

    def watch_excuse(self, target, uid):
        pass

    def watch_forward(self, target, uid):
        pass

    def kinds(self):
        return [p.kind for _, p in self.sent]


def test_sizes():
    assert control_size(3) == 32 + 12
    assert data_size(4, 512) == 24 + 16 + 512


def test_route_cache_prefers_short_then_recent():
    c = RouteCache(capacity=2)
    c.add((0, 1, 2, 3), 1)
    c.add((0, 4, 3), 5)
    c.add((0, 5, 3), 6)
    assert (0, 1, 2, 3) not in c  # oldest evicted at capacity
    assert c.best(3) == (0, 5, 3)
    assert c.best(3, accept=lambda r: 5 not in r) == (0, 4, 3)
    assert c.purge_link(5, 3) == 1
    assert c.get(3) == [(0, 4, 3)]
    with pytest.raises(ValueError):
        c.add((0, 1, 0, 2), 0)


def test_originate_without_route_starts_discovery():
    net = FakeNet()
    a = DsrAgent(0, net)
    a.originate(9, 512)
    assert net.kinds() == [Kind.RREQ]
    rreq = net.sent[0][1]
    assert rreq.path == (0,) and rreq.final_dest == 9
    assert len(a.buffer) == 1
    assert net.timers[0][0] == DISCOVERY_BACKOFF_US[0]
    a.originate(9, 512)
    assert net.kinds() == [Kind.RREQ]  # one discovery per destination


def test_discovery_gives_up_after_max_attempts():
    net = FakeNet()
    a = DsrAgent(0, net)
    uid = a.originate(9, 512)
    for attempt in range(1, MAX_DISCOVERY_ATTEMPTS):
        net.fire()
        assert net.timers[0][0] == DISCOVERY_BACKOFF_US[attempt]
    net.fire()
    assert net.drops == [(0, uid, "no_route")]
    assert net.kinds() == [Kind.RREQ] * MAX_DISCOVERY_ATTEMPTS
    assert len(a.buffer) == 0


def test_full_buffer_drops():
    net = FakeNet()
    a = DsrAgent(0, net, buffer_capacity=2)
    uids = [a.originate(9, 512) for _ in range(3)]
    assert net.drops == [(0, uids[2], "buffer_expiry")]


def test_rrep_fills_cache_and_flushes_buffer():
    net = FakeNet()
    a = DsrAgent(0, net)
    uid = a.originate(2, 512)
    route = (0, 1, 2)
    rrep = Packet(Kind.RREP, ("P", 2, 1), 2, 0, (2, 1, 0), 2, control_size(3), route=route)
    a.on_rrep(rrep, 1)
    assert route in a.cache
    data = net.sent[-1][1]
    assert data.kind is Kind.DATA and data.uid == uid and data.path == route and data.next_hop == 1
    assert net.timers[0][3]  # discovery timer cancelled


def test_intermediate_rebroadcasts_rreq_once():
    net = FakeNet()
    b = DsrAgent(1, net)
    req = Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0,), 0, control_size(1))
    b.on_rreq(req, 0)
    b.on_rreq(req, 0)
    assert len(net.later) == 1
    fwd = net.later[0][2]
    assert fwd.path == (0, 1) and fwd.size == req.size + 4


def test_target_replies_to_several_copies():
    net = FakeNet()
    t = DsrAgent(5, net)
    for path in [(0, 1), (0, 2), (0, 3), (0, 4), (0, 6), (0, 1)]:
        t.on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, path, 0, 40), path[-1])
    rreps = [p for _, p in net.sent if p.kind is Kind.RREP]
    assert len(rreps) == 4
    assert rreps[0].route == (0, 1, 5) and rreps[0].path == (5, 1, 0) and rreps[0].next_hop == 1


def test_excluded_node_ignores_request():
    net = FakeNet()
    b = DsrAgent(1, net)
    b.on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0,), 0, 40, exclude=frozenset({1})), 0)
    assert net.later == []


def test_data_forward_deliver_and_selfish_drop():
    net = FakeNet()
    mid, end = DsrAgent(1, net), DsrAgent(2, net)
    pkt = Packet(Kind.DATA, ("D", 0, 0), 0, 2, (0, 1, 2), 1, 100)
    mid.on_data(pkt, 0)
    fwd = net.sent[-1][1]
    assert fwd.hop_index == 2 and fwd.next_hop == 2
    end.on_data(fwd, 1)
    assert net.delivered == [("D", 0, 0)]
    net.honest = False
    mid.on_data(Packet(Kind.DATA, ("D", 0, 1), 0, 2, (0, 1, 2), 1, 100), 0)
    assert net.drops[-1] == (1, ("D", 0, 1), "selfish")


def test_link_break_sends_route_error():
    net = FakeNet()
    net.down.add((1, 2))
    mid = DsrAgent(1, net)
    mid.on_data(Packet(Kind.DATA, ("D", 0, 0), 0, 3, (0, 1, 2, 3), 1, 100), 0)
    assert net.drops == [(1, ("D", 0, 0), "link_break")]
    rerr = net.sent[-1][1]
    assert rerr.kind is Kind.RERR and rerr.link == (1, 2) and rerr.path == (1, 0)


def test_route_error_purges_and_rediscovers():
    net = FakeNet()
    src = DsrAgent(0, net)
    src.cache.add((0, 1, 2, 3), 0)
    src.buffer.entries.append(Buffered(("D", 0, 9), 3, 10))
    rerr = Packet(Kind.RERR, ("E", 1, 1), 1, 0, (1, 0), 1, 40, link=(1, 2))
    src.on_rerr(rerr, 1)
    assert src.cache.get(3) == []
    assert net.kinds() == [Kind.RREQ]


def test_dead_first_hop_rebuffers():
    net = FakeNet()
    net.down.add((0, 1))
    src = DsrAgent(0, net)
    src.cache.add((0, 1, 2), 0)
    src.originate(2, 64)
    assert src.cache.get(2) == []
    assert len(src.buffer) == 1 and net.kinds() == [Kind.RREQ]


def _mirrored(n=6):
    cfg = MirrorConfig()
    return FakeNet([MirrorAgent(i, cfg) for i in range(n)])


def test_punishment_gate_drops_data_of_culprit():
    net = _mirrored()
    net.mirrors[1].entry(0).bp = 1
    mid = DsrAgent(1, net)
    mid.on_data(Packet(Kind.DATA, ("D", 0, 0), 0, 2, (0, 1, 2), 1, 100), 0)
    mid.on_data(Packet(Kind.DATA, ("D", 0, 1), 0, 2, (0, 1, 2), 1, 100), 0)
    assert net.drops == [(1, ("D", 0, 0), "punishment")]
    assert net.sent[-1][1].uid == ("D", 0, 1)


def test_punishment_gate_drops_requests():
    net = _mirrored()
    net.mirrors[1].entry(0).bp = 1
    DsrAgent(1, net).on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0,), 0, 40), 0)
    assert net.cdrops == [(1, Kind.RREQ, "punishment")] and net.later == []


def test_low_grade_routes_avoided_and_excluded():
    net = _mirrored()
    src = DsrAgent(0, net)
    net.mirrors[0].note_grade(1, 0.0)
    src.cache.add((0, 1, 5), 0)
    src.originate(5, 64)
    rreq = net.sent[0][1]
    assert rreq.kind is Kind.RREQ and rreq.exclude == frozenset({1})


def test_relay_skips_copy_through_locally_low_graded_node():
    net = _mirrored()
    net.mirrors[3].note_grade(1, 0.0)
    relay = DsrAgent(3, net)
    relay.on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0, 1), 0, 44), 1)
    assert net.later == []
    # the copy over an acceptable relay is still taken
    relay.on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0, 2), 0, 44), 2)
    assert [p.path for _, _, p in net.later] == [(0, 2, 3)]


def test_low_grade_originator_still_relayed():
    net = _mirrored()
    net.mirrors[3].note_grade(0, 0.0)
    DsrAgent(3, net).on_rreq(Packet(Kind.RREQ, ("Q", 0, 0), 0, 5, (0,), 0, 40), 0)
    assert len(net.later) == 1


def test_low_grade_next_hop_reported_once_per_round():
    net = _mirrored()
    mid = DsrAgent(2, net)
    net.mirrors[2].note_grade(3, 0.1)
    for k in range(3):
        mid.on_data(Packet(Kind.DATA, ("D", 0, k), 0, 4, (0, 2, 3, 4), 1, 100), 0)
    kinds = net.kinds()
    assert kinds.count(Kind.RERR) == 1 and kinds.count(Kind.DATA) == 3
    rerr = next(p for _, p in net.sent if p.kind is Kind.RERR)
    assert rerr.low_grade == 0.1 and rerr.link == (2, 3)
    mid.new_round()
    mid.on_data(Packet(Kind.DATA, ("D", 0, 9), 0, 4, (0, 2, 3, 4), 1, 100), 0)
    assert net.kinds().count(Kind.RERR) == 2
    src = DsrAgent(0, net)
    src.on_rerr(rerr, 2)
    assert net.mirrors[0].grade_of(3) == 0.1
