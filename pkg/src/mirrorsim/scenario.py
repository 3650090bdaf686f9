"""Node behaviour policies and constant-rate traffic."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class Behavior(enum.Enum):
    HONEST = "honest"
    SELFISH = "selfish"


@dataclass(frozen=True)
class BehaviorPolicy:
    kind: Behavior = Behavior.HONEST
    drop_prob: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError("drop_prob must lie in [0, 1]")

    @property
    def selfish(self) -> bool:
        return self.kind is Behavior.SELFISH


HONEST = BehaviorPolicy()


@dataclass(frozen=True)
class TrafficFlow:
    src: int
    dst: int
    interval: float
    payload: int = 512
    start: float = 30.0
    stop: float = 870.0

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError("flow source and destination must differ")
        if self.interval <= 0:
            raise ValueError("flow interval must be positive")


def assign_selfish(nodes, fraction: float, rng: np.random.Generator,
                   drop_prob: float = 1.0) -> dict[int, BehaviorPolicy]:
    """Mark ``round(fraction * n)`` nodes, sampled without replacement, as selfish."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("selfish fraction must lie in [0, 1]")
    nodes = list(nodes)
    count = int(round(fraction * len(nodes)))
    chosen = set(rng.choice(len(nodes), size=count, replace=False).tolist()) if count else set()
    selfish = BehaviorPolicy(Behavior.SELFISH, drop_prob)
    return {n: (selfish if i in chosen else HONEST) for i, n in enumerate(nodes)}


def should_forward(policy: BehaviorPolicy, rng: np.random.Generator) -> bool:
    if not policy.selfish:
        return True
    if policy.drop_prob >= 1.0:
        return False
    if policy.drop_prob <= 0.0:
        return True
    return bool(rng.random() >= policy.drop_prob)


def emission_times_us(flow: TrafficFlow) -> range:
    """Origination instants in whole microseconds: start, start+interval, ... < stop."""
    start = round(flow.start * 1_000_000)
    stop = round(flow.stop * 1_000_000)
    step = round(flow.interval * 1_000_000)
    return range(start, max(start, stop), step)


def generate_traffic(flows) -> list[tuple[int, int, int, int]]:
    """All originations as ``(time_us, flow_index, src, dst)``, in time order.

    Ties keep flow order, so two flows sharing a source interleave by
    timestamp.
    """
    out = []
    for k, f in enumerate(flows):
        out.extend((t, k, f.src, f.dst) for t in emission_times_us(f))
    out.sort()
    return out


def random_flows(n_nodes: int, count: int, rate: float, payload: int, start: float,
                 stop: float, rng: np.random.Generator) -> list[TrafficFlow]:
    """``count`` flows between distinct random (src, dst) pairs.

    Each start is staggered by a uniform fraction of one interval.
    """
    interval = 1.0 / rate
    max_pairs = n_nodes * (n_nodes - 1)
    if count > max_pairs:
        raise ValueError(f"{count} distinct flows impossible with {n_nodes} nodes")
    pairs: list[tuple[int, int]] = []
    seen = set()
    while len(pairs) < count:
        src, dst = (int(v) for v in rng.choice(n_nodes, size=2, replace=False))
        if (src, dst) in seen:
            continue
        seen.add((src, dst))
        pairs.append((src, dst))
    offsets = rng.uniform(0.0, interval, size=count)
    return [TrafficFlow(s, d, interval, payload, round(start + float(o), 6), stop)
            for (s, d), o in zip(pairs, offsets)]
