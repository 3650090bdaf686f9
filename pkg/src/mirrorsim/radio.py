"""Wireless medium: two-ray path loss, reception thresholds, frame delivery.

Propagation is free-space up to the crossover distance ``4*pi*ht*hr/lambda``
and two-ray ground reflection beyond it. The two formulas meet exactly at the
crossover, so received power is continuous and non-increasing in distance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

# GloMoSim's constant; with it the reference radio settings give the 125.227 m range.
SPEED_OF_LIGHT = 3.0e8
MIN_DISTANCE = 1e-3


class Reception(enum.IntEnum):
    ADDRESSED = 0
    PROMISCUOUS = 1


@dataclass(frozen=True)
class RadioParams:
    tx_power: float = 1.0
    antenna_gain: float = 0.0
    frequency: float = 2.4e9
    rx_sensitivity: float = -91.0
    rx_threshold: float = -81.0
    propagation_limit: float = -111.0
    antenna_height: float = 1.5
    bandwidth: float = 2_000_000.0

    def __post_init__(self) -> None:
        if self.frequency <= 0:
            raise ValueError("frequency must be positive")
        if self.antenna_height <= 0:
            raise ValueError("antenna_height must be positive")
        if not (self.propagation_limit <= self.rx_sensitivity <= self.rx_threshold):
            raise ValueError("need propagation_limit <= rx_sensitivity <= rx_threshold")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def crossover(self) -> float:
        h = self.antenna_height
        return 4 * math.pi * h * h / self.wavelength

    @property
    def eirp_gain(self) -> float:
        """Transmit power plus both antenna gains, in dB."""
        return self.tx_power + 2 * self.antenna_gain


def free_space_loss(params: RadioParams, distance):
    return -20 * np.log10(params.wavelength / (4 * math.pi * np.asarray(distance, dtype=float)))


def two_ray_loss(params: RadioParams, distance):
    h = params.antenna_height
    return -20 * np.log10(h * h / np.asarray(distance, dtype=float) ** 2)


def rx_power(params: RadioParams, distance):
    """Received power in dBm at ``distance`` metres (scalar or array).

    Distances below 1 mm are clamped, so co-located nodes receive the strongest
    power the model can produce instead of an infinite value.
    """
    d = np.maximum(np.asarray(distance, dtype=float), MIN_DISTANCE)
    loss = np.where(d < params.crossover, free_space_loss(params, d), two_ray_loss(params, d))
    out = params.eirp_gain - loss
    return float(out) if out.ndim == 0 else out


def max_range(params: RadioParams) -> float:
    """Largest distance at which rx_power >= rx_threshold (closed form)."""
    budget = params.eirp_gain - params.rx_threshold
    d = params.wavelength / (4 * math.pi) * 10 ** (budget / 20)
    if d >= params.crossover:
        h = params.antenna_height
        d = h * 10 ** (budget / 40)
    return max(d, MIN_DISTANCE)


def tx_delay_us(params: RadioParams, size_bytes: int) -> int:
    """Transmission time at the radio bandwidth plus 1 us propagation."""
    return int(math.ceil(size_bytes * 8 * 1_000_000 / params.bandwidth)) + 1


def receivers(params: RadioParams, sender: int, positions: np.ndarray, alive=None) -> np.ndarray:
    """Indices of nodes (other than ``sender``) that decode a frame from ``sender``."""
    delta = positions - positions[sender]
    dist = np.hypot(delta[:, 0], delta[:, 1])
    ok = rx_power(params, dist) >= params.rx_threshold
    ok[sender] = False
    if alive is not None:
        ok &= alive
    return np.flatnonzero(ok)


def deliver(params: RadioParams, sender: int, positions: np.ndarray, next_hop: int | None,
            promiscuous: bool = True) -> list[tuple[int, Reception]]:
    """Classify every in-range receiver of one transmission.

    ``next_hop`` is the unicast destination, or None for a broadcast (every
    receiver is then addressed). Non-addressed receivers are reported only when
    promiscuous listening is enabled.
    """
    out = []
    for r in receivers(params, sender, positions).tolist():
        if next_hop is None or r == next_hop:
            out.append((r, Reception.ADDRESSED))
        elif promiscuous:
            out.append((r, Reception.PROMISCUOUS))
    return out


class Medium:
    """Range test on squared distances, exact at the threshold.

    Pairs within a relative 1e-9 of the range are decided by ``rx_power``
    itself, so the fast path never disagrees with the propagation model.
    """

    def __init__(self, params: RadioParams) -> None:
        self.params = params
        r2 = max_range(params) ** 2
        self._lo = r2 * (1 - 1e-9)
        self._hi = r2 * (1 + 1e-9)

    def reach(self, d2: np.ndarray) -> np.ndarray:
        ok = d2 <= self._lo
        border = np.flatnonzero((d2 > self._lo) & (d2 <= self._hi))
        if len(border):
            p = self.params
            ok[border] = rx_power(p, np.sqrt(d2[border])) >= p.rx_threshold
        return ok

    def hears(self, a, b) -> bool:
        dx, dy = a[0] - b[0], a[1] - b[1]
        return bool(self.reach(np.array([dx * dx + dy * dy]))[0])
