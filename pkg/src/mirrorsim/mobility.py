"""Grid placement and random-waypoint motion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class PlacementError(ValueError):
    pass


@dataclass(frozen=True)
class MobilityParams:
    pause: float = 30.0
    v_min: float = 0.0
    v_max: float = 10.0
    granularity: float = 0.5

    def __post_init__(self) -> None:
        if not (0 <= self.v_min <= self.v_max):
            raise ValueError("need 0 <= v_min <= v_max")
        if self.pause < 0:
            raise ValueError("pause must be non-negative")
        if self.granularity <= 0:
            raise ValueError("granularity must be positive")


@dataclass(frozen=True)
class WaypointState:
    origin: tuple[float, float]
    target: tuple[float, float]
    speed: float
    leg_start: float
    pause_until: float

    @property
    def length(self) -> float:
        return math.dist(self.origin, self.target)

    @property
    def arrival(self) -> float:
        """Time the node reaches ``target``; inf for a node that never moves again."""
        if self.speed > 0:
            return self.pause_until + self.length / self.speed
        if self.origin == self.target and math.isfinite(self.pause_until):
            return self.pause_until
        return math.inf


def grid_place(n: int, terrain: tuple[float, float]) -> np.ndarray:
    """Place ``n`` nodes on a square lattice spanning the whole terrain.

    Node ``i`` sits at column ``i % k``, row ``i // k`` with ``k = sqrt(n)``.
    """
    k = math.isqrt(n) if n > 0 else 0
    if n <= 0 or k * k != n:
        lo = max(math.isqrt(max(n, 1)), 1)
        hi = lo + 1 if lo * lo <= n else lo
        raise PlacementError(
            f"grid placement needs a perfect-square node count; got {n} "
            f"(nearest valid: {lo * lo}, {hi * hi})")
    w, h = terrain
    if k == 1:
        return np.array([[0.0, 0.0]])
    xs = np.linspace(0.0, w, k)
    ys = np.linspace(0.0, h, k)
    return np.array([(x, y) for y in ys for x in xs], dtype=float)


def at_rest(position, now: float) -> WaypointState:
    """A finished leg ending at ``position``; feed it to :func:`next_leg`."""
    p = (float(position[0]), float(position[1]))
    return WaypointState(p, p, 0.0, now, now)


def next_leg(state: WaypointState, rng: np.random.Generator, terrain: tuple[float, float],
             params: MobilityParams, now: float) -> WaypointState:
    """Start a new leg at the reached waypoint: pause, then head to a uniform target.

    A zero speed draw is redrawn once; a second zero turns the leg into one more
    pause at the current point.
    """
    here = state.target
    if params.v_max == 0:
        return WaypointState(here, here, 0.0, now, math.inf)
    w, h = terrain
    tx = float(rng.uniform(0.0, w))
    ty = float(rng.uniform(0.0, h))
    speed = float(rng.uniform(params.v_min, params.v_max))
    if speed == 0.0:
        speed = float(rng.uniform(params.v_min, params.v_max))
    pause_until = now + params.pause
    if speed == 0.0:
        return WaypointState(here, here, 0.0, now, pause_until + params.pause)
    return WaypointState(here, (tx, ty), speed, now, pause_until)


def quantize(value, granularity: float):
    return np.round(np.asarray(value, dtype=float) / granularity) * granularity


def position_at(state: WaypointState, t: float, params: MobilityParams,
                terrain: tuple[float, float] | None = None) -> tuple[float, float]:
    (ox, oy), (tx, ty) = state.origin, state.target
    if t <= state.pause_until or state.speed <= 0:
        x, y = ox, oy
    else:
        length = state.length
        frac = 1.0 if length == 0 else min((t - state.pause_until) * state.speed / length, 1.0)
        x, y = ox + frac * (tx - ox), oy + frac * (ty - oy)
    x, y = (float(v) for v in quantize((x, y), params.granularity))
    if terrain is not None:
        x = min(max(x, 0.0), terrain[0])
        y = min(max(y, 0.0), terrain[1])
    return x, y


class MobilityModel:
    """Per-node waypoint states with a vectorized ``positions(t)`` query."""

    def __init__(self, initial: np.ndarray, terrain: tuple[float, float],
                 params: MobilityParams, rngs: list[np.random.Generator], start: float = 0.0):
        self.terrain = (float(terrain[0]), float(terrain[1]))
        self.params = params
        self.rngs = rngs
        n = len(initial)
        self.states = [next_leg(at_rest(initial[i], start), rngs[i], self.terrain, params, start)
                       for i in range(n)]
        self._origin = np.zeros((n, 2))
        self._delta = np.zeros((n, 2))
        self._move = np.zeros(n)
        self._rate = np.zeros(n)
        self._inv_g = 1.0 / params.granularity
        self._upper = np.array(self.terrain)
        for i in range(n):
            self._sync(i)
        self._cache_t: float | None = None
        self._cache: np.ndarray | None = None

    def _sync(self, i: int) -> None:
        s = self.states[i]
        self._origin[i] = s.origin
        self._delta[i] = (s.target[0] - s.origin[0], s.target[1] - s.origin[1])
        self._move[i] = s.pause_until if math.isfinite(s.pause_until) else 0.0
        length = s.length
        self._rate[i] = s.speed / length if length > 0 and s.speed > 0 else 0.0
        self._cache_t = None

    def arrival(self, i: int) -> float:
        return self.states[i].arrival

    def advance(self, i: int, now: float) -> WaypointState:
        """Node ``i`` reached its waypoint at ``now``; draw and install the next leg."""
        self.states[i] = next_leg(self.states[i], self.rngs[i], self.terrain, self.params, now)
        self._sync(i)
        return self.states[i]

    def positions(self, t: float) -> np.ndarray:
        if self._cache_t == t:
            return self._cache
        frac = (t - self._move) * self._rate
        np.clip(frac, 0.0, 1.0, out=frac)
        pos = self._origin + frac[:, None] * self._delta
        pos *= self._inv_g
        np.round(pos, out=pos)
        pos *= self.params.granularity
        np.clip(pos, 0.0, self._upper, out=pos)
        self._cache_t = t
        self._cache = pos
        return pos
