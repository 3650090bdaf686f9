"""GloMoSim-style key/value configuration files.

One setting per line: ``KEY value``. ``#`` starts a comment. Keys are
case-sensitive. Durations take NS/US/MS/S/M/H/D suffixes (``15M`` is 900 s).
Dimensions are written ``(x, y)``, and a parenthesised unit after a key is
ignored (``RADIO-TX-POWER (dBm) 1``).
"""

from __future__ import annotations

import dataclasses
import re
import warnings
from dataclasses import dataclass, field

from .mirror import MirrorConfig
from .mobility import MobilityParams
from .radio import RadioParams

PROTOCOLS = ("PDSR", "MDSR")


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key {key}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


class ConfigWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    selfish_fraction: float = 0.0
    drop_prob: float = 1.0
    selfish_mute: bool = False
    flows: int = 10
    flow_rate: float = 2.0
    payload: int = 512
    flow_start: float = 30.0
    flow_stop: float = 870.0


@dataclass(frozen=True)
class RunConfig:
    sim_time: float = 900.0
    terrain: tuple[float, float] = (1250.0, 1250.0)
    nodes: int = 121
    placement: str = "GRID"
    mobility: str = "RANDOM-WAYPOINT"
    motion: MobilityParams = field(default_factory=MobilityParams)
    promiscuous: bool = True
    routing: str = "DSR"
    protocol: str = "PDSR"
    radio: RadioParams = field(default_factory=RadioParams)
    mirror: MirrorConfig = field(default_factory=MirrorConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    seed: int = 1
    event_log: bool = False
    send_buffer: int = 64
    rreq_jitter: float = 0.01
    declared_range: float | None = None

    def replace(self, **changes) -> "RunConfig":
        """Copy with dotted overrides, e.g. ``replace(**{"scenario.flows": 5})``."""
        cfg = self
        for dotted, value in changes.items():
            cfg = _set(cfg, dotted.split("."), value)
        return cfg


def _set(obj, parts, value):
    if len(parts) == 1:
        return dataclasses.replace(obj, **{parts[0]: value})
    child = getattr(obj, parts[0])
    return dataclasses.replace(obj, **{parts[0]: _set(child, parts[1:], value)})


def _get(obj, dotted: str):
    for p in dotted.split("."):
        obj = getattr(obj, p)
    return obj


_DURATION = re.compile(r"^([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*(NS|US|MS|S|M|H|D)?$", re.I)
_UNIT_SCALE = {"NS": 1e-9, "US": 1e-6, "MS": 1e-3, "S": 1.0, "M": 60.0, "H": 3600.0,
               "D": 86400.0}


def parse_duration(text: str) -> float:
    m = _DURATION.match(text.strip())
    if not m:
        raise ValueError(f"bad duration {text!r}")
    return float(m.group(1)) * _UNIT_SCALE[(m.group(2) or "S").upper()]


def parse_dims(text: str) -> tuple[float, float]:
    m = re.match(r"^\(\s*([^,]+?)\s*,\s*([^)]+?)\s*\)$", text.strip())
    if not m:
        raise ValueError(f"bad dimensions {text!r}")
    return (float(m.group(1)), float(m.group(2)))


def parse_bool(text: str) -> bool:
    t = text.strip().upper()
    if t in ("YES", "TRUE", "ON", "1"):
        return True
    if t in ("NO", "FALSE", "OFF", "0"):
        return False
    raise ValueError(f"expected YES or NO, got {text!r}")


def _choice(*allowed):
    def parse(text: str) -> str:
        t = text.strip().upper()
        if t not in allowed:
            raise ValueError(f"expected one of {', '.join(allowed)}, got {text!r}")
        return t
    return parse


def _protocol(text: str) -> str:
    t = text.strip().upper()
    if t == "DSR":
        return "PDSR"
    if t not in PROTOCOLS:
        raise ValueError(f"expected PDSR or MDSR, got {text!r}")
    return t


def _pathloss(text: str) -> str:
    if text.strip().upper() != "TWO-RAY":
        raise ValueError("only TWO-RAY path loss is modelled")
    return "TWO-RAY"


def _fmt_float(v: float) -> str:
    return repr(float(v))


def _fmt_duration(v: float) -> str:
    return f"{float(v)!r}S"


def _fmt_bool(v: bool) -> str:
    return "YES" if v else "NO"


def _fmt_dims(v) -> str:
    return f"({float(v[0])!r}, {float(v[1])!r})"


# key -> (attribute path, parser, formatter); the order is the output order of format_config
KEYS: dict[str, tuple] = {
    "SIMULATION-TIME": ("sim_time", parse_duration, _fmt_duration),
    "SEED": ("seed", int, str),
    "TERRAIN-DIMENSIONS": ("terrain", parse_dims, _fmt_dims),
    "NUMBER-OF-NODES": ("nodes", int, str),
    "NODE-PLACEMENT": ("placement", _choice("GRID", "UNIFORM"), str),
    "MOBILITY": ("mobility", _choice("RANDOM-WAYPOINT", "NONE"), str),
    "MOBILITY-WP-PAUSE": ("motion.pause", parse_duration, _fmt_duration),
    "MOBILITY-WP-MIN-SPEED": ("motion.v_min", float, _fmt_float),
    "MOBILITY-WP-MAX-SPEED": ("motion.v_max", float, _fmt_float),
    "MOBILITY-POSITION-GRANULARITY": ("motion.granularity", float, _fmt_float),
    "PROMISCUOUS-MODE": ("promiscuous", parse_bool, _fmt_bool),
    "ROUTING-PROTOCOL": ("routing", _choice("DSR"), str),
    "PROTOCOL-VARIANT": ("protocol", _protocol, str),
    "PROPAGATION-LIMIT": ("radio.propagation_limit", float, _fmt_float),
    "PROPAGATION-PATHLOSS": (None, _pathloss, None),
    "RADIO-FREQUENCY": ("radio.frequency", float, _fmt_float),
    "RADIO-BANDWIDTH": ("radio.bandwidth", float, _fmt_float),
    "RADIO-TX-POWER": ("radio.tx_power", float, _fmt_float),
    "RADIO-ANTENNA-GAIN": ("radio.antenna_gain", float, _fmt_float),
    "RADIO-ANTENNA-HEIGHT": ("radio.antenna_height", float, _fmt_float),
    "RADIO-RX-SENSITIVITY": ("radio.rx_sensitivity", float, _fmt_float),
    "RADIO-RX-THRESHOLD": ("radio.rx_threshold", float, _fmt_float),
    "RADIO-RANGE": ("declared_range", float, None),
    "MIRROR-ROUND": ("mirror.round_length", parse_duration, _fmt_duration),
    "MIRROR-WINDOW": ("mirror.window", parse_duration, _fmt_duration),
    "MIRROR-WATCHDOG-TIMEOUT": ("mirror.watchdog_timeout", parse_duration, _fmt_duration),
    "MIRROR-GRADE-THRESHOLD": ("mirror.grade_threshold", float, _fmt_float),
    "MIRROR-DUTY-CYCLE": ("mirror.duty_cycle", float, _fmt_float),
    "MIRROR-PUNISH-REPLIES": ("mirror.punish_replies", parse_bool, _fmt_bool),
    "MIRROR-COUNT-RREQ": ("mirror.count_rreq", parse_bool, _fmt_bool),
    "SELFISH-FRACTION": ("scenario.selfish_fraction", float, _fmt_float),
    "SELFISH-DROP-PROB": ("scenario.drop_prob", float, _fmt_float),
    "SELFISH-MUTE": ("scenario.selfish_mute", parse_bool, _fmt_bool),
    "FLOWS": ("scenario.flows", int, str),
    "FLOW-RATE": ("scenario.flow_rate", float, _fmt_float),
    "FLOW-PAYLOAD": ("scenario.payload", int, str),
    "FLOW-START": ("scenario.flow_start", parse_duration, _fmt_duration),
    "FLOW-STOP": ("scenario.flow_stop", parse_duration, _fmt_duration),
    "SEND-BUFFER": ("send_buffer", int, str),
    "RREQ-JITTER": ("rreq_jitter", parse_duration, _fmt_duration),
    "EVENT-LOG": ("event_log", parse_bool, _fmt_bool),
}

MANDATORY = ("SIMULATION-TIME", "TERRAIN-DIMENSIONS", "NUMBER-OF-NODES")
_UNIT = re.compile(r"^\(([A-Za-z/%]+)\)\s+(\S.*)$")


def _split(line: str) -> tuple[str, str]:
    if line.startswith("RADIO RANGE"):
        key, rest = "RADIO-RANGE", line[len("RADIO RANGE"):].strip()
    else:
        parts = line.split(None, 1)
        key, rest = parts[0], parts[1].strip() if len(parts) > 1 else ""
    m = _UNIT.match(rest)
    if m:
        rest = m.group(2).strip()
    return key, rest


def parse_config(text: str, strict: bool = True, base: RunConfig | None = None) -> RunConfig:
    """Parse configuration text on top of ``base`` (defaults when omitted).

    With ``strict`` the keys in :data:`MANDATORY` must appear.
    """
    cfg = base or RunConfig()
    seen = set()
    nested: dict[str, dict] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, rest = _split(line)
        spec = KEYS.get(key)
        if spec is None:
            warnings.warn(f"unknown key {key} on line {lineno} ignored", ConfigWarning, stacklevel=2)
            continue
        if not rest:
            raise ConfigError("missing value", key, lineno)
        path, parse, _ = spec
        try:
            value = parse(rest)
        except ValueError as exc:
            raise ConfigError(str(exc), key, lineno) from None
        seen.add(key)
        if path is None:
            continue
        head, _, tail = path.partition(".")
        if tail:
            nested.setdefault(head, {})[tail] = (value, key, lineno)
        else:
            cfg = dataclasses.replace(cfg, **{head: value})
    for head, values in nested.items():
        current = getattr(cfg, head)
        try:
            updated = dataclasses.replace(current, **{k: v[0] for k, v in values.items()})
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), *_culprit(current, values)) from None
        cfg = dataclasses.replace(cfg, **{head: updated})
    if strict:
        missing = [k for k in MANDATORY if k not in seen]
        if missing:
            raise ConfigError(f"missing mandatory key(s) {', '.join(missing)}", missing[0])
    return cfg


def _culprit(current, values: dict) -> tuple[str, int]:
    """The latest key whose omission makes the group valid, else the first key."""
    by_line = sorted(values.items(), key=lambda kv: kv[1][2])
    for attr, (_, key, lineno) in reversed(by_line):
        rest = {k: v[0] for k, v in values.items() if k != attr}
        try:
            dataclasses.replace(current, **rest)
        except (ValueError, TypeError):
            continue
        return key, lineno
    return by_line[0][1][1], by_line[0][1][2]


def format_config(cfg: RunConfig) -> str:
    """Render every effective setting; ``parse_config`` of the output returns ``cfg``."""
    lines = []
    for key, (path, _, fmt) in KEYS.items():
        if key == "PROPAGATION-PATHLOSS":
            lines.append(f"{key} TWO-RAY")
            continue
        if fmt is None:
            continue
        lines.append(f"{key} {fmt(_get(cfg, path))}")
    if cfg.declared_range is not None:
        lines.append(f"RADIO-RANGE {cfg.declared_range!r}")
    return "\n".join(lines) + "\n"


def load_config(path, strict: bool = True) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read(), strict=strict)
