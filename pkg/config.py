# config.py
"""
Run configuration: frozen dataclasses plus a flat `key = value` file format.

    # comments and blank lines are ignored
    t_gap = 4 s
    duration = 20 min
    speed_mean = 14 km/h
    div_max = 120 deg
    orders_right = 1,1

Values may carry units (parsed with pint) and are converted to the canonical unit
of their key: seconds, meters, m/s, radians, riders per minute, exits per meter.
Bare numbers are taken in the canonical unit. Every key is optional.
"""

from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from pint import UnitRegistry
from pint.errors import DimensionalityError

from arma import RIGHT_WAY_ORDERS, WRONG_WAY_ORDERS, ArmaOrders
from detector import DEFAULT_INTRA_PAIR_DT, DEFAULT_T_GAP, DetectorConfig
from errors import ConfigError, InvalidParameterError
from simulator import DEFAULT_FRAME_DT, ScenarioConfig
from tracker_baseline import TrackerConfig
from validators import validate_run_config

log = logging.getLogger(__name__)

_ureg = UnitRegistry()

DEFAULT_T_GAPS = (2.0, 4.0)
DEFAULT_SEEDS = 20


@dataclass(frozen=True)
class SamplingConfig:
    t_gap: float = DEFAULT_T_GAP
    intra_pair_dt: float = DEFAULT_INTRA_PAIR_DT
    frame_dt: float = DEFAULT_FRAME_DT
    # sampling intervals compared by the bench
    t_gaps: Tuple[float, ...] = DEFAULT_T_GAPS


@dataclass(frozen=True)
class RunConfig:
    detector: DetectorConfig = DetectorConfig()
    sampling: SamplingConfig = SamplingConfig()
    orders_right: ArmaOrders = RIGHT_WAY_ORDERS
    orders_wrong: ArmaOrders = WRONG_WAY_ORDERS
    tracker: TrackerConfig = TrackerConfig()
    scenario: ScenarioConfig = ScenarioConfig()
    seeds: int = DEFAULT_SEEDS
    max_workers: int = 1
    # (key, verbatim value) in the order they were applied
    overrides: Tuple[Tuple[str, str], ...] = field(default=())

    @property
    def seed(self) -> int:
        return self.scenario.seed


# ─────────────────── value parsers ───────────────────
_NUM_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")
_PX_RE = re.compile(r"\s*(px|pixels?)$", re.I)


def _quantity(text: str, canonical: str) -> float:
    m = _NUM_RE.match(text)
    if not m:
        raise ValueError(f"not a number: {text!r}")
    qty, unit = float(m.group(1)), m.group(2)
    if not unit:
        return qty
    if unit.startswith("/"):
        unit = "1" + unit
    try:
        return float((qty * _ureg(unit)).to(canonical).magnitude)
    except DimensionalityError:
        raise ValueError(f"{text!r} cannot be expressed in {canonical}") from None
    except Exception:
        raise ValueError(f"unknown unit in {text!r}") from None


def _unit(canonical: str) -> Callable[[str], float]:
    return lambda text: _quantity(text, canonical)


def _plain(text: str) -> float:
    m = _NUM_RE.match(text)
    if not m or m.group(2):
        raise ValueError(f"expected a plain number, got {text!r}")
    return float(m.group(1))


def _pixels(text: str) -> float:
    return _plain(_PX_RE.sub("", text))


def _integer(text: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _boolean(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _orders(text: str) -> ArmaOrders:
    try:
        return ArmaOrders.parse(text)
    except InvalidParameterError as exc:
        raise ValueError(str(exc)) from None


def _band(text: str) -> Tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"expected 'low, high', got {text!r}")
    return (_pixels(parts[0]), _pixels(parts[1]))


def _seconds_list(text: str) -> Tuple[float, ...]:
    return tuple(_quantity(p, "second") for p in text.split(",") if p.strip())


_SECONDS, _METERS, _RADIANS = _unit("second"), _unit("meter"), _unit("radian")
_SPEED, _PER_MINUTE, _PER_METER = _unit("meter / second"), _unit("1 / minute"), _unit("1 / meter")

# flat key -> (section, field, parser); section None = top level of RunConfig
KEYS: Dict[str, Tuple[Optional[str], str, Callable[[str], Any]]] = {
    "iou_max": ("detector", "iou_max", _plain),
    "iou_min": ("detector", "iou_min", _plain),
    "div_max": ("detector", "div_max", _RADIANS),
    "class_threshold": ("detector", "class_threshold", _RADIANS),
    "o_right": ("detector", "o_right", _RADIANS),
    "y_axis_down": ("detector", "y_axis_down", _boolean),
    "use_ensemble": ("detector", "use_ensemble", _boolean),
    "t_gap": ("sampling", "t_gap", _SECONDS),
    "intra_pair_dt": ("sampling", "intra_pair_dt", _SECONDS),
    "frame_dt": ("sampling", "frame_dt", _SECONDS),
    "t_gaps": ("sampling", "t_gaps", _seconds_list),
    "orders_right": (None, "orders_right", _orders),
    "orders_wrong": (None, "orders_wrong", _orders),
    "tracker_iou_min": ("tracker", "iou_min", _plain),
    "max_age": ("tracker", "max_age", _integer),
    "min_displacement": ("tracker", "min_displacement", _pixels),
    "seeds": (None, "seeds", _integer),
    "max_workers": (None, "max_workers", _integer),
    "duration": ("scenario", "duration", _SECONDS),
    "fov_length": ("scenario", "fov_length", _METERS),
    "px_per_meter": ("scenario", "px_per_meter", _plain),
    "lane_y_right": ("scenario", "lane_y_right", _band),
    "lane_y_wrong": ("scenario", "lane_y_wrong", _band),
    "right_way_heading": ("scenario", "right_way_heading", _RADIANS),
    "arrival_rate_r": ("scenario", "arrival_rate_r", _PER_MINUTE),
    "arrival_rate_w": ("scenario", "arrival_rate_w", _PER_MINUTE),
    "arrival_burstiness": ("scenario", "arrival_burstiness", _plain),
    "arrival_interval": ("scenario", "arrival_interval", _SECONDS),
    "speed_mean": ("scenario", "speed_mean", _SPEED),
    "speed_std": ("scenario", "speed_std", _SPEED),
    "speed_min": ("scenario", "speed_min", _SPEED),
    "speed_max": ("scenario", "speed_max", _SPEED),
    "turnoff_rate": ("scenario", "turnoff_rate", _PER_METER),
    "min_path": ("scenario", "min_path", _METERS),
    "vehicle_length": ("scenario", "vehicle_length", _METERS),
    "vehicle_width": ("scenario", "vehicle_width", _METERS),
    "min_spacing": ("scenario", "min_spacing", _METERS),
    "miss_rate": ("scenario", "miss_rate", _plain),
    "false_positive_rate": ("scenario", "false_positive_rate", _plain),
    "bbox_jitter": ("scenario", "bbox_jitter", _pixels),
    "size_jitter": ("scenario", "size_jitter", _plain),
    "oracle_noise": ("scenario", "oracle_noise", _RADIANS),
    "oracle_flip": ("scenario", "oracle_flip", _plain),
    "seed": ("scenario", "seed", _integer),
}


# ─────────────────── application ───────────────────
def _set(run: RunConfig, key: str, text: str, line: Optional[int]) -> RunConfig:
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line)
    section, name, parse = KEYS[key]
    try:
        value = parse(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}", line) from None
    if section is None:
        run = replace(run, **{name: value})
    else:
        run = replace(run, **{section: replace(getattr(run, section), **{name: value})})
    return replace(run, overrides=run.overrides + ((key, text),))


def _validate(run: RunConfig, lines: Mapping[str, int]) -> RunConfig:
    issues = validate_run_config(run)
    if issues:
        keys = [i.split(":", 1)[0] for i in issues]
        line = next((lines[k] for k in keys if k in lines), None)
        raise ConfigError("; ".join(issues), line)
    return run


def parse_run_config(text: str, base: RunConfig = RunConfig()) -> RunConfig:
    run = base
    lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        if not value:
            raise ConfigError(f"{key}: missing value", lineno)
        run = _set(run, key, value, lineno)
        lines[key] = lineno
    return _validate(run, lines)


def load_run_config(path: Optional[Path | str] = None) -> RunConfig:
    """Defaults when path is None; ConfigError names the offending line."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    run = parse_run_config(text)
    log.info("loaded config %s (%d overrides)", path, len(run.overrides))
    return run


def apply_overrides(run: RunConfig, overrides: Mapping[str, str]) -> RunConfig:
    """Command-line overrides, same keys and value syntax as the file."""
    for key, text in overrides.items():
        run = _set(run, key, text, None)
    return _validate(run, {})


def _plain_value(v: Any) -> Any:
    if isinstance(v, Enum):
        return v.value
    if isinstance(v, dict):
        return {k: _plain_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain_value(x) for x in v]
    return v


def run_config_to_dict(run: RunConfig) -> Dict[str, Any]:
    d = _plain_value(asdict(run))
    d["overrides"] = [{"key": k, "value": v} for k, v in run.overrides]
    return d


def run_config_from_dict(d: Mapping[str, Any]) -> RunConfig:
    """Inverse of run_config_to_dict (used when re-reading output headers)."""
    def build(cls, data: Mapping[str, Any]):
        kwargs = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            kwargs[f.name] = tuple(v) if isinstance(v, list) else v
        return cls(**kwargs)

    return RunConfig(
        detector=build(DetectorConfig, d.get("detector", {})),
        sampling=build(SamplingConfig, d.get("sampling", {})),
        orders_right=build(ArmaOrders, d.get("orders_right", {})),
        orders_wrong=build(ArmaOrders, d.get("orders_wrong", {})),
        tracker=build(TrackerConfig, d.get("tracker", {})),
        scenario=build(ScenarioConfig, d.get("scenario", {})),
        seeds=int(d.get("seeds", DEFAULT_SEEDS)),
        max_workers=int(d.get("max_workers", 1)),
        overrides=tuple((o["key"], o["value"]) for o in d.get("overrides", [])),
    )
