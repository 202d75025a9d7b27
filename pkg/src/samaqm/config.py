"""Flat ``key = value`` configuration with presets and command-line overrides.

Precedence, lowest first: field defaults, preset, config file, overrides.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Dict, Iterable, Optional, Tuple

CONTROLLERS = ("droptail", "red", "blue", "pi", "sam")


class ConfigError(ValueError):
    pass


class UnknownKeyError(ConfigError):
    def __init__(self, key: str, where: str = ""):
        super().__init__(f"unknown config key {key!r}{where}")
        self.key = key


class MissingKeyError(ConfigError):
    def __init__(self, key: str, why: str = ""):
        super().__init__(f"missing required config key {key!r}{why}")
        self.key = key


class BadValueError(ConfigError):
    def __init__(self, key: str, value: str, why: str):
        super().__init__(f"bad value for {key!r}: {value!r} ({why})")
        self.key = key
        self.value = value


def _key(name: str, **kw):
    return field(metadata={"key": name}, **kw)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true/false")


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _optional(conv):
    def parse(text):
        return None if text.strip().lower() in ("", "none", "auto") else conv(text)
    return parse


@dataclass(frozen=True)
class ScenarioConfig:
    bandwidth_bps: float = 1_000_000.0
    link_delay_s: float = 0.010
    buffer_packets: int = 800
    packet_bytes: int = 500
    n_http: int = 200
    n_ftp: int = 100
    duration_s: float = 180.0
    seed: int = 0
    controller: Optional[str] = None
    http_size_mean: float = 10.0
    http_idle_mean: float = 1.0
    start_jitter_s: float = 10.0
    initial_ssthresh: float = 64.0
    sample_interval_s: float = 0.1
    warmup_s: float = 10.0
    red_w_q: float = _key("red.w_q", default=0.002)
    red_min_th: Optional[float] = _key("red.min_th", default=None)
    red_max_th: Optional[float] = _key("red.max_th", default=None)
    red_max_p: float = _key("red.max_p", default=0.1)
    red_count_correction: bool = _key("red.count_correction", default=True)
    blue_d1: float = _key("blue.d1", default=0.02)
    blue_d2: float = _key("blue.d2", default=0.002)
    blue_freeze_time: float = _key("blue.freeze_time", default=0.1)
    pi_a: float = _key("pi.a", default=1.82e-5)
    pi_b: float = _key("pi.b", default=1.81e-5)
    pi_q_ref: Optional[float] = _key("pi.q_ref", default=None)
    pi_sample_interval: float = _key("pi.sample_interval", default=0.00625)
    pi_scale: float = _key("pi.scale", default=1.0)
    sam_model_path: Optional[str] = _key("sam.model_path", default=None)
    sam_label_mode: str = _key("sam.label_mode", default="policy")

    def validate(self, require_controller: bool = True) -> "ScenarioConfig":
        positive = ("bandwidth_bps", "link_delay_s", "buffer_packets", "packet_bytes", "duration_s",
                    "http_size_mean", "http_idle_mean", "initial_ssthresh", "sample_interval_s",
                    "pi_sample_interval", "pi_scale", "red_w_q", "red_max_p")
        for name in positive:
            if not getattr(self, name) > 0:
                raise BadValueError(key_of(type(self), name), str(getattr(self, name)), "must be positive")
        for name in ("n_http", "n_ftp", "seed", "start_jitter_s", "warmup_s"):
            if getattr(self, name) < 0:
                raise BadValueError(key_of(type(self), name), str(getattr(self, name)), "must be >= 0")
        if self.controller is None:
            if require_controller:
                raise MissingKeyError("controller")
        elif self.controller not in CONTROLLERS:
            raise BadValueError("controller", self.controller, f"expected one of {', '.join(CONTROLLERS)}")
        if self.controller == "sam" and not self.sam_model_path:
            raise MissingKeyError("sam.model_path", " (required when controller = sam)")
        if self.sam_label_mode != "policy":
            raise BadValueError("sam.label_mode", self.sam_label_mode, "only 'policy' is implemented")
        return self

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    # Thresholds left unset scale with the buffer (100/300 and 200 for 800 packets).
    @property
    def red_thresholds(self) -> Tuple[float, float]:
        lo = self.red_min_th if self.red_min_th is not None else self.buffer_packets / 8
        hi = self.red_max_th if self.red_max_th is not None else 3 * self.buffer_packets / 8
        return lo, hi

    @property
    def pi_reference(self) -> float:
        return self.pi_q_ref if self.pi_q_ref is not None else self.buffer_packets / 4


@dataclass(frozen=True)
class TrainSettings:
    C: float = _key("svm.C", default=10.0)
    gamma: float = _key("svm.gamma", default=2.0)
    tol: float = _key("svm.tol", default=1e-3)
    max_passes: int = _key("svm.max_passes", default=200)
    theta: float = _key("policy.theta", default=0.5)
    g: float = _key("policy.g", default=2.0)
    weights: Tuple[float, ...] = _key("policy.weights", default=(1, 2, 3, 4, 5))
    n: int = _key("train.n", default=2000)
    seed: int = 0

    def validate(self, require_controller: bool = False) -> "TrainSettings":
        return self


PRESETS: Dict[str, Dict[str, str]] = {
    "paper": {"n_http": "200", "n_ftp": "100", "duration_s": "180", "buffer_packets": "800"},
    # desk-scale controller tuning (1 Mbps, 30 flows, 200-packet buffer)
    "desk": {"n_http": "20", "n_ftp": "10", "duration_s": "60", "buffer_packets": "200",
             "blue.d1": "0.0025", "blue.d2": "0.00025", "pi.q_ref": "40", "pi.scale": "30"},
}


def key_of(schema, attr: str) -> str:
    for f in fields(schema):
        if f.name == attr:
            return f.metadata.get("key", f.name)
    raise KeyError(attr)


def _converters(schema):
    conv = {}
    for f in fields(schema):
        key = f.metadata.get("key", f.name)
        t = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
        if "Tuple" in t:
            fn = _floats
        elif "bool" in t:
            fn = _bool
        elif "int" in t:
            fn = int
        elif "float" in t:
            fn = float
        else:
            fn = str
        conv[key] = (f.name, _optional(fn) if "Optional" in t else fn)
    return conv


def read_config_file(path) -> Dict[str, str]:
    values: Dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            k, v = line.split("=", 1)
            values[k.strip()] = v.strip()
    return values


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build(schema, layers: Iterable[Tuple[str, Dict[str, str]]]):
    conv = _converters(schema)
    kwargs = {}
    for where, layer in layers:
        for key, text in layer.items():
            if key not in conv:
                raise UnknownKeyError(key, where)
            attr, fn = conv[key]
            try:
                kwargs[attr] = fn(text)
            except ValueError as exc:
                raise BadValueError(key, text, str(exc) or "wrong type") from None
    try:
        return schema(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path=None, overrides: Iterable[str] = (), *, preset: Optional[str] = None,
                 schema=ScenarioConfig, require_controller: bool = True):
    layers = []
    if preset is not None:
        if preset not in PRESETS:
            raise BadValueError("--preset", preset, f"expected one of {', '.join(PRESETS)}")
        if schema is ScenarioConfig:
            layers.append(("", PRESETS[preset]))
    if path is not None:
        layers.append((f" in {path}", read_config_file(path)))
    layers.append((" in overrides", parse_overrides(overrides)))
    return build(schema, layers).validate(require_controller)
