#coding: utf-8

import copy
import dataclasses
import logging
import numbers
import typing
from typing import Dict, Optional, Tuple

import yaml

from tokenmark.core.base_types import Codebook, WatermarkParams, InvalidArgument, \
    make_var_schedule, make_rar_schedule, make_custom_schedule, VAR_SIDE_LENGTHS, SCHEDULE_KINDS, MULTI_SCALE
from tokenmark.seeding.seed_chain import SeedChain
from tokenmark.embed.logit_source import SyntheticModel
from tokenmark.channel.channel_funcs import ChannelSpec, ATTACK_NAMES, ATTACK_FLIP_PROBS, ATTACK_TARGET_TPRS, \
    PER_UNIT_FLIP, var_valley_profile
from tokenmark.radioactivity.student_model import POSITION_MODES, MAX_ORDER

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    def __init__(self, message, key=None):
        ValueError.__init__(self, "%s: %s" % (key, message) if key else message)
        self.key = key


@dataclasses.dataclass(frozen=True)
class ScheduleConfig:
    kind: str = "var"
    n_tokens: int = 680
    side_lengths: Tuple[int, ...] = VAR_SIDE_LENGTHS
    unit_sizes: Optional[Tuple[int, ...]] = None
    unit_kind: str = MULTI_SCALE


@dataclasses.dataclass(frozen=True)
class WatermarkConfig:
    gamma: float = 0.25
    delta: float = 2.0
    tau: float = 4.0
    initial_seed: int = 42
    hash: str = "fnv1a64"
    prg: str = "splitmix64"


@dataclasses.dataclass(frozen=True)
class ModelConfig:
    model_seed: int = 1
    temperature: float = 1.0
    context_sensitivity: bool = False
    top_k: Optional[int] = None


@dataclasses.dataclass(frozen=True)
class ChannelConfig:
    kind: str = "lossless"
    flip_prob: float = 0.0
    per_unit_probs: Optional[Tuple[float, ...]] = None
    replacement: str = "uniform_random"
    nearby_radius: int = 8
    burst_length: int = 8
    channel_seed: int = 0


@dataclasses.dataclass(frozen=True)
class DetectConfig:
    units: Optional[Tuple[int, ...]] = None


@dataclasses.dataclass(frozen=True)
class StudentConfig:
    order: int = 1
    smoothing: float = 0.1
    position_mode: str = "none"


@dataclasses.dataclass(frozen=True)
class TrialsConfig:
    n_clean: int = 10000
    n_watermarked: int = 1000
    n_train: int = 2000
    n_eval: int = 1000
    fpr: float = 0.01


@dataclasses.dataclass(frozen=True)
class SweepsConfig:
    deltas: Tuple[float, ...] = (0.0, 1.0, 2.0, 4.0, 6.0)
    flip_probs: Tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    attacks: Tuple[str, ...] = ATTACK_NAMES


@dataclasses.dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    ''' The effective configuration of one run. Build it with load_config(); every
        section is validated by constructing the domain objects it describes.
    '''
    master_seed: int = 0
    codebook_size: int = 4096
    schedule: ScheduleConfig = ScheduleConfig()
    watermark: WatermarkConfig = WatermarkConfig()
    model: ModelConfig = ModelConfig()
    channel: ChannelConfig = ChannelConfig()
    detect: DetectConfig = DetectConfig()
    student: StudentConfig = StudentConfig()
    trials: TrialsConfig = TrialsConfig()
    sweeps: SweepsConfig = SweepsConfig()
    attacks: Dict[str, float] = dataclasses.field(default_factory=lambda: dict(ATTACK_FLIP_PROBS))
    attack_targets: Dict[str, float] = dataclasses.field(default_factory=lambda: dict(ATTACK_TARGET_TPRS))
    output: OutputConfig = OutputConfig()

    def to_dict(self):
        return _plain(dataclasses.asdict(self))

    def replaced(self, **kw):
        return dataclasses.replace(self, **kw)

    # builders

    def build_codebook(self):
        return Codebook(self.codebook_size)

    def build_schedule(self):
        s = self.schedule
        if s.kind == "var":
            return make_var_schedule(s.side_lengths)
        if s.kind == "rar":
            return make_rar_schedule(s.n_tokens)
        if s.unit_sizes is None:
            raise ConfigError("a custom schedule needs unit_sizes", "schedule.unit_sizes")
        return make_custom_schedule(s.unit_sizes, s.unit_kind)

    def build_params(self):
        w = self.watermark
        return WatermarkParams(w.gamma, w.delta, w.tau, w.initial_seed)

    def build_chain(self):
        return SeedChain(self.watermark.hash, self.watermark.prg)

    def build_source(self):
        m = self.model
        return SyntheticModel(self.build_codebook(), m.model_seed, m.temperature, m.context_sensitivity)

    def build_channel(self, schedule=None):
        c = self.channel
        probs = c.per_unit_probs
        if c.kind == PER_UNIT_FLIP and probs is None:
            probs = tuple(var_valley_profile(schedule or self.build_schedule()))
        return ChannelSpec(c.kind, c.flip_prob, probs, c.replacement, c.channel_seed,
                           nearby_radius=c.nearby_radius, burst_length=c.burst_length)

    def validate(self):
        if self.schedule.kind not in ("var", "rar", "custom"):
            raise ConfigError("unknown schedule kind %r" % self.schedule.kind, "schedule.kind")
        checks = [
            ("codebook_size", self.build_codebook),
            ("schedule", self.build_schedule),
            ("watermark", self.build_params),
            ("watermark", self.build_chain),
            ("model", self.build_source),
            ("channel", self.build_channel),
        ]
        for key, build in checks:
            try:
                build()
            except InvalidArgument as e:
                raise ConfigError(str(e), key)
        try:
            self.build_params().green_size(self.build_codebook())
        except InvalidArgument as e:
            raise ConfigError(str(e), "watermark.gamma")
        if self.schedule.unit_kind not in SCHEDULE_KINDS:
            raise ConfigError("unknown unit kind %r" % self.schedule.unit_kind, "schedule.unit_kind")
        st = self.student
        if not 0 <= st.order <= MAX_ORDER:
            raise ConfigError("order must be in 0..%d" % MAX_ORDER, "student.order")
        if not st.smoothing > 0.0:
            raise ConfigError("smoothing must be positive", "student.smoothing")
        if st.position_mode not in POSITION_MODES:
            raise ConfigError("unknown position mode %r" % st.position_mode, "student.position_mode")
        t = self.trials
        for name in ("n_clean", "n_watermarked", "n_train", "n_eval"):
            if getattr(t, name) < 1:
                raise ConfigError("must be positive", "trials." + name)
        if not 0.0 < t.fpr < 1.0:
            raise ConfigError("must be in (0, 1)", "trials.fpr")
        if self.model.top_k is not None and self.model.top_k < 1:
            raise ConfigError("must be positive", "model.top_k")
        for name in self.sweeps.attacks:
            if name not in ATTACK_NAMES:
                raise ConfigError("unknown attack preset %r" % name, "sweeps.attacks")
        for table in ("attacks", "attack_targets"):
            for name, p in getattr(self, table).items():
                if name not in ATTACK_NAMES:
                    raise ConfigError("unknown attack preset %r" % name, table)
                if not 0.0 <= p <= 1.0:
                    raise ConfigError("must be in [0, 1]", "%s.%s" % (table, name))
        return self


def _plain(v):
    if isinstance(v, dict):
        return dict((k, _plain(x)) for k, x in v.items())
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _coerce(key, value, tp):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        return None if value is None else _coerce(key, value, args[0])
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError("expected a list, got %r" % (value,), key)
        item = typing.get_args(tp)[0]
        return tuple(_coerce("%s[%d]" % (key, i), v, item) for i, v in enumerate(value))
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError("expected a mapping, got %r" % (value,), key)
        kt, vt = typing.get_args(tp)
        return dict((_coerce(key, k, kt), _coerce("%s.%s" % (key, k), v, vt)) for k, v in value.items())
    if dataclasses.is_dataclass(tp):
        return _from_dict(tp, value, key)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError("expected true/false, got %r" % (value,), key)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, numbers.Integral):
            raise ConfigError("expected an integer, got %r" % (value,), key)
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ConfigError("expected a number, got %r" % (value,), key)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError("expected a string, got %r" % (value,), key)
        return value
    assert False, "unsupported config type %r" % tp


def _from_dict(cls, d, prefix=""):
    if not isinstance(d, dict):
        raise ConfigError("expected a mapping, got %r" % (d,), prefix or None)
    hints = typing.get_type_hints(cls)
    names = set(f.name for f in dataclasses.fields(cls))
    for k in d:
        if k not in names:
            raise ConfigError("unknown key", "%s.%s" % (prefix, k) if prefix else str(k))
    kw = {}
    for f in dataclasses.fields(cls):
        if f.name in d:
            key = "%s.%s" % (prefix, f.name) if prefix else f.name
            kw[f.name] = _coerce(key, d[f.name], hints[f.name])
    return cls(**kw)


def _merge(base, over):
    r = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(r.get(k), dict):
            r[k] = _merge(r[k], v)
        else:
            r[k] = v
    return r


def parse_override(text):
    ''' "a.b=value" -> ("a.b", value parsed as a YAML scalar). '''
    if "=" not in text:
        raise ConfigError("override %r is not of the form key=value" % text)
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError("override %r has an empty key" % text)
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError("cannot parse value: %s" % e, key)
    return key, value


def _set_dotted(d, key, value):
    parts = key.split(".")
    node = d
    for i, p in enumerate(parts[:-1]):
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = value


def config_from_dict(d, overrides=()):
    data = _merge(ExperimentConfig().to_dict(), d or {})
    for text in overrides:
        key, value = parse_override(text)
        _set_dotted(data, key, value)
    return _from_dict(ExperimentConfig, data).validate()


def load_config(path=None, overrides=()):
    ''' Defaults, then the YAML file at path (if any), then the dotted overrides. '''
    d = {}
    if path is not None:
        with open(path) as f:
            try:
                d = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError("%s: %s" % (path, e))
        if d is None:
            d = {}
        if not isinstance(d, dict):
            raise ConfigError("%s: the top level must be a mapping" % path)
    config = config_from_dict(d, overrides)
    logger.debug("effective config: %r", config)
    return config
