"""Configuration dataclasses and the sectioned ``key = value`` file format.

A run is described by one :class:`RunConfig` made of five sections::

    [model]        ModelConfig
    [train]        TrainConfig
    [degradation]  DegradationSpec
    [align]        AlignConfig
    [paths]        PathsConfig

Every key can also be overridden on the command line (``--section.key value``).
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import typing
from dataclasses import dataclass, field, fields

from .errors import ConfigError

GROUPING_STRATEGIES = ("frame_rate", "contiguous", "reference_each")


@dataclass
class ModelConfig:
    num_frames: int = 7
    scale: int = 4
    channels: int = 16          # width of every unit; dense-block growth rate
    extractor_units: int = 3
    intra_units: int = 18
    inter3d_units: int = 4
    inter2d_units: int = 21
    group_channels: int = 16    # C_g, output width of the intra-group module
    fusion_channels: int = 696  # width after folding groups into channels
    attention: bool = True
    grouping: str = "frame_rate"

    def problems(self):
        out = []
        if self.num_frames < 3 or self.num_frames % 2 == 0:
            out.append(f"model.num_frames must be odd and >= 3, got {self.num_frames}")
        if self.scale not in (2, 3, 4):
            out.append(f"model.scale must be 2, 3 or 4, got {self.scale}")
        for name in ("channels", "extractor_units", "intra_units", "inter3d_units",
                     "inter2d_units", "group_channels", "fusion_channels"):
            if getattr(self, name) < 1:
                out.append(f"model.{name} must be >= 1")
        if self.grouping not in GROUPING_STRATEGIES:
            out.append(f"model.grouping must be one of {GROUPING_STRATEGIES}, got {self.grouping!r}")
        return out

    @property
    def num_groups(self):
        return self.num_frames // 2


@dataclass
class TrainConfig:
    batch_size: int = 64
    lr: float = 2e-3
    lr_decay: float = 0.1
    decay_every: int = 10
    epochs: int = 30
    beta1: float = 0.9
    beta2: float = 0.999
    weight_decay: float = 5e-4
    seed: int = 0
    patch_size: int = 64        # LR patch side; HR crop is patch_size * scale
    iters_per_epoch: int = 0    # 0 -> one pass over the training clips
    val_interval: int = 1
    augment: bool = True
    num_workers: int = 0

    def problems(self):
        out = []
        for name in ("lr", "beta1", "beta2"):
            if not getattr(self, name) > 0:
                out.append(f"train.{name} must be positive")
        if not 0 < self.lr_decay < 1:
            out.append("train.lr_decay must lie in (0, 1)")
        if self.weight_decay < 0:
            out.append("train.weight_decay must be >= 0")
        for name in ("batch_size", "decay_every", "epochs", "patch_size", "val_interval"):
            if getattr(self, name) < 1:
                out.append(f"train.{name} must be >= 1")
        if self.iters_per_epoch < 0:
            out.append("train.iters_per_epoch must be >= 0")
        return out


@dataclass
class DegradationSpec:
    sigma: float = 1.6
    scale: int = 4
    kernel_size: int = 13

    def problems(self):
        out = []
        if not self.sigma > 0:
            out.append("degradation.sigma must be positive")
        if self.scale < 1:
            out.append("degradation.scale must be >= 1")
        if self.kernel_size % 2 == 0 or self.kernel_size < 1:
            out.append("degradation.kernel_size must be a positive odd integer")
        return out


@dataclass
class AlignConfig:
    enabled: bool = False
    detector: str = "orb"
    n_features: int = 1000
    ratio: float = 0.75
    ransac_threshold: float = 3.0
    ransac_iters: int = 2000
    confidence: float = 0.995
    min_inliers: int = 20
    roundtrip_threshold: float = 0.04
    seed: int = 0

    def problems(self):
        out = []
        if self.detector not in ("orb", "sift"):
            out.append(f"align.detector must be 'orb' or 'sift', got {self.detector!r}")
        if not 0 < self.ratio < 1:
            out.append("align.ratio must lie in (0, 1)")
        if not 0 < self.confidence < 1:
            out.append("align.confidence must lie in (0, 1)")
        if self.min_inliers < 4:
            out.append("align.min_inliers must be >= 4")
        if self.ransac_iters < 1 or self.n_features < 4:
            out.append("align.ransac_iters and align.n_features must be positive")
        if self.ransac_threshold <= 0 or self.roundtrip_threshold <= 0:
            out.append("align thresholds must be positive")
        return out


@dataclass
class PathsConfig:
    train_manifest: str = ""
    val_manifest: str = ""
    checkpoint_dir: str = "checkpoints"

    def problems(self):
        return []


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    degradation: DegradationSpec = field(default_factory=DegradationSpec)
    align: AlignConfig = field(default_factory=AlignConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def problems(self):
        out = []
        for f in fields(self):
            out.extend(getattr(self, f.name).problems())
        if self.model.scale != self.degradation.scale:
            out.append("model.scale and degradation.scale must agree")
        return out

    def validate(self):
        problems = self.problems()
        if problems:
            raise ConfigError(problems)
        return self

    def keys(self):
        """All ``section.key`` names, in declaration order."""
        return [f"{s.name}.{k.name}" for s in fields(self) for k in fields(getattr(self, s.name))]

    def set(self, dotted, value):
        section, _, key = dotted.partition(".")
        sub = getattr(self, section, None)
        if sub is None or not dataclasses.is_dataclass(sub) or key not in _field_types(type(sub)):
            raise ConfigError(f"unknown config key {dotted!r}")
        setattr(sub, key, _coerce(_field_types(type(sub))[key], value, dotted))

    def dumps(self):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        for s in fields(self):
            sub = getattr(self, s.name)
            parser[s.name] = {k.name: _format(getattr(sub, k.name)) for k in fields(sub)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    @classmethod
    def loads(cls, text, base=None):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_string(text)
        cfg = base if base is not None else cls()
        problems = []
        for section in parser.sections():
            for key, value in parser[section].items():
                try:
                    cfg.set(f"{section}.{key}", value)
                except ConfigError as exc:
                    problems.extend(exc.problems)
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def load(cls, path, base=None):
        with open(path) as fh:
            return cls.loads(fh.read(), base=base)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())


def _field_types(klass):
    return typing.get_type_hints(klass)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(kind, value, name):
    if not isinstance(value, str):
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, kind):
            return value
        value = str(value)
    value = value.strip()
    try:
        if kind is bool:
            low = value.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        return kind(value)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {value!r} as {kind.__name__}") from None


def paper_preset():
    """Published hyper-parameters."""
    return RunConfig()


def desk_preset():
    """Small model and batch that train on a single CPU in minutes."""
    cfg = RunConfig()
    cfg.model = ModelConfig(channels=8, extractor_units=2, intra_units=6, inter3d_units=2,
                            inter2d_units=7, group_channels=16, fusion_channels=16)
    cfg.train = TrainConfig(batch_size=8, patch_size=32, epochs=30, iters_per_epoch=40)
    return cfg


PRESETS = {"paper": paper_preset, "desk": desk_preset}
