"""Flat key/value configuration for training and inference.

Config files are plain text, one `key = value` per line, `#` comments.
Dotted keys map to underscored attributes (`rd.iterations` ->
`rd_iterations`). Lists are comma separated.
"""

from dataclasses import dataclass, field, fields, asdict


@dataclass
class TrainConfig:
    # model
    backbone: str = "tiny"
    backbone_weights: str = ""
    freeze_backbone: bool = False
    channels: int = 64
    cue_kind: str = "frequency"
    hfc_combination_enabled: bool = True
    hfc_decoupling_enabled: bool = True
    rd_enabled: bool = True
    aig_enabled: bool = True
    rd_iterations: int = 3
    rd_split_counts: list = field(default_factory=lambda: [4, 3, 2])
    rd_q_exponents: list = field(default_factory=lambda: [2, 1, 0])
    # optimization
    lr: float = 1e-4
    lr_min: float = 1e-5
    lr_period_epochs: int = 40
    epochs: int = 100
    batch_size: int = 8
    input_size: int = 704
    # augmentation
    augment_flip: bool = True
    augment_crop: bool = True
    augment_color_jitter: bool = True
    # bookkeeping
    seed: int = 0
    val_fraction: float = 0.1
    log_format: str = "csv"  # or "jsonl"

    def __post_init__(self):
        if self.input_size % 32:
            raise ValueError(f"input_size {self.input_size} must be divisible by 32")
        if not self.lr_min < self.lr:
            raise ValueError(f"lr_min {self.lr_min} must be below lr {self.lr}")

    @classmethod
    def desk_preset(cls, **overrides):
        """Small CPU-friendly setup: tiny backbone, C=8, 64px inputs."""
        base = dict(
            backbone="tiny",
            channels=8,
            input_size=64,
            batch_size=8,
            lr=1e-3,
            lr_min=1e-4,
            lr_period_epochs=40,
            epochs=10,
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'key = value'")
                key, val = (part.strip() for part in line.split("=", 1))
                values[key.replace(".", "_")] = _parse_value(val)
        return cls.from_dict(values)


def _parse_value(text):
    if "," in text:
        return [_parse_scalar(part.strip()) for part in text.split(",") if part.strip()]
    return _parse_scalar(text)


def _parse_scalar(text):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text
