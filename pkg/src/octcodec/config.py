"""Model and training configuration objects."""

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigError

# Lagrange multipliers used for the published rate points.
LAMBDA_GRID = (0.0018, 0.0035, 0.0067, 0.013, 0.025, 0.0483)

# Nonlinearity choices for the transform stages. "cascaded" is the default
# (two chained two-stage multi-scale blocks); "gdn" gives the basic variant
# used in ablations; the remaining ones are the ablation baselines.
NONLINEARITIES = ("gdn", "multiscale", "multiscale-res", "twostage", "cascaded")

# Input images are replication-padded so every stride-2 stage divides evenly.
PAD_MULTIPLE = 64


def split_channels(channels: int, alpha: float) -> tuple[int, int]:
    """Split a channel budget into (high, low) counts using ratio ``alpha``.

    low = round(alpha * channels), high = the remainder; the two always sum
    to ``channels``.
    """
    low = int(round(alpha * channels))
    high = channels - low
    return high, low


@dataclass
class ModelConfig:
    """Static hyper-parameters of the codec network.

    channels: total width N of the dual-frequency trunk (192 or 320 for
        paper-parity rate points; any N >= 8 is accepted for toy runs).
    alpha: fraction of channels assigned to the low-frequency branch.
    lam: Lagrange multiplier weighting distortion against rate.
    window_size: spatial window for the gated attention blocks.
    nonlinearity: which block family replaces GDN in the transforms.
    use_attention: include the window-attention gates (disabled for the
        "basic" ablation variants).
    """

    channels: int = 192
    alpha: float = 0.5
    lam: float = 0.013
    window_size: int = 8
    nonlinearity: str = "cascaded"
    use_attention: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.channels < 8:
            raise ConfigError(f"channels must be >= 8, got {self.channels}")
        if not (0.0 < self.alpha < 1.0):
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.lam <= 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.window_size < 1:
            raise ConfigError(f"window_size must be >= 1, got {self.window_size}")
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigError(
                f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}"
            )
        high, low = split_channels(self.channels, self.alpha)
        if high < 1 or low < 1:
            raise ConfigError(
                f"channel split ({high}, {low}) leaves an empty branch; "
                f"adjust channels/alpha"
            )

    @property
    def high_channels(self) -> int:
        return split_channels(self.channels, self.alpha)[0]

    @property
    def low_channels(self) -> int:
        return split_channels(self.channels, self.alpha)[1]

    @property
    def config_id(self) -> int:
        """One-byte fingerprint stored in bitstream headers (low 8 bits of N)."""
        return self.channels & 0xFF

    @property
    def lambda_index(self) -> int:
        """Index into LAMBDA_GRID, or 255 for a custom lambda."""
        for i, lam in enumerate(LAMBDA_GRID):
            if abs(lam - self.lam) < 1e-12:
                return i
        return 255

    @property
    def alpha_pct(self) -> int:
        """Alpha as an integer numerator over 100 (header encoding)."""
        return int(round(self.alpha * 100))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


@dataclass
class TrainConfig:
    """Training protocol parameters.

    Defaults follow the full-scale protocol (256x256 patches, batch 8,
    400 epochs, lr 1e-4 dropped to 1e-5 at epoch 300). Desk-scale runs
    override channels / steps / patch size via :meth:`desk_scale`.
    """

    lam: float = 0.013
    channels: int = 192
    alpha: float = 0.5
    nonlinearity: str = "cascaded"
    use_attention: bool = True
    batch_size: int = 8
    patch_size: int = 256
    epochs: int = 400
    steps_per_epoch: int = 0  # 0 = one pass over the dataset
    lr: float = 1e-4
    lr_drop_epoch: int = 300
    lr_after_drop: float = 1e-5
    clip_grad_norm: float = 1.0
    seed: int = 0
    log_every: int = 50

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.lam <= 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.patch_size < 1:
            raise ConfigError("patch_size must be >= 1")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.lr <= 0 or self.lr_after_drop <= 0:
            raise ConfigError("learning rates must be positive")

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            channels=self.channels,
            alpha=self.alpha,
            lam=self.lam,
            nonlinearity=self.nonlinearity,
            use_attention=self.use_attention,
        )

    @classmethod
    def desk_scale(cls, **overrides) -> "TrainConfig":
        """Small configuration that trains in minutes on a CPU.

        The higher learning rate (with the same 10x drop near the end)
        compensates for the short schedule.
        """
        base = dict(
            channels=32,
            patch_size=64,
            batch_size=2,
            epochs=10,
            steps_per_epoch=200,
            lam=0.0483,
            lr=1e-3,
            lr_drop_epoch=8,
            lr_after_drop=1e-4,
            log_every=25,
        )
        base.update(overrides)
        return cls(**base)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls(**json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "TrainConfig":
        return cls.from_json(Path(path).read_text())
