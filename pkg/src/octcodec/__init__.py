"""Screen-content image codec workbench.

Dual-frequency octave transforms, multi-scale residual nonlinearities,
window-gated attention, a hyperprior plus autoregressive entropy model,
and a deterministic range coder producing real decodable bitstreams.
"""

from .config import LAMBDA_GRID, PAD_MULTIPLE, ModelConfig, TrainConfig, split_channels
from .errors import (
    BitstreamError,
    CodecError,
    ConfigError,
    DatasetError,
    DimensionError,
    EvaluationError,
    ParameterError,
    StructuralError,
)
from .network import (
    ScreenContentCodec,
    latent_shapes,
    load_checkpoint,
    pad_image,
    crop_image,
    save_checkpoint,
)

__version__ = "0.1.0"

__all__ = [
    "LAMBDA_GRID",
    "PAD_MULTIPLE",
    "ModelConfig",
    "TrainConfig",
    "split_channels",
    "CodecError",
    "ConfigError",
    "DimensionError",
    "StructuralError",
    "ParameterError",
    "BitstreamError",
    "DatasetError",
    "EvaluationError",
    "ScreenContentCodec",
    "latent_shapes",
    "load_checkpoint",
    "save_checkpoint",
    "pad_image",
    "crop_image",
    "__version__",
]
