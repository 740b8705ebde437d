from .residual import ResidualBlock, conv, deconv
from .octave import (
    FeaturePair,
    FrequencySplit,
    OctaveDownBlock,
    OctaveUpBlock,
    FrequencyMerge,
)
from .gdn import GDN, IGDN, invert_gdn
from .msrb import (
    MultiScaleBlock,
    MultiScaleResBlock,
    TwoStageMultiScaleBlock,
    CascadedMultiScaleBlock,
)
from .attention import (
    window_partition,
    window_unpartition,
    WindowAttention,
    GatedWindowAttention,
)
from .masked import MaskedConv2d

__all__ = [
    "ResidualBlock",
    "conv",
    "deconv",
    "FeaturePair",
    "FrequencySplit",
    "OctaveDownBlock",
    "OctaveUpBlock",
    "FrequencyMerge",
    "GDN",
    "IGDN",
    "invert_gdn",
    "MultiScaleBlock",
    "MultiScaleResBlock",
    "TwoStageMultiScaleBlock",
    "CascadedMultiScaleBlock",
    "window_partition",
    "window_unpartition",
    "WindowAttention",
    "GatedWindowAttention",
    "MaskedConv2d",
]
