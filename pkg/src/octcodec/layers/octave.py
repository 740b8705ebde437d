"""Dual-frequency octave blocks.

Feature maps travel as a pair: a high-frequency tensor at full working
resolution and a low-frequency tensor at exactly half that resolution.
The residual octave blocks exchange information between the two branches
and halve (or, in the transposed variants, double) both resolutions.
"""

from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DimensionError, StructuralError
from .residual import ResidualBlock, conv, deconv


@dataclass
class FeaturePair:
    """High/low frequency feature tensors (NCHW); low is half resolution."""

    high: torch.Tensor
    low: torch.Tensor

    def validate(self) -> "FeaturePair":
        if self.high.dim() != 4 or self.low.dim() != 4:
            raise StructuralError("feature pair tensors must be 4D (NCHW)")
        if self.high.shape[0] != self.low.shape[0]:
            raise StructuralError("feature pair batch sizes differ")
        _, _, h, w = self.high.shape
        _, _, hl, wl = self.low.shape
        if (hl, wl) != (h // 2, w // 2) or h % 2 or w % 2:
            raise StructuralError(
                f"low branch must be exactly half resolution: high {h}x{w}, "
                f"low {hl}x{wl}"
            )
        return self

    @property
    def channels(self) -> tuple[int, int]:
        return self.high.shape[1], self.low.shape[1]

    def map(self, fn) -> "FeaturePair":
        return FeaturePair(fn(self.high), fn(self.low))


def _require_even(h: int, w: int, what: str):
    if h % 2 or w % 2:
        raise DimensionError(f"{what} requires even spatial dims, got {h}x{w}")


class FrequencySplit(nn.Module):
    """Entry layer: split an image into the frequency pair while downsampling.

    Output: high at 1/2 input resolution, low at 1/4. Input dims must be
    divisible by 4.
    """

    def __init__(self, in_channels: int, high_channels: int, low_channels: int):
        super().__init__()
        self.to_high = conv(in_channels, high_channels, 3, stride=2)
        self.to_low = conv(in_channels, low_channels, 3, stride=2)

    def forward(self, x) -> FeaturePair:
        h, w = x.shape[-2:]
        if h % 4 or w % 4:
            raise DimensionError(
                f"frequency split requires dims divisible by 4, got {h}x{w}"
            )
        high = self.to_high(x)
        low = self.to_low(F.avg_pool2d(x, 2))
        return FeaturePair(high, low).validate()


class OctaveDownBlock(nn.Module):
    """Residual octave block with stride-2 exit; both resolutions halve.

    Each branch first exchanges information with the other (residual block
    on its own scale plus a resampled cross-branch term), then a strided
    convolution halves the resolution and a strided skip connection
    carries the block input forward. Skip convolutions have no bias so an
    all-zero parameter set yields an all-zero output.
    """

    def __init__(self, high_channels: int, low_channels: int, stride: int = 2):
        super().__init__()
        if stride != 2:
            raise DimensionError(f"only stride 2 is supported, got {stride}")
        self.res_high = ResidualBlock(high_channels)
        self.res_low = ResidualBlock(low_channels)
        # cross-branch exchange: low -> high is upsampled, high -> low strided
        self.up_low_to_high = deconv(low_channels, high_channels, 3, stride=2)
        self.down_high_to_low = conv(high_channels, low_channels, 3, stride=2)
        # exit stage: strided reduction plus strided skip (no bias)
        self.down_high = conv(high_channels, high_channels, 3, stride=2)
        self.down_low = conv(low_channels, low_channels, 3, stride=2)
        self.skip_high = conv(high_channels, high_channels, 1, stride=2, bias=False)
        self.skip_low = conv(low_channels, low_channels, 1, stride=2, bias=False)

    def forward(self, pair: FeaturePair) -> FeaturePair:
        pair.validate()
        _require_even(*pair.low.shape[-2:], what="octave down block")
        pre_high = self.res_high(pair.high) + self.up_low_to_high(pair.low)
        pre_low = self.res_low(pair.low) + self.down_high_to_low(pair.high)
        high = self.down_high(pre_high) + self.skip_high(pair.high)
        low = self.down_low(pre_low) + self.skip_low(pair.low)
        return FeaturePair(high, low).validate()


class OctaveUpBlock(nn.Module):
    """Mirror of :class:`OctaveDownBlock`; both resolutions double.

    The strided exit convolutions and skips become transposed convolutions;
    the cross-branch exchange keeps its geometry (low to high still
    upsamples, high to low still downsamples).
    """

    def __init__(self, high_channels: int, low_channels: int, stride: int = 2):
        super().__init__()
        if stride != 2:
            raise DimensionError(f"only stride 2 is supported, got {stride}")
        self.res_high = ResidualBlock(high_channels)
        self.res_low = ResidualBlock(low_channels)
        self.up_low_to_high = deconv(low_channels, high_channels, 3, stride=2)
        self.down_high_to_low = conv(high_channels, low_channels, 3, stride=2)
        self.up_high = deconv(high_channels, high_channels, 3, stride=2)
        self.up_low = deconv(low_channels, low_channels, 3, stride=2)
        self.skip_high = deconv(high_channels, high_channels, 1, stride=2, bias=False)
        self.skip_low = deconv(low_channels, low_channels, 1, stride=2, bias=False)

    def forward(self, pair: FeaturePair) -> FeaturePair:
        pair.validate()
        pre_high = self.res_high(pair.high) + self.up_low_to_high(pair.low)
        pre_low = self.res_low(pair.low) + self.down_high_to_low(pair.high)
        high = self.up_high(pre_high) + self.skip_high(pair.high)
        low = self.up_low(pre_low) + self.skip_low(pair.low)
        return FeaturePair(high, low).validate()


class FrequencyMerge(nn.Module):
    """Decoder tail: fuse the pair and upsample back to image space.

    The low branch is upsampled to the high branch's resolution, the two are
    concatenated, and a final transposed convolution doubles the resolution
    while projecting to the output channel count.
    """

    def __init__(self, high_channels: int, low_channels: int, out_channels: int = 3):
        super().__init__()
        self.up_low = deconv(low_channels, low_channels, 3, stride=2)
        self.to_image = deconv(high_channels + low_channels, out_channels, 3, stride=2)

    def forward(self, pair: FeaturePair) -> torch.Tensor:
        pair.validate()
        fused = torch.cat([pair.high, self.up_low(pair.low)], dim=1)
        return self.to_image(fused)
