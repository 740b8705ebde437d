"""Multi-scale residual nonlinearities.

All blocks preserve tensor shape and reduce to the identity when every
parameter is zero (the fusion output vanishes and only the input shortcut
survives).
"""

import torch
import torch.nn as nn

from ..errors import ParameterError
from .residual import ResidualBlock, conv


def _check_channels(x, channels, name):
    if x.shape[1] != channels:
        raise ParameterError(f"{name} configured for {channels} channels, got {x.shape[1]}")


class MultiScaleBlock(nn.Module):
    """Single-stage baseline: parallel 3x3 and 5x5 branches, 1x1 fusion."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.branch3 = conv(channels, channels, 3)
        self.branch5 = conv(channels, channels, 5)
        self.fuse = conv(2 * channels, channels, 1)
        self.act = nn.ReLU(inplace=False)

    def forward(self, x):
        _check_channels(x, self.channels, "multi-scale block")
        b3 = self.act(self.branch3(x))
        b5 = self.act(self.branch5(x))
        return x + self.fuse(torch.cat([b3, b5], dim=1))


class MultiScaleResBlock(nn.Module):
    """Single-stage variant with residual blocks in place of plain convs."""

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.branch3 = ResidualBlock(channels, 3)
        self.branch5 = ResidualBlock(channels, 5)
        self.fuse = conv(2 * channels, channels, 1)

    def forward(self, x):
        _check_channels(x, self.channels, "multi-scale residual block")
        return x + self.fuse(torch.cat([self.branch3(x), self.branch5(x)], dim=1))


class TwoStageMultiScaleBlock(nn.Module):
    """Two interaction stages between a 3x3 and a 5x5 branch.

    Stage 1 extracts per-kernel features and concatenates them; stage 2
    refines the concatenated features with one residual block per branch;
    the second concatenation is fused by a 1x1 convolution and added to the
    input.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.channels = channels
        self.branch3 = conv(channels, channels, 3)
        self.branch5 = conv(channels, channels, 5)
        self.refine3 = ResidualBlock(2 * channels, 3)
        self.refine5 = ResidualBlock(2 * channels, 5)
        self.fuse = conv(4 * channels, channels, 1)
        self.act = nn.LeakyReLU(inplace=False)

    def forward(self, x):
        _check_channels(x, self.channels, "two-stage multi-scale block")
        stage1 = torch.cat([self.act(self.branch3(x)), self.act(self.branch5(x))], dim=1)
        stage2 = torch.cat([self.refine3(stage1), self.refine5(stage1)], dim=1)
        return x + self.fuse(stage2)


class CascadedMultiScaleBlock(nn.Module):
    """Two chained two-stage blocks; each keeps its own internal shortcut."""

    def __init__(self, channels: int):
        super().__init__()
        self.first = TwoStageMultiScaleBlock(channels)
        self.second = TwoStageMultiScaleBlock(channels)

    def forward(self, x):
        return self.second(self.first(x))
