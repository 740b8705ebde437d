"""Causal (masked) convolution for the autoregressive context model."""

import torch
import torch.nn as nn

from ..errors import ParameterError


class MaskedConv2d(nn.Conv2d):
    """Convolution whose kernel is zero at the center and at all positions
    after it in raster order, so each output depends only on strictly
    earlier inputs.
    """

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int = 5):
        super().__init__(
            in_channels, out_channels, kernel_size, padding=kernel_size // 2
        )
        mask = torch.ones_like(self.weight)
        kh, kw = self.weight.shape[-2:]
        mask[..., kh // 2, kw // 2 :] = 0
        mask[..., kh // 2 + 1 :, :] = 0
        self.register_buffer("mask", mask)
        with torch.no_grad():
            self.weight.mul_(self.mask)

    def validate_mask(self):
        """Raise if the stored kernel has leaked into masked positions."""
        if (self.weight * (1 - self.mask)).abs().max() != 0:
            raise ParameterError("masked convolution kernel violates causality mask")

    def forward(self, x):
        return self._conv_forward(x, self.weight * self.mask, self.bias)
