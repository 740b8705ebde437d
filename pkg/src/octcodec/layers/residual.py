"""Plain residual blocks and small convolution helpers."""

import torch.nn as nn

from ..errors import ParameterError


def conv(in_ch: int, out_ch: int, kernel_size: int = 3, stride: int = 1, bias: bool = True):
    return nn.Conv2d(
        in_ch, out_ch, kernel_size, stride=stride, padding=kernel_size // 2, bias=bias
    )


def deconv(in_ch: int, out_ch: int, kernel_size: int = 3, stride: int = 2, bias: bool = True):
    """Transposed convolution that exactly doubles spatial dims at stride 2."""
    return nn.ConvTranspose2d(
        in_ch,
        out_ch,
        kernel_size,
        stride=stride,
        padding=kernel_size // 2,
        output_padding=stride - 1,
        bias=bias,
    )


class ResidualBlock(nn.Module):
    """conv -> LeakyReLU -> conv with an identity shortcut.

    Shape preserving; with all parameters zero the block is the identity.
    """

    def __init__(self, channels: int, kernel_size: int = 3):
        super().__init__()
        self.conv1 = conv(channels, channels, kernel_size)
        self.conv2 = conv(channels, channels, kernel_size)
        self.act = nn.LeakyReLU(inplace=False)

    def forward(self, x):
        if x.shape[1] != self.conv1.in_channels:
            raise ParameterError(
                f"residual block expects {self.conv1.in_channels} channels, "
                f"got {x.shape[1]}"
            )
        return x + self.conv2(self.act(self.conv1(x)))
