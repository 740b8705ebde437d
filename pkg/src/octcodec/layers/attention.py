"""Window-based gated attention.

The gate branch works on non-overlapping spatial windows so that activations
in one window never depend on pixels in another; everything in that branch
(attention, refinement, projection) runs per window. The trunk branch is a
plain residual stack. The block output is x + trunk(x) * sigmoid(gate(x)).
"""

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import DimensionError, ParameterError
from .residual import ResidualBlock, conv


def window_partition(x: torch.Tensor, window_size: int) -> torch.Tensor:
    """(B, C, H, W) -> (B * nH * nW, window_size^2, C) non-overlapping windows.

    H and W must be divisible by window_size; pad beforehand otherwise.
    """
    b, c, h, w = x.shape
    if h % window_size or w % window_size:
        raise DimensionError(
            f"dims {h}x{w} not divisible by window size {window_size}"
        )
    nh, nw = h // window_size, w // window_size
    x = x.view(b, c, nh, window_size, nw, window_size)
    x = x.permute(0, 2, 4, 3, 5, 1).contiguous()
    return x.view(b * nh * nw, window_size * window_size, c)


def window_unpartition(
    windows: torch.Tensor, window_size: int, hw: tuple[int, int]
) -> torch.Tensor:
    """Inverse of :func:`window_partition`; exact bit-for-bit round trip."""
    h, w = hw
    if h % window_size or w % window_size:
        raise DimensionError(
            f"dims {h}x{w} not divisible by window size {window_size}"
        )
    nh, nw = h // window_size, w // window_size
    c = windows.shape[-1]
    b = windows.shape[0] // (nh * nw)
    if b * nh * nw != windows.shape[0]:
        raise DimensionError(
            f"{windows.shape[0]} windows do not tile a {h}x{w} grid"
        )
    x = windows.view(b, nh, nw, window_size, window_size, c)
    x = x.permute(0, 5, 1, 3, 2, 4).contiguous()
    return x.view(b, c, h, w)


class WindowAttention(nn.Module):
    """Single-head scaled dot-product attention within each window."""

    def __init__(self, channels: int, window_size: int = 8):
        super().__init__()
        self.channels = channels
        self.window_size = window_size
        self.scale = channels ** -0.5
        self.to_qkv = nn.Linear(channels, 3 * channels)
        self.proj = nn.Linear(channels, channels)

    def attention_weights(self, x: torch.Tensor) -> torch.Tensor:
        """Softmax attention matrices, one per window: (nWin, T, T)."""
        windows = window_partition(x, self.window_size)
        q, k, _ = self.to_qkv(windows).chunk(3, dim=-1)
        return torch.softmax(q @ k.transpose(-2, -1) * self.scale, dim=-1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        windows = window_partition(x, self.window_size)
        q, k, v = self.to_qkv(windows).chunk(3, dim=-1)
        attn = torch.softmax(q @ k.transpose(-2, -1) * self.scale, dim=-1)
        out = self.proj(attn @ v)
        return window_unpartition(out, self.window_size, (h, w))


class GatedWindowAttention(nn.Module):
    """Trunk/gate block emphasizing high-contrast regions.

    out = x + trunk(x) * sigmoid(gate(x)). The gate branch zero-pads to a
    window multiple, runs window attention followed by per-window residual
    refinement and a 1x1 projection, then crops back. Per-window refinement
    keeps the gate strictly window-local.
    """

    def __init__(self, channels: int, window_size: int = 8, trunk_depth: int = 2):
        super().__init__()
        self.channels = channels
        self.window_size = window_size
        self.trunk = nn.Sequential(*[ResidualBlock(channels) for _ in range(trunk_depth)])
        self.attn = WindowAttention(channels, window_size)
        self.refine = nn.Sequential(
            ResidualBlock(channels), ResidualBlock(channels)
        )
        self.proj = conv(channels, channels, 1)

    def _gate_logits(self, x: torch.Tensor) -> torch.Tensor:
        h, w = x.shape[-2:]
        ws = self.window_size
        pad_h = (ws - h % ws) % ws
        pad_w = (ws - w % ws) % ws
        padded = F.pad(x, (0, pad_w, 0, pad_h))
        attended = self.attn(padded)
        # fold windows into the batch so the refinement convs cannot see
        # across window borders
        hp, wp = padded.shape[-2:]
        wins = window_partition(attended, ws)
        wins = wins.transpose(1, 2).reshape(-1, self.channels, ws, ws)
        wins = self.proj(self.refine(wins))
        wins = wins.reshape(-1, self.channels, ws * ws).transpose(1, 2)
        logits = window_unpartition(wins, ws, (hp, wp))
        return logits[..., :h, :w]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[1] != self.channels:
            raise ParameterError(
                f"attention block configured for {self.channels} channels, "
                f"got {x.shape[1]}"
            )
        return x + self.trunk(x) * torch.sigmoid(self._gate_logits(x))
