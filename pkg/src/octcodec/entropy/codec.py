"""Latent transport: causal quantization and the four coded substreams.

The main latents are coded element by element in raster order. Encoder and
decoder both recompute the entropy parameters per position with the same
windowed masked convolution over already-reconstructed values, so the two
sides stay bit-exact. Hyper-latents use the factorized model with one CDF
per channel.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import BitstreamError, StructuralError
from .bitstream import StreamHeader, pack_container, pack_payload, unpack_container, unpack_payload
from .gaussian import P_MIN, SIGMA_MIN, gaussian_cdf, map_scale
from .quantize import round_half_away
from .rangecoder import RangeDecoder, RangeEncoder, quantize_cdf


@dataclass
class BranchCoder:
    """Everything needed to code one frequency branch."""

    factorized: nn.Module
    hyper_features: Callable[[torch.Tensor], torch.Tensor]
    context: nn.Module
    entropy_parameters: nn.Module


@dataclass
class LatentBundle:
    """Quantized integer latents plus the entropy parameters of the y tensors.

    y tensors hold mean-centered integer symbols; the dequantized latent is
    symbol + mean. z tensors hold plainly rounded integers.
    """

    y_high: torch.Tensor
    y_low: torch.Tensor
    z_high: torch.Tensor
    z_low: torch.Tensor
    y_high_mean: torch.Tensor
    y_high_scale: torch.Tensor
    y_low_mean: torch.Tensor
    y_low_scale: torch.Tensor

    def validate(self) -> "LatentBundle":
        for name in ("y_high", "y_low", "z_high", "z_low"):
            t = getattr(self, name)
            if not t.dtype.is_floating_point:
                continue
            if torch.any(t != torch.round(t)):
                raise StructuralError(f"{name} contains non-integer values")
        for name in ("y_high_scale", "y_low_scale"):
            if torch.any(getattr(self, name) < SIGMA_MIN - 1e-6):
                raise StructuralError(f"{name} fell below the scale floor")
        return self

    def dequantized_y(self) -> tuple[torch.Tensor, torch.Tensor]:
        high = self.y_high.to(self.y_high_mean.dtype) + self.y_high_mean
        low = self.y_low.to(self.y_low_mean.dtype) + self.y_low_mean
        return high, low


def _entropy_params(entropy_parameters, hyper_feats, ctx):
    raw = entropy_parameters(torch.cat([hyper_feats, ctx], dim=1))
    mean, raw_scale = raw.chunk(2, dim=1)
    return mean, map_scale(raw_scale)


def _gaussian_channel_cdfs(scales: torch.Tensor, low: int, high: int) -> list[np.ndarray]:
    """One quantized CDF per channel for centered symbols in [low, high]."""
    levels = torch.arange(low, high + 1, dtype=torch.float64)
    s = scales.detach().double().reshape(-1, 1)
    upper = gaussian_cdf((levels + 0.5) / s)
    lower = gaussian_cdf((levels - 0.5) / s)
    pmf = torch.clamp(upper - lower, min=P_MIN, max=1.0).numpy()
    return [quantize_cdf(row) for row in pmf]


def autoregressive_scan(
    hyper_feats: torch.Tensor,
    context: nn.Module,
    entropy_parameters: nn.Module,
    symbol_fn,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """Raster-order scan shared by quantization, encoding and decoding.

    ``symbol_fn(i, j, mean, scale) -> integer symbols (B, C)`` supplies the
    symbol for each position; the reconstruction symbol + mean is written
    into the context buffer before moving on. Returns (symbols, y_hat,
    means, scales).
    """
    b, two_c, h, w = hyper_feats.shape
    c = two_c // 2
    kernel = context.weight * context.mask
    k = kernel.shape[-1]
    pad = k // 2
    dtype = hyper_feats.dtype
    buf = torch.zeros(b, c, h + 2 * pad, w + 2 * pad, dtype=dtype)
    symbols = torch.zeros(b, c, h, w, dtype=torch.int64)
    means = torch.zeros(b, c, h, w, dtype=dtype)
    scales = torch.zeros(b, c, h, w, dtype=dtype)
    for i in range(h):
        for j in range(w):
            window = buf[:, :, i : i + k, j : j + k]
            ctx = F.conv2d(window, kernel, context.bias)
            mean, scale = _entropy_params(
                entropy_parameters, hyper_feats[:, :, i : i + 1, j : j + 1], ctx
            )
            mean = mean[:, :, 0, 0]
            scale = scale[:, :, 0, 0]
            s = symbol_fn(i, j, mean, scale)
            buf[:, :, i + pad, j + pad] = s.to(dtype) + mean
            symbols[:, :, i, j] = s
            means[:, :, i, j] = mean
            scales[:, :, i, j] = scale
    y_hat = buf[:, :, pad : pad + h, pad : pad + w]
    return symbols, y_hat, means, scales


def causal_quantize(
    y: torch.Tensor, hyper_feats: torch.Tensor, context, entropy_parameters
):
    """Quantize y exactly as the serial decoder will reconstruct it.

    Returns (symbols, y_hat, means, scales) where y_hat = symbols + means.
    """

    def symbol_fn(i, j, mean, scale):
        return round_half_away(y[:, :, i, j] - mean).to(torch.int64)

    return autoregressive_scan(hyper_feats, context, entropy_parameters, symbol_fn)


def _symbol_reach(scales: torch.Tensor) -> int:
    """Alphabet half-width covering ~4 sigma of the widest Gaussian."""
    return int(4.0 * float(scales.max()) + 1.0)


def _encode_y(symbols, scales, hyper_feats, context, entropy_parameters) -> bytes:
    if symbols.shape[0] != 1:
        raise BitstreamError("coding expects a single image (batch 1)")
    # cover both the observed symbols and the model's effective support so
    # the coded length stays close to the likelihood-based estimate
    reach = _symbol_reach(scales)
    smin = min(int(symbols.min()), -reach)
    smax = max(int(symbols.max()), reach)
    enc = RangeEncoder()

    def symbol_fn(i, j, mean, scale):
        s = symbols[:, :, i, j]
        cdfs = _gaussian_channel_cdfs(scale[0], smin, smax)
        for c, cdf in enumerate(cdfs):
            enc.encode(int(s[0, c]) - smin, cdf)
        return s

    autoregressive_scan(hyper_feats, context, entropy_parameters, symbol_fn)
    return pack_payload((smin, smax), enc.finish())


def _decode_y(payload: bytes, hyper_feats, context, entropy_parameters):
    (smin, smax), coded = unpack_payload(payload)
    dec = RangeDecoder(coded)

    def symbol_fn(i, j, mean, scale):
        out = torch.zeros(1, scale.shape[1], dtype=torch.int64)
        cdfs = _gaussian_channel_cdfs(scale[0], smin, smax)
        for c, cdf in enumerate(cdfs):
            out[0, c] = dec.decode(cdf) + smin
        return out

    return autoregressive_scan(hyper_feats, context, entropy_parameters, symbol_fn)


def _encode_z(symbols: torch.Tensor, factorized) -> bytes:
    if symbols.shape[0] != 1:
        raise BitstreamError("coding expects a single image (batch 1)")
    support_lo, support_hi = factorized.support_bounds()
    smin = min(int(symbols.min()), support_lo)
    smax = max(int(symbols.max()), support_hi)
    pmf = factorized.channel_pmf(smin, smax)
    cdfs = [quantize_cdf(row) for row in pmf]
    enc = RangeEncoder()
    flat = symbols[0].reshape(symbols.shape[1], -1)
    for c in range(flat.shape[0]):
        cdf = cdfs[c]
        for v in flat[c].tolist():
            enc.encode(int(v) - smin, cdf)
    return pack_payload((smin, smax), enc.finish())


def _decode_z(payload: bytes, factorized, channels: int, hw: tuple[int, int]):
    (smin, smax), coded = unpack_payload(payload)
    pmf = factorized.channel_pmf(smin, smax)
    cdfs = [quantize_cdf(row) for row in pmf]
    dec = RangeDecoder(coded)
    h, w = hw
    out = torch.zeros(1, channels, h, w, dtype=torch.int64)
    flat = out[0].reshape(channels, -1)
    for c in range(channels):
        cdf = cdfs[c]
        for idx in range(h * w):
            flat[c, idx] = dec.decode(cdf) + smin
    return out


@dataclass
class LatentShapes:
    """Spatial dims (h, w) and channel counts the decoder must assume."""

    y_high: tuple[int, int]
    y_low: tuple[int, int]
    z_high: tuple[int, int]
    z_low: tuple[int, int]
    channels_high: int
    channels_low: int


def encode_latents(
    bundle: LatentBundle,
    header: StreamHeader,
    coder_high: BranchCoder,
    coder_low: BranchCoder,
) -> bytes:
    """Serialize a quantized bundle into the four-substream container."""
    bundle.validate()
    payloads = [
        _encode_z(bundle.z_high, coder_high.factorized),
        _encode_z(bundle.z_low, coder_low.factorized),
    ]
    for symbols, scales, z, coder in (
        (bundle.y_high, bundle.y_high_scale, bundle.z_high, coder_high),
        (bundle.y_low, bundle.y_low_scale, bundle.z_low, coder_low),
    ):
        feats = coder.hyper_features(z.to(bundle.y_high_mean.dtype))
        payloads.append(
            _encode_y(symbols, scales, feats, coder.context, coder.entropy_parameters)
        )
    return pack_container(header, payloads)


def decode_latents(
    data: bytes,
    coder_high: BranchCoder,
    coder_low: BranchCoder,
    shapes: LatentShapes,
) -> tuple[StreamHeader, LatentBundle]:
    """Parse a container and reconstruct the quantized bundle bit-exactly."""
    header, payloads = unpack_container(data)
    z_high = _decode_z(
        payloads[0], coder_high.factorized, shapes.channels_high, shapes.z_high
    )
    z_low = _decode_z(
        payloads[1], coder_low.factorized, shapes.channels_low, shapes.z_low
    )
    dtype = next(coder_high.context.parameters()).dtype
    feats_high = coder_high.hyper_features(z_high.to(dtype))
    feats_low = coder_low.hyper_features(z_low.to(dtype))
    y_high, _, mean_h, scale_h = _decode_y(
        payloads[2], feats_high, coder_high.context, coder_high.entropy_parameters
    )
    y_low, _, mean_l, scale_l = _decode_y(
        payloads[3], feats_low, coder_low.context, coder_low.entropy_parameters
    )
    bundle = LatentBundle(
        y_high=y_high,
        y_low=y_low,
        z_high=z_high,
        z_low=z_low,
        y_high_mean=mean_h,
        y_high_scale=scale_h,
        y_low_mean=mean_l,
        y_low_scale=scale_l,
    )
    return header, bundle.validate()
