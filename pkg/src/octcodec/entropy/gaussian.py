"""Conditional Gaussian likelihoods for the main latents."""

import math

import torch

# Scale floor and probability floor used everywhere a Gaussian is evaluated.
SIGMA_MIN = 0.11
P_MIN = 2.0 ** -16

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def map_scale(raw: torch.Tensor, sigma_min: float = SIGMA_MIN) -> torch.Tensor:
    """Map an unconstrained tensor to scales with an exact floor.

    sqrt(sigma_min^2 + raw^2): smooth everywhere, grows like |raw|, and a
    zero input gives exactly sigma_min.
    """
    return torch.sqrt(raw * raw + sigma_min * sigma_min)


def gaussian_cdf(x: torch.Tensor) -> torch.Tensor:
    return 0.5 * (1.0 + torch.erf(x * _INV_SQRT2))


def gaussian_likelihood(
    v: torch.Tensor,
    mean: torch.Tensor,
    scale: torch.Tensor,
    p_min: float = P_MIN,
) -> torch.Tensor:
    """P(quantized value = v) for a Gaussian convolved with a unit box.

    likelihood = Phi((v - mean + 0.5)/scale) - Phi((v - mean - 0.5)/scale),
    clamped to [p_min, 1]. Evaluated on |v - mean| via erfc so both CDF
    terms stay in the numerically precise tail and the Gaussian symmetry
    likelihood(mean + d) == likelihood(mean - d) is exact.
    """
    centered = torch.abs(v - mean)
    upper = 0.5 * torch.erfc((centered - 0.5) / scale * _INV_SQRT2)
    lower = 0.5 * torch.erfc((centered + 0.5) / scale * _INV_SQRT2)
    return torch.clamp(upper - lower, min=p_min, max=1.0)


def gaussian_rate(
    v: torch.Tensor, mean: torch.Tensor, scale: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """(total bits, per-element likelihoods) for quantized values ``v``."""
    likelihood = gaussian_likelihood(v, mean, scale)
    bits = -torch.log2(likelihood).sum()
    return bits, likelihood
