"""Quantization used by the entropy models.

Training replaces rounding with additive uniform noise; evaluation uses
deterministic rounding, mean-centered when a mean is available. Rounding is
half-away-from-zero so it is sign-symmetric and platform independent.
"""

import torch

_MODES = ("noise", "round")


def round_half_away(x: torch.Tensor) -> torch.Tensor:
    """Round halves away from zero: 2.5 -> 3, -0.5 -> -1."""
    return torch.sign(x) * torch.floor(torch.abs(x) + 0.5)


def quantize(x: torch.Tensor, mode: str, mean: torch.Tensor | None = None) -> torch.Tensor:
    """Quantize ``x`` for rate estimation or coding.

    mode="noise": x + u with u ~ Uniform(-0.5, 0.5) (training surrogate).
    mode="round": round(x - mean) + mean, or plain rounding without a mean.
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    if mode == "noise":
        return x + torch.empty_like(x).uniform_(-0.5, 0.5)
    if mean is not None:
        return round_half_away(x - mean) + mean
    return round_half_away(x)
