"""Factorized prior for the hyper-latents.

Each channel gets its own small monotone network modelling the cumulative
distribution; the likelihood of an integer value v is c(v + 0.5) - c(v - 0.5).
Monotonicity holds by construction: matrix weights pass through softplus and
the inner gates cannot flip the sign of the derivative.
"""

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .gaussian import P_MIN


class FactorizedModel(nn.Module):
    """Per-channel univariate cumulative model (4 monotone layers)."""

    def __init__(self, channels: int, filters: tuple[int, ...] = (3, 3, 3), init_scale: float = 10.0):
        super().__init__()
        self.channels = channels
        self.filters = tuple(int(f) for f in filters)
        dims = (1,) + self.filters + (1,)
        scale = init_scale ** (1.0 / (len(dims) - 1))
        self._matrices = nn.ParameterList()
        self._biases = nn.ParameterList()
        self._gates = nn.ParameterList()
        for k in range(len(dims) - 1):
            init = np.log(np.expm1(1.0 / scale / dims[k + 1]))
            m = torch.full((channels, dims[k + 1], dims[k]), float(init))
            self._matrices.append(nn.Parameter(m))
            b = torch.empty(channels, dims[k + 1], 1).uniform_(-0.5, 0.5)
            self._biases.append(nn.Parameter(b))
            if k < len(dims) - 2:
                self._gates.append(nn.Parameter(torch.zeros(channels, dims[k + 1], 1)))

    def _logits_cumulative(self, x: torch.Tensor) -> torch.Tensor:
        """x: (channels, 1, n) -> logits of the cumulative at x."""
        v = x
        for k, matrix in enumerate(self._matrices):
            v = torch.matmul(F.softplus(matrix), v) + self._biases[k]
            if k < len(self._gates):
                v = v + torch.tanh(self._gates[k]) * torch.tanh(v)
        return v

    def _cumulative(self, x: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self._logits_cumulative(x))

    def likelihood(self, v: torch.Tensor, p_min: float = P_MIN) -> torch.Tensor:
        """Per-element likelihoods for values ``v`` of shape (B, C, H, W)."""
        b, c, h, w = v.shape
        if c != self.channels:
            raise ValueError(f"model has {self.channels} channels, got {c}")
        flat = v.permute(1, 0, 2, 3).reshape(c, 1, -1)
        upper = self._cumulative(flat + 0.5)
        lower = self._cumulative(flat - 0.5)
        like = torch.clamp(upper - lower, min=p_min, max=1.0)
        return like.reshape(c, b, h, w).permute(1, 0, 2, 3)

    def forward(self, v: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(total bits, per-element likelihoods) for quantized values ``v``."""
        likelihood = self.likelihood(v)
        bits = -torch.log2(likelihood).sum()
        return bits, likelihood

    @torch.no_grad()
    def channel_pmf(self, low: int, high: int) -> np.ndarray:
        """(channels, high-low+1) float64 pmf over the integer alphabet."""
        levels = torch.arange(low, high + 1, dtype=torch.float64)
        grid = levels.view(1, 1, -1).expand(self.channels, 1, -1)
        params_dtype = self._matrices[0].dtype
        upper = self._cumulative((grid + 0.5).to(params_dtype)).double()
        lower = self._cumulative((grid - 0.5).to(params_dtype)).double()
        pmf = torch.clamp(upper - lower, min=P_MIN, max=1.0)
        return pmf.squeeze(1).cpu().numpy()

    @torch.no_grad()
    def support_bounds(self, tail: float = P_MIN, limit: int = 1 << 14) -> tuple[int, int]:
        """Integer range outside of which every channel has < tail mass.

        Keeps the coding alphabet aligned with the model so measured stream
        sizes track the -sum(log2 p) estimate.
        """
        dtype = self._matrices[0].dtype

        def cumulative_at(v: float) -> torch.Tensor:
            x = torch.full((self.channels, 1, 1), v, dtype=dtype)
            return self._cumulative(x).reshape(-1)

        lo, hi = -1, 1
        while (cumulative_at(lo - 0.5) > tail).any() and lo > -limit:
            lo *= 2
        while (cumulative_at(hi + 0.5) < 1.0 - tail).any() and hi < limit:
            hi *= 2
        return max(lo, -limit), min(hi, limit)
