"""Generalized divisive normalization and its inverse."""

import math

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ConfigError, ParameterError

# small pedestal keeps reparameterized values (and their gradients) alive
_PEDESTAL = 2 ** -18


class GDN(nn.Module):
    """y_i = x_i / sqrt(beta_i + sum_j gamma_ij * x_j^2).

    beta and gamma are stored through squared reparameterizations so that
    beta >= beta_min > 0 and gamma >= 0 always hold.
    """

    inverse = False

    def __init__(self, channels: int, beta_min: float = 1e-6, gamma_init: float = 0.1):
        super().__init__()
        if beta_min <= 0:
            raise ConfigError(f"beta_min must be positive, got {beta_min}")
        self.channels = channels
        self.beta_min = beta_min
        beta0 = torch.ones(channels)
        gamma0 = gamma_init * torch.eye(channels)
        self._beta_param = nn.Parameter(torch.sqrt(beta0 - beta_min))
        self._gamma_param = nn.Parameter(torch.sqrt(gamma0 + _PEDESTAL))

    @property
    def beta(self) -> torch.Tensor:
        return self._beta_param * self._beta_param + self.beta_min

    @property
    def gamma(self) -> torch.Tensor:
        return self._gamma_param * self._gamma_param

    def set_values(self, beta, gamma):
        """Load explicit beta/gamma values (inverse of the reparameterization)."""
        beta = torch.as_tensor(beta, dtype=self._beta_param.dtype).reshape(self.channels)
        gamma = torch.as_tensor(gamma, dtype=self._gamma_param.dtype).reshape(
            self.channels, self.channels
        )
        if (beta < self.beta_min).any():
            raise ParameterError(f"beta values must be >= beta_min ({self.beta_min})")
        if (gamma < 0).any():
            raise ParameterError("gamma values must be non-negative")
        with torch.no_grad():
            self._beta_param.copy_(torch.sqrt(beta - self.beta_min))
            self._gamma_param.copy_(torch.sqrt(gamma))
        return self

    def _norm(self, x):
        if x.shape[1] != self.channels:
            raise ParameterError(
                f"GDN configured for {self.channels} channels, got {x.shape[1]}"
            )
        gamma = self.gamma.view(self.channels, self.channels, 1, 1)
        return torch.sqrt(F.conv2d(x * x, gamma, self.beta))

    def forward(self, x):
        norm = self._norm(x)
        if self.inverse:
            return x * norm
        return x / norm


class IGDN(GDN):
    """Multiplicative form: y_i = x_i * sqrt(beta_i + sum_j gamma_ij * x_j^2)."""

    inverse = True


def invert_gdn(y, gdn: GDN, tol: float = 1e-9, max_iter: int = 500):
    """Exactly invert a (non-inverse) GDN by fixed-point iteration.

    Solves x = y * sqrt(beta + gamma x^2) starting from x = y. Converges for
    inputs bounded away from the division singularity.
    """
    x = y
    with torch.no_grad():
        for _ in range(max_iter):
            x_next = y * gdn._norm(x)
            delta = (x_next - x).abs().max()
            x = x_next
            if delta < tol:
                break
    return x
