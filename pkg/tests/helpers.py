"""Shared test oracles: finite differences, entropy formulas, data makers."""

import math

import numpy as np
import torch


def finite_difference_gradient(fn, x: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Central finite differences of a scalar function at x (double precision)."""
    x = x.detach().clone()
    grad = torch.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        f_plus = fn(x).item()
        flat[i] = orig - eps
        f_minus = fn(x).item()
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2.0 * eps)
    return grad


def analytic_gradient(fn, x: torch.Tensor) -> torch.Tensor:
    x = x.detach().clone().requires_grad_(True)
    fn(x).backward()
    return x.grad.detach()


def gradient_rel_error(fn, x: torch.Tensor, eps: float = 1e-5) -> float:
    """Relative error between analytic and finite-difference input gradients."""
    fd = finite_difference_gradient(fn, x, eps)
    an = analytic_gradient(fn, x)
    denom = max(an.norm().item(), fd.norm().item(), 1e-12)
    return (an - fd).norm().item() / denom


def scalar_probe(module, weights=None):
    """Wrap a module into a scalar function via a fixed random projection."""
    cache = {}

    def fn(x):
        out = module(x)
        if "w" not in cache:
            gen = torch.Generator().manual_seed(12345)
            cache["w"] = torch.rand(out.shape, generator=gen, dtype=out.dtype)
        return (out * cache["w"]).sum()

    return fn


def source_entropy_bits(probs) -> float:
    """Shannon entropy in bits per symbol."""
    return -sum(p * math.log2(p) for p in probs if p > 0)


def zero_parameters(module: torch.nn.Module) -> torch.nn.Module:
    with torch.no_grad():
        for p in module.parameters():
            p.zero_()
    return module


def random_rgb(rng: np.random.Generator, h: int, w: int) -> torch.Tensor:
    """Random image tensor in [0, 1], shape (1, 3, h, w)."""
    arr = rng.random((1, 3, h, w), dtype=np.float64).astype(np.float32)
    return torch.from_numpy(arr)
