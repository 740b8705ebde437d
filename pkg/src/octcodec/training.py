"""Rate-distortion objective and the training loop."""

import json
import math
import time
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .config import TrainConfig
from .errors import CodecError, DimensionError
from .network import ScreenContentCodec, pad_image, save_checkpoint


def rd_loss(x, x_hat, rate_y_high, rate_y_low, rate_z_high, rate_z_low, lam):
    """lambda * 255^2 * MSE + sum of the four rates (bits per pixel).

    Pixels live in [0, 1]; the 255^2 factor calibrates the published lambda
    values to conventional loss magnitudes.
    """
    if x.shape != x_hat.shape:
        raise DimensionError(f"shape mismatch {tuple(x.shape)} vs {tuple(x_hat.shape)}")
    mse = torch.mean((x - x_hat) ** 2)
    rate = rate_y_high + rate_y_low + rate_z_high + rate_z_low
    return lam * 255.0 ** 2 * mse + rate


class RateDistortionLoss(nn.Module):
    """Wraps :func:`rd_loss` over a codec forward output dict."""

    def __init__(self, lam: float):
        super().__init__()
        self.lam = lam

    def forward(self, output: dict, target: torch.Tensor) -> dict:
        num_pixels = output["num_pixels"]
        bpp = {k: bits / num_pixels for k, bits in output["bits"].items()}
        mse = torch.mean((target - output["x_hat"]) ** 2)
        loss = rd_loss(
            target,
            output["x_hat"],
            bpp["y_high"],
            bpp["y_low"],
            bpp["z_high"],
            bpp["z_low"],
            self.lam,
        )
        total_bpp = sum(bpp.values())
        return {
            "loss": loss,
            "mse": mse,
            "bpp": total_bpp,
            "bpp_y": bpp["y_high"] + bpp["y_low"],
            "bpp_z": bpp["z_high"] + bpp["z_low"],
        }


def crop_patches(image: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random size x size crop of an HWC image."""
    h, w = image.shape[:2]
    if h < size or w < size:
        raise DimensionError(f"image {h}x{w} smaller than patch size {size}")
    top = int(rng.integers(0, h - size + 1))
    left = int(rng.integers(0, w - size + 1))
    return image[top : top + size, left : left + size]


def _to_tensor_batch(patches: list[np.ndarray]) -> torch.Tensor:
    arr = np.stack(patches).astype(np.float32) / 255.0
    return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()


class PatchSampler:
    """Draws random training batches from a list of uint8 HWC images."""

    def __init__(self, images: list[np.ndarray], patch_size: int, seed: int):
        self.patch_size = patch_size
        self.rng = np.random.default_rng(seed)
        self.images = [
            img for img in images
            if img.shape[0] >= patch_size and img.shape[1] >= patch_size
        ]
        skipped = len(images) - len(self.images)
        if skipped:
            print(f"warning: skipped {skipped} images smaller than {patch_size}px")
        if not self.images:
            raise CodecError("no images large enough for the patch size")

    def batch(self, batch_size: int) -> torch.Tensor:
        picks = self.rng.integers(0, len(self.images), size=batch_size)
        patches = [
            crop_patches(self.images[i], self.patch_size, self.rng) for i in picks
        ]
        return _to_tensor_batch(patches)


def train_step(
    batch: torch.Tensor,
    model: ScreenContentCodec,
    optimizer: torch.optim.Optimizer,
    criterion: RateDistortionLoss,
    clip_grad_norm: float = 1.0,
) -> dict:
    """One optimization step; returns detached metrics."""
    model.train()
    padded, _ = pad_image(batch)
    optimizer.zero_grad()
    out = model(padded)
    metrics = criterion(out, padded)
    loss = metrics["loss"]
    if not torch.isfinite(loss):
        raise CodecError(f"non-finite loss {loss.item()}; aborting")
    loss.backward()
    if clip_grad_norm > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), clip_grad_norm)
    optimizer.step()
    return {k: float(v.detach()) for k, v in metrics.items()}


def train_loop(
    model: ScreenContentCodec,
    images: list[np.ndarray],
    config: TrainConfig,
    run_dir,
) -> dict:
    """Run the full schedule; writes checkpoints and a JSON-lines metrics log.

    Returns a summary dict with the final checkpoint path and the first /
    last loss values.
    """
    run_dir = Path(run_dir)
    ckpt_dir = run_dir / "checkpoints"
    log_dir = run_dir / "logs"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    log_dir.mkdir(parents=True, exist_ok=True)

    torch.manual_seed(config.seed)
    sampler = PatchSampler(images, config.patch_size, config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)
    criterion = RateDistortionLoss(config.lam)

    steps_per_epoch = config.steps_per_epoch
    if steps_per_epoch <= 0:
        steps_per_epoch = max(1, len(sampler.images) // config.batch_size)

    log_path = log_dir / "metrics.jsonl"
    first_loss = None
    last_metrics: dict = {}
    step = 0
    start = time.time()
    with open(log_path, "w") as log:
        for epoch in range(config.epochs):
            lr = config.lr if epoch < config.lr_drop_epoch else config.lr_after_drop
            for group in optimizer.param_groups:
                group["lr"] = lr
            for _ in range(steps_per_epoch):
                batch = sampler.batch(config.batch_size)
                try:
                    metrics = train_step(
                        batch, model, optimizer, criterion, config.clip_grad_norm
                    )
                except CodecError:
                    dump = run_dir / "diagnostic_dump.pt"
                    torch.save({"state_dict": model.state_dict(), "step": step}, dump)
                    raise
                if first_loss is None:
                    first_loss = metrics["loss"]
                last_metrics = metrics
                step += 1
                if step % config.log_every == 0 or step == 1:
                    record = {
                        "step": step,
                        "epoch": epoch,
                        "lr": lr,
                        "elapsed_s": round(time.time() - start, 2),
                        **{k: round(v, 6) for k, v in metrics.items()},
                    }
                    log.write(json.dumps(record) + "\n")
                    log.flush()
            save_checkpoint(model, ckpt_dir / f"epoch_{epoch:04d}.pt")
    final_path = ckpt_dir / "final.pt"
    save_checkpoint(model, final_path)
    return {
        "checkpoint": str(final_path),
        "first_loss": first_loss,
        "last_loss": last_metrics.get("loss", math.nan),
        "steps": step,
        "metrics_log": str(log_path),
    }
