"""Transforms, hyperprior shapes, padding and checkpointing."""

import numpy as np
import pytest
import torch

from octcodec import ModelConfig, latent_shapes, pad_image, crop_image
from octcodec.entropy import SIGMA_MIN
from octcodec.errors import DimensionError
from octcodec.network import (
    AnalysisTransform,
    EntropyParameters,
    HyperAnalysis,
    HyperSynthesis,
    ScreenContentCodec,
    SynthesisTransform,
    load_checkpoint,
    save_checkpoint,
)
from octcodec.layers import FeaturePair

from helpers import gradient_rel_error, random_rgb, zero_parameters

torch.manual_seed(0)


class TestShapeTable:
    def test_paper_config_shapes(self):
        cfg = ModelConfig(channels=192, alpha=0.5)
        shapes = latent_shapes((256, 256), cfg)
        assert shapes.y_high == (16, 16)
        assert shapes.y_low == (8, 8)
        assert shapes.z_high == (4, 4)
        assert shapes.z_low == (2, 2)
        assert shapes.channels_high == shapes.channels_low == 96

    def test_rectangular(self):
        cfg = ModelConfig(channels=192, alpha=0.5)
        shapes = latent_shapes((256, 512), cfg)
        assert shapes.y_high == (16, 32)
        assert shapes.y_low == (8, 16)

    def test_real_network_matches_table(self):
        cfg = ModelConfig(channels=16, alpha=0.5)
        analysis = AnalysisTransform(cfg)
        for h, w in [(64, 64), (64, 128), (192, 64)]:
            y = analysis(torch.randn(1, 3, h, w))
            shapes = latent_shapes((h, w), cfg)
            assert y.high.shape[-2:] == shapes.y_high
            assert y.low.shape[-2:] == shapes.y_low
            assert y.high.shape[1] == shapes.channels_high
            assert y.low.shape[1] == shapes.channels_low

    def test_unpadded_rejected(self):
        cfg = ModelConfig(channels=16)
        model = ScreenContentCodec(cfg)
        with pytest.raises(DimensionError):
            model(torch.rand(1, 3, 60, 64))


class TestSynthesis:
    def test_round_trip_shapes(self):
        cfg = ModelConfig(channels=16, alpha=0.5)
        analysis = AnalysisTransform(cfg)
        synthesis = SynthesisTransform(cfg)
        for h, w in [(64, 64), (128, 64)]:
            x = torch.randn(1, 3, h, w)
            y = analysis(x)
            out = synthesis(y)
            assert out.shape == x.shape

    def test_zero_latents_zero_params_zero_image(self):
        cfg = ModelConfig(channels=16, alpha=0.5)
        synthesis = zero_parameters(SynthesisTransform(cfg))
        latents = FeaturePair(torch.zeros(1, 8, 4, 4), torch.zeros(1, 8, 2, 2))
        out = synthesis(latents)
        assert torch.count_nonzero(out) == 0


class TestHyper:
    def test_analysis_quarters_resolution(self):
        hyper = HyperAnalysis(96)
        z = hyper(torch.randn(1, 96, 16, 16))
        assert z.shape == (1, 96, 4, 4)

    def test_zero_weights_zero_z(self):
        hyper = zero_parameters(HyperAnalysis(8))
        z = hyper(torch.randn(1, 8, 8, 8))
        assert torch.count_nonzero(z) == 0

    @pytest.mark.parametrize("hw", [(16, 16), (2, 2), (5, 7), (4, 12)])
    def test_synthesis_restores_latent_dims(self, hw):
        hyper_a = HyperAnalysis(8)
        hyper_s = HyperSynthesis(8)
        y = torch.randn(1, 8, *hw)
        z = hyper_a(y)
        feats = hyper_s(z, y.shape[-2:])
        assert feats.shape == (1, 16, *hw)


class TestEntropyParameters:
    def test_zero_gives_floor_scale(self):
        from octcodec.entropy import map_scale

        ep = zero_parameters(EntropyParameters(4))
        out = ep(torch.zeros(1, 16, 3, 3))
        mean, raw = out.chunk(2, dim=1)
        scale = map_scale(raw)
        assert torch.count_nonzero(mean) == 0
        assert torch.allclose(scale, torch.full_like(scale, SIGMA_MIN))

    def test_output_channels(self):
        ep = EntropyParameters(6)
        out = ep(torch.randn(1, 24, 4, 4))
        assert out.shape[1] == 12

    def test_gradient_through_fusion(self):
        ep = EntropyParameters(3).double()
        x = torch.randn(1, 12, 3, 3, dtype=torch.float64)
        assert gradient_rel_error(lambda v: ep(v).square().sum(), x) < 1e-4


class TestPadding:
    def test_pad_250(self):
        x = torch.rand(1, 3, 250, 250)
        padded, hw = pad_image(x)
        assert padded.shape[-2:] == (256, 256)
        assert hw == (250, 250)
        assert torch.equal(crop_image(padded, hw), x)

    def test_pad_identity(self):
        x = torch.rand(1, 3, 256, 256)
        padded, hw = pad_image(x)
        assert padded.shape == x.shape
        assert torch.equal(padded, x)

    def test_random_sweep(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            h = int(rng.integers(1, 200))
            w = int(rng.integers(1, 200))
            x = torch.rand(1, 3, h, w)
            padded, hw = pad_image(x)
            assert padded.shape[-2] % 64 == 0 and padded.shape[-1] % 64 == 0
            assert torch.equal(crop_image(padded, hw), x)


class TestCodecNetwork:
    def test_gradient_reaches_every_parameter(self):
        torch.manual_seed(2)
        cfg = ModelConfig(channels=16, alpha=0.5)
        model = ScreenContentCodec(cfg).double().train()
        x = torch.rand(1, 3, 64, 64, dtype=torch.float64)
        out = model(x)
        loss = (
            (out["x_hat"] - x).square().mean()
            + sum(out["bits"].values()) / out["num_pixels"]
        )
        loss.backward()
        dead = [
            name
            for name, p in model.named_parameters()
            if p.grad is None or float(p.grad.abs().max()) == 0.0
        ]
        assert dead == []

    def test_eval_deterministic(self):
        cfg = ModelConfig(channels=16)
        model = ScreenContentCodec(cfg).eval()
        x = torch.rand(1, 3, 64, 64)
        with torch.no_grad():
            a = model(x)["x_hat"]
            b = model(x)["x_hat"]
        assert torch.equal(a, b)

    def test_mirrored_inventory(self):
        cfg = ModelConfig(channels=16)
        inv = ScreenContentCodec(cfg).layer_inventory()
        assert inv["analysis"] == inv["synthesis"]

    def test_mirrored_inventory_gdn(self):
        cfg = ModelConfig(channels=16, nonlinearity="gdn", use_attention=False)
        inv = ScreenContentCodec(cfg).layer_inventory()
        assert inv["analysis"] == inv["synthesis"]

    def test_checkpoint_round_trip(self, tmp_path):
        cfg = ModelConfig(channels=16, lam=0.0035)
        model = ScreenContentCodec(cfg).eval()
        path = tmp_path / "model.pt"
        save_checkpoint(model, path)
        loaded = load_checkpoint(path)
        assert loaded.config == cfg
        for (n1, p1), (n2, p2) in zip(
            model.state_dict().items(), loaded.state_dict().items()
        ):
            assert n1 == n2
            assert torch.equal(p1, p2)
        x = torch.rand(1, 3, 64, 64)
        with torch.no_grad():
            assert torch.equal(model(x)["x_hat"], loaded(x)["x_hat"])
