"""Frequency-split, octave residual blocks and the merge tail."""

import numpy as np
import pytest
import torch

from octcodec import split_channels
from octcodec.errors import DimensionError, ParameterError, StructuralError
from octcodec.layers import (
    FeaturePair,
    FrequencyMerge,
    FrequencySplit,
    OctaveDownBlock,
    OctaveUpBlock,
    ResidualBlock,
)

from helpers import gradient_rel_error, scalar_probe, zero_parameters

torch.manual_seed(0)


class TestResidualBlock:
    def test_zero_params_identity(self):
        block = zero_parameters(ResidualBlock(4))
        x = torch.randn(1, 4, 8, 8)
        assert torch.equal(block(x), x)

    def test_shape_preserved(self):
        block = ResidualBlock(4)
        x = torch.randn(1, 4, 8, 8)
        assert block(x).shape == x.shape

    def test_channel_mismatch_raises(self):
        block = ResidualBlock(4)
        with pytest.raises(ParameterError):
            block(torch.randn(1, 3, 8, 8))

    def test_input_gradient_matches_finite_differences(self):
        block = ResidualBlock(1).double()
        x = torch.randn(1, 1, 6, 6, dtype=torch.float64)
        assert gradient_rel_error(scalar_probe(block), x) < 1e-4


class TestFrequencySplit:
    def test_shapes_paper_config(self):
        high, low = split_channels(192, 0.5)
        split = FrequencySplit(3, high, low)
        pair = split(torch.randn(1, 3, 256, 256))
        assert pair.high.shape == (1, 96, 128, 128)
        assert pair.low.shape == (1, 96, 64, 64)

    def test_channel_split_quarter(self):
        assert split_channels(128, 0.25) == (96, 32)

    def test_zero_kernels_zero_outputs(self):
        split = zero_parameters(FrequencySplit(3, 4, 4))
        pair = split(torch.randn(1, 3, 32, 32))
        assert torch.count_nonzero(pair.high) == 0
        assert torch.count_nonzero(pair.low) == 0
        assert pair.high.shape == (1, 4, 16, 16)
        assert pair.low.shape == (1, 4, 8, 8)

    def test_odd_dims_rejected(self):
        split = FrequencySplit(3, 4, 4)
        with pytest.raises(DimensionError):
            split(torch.randn(1, 3, 30, 32))


def _pair(c_h, c_l, h, w, dtype=torch.float32):
    return FeaturePair(
        torch.randn(1, c_h, h, w, dtype=dtype),
        torch.randn(1, c_l, h // 2, w // 2, dtype=dtype),
    )


class TestOctaveDownBlock:
    def test_halved_shapes(self):
        block = OctaveDownBlock(96, 96)
        out = block(_pair(96, 96, 64, 64))
        assert out.high.shape == (1, 96, 32, 32)
        assert out.low.shape == (1, 96, 16, 16)

    def test_zero_params_zero_output(self):
        block = zero_parameters(OctaveDownBlock(4, 4))
        out = block(_pair(4, 4, 16, 16))
        assert torch.count_nonzero(out.high) == 0
        assert torch.count_nonzero(out.low) == 0
        assert out.high.shape == (1, 4, 8, 8)
        assert out.low.shape == (1, 4, 4, 4)

    def test_invariant_violation_raises(self):
        block = OctaveDownBlock(4, 4)
        bad = FeaturePair(torch.randn(1, 4, 16, 16), torch.randn(1, 4, 6, 8))
        with pytest.raises(StructuralError):
            block(bad)

    def test_gradients_both_inputs(self):
        block = OctaveDownBlock(2, 2).double()
        base = _pair(2, 2, 8, 8, dtype=torch.float64)
        gen = torch.Generator().manual_seed(7)

        def probe_on(part):
            w_h = torch.rand(1, 2, 4, 4, generator=gen, dtype=torch.float64)
            w_l = torch.rand(1, 2, 2, 2, generator=gen, dtype=torch.float64)

            def fn(x):
                pair = (
                    FeaturePair(x, base.low) if part == "high" else FeaturePair(base.high, x)
                )
                out = block(pair)
                return (out.high * w_h).sum() + (out.low * w_l).sum()

            return fn

        assert gradient_rel_error(probe_on("high"), base.high) < 1e-4
        assert gradient_rel_error(probe_on("low"), base.low) < 1e-4


class TestOctaveUpBlock:
    def test_doubled_shapes(self):
        block = OctaveUpBlock(96, 96)
        out = block(_pair(96, 96, 16, 16))
        assert out.high.shape == (1, 96, 32, 32)
        assert out.low.shape == (1, 96, 16, 16)

    def test_zero_params_zero_output(self):
        block = zero_parameters(OctaveUpBlock(4, 4))
        out = block(_pair(4, 4, 8, 8))
        assert torch.count_nonzero(out.high) == 0
        assert torch.count_nonzero(out.low) == 0
        assert out.high.shape == (1, 4, 16, 16)
        assert out.low.shape == (1, 4, 8, 8)

    def test_down_up_composition_restores_shapes(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            c_h, c_l = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            h = int(rng.integers(2, 9)) * 4
            w = int(rng.integers(2, 9)) * 4
            down = OctaveDownBlock(c_h, c_l)
            up = OctaveUpBlock(c_h, c_l)
            x = _pair(c_h, c_l, h, w)
            out = up(down(x))
            assert out.high.shape == x.high.shape
            assert out.low.shape == x.low.shape


class TestFrequencyMerge:
    def test_shape(self):
        merge = FrequencyMerge(96, 96, 3)
        img = merge(_pair(96, 96, 128, 128))
        assert img.shape == (1, 3, 256, 256)

    def test_zero_params_zero_image(self):
        merge = zero_parameters(FrequencyMerge(4, 4, 3))
        img = merge(_pair(4, 4, 16, 16))
        assert torch.count_nonzero(img) == 0

    def test_finite_outputs_random_sweep(self):
        rng = np.random.default_rng(11)
        merge = FrequencyMerge(3, 2, 3)
        for _ in range(100):
            h = int(rng.integers(1, 9)) * 2
            w = int(rng.integers(1, 9)) * 2
            img = merge(_pair(3, 2, h, w))
            assert torch.isfinite(img).all()


class TestChannelConservation:
    @pytest.mark.parametrize("n,alpha", [(192, 0.5), (320, 0.5), (128, 0.25), (33, 0.4)])
    def test_split_sums_to_total(self, n, alpha):
        high, low = split_channels(n, alpha)
        assert high + low == n
        assert low == int(round(alpha * n))
