"""Full codec network: transforms, hyperprior and the coding entry points."""

import math
from functools import partial

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import PAD_MULTIPLE, ModelConfig
from .errors import BitstreamError, ConfigError, DimensionError
from .layers import (
    GDN,
    IGDN,
    CascadedMultiScaleBlock,
    FeaturePair,
    FrequencyMerge,
    FrequencySplit,
    GatedWindowAttention,
    MaskedConv2d,
    MultiScaleBlock,
    MultiScaleResBlock,
    OctaveDownBlock,
    OctaveUpBlock,
    TwoStageMultiScaleBlock,
    conv,
    deconv,
)
from .entropy import (
    BranchCoder,
    FactorizedModel,
    LatentBundle,
    LatentShapes,
    StreamHeader,
    causal_quantize,
    decode_latents,
    encode_latents,
    gaussian_likelihood,
    map_scale,
    quantize,
)

LAYOUT_VERSION = 1
NUM_STAGES = 3


def pad_image(x: torch.Tensor, multiple: int = PAD_MULTIPLE):
    """Replication-pad right/bottom to the next multiple; returns (padded, (h, w))."""
    h, w = x.shape[-2:]
    pad_h = (multiple - h % multiple) % multiple
    pad_w = (multiple - w % multiple) % multiple
    if pad_h == 0 and pad_w == 0:
        return x, (h, w)
    return F.pad(x, (0, pad_w, 0, pad_h), mode="replicate"), (h, w)


def crop_image(x: torch.Tensor, hw: tuple[int, int]) -> torch.Tensor:
    h, w = hw
    return x[..., :h, :w]


def _ceil_half(n: int) -> int:
    return (n + 1) // 2


def latent_shapes(padded_hw: tuple[int, int], config: ModelConfig) -> LatentShapes:
    """Closed-form shape table for the latents of a padded input."""
    h, w = padded_hw
    if h % PAD_MULTIPLE or w % PAD_MULTIPLE:
        raise DimensionError(
            f"padded dims must be multiples of {PAD_MULTIPLE}, got {h}x{w}"
        )
    y_high = (h // 16, w // 16)
    y_low = (h // 32, w // 32)
    z_high = tuple(_ceil_half(_ceil_half(d)) for d in y_high)
    z_low = tuple(_ceil_half(_ceil_half(d)) for d in y_low)
    return LatentShapes(
        y_high=y_high,
        y_low=y_low,
        z_high=z_high,
        z_low=z_low,
        channels_high=config.high_channels,
        channels_low=config.low_channels,
    )


def _make_nonlinearity(kind: str, channels: int, inverse: bool) -> nn.Module:
    if kind == "gdn":
        return IGDN(channels) if inverse else GDN(channels)
    if kind == "multiscale":
        return MultiScaleBlock(channels)
    if kind == "multiscale-res":
        return MultiScaleResBlock(channels)
    if kind == "twostage":
        return TwoStageMultiScaleBlock(channels)
    if kind == "cascaded":
        return CascadedMultiScaleBlock(channels)
    raise ConfigError(f"unknown nonlinearity {kind!r}")


class _StagePair(nn.Module):
    """Per-branch nonlinearity plus optional attention on a feature pair."""

    def __init__(self, c_high, c_low, kind, inverse, attention, window_size):
        super().__init__()
        self.nl_high = _make_nonlinearity(kind, c_high, inverse)
        self.nl_low = _make_nonlinearity(kind, c_low, inverse)
        if attention:
            self.attn_high = GatedWindowAttention(c_high, window_size)
            self.attn_low = GatedWindowAttention(c_low, window_size)
        else:
            self.attn_high = None
            self.attn_low = None

    def forward(self, pair: FeaturePair) -> FeaturePair:
        high = self.nl_high(pair.high)
        low = self.nl_low(pair.low)
        if self.attn_high is not None:
            high = self.attn_high(high)
            low = self.attn_low(low)
        return FeaturePair(high, low)


class AnalysisTransform(nn.Module):
    """Image -> latent pair: entry split, three octave stages, latent heads.

    Attention gates sit after stage 2 and after the final stage on both
    branches.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        c_h, c_l = config.high_channels, config.low_channels
        self.split = FrequencySplit(3, c_h, c_l)
        self.octaves = nn.ModuleList(
            OctaveDownBlock(c_h, c_l) for _ in range(NUM_STAGES)
        )
        self.stages = nn.ModuleList(
            _StagePair(
                c_h,
                c_l,
                config.nonlinearity,
                inverse=False,
                attention=config.use_attention and s >= 1,
                window_size=config.window_size,
            )
            for s in range(NUM_STAGES)
        )
        self.head_high = conv(c_h, c_h, 3)
        self.head_low = conv(c_l, c_l, 3)

    def forward(self, x: torch.Tensor) -> FeaturePair:
        pair = self.split(x)
        for octave, stage in zip(self.octaves, self.stages):
            pair = stage(octave(pair))
        return FeaturePair(self.head_high(pair.high), self.head_low(pair.low))


class SynthesisTransform(nn.Module):
    """Latent pair -> image; mirror built from transposed octave blocks."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        c_h, c_l = config.high_channels, config.low_channels
        self.head_high = conv(c_h, c_h, 3)
        self.head_low = conv(c_l, c_l, 3)
        self.stages = nn.ModuleList(
            _StagePair(
                c_h,
                c_l,
                config.nonlinearity,
                inverse=True,
                attention=config.use_attention and s >= 1,
                window_size=config.window_size,
            )
            for s in range(NUM_STAGES)
        )
        self.octaves = nn.ModuleList(
            OctaveUpBlock(c_h, c_l) for _ in range(NUM_STAGES)
        )
        self.merge = FrequencyMerge(c_h, c_l, 3)

    def forward(self, latents: FeaturePair) -> torch.Tensor:
        pair = FeaturePair(self.head_high(latents.high), self.head_low(latents.low))
        for stage, octave in zip(self.stages, self.octaves):
            pair = octave(pair)
            pair = stage(pair)
        return self.merge(pair)


class HyperAnalysis(nn.Module):
    """Per-branch hyper encoder: 5x5 stride-1 then two 5x5 stride-2 convs."""

    def __init__(self, channels: int):
        super().__init__()
        self.net = nn.Sequential(
            conv(channels, channels, 5, stride=1),
            nn.LeakyReLU(inplace=False),
            conv(channels, channels, 5, stride=2),
            nn.LeakyReLU(inplace=False),
            conv(channels, channels, 5, stride=2),
        )

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        return self.net(y)


class HyperSynthesis(nn.Module):
    """Per-branch hyper decoder producing 2x latent-channel features.

    Output is cropped to the requested latent size (the transposed stack
    can overshoot when the latent dims are not multiples of 4).
    """

    def __init__(self, channels: int):
        super().__init__()
        mid = channels * 3 // 2
        self.up1 = deconv(channels, channels, 5, stride=2)
        self.up2 = deconv(channels, mid, 5, stride=2)
        self.out = conv(mid, channels * 2, 5, stride=1)
        self.act = nn.LeakyReLU(inplace=False)

    def forward(self, z: torch.Tensor, output_size: tuple[int, int]) -> torch.Tensor:
        v = self.act(self.up1(z))
        v = self.act(self.up2(v))
        v = self.out(v)
        return v[..., : output_size[0], : output_size[1]]


class EntropyParameters(nn.Module):
    """Fuse hyper and context features into per-element (mean, raw scale)."""

    def __init__(self, channels: int):
        super().__init__()
        self.net = nn.Sequential(
            conv(channels * 4, channels * 10 // 3, 1),
            nn.LeakyReLU(inplace=False),
            conv(channels * 10 // 3, channels * 8 // 3, 1),
            nn.LeakyReLU(inplace=False),
            conv(channels * 8 // 3, channels * 2, 1),
        )

    def forward(self, fused: torch.Tensor) -> torch.Tensor:
        return self.net(fused)


class _Branch(nn.Module):
    """Hyperprior, context model and entropy parameters for one branch."""

    def __init__(self, channels: int):
        super().__init__()
        self.hyper_analysis = HyperAnalysis(channels)
        self.hyper_synthesis = HyperSynthesis(channels)
        self.context = MaskedConv2d(channels, channels * 2, 5)
        self.entropy_parameters = EntropyParameters(channels)
        self.factorized = FactorizedModel(channels)

    def coder(self, y_hw: tuple[int, int]) -> BranchCoder:
        return BranchCoder(
            factorized=self.factorized,
            hyper_features=partial(self.hyper_synthesis, output_size=y_hw),
            context=self.context,
            entropy_parameters=self.entropy_parameters,
        )


class ScreenContentCodec(nn.Module):
    """End-to-end codec over the dual-frequency latent space.

    Training mode uses additive-noise quantization and a vectorized context
    pass; eval mode quantizes serially in raster order, which is exactly
    what the bitstream decoder does, so eval reconstructions match decoded
    ones bit for bit.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.analysis = AnalysisTransform(config)
        self.synthesis = SynthesisTransform(config)
        self.branch_high = _Branch(config.high_channels)
        self.branch_low = _Branch(config.low_channels)
        self._init_weights()

    def _init_weights(self):
        # torch's default conv init keeps untrained latents in a small range,
        # which the 16-bit coding alphabets rely on; only the causal mask
        # needs re-applying after any init.
        for m in self.modules():
            if isinstance(m, MaskedConv2d):
                with torch.no_grad():
                    m.weight.mul_(m.mask)

    def _check_padded(self, x):
        h, w = x.shape[-2:]
        if h % PAD_MULTIPLE or w % PAD_MULTIPLE:
            raise DimensionError(
                f"input must be padded to a multiple of {PAD_MULTIPLE}; "
                f"got {h}x{w} (use pad_image)"
            )

    def _branch_forward_train(self, branch: _Branch, y: torch.Tensor):
        z = branch.hyper_analysis(y)
        z_hat = quantize(z, "noise")
        feats = branch.hyper_synthesis(z_hat, y.shape[-2:])
        y_hat = quantize(y, "noise")
        ctx = branch.context(y_hat)
        raw = branch.entropy_parameters(torch.cat([feats, ctx], dim=1))
        mean, raw_scale = raw.chunk(2, dim=1)
        scale = map_scale(raw_scale)
        y_like = gaussian_likelihood(y_hat, mean, scale)
        z_like = branch.factorized.likelihood(z_hat)
        return y_hat, y_like, z_like

    def _branch_forward_eval(self, branch: _Branch, y: torch.Tensor):
        z = branch.hyper_analysis(y)
        z_sym = quantize(z, "round")
        feats = branch.hyper_synthesis(z_sym, y.shape[-2:])
        symbols, y_hat, means, scales = causal_quantize(
            y, feats, branch.context, branch.entropy_parameters
        )
        y_like = gaussian_likelihood(y_hat, means, scales)
        z_like = branch.factorized.likelihood(z_sym)
        return y_hat, y_like, z_like, symbols, z_sym.to(torch.int64), means, scales

    def forward(self, x: torch.Tensor) -> dict:
        self._check_padded(x)
        latents = self.analysis(x)
        if self.training:
            yh_hat, yh_like, zh_like = self._branch_forward_train(
                self.branch_high, latents.high
            )
            yl_hat, yl_like, zl_like = self._branch_forward_train(
                self.branch_low, latents.low
            )
        else:
            with torch.no_grad():
                yh_hat, yh_like, zh_like, *_ = self._branch_forward_eval(
                    self.branch_high, latents.high
                )
                yl_hat, yl_like, zl_like, *_ = self._branch_forward_eval(
                    self.branch_low, latents.low
                )
        x_hat = self.synthesis(FeaturePair(yh_hat, yl_hat))
        likelihoods = {
            "y_high": yh_like,
            "y_low": yl_like,
            "z_high": zh_like,
            "z_low": zl_like,
        }
        bits = {k: -torch.log2(v).sum() for k, v in likelihoods.items()}
        num_pixels = x.shape[0] * x.shape[-2] * x.shape[-1]
        return {
            "x_hat": x_hat,
            "likelihoods": likelihoods,
            "bits": bits,
            "num_pixels": num_pixels,
        }

    def stream_header(self, original_hw: tuple[int, int]) -> StreamHeader:
        return StreamHeader(
            config_id=self.config.config_id,
            lambda_index=self.config.lambda_index,
            alpha_pct=self.config.alpha_pct,
            width=original_hw[1],
            height=original_hw[0],
        )

    def check_header(self, header: StreamHeader):
        if header.config_id != self.config.config_id:
            raise BitstreamError(
                f"stream config id {header.config_id} does not match "
                f"checkpoint config id {self.config.config_id}"
            )
        if header.alpha_pct != self.config.alpha_pct:
            raise BitstreamError(
                f"stream alpha {header.alpha_pct}/100 does not match "
                f"checkpoint alpha {self.config.alpha_pct}/100"
            )

    @torch.no_grad()
    def quantize_latents(self, x_padded: torch.Tensor):
        """Eval-mode latent quantization; returns (bundle, estimated bits)."""
        self._check_padded(x_padded)
        was_training = self.training
        self.eval()
        try:
            latents = self.analysis(x_padded)
            yh_hat, yh_like, zh_like, sym_h, zh_sym, mean_h, scale_h = (
                self._branch_forward_eval(self.branch_high, latents.high)
            )
            yl_hat, yl_like, zl_like, sym_l, zl_sym, mean_l, scale_l = (
                self._branch_forward_eval(self.branch_low, latents.low)
            )
        finally:
            self.train(was_training)
        bundle = LatentBundle(
            y_high=sym_h,
            y_low=sym_l,
            z_high=zh_sym,
            z_low=zl_sym,
            y_high_mean=mean_h,
            y_high_scale=scale_h,
            y_low_mean=mean_l,
            y_low_scale=scale_l,
        )
        bits = {
            "y_high": float(-torch.log2(yh_like).sum()),
            "y_low": float(-torch.log2(yl_like).sum()),
            "z_high": float(-torch.log2(zh_like).sum()),
            "z_low": float(-torch.log2(zl_like).sum()),
        }
        return bundle, bits

    @torch.no_grad()
    def compress(self, x: torch.Tensor) -> tuple[bytes, dict]:
        """Image in [0, 1] (B=1) -> container bytes plus coding stats."""
        if x.dim() != 4 or x.shape[0] != 1:
            raise DimensionError("compress expects a single image (1, 3, H, W)")
        padded, original_hw = pad_image(x)
        bundle, est_bits = self.quantize_latents(padded)
        shapes = latent_shapes(padded.shape[-2:], self.config)
        header = self.stream_header(original_hw)
        data = encode_latents(
            bundle,
            header,
            self.branch_high.coder(shapes.y_high),
            self.branch_low.coder(shapes.y_low),
        )
        return data, {"estimated_bits": est_bits, "bundle": bundle}

    @torch.no_grad()
    def decompress(self, data: bytes) -> tuple[torch.Tensor, LatentBundle]:
        """Container bytes -> (image in [0, 1] at original dims, bundle)."""
        header = StreamHeader.unpack(data)
        self.check_header(header)
        padded_hw = tuple(
            -(-d // PAD_MULTIPLE) * PAD_MULTIPLE for d in (header.height, header.width)
        )
        shapes = latent_shapes(padded_hw, self.config)
        was_training = self.training
        self.eval()
        try:
            header, bundle = decode_latents(
                data,
                self.branch_high.coder(shapes.y_high),
                self.branch_low.coder(shapes.y_low),
                shapes,
            )
            y_high, y_low = bundle.dequantized_y()
            x_hat = self.synthesis(FeaturePair(y_high, y_low))
        finally:
            self.train(was_training)
        return crop_image(x_hat, (header.height, header.width)), bundle

    def layer_inventory(self) -> dict:
        """Module-type counts of analysis vs synthesis (mirror check)."""
        aliases = {
            "Conv2d": "Conv*",
            "ConvTranspose2d": "Conv*",
            "OctaveDownBlock": "OctaveBlock",
            "OctaveUpBlock": "OctaveBlock",
            "FrequencySplit": "FrequencyEnd",
            "FrequencyMerge": "FrequencyEnd",
            "GDN": "GDN*",
            "IGDN": "GDN*",
            "AnalysisTransform": "Transform",
            "SynthesisTransform": "Transform",
        }

        def census(module):
            counts: dict[str, int] = {}
            for m in module.modules():
                name = type(m).__name__
                name = aliases.get(name, name)
                counts[name] = counts.get(name, 0) + 1
            return counts

        return {
            "analysis": census(self.analysis),
            "synthesis": census(self.synthesis),
        }


def save_checkpoint(model: ScreenContentCodec, path) -> None:
    torch.save(
        {
            "layout_version": LAYOUT_VERSION,
            "config": model.config.to_dict(),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path) -> ScreenContentCodec:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    if blob.get("layout_version") != LAYOUT_VERSION:
        raise BitstreamError(
            f"checkpoint layout version {blob.get('layout_version')} unsupported"
        )
    config = ModelConfig.from_dict(blob["config"])
    model = ScreenContentCodec(config)
    model.load_state_dict(blob["state_dict"])
    for m in model.modules():
        if isinstance(m, MaskedConv2d):
            m.validate_mask()
    model.eval()
    return model
