from .quantize import quantize, round_half_away
from .gaussian import (
    SIGMA_MIN,
    P_MIN,
    map_scale,
    gaussian_cdf,
    gaussian_likelihood,
    gaussian_rate,
)
from .factorized import FactorizedModel
from .rangecoder import RangeEncoder, RangeDecoder, quantize_cdf, CDF_TOTAL
from .bitstream import (
    MAGIC,
    VERSION,
    HEADER_SIZE,
    STREAM_ORDER,
    StreamHeader,
    pack_container,
    unpack_container,
    pack_payload,
    unpack_payload,
)
from .codec import (
    BranchCoder,
    LatentBundle,
    LatentShapes,
    autoregressive_scan,
    causal_quantize,
    encode_latents,
    decode_latents,
)

__all__ = [
    "quantize",
    "round_half_away",
    "SIGMA_MIN",
    "P_MIN",
    "map_scale",
    "gaussian_cdf",
    "gaussian_likelihood",
    "gaussian_rate",
    "FactorizedModel",
    "RangeEncoder",
    "RangeDecoder",
    "quantize_cdf",
    "CDF_TOTAL",
    "MAGIC",
    "VERSION",
    "HEADER_SIZE",
    "STREAM_ORDER",
    "StreamHeader",
    "pack_container",
    "unpack_container",
    "pack_payload",
    "unpack_payload",
    "BranchCoder",
    "LatentBundle",
    "LatentShapes",
    "autoregressive_scan",
    "causal_quantize",
    "encode_latents",
    "decode_latents",
]
