"""Exception hierarchy for the codec workbench."""


class CodecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(CodecError):
    """Invalid model or training configuration."""


class DimensionError(CodecError):
    """Tensor spatial dimensions violate a layer's requirements."""


class StructuralError(CodecError):
    """A feature pair or latent bundle violates its invariants."""


class ParameterError(CodecError):
    """Parameters are malformed (wrong shape, mask violation, bad range)."""


class BitstreamError(CodecError):
    """Bitstream container is malformed, truncated or mismatched."""


class DatasetError(CodecError):
    """Dataset directory or manifest cannot be ingested."""


class EvaluationError(CodecError):
    """Evaluation inputs are unusable (e.g. no quality overlap for BD-rate)."""
