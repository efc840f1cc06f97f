"""Exception types raised across the package."""


class HauslossError(ValueError):
    """Base class for all domain errors."""

    code = "error"


class ShapeMismatch(HauslossError):
    code = "shape_mismatch"


class EmptyMask(HauslossError):
    code = "empty_mask"


class EmptyBoundary(HauslossError):
    code = "empty_boundary"


class EmptySourceSet(HauslossError):
    code = "empty_source_set"


class KOutOfRange(HauslossError):
    code = "k_out_of_range"


class BothEmpty(HauslossError):
    code = "both_empty"


class ThresholdFlip(HauslossError):
    code = "threshold_flip"


class DegenerateBatch(HauslossError):
    code = "degenerate_batch"


class GenerationFailed(HauslossError):
    code = "generation_failed"


class ConfigError(HauslossError):
    code = "config_error"


class ArrayFileError(HauslossError):
    code = "bad_array_file"
