"""Exception types shared across the library."""


class MaskBenchError(Exception):
    """Base class for all library errors."""


class CodecError(MaskBenchError):
    """Invalid run-length payload (e.g. counts that do not sum to H*W)."""


class DatasetError(MaskBenchError):
    """Malformed annotation file or missing image data."""


class ConfigError(MaskBenchError):
    """Inconsistent or invalid configuration."""


class AlignmentError(MaskBenchError):
    """Degenerate box handed to RoI feature extraction."""


class TargetError(MaskBenchError):
    """Degenerate box handed to mask target generation."""


class CheckpointError(MaskBenchError):
    """Checkpoint archive that cannot be restored against the given config."""


class TrainingDiverged(MaskBenchError):
    """Non-finite loss encountered; last checkpoint is kept on disk."""


class EvaluationError(MaskBenchError):
    """Evaluation request that cannot be satisfied (e.g. empty dataset)."""
