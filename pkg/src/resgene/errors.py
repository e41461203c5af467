"""Exception hierarchy shared across the toolkit."""


class ResgeneError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ResgeneError):
    """Malformed genotype/phenotype input; message names the offending location."""


class DataError(ResgeneError):
    """Dataset-level problem (empty join, missing trait, misaligned ids)."""


class LayoutError(ResgeneError):
    """Invalid sequence-to-grid layout request."""


class GraphError(ResgeneError):
    """Misuse of the differentiation graph (non-scalar backward, etc.)."""


class ConfigError(ResgeneError):
    """Network or training configuration that cannot be realized."""


class StatsError(ResgeneError):
    """Undefined statistic (constant input correlation, degenerate table)."""


class FitError(ResgeneError):
    """Model fitting failed (singular system, bad penalty)."""


class SynthError(ResgeneError):
    """Degenerate synthetic-data specification."""
