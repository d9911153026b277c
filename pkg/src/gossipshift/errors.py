"""Shared exception types."""


class GossipShiftError(Exception):
    """Base class for all simulator errors."""


class ShapeError(GossipShiftError):
    """Array dimensions are inconsistent with the declared model/batch shapes."""


class ConfigError(GossipShiftError):
    """Invalid configuration value or invariant violation."""


class GenerationError(GossipShiftError):
    """Synthetic data generation could not satisfy its constraints."""


class IngestionError(GossipShiftError):
    """Malformed external dataset file."""


class AggregationError(GossipShiftError):
    """Structurally incompatible models passed to an aggregation."""
