"""Core functionality - config, settings loading, logging, result
types."""
