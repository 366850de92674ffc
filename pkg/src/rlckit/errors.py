"""Shared exception bases used for CLI exit-code mapping."""


class DataError(Exception):
    """Problem with the data being processed (CLI exit code 2)."""
