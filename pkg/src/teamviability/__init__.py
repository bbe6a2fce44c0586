"""Team viability prediction from multi-party chat transcripts."""

__version__ = "0.1.0"
