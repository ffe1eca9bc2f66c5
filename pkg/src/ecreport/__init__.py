"""Multi-agent analytical report generation for earnings call transcripts."""

__version__ = "0.1.0"
