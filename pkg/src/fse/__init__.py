"""Factual serialization, contrastive-alignment kernels, case retrieval and report metrics."""

__version__ = "0.1.0"
