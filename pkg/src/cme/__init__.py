"""Compositional multiview embeddings for social-account type classification."""

__version__ = "0.1.0"
