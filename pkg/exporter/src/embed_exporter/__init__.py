"""Batch export of contextual sentence embeddings to a JSONL store."""

from .encoder import HashAttentionEncoder

__all__ = ["HashAttentionEncoder"]
