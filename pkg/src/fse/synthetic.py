"""Seeded stand-ins for the frozen encoders, for pipeline runs without model weights.

A random word-embedding table over the vocabulary plays the role of the text
encoder; a report's "global visual embedding" is the mean of its serialization's
word vectors plus the ``[BOS]`` row (so empty serializations stay non-zero).
"""

from __future__ import annotations

import numpy as np

from .retrieval import EmbeddingRecord
from .textproc import BOS, Vocab, encode


def token_table(vocab: Vocab, dim: int, seed: int = 42) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.normal(0.0, 1.0, size=(len(vocab), dim))


def embed_text(text: str, vocab: Vocab, table: np.ndarray) -> np.ndarray:
    ids = [BOS] + encode(vocab, text)
    return table[ids].mean(axis=0)


def synthetic_records(items, vocab: Vocab, dim: int = 64, seed: int = 42,
                      splits=None) -> list[EmbeddingRecord]:
    """One record per ``(report_id, serialization_text)``; ``splits`` maps id -> split."""
    table = token_table(vocab, dim, seed)
    splits = splits or {}
    return [
        EmbeddingRecord(rid, embed_text(text, vocab, table), splits.get(rid, "train"))
        for rid, text in items
    ]


def word_embedder(vocab: Vocab, table: np.ndarray):
    """Per-word lookup usable as the ``embed`` argument of ``evidence_features``."""
    return lambda word: table[encode(vocab, word)[0]]
