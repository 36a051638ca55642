"""Embedding vector utilities and the deterministic offline embedder.

All vectors downstream are 1536-dimensional float64, either unit-norm or the
degenerate zero vector (norm below 1e-12). The offline embedder feature-hashes
word n-grams (n up to 3) through md5 so results are stable across processes,
platforms, and Python hash randomization.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

__all__ = [
    "DIM",
    "DEGENERATE_NORM",
    "is_degenerate",
    "normalize",
    "cosine",
    "tokenize",
    "fallback_embed",
]

DIM = 1536
DEGENERATE_NORM = 1e-12

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def is_degenerate(vec: np.ndarray) -> bool:
    return float(np.linalg.norm(vec)) < DEGENERATE_NORM


def normalize(vec: np.ndarray) -> np.ndarray:
    """Scale to unit norm; a degenerate input collapses to the zero vector."""
    arr = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm < DEGENERATE_NORM:
        return np.zeros_like(arr)
    return arr / norm


def cosine(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity with a zero-denominator guard: any degenerate side
    yields 0.0 rather than an error."""
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx < DEGENERATE_NORM or ny < DEGENERATE_NORM:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _bucket_and_sign(gram: str) -> tuple[int, float]:
    digest = hashlib.md5(gram.encode("utf-8")).digest()
    bucket = int.from_bytes(digest[:4], "big") % DIM
    sign = 1.0 if digest[4] & 1 == 0 else -1.0
    return bucket, sign


def fallback_embed(text: str) -> np.ndarray:
    """Deterministic feature-hash embedding: word n-grams for n in {1, 2, 3}
    hashed into 1536 signed buckets, then L2-normalized.

    Identical texts map to identical vectors; token-disjoint texts land in
    (almost surely) disjoint buckets and come out near-orthogonal. Empty or
    token-free text gives the degenerate zero vector.
    """
    vec = np.zeros(DIM, dtype=np.float64)
    tokens = tokenize(text)
    if not tokens:
        return vec
    for n in (1, 2, 3):
        for i in range(len(tokens) - n + 1):
            bucket, sign = _bucket_and_sign(" ".join(tokens[i:i + n]))
            vec[bucket] += sign
    return normalize(vec)
