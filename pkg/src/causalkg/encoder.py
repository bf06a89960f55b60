"""Pluggable contextual token encoders.

Produces a passage vector and one contextual vector per token.  Two kinds:

* synthetic  - hermetic, deterministic encoder: each token's base vector is
  a seeded-hash unit vector, its contextual vector a normalized weighted sum
  of the base vectors in a +/- context_window neighborhood (weight 1 at the
  center, 1/2^|offset| at each offset), and the passage vector the mean of
  the contextual vectors.
* file       - reads precomputed per-token vectors from a text file, one
  record per line: token followed by d whitespace-separated floats.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    EncoderError,
    OutOfVocabularyError,
)

__all__ = ["EncoderConfig", "TokenEncoding", "encode_tokens", "load_embedding_file"]


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "synthetic"
    dimension: int = 64
    seed: int = 0
    context_window: int = 2
    embedding_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("synthetic", "file"):
            raise EncoderError(f"unknown encoder kind {self.kind!r}")
        if self.dimension < 2:
            raise EncoderError(f"dimension must be >= 2, got {self.dimension}")
        if self.context_window < 0:
            raise EncoderError("context_window must be >= 0")
        if self.kind == "file" and not self.embedding_path:
            raise EncoderError("file encoder requires embedding_path")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "seed": self.seed,
            "context_window": self.context_window,
            "embedding_path": self.embedding_path,
        }

    @staticmethod
    def from_dict(data: dict) -> "EncoderConfig":
        return EncoderConfig(
            kind=data.get("kind", "synthetic"),
            dimension=int(data.get("dimension", 64)),
            seed=int(data.get("seed", 0)),
            context_window=int(data.get("context_window", 2)),
            embedding_path=data.get("embedding_path"),
        )


@dataclass(frozen=True)
class TokenEncoding:
    """Passage vector plus one contextual vector per token."""

    passage_vector: np.ndarray  # (d,)
    token_vectors: np.ndarray  # (n, d)


def base_vector(token: str, seed: int, dimension: int) -> np.ndarray:
    """Deterministic unit vector for a token, independent of position.

    The token and seed are hashed (SHA-256) into the state of a PCG64
    generator, which then draws a standard-normal vector that is normalized.
    """
    digest = hashlib.sha256(f"{seed}\x00{token}".encode("utf-8")).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "big")))
    v = rng.standard_normal(dimension)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:  # unreachable for a Gaussian draw, kept for safety
        raise EncoderError(f"degenerate base vector for {token!r}")
    return v / norm


def _encode_synthetic(tokens: Sequence[str], config: EncoderConfig) -> TokenEncoding:
    n = len(tokens)
    d = config.dimension
    base = np.stack([base_vector(t, config.seed, d) for t in tokens])
    window = config.context_window
    if window == 0:
        contextual = base.copy()
    else:
        contextual = np.zeros((n, d))
        for i in range(n):
            lo, hi = max(0, i - window), min(n, i + window + 1)
            for j in range(lo, hi):
                contextual[i] += base[j] / (2.0 ** abs(j - i))
            norm = float(np.linalg.norm(contextual[i]))
            if norm == 0.0:
                raise EncoderError(f"degenerate contextual vector at position {i}")
            contextual[i] /= norm
    return TokenEncoding(passage_vector=contextual.mean(axis=0), token_vectors=contextual)


def load_embedding_file(path: str, dimension: int | None = None) -> dict[str, np.ndarray]:
    """Parse an embedding file into a token -> vector mapping."""
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(x) for x in values])
            except ValueError as exc:
                raise EncoderError(f"{path}:{line_no}: bad float: {exc}") from exc
            if dimension is not None and vec.shape[0] != dimension:
                raise DimensionMismatchError(
                    f"{path}:{line_no}: expected {dimension} floats, got {vec.shape[0]}"
                )
            table[token] = vec
    return table


def _encode_file(tokens: Sequence[str], config: EncoderConfig) -> TokenEncoding:
    table = load_embedding_file(config.embedding_path, config.dimension)
    vectors = []
    for t in tokens:
        if t not in table:
            raise OutOfVocabularyError(f"token {t!r} not in {config.embedding_path}")
        vectors.append(table[t])
    contextual = np.stack(vectors)
    return TokenEncoding(passage_vector=contextual.mean(axis=0), token_vectors=contextual)


def encode_tokens(tokens: Sequence[str], config: EncoderConfig) -> TokenEncoding:
    """Encode a token sequence; deterministic for fixed (tokens, config)."""
    if len(tokens) == 0:
        raise EmptyInputError("cannot encode an empty token sequence")
    if config.kind == "synthetic":
        return _encode_synthetic(tokens, config)
    return _encode_file(tokens, config)
