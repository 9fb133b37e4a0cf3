"""Backend-facing types and the protocols every model backend implements.

Backends are pluggable: the pipeline only sees these protocols, so mocks and
wire clients are interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..core import LabelSpace
from ..errors import ConfigError


@dataclass(frozen=True)
class ClassificationResult:
    """A predicted label plus, when the backend exposes them, per-class
    confidence scores (higher = more confident)."""

    predicted_label: str
    scores: dict
    scores_available: bool

    @classmethod
    def from_scores(cls, scores: dict, labels: LabelSpace) -> "ClassificationResult":
        """Build a result from a full per-class score map; the prediction is
        the argmax with ties broken by label-space order."""
        missing = [l for l in labels if l not in scores]
        extra = [l for l in scores if l not in labels]
        if missing or extra:
            raise ConfigError(
                f"score map must cover the label space exactly; missing={missing} extra={extra}"
            )
        best = max(labels, key=lambda l: (scores[l], -labels.index(l)))
        return cls(predicted_label=best, scores=dict(scores), scores_available=True)

    @classmethod
    def label_only(cls, predicted_label: str) -> "ClassificationResult":
        return cls(predicted_label=predicted_label, scores={}, scores_available=False)


@dataclass(frozen=True)
class GenerationParams:
    """Decoding settings for one sampling call; n_samples is the candidate
    count T drawn per instance."""

    temperature: float = 0.7
    max_tokens: int = 512
    seed: int | None = None
    n_samples: int = 8

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_tokens <= 0:
            raise ConfigError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.n_samples <= 0:
            raise ConfigError(f"n_samples must be positive, got {self.n_samples}")

    def with_samples(self, n: int) -> "GenerationParams":
        return GenerationParams(self.temperature, self.max_tokens, self.seed, n)


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple
    dim: int

    def __post_init__(self):
        if self.dim <= 0 or len(self.values) != self.dim:
            raise ConfigError(
                f"embedding dim {self.dim} does not match {len(self.values)} values"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ConfigError("embedding values must be finite")

    @classmethod
    def of(cls, values) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        return cls(values=vals, dim=len(vals))


@runtime_checkable
class Classifier(Protocol):
    def classify(self, text: str, labels: LabelSpace) -> ClassificationResult: ...


@runtime_checkable
class Generator(Protocol):
    def generate(self, prompt: str, params: GenerationParams) -> list[str]: ...


@runtime_checkable
class Embedder(Protocol):
    def embed(self, text: str) -> EmbeddingVector: ...


@runtime_checkable
class LogprobScorer(Protocol):
    def token_logprobs(self, text: str) -> list[float]: ...


@runtime_checkable
class TranslationScorer(Protocol):
    def translation_nll(self, anchor_english: str, source: str) -> float: ...


@runtime_checkable
class LanguageIdentifier(Protocol):
    def identify_language(self, text: str) -> tuple[str, float]: ...
