"""Model backends: protocols, deterministic mocks, wire client, and cache."""

from .base import (
    ClassificationResult,
    Classifier,
    Embedder,
    EmbeddingVector,
    GenerationParams,
    Generator,
    LanguageIdentifier,
    LogprobScorer,
    TranslationScorer,
)
from .cache import ResponseCache, cache_key, canonical_payload
from .mocks import (
    BagOfWordsClassifier,
    HashEmbedder,
    MockSubstitutionGenerator,
    MockTranslationScorer,
    ScriptLanguageIdentifier,
    UniformLM,
)
from .openai_client import OpenAIClient

__all__ = [
    "BagOfWordsClassifier",
    "ClassificationResult",
    "Classifier",
    "Embedder",
    "EmbeddingVector",
    "GenerationParams",
    "Generator",
    "HashEmbedder",
    "LanguageIdentifier",
    "LogprobScorer",
    "MockSubstitutionGenerator",
    "MockTranslationScorer",
    "OpenAIClient",
    "ResponseCache",
    "ScriptLanguageIdentifier",
    "TranslationScorer",
    "UniformLM",
    "cache_key",
    "canonical_payload",
]
