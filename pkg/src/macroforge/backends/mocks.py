"""Deterministic in-process backends for tests and the offline demo.

Every mock is a pure function of its constructor parameters and call
arguments: repeated invocation yields bit-identical results, which is what
makes end-to-end runs byte-reproducible without a network.
"""

from __future__ import annotations

import hashlib
import math
import string
from dataclasses import dataclass, field

from ..core import LabelSpace
from ..errors import UnsupportedLanguageError
from ..textnorm import normalize_text
from .base import ClassificationResult, EmbeddingVector, GenerationParams

_PUNCT = string.punctuation + "«»„“”‘’…—–"


def _split_token(raw: str) -> tuple[str, str, str]:
    """Split a whitespace token into (leading punct, core, trailing punct)."""
    start, end = 0, len(raw)
    while start < end and raw[start] in _PUNCT:
        start += 1
    while end > start and raw[end - 1] in _PUNCT:
        end -= 1
    return raw[:start], raw[start:end], raw[end:]


def _cores(text: str) -> list[str]:
    return [
        core.lower()
        for tok in normalize_text(text).split()
        for _, core, _ in (_split_token(tok),)
        if core
    ]


@dataclass(frozen=True)
class BagOfWordsClassifier:
    """Linear bag-of-words model: per-label score is the sum of word weights
    found in the text. Words are matched lowercase with edge punctuation
    stripped."""

    weights: dict  # label -> {word -> weight}
    expose_scores: bool = True

    def classify(self, text: str, labels: LabelSpace) -> ClassificationResult:
        if not text.strip():
            raise ValueError("cannot classify empty text")
        cores = _cores(text)
        scores = {}
        for label in labels:
            table = self.weights.get(label, {})
            scores[label] = float(sum(table.get(c, 0.0) for c in cores))
        result = ClassificationResult.from_scores(scores, labels)
        if self.expose_scores:
            return result
        return ClassificationResult.label_only(result.predicted_label)


@dataclass(frozen=True)
class MockSubstitutionGenerator:
    """Rule-based stand-in for an instruction-following LLM.

    Counterfactual prompts: the input text is read from the line after
    ``source_marker``; sample k substitutes the k-th mapped word (cycling),
    so distinct samples vary one word each and wrap around to duplicates.
    Texts with no mapped words are echoed unchanged, as are samples landing
    on a ``copy_every`` boundary; both drive the copy-detection paths.

    Translation prompts (recognized by ``translate_delimiter`` appearing in
    the prompt): the text after ``translate_marker`` is mapped word-for-word
    through ``translation_map``, unmapped words passing through.
    """

    word_map: dict = field(default_factory=dict)  # lowercase core -> replacement
    source_marker: str = "Original text:"
    delimiter: str = "Counterfactual:"
    translation_map: dict = field(default_factory=dict)
    translate_marker: str = "Text:"
    translate_delimiter: str = "Translation:"
    copy_every: int | None = None
    emit_delimiter: bool = True

    def generate(self, prompt: str, params: GenerationParams) -> list[str]:
        if self.translate_delimiter and self.translate_delimiter in prompt:
            out = self._translate(self._extract(prompt, self.translate_marker))
            completion = f"{self.translate_delimiter} {out}"
            return [completion for _ in range(params.n_samples)]

        text = self._extract(prompt, self.source_marker)
        tokens = text.split()
        mapped = [
            i for i, tok in enumerate(tokens) if _split_token(tok)[1].lower() in self.word_map
        ]
        outputs = []
        for k in range(params.n_samples):
            copy_slot = self.copy_every is not None and (k + 1) % self.copy_every == 0
            if not mapped or copy_slot:
                variant = text
            else:
                pos = mapped[k % len(mapped)]
                head, core, tail = _split_token(tokens[pos])
                replaced = head + self.word_map[core.lower()] + tail
                variant = " ".join(tokens[:pos] + [replaced] + tokens[pos + 1 :])
            if self.emit_delimiter:
                outputs.append(
                    f"The label rests on one key word; swapping it flips the "
                    f"prediction. {self.delimiter} {variant}"
                )
            else:
                outputs.append(f"I considered the text and propose: {variant}")
        return outputs

    def _extract(self, prompt: str, marker: str) -> str:
        at = prompt.rfind(marker)
        if at < 0:
            raise ValueError(f"prompt lacks the {marker!r} line this mock expects")
        line = prompt[at + len(marker) :].split("\n", 1)[0]
        return line.strip()

    def _translate(self, text: str) -> str:
        out = []
        for tok in text.split():
            head, core, tail = _split_token(tok)
            out.append(head + self.translation_map.get(core.lower(), core) + tail)
        return " ".join(out)


@dataclass(frozen=True)
class HashEmbedder:
    """Bag-of-words embedding: each word increments one hash-chosen bucket.
    Texts with disjoint vocabularies land in disjoint buckets (barring hash
    collisions) and embed orthogonally."""

    dim: int = 64

    def bucket(self, word: str) -> int:
        digest = hashlib.sha256(word.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "big") % self.dim

    def embed(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise ValueError("cannot embed empty text")
        values = [0.0] * self.dim
        for core in _cores(text):
            values[self.bucket(core)] += 1.0
        return EmbeddingVector.of(values)


@dataclass(frozen=True)
class UniformLM:
    """Scorer assigning every whitespace token probability 1/vocab_size, so
    perplexity of any text is exactly vocab_size."""

    vocab_size: int = 50

    def token_logprobs(self, text: str) -> list[float]:
        tokens = normalize_text(text).split()
        if not tokens:
            raise ValueError("cannot score empty text")
        lp = -math.log(self.vocab_size)
        return [lp] * len(tokens)


@dataclass(frozen=True)
class MockTranslationScorer:
    """Per-token probability table over the anchor text: the mean negative
    log of each anchor token's probability, conditioned on nothing (the mock
    ignores the source except for the rejection list)."""

    token_probs: dict = field(default_factory=dict)  # lowercase core -> prob
    default_prob: float = 0.5
    reject_if_contains: tuple = ()

    def translation_nll(self, anchor_english: str, source: str) -> float:
        if not anchor_english.strip() or not source.strip():
            raise ValueError("anchor and source must be non-empty")
        for marker in self.reject_if_contains:
            if marker in source:
                raise UnsupportedLanguageError(f"mock scorer rejects text containing {marker!r}")
        total = 0.0
        cores = _cores(anchor_english)
        if not cores:
            raise ValueError("anchor has no scoreable tokens")
        for core in cores:
            p = self.token_probs.get(core, self.default_prob)
            if not 0.0 < p <= 1.0:
                raise ValueError(f"token probability {p} for {core!r} outside (0, 1]")
            total += -math.log(p)
        return total / len(cores)


_SCRIPT_RANGES = (
    ("zh", 0x4E00, 0x9FFF),
    ("zh", 0x3400, 0x4DBF),
    ("ru", 0x0400, 0x04FF),
    ("ru", 0x0500, 0x052F),
    ("ar", 0x0600, 0x06FF),
    ("ar", 0x0750, 0x077F),
    ("ar", 0x08A0, 0x08FF),
)


@dataclass(frozen=True)
class ScriptLanguageIdentifier:
    """Unicode-script heuristic: Han -> zh, Cyrillic -> ru, Arabic -> ar,
    any other letter -> en. Returns the majority script's code with its
    share as confidence; texts with no letters identify as ("und", 0.0)."""

    def identify_language(self, text: str) -> tuple[str, float]:
        if not text.strip():
            raise ValueError("cannot identify empty text")
        counts: dict[str, int] = {}
        for ch in text:
            if not ch.isalpha():
                continue
            code = "en"
            cp = ord(ch)
            for lang, lo, hi in _SCRIPT_RANGES:
                if lo <= cp <= hi:
                    code = lang
                    break
            counts[code] = counts.get(code, 0) + 1
        if not counts:
            return ("und", 0.0)
        total = sum(counts.values())
        best = max(sorted(counts), key=counts.get)
        return (best, counts[best] / total)
