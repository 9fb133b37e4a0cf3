"""Client for OpenAI-compatible chat-completion and embedding endpoints.

Retries transport faults, 429s, and 5xx responses with exponential backoff
(0.5 s base, factor 2, 5 attempts). All responses route through an optional
ResponseCache so identical canonical payloads never leave the process twice.
The transport and the sleep function are injectable for tests.
"""

from __future__ import annotations

import os
import threading
import time

import httpx

from ..core import LabelSpace
from ..errors import (
    BackendExhaustedError,
    ConfigError,
    LogprobsUnavailableError,
    MalformedResponseError,
    TransportError,
)
from ..textnorm import normalize_text
from .base import ClassificationResult, EmbeddingVector, GenerationParams
from .cache import ResponseCache, cache_key, canonical_payload

API_KEY_ENV = "MACROFORGE_API_KEY"
_RETRYABLE_STATUS = frozenset({429} | set(range(500, 600)))
_SCORE_FLOOR_GAP = 10.0


class OpenAIClient:
    """One configured endpoint + model, usable as classifier, generator,
    embedder, and (where the server implements the legacy completions echo
    protocol) token-logprob scorer."""

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        embedding_model: str | None = None,
        api_key: str | None = None,
        cache: ResponseCache | None = None,
        max_attempts: int = 5,
        backoff_base: float = 0.5,
        max_in_flight: int = 8,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
        sleeper=time.sleep,
    ):
        if max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.embedding_model = embedding_model or model
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.cache = cache
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self._sleep = sleeper
        self._gate = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(transport=transport, timeout=timeout)
        self._embed_dim: int | None = None
        self._lock = threading.Lock()
        self.requests_sent = 0

    @property
    def backend_id(self) -> str:
        return f"{self.base_url}|{self.model}"

    def close(self) -> None:
        self._client.close()

    # -- wire plumbing -----------------------------------------------------

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post_once(self, path: str, payload: dict) -> httpx.Response:
        with self._gate:
            with self._lock:
                self.requests_sent += 1
            return self._client.post(
                f"{self.base_url}{path}", json=payload, headers=self._headers()
            )

    def _post(self, path: str, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = self._post_once(path, payload)
            except httpx.TransportError as exc:
                last_error = TransportError(f"POST {path}: {exc}")
                continue
            if response.status_code in _RETRYABLE_STATUS:
                last_error = TransportError(
                    f"POST {path}: HTTP {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code != 200:
                raise MalformedResponseError(
                    f"POST {path}: HTTP {response.status_code}: {response.text[:200]}"
                )
            return response.json()
        raise BackendExhaustedError(
            f"POST {path} failed after {self.max_attempts} attempts: {last_error}"
        )

    def _cached(self, path: str, payload: dict) -> dict:
        if self.cache is None:
            return self._post(path, payload)
        return self.cache.fetch(
            self.backend_id + path, payload, lambda: self._post(path, payload)
        )

    # -- generation --------------------------------------------------------

    def generate(self, prompt: str, params: GenerationParams) -> list[str]:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "n": params.n_samples,
        }
        if params.seed is not None:
            payload["seed"] = params.seed
        try:
            data = self._cached("/chat/completions", payload)
        except MalformedResponseError:
            if params.n_samples == 1:
                raise
            # endpoint rejected batch sampling; fall back to single requests
            outputs = []
            for i in range(params.n_samples):
                single = dict(payload, n=1)
                if params.seed is not None:
                    single["seed"] = params.seed + i
                outputs.extend(self._completion_texts(self._cached("/chat/completions", single)))
            return outputs
        return self._completion_texts(data)

    @staticmethod
    def _completion_texts(data: dict) -> list[str]:
        try:
            texts = [choice["message"]["content"] for choice in data["choices"]]
        except (KeyError, TypeError) as exc:
            raise MalformedResponseError(f"unexpected completion shape: {exc}") from None
        if not texts:
            raise MalformedResponseError("completion contained no choices")
        return texts

    # -- classification ----------------------------------------------------

    def classify(self, text: str, labels: LabelSpace) -> ClassificationResult:
        prompt = (
            "Classify the text into exactly one of these labels: "
            f"{labels.joined()}.\nAnswer with the label only.\n\nText: {text}"
        )
        data = self._cached("/chat/completions", self._classify_payload(prompt))
        label = self._match_label(data, labels)
        if label is None:
            reask = (
                prompt
                + "\n\nYour previous answer was not one of the labels. "
                + f"Reply with exactly one of: {labels.joined()}."
            )
            data = self._cached("/chat/completions", self._classify_payload(reask))
            label = self._match_label(data, labels)
        if label is None:
            raise MalformedResponseError(
                f"classifier answer not in label space after re-ask: "
                f"{self._completion_texts(data)[0][:80]!r}"
            )
        scores = self._scores_from_logprobs(data, labels)
        if scores is None:
            return ClassificationResult.label_only(label)
        # the completion's parsed label wins over the top-logprob argmax
        return ClassificationResult(predicted_label=label, scores=scores, scores_available=True)

    def _classify_payload(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0.0,
            "max_tokens": 16,
            "logprobs": True,
            "top_logprobs": 20,
        }

    def _match_label(self, data: dict, labels: LabelSpace) -> str | None:
        answer = normalize_text(self._completion_texts(data)[0]).strip(" .\"'")
        for label in labels:
            if answer.lower() == label.lower():
                return label
        for label in labels:
            if answer.lower().startswith(label.lower()):
                return label
        return None

    @staticmethod
    def _first_token_logprobs(data: dict) -> list[dict] | None:
        try:
            content = data["choices"][0]["logprobs"]["content"]
            return content[0]["top_logprobs"]
        except (KeyError, TypeError, IndexError):
            return None

    def _scores_from_logprobs(self, data: dict, labels: LabelSpace) -> dict | None:
        """Per-class scores from the first generated token's top-k logprobs.
        Labels whose first token is absent get a floor below the minimum
        observed score; if no label matches at all, scores are unavailable."""
        top = self._first_token_logprobs(data)
        if top is None:
            return None
        observed: dict[str, float] = {}
        for label in labels:
            for entry in top:
                token = str(entry.get("token", "")).strip()
                if token and label.lower().startswith(token.lower()):
                    lp = float(entry["logprob"])
                    if label not in observed or lp > observed[label]:
                        observed[label] = lp
        if not observed:
            return None
        floor = min(observed.values()) - _SCORE_FLOOR_GAP
        return {label: observed.get(label, floor) for label in labels}

    # -- embeddings ----------------------------------------------------------

    def embed(self, text: str) -> EmbeddingVector:
        payload = {"model": self.embedding_model, "input": [text]}
        data = self._cached("/embeddings", payload)
        try:
            values = data["data"][0]["embedding"]
        except (KeyError, TypeError, IndexError) as exc:
            raise MalformedResponseError(f"unexpected embedding shape: {exc}") from None
        vector = EmbeddingVector.of(values)
        with self._lock:
            if self._embed_dim is None:
                self._embed_dim = vector.dim
            elif vector.dim != self._embed_dim:
                raise ConfigError(
                    f"embedding dim changed from {self._embed_dim} to {vector.dim}"
                )
        return vector

    # -- token logprobs ------------------------------------------------------

    def token_logprobs(self, text: str) -> list[float]:
        """Score a text via the legacy completions echo protocol. Servers
        without it make perplexity unavailable, not zero."""
        payload = {
            "model": self.model,
            "prompt": text,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        }
        try:
            data = self._cached("/completions", payload)
        except MalformedResponseError as exc:
            raise LogprobsUnavailableError(f"endpoint rejected echo scoring: {exc}") from None
        try:
            raw = data["choices"][0]["logprobs"]["token_logprobs"]
        except (KeyError, TypeError, IndexError):
            raise LogprobsUnavailableError("endpoint returned no token_logprobs") from None
        values = [float(v) for v in raw if v is not None]
        if not values:
            raise LogprobsUnavailableError("no scored tokens in response")
        return values
