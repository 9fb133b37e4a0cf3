"""Persistent response cache keyed by canonicalized request payloads.

The cache file is append-only JSON lines; on load, the last entry for a key
wins. Reruns of a pipeline with a warm cache issue zero outbound requests
for payloads already seen, which is what makes long runs resumable.
"""

from __future__ import annotations

import json
import threading
import time
from pathlib import Path

from ..textnorm import stable_digest


def canonical_payload(payload: dict) -> bytes:
    """Canonical byte form of a request: keys sorted, no whitespace. Two
    semantically identical requests with reordered fields canonicalize to
    the same bytes."""
    return json.dumps(
        payload, sort_keys=True, ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")


def cache_key(backend_id: str, request_payload: bytes) -> str:
    return stable_digest(backend_id.encode("utf-8") + b"\x00" + request_payload)


class ResponseCache:
    """Thread-safe key -> response store with optional file persistence.

    ``path=None`` gives a purely in-memory cache with the same interface.
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, object] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    row = json.loads(line)
                    self._entries[row["key"]] = row["response"]

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: str):
        with self._lock:
            if key in self._entries:
                self.hits += 1
                return self._entries[key]
            self.misses += 1
            return None

    def put(self, key: str, payload_digest: str, response) -> None:
        row = {
            "key": key,
            "payload_digest": payload_digest,
            "response": response,
            "timestamp": time.time(),
        }
        with self._lock:
            self._entries[key] = response
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    def fetch(self, backend_id: str, payload: dict, call):
        """Look up the canonical payload; on a miss, invoke ``call()`` and
        persist its result. ``call`` must return a JSON-serializable value."""
        body = canonical_payload(payload)
        key = cache_key(backend_id, body)
        cached = self.get(key)
        if cached is not None:
            return cached
        response = call()
        self.put(key, stable_digest(body), response)
        return response
