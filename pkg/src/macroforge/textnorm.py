"""Text normalization and stable hashing used across the pipeline.

One normalization rule serves dedup, copy detection, and the chosen/rejected
distinctness check, so whitespace artifacts in generations can never make two
"identical" texts look different to one stage but not another.
"""

from __future__ import annotations

import hashlib
import unicodedata

_WS = None  # lazy-compiled whitespace pattern


def normalize_text(text: str) -> str:
    """NFC-normalize, trim, and collapse internal whitespace runs to single spaces."""
    global _WS
    if _WS is None:
        import re

        _WS = re.compile(r"\s+")
    return _WS.sub(" ", unicodedata.normalize("NFC", text).strip())


def texts_equal(a: str, b: str) -> bool:
    return normalize_text(a) == normalize_text(b)


def stable_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def stable_seed(*parts: object) -> int:
    """Derive a 63-bit seed from any parts; stable across processes and platforms."""
    joined = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(joined).digest()[:8], "big") >> 1
