"""Levenshtein kernel over Unicode code points.

This is the pipeline's hot numeric loop: it runs once per (instance,
candidate) pair at scoring time and once per record for the textual
similarity metric. Two interchangeable kernels are provided:

* a numba ``@njit`` two-row DP (default when numba imports), and
* a vectorized pure-numpy row update using a min-plus prefix scan.

Selection: set ``MACROFORGE_EDIT_KERNEL=numpy`` (or ``numba``) before import;
without the flag, numba is used when available. ``benchmarks/bench_editdist.py``
compares both.

Unit of edit: Unicode scalar values. A grapheme mode (``unit="grapheme"``)
clusters base characters with combining marks and ZWJ joins before running
the same DP; it is an approximation of full cluster segmentation and is off
by default.
"""

from __future__ import annotations

import os
import unicodedata
from dataclasses import dataclass

import numpy as np

_KERNEL_ENV = "MACROFORGE_EDIT_KERNEL"

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    _HAS_NUMBA = False


def _lev_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Row-wise DP; the insertion recurrence is a min-plus scan, so each row
    is O(m) vector work instead of a Python inner loop."""
    n, m = a.shape[0], b.shape[0]
    prev = np.arange(m + 1, dtype=np.int64)
    jm1 = np.arange(m, dtype=np.int64)
    for i in range(1, n + 1):
        cost = (b != a[i - 1]).astype(np.int64)
        t = np.minimum(prev[:m] + cost, prev[1:] + 1)
        v = np.minimum.accumulate(t - jm1)
        cur = np.empty(m + 1, dtype=np.int64)
        cur[0] = i
        np.minimum(v + jm1, i + 1 + jm1, out=cur[1:])
        prev = cur
    return int(prev[m])


if _HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _lev_numba(a: np.ndarray, b: np.ndarray) -> int:
        n, m = a.shape[0], b.shape[0]
        prev = np.arange(m + 1, dtype=np.int64)
        cur = np.empty(m + 1, dtype=np.int64)
        for i in range(1, n + 1):
            cur[0] = i
            ai = a[i - 1]
            for j in range(1, m + 1):
                sub = prev[j - 1]
                if ai != b[j - 1]:
                    sub += 1
                ins = cur[j - 1] + 1
                dele = prev[j] + 1
                best = sub
                if ins < best:
                    best = ins
                if dele < best:
                    best = dele
                cur[j] = best
            prev, cur = cur, prev
        return int(prev[m])


def _pick_kernel() -> str:
    choice = os.environ.get(_KERNEL_ENV, "").strip().lower()
    if choice in ("numba", "numpy"):
        if choice == "numba" and not _HAS_NUMBA:
            raise ImportError(f"{_KERNEL_ENV}=numba but numba is not installed")
        return choice
    return "numba" if _HAS_NUMBA else "numpy"


_ACTIVE = _pick_kernel()


def active_kernel() -> str:
    return _ACTIVE


def use_kernel(name: str) -> None:
    """Override the kernel choice (tests and benchmarks)."""
    global _ACTIVE
    if name not in available_kernels():
        raise ValueError(f"unknown or unavailable kernel {name!r}")
    _ACTIVE = name


def available_kernels() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAS_NUMBA else ("numpy",)


def _codepoints(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32).astype(np.int64)


_MARK_CATEGORIES = ("Mn", "Mc", "Me")
_ZWJ = "‍"


def graphemes(s: str) -> list[str]:
    """Approximate extended grapheme clusters: a base character absorbs
    following combining marks, ZWJ-joined sequences stay together, and CRLF
    is one cluster."""
    clusters: list[str] = []
    join_next = False
    for ch in s:
        if clusters and (
            join_next
            or ch == _ZWJ
            or unicodedata.category(ch) in _MARK_CATEGORIES
            or (ch == "\n" and clusters[-1].endswith("\r"))
        ):
            clusters[-1] += ch
        else:
            clusters.append(ch)
        join_next = ch == _ZWJ
    return clusters


def _units_pair(a: str, b: str, unit: str) -> tuple[np.ndarray, np.ndarray]:
    # grapheme ids must come from one shared table so equal clusters compare equal
    if unit == "codepoint":
        return _codepoints(a), _codepoints(b)
    if unit == "grapheme":
        table: dict[str, int] = {}
        ua = [table.setdefault(g, len(table)) for g in graphemes(a)]
        ub = [table.setdefault(g, len(table)) for g in graphemes(b)]
        return np.asarray(ua, dtype=np.int64), np.asarray(ub, dtype=np.int64)
    raise ValueError(f"unknown edit unit {unit!r}")


def levenshtein(a: str, b: str, unit: str = "codepoint") -> int:
    """Minimum number of single-unit insertions, deletions, and substitutions
    transforming ``a`` into ``b``."""
    ua, ub = _units_pair(a, b, unit)
    if ua.shape[0] == 0:
        return int(ub.shape[0])
    if ub.shape[0] == 0:
        return int(ua.shape[0])
    if _ACTIVE == "numba":
        return _lev_numba(ua, ub)
    return _lev_numpy(ua, ub)


def text_length(s: str, unit: str = "codepoint") -> int:
    if unit == "codepoint":
        return len(s)
    return len(graphemes(s))


@dataclass(frozen=True)
class EditDistanceResult:
    distance: int
    source_length: int


def edit_distance(x: str, x_tilde: str, unit: str = "codepoint") -> EditDistanceResult:
    """Distance from the original ``x`` plus ``|x|``, both in the same unit."""
    return EditDistanceResult(levenshtein(x, x_tilde, unit), text_length(x, unit))
