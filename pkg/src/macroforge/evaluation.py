"""Evaluation metrics over generation records and per-language reporting.

Metrics that need optional inputs (embeddings, token logprobs, language
identification) are reported as unavailable when those inputs are missing,
never silently zero-filled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

from .backends.base import EmbeddingVector
from .errors import MetricInputError
from .scoring import edit_score
from .textnorm import texts_equal

METRICS = (
    "slfr",
    "hlfr",
    "ppl_mean",
    "ss",
    "ts",
    "copy_paste_rate",
    "language_confusion_rate",
)

PPL_AGGREGATES = ("arithmetic", "geometric")


@dataclass(frozen=True)
class GenerationRecord:
    """One evaluated counterfactual: the original, the generation, both
    predictions, and whatever optional measurements were collected."""

    id: str
    lang: str
    original_text: str
    original_prediction: str
    target_label: str
    counterfactual_text: str
    counterfactual_prediction: str
    embedding_original: EmbeddingVector | None = None
    embedding_counterfactual: EmbeddingVector | None = None
    token_logprobs: tuple | None = None
    identified_lang: str | None = None

    def __post_init__(self):
        if not self.id or not self.lang:
            raise ValueError("record id and lang must be non-empty")
        if not self.original_text.strip() or not self.counterfactual_text.strip():
            raise ValueError(f"record {self.id!r} has empty text fields")
        if self.token_logprobs is not None:
            object.__setattr__(self, "token_logprobs", tuple(self.token_logprobs))


def record_to_json(record: GenerationRecord) -> dict:
    row = {
        "id": record.id,
        "lang": record.lang,
        "original_text": record.original_text,
        "original_prediction": record.original_prediction,
        "target_label": record.target_label,
        "counterfactual_text": record.counterfactual_text,
        "counterfactual_prediction": record.counterfactual_prediction,
    }
    if record.embedding_original is not None:
        row["embedding_original"] = list(record.embedding_original.values)
    if record.embedding_counterfactual is not None:
        row["embedding_counterfactual"] = list(record.embedding_counterfactual.values)
    if record.token_logprobs is not None:
        row["token_logprobs"] = list(record.token_logprobs)
    if record.identified_lang is not None:
        row["identified_lang"] = record.identified_lang
    return row


def record_from_json(row: dict) -> GenerationRecord:
    def vector(key):
        return EmbeddingVector.of(row[key]) if row.get(key) is not None else None

    return GenerationRecord(
        id=row["id"],
        lang=row["lang"],
        original_text=row["original_text"],
        original_prediction=row["original_prediction"],
        target_label=row["target_label"],
        counterfactual_text=row["counterfactual_text"],
        counterfactual_prediction=row["counterfactual_prediction"],
        embedding_original=vector("embedding_original"),
        embedding_counterfactual=vector("embedding_counterfactual"),
        token_logprobs=tuple(row["token_logprobs"]) if row.get("token_logprobs") else None,
        identified_lang=row.get("identified_lang"),
    )


def _require(records, what: str) -> list:
    records = list(records)
    if not records:
        raise MetricInputError(f"{what} needs at least one record")
    return records


def slfr(records) -> float:
    """Fraction whose counterfactual changed the model prediction."""
    records = _require(records, "slfr")
    changed = sum(
        1 for r in records if r.counterfactual_prediction != r.original_prediction
    )
    return changed / len(records)


def hlfr(records) -> float:
    """Fraction whose counterfactual landed on the target label. Requires
    every record's target to differ from its original prediction, which is
    what makes hlfr <= slfr."""
    records = _require(records, "hlfr")
    for r in records:
        if r.target_label == r.original_prediction:
            raise MetricInputError(
                f"record {r.id!r}: target_label equals original_prediction"
            )
    hits = sum(1 for r in records if r.counterfactual_prediction == r.target_label)
    return hits / len(records)


def perplexity(token_logprobs) -> float:
    """exp of the negative mean token log-probability."""
    values = list(token_logprobs)
    if not values:
        raise MetricInputError("perplexity needs at least one token logprob")
    if any(v > 0 for v in values):
        raise MetricInputError("token logprobs must be <= 0")
    return math.exp(-sum(values) / len(values))


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.dim != b.dim:
        raise MetricInputError(f"embedding dims differ: {a.dim} vs {b.dim}")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    norm_a = math.sqrt(sum(x * x for x in a.values))
    norm_b = math.sqrt(sum(y * y for y in b.values))
    if norm_a == 0.0 or norm_b == 0.0:
        raise MetricInputError("cosine of an all-zero embedding is undefined")
    return min(1.0, max(-1.0, dot / (norm_a * norm_b)))


def semantic_similarity(records) -> float:
    """Mean cosine between each record's original and counterfactual embeddings."""
    records = _require(records, "semantic_similarity")
    total = 0.0
    for r in records:
        if r.embedding_original is None or r.embedding_counterfactual is None:
            raise MetricInputError(f"record {r.id!r} lacks embeddings")
        total += cosine(r.embedding_original, r.embedding_counterfactual)
    return total / len(records)


def textual_similarity(records, unit: str = "codepoint") -> float:
    """Mean normalized edit distance d(x, x~)/|x|; lower means fewer edits
    and the mean can exceed 1 for heavy rewrites."""
    records = _require(records, "textual_similarity")
    total = 0.0
    for r in records:
        total += 1.0 - edit_score(r.original_text, r.counterfactual_text, unit)
    return total / len(records)


def ces(records_l1, records_l2) -> float:
    """Mean cosine between counterfactual embeddings of id-matched records
    from two languages of the same parallel corpus."""
    records_l1 = _require(records_l1, "ces")
    records_l2 = _require(records_l2, "ces")
    left = sorted(records_l1, key=lambda r: r.id)
    right = sorted(records_l2, key=lambda r: r.id)
    if [r.id for r in left] != [r.id for r in right]:
        raise MetricInputError("ces needs identical id multisets on both sides")
    total = 0.0
    for a, b in zip(left, right):
        if a.embedding_counterfactual is None or b.embedding_counterfactual is None:
            raise MetricInputError(f"record {a.id!r} lacks a counterfactual embedding")
        total += cosine(a.embedding_counterfactual, b.embedding_counterfactual)
    return total / len(left)


def copy_paste_rate(records) -> float:
    """Fraction whose counterfactual equals the original under pipeline
    normalization, the same rule the pairing copy override uses."""
    records = _require(records, "copy_paste_rate")
    copies = sum(1 for r in records if texts_equal(r.original_text, r.counterfactual_text))
    return copies / len(records)


def language_confusion_rate(records) -> float:
    """Fraction identified as some language other than the expected one;
    "und" never matches a real code, so unidentifiable text counts."""
    records = _require(records, "language_confusion_rate")
    for r in records:
        if r.identified_lang is None:
            raise MetricInputError(f"record {r.id!r} has no language identification")
    confused = sum(1 for r in records if r.identified_lang != r.lang)
    return confused / len(records)


@dataclass(frozen=True)
class EvaluationReport:
    """Per-language metric table plus cross-language consistency entries.

    per_language maps lang -> metric -> {"value","count","available","note"};
    cross_language maps "l1|l2" (codes sorted) -> the same shape for ces.
    """

    per_language: dict
    cross_language: dict
    findings: tuple
    options: dict

    def to_json_dict(self) -> dict:
        return {
            "per_language": self.per_language,
            "cross_language": self.cross_language,
            "findings": list(self.findings),
            "options": self.options,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EvaluationReport":
        return cls(
            per_language=data["per_language"],
            cross_language=data["cross_language"],
            findings=tuple(data["findings"]),
            options=data["options"],
        )

    def write_csv(self, path: str | Path) -> None:
        """One row per (lang, metric), cross-language rows included."""
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lang", "metric", "value", "count", "available", "note"])
            for lang in sorted(self.per_language):
                for metric in METRICS:
                    cell = self.per_language[lang][metric]
                    writer.writerow(
                        [lang, metric, cell["value"], cell["count"], cell["available"], cell["note"]]
                    )
            for pair in sorted(self.cross_language):
                cell = self.cross_language[pair]
                writer.writerow(
                    [pair, "ces", cell["value"], cell["count"], cell["available"], cell["note"]]
                )


def _cell(value, count: int, note: str = "") -> dict:
    return {
        "value": value,
        "count": count,
        "available": value is not None,
        "note": note,
    }


def _ppl_cell(records, aggregate: str) -> dict:
    if any(r.token_logprobs is None for r in records):
        return _cell(None, len(records), "token logprobs missing on some records")
    ppls = [perplexity(r.token_logprobs) for r in records]
    if aggregate == "arithmetic":
        return _cell(sum(ppls) / len(ppls), len(ppls))
    return _cell(math.exp(sum(math.log(p) for p in ppls) / len(ppls)), len(ppls))


def build_report(
    records,
    *,
    ppl_aggregate: str = "arithmetic",
    edit_unit: str = "codepoint",
) -> EvaluationReport:
    """All available metrics per language; CES for every language pair with
    matching ids and counterfactual embeddings. ``records`` is a flat list or
    a lang -> records mapping."""
    if ppl_aggregate not in PPL_AGGREGATES:
        raise MetricInputError(f"unknown ppl aggregate {ppl_aggregate!r}")
    if isinstance(records, dict):
        by_lang = {lang: list(rows) for lang, rows in records.items()}
    else:
        by_lang = {}
        for r in records:
            by_lang.setdefault(r.lang, []).append(r)

    findings = []
    per_language = {}
    for lang in sorted(by_lang):
        rows = by_lang[lang]
        if not rows:
            findings.append({"kind": "warning", "lang": lang, "detail": "empty language group"})
            continue
        n = len(rows)
        table = {
            "slfr": _cell(slfr(rows), n),
            "ts": _cell(textual_similarity(rows, edit_unit), n),
            "copy_paste_rate": _cell(copy_paste_rate(rows), n),
            "ppl_mean": _ppl_cell(rows, ppl_aggregate),
        }
        try:
            table["hlfr"] = _cell(hlfr(rows), n)
        except MetricInputError as exc:
            table["hlfr"] = _cell(None, n, str(exc))
        if any(r.embedding_original is None or r.embedding_counterfactual is None for r in rows):
            table["ss"] = _cell(None, n, "embeddings missing on some records")
        else:
            table["ss"] = _cell(semantic_similarity(rows), n)
        if any(r.identified_lang is None for r in rows):
            table["language_confusion_rate"] = _cell(None, n, "identification missing")
        else:
            table["language_confusion_rate"] = _cell(language_confusion_rate(rows), n)
        per_language[lang] = table

    cross_language = {}
    langs = [lang for lang in sorted(by_lang) if by_lang[lang]]
    for i, l1 in enumerate(langs):
        for l2 in langs[i + 1 :]:
            left, right = by_lang[l1], by_lang[l2]
            if sorted(r.id for r in left) != sorted(r.id for r in right):
                continue
            key = f"{l1}|{l2}"
            try:
                cross_language[key] = _cell(ces(left, right), len(left))
            except MetricInputError as exc:
                cross_language[key] = _cell(None, len(left), str(exc))

    return EvaluationReport(
        per_language=per_language,
        cross_language=cross_language,
        findings=tuple(findings),
        options={"ppl_aggregate": ppl_aggregate, "edit_unit": edit_unit},
    )
