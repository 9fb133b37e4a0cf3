"""Core domain types and corpus validation.

Everything here is an immutable value object, safe to share across worker
threads. Corpus records arrive as JSON lines; unknown fields are kept on the
record so round-trips never lose information.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ConfigError
from .textnorm import normalize_text

CANDIDATE_SOURCES = ("dg_cf", "tb_cf", "external")

# target_label fill strategies when the corpus file omits it
FILL_FIXED = "fixed"
FILL_SECOND_BEST = "second_best"
FILL_RANDOM = "random"
FILL_STRATEGIES = (FILL_FIXED, FILL_SECOND_BEST, FILL_RANDOM)


@dataclass(frozen=True)
class LabelSpace:
    """Ordered, fixed set of class labels; index order breaks classifier ties."""

    labels: tuple[str, ...]
    task_name: str

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) < 2:
            raise ConfigError(f"label space {self.task_name!r} needs at least 2 labels")
        if len(set(self.labels)) != len(self.labels):
            raise ConfigError(f"label space {self.task_name!r} has duplicate labels")

    def __contains__(self, label: str) -> bool:
        return label in self.labels

    def __iter__(self):
        return iter(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def joined(self, sep: str = ", ") -> str:
        return sep.join(self.labels)


# Label-space presets for the two tasks the pipeline was built around.
LABEL_SPACES = {
    "sib200": LabelSpace(
        (
            "Science/Technology",
            "Travel",
            "Politics",
            "Sports",
            "Health",
            "Entertainment",
            "Geography",
        ),
        "sib200",
    ),
    "taxi1500": LabelSpace(
        ("Recommendation", "Faith", "Description", "Sin", "Grace", "Violence"),
        "taxi1500",
    ),
}


@dataclass(frozen=True)
class Instance:
    """One labeled input text with its model prediction and flip target."""

    id: str
    lang: str
    text: str
    predicted_label: str
    target_label: str
    gold_label: str | None = None
    target_fill: str | None = None  # how target_label was chosen, for reproducibility
    extra: tuple[tuple[str, Any], ...] = ()  # unknown corpus fields, round-tripped

    def validate(self, labels: LabelSpace) -> list[str]:
        problems = []
        if not self.id:
            problems.append("empty id")
        if not self.lang:
            problems.append("empty lang")
        if not self.text.strip():
            problems.append("empty text")
        if self.predicted_label not in labels:
            problems.append(f"predicted_label {self.predicted_label!r} not in label space")
        if self.target_label not in labels:
            problems.append(f"target_label {self.target_label!r} not in label space")
        if self.target_label == self.predicted_label:
            problems.append("target_label equals predicted_label")
        return problems


@dataclass(frozen=True)
class Candidate:
    """One sampled counterfactual text, before scoring."""

    instance_id: str
    text: str
    source: str
    sample_index: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("candidate text is empty; record a parse failure instead")
        if self.source not in CANDIDATE_SOURCES:
            raise ValueError(f"unknown candidate source {self.source!r}")
        if self.sample_index < 0:
            raise ValueError("sample_index must be >= 0")


@dataclass(frozen=True)
class ScoreWeights:
    w_flip: float = 1.0
    w_aug: float = 1.0
    w_edit: float = 1.0
    w_align: float = 0.0

    def __post_init__(self):
        vals = (self.w_flip, self.w_aug, self.w_edit, self.w_align)
        for v in vals:
            if not math.isfinite(v):
                raise ConfigError("score weights must be finite")
            if v < 0:
                raise ConfigError("score weights must be >= 0")
        if not any(v > 0 for v in vals):
            raise ConfigError("at least one score weight must be > 0")

    def as_dict(self) -> dict[str, float]:
        return {
            "flip": self.w_flip,
            "aug": self.w_aug,
            "edit": self.w_edit,
            "align": self.w_align,
        }

    def scaled(self, c: float) -> "ScoreWeights":
        return ScoreWeights(self.w_flip * c, self.w_aug * c, self.w_edit * c, self.w_align * c)


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: Candidate
    new_prediction: str
    flip: float
    edit: float
    total: float
    aug: float | None = None  # None when the classifier exposes no per-class scores
    align: float | None = None  # None unless an anchor exists and w_align > 0

    @property
    def sample_index(self) -> int:
        return self.candidate.sample_index

    @property
    def text(self) -> str:
        return self.candidate.text

    def components(self) -> dict[str, float]:
        parts = {"flip": self.flip, "edit": self.edit}
        if self.aug is not None:
            parts["aug"] = self.aug
        if self.align is not None:
            parts["align"] = self.align
        return parts


@dataclass(frozen=True)
class PreferencePair:
    instance_id: str
    lang: str
    prompt: str
    chosen: str
    rejected: str
    chosen_scores: dict = field(default_factory=dict)
    rejected_scores: dict = field(default_factory=dict)

    def __post_init__(self):
        if normalize_text(self.chosen) == normalize_text(self.rejected):
            raise ValueError(f"pair for {self.instance_id!r} has chosen == rejected")


def validate_corpus(instances: Iterable[Instance], labels: LabelSpace) -> list[dict]:
    """Scan a corpus for invariant violations. Findings are data, not failures.

    Checks per-instance invariants, (id, lang) uniqueness, and gold-label
    agreement across parallel translations of the same id. Order-independent:
    permuting the input yields the same findings.
    """
    findings: list[dict] = []
    seen: set[tuple[str, str]] = set()
    gold_by_id: dict[str, dict[str, str]] = {}

    for inst in instances:
        for problem in inst.validate(labels):
            findings.append(
                {"kind": "invariant", "id": inst.id, "lang": inst.lang, "detail": problem}
            )
        key = (inst.id, inst.lang)
        if key in seen:
            findings.append(
                {"kind": "duplicate", "id": inst.id, "lang": inst.lang,
                 "detail": "duplicate (id, lang)"}
            )
        seen.add(key)
        if inst.gold_label is not None:
            gold_by_id.setdefault(inst.id, {})[inst.lang] = inst.gold_label

    for iid in sorted(gold_by_id):
        golds = gold_by_id[iid]
        if len(golds) >= 2 and len(set(golds.values())) > 1:
            detail = ", ".join(f"{lang}={label}" for lang, label in sorted(golds.items()))
            findings.append(
                {"kind": "parallel_mismatch", "id": iid, "lang": "*",
                 "detail": f"gold_label differs across languages: {detail}"}
            )

    findings.sort(key=lambda f: (f["kind"], f["id"], f["lang"], f["detail"]))
    return findings


# ---------------------------------------------------------------------------
# Corpus JSONL round-trip

_KNOWN_FIELDS = ("id", "lang", "text", "gold_label", "predicted_label", "target_label",
                 "target_fill")


def corpus_record_to_instance(rec: dict) -> Instance:
    """Build an Instance from a corpus record that already carries both labels."""
    extra = tuple(sorted((k, v) for k, v in rec.items() if k not in _KNOWN_FIELDS))
    return Instance(
        id=str(rec["id"]),
        lang=str(rec["lang"]),
        text=str(rec["text"]),
        predicted_label=str(rec["predicted_label"]),
        target_label=str(rec["target_label"]),
        gold_label=rec.get("gold_label"),
        target_fill=rec.get("target_fill"),
        extra=extra,
    )


def instance_to_record(inst: Instance) -> dict:
    rec: dict[str, Any] = {"id": inst.id, "lang": inst.lang, "text": inst.text}
    if inst.gold_label is not None:
        rec["gold_label"] = inst.gold_label
    rec["predicted_label"] = inst.predicted_label
    rec["target_label"] = inst.target_label
    if inst.target_fill is not None:
        rec["target_fill"] = inst.target_fill
    rec.update(dict(inst.extra))
    return rec


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with Path(path).open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_jsonl(records: Iterable[dict], path: str | Path) -> int:
    """Write records one JSON object per line (UTF-8, no ASCII escaping)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
            n += 1
    return n
