"""Prompt construction, candidate sampling, parsing, and deduplication.

Completions are chain-of-thought: reasoning first, the answer after a
delimiter. Parsing takes the text after the last delimiter occurrence, so
reasoning that mentions the delimiter's wording cannot shadow the answer.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .backends.base import GenerationParams, Generator
from .core import Candidate, Instance, LabelSpace
from .errors import ConfigError, ParseFailure
from .textnorm import normalize_text

DEFAULT_DELIMITER = "Counterfactual:"
TRANSLATE_DELIMITER = "Translation:"

_PLACEHOLDERS = ("{text}", "{labels}", "{target_label}", "{lang}")


def default_template_body(name: str) -> str:
    """Body of a bundled template: "dgcf" or "translate"."""
    return (resources.files("macroforge") / "templates" / f"{name}.txt").read_text(
        encoding="utf-8"
    )


@dataclass(frozen=True)
class PromptTemplate:
    """A counterfactual prompt body with {text}/{labels}/{target_label}/{lang}
    placeholders and the delimiter that marks the answer in completions."""

    name: str
    body: str
    answer_delimiter: str = DEFAULT_DELIMITER

    def __post_init__(self):
        if "{text}" not in self.body or "{target_label}" not in self.body:
            raise ConfigError(
                f"template {self.name!r} must contain {{text}} and {{target_label}}"
            )
        if not self.answer_delimiter:
            raise ConfigError(f"template {self.name!r} has an empty answer delimiter")

    @classmethod
    def load(cls, path: str | Path | None, delimiter: str = DEFAULT_DELIMITER) -> "PromptTemplate":
        """Template from a UTF-8 file, or the bundled default when path is None."""
        if path is None:
            return cls("dgcf", default_template_body("dgcf"), delimiter)
        p = Path(path)
        return cls(p.stem, p.read_text(encoding="utf-8"), delimiter)


def build_prompt(instance: Instance, template: PromptTemplate, labels: LabelSpace) -> str:
    prompt = (
        template.body.replace("{text}", instance.text)
        .replace("{labels}", labels.joined())
        .replace("{target_label}", instance.target_label)
        .replace("{lang}", instance.lang)
    )
    leftover = [p for p in _PLACEHOLDERS if p in prompt]
    if leftover:
        raise ConfigError(f"unsubstituted placeholders {leftover} in template {template.name!r}")
    return prompt


def build_translate_prompt(text: str, lang: str, body: str | None = None) -> str:
    if body is None:
        body = default_template_body("translate")
    if "{text}" not in body:
        raise ConfigError("translate template must contain {text}")
    return body.replace("{text}", text).replace("{lang}", lang)


def _answer_after(raw: str, delimiter: str) -> str:
    at = raw.rfind(delimiter)
    if at < 0:
        raise ParseFailure(f"no {delimiter!r} delimiter in completion: {raw[:80]!r}")
    answer = unicodedata.normalize("NFC", raw[at + len(delimiter) :]).strip()
    if not answer:
        raise ParseFailure("empty answer after delimiter")
    return answer


def parse_generation(raw: str, template: PromptTemplate) -> str:
    """Answer text after the last delimiter, NFC-normalized and trimmed."""
    return _answer_after(raw, template.answer_delimiter)


@dataclass
class SamplingResult:
    candidates: list[Candidate] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)


def sample_candidates(
    instance: Instance,
    T: int,
    template: PromptTemplate,
    labels: LabelSpace,
    generator: Generator,
    params: GenerationParams | None = None,
) -> SamplingResult:
    """Draw T completions for one instance and parse them into candidates.

    Unparseable completions are recorded as failures, not fabricated, so the
    result can hold fewer than T candidates. sample_index is generation order.
    """
    if T < 1:
        raise ConfigError(f"samples per instance must be >= 1, got {T}")
    params = (params or GenerationParams()).with_samples(T)
    prompt = build_prompt(instance, template, labels)
    result = SamplingResult()
    for i, raw in enumerate(generator.generate(prompt, params)[:T]):
        try:
            text = parse_generation(raw, template)
            result.candidates.append(
                Candidate(instance_id=instance.id, text=text, source="dg_cf", sample_index=i)
            )
        except ParseFailure as exc:
            result.failures.append(
                {
                    "instance_id": instance.id,
                    "lang": instance.lang,
                    "sample_index": i,
                    "stage": "sample",
                    "reason": str(exc),
                }
            )
    return result


def tbcf_candidate(
    instance: Instance,
    english_twin: Instance,
    template: PromptTemplate,
    labels: LabelSpace,
    generator: Generator,
    params: GenerationParams | None = None,
    translate_body: str | None = None,
) -> Candidate:
    """Two-stage candidate: generate an English counterfactual for the twin,
    then translate it into the instance's language with the same backend.
    Parse failures at either stage propagate; stage 2 is never reached after
    a stage-1 failure."""
    if english_twin.id != instance.id:
        raise ValueError(
            f"twin id {english_twin.id!r} does not match instance id {instance.id!r}"
        )
    if english_twin.lang != "en":
        raise ValueError(f"twin must be English, got lang {english_twin.lang!r}")
    params = (params or GenerationParams()).with_samples(1)
    raw = generator.generate(build_prompt(english_twin, template, labels), params)[0]
    english_sce = parse_generation(raw, template)

    raw2 = generator.generate(
        build_translate_prompt(english_sce, instance.lang, translate_body), params
    )[0]
    translated = _answer_after(raw2, TRANSLATE_DELIMITER)
    return Candidate(instance_id=instance.id, text=translated, source="tb_cf", sample_index=0)


def dedup(candidates: list[Candidate]) -> list[Candidate]:
    """First occurrence of each distinct normalized text wins; order is
    preserved. Inputs arrive in sample order, so survivors carry the lowest
    sample_index for their text."""
    ids = {c.instance_id for c in candidates}
    if len(ids) > 1:
        raise ValueError(f"dedup got candidates for multiple instances: {sorted(ids)}")
    seen: set[str] = set()
    out = []
    for cand in candidates:
        key = normalize_text(cand.text)
        if key not in seen:
            seen.add(key)
            out.append(cand)
    return out
