"""Eligibility filtering, preferred/dispreferred selection, and dataset
assembly.

Selection is argmax/argmin over total scores with sample-order tie-breaks,
plus the copy override: a candidate that merely restates the input is always
the dispreferred side, whatever its score.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Instance, LabelSpace, PreferencePair, ScoredCandidate
from .errors import ConfigError
from .sampling import PromptTemplate, build_prompt
from .textnorm import texts_equal

ELIGIBILITY_MODES = ("soft_flip", "hard_flip")


@dataclass(frozen=True)
class PairingPolicy:
    """soft_flip keeps instances where any candidate changed the prediction;
    hard_flip requires a candidate that hit the target label."""

    eligibility: str = "soft_flip"
    tie_break: str = "lowest_sample_index"
    require_distinct: bool = True
    copy_rule_enabled: bool = True

    def __post_init__(self):
        if self.eligibility not in ELIGIBILITY_MODES:
            raise ConfigError(f"unknown eligibility mode {self.eligibility!r}")
        if self.tie_break != "lowest_sample_index":
            raise ConfigError(f"unknown tie_break {self.tie_break!r}")
        if not self.require_distinct:
            raise ConfigError("require_distinct cannot be disabled")


def eligible(instance: Instance, scored: list[ScoredCandidate], policy: PairingPolicy) -> bool:
    if policy.eligibility == "hard_flip":
        return any(s.flip == 1.0 for s in scored)
    return any(s.new_prediction != instance.predicted_label for s in scored)


def _provenance(s: ScoredCandidate) -> dict:
    record = {
        "total": s.total,
        "flip": s.flip,
        "edit": s.edit,
        "new_prediction": s.new_prediction,
        "sample_index": s.sample_index,
        "source": s.candidate.source,
    }
    if s.aug is not None:
        record["aug"] = s.aug
    if s.align is not None:
        record["align"] = s.align
    return record


def select_pair(
    instance: Instance,
    scored: list[ScoredCandidate],
    policy: PairingPolicy,
    prompt: str = "",
) -> PreferencePair | None:
    """One (chosen, rejected) pair, or None for a discard.

    chosen = argmax total, rejected = argmin total, ties to the lowest
    sample_index. With the copy rule on, a candidate normalized-equal to the
    input is forced into the rejected slot while chosen stays the argmax.
    A pair whose two sides coincide is discarded. Expects deduplicated input.
    """
    if not scored:
        return None
    if not eligible(instance, scored, policy):
        return None
    chosen = max(scored, key=lambda s: (s.total, -s.sample_index))
    rejected = min(scored, key=lambda s: (s.total, s.sample_index))
    if policy.copy_rule_enabled:
        copies = [s for s in scored if texts_equal(s.text, instance.text)]
        if copies:
            rejected = min(copies, key=lambda s: s.sample_index)
    if texts_equal(chosen.text, rejected.text):
        return None
    return PreferencePair(
        instance_id=instance.id,
        lang=instance.lang,
        prompt=prompt,
        chosen=chosen.text,
        rejected=rejected.text,
        chosen_scores=_provenance(chosen),
        rejected_scores=_provenance(rejected),
    )


def build_dpo_dataset(
    corpus: list[Instance],
    scored_by_instance: dict,
    policy: PairingPolicy,
    template: PromptTemplate,
    labels: LabelSpace,
) -> list[PreferencePair]:
    """One pair per eligible, non-discarded instance, ordered by (lang, id).
    ``scored_by_instance`` maps (id, lang) to that instance's deduplicated
    ScoredCandidates; the stored prompt is the instance's generation prompt,
    so training conditions on the sampling-time context."""
    pairs = []
    for inst in sorted(corpus, key=lambda i: (i.lang, i.id)):
        scored = scored_by_instance.get((inst.id, inst.lang), [])
        if not scored:
            continue
        pair = select_pair(inst, scored, policy, prompt=build_prompt(inst, template, labels))
        if pair is not None:
            pairs.append(pair)
    return pairs


def build_sft_dataset(pairs: list[PreferencePair]) -> list[dict]:
    """Preferred answers only: {"id","lang","prompt","chosen"} per pair."""
    return [
        {"id": p.instance_id, "lang": p.lang, "prompt": p.prompt, "chosen": p.chosen}
        for p in pairs
    ]


def pair_to_record(pair: PreferencePair) -> dict:
    return {
        "id": pair.instance_id,
        "lang": pair.lang,
        "prompt": pair.prompt,
        "chosen": pair.chosen,
        "rejected": pair.rejected,
        "scores": {"chosen": pair.chosen_scores, "rejected": pair.rejected_scores},
    }


def interleave_round_robin(datasets_by_language: dict) -> list:
    """Cycle languages in lexicographic code order, one record per language
    per cycle, skipping exhausted languages; stable within each language."""
    sequences = [list(datasets_by_language[lang]) for lang in sorted(datasets_by_language)]
    longest = max((len(s) for s in sequences), default=0)
    return [s[i] for i in range(longest) for s in sequences if i < len(s)]
