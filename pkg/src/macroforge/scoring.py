"""Candidate scoring: flip, augmentation, edit, and alignment components.

The component formulas are pure; ``score_candidate`` is the orchestration
point that talks to the classifier (and optionally the translation scorer)
and assembles a ``ScoredCandidate``.
"""

from __future__ import annotations

import math

from .core import Candidate, Instance, LabelSpace, ScoredCandidate, ScoreWeights
from .editdist import edit_distance
from .errors import MissingComponentError, MissingLabelError

_SIGMOID_CLAMP = 500.0
_BELOW_ONE = math.nextafter(1.0, 0.0)
_ABOVE_ZERO = math.nextafter(0.0, 1.0)


def sigmoid(z: float) -> float:
    """Logistic sigmoid, branchless and overflow-safe; the result is kept
    inside the open interval (0, 1) even when the true value rounds to 0 or 1
    in float64."""
    z = min(max(z, -_SIGMOID_CLAMP), _SIGMOID_CLAMP)
    r = math.exp(min(z, 0.0)) / (1.0 + math.exp(-abs(z)))
    return min(max(r, _ABOVE_ZERO), _BELOW_ONE)


def flip_score(new_prediction: str, target: str) -> float:
    """1 when the candidate's prediction reaches the target label, else 0."""
    return 1.0 if new_prediction == target else 0.0


def _class_score(scores: dict[str, float], label: str, which: str) -> float:
    try:
        return scores[label]
    except KeyError:
        raise MissingLabelError(f"{which} scores missing class {label!r}") from None


def aug_score(
    scores_original: dict[str, float],
    scores_candidate: dict[str, float],
    y: str,
    target: str,
    flipped: bool,
) -> float:
    """Margin-based confidence score. On a successful flip, rewards the gap
    between target and original label on the candidate; otherwise rewards how
    much the candidate reduced confidence in the original label."""
    if flipped:
        margin = _class_score(scores_candidate, target, "candidate") - _class_score(
            scores_candidate, y, "candidate"
        )
    else:
        margin = _class_score(scores_original, y, "original") - _class_score(
            scores_candidate, y, "candidate"
        )
    return sigmoid(margin)


def edit_score(x: str, x_tilde: str, unit: str = "codepoint") -> float:
    """1 - d(x, x~)/|x|; negative when the edits outweigh the original length."""
    r = edit_distance(x, x_tilde, unit)
    if r.source_length == 0:
        raise ValueError("edit_score needs a non-empty original text")
    return 1.0 - r.distance / r.source_length


def align_score(mean_cross_entropy: float) -> float:
    """sigmoid(-mean token cross-entropy); lands in (0, 0.5] since the
    cross-entropy is non-negative."""
    if not math.isfinite(mean_cross_entropy) or mean_cross_entropy < 0:
        raise ValueError(f"mean cross-entropy must be finite and >= 0, got {mean_cross_entropy}")
    return sigmoid(-mean_cross_entropy)


def _weighted_sum(components: dict[str, float], weights: dict[str, float]) -> float:
    total = 0.0
    for name, w in weights.items():
        if w == 0.0:
            continue
        if name not in components:
            raise MissingComponentError(
                f"component {name!r} has weight {w} but was not computed"
            )
        total += w * components[name]
    return total


def total_score(components: dict[str, float], weights: ScoreWeights) -> float:
    """Weighted sum of the available components. Every component with a
    positive weight must be present."""
    return _weighted_sum(components, weights.as_dict())


WEIGHT_PRESETS: dict[str, ScoreWeights] = {
    "sib200-qwen3-4b": ScoreWeights(1.0, 0.6, 1.0, 0.0),
    "sib200-qwen3-8b": ScoreWeights(1.0, 2.0, 1.0, 0.0),
    "sib200-gemma3-4b": ScoreWeights(1.0, 1.35, 1.0, 0.0),
    "sib200-gemma3-12b": ScoreWeights(1.0, 1.2, 1.0, 0.0),
    "taxi1500-qwen3-4b": ScoreWeights(1.0, 1.0, 1.0, 0.0),
    "taxi1500-qwen3-8b": ScoreWeights(1.0, 1.0, 1.0, 0.0),
    "taxi1500-gemma3-4b": ScoreWeights(1.0, 1.0, 1.0, 0.0),
    "taxi1500-gemma3-12b": ScoreWeights(1.0, 0.5, 1.0, 0.0),
}


def score_candidate(
    instance: Instance,
    candidate: Candidate,
    weights: ScoreWeights,
    classifier,
    labels: LabelSpace,
    *,
    original_result=None,
    translation_scorer=None,
    anchor_text: str | None = None,
    edit_unit: str = "codepoint",
) -> ScoredCandidate:
    """Classify the candidate and assemble its component and total scores.

    ``original_result`` is the classifier's result on the untouched instance
    text; passing it in lets callers classify each original once and reuse it
    across that instance's candidates. When it is omitted the classifier is
    invoked here.

    The alignment component is computed only when its weight is positive and
    both an anchor text and a translation scorer are supplied; otherwise it is
    dropped from the weighted sum. The augmentation component has no such
    fallback: a positive weight with a backend that reports no per-class
    scores is a configuration problem and raises.
    """
    if candidate.instance_id != instance.id:
        raise ValueError(
            f"candidate belongs to {candidate.instance_id!r}, not {instance.id!r}"
        )
    if original_result is None:
        original_result = classifier.classify(instance.text, labels)
    result = classifier.classify(candidate.text, labels)

    flipped = result.predicted_label == instance.target_label
    components: dict[str, float] = {
        "flip": flip_score(result.predicted_label, instance.target_label),
        "edit": edit_score(instance.text, candidate.text, edit_unit),
    }
    if original_result.scores_available and result.scores_available:
        components["aug"] = aug_score(
            original_result.scores,
            result.scores,
            instance.predicted_label,
            instance.target_label,
            flipped,
        )

    effective = weights.as_dict()
    if weights.w_align > 0 and anchor_text is not None and translation_scorer is not None:
        components["align"] = align_score(
            translation_scorer.translation_nll(anchor_text, candidate.text)
        )
    else:
        effective["align"] = 0.0

    return ScoredCandidate(
        candidate=candidate,
        new_prediction=result.predicted_label,
        flip=components["flip"],
        edit=components["edit"],
        aug=components.get("aug"),
        align=components.get("align"),
        total=_weighted_sum(components, effective),
    )
