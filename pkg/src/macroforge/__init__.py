"""Preference-data construction for self-generated counterfactual
explanations: sampling, scoring, pair selection, and evaluation."""

from .core import (
    LABEL_SPACES,
    Candidate,
    Instance,
    LabelSpace,
    PreferencePair,
    ScoredCandidate,
    ScoreWeights,
    validate_corpus,
)
from .config import RunConfig
from .dpomath import PolicyLogProbs, bt_loss, dpo_loss, implied_reward_delta
from .editdist import edit_distance, levenshtein
from .errors import MacroforgeError
from .evaluation import EvaluationReport, GenerationRecord, build_report
from .pairing import PairingPolicy, build_dpo_dataset, build_sft_dataset, select_pair
from .pipeline import run_pipeline
from .sampling import PromptTemplate, build_prompt, parse_generation, sample_candidates
from .scoring import (
    WEIGHT_PRESETS,
    align_score,
    aug_score,
    edit_score,
    flip_score,
    score_candidate,
    sigmoid,
    total_score,
)

__version__ = "0.1.0"

__all__ = [
    "LABEL_SPACES",
    "WEIGHT_PRESETS",
    "Candidate",
    "EvaluationReport",
    "GenerationRecord",
    "Instance",
    "LabelSpace",
    "MacroforgeError",
    "PairingPolicy",
    "PolicyLogProbs",
    "PreferencePair",
    "PromptTemplate",
    "RunConfig",
    "ScoreWeights",
    "ScoredCandidate",
    "align_score",
    "aug_score",
    "bt_loss",
    "build_dpo_dataset",
    "build_prompt",
    "build_report",
    "build_sft_dataset",
    "dpo_loss",
    "edit_distance",
    "edit_score",
    "flip_score",
    "implied_reward_delta",
    "levenshtein",
    "parse_generation",
    "run_pipeline",
    "sample_candidates",
    "score_candidate",
    "select_pair",
    "sigmoid",
    "total_score",
    "validate_corpus",
]
