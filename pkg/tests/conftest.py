"""Shared fixtures: label spaces, a small deterministic classifier, and the
randomized corpus used for pair-selection equivalence checks."""

from __future__ import annotations

import random

import pytest
from hypothesis import settings

from macroforge.backends.mocks import BagOfWordsClassifier
from macroforge.core import LABEL_SPACES, Candidate, Instance, LabelSpace
from macroforge.sampling import dedup
from macroforge.scoring import score_candidate

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture
def sib_labels() -> LabelSpace:
    return LABEL_SPACES["sib200"]


@pytest.fixture
def taxi_labels() -> LabelSpace:
    return LABEL_SPACES["taxi1500"]


ORACLE_LABELS = LabelSpace(("Sports", "Health", "Politics"), "oracle3")

# dyadic weights so margins and scores stay exactly representable
ORACLE_WEIGHTS = {
    "Sports": {"goal": 2.0, "match": 1.0, "referee": 1.0, "stadium": 0.5},
    "Health": {"doctor": 2.0, "clinic": 1.0, "vaccine": 1.0, "ward": 0.5},
    "Politics": {"vote": 2.0, "senate": 1.0, "law": 1.0, "ballot": 0.5},
}

ORACLE_CLASSIFIER = BagOfWordsClassifier(ORACLE_WEIGHTS)

_LABEL_WORDS = {
    "Sports": ["goal", "match", "referee", "stadium"],
    "Health": ["doctor", "clinic", "vaccine", "ward"],
    "Politics": ["vote", "senate", "law", "ballot"],
}
_FILLER = ["the", "on", "a", "today", "again", "quietly"]


def _oracle_text(rng: random.Random, label: str) -> str:
    """4-8 words dominated by one label's vocabulary."""
    words = [rng.choice(_LABEL_WORDS[label]) for _ in range(rng.randint(2, 3))]
    words += [rng.choice(_FILLER) for _ in range(rng.randint(2, 5))]
    rng.shuffle(words)
    return " ".join(words)


def _oracle_variants(rng: random.Random, inst: Instance) -> list[str]:
    """1-6 candidate texts spanning flips, misses, copies, and rewrites."""
    tokens = inst.text.split()
    label_positions = [
        i for i, t in enumerate(tokens) if t in _LABEL_WORDS[inst.predicted_label]
    ]
    others = [l for l in ORACLE_LABELS if l != inst.predicted_label]

    def substitute(to_label: str) -> str:
        out = list(tokens)
        pos = rng.choice(label_positions)
        out[pos] = rng.choice(_LABEL_WORDS[to_label])
        return " ".join(out)

    makers = [
        lambda: substitute(inst.target_label),
        lambda: substitute(rng.choice(others)),
        lambda: inst.text,
        lambda: "  " + inst.text + " ",
        lambda: " ".join(rng.choice(_LABEL_WORDS[inst.target_label])
                         for _ in range(len(tokens) * 2 + 3)),
        lambda: " ".join(t for i, t in enumerate(tokens) if i != label_positions[0]),
    ]
    k = rng.randint(1, 6)
    return [makers[rng.randrange(len(makers))]() for _ in range(k)]


def build_oracle_corpus(seed: int = 20260815, langs=("en", "de"), per_lang: int = 25):
    """(instance, deduplicated candidates) pairs with varied selection shapes.

    Texts are sampled from a fixed vocabulary that the shared bag-of-words
    classifier scores in halves, so candidate totals never collide except by
    being the same expression.
    """
    rng = random.Random(seed)
    out = []
    for lang in langs:
        for k in range(per_lang):
            dominant = rng.choice(tuple(ORACLE_LABELS))
            text = _oracle_text(rng, dominant)
            predicted = ORACLE_CLASSIFIER.classify(text, ORACLE_LABELS).predicted_label
            target = rng.choice([l for l in ORACLE_LABELS if l != predicted])
            inst = Instance(
                id=f"i{k:02d}", lang=lang, text=text,
                predicted_label=predicted, target_label=target,
            )
            candidates = dedup([
                Candidate(inst.id, t, "dg_cf", i)
                for i, t in enumerate(_oracle_variants(rng, inst))
            ])
            out.append((inst, candidates))
    return out


def score_oracle_corpus(corpus, weights):
    """ScoredCandidates for every instance under the given weights."""
    scored = []
    for inst, cands in corpus:
        original = ORACLE_CLASSIFIER.classify(inst.text, ORACLE_LABELS)
        scored.append(
            (
                inst,
                [
                    score_candidate(
                        inst, c, weights, ORACLE_CLASSIFIER, ORACLE_LABELS,
                        original_result=original,
                    )
                    for c in cands
                ],
            )
        )
    return scored


@pytest.fixture(scope="session")
def oracle_corpus():
    return build_oracle_corpus()
