"""Self-contained offline demo: a bundled 2-language corpus run end to end
against the mock backends.

The corpus covers the interesting paths: clean flips, a flip decided by the
label-order tie-break, a prediction change that misses the target (soft vs
hard eligibility), an instance whose samples are all copies, and one Russian
instance whose substitution lands in Latin script (language confusion).
"""

from __future__ import annotations

import shutil
from importlib import resources
from pathlib import Path

from .config import RunConfig
from .pipeline import STAGES, run_pipeline

DEMO_CLASSIFIER_WEIGHTS = {
    "Sports": {
        "match": 2.0, "stadium": 1.0, "goal": 2.0, "team": 1.0, "referee": 1.5,
        "матч": 2.0, "стадионе": 1.0, "стадион": 1.0, "гол": 2.0, "гола": 2.0,
        "команды": 1.0, "судья": 1.5,
    },
    "Health": {
        "checkup": 2.0, "doctor": 2.0, "clinic": 1.0, "vaccine": 2.0, "ward": 1.0,
        "осмотр": 2.0, "врач": 2.0, "клинике": 1.0, "клиника": 1.0,
        "вакцина": 2.0, "вакцины": 2.0, "палата": 1.0,
    },
    "Travel": {"visa": 2.0, "flight": 2.0, "виза": 2.0},
}

DEMO_WORD_MAP = {
    "match": "checkup", "stadium": "clinic", "goal": "vaccine", "team": "ward",
    "doctor": "referee", "checkup": "match", "referee": "doctor", "visa": "vaccine",
    "матч": "осмотр", "стадионе": "клинике", "гол": "вакцина", "команды": "палата",
    "врач": "судья", "осмотр": "матч", "судья": "врач", "стадион": "клиника",
    "гола": "вакцины", "виза": "vaccine",
}


def demo_config(out_dir: str | Path, seed: int = 0, parallel: int = 8) -> RunConfig:
    """Write the bundled corpus into out_dir and return a ready config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus_path = out / "corpus.jsonl"
    with resources.as_file(
        resources.files("macroforge") / "demo_data" / "corpus.jsonl"
    ) as bundled:
        shutil.copyfile(bundled, corpus_path)
    return RunConfig(
        corpus=str(corpus_path),
        labels="sib200",
        backend="mock",
        strategy="dgcf",
        samples_per_instance=8,
        weights={"w_flip": 1.0, "w_aug": 1.0, "w_edit": 1.0, "w_align": 0.0},
        eligibility="soft_flip",
        seed=seed,
        out_dir=str(out),
        parallel=parallel,
        report_csv=True,
        mock={
            "classifier_weights": DEMO_CLASSIFIER_WEIGHTS,
            "word_map": DEMO_WORD_MAP,
            "copy_every": 4,
            "embed_dim": 64,
            "vocab_size": 50,
        },
    )


def run_demo(out_dir: str | Path, seed: int = 0, parallel: int = 8) -> dict:
    """Full pipeline over the bundled corpus; returns the manifest."""
    config = demo_config(out_dir, seed=seed, parallel=parallel)
    config.write(Path(out_dir) / "config.json")
    return run_pipeline(config, STAGES)
