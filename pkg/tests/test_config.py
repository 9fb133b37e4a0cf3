import json

import pytest

from macroforge.config import RunConfig
from macroforge.core import LabelSpace, ScoreWeights
from macroforge.errors import ConfigError


def write_corpus(path, payload=b'{"id":"a","lang":"en","text":"t","label":"Sports"}\n'):
    path.write_bytes(payload)
    return str(path)


@pytest.fixture
def corpus(tmp_path):
    return write_corpus(tmp_path / "corpus.jsonl")


# -- construction -----------------------------------------------------------------

def test_defaults_construct(corpus):
    cfg = RunConfig(corpus=corpus)
    assert cfg.backend == "mock"
    assert cfg.samples_per_instance == 8
    assert cfg.resolve_labels().task_name == "sib200"
    assert cfg.pairing_policy().eligibility == "soft_flip"


@pytest.mark.parametrize("field,value", [
    ("backend", "vllm"),
    ("strategy", "freeform"),
    ("parallel", 0),
    ("samples_per_instance", 0),
    ("target_fill", "nearest"),
    ("eligibility", "always"),
])
def test_bad_field_values_rejected(corpus, field, value):
    with pytest.raises(ConfigError):
        RunConfig(corpus=corpus, **{field: value})


def test_openai_backend_needs_endpoint(corpus):
    with pytest.raises(ConfigError, match="endpoint"):
        RunConfig(corpus=corpus, backend="openai")
    RunConfig(corpus=corpus, backend="openai", endpoint="http://localhost:8000/v1")


def test_fixed_fill_needs_valid_label(corpus):
    with pytest.raises(ConfigError, match="target_fixed"):
        RunConfig(corpus=corpus, target_fill="fixed")
    with pytest.raises(ConfigError, match="label space"):
        RunConfig(corpus=corpus, target_fill="fixed", target_fixed="Cooking")
    cfg = RunConfig(corpus=corpus, target_fill="fixed", target_fixed="Health")
    assert cfg.target_fixed == "Health"


# -- label and weight resolution -------------------------------------------------------

def test_resolve_labels_presets(corpus):
    sib = RunConfig(corpus=corpus, labels="sib200").resolve_labels()
    taxi = RunConfig(corpus=corpus, labels="taxi1500").resolve_labels()
    assert len(sib) == 7 and len(taxi) == 6


def test_resolve_labels_custom_mapping(corpus):
    cfg = RunConfig(corpus=corpus, labels={"name": "tiny", "labels": ["A", "B"]})
    assert cfg.resolve_labels() == LabelSpace(("A", "B"), "tiny")


def test_resolve_labels_rejects_unknown(corpus):
    with pytest.raises(ConfigError, match="preset"):
        RunConfig(corpus=corpus, labels="agnews")
    with pytest.raises(ConfigError):
        RunConfig(corpus=corpus, labels=7)


def test_resolve_weights_preset_and_custom(corpus):
    preset = RunConfig(corpus=corpus, weights="sib200-qwen3-8b").resolve_weights()
    assert preset == ScoreWeights(1.0, 2.0, 1.0, 0.0)
    custom = RunConfig(
        corpus=corpus,
        weights={"w_flip": 1.0, "w_aug": 0.5, "w_edit": 1.0, "w_align": 0.0},
    ).resolve_weights()
    assert custom == ScoreWeights(1.0, 0.5, 1.0, 0.0)


def test_resolve_weights_rejects_unknown(corpus):
    with pytest.raises(ConfigError, match="preset"):
        RunConfig(corpus=corpus, weights="sib200-llama")
    with pytest.raises(ConfigError):
        RunConfig(corpus=corpus, weights=[1, 1, 1, 0])


# -- file io -----------------------------------------------------------------------------

def test_write_then_from_file_round_trips(tmp_path, corpus):
    cfg = RunConfig(corpus=corpus, seed=7, weights="sib200-gemma3-4b",
                    mock={"copy_every": 4})
    path = tmp_path / "config.json"
    cfg.write(path)
    assert RunConfig.from_file(path) == cfg


def test_from_file_rejects_unknown_fields(tmp_path, corpus):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"corpus": corpus, "spice_level": 11}))
    with pytest.raises(ConfigError, match="spice_level"):
        RunConfig.from_file(path)


def test_from_file_rejects_bad_json_and_missing_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        RunConfig.from_file(path)
    with pytest.raises(ConfigError, match="not found"):
        RunConfig.from_file(tmp_path / "absent.json")


def test_check_paths_reports_missing_inputs(tmp_path, corpus):
    RunConfig(corpus=corpus).check_paths()
    with pytest.raises(ConfigError, match="corpus"):
        RunConfig(corpus=str(tmp_path / "gone.jsonl")).check_paths()
    with pytest.raises(ConfigError, match="template"):
        RunConfig(corpus=corpus, template=str(tmp_path / "gone.txt")).check_paths()


# -- hashing ------------------------------------------------------------------------------

def test_hash_depends_on_corpus_content_not_location(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = write_corpus(tmp_path / "a" / "corpus.jsonl")
    second = write_corpus(tmp_path / "b" / "renamed.jsonl")
    assert RunConfig(corpus=first).config_hash() == RunConfig(corpus=second).config_hash()


def test_hash_changes_when_corpus_content_changes(tmp_path):
    first = write_corpus(tmp_path / "a.jsonl")
    second = write_corpus(tmp_path / "b.jsonl",
                          b'{"id":"a","lang":"en","text":"u","label":"Sports"}\n')
    assert RunConfig(corpus=first).config_hash() != RunConfig(corpus=second).config_hash()


def test_hash_ignores_output_and_parallelism_fields(corpus):
    base = RunConfig(corpus=corpus)
    moved = RunConfig(corpus=corpus, out_dir="elsewhere", parallel=1,
                      cache="cache.jsonl", report_csv=True)
    assert base.config_hash() == moved.config_hash()


def test_hash_covers_semantic_fields(corpus):
    base = RunConfig(corpus=corpus)
    assert base.config_hash() != RunConfig(corpus=corpus, seed=1).config_hash()
    assert base.config_hash() != RunConfig(corpus=corpus, temperature=0.1).config_hash()


def test_hash_covers_template_content(tmp_path, corpus):
    t1 = tmp_path / "t1.txt"
    t2 = tmp_path / "t2.txt"
    t1.write_text("Flip {text} to {target_label}.\nCounterfactual:")
    t2.write_text("Flip {text} to {target_label}.\nCounterfactual:")
    h1 = RunConfig(corpus=corpus, template=str(t1)).config_hash()
    h2 = RunConfig(corpus=corpus, template=str(t2)).config_hash()
    assert h1 == h2
    t2.write_text("Rewrite {text} as {target_label}.\nCounterfactual:")
    assert RunConfig(corpus=corpus, template=str(t2)).config_hash() != h1


def test_hash_needs_readable_corpus(tmp_path):
    cfg = RunConfig(corpus=str(tmp_path / "missing.jsonl"))
    with pytest.raises(ConfigError, match="hash"):
        cfg.config_hash()
