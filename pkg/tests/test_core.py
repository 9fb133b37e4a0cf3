import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from macroforge.core import (
    LABEL_SPACES,
    Candidate,
    Instance,
    LabelSpace,
    PreferencePair,
    ScoredCandidate,
    ScoreWeights,
    corpus_record_to_instance,
    instance_to_record,
    read_jsonl,
    validate_corpus,
    write_jsonl,
)
from macroforge.errors import ConfigError


def _inst(**kw):
    base = dict(id="s1", lang="en", text="the match was great",
                predicted_label="Sports", target_label="Health")
    base.update(kw)
    return Instance(**base)


# -- label spaces ---------------------------------------------------------------

def test_label_space_basics():
    ls = LabelSpace(("A", "B", "C"), "t")
    assert "B" in ls and "D" not in ls
    assert ls.index("C") == 2
    assert list(ls) == ["A", "B", "C"]
    assert len(ls) == 3
    assert ls.joined() == "A, B, C"


def test_label_space_rejects_duplicates_and_singletons():
    with pytest.raises(ConfigError):
        LabelSpace(("A", "A"), "dup")
    with pytest.raises(ConfigError):
        LabelSpace(("A",), "one")


def test_topic_label_preset():
    assert LABEL_SPACES["sib200"].labels == (
        "Science/Technology", "Travel", "Politics", "Sports",
        "Health", "Entertainment", "Geography",
    )


def test_verse_label_preset():
    assert LABEL_SPACES["taxi1500"].labels == (
        "Recommendation", "Faith", "Description", "Sin", "Grace", "Violence",
    )


# -- instances -----------------------------------------------------------------

def test_valid_instance_has_no_problems(sib_labels):
    assert _inst().validate(sib_labels) == []


def test_instance_validation_catches_each_problem(sib_labels):
    assert "empty text" in _inst(text="  ").validate(sib_labels)
    assert any("not in label space" in p
               for p in _inst(predicted_label="Nope").validate(sib_labels))
    assert "target_label equals predicted_label" in _inst(
        target_label="Sports").validate(sib_labels)


def test_candidate_invariants():
    with pytest.raises(ValueError):
        Candidate("s1", "   ", "dg_cf", 0)
    with pytest.raises(ValueError):
        Candidate("s1", "text", "made_up", 0)
    with pytest.raises(ValueError):
        Candidate("s1", "text", "dg_cf", -1)


# -- weights ----------------------------------------------------------------------

def test_weights_reject_negative_and_all_zero():
    with pytest.raises(ConfigError):
        ScoreWeights(1.0, -0.5, 1.0, 0.0)
    with pytest.raises(ConfigError):
        ScoreWeights(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ConfigError):
        ScoreWeights(float("nan"), 1.0, 1.0, 0.0)


def test_weights_scaling_and_dict_form():
    w = ScoreWeights(1.0, 2.0, 1.0, 0.0)
    assert w.as_dict() == {"flip": 1.0, "aug": 2.0, "edit": 1.0, "align": 0.0}
    assert w.scaled(2.0) == ScoreWeights(2.0, 4.0, 2.0, 0.0)


# -- scored candidates and pairs -----------------------------------------------

def test_scored_candidate_components_skip_absent_parts():
    s = ScoredCandidate(Candidate("s1", "t", "dg_cf", 3), "Health",
                        flip=1.0, edit=0.5, total=1.5)
    assert s.sample_index == 3
    assert s.text == "t"
    assert s.components() == {"flip": 1.0, "edit": 0.5}


def test_pair_rejects_equal_sides():
    with pytest.raises(ValueError):
        PreferencePair("s1", "en", "p", chosen="same  text", rejected="same text")


# -- corpus validation -----------------------------------------------------------

def test_wellformed_corpus_has_no_findings(sib_labels):
    corpus = [_inst(), _inst(id="s2", lang="de", text="das Spiel war gut")]
    assert validate_corpus(corpus, sib_labels) == []


def test_self_target_finding_names_instance(sib_labels):
    corpus = [_inst(id="bad7", target_label="Sports")]
    findings = validate_corpus(corpus, sib_labels)
    assert len(findings) == 1
    assert findings[0]["id"] == "bad7"
    assert findings[0]["kind"] == "invariant"


def test_parallel_gold_mismatch_detected(sib_labels):
    corpus = [
        _inst(gold_label="Sports"),
        _inst(lang="de", text="anders", gold_label="Health"),
    ]
    findings = validate_corpus(corpus, sib_labels)
    assert len(findings) == 1
    assert findings[0]["kind"] == "parallel_mismatch"
    assert findings[0]["id"] == "s1"


def test_duplicate_id_lang_detected(sib_labels):
    findings = validate_corpus([_inst(), _inst()], sib_labels)
    assert [f["kind"] for f in findings] == ["duplicate"]


@given(st.permutations(range(4)))
def test_findings_are_order_independent(order):
    labels = LABEL_SPACES["sib200"]
    corpus = [
        _inst(),
        _inst(id="s2", target_label="Sports"),
        _inst(id="s3", gold_label="Travel"),
        _inst(id="s3", lang="ru", text="текст", gold_label="Health"),
    ]
    shuffled = [corpus[i] for i in order]
    assert validate_corpus(shuffled, labels) == validate_corpus(corpus, labels)


# -- record round-trips ------------------------------------------------------------

def test_record_round_trip_preserves_unknown_fields():
    rec = {"id": "s1", "lang": "en", "text": "t", "predicted_label": "A",
           "target_label": "B", "split": "dev", "weight": 0.5}
    inst = corpus_record_to_instance(rec)
    assert inst.extra == (("split", "dev"), ("weight", 0.5))
    back = instance_to_record(inst)
    assert back == rec


def test_jsonl_round_trip_skips_blank_lines(tmp_path):
    p = tmp_path / "rows.jsonl"
    rows = [{"a": 1}, {"b": "ü"}]
    assert write_jsonl(rows, p) == 2
    raw = p.read_text(encoding="utf-8")
    assert "ü" in raw  # no ascii escaping
    p.write_text(raw + "\n\n", encoding="utf-8")
    assert list(read_jsonl(p)) == rows


def test_write_jsonl_creates_parents(tmp_path):
    p = tmp_path / "deep" / "dir" / "rows.jsonl"
    write_jsonl([{"a": 1}], p)
    assert json.loads(p.read_text())["a"] == 1
