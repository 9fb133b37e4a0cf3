import pytest
from hypothesis import given
from hypothesis import strategies as st

from macroforge.backends.base import GenerationParams
from macroforge.backends.mocks import MockSubstitutionGenerator
from macroforge.core import Candidate, Instance, LabelSpace
from macroforge.errors import ConfigError, ParseFailure
from macroforge.sampling import (
    PromptTemplate,
    build_prompt,
    build_translate_prompt,
    dedup,
    default_template_body,
    parse_generation,
    sample_candidates,
    tbcf_candidate,
)

LABELS = LabelSpace(("Sports", "Health"), "sh")

INST = Instance(id="s1", lang="en", text="the match was great",
                predicted_label="Sports", target_label="Health")


# -- templates -----------------------------------------------------------------

def test_placeholder_substitution():
    t = PromptTemplate("t", "Flip {text} to {target_label}.", "ANSWER:")
    assert build_prompt(INST, t, LABELS) == "Flip the match was great to Health."


def test_labels_placeholder_joins_declared_order():
    t = PromptTemplate("t", "Pick from {labels}: {text} -> {target_label}", "A:")
    assert build_prompt(INST, t, LABELS).startswith("Pick from Sports, Health:")


def test_template_requires_text_and_target():
    with pytest.raises(ConfigError):
        PromptTemplate("t", "only {text} here", "A:")
    with pytest.raises(ConfigError):
        PromptTemplate("t", "only {target_label} here", "A:")
    with pytest.raises(ConfigError):
        PromptTemplate("t", "{text} {target_label}", "")


def test_injected_placeholder_is_detected():
    t = PromptTemplate("t", "{text} -> {target_label}", "A:")
    tricky = Instance(id="s2", lang="en", text="literal {text} marker",
                      predicted_label="Sports", target_label="Health")
    with pytest.raises(ConfigError):
        build_prompt(tricky, t, LABELS)


def test_bundled_templates_are_usable():
    body = default_template_body("dgcf")
    t = PromptTemplate("dgcf", body)
    prompt = build_prompt(INST, t, LABELS)
    assert "the match was great" in prompt
    assert "Health" in prompt
    assert "Counterfactual:" in prompt
    translate = build_translate_prompt("some text", "ru")
    assert "some text" in translate
    assert "Translation:" in translate


def test_template_load_from_file(tmp_path):
    p = tmp_path / "mine.txt"
    p.write_text("Custom {text} {target_label}\nREPLY:", encoding="utf-8")
    t = PromptTemplate.load(p, delimiter="REPLY:")
    assert t.name == "mine"
    assert t.answer_delimiter == "REPLY:"
    assert PromptTemplate.load(None).name == "dgcf"


# -- parsing ---------------------------------------------------------------------

T = PromptTemplate("t", "{text} {target_label}", "ANSWER:")


def test_parse_takes_text_after_delimiter():
    assert parse_generation("step1 thinking ANSWER: le chat noir", T) == "le chat noir"


def test_parse_takes_last_delimiter():
    raw = "the ANSWER: token marks answers. ANSWER: final text"
    assert parse_generation(raw, T) == "final text"


def test_parse_failure_without_delimiter():
    with pytest.raises(ParseFailure):
        parse_generation("no marker anywhere", T)


def test_parse_failure_on_empty_answer():
    with pytest.raises(ParseFailure):
        parse_generation("thinking ANSWER:   ", T)


@given(st.text(min_size=1, max_size=60).filter(
    lambda s: "ANSWER:" not in s and s.strip() == s and s.strip()))
def test_parse_round_trip_recovers_payload(payload):
    import unicodedata
    raw = f"reasoning about it. ANSWER: {payload}"
    assert parse_generation(raw, T) == unicodedata.normalize("NFC", payload)


# -- sampling ----------------------------------------------------------------------

GEN = MockSubstitutionGenerator(word_map={"match": "checkup", "great": "routine"},
                                source_marker="Original text:",
                                delimiter="Counterfactual:")

DGCF = PromptTemplate("d", "Labels: {labels}\nTarget: {target_label}\n"
                           "Original text: {text}\nCounterfactual:?", "Counterfactual:")


def test_sample_candidates_indices_follow_generation_order():
    r = sample_candidates(INST, 4, DGCF, LABELS, GEN)
    assert [c.sample_index for c in r.candidates] == [0, 1, 2, 3]
    assert all(c.instance_id == "s1" for c in r.candidates)
    assert all(c.source == "dg_cf" for c in r.candidates)
    assert r.candidates[0].text == "the checkup was great"
    assert r.candidates[1].text == "the match was routine"
    assert r.failures == []


def test_unparseable_generations_become_failures():
    silent = MockSubstitutionGenerator(word_map={"match": "checkup"},
                                       emit_delimiter=False)
    r = sample_candidates(INST, 4, DGCF, LABELS, silent)
    assert r.candidates == []
    assert len(r.failures) == 4
    assert all(f["stage"] == "sample" for f in r.failures)
    assert [f["sample_index"] for f in r.failures] == [0, 1, 2, 3]


def test_sample_count_capped_at_requested():
    class Chatty:
        def generate(self, prompt, params):
            return [f"x Counterfactual: v{i}" for i in range(params.n_samples + 3)]

    r = sample_candidates(INST, 2, DGCF, LABELS, Chatty())
    assert len(r.candidates) == 2


def test_sample_rejects_nonpositive_t():
    with pytest.raises(ConfigError):
        sample_candidates(INST, 0, DGCF, LABELS, GEN)


# -- two-stage generation ------------------------------------------------------------

RU = Instance(id="s1", lang="ru", text="матч был великолепен",
              predicted_label="Sports", target_label="Health")
EN_TWIN = INST


def test_two_stage_candidate_translates_the_english_flip():
    gen = MockSubstitutionGenerator(
        word_map={"match": "checkup"},
        translation_map={"the": "этот", "checkup": "осмотр", "was": "был",
                         "great": "отличный"},
    )
    cand = tbcf_candidate(RU, EN_TWIN, DGCF, LABELS, gen)
    assert cand.text == "этот осмотр был отличный"
    assert cand.source == "tb_cf"
    assert cand.instance_id == "s1"


def test_twin_must_share_id_and_be_english():
    with pytest.raises(ValueError):
        tbcf_candidate(RU, Instance(id="other", lang="en", text="x",
                                    predicted_label="Sports", target_label="Health"),
                       DGCF, LABELS, GEN)
    with pytest.raises(ValueError):
        tbcf_candidate(RU, Instance(id="s1", lang="de", text="x",
                                    predicted_label="Sports", target_label="Health"),
                       DGCF, LABELS, GEN)


def test_stage_one_failure_short_circuits():
    calls = []

    class FailsFirst:
        def generate(self, prompt, params):
            calls.append(prompt)
            return ["no delimiter in this output"]

    with pytest.raises(ParseFailure):
        tbcf_candidate(RU, EN_TWIN, DGCF, LABELS, FailsFirst())
    assert len(calls) == 1  # the translation request never went out


# -- dedup -----------------------------------------------------------------------------

def _cands(*texts):
    return [Candidate("s1", t, "dg_cf", i) for i, t in enumerate(texts)]


def test_dedup_keeps_first_occurrence():
    out = dedup(_cands("a b", "c d", "a b"))
    assert [c.text for c in out] == ["a b", "c d"]
    assert [c.sample_index for c in out] == [0, 1]


def test_dedup_treats_whitespace_variants_as_equal():
    out = dedup(_cands("a b", "a  b "))
    assert len(out) == 1
    assert out[0].sample_index == 0


def test_dedup_leaves_unique_lists_alone():
    cands = _cands("a", "b", "c")
    assert dedup(cands) == cands


def test_dedup_rejects_mixed_instances():
    with pytest.raises(ValueError):
        dedup([Candidate("s1", "a", "dg_cf", 0), Candidate("s2", "a", "dg_cf", 0)])


@given(st.lists(st.sampled_from(["x", "y", "x ", " y", "z z", "z  z"]), max_size=8))
def test_dedup_is_idempotent(texts):
    cands = _cands(*texts)
    once = dedup(cands)
    assert dedup(once) == once
    # output is a subsequence of input
    it = iter(cands)
    assert all(c in it for c in once)
