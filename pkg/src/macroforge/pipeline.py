"""Staged pipeline: sample -> score -> pair -> emit -> eval.

Each stage reads its predecessor's JSON-lines artifact and writes its own,
so runs resume from any point and every intermediate is inspectable. All
artifacts are deterministic: instances are processed in bounded parallel but
assembled in (lang, id) order, and per-instance seeds derive from the run
seed by stable hashing, independent of execution order.
"""

from __future__ import annotations

import json
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backends.base import GenerationParams
from .backends.cache import ResponseCache
from .backends.mocks import (
    BagOfWordsClassifier,
    HashEmbedder,
    MockSubstitutionGenerator,
    MockTranslationScorer,
    ScriptLanguageIdentifier,
    UniformLM,
)
from .backends.openai_client import OpenAIClient
from .config import RunConfig
from .core import (
    Candidate,
    Instance,
    ScoredCandidate,
    corpus_record_to_instance,
    read_jsonl,
    validate_corpus,
    write_jsonl,
)
from .errors import ConfigError, LogprobsUnavailableError, ParseFailure
from .evaluation import GenerationRecord, build_report, record_to_json
from .pairing import build_dpo_dataset, build_sft_dataset, pair_to_record, interleave_round_robin
from .sampling import PromptTemplate, dedup, sample_candidates, tbcf_candidate
from .scoring import score_candidate
from .textnorm import stable_digest, stable_seed

STAGES = ("sample", "score", "pair", "emit", "eval")

ARTIFACTS = {
    "candidates": "candidates.jsonl",
    "sample_failures": "sample_failures.jsonl",
    "scored": "scored.jsonl",
    "pairs": "pairs.jsonl",
    "dpo": "dpo.jsonl",
    "sft": "sft.jsonl",
    "records": "records.jsonl",
    "report": "report.json",
}

# below this identification confidence a text counts as not in any language
CONFUSION_CONFIDENCE = 0.5


@dataclass
class BackendSet:
    classifier: object
    generator: object
    embedder: object
    logprob_scorer: object | None
    translator: object | None
    identifier: object | None
    clients: tuple = ()

    def requests_sent(self) -> int:
        return sum(getattr(c, "requests_sent", 0) for c in self.clients)


def build_backends(config: RunConfig, cache: ResponseCache) -> BackendSet:
    if config.backend == "mock":
        m = config.mock
        return BackendSet(
            classifier=BagOfWordsClassifier(
                m.get("classifier_weights", {}), m.get("expose_scores", True)
            ),
            generator=MockSubstitutionGenerator(
                word_map=m.get("word_map", {}),
                translation_map=m.get("translation_map", {}),
                source_marker=m.get("source_marker", "Original text:"),
                delimiter=config.answer_delimiter,
                copy_every=m.get("copy_every"),
            ),
            embedder=HashEmbedder(m.get("embed_dim", 64)),
            logprob_scorer=UniformLM(m.get("vocab_size", 50)),
            translator=MockTranslationScorer(
                m.get("token_probs", {}), m.get("default_prob", 0.5)
            ),
            identifier=ScriptLanguageIdentifier(),
        )
    client = OpenAIClient(
        config.endpoint,
        config.model,
        embedding_model=config.embedding_model or None,
        cache=cache,
        max_in_flight=config.parallel,
    )
    # no wire protocol here offers teacher-forced translation scoring, so the
    # alignment component needs a custom TranslationScorer (or w_align = 0)
    return BackendSet(
        classifier=client,
        generator=client,
        embedder=client,
        logprob_scorer=client,
        translator=None,
        identifier=ScriptLanguageIdentifier(),
        clients=(client,),
    )


def _fill_target(config: RunConfig, row: dict, result, labels) -> str:
    predicted = row["predicted_label"]
    if config.target_fill == "fixed":
        if config.target_fixed == predicted:
            raise ConfigError(
                f"instance {row['id']!r}: fixed target equals its predicted label"
            )
        return config.target_fixed
    if config.target_fill == "second_best":
        if result is None or not result.scores_available:
            raise ConfigError(
                "second_best target fill needs classifier scores "
                f"(instance {row['id']!r})"
            )
        others = [l for l in labels if l != predicted]
        return max(others, key=lambda l: (result.scores[l], -labels.index(l)))
    rng = random.Random(stable_seed(config.seed, "target_fill", row["lang"], row["id"]))
    return rng.choice([l for l in labels if l != predicted])


def load_corpus(config: RunConfig, classifier, labels) -> list[Instance]:
    """Corpus rows as Instances, sorted by (lang, id). Missing predictions
    are filled by the classifier and missing targets by the configured
    strategy; a corpus with validation findings aborts the run."""
    instances = []
    for row in read_jsonl(config.corpus):
        row = dict(row)
        result = None
        if not row.get("predicted_label") or not row.get("target_label"):
            result = classifier.classify(str(row["text"]), labels)
        if not row.get("predicted_label"):
            row["predicted_label"] = result.predicted_label
        if not row.get("target_label"):
            row["target_label"] = _fill_target(config, row, result, labels)
            row["target_fill"] = config.target_fill
        instances.append(corpus_record_to_instance(row))
    findings = validate_corpus(instances, labels)
    if findings:
        head = "; ".join(
            f"{f['kind']} id={f['id']} lang={f['lang']}: {f['detail']}" for f in findings[:5]
        )
        raise ConfigError(f"corpus has {len(findings)} validation finding(s): {head}")
    return sorted(instances, key=lambda i: (i.lang, i.id))


def _parallel_map(fn, items, workers: int) -> list:
    """Map preserving input order; deterministic regardless of worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


class Pipeline:
    """One configured run over one artifact directory."""

    def __init__(self, config: RunConfig):
        config.check_paths()
        self.config = config
        self.labels = config.resolve_labels()
        self.weights = config.resolve_weights()
        self.policy = config.pairing_policy()
        self.template = PromptTemplate.load(config.template, config.answer_delimiter)
        self.out_dir = Path(config.out_dir)
        self.cache = ResponseCache(config.cache)
        self.backends = build_backends(config, self.cache)
        self._corpus: list[Instance] | None = None

    # -- shared plumbing -----------------------------------------------------

    def path(self, artifact: str) -> Path:
        return self.out_dir / ARTIFACTS[artifact]

    def corpus(self) -> list[Instance]:
        if self._corpus is None:
            self._corpus = load_corpus(self.config, self.backends.classifier, self.labels)
        return self._corpus

    def _require_artifact(self, artifact: str, needed_by: str) -> Path:
        p = self.path(artifact)
        if not p.exists():
            raise ConfigError(
                f"stage {needed_by!r} needs {p} from an earlier stage; run that stage first"
            )
        return p

    def _params_for(self, inst: Instance) -> GenerationParams:
        return GenerationParams(
            temperature=self.config.temperature,
            max_tokens=self.config.max_tokens,
            seed=stable_seed(self.config.seed, "sample", inst.lang, inst.id),
            n_samples=self.config.samples_per_instance,
        )

    # -- stages ----------------------------------------------------------------

    def stage_sample(self) -> dict:
        corpus = self.corpus()
        T = self.config.samples_per_instance
        twins = {i.id: i for i in corpus if i.lang == self.config.anchor_lang}

        def run_one(inst: Instance):
            if self.config.strategy == "dgcf" or inst.lang == self.config.anchor_lang:
                return sample_candidates(
                    inst, T, self.template, self.labels, self.backends.generator,
                    self._params_for(inst),
                )
            twin = twins.get(inst.id)
            if twin is None:
                return None, [
                    {
                        "instance_id": inst.id,
                        "lang": inst.lang,
                        "sample_index": 0,
                        "stage": "sample",
                        "reason": f"no {self.config.anchor_lang} twin for tb_cf",
                    }
                ]
            candidates, failures = [], []
            for i in range(T):
                try:
                    cand = tbcf_candidate(
                        inst, twin, self.template, self.labels, self.backends.generator,
                        self._params_for(inst),
                    )
                    candidates.append(
                        Candidate(inst.id, cand.text, cand.source, sample_index=i)
                    )
                except ParseFailure as exc:
                    failures.append(
                        {
                            "instance_id": inst.id,
                            "lang": inst.lang,
                            "sample_index": i,
                            "stage": "sample",
                            "reason": str(exc),
                        }
                    )
            return candidates, failures

        results = _parallel_map(run_one, corpus, self.config.parallel)
        rows, failure_rows = [], []
        for inst, result in zip(corpus, results):
            if isinstance(result, tuple):
                candidates, failures = result
            else:
                candidates, failures = result.candidates, result.failures
            for c in candidates or []:
                rows.append(
                    {
                        "id": c.instance_id,
                        "lang": inst.lang,
                        "text": c.text,
                        "source": c.source,
                        "sample_index": c.sample_index,
                    }
                )
            failure_rows.extend(failures)
        n = write_jsonl(rows, self.path("candidates"))
        write_jsonl(failure_rows, self.path("sample_failures"))
        return {"records": n, "failures": len(failure_rows)}

    def _load_scored(self, needed_by: str) -> dict:
        """scored.jsonl rows -> (id, lang) -> [ScoredCandidate], file order."""
        by_key: dict = {}
        for row in read_jsonl(self._require_artifact("scored", needed_by)):
            cand = Candidate(
                instance_id=row["id"],
                text=row["text"],
                source=row["source"],
                sample_index=row["sample_index"],
            )
            by_key.setdefault((row["id"], row["lang"]), []).append(
                ScoredCandidate(
                    candidate=cand,
                    new_prediction=row["new_prediction"],
                    flip=row["flip"],
                    edit=row["edit"],
                    aug=row.get("aug"),
                    align=row.get("align"),
                    total=row["total"],
                )
            )
        return by_key

    def stage_score(self) -> dict:
        corpus = self.corpus()
        self._require_artifact("candidates", "score")
        grouped: dict = {}
        for row in read_jsonl(self.path("candidates")):
            grouped.setdefault((row["id"], row["lang"]), []).append(
                Candidate(row["id"], row["text"], row["source"], row["sample_index"])
            )
        align_on = self.weights.w_align > 0
        if align_on and self.backends.translator is None:
            raise ConfigError(
                "w_align > 0 but this backend has no translation scorer; set w_align to 0"
            )

        anchors: dict = {}
        anchor_lang = self.config.anchor_lang

        def score_instance(inst: Instance) -> list[ScoredCandidate]:
            cands = dedup(grouped.get((inst.id, inst.lang), []))
            if not cands:
                return []
            original = self.backends.classifier.classify(inst.text, self.labels)
            return [
                score_candidate(
                    inst,
                    c,
                    self.weights,
                    self.backends.classifier,
                    self.labels,
                    original_result=original,
                    translation_scorer=self.backends.translator,
                    anchor_text=anchors.get(inst.id) if inst.lang != anchor_lang else None,
                    edit_unit=self.config.edit_unit,
                )
                for c in cands
            ]

        anchor_insts = [i for i in corpus if i.lang == anchor_lang]
        other_insts = [i for i in corpus if i.lang != anchor_lang]
        # anchors first: their best candidates seed the alignment component
        anchor_scored = _parallel_map(score_instance, anchor_insts, self.config.parallel)
        if align_on:
            for inst, scored in zip(anchor_insts, anchor_scored):
                if scored:
                    best = max(scored, key=lambda s: (s.total, -s.sample_index))
                    anchors[inst.id] = best.text
        other_scored = _parallel_map(score_instance, other_insts, self.config.parallel)

        rows = []
        for inst, scored in sorted(
            zip(anchor_insts + other_insts, anchor_scored + other_scored),
            key=lambda pair: (pair[0].lang, pair[0].id),
        ):
            for s in scored:
                row = {
                    "id": inst.id,
                    "lang": inst.lang,
                    "text": s.text,
                    "source": s.candidate.source,
                    "sample_index": s.sample_index,
                    "new_prediction": s.new_prediction,
                    "flip": s.flip,
                    "edit": s.edit,
                    "total": s.total,
                }
                if s.aug is not None:
                    row["aug"] = s.aug
                if s.align is not None:
                    row["align"] = s.align
                rows.append(row)
        n = write_jsonl(rows, self.path("scored"))
        return {"records": n}

    def stage_pair(self) -> dict:
        corpus = self.corpus()
        pairs = build_dpo_dataset(
            corpus, self._load_scored("pair"), self.policy, self.template, self.labels
        )
        n = write_jsonl([pair_to_record(p) for p in pairs], self.path("pairs"))
        return {"records": n}

    def stage_emit(self, which=("dpo", "sft")) -> dict:
        rows = list(read_jsonl(self._require_artifact("pairs", "emit")))
        by_lang: dict = {}
        for row in rows:
            by_lang.setdefault(row["lang"], []).append(row)
        interleaved = interleave_round_robin(by_lang)
        counts = {}
        if "dpo" in which:
            counts["dpo"] = write_jsonl(interleaved, self.path("dpo"))
        if "sft" in which:
            sft_rows = [
                {"id": r["id"], "lang": r["lang"], "prompt": r["prompt"], "chosen": r["chosen"]}
                for r in interleaved
            ]
            counts["sft"] = write_jsonl(sft_rows, self.path("sft"))
        return {"records": sum(counts.values()), **counts}

    def stage_eval(self) -> dict:
        corpus = self.corpus()
        scored_by_key = self._load_scored("eval")

        def build_record(inst: Instance) -> GenerationRecord | None:
            scored = scored_by_key.get((inst.id, inst.lang), [])
            if not scored:
                return None
            top = max(scored, key=lambda s: (s.total, -s.sample_index))
            logprobs = None
            if self.backends.logprob_scorer is not None:
                try:
                    logprobs = tuple(self.backends.logprob_scorer.token_logprobs(top.text))
                except LogprobsUnavailableError:
                    logprobs = None
            identified = None
            if self.backends.identifier is not None:
                code, confidence = self.backends.identifier.identify_language(top.text)
                identified = code if confidence >= CONFUSION_CONFIDENCE else "und"
            return GenerationRecord(
                id=inst.id,
                lang=inst.lang,
                original_text=inst.text,
                original_prediction=inst.predicted_label,
                target_label=inst.target_label,
                counterfactual_text=top.text,
                counterfactual_prediction=top.new_prediction,
                embedding_original=self.backends.embedder.embed(inst.text),
                embedding_counterfactual=self.backends.embedder.embed(top.text),
                token_logprobs=logprobs,
                identified_lang=identified,
            )

        built = _parallel_map(build_record, corpus, self.config.parallel)
        records = [r for r in built if r is not None]
        n = write_jsonl([record_to_json(r) for r in records], self.path("records"))
        report = build_report(
            records,
            ppl_aggregate=self.config.ppl_aggregate,
            edit_unit=self.config.edit_unit,
        )
        self.path("report").write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True, ensure_ascii=False)
            + "\n",
            encoding="utf-8",
        )
        if self.config.report_csv:
            report.write_csv(self.out_dir / "report.csv")
        return {"records": n}


def run_pipeline(config: RunConfig, stages, emit_which=("dpo", "sft")) -> dict:
    """Execute the requested stages in canonical order and write the manifest.

    The manifest holds only deterministic data (config hash, request and
    record counts, artifact digests); wall-clock timings go to timings.json
    so manifests from identical runs stay byte-identical.
    """
    requested = list(stages)
    unknown = [s for s in requested if s not in STAGES]
    if unknown:
        raise ConfigError(f"unknown stages {unknown}; valid: {list(STAGES)}")
    ordered = [s for s in STAGES if s in requested]

    pipe = Pipeline(config)
    pipe.out_dir.mkdir(parents=True, exist_ok=True)
    runners = {
        "sample": pipe.stage_sample,
        "score": pipe.stage_score,
        "pair": pipe.stage_pair,
        "emit": lambda: pipe.stage_emit(emit_which),
        "eval": pipe.stage_eval,
    }

    stage_info: dict = {}
    timings: dict = {}
    for name in ordered:
        before = pipe.backends.requests_sent()
        started = time.perf_counter()
        result = runners[name]()
        timings[name] = time.perf_counter() - started
        stage_info[name] = dict(result, requests=pipe.backends.requests_sent() - before)

    artifacts = {}
    for key in ARTIFACTS:
        p = pipe.path(key)
        if p.exists():
            artifacts[ARTIFACTS[key]] = stable_digest(p.read_bytes())

    manifest = {
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "stages": stage_info,
        "artifacts": artifacts,
    }
    (pipe.out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    (pipe.out_dir / "timings.json").write_text(
        json.dumps({"stages": timings, "total": sum(timings.values())}, indent=2) + "\n",
        encoding="utf-8",
    )
    return manifest
