"""Declarative run configuration and its canonical hash.

Configs are JSON documents. The hash covers every field that can change
pipeline output; artifact locations and the parallelism bound are excluded
because results are independent of both.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .core import FILL_STRATEGIES, LABEL_SPACES, LabelSpace, ScoreWeights
from .errors import ConfigError
from .pairing import PairingPolicy
from .scoring import WEIGHT_PRESETS
from .textnorm import stable_digest

BACKEND_KINDS = ("mock", "openai")
STRATEGIES = ("dgcf", "tbcf")

# fields that do not affect produced data
_NON_SEMANTIC = {"out_dir", "cache", "parallel", "report_csv"}


@dataclass
class RunConfig:
    corpus: str
    labels: object = "sib200"  # preset name or {"name":..., "labels":[...]}
    backend: str = "mock"
    endpoint: str = ""
    model: str = ""
    embedding_model: str = ""
    template: str | None = None
    answer_delimiter: str = "Counterfactual:"
    strategy: str = "dgcf"
    samples_per_instance: int = 8
    temperature: float = 0.7
    max_tokens: int = 512
    weights: object = "taxi1500-qwen3-4b"  # preset name or {"w_flip":...}
    eligibility: str = "soft_flip"
    copy_rule: bool = True
    target_fill: str = "second_best"  # for corpus rows without a target_label
    target_fixed: str | None = None
    anchor_lang: str = "en"
    edit_unit: str = "codepoint"
    ppl_aggregate: str = "arithmetic"
    seed: int = 0
    out_dir: str = "artifacts"
    cache: str | None = None
    parallel: int = 8
    report_csv: bool = False
    mock: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.backend not in BACKEND_KINDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.parallel < 1:
            raise ConfigError(f"parallel must be >= 1, got {self.parallel}")
        if self.samples_per_instance < 1:
            raise ConfigError("samples_per_instance must be >= 1")
        if self.backend == "openai" and not self.endpoint:
            raise ConfigError("openai backend needs an endpoint URL")
        if self.target_fill not in FILL_STRATEGIES:
            raise ConfigError(
                f"unknown target_fill {self.target_fill!r}; known: {FILL_STRATEGIES}"
            )
        labels = self.resolve_labels()
        if self.target_fill == "fixed":
            if not self.target_fixed:
                raise ConfigError("target_fill=fixed needs target_fixed")
            if self.target_fixed not in labels:
                raise ConfigError(f"target_fixed {self.target_fixed!r} not in label space")
        self.resolve_weights()
        self.pairing_policy()

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        return cls(**data)

    def check_paths(self) -> None:
        """Existence checks, separated from construction so configs can be
        built before their inputs (the demo writes both together)."""
        if not Path(self.corpus).exists():
            raise ConfigError(f"corpus file not found: {self.corpus}")
        if self.template is not None and not Path(self.template).exists():
            raise ConfigError(f"template file not found: {self.template}")

    def resolve_labels(self) -> LabelSpace:
        if isinstance(self.labels, str):
            if self.labels not in LABEL_SPACES:
                raise ConfigError(
                    f"unknown label-space preset {self.labels!r}; "
                    f"known: {sorted(LABEL_SPACES)}"
                )
            return LABEL_SPACES[self.labels]
        if isinstance(self.labels, dict):
            return LabelSpace(tuple(self.labels["labels"]), self.labels.get("name", "custom"))
        raise ConfigError("labels must be a preset name or {name, labels}")

    def resolve_weights(self) -> ScoreWeights:
        if isinstance(self.weights, str):
            if self.weights not in WEIGHT_PRESETS:
                raise ConfigError(
                    f"unknown weight preset {self.weights!r}; known: {sorted(WEIGHT_PRESETS)}"
                )
            return WEIGHT_PRESETS[self.weights]
        if isinstance(self.weights, dict):
            return ScoreWeights(**self.weights)
        raise ConfigError("weights must be a preset name or a {w_*} mapping")

    def pairing_policy(self) -> PairingPolicy:
        return PairingPolicy(eligibility=self.eligibility, copy_rule_enabled=self.copy_rule)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def canonical_dict(self) -> dict:
        """Semantic content of the config: file-path fields are replaced by
        digests of the referenced files, so relocating inputs (or the whole
        run directory) does not change the hash but editing them does."""
        data = {k: v for k, v in self.to_dict().items() if k not in _NON_SEMANTIC}
        try:
            data["corpus"] = stable_digest(Path(self.corpus).read_bytes())
            if self.template is not None:
                data["template"] = stable_digest(Path(self.template).read_bytes())
        except OSError as exc:
            raise ConfigError(f"cannot hash referenced file: {exc}") from None
        return data

    def config_hash(self) -> str:
        canonical = json.dumps(
            self.canonical_dict(), sort_keys=True, ensure_ascii=False, separators=(",", ":")
        )
        return stable_digest(canonical.encode("utf-8"))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
