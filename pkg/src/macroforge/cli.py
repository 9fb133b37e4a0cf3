"""Command-line entry point exposing the pipeline as subcommands.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Failures print one machine-readable JSON error record to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import random
import sys
from pathlib import Path

from .config import RunConfig
from .core import read_jsonl
from .demo import run_demo
from .dpomath import PolicyLogProbs, bt_loss, dpo_loss, implied_reward_delta, softplus
from .errors import ConfigError, MacroforgeError
from .evaluation import PPL_AGGREGATES, build_report, record_from_json
from .pipeline import run_pipeline

log = logging.getLogger("macroforge")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="run configuration JSON file")
    parser.add_argument("--cache", help="response cache file (overrides config)")
    parser.add_argument("--parallel", type=int, help="worker bound (overrides config)")
    parser.add_argument("--seed", type=int, help="run seed (overrides config)")


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("this command needs --config FILE")
    config = RunConfig.from_file(args.config)
    overrides = {}
    if args.cache is not None:
        overrides["cache"] = args.cache
    if args.parallel is not None:
        overrides["parallel"] = args.parallel
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _cmd_stage(args, stage: str, emit_which=("dpo", "sft")) -> int:
    manifest = run_pipeline(_load_config(args), [stage], emit_which=emit_which)
    print(json.dumps(manifest["stages"], indent=2, sort_keys=True))
    return 0


def _cmd_eval(args) -> int:
    if args.records:
        records = [record_from_json(r) for r in read_jsonl(args.records)]
        report = build_report(
            records, ppl_aggregate=args.ppl_aggregate, edit_unit=args.edit_unit
        )
        out = Path(args.report or "report.json")
        out.write_text(
            json.dumps(report.to_json_dict(), indent=2, sort_keys=True, ensure_ascii=False)
            + "\n",
            encoding="utf-8",
        )
        if args.csv:
            report.write_csv(args.csv)
        for lang in sorted(report.per_language):
            cells = report.per_language[lang]
            shown = ", ".join(
                f"{m}={cells[m]['value']:.4f}"
                for m in ("slfr", "hlfr", "ts")
                if cells[m]["available"]
            )
            print(f"{lang}: n={cells['slfr']['count']}, {shown}")
        print(f"report written to {out}")
        return 0
    return _cmd_stage(args, "eval")


def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    if not ok:
        failures.append(name)


def _cmd_check_dpo(args) -> int:
    """Numeric checks of the preference-loss identities on random inputs."""
    rng = random.Random(args.check_seed)
    failures: list = []

    zero = PolicyLogProbs(-3.0, -4.0, -3.0, -4.0, beta=0.2)
    err = abs(dpo_loss(zero) - math.log(2))
    _check("zero-margin loss is ln 2", err <= 1e-12, f"|err| = {err:.3e}", failures)

    worst = 0.0
    for _ in range(args.n):
        p = PolicyLogProbs(
            logp_chosen_policy=rng.uniform(-30, 0),
            logp_rejected_policy=rng.uniform(-30, 0),
            logp_chosen_ref=rng.uniform(-30, 0),
            logp_rejected_ref=rng.uniform(-30, 0),
            beta=rng.uniform(0.05, 2.0),
        )
        direct = dpo_loss(p)
        composed = bt_loss(
            implied_reward_delta(p.logp_chosen_policy, p.logp_chosen_ref, p.beta),
            implied_reward_delta(p.logp_rejected_policy, p.logp_rejected_ref, p.beta),
        )
        rel = abs(direct - composed) / max(abs(direct), abs(composed), 1e-300)
        worst = max(worst, rel)
    _check(
        f"loss equals reward-gap form on {args.n} inputs",
        worst <= 1e-12,
        f"max rel err = {worst:.3e}",
        failures,
    )

    grid = [(-30.0 + 30.0 * i / 100.0) for i in range(101)]
    losses = [
        dpo_loss(PolicyLogProbs(x, -5.0, -5.0, -5.0, beta=0.2)) for x in grid
    ]
    ok = all(a > b for a, b in zip(losses, losses[1:]))
    _check("strictly decreasing in chosen logprob", ok, "101-point grid", failures)

    losses = [
        dpo_loss(PolicyLogProbs(-5.0, x, -5.0, -5.0, beta=0.2)) for x in grid
    ]
    ok = all(a < b for a, b in zip(losses, losses[1:]))
    _check("strictly increasing in rejected logprob", ok, "101-point grid", failures)

    sp = [softplus(-40.0 + 80.0 * i / 1000.0) for i in range(1001)]
    ok = all(a < b for a, b in zip(sp, sp[1:]))
    _check("softplus strictly increasing", ok, "1001 points on [-40, 40]", failures)

    return 1 if failures else 0


def _cmd_demo(args) -> int:
    manifest = run_demo(args.out, seed=args.seed or 0, parallel=args.parallel or 8)
    report = json.loads((Path(args.out) / "report.json").read_text(encoding="utf-8"))
    print(f"demo artifacts in {args.out}/")
    print(f"config hash {manifest['config_hash'][:12]}")
    for name, info in sorted(manifest["stages"].items()):
        print(f"  {name}: {info['records']} records, {info['requests']} requests")
    for lang in sorted(report["per_language"]):
        cells = report["per_language"][lang]
        print(
            f"  {lang}: slfr={cells['slfr']['value']:.3f} "
            f"hlfr={cells['hlfr']['value']:.3f} "
            f"copy={cells['copy_paste_rate']['value']:.3f} "
            f"confusion={cells['language_confusion_rate']['value']:.3f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macroforge",
        description="Construct preference-training data from self-generated "
        "counterfactual explanations, and evaluate them.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, stage in (
        ("sample", "sample"),
        ("score", "score"),
        ("pair", "pair"),
    ):
        p = sub.add_parser(name, help=f"run the {stage} stage")
        _add_common(p)
        p.set_defaults(func=lambda a, s=stage: _cmd_stage(a, s))

    p = sub.add_parser("emit-dpo", help="write the preference-pair dataset")
    _add_common(p)
    p.set_defaults(func=lambda a: _cmd_stage(a, "emit", emit_which=("dpo",)))

    p = sub.add_parser("emit-sft", help="write the preferred-answers dataset")
    _add_common(p)
    p.set_defaults(func=lambda a: _cmd_stage(a, "emit", emit_which=("sft",)))

    p = sub.add_parser("eval", help="compute metrics over generation records")
    _add_common(p)
    p.add_argument("--records", help="records JSONL (standalone mode)")
    p.add_argument("--report", help="report JSON output path")
    p.add_argument("--csv", help="also write a CSV flattening")
    p.add_argument("--ppl-aggregate", choices=PPL_AGGREGATES, default="arithmetic")
    p.add_argument("--edit-unit", choices=("codepoint", "grapheme"), default="codepoint")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("check-dpo", help="verify the preference-loss identities")
    p.add_argument("--n", type=int, default=10000, help="random inputs to test")
    p.add_argument("--check-seed", type=int, default=0)
    p.set_defaults(func=_cmd_check_dpo)

    p = sub.add_parser("demo", help="offline end-to-end run on the bundled corpus")
    p.add_argument("--out", default="demo_run")
    p.add_argument("--parallel", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 2
    except MacroforgeError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
