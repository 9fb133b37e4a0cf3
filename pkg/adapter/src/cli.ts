#!/usr/bin/env node
/**
 * Command: adapter train
 *
 * Validates an emitted preference dataset, resolves the training
 * configuration, and either prints the plan (--dry-run) or hands off to
 * the external framework. Exit codes: 0 success, 1 data or environment
 * failure, 2 usage error; a framework exit code is passed through.
 */
import { realpathSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";
import { ConfigError, formatConfig, parseOverrides, resolveConfig } from "./config.js";
import { formatStats, loadDataset, type TrainMode } from "./schema.js";
import { buildCommand, execute, FrameworkError } from "./train.js";

export const USAGE =
  "usage: adapter train --mode {dpo,sft} --pairs FILE [--out DIR] [--dry-run] [--set key=value ...]";

type Sink = (line: string) => void;

function parseArgv(argv: string[]) {
  return parseArgs({
    args: argv,
    allowPositionals: true,
    options: {
      mode: { type: "string" },
      pairs: { type: "string" },
      out: { type: "string" },
      "dry-run": { type: "boolean", default: false },
      set: { type: "string", multiple: true },
    },
  });
}

export function run(argv: string[], log: Sink = console.log, err: Sink = console.error): number {
  let parsed: ReturnType<typeof parseArgv>;
  try {
    parsed = parseArgv(argv);
  } catch (e) {
    err(e instanceof Error ? e.message : String(e));
    err(USAGE);
    return 2;
  }

  const { values, positionals } = parsed;
  if (positionals.length !== 1 || positionals[0] !== "train") {
    err('expected the "train" subcommand');
    err(USAGE);
    return 2;
  }
  const mode = values.mode;
  if (mode !== "dpo" && mode !== "sft") {
    err(`--mode must be dpo or sft, got ${mode === undefined ? "nothing" : `"${mode}"`}`);
    err(USAGE);
    return 2;
  }
  const pairsPath = values.pairs;
  if (!pairsPath) {
    err("--pairs FILE is required");
    err(USAGE);
    return 2;
  }

  let config;
  try {
    config = resolveConfig(parseOverrides(values.set ?? []));
  } catch (e) {
    if (e instanceof ConfigError) {
      err(e.message);
      return 2;
    }
    throw e;
  }

  let data;
  try {
    data = loadDataset(pairsPath, mode as TrainMode);
  } catch (e) {
    err(`cannot read ${pairsPath}: ${e instanceof Error ? e.message : String(e)}`);
    return 1;
  }
  if (data.findings.length > 0) {
    for (const finding of data.findings) {
      err(`${pairsPath}:${finding.line}: ${finding.message}`);
    }
    err(`${data.findings.length} schema finding(s) in ${pairsPath}; nothing trained`);
    return 1;
  }

  const outDir = values.out ?? `runs/${mode}`;
  const command = buildCommand(mode as TrainMode, pairsPath, outDir, config);

  log(`loaded ${formatStats(data)} from ${pairsPath}`);
  log("resolved config:");
  log(formatConfig(config));
  log(`command: ${command.join(" ")}`);

  if (values["dry-run"]) {
    log("dry run: nothing executed");
    return 0;
  }

  try {
    const outcome = execute(command);
    log(`training finished in ${(outcome.wallTimeMs / 1000).toFixed(1)}s (exit ${outcome.exitCode})`);
    return outcome.exitCode;
  } catch (e) {
    if (e instanceof FrameworkError) {
      err(e.message);
      return 1;
    }
    throw e;
  }
}

function invokedDirectly(): boolean {
  const entry = process.argv[1];
  if (!entry) return false;
  try {
    return realpathSync(entry) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(run(process.argv.slice(2)));
}
