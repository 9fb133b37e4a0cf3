/**
 * Builds and runs the external training invocation.
 *
 * Training itself is delegated to the TRL command line (`trl dpo` /
 * `trl sft`), which consumes prompt/chosen/rejected JSONL directly. This
 * module never computes a loss and never talks to the network itself; a
 * dry run only assembles the command.
 */
import { spawnSync } from "node:child_process";
import type { TrainingConfig } from "./config.js";
import type { TrainMode } from "./schema.js";

export const FRAMEWORK_BIN = "trl";

export const FRAMEWORK_MISSING_HINT =
  `"${FRAMEWORK_BIN}" was not found on PATH. Install the training framework ` +
  `(pip install trl peft) or rerun with --dry-run to inspect the plan.`;

export interface RunOutcome {
  exitCode: number;
  wallTimeMs: number;
}

export class FrameworkError extends Error {}

/** Full argv for the external framework, first element the executable. */
export function buildCommand(
  mode: TrainMode,
  pairsPath: string,
  outDir: string,
  config: TrainingConfig,
): string[] {
  const argv = [
    FRAMEWORK_BIN,
    mode,
    "--model_name_or_path",
    config.base_model,
    "--dataset_name",
    pairsPath,
    "--output_dir",
    outDir,
    "--learning_rate",
    String(config.learning_rate),
    "--num_train_epochs",
    String(config.epochs),
    "--per_device_train_batch_size",
    String(config.per_device_batch),
    "--gradient_accumulation_steps",
    String(config.grad_accum),
    "--warmup_ratio",
    String(config.warmup_ratio),
    "--weight_decay",
    String(config.weight_decay),
    "--use_peft",
    "--lora_r",
    String(config.lora_rank),
    "--lora_alpha",
    String(config.lora_alpha),
    "--lora_dropout",
    String(config.lora_dropout),
  ];
  if (mode === "dpo") {
    argv.push("--beta", String(config.beta));
  }
  return argv;
}

/**
 * Execute a prepared command, streaming its output to this process.
 *
 * Throws FrameworkError when the executable is missing; any other failure
 * is the framework's own and is surfaced through the returned exit code
 * (its stderr is already inherited).
 */
export function execute(command: string[]): RunOutcome {
  const [bin, ...args] = command;
  if (!bin) throw new FrameworkError("empty command");

  const probe = spawnSync(bin, ["--help"], { stdio: "ignore" });
  if (probe.error) {
    throw new FrameworkError(FRAMEWORK_MISSING_HINT);
  }

  const started = Date.now();
  const run = spawnSync(bin, args, { stdio: "inherit" });
  const wallTimeMs = Date.now() - started;
  if (run.error) {
    throw new FrameworkError(`failed to run ${bin}: ${run.error.message}`);
  }
  // status is null when the child died from a signal
  return { exitCode: run.status ?? 1, wallTimeMs };
}
