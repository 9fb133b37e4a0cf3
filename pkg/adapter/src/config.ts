/**
 * Training configuration: stock hyperparameters plus typed overrides.
 */

export interface TrainingConfig {
  learning_rate: number;
  beta: number;
  epochs: number;
  per_device_batch: number;
  grad_accum: number;
  warmup_ratio: number;
  lora_rank: number;
  lora_alpha: number;
  lora_dropout: number;
  weight_decay: number;
  base_model: string;
}

export class ConfigError extends Error {}

export const TRAINING_DEFAULTS: TrainingConfig = {
  learning_rate: 1e-6,
  beta: 0.2,
  epochs: 3,
  per_device_batch: 7,
  grad_accum: 7,
  warmup_ratio: 0.03,
  lora_rank: 128,
  lora_alpha: 256,
  lora_dropout: 0.05,
  weight_decay: 0.0,
  base_model: "Qwen/Qwen3-4B",
};

// Count-like fields; everything else numeric is a ratio or rate.
const INTEGER_KEYS = new Set<string>([
  "epochs",
  "per_device_batch",
  "grad_accum",
  "lora_rank",
  "lora_alpha",
]);

/**
 * Parse repeated `--set key=value` pairs into a typed override map.
 * Later occurrences of the same key win. Unknown keys are rejected so a
 * typo cannot silently fall back to the default.
 */
export function parseOverrides(pairs: readonly string[]): Partial<TrainingConfig> {
  const out: Record<string, number | string> = {};
  for (const pair of pairs) {
    const eq = pair.indexOf("=");
    if (eq <= 0) {
      throw new ConfigError(`--set expects key=value, got "${pair}"`);
    }
    const key = pair.slice(0, eq);
    const raw = pair.slice(eq + 1);
    if (!(key in TRAINING_DEFAULTS)) {
      const known = Object.keys(TRAINING_DEFAULTS).join(", ");
      throw new ConfigError(`unknown config key "${key}" (known keys: ${known})`);
    }
    if (key === "base_model") {
      out[key] = raw;
      continue;
    }
    const num = Number(raw);
    if (raw.trim().length === 0 || !Number.isFinite(num)) {
      throw new ConfigError(`${key} must be a number, got "${raw}"`);
    }
    out[key] = num;
  }
  return out as Partial<TrainingConfig>;
}

/**
 * Apply overrides to the defaults and enforce the invariants: every
 * hyperparameter positive except weight_decay, which only has to be
 * non-negative; count-like fields integral; dropout below 1.
 */
export function resolveConfig(overrides: Partial<TrainingConfig> = {}): TrainingConfig {
  for (const key of Object.keys(overrides)) {
    if (!(key in TRAINING_DEFAULTS)) {
      throw new ConfigError(`unknown config key "${key}"`);
    }
  }
  const config: TrainingConfig = { ...TRAINING_DEFAULTS, ...overrides };

  if (typeof config.base_model !== "string" || config.base_model.length === 0) {
    throw new ConfigError("base_model must be a non-empty string");
  }
  for (const [key, value] of Object.entries(config)) {
    if (key === "base_model") continue;
    const num = value as number;
    if (typeof num !== "number" || !Number.isFinite(num)) {
      throw new ConfigError(`${key} must be a finite number, got ${String(value)}`);
    }
    if (key === "weight_decay") {
      if (num < 0) throw new ConfigError(`weight_decay must be >= 0, got ${num}`);
      continue;
    }
    if (num <= 0) {
      throw new ConfigError(`${key} must be positive, got ${num}`);
    }
    if (INTEGER_KEYS.has(key) && !Number.isInteger(num)) {
      throw new ConfigError(`${key} must be an integer, got ${num}`);
    }
  }
  if (config.lora_dropout >= 1) {
    throw new ConfigError(`lora_dropout must be below 1, got ${config.lora_dropout}`);
  }
  return config;
}

/** Canonical printed form: stable key order, two-space indent. */
export function formatConfig(config: TrainingConfig): string {
  const ordered: Record<string, number | string> = {};
  for (const key of Object.keys(TRAINING_DEFAULTS) as (keyof TrainingConfig)[]) {
    ordered[key] = config[key];
  }
  return JSON.stringify(ordered, null, 2);
}
