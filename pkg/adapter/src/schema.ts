/**
 * Loading and validation for the JSONL preference datasets emitted by the
 * macroforge pipeline.
 *
 * Two record shapes:
 *   dpo: {id, lang, prompt, chosen, rejected, scores?}
 *   sft: {id, lang, prompt, chosen}
 *
 * Data problems never throw. They are collected as findings carrying the
 * 1-based line number, so a single pass reports every bad record at once.
 * Only an unreadable file throws.
 */
import fs from "node:fs";

export type TrainMode = "dpo" | "sft";

export interface PairRecord {
  id: string;
  lang: string;
  prompt: string;
  chosen: string;
  rejected?: string;
  [extra: string]: unknown;
}

export interface Finding {
  line: number;
  message: string;
}

export interface LoadResult {
  records: PairRecord[];
  findings: Finding[];
  byLang: Record<string, number>;
}

const REQUIRED_FIELDS: Record<TrainMode, readonly string[]> = {
  dpo: ["id", "lang", "prompt", "chosen", "rejected"],
  sft: ["id", "lang", "prompt", "chosen"],
};

/** Problems with a single parsed record, as human-readable messages. */
export function recordProblems(value: unknown, mode: TrainMode): string[] {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    return ["record is not a JSON object"];
  }
  const rec = value as Record<string, unknown>;
  const problems: string[] = [];
  for (const field of REQUIRED_FIELDS[mode]) {
    const v = rec[field];
    if (typeof v !== "string" || v.length === 0) {
      problems.push(`${field} must be a non-empty string`);
    }
  }
  // A dispreferred answer identical to the preferred one carries no signal.
  if (
    mode === "dpo" &&
    typeof rec.chosen === "string" &&
    rec.chosen.length > 0 &&
    rec.chosen === rec.rejected
  ) {
    problems.push("chosen and rejected are identical");
  }
  return problems;
}

/**
 * Read a JSONL dataset, validating each record for the given mode.
 *
 * Blank lines are skipped; line numbers in findings are physical 1-based
 * positions in the file. Records with findings are excluded from `records`
 * and from the per-language counts.
 */
export function loadDataset(path: string, mode: TrainMode): LoadResult {
  const raw = fs.readFileSync(path, "utf8");
  const result: LoadResult = { records: [], findings: [], byLang: {} };
  raw.split("\n").forEach((line, index) => {
    if (line.trim().length === 0) return;
    const lineNo = index + 1;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      result.findings.push({
        line: lineNo,
        message: `not valid JSON: ${err instanceof Error ? err.message : String(err)}`,
      });
      return;
    }
    const problems = recordProblems(parsed, mode);
    if (problems.length > 0) {
      for (const message of problems) {
        result.findings.push({ line: lineNo, message });
      }
      return;
    }
    const rec = parsed as PairRecord;
    result.records.push(rec);
    result.byLang[rec.lang] = (result.byLang[rec.lang] ?? 0) + 1;
  });
  return result;
}

/** One-line dataset summary, e.g. "14 records (en=7, ru=7)". */
export function formatStats(result: LoadResult): string {
  const parts = Object.keys(result.byLang)
    .sort()
    .map((lang) => `${lang}=${result.byLang[lang]}`);
  const langs = parts.length > 0 ? ` (${parts.join(", ")})` : "";
  return `${result.records.length} records${langs}`;
}
