import fs from "node:fs";
import os from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { afterEach, beforeEach, describe, expect, test, vi } from "vitest";

const { spawnSyncMock } = vi.hoisted(() => ({ spawnSyncMock: vi.fn() }));
vi.mock("node:child_process", () => ({ spawnSync: spawnSyncMock }));

import { run } from "../src/cli.js";

function fixture(name: string): string {
  return fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));
}

function capture() {
  const out: string[] = [];
  const err: string[] = [];
  return {
    out,
    err,
    log: (line: string) => out.push(line),
    fail: (line: string) => err.push(line),
  };
}

const tempDirs: string[] = [];

function tempFile(name: string, content: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "adapter-cli-"));
  tempDirs.push(dir);
  const file = path.join(dir, name);
  fs.writeFileSync(file, content, "utf8");
  return file;
}

beforeEach(() => {
  spawnSyncMock.mockReset();
});

afterEach(() => {
  vi.unstubAllGlobals();
  while (tempDirs.length > 0) {
    fs.rmSync(tempDirs.pop()!, { recursive: true, force: true });
  }
});

describe("dry run", () => {
  test("prints stats, config, and command without touching network or subprocess", () => {
    spawnSyncMock.mockImplementation(() => {
      throw new Error("subprocess blocked by test guard");
    });
    const fetchGuard = vi.fn(() => {
      throw new Error("network blocked by test guard");
    });
    vi.stubGlobal("fetch", fetchGuard);

    const c = capture();
    const code = run(
      ["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl"), "--dry-run"],
      c.log,
      c.fail,
    );

    expect(code).toBe(0);
    expect(c.err).toEqual([]);
    expect(spawnSyncMock).not.toHaveBeenCalled();
    expect(fetchGuard).not.toHaveBeenCalled();

    const text = c.out.join("\n");
    expect(text).toContain("loaded 14 records (en=7, ru=7)");
    expect(text).toContain('"learning_rate": 0.000001');
    expect(text).toContain('"beta": 0.2');
    expect(text).toContain('"lora_rank": 128');
    expect(text).toContain("command: trl dpo");
    expect(text).toContain("dry run: nothing executed");
  });

  test("sft mode builds an sft command without the preference temperature", () => {
    const c = capture();
    const code = run(
      ["train", "--mode", "sft", "--pairs", fixture("sft.jsonl"), "--dry-run"],
      c.log,
      c.fail,
    );
    expect(code).toBe(0);
    const command = c.out.find((line) => line.startsWith("command: "));
    expect(command).toContain("trl sft");
    expect(command).not.toContain("--beta");
  });

  test("--set overrides show up in both config and command", () => {
    const c = capture();
    const code = run(
      [
        "train",
        "--mode",
        "dpo",
        "--pairs",
        fixture("dpo.jsonl"),
        "--dry-run",
        "--set",
        "epochs=1",
        "--set",
        "base_model=google/gemma-3-4b-it",
      ],
      c.log,
      c.fail,
    );
    expect(code).toBe(0);
    const text = c.out.join("\n");
    expect(text).toContain('"epochs": 1');
    expect(text).toContain("--num_train_epochs 1");
    expect(text).toContain("--model_name_or_path google/gemma-3-4b-it");
  });
});

describe("usage errors exit 2", () => {
  test.each([
    ["no arguments", []],
    ["unknown subcommand", ["tune", "--mode", "dpo", "--pairs", "x.jsonl"]],
    ["missing mode", ["train", "--pairs", "x.jsonl"]],
    ["bad mode", ["train", "--mode", "orpo", "--pairs", "x.jsonl"]],
    ["missing pairs", ["train", "--mode", "dpo"]],
    ["unknown flag", ["train", "--mode", "dpo", "--pairs", "x.jsonl", "--bogus"]],
  ])("%s", (_label, argv) => {
    const c = capture();
    expect(run(argv as string[], c.log, c.fail)).toBe(2);
    expect(c.err.length).toBeGreaterThan(0);
  });

  test("an unknown --set key names the key", () => {
    const c = capture();
    const code = run(
      ["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl"), "--set", "spice_level=3"],
      c.log,
      c.fail,
    );
    expect(code).toBe(2);
    expect(c.err.join("\n")).toContain("spice_level");
  });

  test("an invariant violation from --set is a usage error", () => {
    const c = capture();
    const code = run(
      ["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl"), "--set", "learning_rate=-1"],
      c.log,
      c.fail,
    );
    expect(code).toBe(2);
    expect(c.err.join("\n")).toContain("learning_rate");
  });
});

describe("data errors exit 1", () => {
  test("a missing dataset file", () => {
    const c = capture();
    const code = run(
      ["train", "--mode", "dpo", "--pairs", "/nonexistent/x.jsonl", "--dry-run"],
      c.log,
      c.fail,
    );
    expect(code).toBe(1);
    expect(c.err.join("\n")).toContain("cannot read");
  });

  test("an sft file in dpo mode reports every line", () => {
    const c = capture();
    const pairs = fixture("sft.jsonl");
    const code = run(["train", "--mode", "dpo", "--pairs", pairs, "--dry-run"], c.log, c.fail);
    expect(code).toBe(1);
    expect(c.err[0]).toBe(`${pairs}:1: rejected must be a non-empty string`);
    expect(c.err.at(-1)).toContain("14 schema finding(s)");
  });

  test("a chosen=rejected record is flagged with its line number", () => {
    const lines = fs.readFileSync(fixture("dpo.jsonl"), "utf8").trim().split("\n");
    const mutated = JSON.parse(lines[4]!);
    mutated.rejected = mutated.chosen;
    lines[4] = JSON.stringify(mutated);
    const pairs = tempFile("mutated.jsonl", lines.join("\n") + "\n");

    const c = capture();
    const code = run(["train", "--mode", "dpo", "--pairs", pairs, "--dry-run"], c.log, c.fail);
    expect(code).toBe(1);
    expect(c.err.join("\n")).toContain(`${pairs}:5: chosen and rejected are identical`);
  });
});

describe("handoff", () => {
  test("a missing framework is exit 1 with an install hint", () => {
    spawnSyncMock.mockReturnValueOnce({ error: new Error("spawnSync trl ENOENT") });
    const c = capture();
    const code = run(["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl")], c.log, c.fail);
    expect(code).toBe(1);
    expect(c.err.join("\n")).toContain("pip install trl");
    expect(spawnSyncMock).toHaveBeenCalledTimes(1);
  });

  test("a present framework runs the full command and passes its exit through", () => {
    spawnSyncMock.mockReturnValueOnce({ status: 0 });
    spawnSyncMock.mockReturnValueOnce({ status: 0 });
    const c = capture();
    const code = run(
      ["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl"), "--out", "runs/exp1"],
      c.log,
      c.fail,
    );
    expect(code).toBe(0);
    expect(c.out.join("\n")).toContain("training finished");
    const [bin, args] = spawnSyncMock.mock.calls[1]!;
    expect(bin).toBe("trl");
    expect(args).toContain("--output_dir");
    expect(args[args.indexOf("--output_dir") + 1]).toBe("runs/exp1");
  });

  test("a framework failure propagates its exit code", () => {
    spawnSyncMock.mockReturnValueOnce({ status: 0 });
    spawnSyncMock.mockReturnValueOnce({ status: 3 });
    const c = capture();
    const code = run(["train", "--mode", "dpo", "--pairs", fixture("dpo.jsonl")], c.log, c.fail);
    expect(code).toBe(3);
  });
});
