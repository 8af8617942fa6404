import { spawnSync } from "child_process";
import fs from "fs";
import path from "path";
import { describe, expect, it } from "vitest";
import {
  CLI,
  DEPTH_CHECKPOINT,
  EDGE_CHECKPOINT,
  FLOW_CHECKPOINT,
  PyResult,
  runCli,
  tmpDir,
  writeTestPng,
} from "./helpers.js";

// The consuming toolkit's own CLI, used to check that exports feed its
// evaluation and training commands without conversion.
function runPrimary(args: string[]): PyResult {
  const proc = spawnSync("depthfuse", args, { encoding: "utf-8", timeout: 240_000 });
  return { status: proc.status ?? -1, stdout: proc.stdout ?? "", stderr: proc.stderr ?? "" };
}

describe("argument handling", () => {
  it("prints usage and fails without a command", () => {
    const res = runCli([]);
    expect(res.status).toBe(2);
    expect(res.stderr).toContain("usage:");
  });

  it("prints top-level and per-command help", () => {
    expect(runCli(["--help"]).status).toBe(0);
    expect(runCli(["--help"]).stdout).toContain("commands:");
    const sub = runCli(["depth", "--help"]);
    expect(sub.status).toBe(0);
    expect(sub.stdout).toContain("resolutions");
  });

  it("rejects unknown commands and unknown flags", () => {
    expect(runCli(["resample"]).status).toBe(2);
    const res = runCli(["depth", "--bogus", "1"]);
    expect(res.status).toBe(2);
  });

  it("rejects malformed resolutions and pairs", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 1, 16, 16);
    const bad = runCli([
      "depth",
      "--images", path.join(dir, "a.png"),
      "--checkpoint", DEPTH_CHECKPOINT,
      "--resolutions", "0x10",
      "--out", path.join(dir, "out"),
    ]);
    expect(bad.status).toBe(2);
    expect(bad.stderr).toContain("bad resolution");
    const pair = runCli([
      "flow",
      "--pairs", path.join(dir, "a.png"),
      "--checkpoint", FLOW_CHECKPOINT,
      "--out", path.join(dir, "out"),
    ]);
    expect(pair.status).toBe(2);
    expect(pair.stderr).toContain("expected target:source");
  });

  it("reports a missing checkpoint as missing input", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 1, 16, 16);
    const res = runCli([
      "depth",
      "--images", path.join(dir, "a.png"),
      "--checkpoint", path.join(dir, "nope.json"),
      "--resolutions", "16",
      "--out", path.join(dir, "out"),
    ]);
    expect(res.status).toBe(3);
  });
});

describe("depth command", () => {
  it("exports, then replays its manifest bit-identically", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "left.png"), 3, 40, 40);
    writeTestPng(path.join(dir, "right.png"), 4, 40, 40);
    const out1 = path.join(dir, "run1");
    const res = runCli([
      "depth",
      "--images", path.join(dir, "left.png"), path.join(dir, "right.png"),
      "--checkpoint", DEPTH_CHECKPOINT,
      "--resolutions", "24x24,32",
      "--out", out1,
    ]);
    expect(res.stderr).toBe("");
    expect(res.status).toBe(0);
    expect(res.stdout).toContain("wrote 4 files");

    const out2 = path.join(dir, "run2");
    const replay = runCli(["depth", "--manifest", path.join(out1, "manifest.txt"), "--out", out2]);
    expect(replay.status).toBe(0);
    for (const name of fs.readdirSync(out1).filter(n => n.endsWith(".pfm"))) {
      const a = fs.readFileSync(path.join(out1, name));
      const b = fs.readFileSync(path.join(out2, name));
      expect(a.equals(b)).toBe(true);
    }
  });

  it("refuses to replay against a modified checkpoint", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 5, 24, 24);
    const ck = path.join(dir, "ck.json");
    fs.copyFileSync(DEPTH_CHECKPOINT, ck);
    const out1 = path.join(dir, "run1");
    const res = runCli([
      "depth",
      "--images", path.join(dir, "a.png"),
      "--checkpoint", ck,
      "--resolutions", "16",
      "--out", out1,
    ]);
    expect(res.status).toBe(0);

    const doc = JSON.parse(fs.readFileSync(ck, "utf-8"));
    doc.params.bias += 0.5;
    fs.writeFileSync(ck, JSON.stringify(doc, null, 2));
    const replay = runCli(["depth", "--manifest", path.join(out1, "manifest.txt"), "--out", path.join(dir, "run2")]);
    expect(replay.status).toBe(4);
    expect(replay.stderr).toContain("hash pinned in the manifest");
  });

  it("rejects a manifest written by a different command", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 6, 24, 24);
    const out = path.join(dir, "run");
    const res = runCli([
      "depth",
      "--images", path.join(dir, "a.png"),
      "--checkpoint", DEPTH_CHECKPOINT,
      "--resolutions", "16",
      "--out", out,
    ]);
    expect(res.status).toBe(0);
    const wrong = runCli(["edges", "--manifest", path.join(out, "manifest.txt"), "--out", path.join(dir, "e")]);
    expect(wrong.status).toBe(2);
    expect(wrong.stderr).toContain("does not match command");
  });
});

describe("edges and flow commands", () => {
  it("exports edge maps with previews in nine-patch mode", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 7, 45, 45);
    const out = path.join(dir, "out");
    const res = runCli([
      "edges",
      "--images", path.join(dir, "a.png"),
      "--checkpoint", EDGE_CHECKPOINT,
      "--nine-patch",
      "--out", out,
    ]);
    expect(res.status).toBe(0);
    expect(fs.existsSync(path.join(out, "a_edge.pfm"))).toBe(true);
    expect(fs.existsSync(path.join(out, "a_edge.png"))).toBe(true);
  });

  it("exports flow for explicit pairs", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "t0.png"), 8, 28, 28);
    writeTestPng(path.join(dir, "t1.png"), 9, 28, 28);
    const out = path.join(dir, "out");
    const res = runCli([
      "flow",
      "--pairs", `${path.join(dir, "t1.png")}:${path.join(dir, "t0.png")}`,
      "--checkpoint", FLOW_CHECKPOINT,
      "--out", out,
    ]);
    expect(res.status).toBe(0);
    expect(fs.existsSync(path.join(out, "t1_t0.flo"))).toBe(true);
  });
});

describe("consumer toolkit integration", () => {
  it("exports depth maps the evaluator scores directly", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "scene.png"), 10, 40, 40);
    const out = path.join(dir, "out");
    const res = runCli([
      "depth",
      "--images", path.join(dir, "scene.png"),
      "--checkpoint", DEPTH_CHECKPOINT,
      "--resolutions", "32",
      "--out", out,
    ]);
    expect(res.status).toBe(0);
    // Scoring an export against itself: perfect agreement, exit 0.
    const evalRes = runPrimary(["eval", "--pred-dir", out, "--gt-dir", out]);
    expect(evalRes.stderr).toBe("");
    expect(evalRes.status).toBe(0);
    expect(evalRes.stdout).toContain("absrel");
  });

  it("exports scale groups the refinement trainer accepts", () => {
    const dir = tmpDir();
    writeTestPng(path.join(dir, "a.png"), 11, 48, 48);
    writeTestPng(path.join(dir, "b.png"), 12, 48, 48);
    const out = path.join(dir, "groups");
    const res = runCli([
      "group",
      "--images", path.join(dir, "a.png"), path.join(dir, "b.png"),
      "--depth-checkpoint", DEPTH_CHECKPOINT,
      "--flow-checkpoint", FLOW_CHECKPOINT,
      "--scales", "32,40,48,56,64",
      "--out", out,
    ]);
    expect(res.stderr).toBe("");
    expect(res.status).toBe(0);
    expect(fs.existsSync(path.join(out, "group_001", "d5.pfm"))).toBe(true);
    expect(fs.existsSync(path.join(out, "group_001", "f5.flo"))).toBe(true);

    const weights = path.join(dir, "weights.npz");
    const train = runPrimary([
      "train-dcm",
      "--dataset", out,
      "--weights-out", weights,
      "--iterations", "1",
      "--batch", "1",
      "--crop", "24",
      "--seed", "7",
    ]);
    expect(train.stderr).toBe("");
    expect(train.status).toBe(0);
    expect(fs.existsSync(weights)).toBe(true);
  });
});

describe("cli entry point", () => {
  it("is executable directly", () => {
    const res = spawnSync("node", [CLI, "--help"], { encoding: "utf-8" });
    expect(res.status).toBe(0);
  });
});
