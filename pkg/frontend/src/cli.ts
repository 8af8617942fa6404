#!/usr/bin/env node
// Command line exporter. Subcommands mirror what the models produce:
// depth, edges, flow, and the multi-resolution group layout. A previous
// run's manifest can be replayed with --manifest; explicit flags win over
// manifest values, and a replay refuses to run if the checkpoint on disk
// no longer matches the pinned hash.

import { realpathSync } from "fs";
import { fileURLToPath } from "url";
import yargs from "yargs";
import type { Argv } from "yargs";
import { hideBin } from "yargs/helpers";
import { Checkpoint, loadCheckpoint } from "./checkpoint.js";
import { ExporterError, UsageError, exitCodeFor } from "./errors.js";
import {
  DEFAULT_JOBS,
  ExportResult,
  exportDepth,
  exportEdges,
  exportFlow,
  exportGroup,
} from "./exporter.js";
import { Manifest, parseManifest } from "./manifest.js";

const USAGE = `usage: depthfuse-export <command> [options]

commands:
  depth   export depth maps, one PFM per image per resolution
  edges   export edge maps as PFM plus a PNG preview
  flow    export optical flow between image pairs as .flo
  group   export multi-resolution depth groups for refinement training

run a command with --help for its options`;

interface Parsed {
  [key: string]: unknown;
}

// Raised after help has been printed so run() can exit cleanly.
class HelpShown extends Error {}

function parse(args: string[], build: (y: Argv) => Argv): Parsed {
  const parser = build(
    yargs(args)
      .exitProcess(false)
      .strict()
      .help(false)
      .fail((msg, err) => {
        throw err ?? new UsageError(msg);
      })
      .option("manifest", { type: "string", describe: "replay a previous run's manifest" })
      .option("out", { type: "string", describe: "output directory" })
      .option("jobs", { type: "number", default: DEFAULT_JOBS, describe: "parallel images" }),
  );
  if (args.includes("--help") || args.includes("-h")) {
    parser.showHelp("log");
    throw new HelpShown();
  }
  return parser.parseSync() as Parsed;
}

function required(value: string | undefined, flag: string): string {
  if (!value) throw new UsageError(`${flag} is required`);
  return value;
}

function manifestFor(parsed: Parsed, kind: string): Manifest | undefined {
  const manifestPath = parsed.manifest as string | undefined;
  if (!manifestPath) return undefined;
  const manifest = parseManifest(manifestPath);
  const declared = manifest.scalars.get("kind");
  if (declared !== kind) {
    throw new UsageError(`manifest kind ${declared ?? "(none)"} does not match command ${kind}`);
  }
  return manifest;
}

function pinnedCheckpoint(
  parsed: Parsed,
  manifest: Manifest | undefined,
  flag: string,
  manifestKey: string,
  kind: "depth" | "edges" | "flow",
): Checkpoint {
  const explicit = parsed[flag.replace(/^--/, "").replace(/-(\w)/g, (_, c) => c.toUpperCase())] as
    | string
    | undefined;
  const fromManifest = manifest?.scalars.get(manifestKey);
  const checkpoint = loadCheckpoint(required(explicit ?? fromManifest, flag), kind);
  const pinned = manifest?.scalars.get(`${manifestKey}-sha256`);
  if (!explicit && pinned && pinned !== checkpoint.sha256) {
    throw new ExporterError(
      `checkpoint ${checkpoint.path} does not match the hash pinned in the manifest`,
    );
  }
  return checkpoint;
}

function parseResolutions(spec: string): Array<[number, number]> {
  const out: Array<[number, number]> = [];
  for (const token of spec.split(",")) {
    const trimmed = token.trim();
    if (!trimmed) continue;
    const match = /^(\d+)(?:x(\d+))?$/.exec(trimmed);
    if (!match) throw new UsageError(`bad resolution ${JSON.stringify(trimmed)}`);
    const w = parseInt(match[1], 10);
    const h = match[2] ? parseInt(match[2], 10) : w;
    if (w <= 0 || h <= 0) throw new UsageError(`bad resolution ${JSON.stringify(trimmed)}`);
    out.push([w, h]);
  }
  if (out.length === 0) throw new UsageError("no output resolutions");
  return out;
}

function parseScales(spec: string): number[] {
  const scales = spec
    .split(",")
    .map(t => t.trim())
    .filter(t => t.length > 0)
    .map(t => {
      const value = parseInt(t, 10);
      if (!Number.isFinite(value) || value <= 0 || String(value) !== t) {
        throw new UsageError(`bad scale ${JSON.stringify(t)}`);
      }
      return value;
    });
  return scales;
}

function imageList(parsed: Parsed, manifest: Manifest | undefined): string[] {
  const flags = parsed.images as string[] | undefined;
  if (flags && flags.length > 0) return flags.map(String);
  if (manifest) return manifest.inputs;
  throw new UsageError("--images is required");
}

function report(result: ExportResult): void {
  console.log(`wrote ${result.outputs.length} files`);
  console.log(`manifest ${result.manifestPath}`);
}

async function cmdDepth(args: string[]): Promise<void> {
  const parsed = parse(args, y =>
    y
      .option("images", { type: "array", string: true })
      .option("checkpoint", { type: "string" })
      .option("resolutions", { type: "string", describe: "comma list of WxH or square sizes" }),
  );
  const manifest = manifestFor(parsed, "depth");
  const checkpoint = pinnedCheckpoint(parsed, manifest, "--checkpoint", "checkpoint", "depth");
  const spec = (parsed.resolutions as string | undefined) ?? manifest?.scalars.get("resolutions");
  report(
    await exportDepth({
      images: imageList(parsed, manifest),
      checkpoint,
      resolutions: parseResolutions(required(spec, "--resolutions")),
      outDir: required((parsed.out as string | undefined) ?? manifest?.scalars.get("out"), "--out"),
      jobs: parsed.jobs as number,
    }),
  );
}

async function cmdEdges(args: string[]): Promise<void> {
  const parsed = parse(args, y =>
    y
      .option("images", { type: "array", string: true })
      .option("checkpoint", { type: "string" })
      .option("nine-patch", { type: "boolean", default: undefined }),
  );
  const manifest = manifestFor(parsed, "edges");
  const checkpoint = pinnedCheckpoint(parsed, manifest, "--checkpoint", "checkpoint", "edges");
  const nine = (parsed.ninePatch as boolean | undefined) ?? manifest?.scalars.get("nine-patch") === "true";
  report(
    await exportEdges({
      images: imageList(parsed, manifest),
      checkpoint,
      outDir: required((parsed.out as string | undefined) ?? manifest?.scalars.get("out"), "--out"),
      ninePatch: nine,
      jobs: parsed.jobs as number,
    }),
  );
}

function parsePairs(tokens: string[]): Array<[string, string]> {
  return tokens.map(token => {
    const parts = token.split(":");
    if (parts.length !== 2 || !parts[0] || !parts[1]) {
      throw new UsageError(`bad pair ${JSON.stringify(token)}, expected target:source`);
    }
    return [parts[0], parts[1]] as [string, string];
  });
}

async function cmdFlow(args: string[]): Promise<void> {
  const parsed = parse(args, y =>
    y
      .option("pairs", { type: "array", string: true, describe: "target:source image pairs" })
      .option("checkpoint", { type: "string" }),
  );
  const manifest = manifestFor(parsed, "flow");
  const checkpoint = pinnedCheckpoint(parsed, manifest, "--checkpoint", "checkpoint", "flow");
  const tokens = (parsed.pairs as string[] | undefined) ?? manifest?.inputs;
  if (!tokens || tokens.length === 0) throw new UsageError("--pairs is required");
  report(
    await exportFlow({
      pairs: parsePairs(tokens.map(String)),
      checkpoint,
      outDir: required((parsed.out as string | undefined) ?? manifest?.scalars.get("out"), "--out"),
      jobs: parsed.jobs as number,
    }),
  );
}

async function cmdGroup(args: string[]): Promise<void> {
  const parsed = parse(args, y =>
    y
      .option("images", { type: "array", string: true })
      .option("depth-checkpoint", { type: "string" })
      .option("flow-checkpoint", { type: "string" })
      .option("scales", { type: "string", describe: "comma list of square sizes, ascending" }),
  );
  const manifest = manifestFor(parsed, "group");
  const depthCheckpoint = pinnedCheckpoint(parsed, manifest, "--depth-checkpoint", "checkpoint", "depth");
  const flowCheckpoint = pinnedCheckpoint(parsed, manifest, "--flow-checkpoint", "flow-checkpoint", "flow");
  const spec = (parsed.scales as string | undefined) ?? manifest?.scalars.get("scales");
  report(
    await exportGroup({
      images: imageList(parsed, manifest),
      depthCheckpoint,
      flowCheckpoint,
      scales: parseScales(required(spec, "--scales")),
      outDir: required((parsed.out as string | undefined) ?? manifest?.scalars.get("out"), "--out"),
      jobs: parsed.jobs as number,
    }),
  );
}

const COMMANDS: Record<string, (args: string[]) => Promise<void>> = {
  depth: cmdDepth,
  edges: cmdEdges,
  flow: cmdFlow,
  group: cmdGroup,
};

export async function run(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (!command) {
    console.error(USAGE);
    return 2;
  }
  if (command === "--help" || command === "-h") {
    console.log(USAGE);
    return 0;
  }
  const handler = COMMANDS[command];
  if (!handler) {
    console.error(`error: unknown command: ${command}`);
    console.error(USAGE);
    return 2;
  }
  try {
    await handler(rest);
    return 0;
  } catch (err) {
    if (err instanceof HelpShown) return 0;
    if (err instanceof ExporterError) {
      console.error(`error: ${err.message}`);
      return exitCodeFor(err);
    }
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 4;
  }
}

const isMain = (() => {
  if (!process.argv[1]) return false;
  try {
    return realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
})();
if (isMain) {
  run(hideBin(process.argv)).then(code => {
    process.exitCode = code;
  });
}
