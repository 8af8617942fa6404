// Plain-text export manifests: key=value lines plus # comments, the same
// shape the consumer's pipeline manifests use. `input=` and `output=`
// repeat, one line per file; every other key holds a single value.

import fs from "fs";
import { atomicWrite } from "./codecs.js";
import { MissingInputError, UsageError } from "./errors.js";

export class ManifestError extends UsageError {}

export interface Manifest {
  scalars: Map<string, string>;
  inputs: string[];
  outputs: string[];
}

export const MANIFEST_VERSION = "0.1.0";

const SCALAR_KEYS = new Set([
  "version",
  "kind",
  "model",
  "checkpoint",
  "checkpoint-sha256",
  "flow-model",
  "flow-checkpoint",
  "flow-checkpoint-sha256",
  "depth-space",
  "resolutions",
  "scales",
  "nine-patch",
  "out",
]);

export function writeManifest(filePath: string, manifest: Manifest): void {
  const lines = ["# export manifest", `version=${MANIFEST_VERSION}`];
  for (const [key, value] of manifest.scalars) {
    if (!SCALAR_KEYS.has(key)) throw new ManifestError(`unknown manifest key: ${key}`);
    if (key !== "version") lines.push(`${key}=${value}`);
  }
  for (const input of manifest.inputs) lines.push(`input=${input}`);
  for (const output of manifest.outputs) lines.push(`output=${output}`);
  atomicWrite(filePath, Buffer.from(lines.join("\n") + "\n", "utf-8"));
}

export function parseManifest(filePath: string): Manifest {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf-8");
  } catch {
    throw new MissingInputError(`manifest not found: ${filePath}`);
  }
  const scalars = new Map<string, string>();
  const inputs: string[] = [];
  const outputs: string[] = [];
  const unknown: string[] = [];
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (!line || line.startsWith("#")) continue;
    const eq = line.indexOf("=");
    if (eq < 0) throw new ManifestError(`manifest line is not key=value: ${line}`);
    const key = line.slice(0, eq).trim();
    const value = line.slice(eq + 1).trim();
    if (key === "input") {
      inputs.push(value);
    } else if (key === "output") {
      outputs.push(value);
    } else if (SCALAR_KEYS.has(key)) {
      scalars.set(key, value);
    } else {
      unknown.push(key);
    }
  }
  if (unknown.length > 0) {
    throw new ManifestError(`unknown manifest keys: ${unknown.join(", ")}`);
  }
  return { scalars, inputs, outputs };
}
