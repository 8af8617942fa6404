// Checkpoint files are JSON with a fixed envelope; the parameter block is
// what makes a model. The manifest pins the sha256 of the exact bytes on
// disk, so editing a checkpoint changes its identity.

import crypto from "crypto";
import fs from "fs";
import path from "path";
import { ExporterError, MissingInputError } from "./errors.js";

export class CheckpointError extends ExporterError {}

export type ModelKind = "depth" | "edges" | "flow";

export interface DepthParams {
  dMax: number;
  verticalWeight: number;
  luminanceWeight: number;
  bias: number;
  blurSigma: number;
}

export interface EdgeParams {
  blurSigma: number;
  responseScale: number;
}

export interface FlowParams {
  blockRadius: number;
  searchRadius: number;
}

export interface Checkpoint {
  kind: ModelKind;
  id: string;
  emits?: "disparity" | "depth";
  params: DepthParams | EdgeParams | FlowParams;
  sha256: string;
  path: string;
}

const FORMAT = "depthfuse-export-checkpoint";

function requireNumber(params: Record<string, unknown>, name: string, id: string): number {
  const value = params[name];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new CheckpointError(`checkpoint ${id}: parameter ${name} must be a finite number`);
  }
  return value;
}

export function loadCheckpoint(filePath: string, expectedKind?: ModelKind): Checkpoint {
  let raw: Buffer;
  try {
    raw = fs.readFileSync(filePath);
  } catch {
    throw new MissingInputError(`checkpoint not found: ${filePath}`);
  }
  let parsed: Record<string, unknown>;
  try {
    parsed = JSON.parse(raw.toString("utf-8"));
  } catch {
    throw new CheckpointError(`checkpoint is not valid JSON: ${filePath}`);
  }
  if (parsed.format !== FORMAT) {
    throw new CheckpointError(`unrecognized checkpoint format in ${filePath}`);
  }
  const kind = parsed.kind as ModelKind;
  if (kind !== "depth" && kind !== "edges" && kind !== "flow") {
    throw new CheckpointError(`checkpoint ${filePath} has unknown kind ${JSON.stringify(parsed.kind)}`);
  }
  if (expectedKind && kind !== expectedKind) {
    throw new CheckpointError(
      `checkpoint ${filePath} is a ${kind} model, expected ${expectedKind}`,
    );
  }
  const id = typeof parsed.id === "string" && parsed.id ? parsed.id : "";
  if (!id) throw new CheckpointError(`checkpoint ${filePath} is missing its id`);
  const paramsRaw = parsed.params;
  if (typeof paramsRaw !== "object" || paramsRaw === null) {
    throw new CheckpointError(`checkpoint ${id} is missing its params block`);
  }
  const params = paramsRaw as Record<string, unknown>;

  let typed: DepthParams | EdgeParams | FlowParams;
  let emits: "disparity" | "depth" | undefined;
  if (kind === "depth") {
    typed = {
      dMax: requireNumber(params, "dMax", id),
      verticalWeight: requireNumber(params, "verticalWeight", id),
      luminanceWeight: requireNumber(params, "luminanceWeight", id),
      bias: requireNumber(params, "bias", id),
      blurSigma: requireNumber(params, "blurSigma", id),
    };
    emits = parsed.emits === "depth" ? "depth" : "disparity";
    const reach = typed.verticalWeight + typed.luminanceWeight + typed.bias;
    if (emits === "disparity" && reach > typed.dMax) {
      throw new CheckpointError(
        `checkpoint ${id}: dMax ${typed.dMax} cannot cover the response range ${reach}`,
      );
    }
  } else if (kind === "edges") {
    typed = {
      blurSigma: requireNumber(params, "blurSigma", id),
      responseScale: requireNumber(params, "responseScale", id),
    };
    if ((typed as EdgeParams).responseScale <= 0) {
      throw new CheckpointError(`checkpoint ${id}: responseScale must be positive`);
    }
  } else {
    typed = {
      blockRadius: requireNumber(params, "blockRadius", id),
      searchRadius: requireNumber(params, "searchRadius", id),
    };
  }

  return {
    kind,
    id,
    emits,
    params: typed,
    sha256: crypto.createHash("sha256").update(raw).digest("hex"),
    // Absolute, so a manifest that records it can be replayed from any
    // working directory.
    path: path.resolve(filePath),
  };
}
