// Error taxonomy mirroring the consumer CLI's exit codes: usage problems
// exit 2, missing files exit 3, everything else that goes wrong at run
// time exits 4.

export class ExporterError extends Error {}

export class UsageError extends ExporterError {}

export class MissingInputError extends ExporterError {}

export function exitCodeFor(err: unknown): number {
  if (err instanceof UsageError) return 2;
  if (err instanceof MissingInputError) return 3;
  return 4;
}
