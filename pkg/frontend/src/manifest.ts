/**
 * The embedder publishes its frozen ABI as a KEY=VALUE text table
 * (`mpiwasm --emit-abi-manifest`). Everything guest-side is generated
 * from that table so the two sides cannot drift silently.
 */

import { spawnSync } from "node:child_process";

export type Manifest = Map<string, number>;

/** Keys the header generator cannot do without. */
export const REQUIRED_KEYS = [
  "ABI_VERSION",
  "STATUS_SIZE",
  "MPI_COMM_WORLD",
  "MPI_COMM_SELF",
  "MPI_COMM_NULL",
  "MPI_BYTE",
  "MPI_CHAR",
  "MPI_INT",
  "MPI_FLOAT",
  "MPI_DOUBLE",
  "MPI_LONG",
  "MPI_UNSIGNED",
  "MPI_LONG_LONG",
  "MPI_UNSIGNED_LONG",
  "MPI_DATATYPE_NULL",
  "MPI_SUM",
  "MPI_MAX",
  "MPI_MIN",
  "MPI_PROD",
  "MPI_LAND",
  "MPI_LOR",
  "MPI_BAND",
  "MPI_BOR",
  "MPI_OP_NULL",
  "MPI_ANY_SOURCE",
  "MPI_ANY_TAG",
  "MPI_REQUEST_NULL",
  "MPI_UNDEFINED",
  "MPI_SUCCESS",
  "MPI_ERR_TYPE",
  "MPI_ERR_COMM",
  "MPI_ERR_OP",
  "MPI_ERR_ARG",
  "MPI_ERR_OTHER",
] as const;

export class ManifestError extends Error {}

export function parseManifest(text: string): Manifest {
  const manifest: Manifest = new Map();
  for (const rawLine of text.split("\n")) {
    const line = rawLine.trim();
    if (line === "") continue;
    const eq = line.indexOf("=");
    if (eq <= 0) {
      throw new ManifestError(`malformed manifest line: ${JSON.stringify(line)}`);
    }
    const key = line.slice(0, eq);
    const value = Number(line.slice(eq + 1));
    if (!Number.isInteger(value)) {
      throw new ManifestError(`non-integer value for ${key}`);
    }
    if (manifest.has(key)) {
      throw new ManifestError(`duplicate manifest key ${key}`);
    }
    manifest.set(key, value);
  }
  for (const key of REQUIRED_KEYS) {
    if (!manifest.has(key)) {
      throw new ManifestError(`manifest missing ${key}`);
    }
  }
  if (manifest.get("ABI_VERSION") !== 1) {
    throw new ManifestError(
      `unsupported ABI version ${manifest.get("ABI_VERSION")}`,
    );
  }
  return manifest;
}

/** The embedder invocation, overridable for non-default installs. */
export function embedderCommand(): string[] {
  const override = process.env.MPIWASM_CMD;
  if (override) return override.split(/\s+/).filter((s) => s !== "");
  return ["python3", "-m", "mpiwasm"];
}

/** Ask the installed embedder for its manifest. */
export function fetchManifest(): Manifest {
  const [cmd, ...args] = embedderCommand();
  const proc = spawnSync(cmd, [...args, "--emit-abi-manifest"], {
    encoding: "utf8",
  });
  if (proc.error) {
    throw new ManifestError(`cannot run embedder: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    throw new ManifestError(
      `embedder exited ${proc.status}: ${proc.stderr.trim()}`,
    );
  }
  return parseManifest(proc.stdout);
}
