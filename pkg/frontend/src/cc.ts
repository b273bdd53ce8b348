#!/usr/bin/env node
/**
 * `mpiwasm-cc`: compiles C sources into a wasm32 module the embedder can run.
 *
 * Generates `mpi.h` from the installed embedder's ABI manifest, links in the
 * bundled freestanding runtime, and drives clang in -nostdlib mode so no
 * sysroot is needed.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";

import { generateHeader } from "./header.js";
import { fetchManifest, type Manifest } from "./manifest.js";

const RUNTIME_DIR = resolve(dirname(fileURLToPath(import.meta.url)), "..", "runtime");

export interface CompileOptions {
  sources: string[];
  output: string;
  opt?: "O0" | "O1" | "O2" | "O3";
  simd?: boolean;
  manifest?: Manifest;
}

export class CompileError extends Error {}

/** Compiles `sources` to `output`; throws CompileError on any failure. */
export function compile(options: CompileOptions): void {
  if (options.sources.length === 0) {
    throw new CompileError("no input files");
  }
  const manifest = options.manifest ?? fetchManifest();
  const includeDir = mkdtempSync(join(tmpdir(), "mpiwasm-cc-"));
  try {
    writeFileSync(join(includeDir, "mpi.h"), generateHeader(manifest));
    const args = [
      "--target=wasm32-unknown-unknown",
      `-${options.opt ?? "O2"}`,
      "-nostdlib",
      "-Wall",
      `-I${includeDir}`,
      `-I${RUNTIME_DIR}`,
      "-o",
      options.output,
      ...options.sources,
      join(RUNTIME_DIR, "crt.c"),
      "-Wl,--export=malloc",
      "-Wl,--export=free",
    ];
    if (options.simd) args.splice(3, 0, "-msimd128");
    const proc = spawnSync("clang", args, { encoding: "utf8" });
    if (proc.error) {
      throw new CompileError(`cannot run clang: ${proc.error.message}`);
    }
    if (proc.status !== 0) {
      throw new CompileError(`clang exited ${proc.status}:\n${proc.stderr}`);
    }
  } finally {
    rmSync(includeDir, { recursive: true, force: true });
  }
}

function usage(): never {
  process.stderr.write(
    "usage: mpiwasm-cc [--opt O0|O1|O2|O3] [--simd] -o OUT.wasm SRC.c...\n",
  );
  process.exit(2);
}

export function main(argv: string[]): void {
  const sources: string[] = [];
  let output: string | undefined;
  let opt: CompileOptions["opt"];
  let simd = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "-o") {
      output = argv[++i];
      if (output === undefined) usage();
    } else if (arg === "--opt") {
      const level = argv[++i];
      if (level !== "O0" && level !== "O1" && level !== "O2" && level !== "O3") usage();
      opt = level;
    } else if (arg === "--simd") {
      simd = true;
    } else if (arg.startsWith("-")) {
      usage();
    } else {
      sources.push(arg);
    }
  }
  if (output === undefined || sources.length === 0) usage();
  try {
    compile({ sources, output, opt, simd });
  } catch (err) {
    if (err instanceof Error) {
      process.stderr.write(`mpiwasm-cc: ${err.message}\n`);
      process.exit(1);
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === new URL(`file://${process.argv[1]}`).href) {
  main(process.argv.slice(2));
}
