import { describe, expect, it } from "vitest";

import { generateHeader } from "../src/header.js";
import { fetchManifest, REQUIRED_KEYS } from "../src/manifest.js";

const manifest = fetchManifest();

describe("generateHeader", () => {
  it("is deterministic for a given manifest", () => {
    expect(generateHeader(manifest)).toBe(generateHeader(manifest));
  });

  it("defines every manifest constant with its manifest value", () => {
    const header = generateHeader(manifest);
    for (const key of REQUIRED_KEYS) {
      if (key === "ABI_VERSION" || key === "STATUS_SIZE") continue;
      const pattern = new RegExp(
        `#define ${key} (?:\\(\\([A-Za-z_]+\\))?(-?\\d+)\\)?$`,
        "m",
      );
      const match = header.match(pattern);
      expect(match, key).not.toBeNull();
      expect(Number(match![1]), key).toBe(manifest.get(key));
    }
  });

  it("pins the status struct size at compile time", () => {
    const header = generateHeader(manifest);
    expect(header).toContain(
      `_Static_assert(sizeof(MPI_Status) == ${manifest.get("STATUS_SIZE")}`,
    );
  });

  it("declares all routines as env-module imports", () => {
    const header = generateHeader(manifest);
    const names = [...header.matchAll(/MPIWASM_IMPORT\((MPI_\w+)\)/g)].map(
      (m) => m[1],
    );
    expect(new Set(names).size).toBe(30);
    for (const expected of [
      "MPI_Init", "MPI_Finalize", "MPI_Send", "MPI_Recv", "MPI_Sendrecv",
      "MPI_Isend", "MPI_Irecv", "MPI_Wait", "MPI_Waitall", "MPI_Barrier",
      "MPI_Bcast", "MPI_Reduce", "MPI_Allreduce", "MPI_Gather", "MPI_Scatter",
      "MPI_Allgather", "MPI_Alltoall", "MPI_Comm_split", "MPI_Comm_dup",
      "MPI_Comm_free", "MPI_Alloc_mem", "MPI_Free_mem", "MPI_Get_count",
      "MPI_Wtime", "MPI_Wtick", "MPI_Abort",
    ]) {
      expect(names, expected).toContain(expected);
    }
    expect(header).toContain('import_module("env")');
  });
});
