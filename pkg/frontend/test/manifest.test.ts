import { describe, expect, it } from "vitest";

import {
  fetchManifest,
  parseManifest,
  ManifestError,
  REQUIRED_KEYS,
} from "../src/manifest.js";

describe("parseManifest", () => {
  it("accepts a minimal well-formed table", () => {
    const text = REQUIRED_KEYS.map((k, i) =>
      k === "ABI_VERSION" ? `${k}=1` : `${k}=${i}`,
    ).join("\n");
    const manifest = parseManifest(text);
    expect(manifest.get("ABI_VERSION")).toBe(1);
    expect(manifest.size).toBe(REQUIRED_KEYS.length);
  });

  it("rejects malformed lines", () => {
    expect(() => parseManifest("NO_EQUALS_SIGN")).toThrow(ManifestError);
    expect(() => parseManifest("=5")).toThrow(ManifestError);
  });

  it("rejects non-integer values", () => {
    expect(() => parseManifest("ABI_VERSION=banana")).toThrow(/non-integer/);
    expect(() => parseManifest("ABI_VERSION=1.5")).toThrow(/non-integer/);
  });

  it("rejects duplicate keys", () => {
    expect(() => parseManifest("ABI_VERSION=1\nABI_VERSION=1")).toThrow(
      /duplicate/,
    );
  });

  it("rejects missing required keys", () => {
    expect(() => parseManifest("ABI_VERSION=1")).toThrow(/missing/);
  });

  it("rejects unknown ABI versions", () => {
    const text = REQUIRED_KEYS.map((k) => `${k}=2`).join("\n");
    expect(() => parseManifest(text)).toThrow(/unsupported ABI version/);
  });
});

describe("fetchManifest", () => {
  it("reads the installed embedder's frozen ABI", () => {
    const manifest = fetchManifest();
    expect(manifest.get("ABI_VERSION")).toBe(1);
    expect(manifest.get("STATUS_SIZE")).toBe(16);
    expect(manifest.get("MPI_COMM_WORLD")).toBe(0);
    expect(manifest.get("MPI_SUCCESS")).toBe(0);
    for (const key of REQUIRED_KEYS) {
      expect(manifest.has(key), key).toBe(true);
    }
  });
});
