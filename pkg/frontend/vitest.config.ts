import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // sample tests shell out to clang and the embedder
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
