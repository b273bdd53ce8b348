export {
  parseManifest,
  fetchManifest,
  embedderCommand,
  ManifestError,
  REQUIRED_KEYS,
  type Manifest,
} from "./manifest.js";
export { generateHeader } from "./header.js";
export { compile, CompileError, type CompileOptions } from "./cc.js";
