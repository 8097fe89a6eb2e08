export { GridcraftClient, EngineError } from "./client.js";
export type { ClientOptions, StepResult, Manifest } from "./client.js";
export {
  b64ToF32,
  b64ToF64,
  b64ToU8,
  i32ToB64,
  flattenActions,
  fnv1a64Hex,
} from "./protocol.js";
export type {
  ManifestResponse,
  ResetResponse,
  StepResponse,
  ErrorResponse,
} from "./protocol.js";
