/**
 * Wire types and buffer codecs for the engine's stdio JSON protocol.
 *
 * Numeric buffers travel as base64-encoded little-endian bytes; decoding
 * copies into aligned typed arrays so callers can hand them straight to
 * training code.
 */

export interface ManifestSection {
  name: string;
  offset: number;
  shape: number[];
}

export interface Manifest {
  version: number;
  n_agents: number;
  view_rows: number;
  view_cols: number;
  length: number;
  channels: string[];
  sections: ManifestSection[];
}

export interface ManifestResponse {
  ok: true;
  manifest: Manifest;
  n_agents: number;
  n_actions: number;
  batch: number;
}

export interface ResetResponse {
  ok: true;
  obs: string;
  obs_shape: number[];
}

export interface StepResponse extends ResetResponse {
  rewards: string;
  rewards_shape: number[];
  dones: string;
  dones_shape: number[];
  invalid_actions: number[];
  episode_end: boolean[];
  events?: number[][][];
}

export interface ErrorResponse {
  ok: false;
  error: { type: string; message: string };
}

export type Response =
  | ManifestResponse
  | ResetResponse
  | StepResponse
  | ErrorResponse
  | { ok: true; closing: true };

function alignedBytes(b64: string): Uint8Array {
  const raw = Buffer.from(b64, "base64");
  // Buffer slices share a pool; copy so the view offset is always 0.
  const copy = new Uint8Array(raw.byteLength);
  copy.set(raw);
  return copy;
}

export function b64ToF32(b64: string): Float32Array {
  const bytes = alignedBytes(b64);
  return new Float32Array(bytes.buffer, 0, bytes.byteLength / 4);
}

export function b64ToF64(b64: string): Float64Array {
  const bytes = alignedBytes(b64);
  return new Float64Array(bytes.buffer, 0, bytes.byteLength / 8);
}

export function b64ToU8(b64: string): Uint8Array {
  return alignedBytes(b64);
}

export function i32ToB64(values: Int32Array): string {
  return Buffer.from(values.buffer, values.byteOffset, values.byteLength)
    .toString("base64");
}

export function flattenActions(actions: number[][] | Int32Array): Int32Array {
  if (actions instanceof Int32Array) {
    return actions;
  }
  const flat = new Int32Array(actions.length * (actions[0]?.length ?? 0));
  let k = 0;
  for (const row of actions) {
    for (const a of row) {
      flat[k++] = a;
    }
  }
  return flat;
}

/** FNV-1a 64-bit over raw bytes; used to compare large buffers bit-exactly. */
export function fnv1a64Hex(bytes: Uint8Array): string {
  let hash = 0xcbf29ce484222325n;
  const prime = 0x100000001b3n;
  const mask = 0xffffffffffffffffn;
  for (let i = 0; i < bytes.length; i++) {
    hash ^= BigInt(bytes[i]);
    hash = (hash * prime) & mask;
  }
  return hash.toString(16).padStart(16, "0");
}
