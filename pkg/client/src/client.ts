/**
 * Batched environment client over a child engine process.
 *
 * One client owns one engine subprocess speaking newline-delimited JSON on
 * stdio. Requests are strictly serialized per handle (reset/step cannot
 * overlap); separate clients run independent engines and may be used
 * concurrently.
 */

import { ChildProcessByStdio, spawn } from "node:child_process";
import type { Readable, Writable } from "node:stream";
import { createInterface, Interface } from "node:readline";

import {
  ErrorResponse,
  Manifest,
  ManifestResponse,
  Response,
  StepResponse,
  b64ToF32,
  b64ToF64,
  b64ToU8,
  flattenActions,
  i32ToB64,
} from "./protocol.js";

export interface ClientOptions {
  /** Path to a config JSON file; engine defaults apply when omitted. */
  configPath?: string;
  /** Number of environment instances stepped together. */
  batch?: number;
  /** Python interpreter launching the engine (default "python3"). */
  pythonBin?: string;
  /** Reset finished episodes automatically (default true). */
  autoReset?: boolean;
  /** Include per-step event rows in step results. */
  events?: boolean;
}

export interface StepResult {
  obs: Float32Array;
  obsShape: number[];
  rewards: Float64Array;
  rewardsShape: number[];
  dones: Uint8Array;
  donesShape: number[];
  invalidActions: number[];
  episodeEnd: boolean[];
  events?: number[][][];
  /** raw base64 payloads, for bit-exact comparisons */
  raw: { obs: string; rewards: string; dones: string };
}

export class EngineError extends Error {
  constructor(public readonly kind: string, message: string) {
    super(`${kind}: ${message}`);
  }
}

export class GridcraftClient {
  private proc: ChildProcessByStdio<Writable, Readable, null>;
  private lines: Interface;
  private pending: Array<{
    resolve: (r: Response) => void;
    reject: (e: Error) => void;
  }> = [];
  private closed = false;
  readonly batch: number;

  private constructor(proc: ChildProcessByStdio<Writable, Readable, null>,
                      batch: number) {
    this.proc = proc;
    this.batch = batch;
    this.lines = createInterface({ input: proc.stdout });
    this.lines.on("line", (line) => {
      const waiter = this.pending.shift();
      if (!waiter) {
        return;
      }
      try {
        waiter.resolve(JSON.parse(line) as Response);
      } catch (err) {
        waiter.reject(err as Error);
      }
    });
    proc.on("exit", (code) => {
      const err = new EngineError("engine_exited", `exit code ${code}`);
      while (this.pending.length) {
        this.pending.shift()!.reject(err);
      }
    });
  }

  static spawn(options: ClientOptions = {}): GridcraftClient {
    const batch = options.batch ?? 1;
    const args = ["-m", "gridcraft", "serve", "--batch", String(batch)];
    if (options.configPath) {
      args.push("--config", options.configPath);
    }
    if (options.autoReset === false) {
      args.push("--no-auto-reset");
    }
    if (options.events) {
      args.push("--events");
    }
    const proc = spawn(options.pythonBin ?? "python3", args, {
      stdio: ["pipe", "pipe", "inherit"],
    });
    return new GridcraftClient(proc, batch);
  }

  private rpc(request: object): Promise<Response> {
    if (this.closed) {
      return Promise.reject(new EngineError("closed", "client is closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.proc.stdin.write(JSON.stringify(request) + "\n");
    });
  }

  private unwrap<T extends Response>(resp: Response): T {
    if (!resp.ok) {
      const err = (resp as ErrorResponse).error;
      throw new EngineError(err.type, err.message);
    }
    return resp as T;
  }

  async manifest(): Promise<ManifestResponse> {
    return this.unwrap<ManifestResponse>(await this.rpc({ op: "manifest" }));
  }

  async reset(seeds: number[]): Promise<{
    obs: Float32Array;
    obsShape: number[];
    raw: string;
  }> {
    const resp = this.unwrap<StepResponse>(
      await this.rpc({ op: "reset", seeds }),
    );
    return {
      obs: b64ToF32(resp.obs),
      obsShape: resp.obs_shape,
      raw: resp.obs,
    };
  }

  async step(actions: number[][] | Int32Array): Promise<StepResult> {
    const flat = flattenActions(actions);
    const resp = this.unwrap<StepResponse>(
      await this.rpc({ op: "step", actions: i32ToB64(flat) }),
    );
    return {
      obs: b64ToF32(resp.obs),
      obsShape: resp.obs_shape,
      rewards: b64ToF64(resp.rewards),
      rewardsShape: resp.rewards_shape,
      dones: b64ToU8(resp.dones),
      donesShape: resp.dones_shape,
      invalidActions: resp.invalid_actions,
      episodeEnd: resp.episode_end,
      events: resp.events,
      raw: { obs: resp.obs, rewards: resp.rewards, dones: resp.dones },
    };
  }

  async close(): Promise<void> {
    if (this.closed) {
      return;
    }
    try {
      await this.rpc({ op: "close" });
    } catch {
      // engine may already be gone
    }
    this.closed = true;
    this.proc.stdin.end();
  }
}

export type { Manifest };
