"""Line-delimited JSON endpoint over stdio for external training stacks.

One request per line, one response per line. Numeric buffers travel as
base64-encoded little-endian arrays so any client language can map them
onto typed arrays without parsing numbers.

Requests:
    {"op": "manifest"}
    {"op": "reset", "seeds": [..K ints..]}
    {"op": "step", "actions": "<b64 i32 K*N>"}   (or nested lists)
    {"op": "close"}

Responses carry "ok": true plus op-specific fields, or "ok": false with an
"error" object. Observation buffers are float32, rewards float64, dones
uint8, all C-order with an explicit "shape".
"""

from __future__ import annotations

import base64
import json
import sys

import numpy as np

from .config import GameConfig
from .vector import BatchedEnv


def array_to_b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode("ascii")


def b64_to_array(data: str, dtype, shape) -> np.ndarray:
    buf = base64.b64decode(data)
    return np.frombuffer(buf, dtype=dtype).reshape(shape).copy()


def _obs_payload(venv: BatchedEnv, obs: np.ndarray) -> dict:
    return {
        "obs": array_to_b64(obs.astype("<f4", copy=False)),
        "obs_shape": list(obs.shape),
    }


def handle_request(venv: BatchedEnv, req: dict, include_events: bool) -> dict:
    op = req.get("op")
    if op == "manifest":
        return {
            "ok": True,
            "manifest": venv.manifest.to_dict(),
            "n_agents": venv.n_agents,
            "n_actions": venv.n_actions,
            "batch": venv.k,
        }
    if op == "reset":
        seeds = req["seeds"]
        obs = venv.reset([int(s) for s in seeds])
        out = {"ok": True}
        out.update(_obs_payload(venv, obs))
        return out
    if op == "step":
        raw = req["actions"]
        if isinstance(raw, str):
            acts = b64_to_array(raw, "<i4", (venv.k, venv.n_agents))
        else:
            acts = np.asarray(raw, dtype=np.int32).reshape(venv.k, venv.n_agents)
        obs, rewards, dones, infos = venv.step(acts)
        out = {
            "ok": True,
            "rewards": array_to_b64(rewards.astype("<f8", copy=False)),
            "rewards_shape": list(rewards.shape),
            "dones": array_to_b64(dones.astype("<u1")),
            "dones_shape": list(dones.shape),
            "invalid_actions": [int(inf["invalid_actions"]) for inf in infos],
            "episode_end": [bool(inf["episode_end"]) for inf in infos],
        }
        out.update(_obs_payload(venv, obs))
        if include_events:
            out["events"] = [inf["events"].tolist() for inf in infos]
        return out
    if op == "close":
        return {"ok": True, "closing": True}
    return {"ok": False,
            "error": {"type": "bad_request", "message": f"unknown op {op!r}"}}


def serve_loop(cfg: GameConfig, batch: int, auto_reset: bool = True,
               include_events: bool = False, stdin=None, stdout=None) -> int:
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    venv = BatchedEnv(cfg, batch, auto_reset=auto_reset)
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            resp = handle_request(venv, req, include_events)
        except Exception as exc:  # noqa: BLE001 - protocol boundary
            resp = {"ok": False,
                    "error": {"type": type(exc).__name__, "message": str(exc)}}
        stdout.write(json.dumps(resp) + "\n")
        stdout.flush()
        if resp.get("closing"):
            return 0
    return 0
