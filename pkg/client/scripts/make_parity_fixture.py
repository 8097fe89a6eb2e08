"""Record a native-runner reference trace for the bindings parity test.

Steps a batched set of environments in-process (no wire protocol) with
uniformly random actions and writes, per step: the action buffer, the raw
reward/done payloads, and an FNV-1a digest of the observation buffer. The
TypeScript client drives the same actions through the stdio endpoint and
must match every byte.
"""

import argparse
import base64
import json

import numpy as np

from gridcraft.config import GameConfig, validate_config
from gridcraft.vector import BatchedEnv


def fnv1a64_hex(data: bytes) -> str:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return f"{h:016x}"


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--steps", type=int, default=500)
    parser.add_argument("--action-seed", type=int, default=2024)
    parser.add_argument("--out", required=True)
    parser.add_argument("--config-out", required=True,
                        help="where to write the config used, for the client")
    args = parser.parse_args()

    cfg = validate_config(GameConfig())
    with open(args.config_out, "w") as fh:
        json.dump(cfg.to_dict(), fh)

    seeds = list(range(args.seeds))
    venv = BatchedEnv(cfg, len(seeds), auto_reset=True)
    obs = venv.reset(seeds)
    initial_obs_fnv = fnv1a64_hex(obs.astype("<f4", copy=False).tobytes())

    rng = np.random.default_rng(args.action_seed)
    steps = []
    for _ in range(args.steps):
        acts = rng.integers(0, venv.n_actions,
                            size=(len(seeds), cfg.n_agents)).astype("<i4")
        obs, rewards, dones, _ = venv.step(acts)
        steps.append({
            "actions": base64.b64encode(acts.tobytes()).decode(),
            "rewards": base64.b64encode(
                rewards.astype("<f8", copy=False).tobytes()).decode(),
            "dones": base64.b64encode(
                dones.astype("<u1").tobytes()).decode(),
            "obs_fnv": fnv1a64_hex(obs.astype("<f4", copy=False).tobytes()),
        })

    fixture = {
        "seeds": seeds,
        "n_agents": cfg.n_agents,
        "obs_length": venv.manifest.length,
        "initial_obs_fnv": initial_obs_fnv,
        "steps": steps,
    }
    with open(args.out, "w") as fh:
        json.dump(fixture, fh)
    print(f"wrote {len(steps)} steps x {len(seeds)} envs to {args.out}")


if __name__ == "__main__":
    main()
