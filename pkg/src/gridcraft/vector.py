"""Batched environments behind flat numeric buffers.

K instances share one config; actions arrive as a (K, n_agents) integer
array and observations leave as one (K, n_agents, obs_len) float32 buffer.
Finished episodes auto-reset (configurable) with deterministically derived
follow-up seeds, so a batch is reproducible end to end from its seed list.
"""

from __future__ import annotations

import time

import numpy as np

from .config import GameConfig, validate_config
from .env import Env
from .rng import fold
from .types import N_ACTIONS, ActionKind


class BatchedEnv:
    """Owns K environment instances exclusively; not thread-safe."""

    def __init__(self, cfg: GameConfig, k: int, auto_reset: bool = True,
                 backend: str = "fast"):
        if k < 1:
            raise ValueError("batch size must be >= 1")
        self.cfg = validate_config(cfg)
        self.k = k
        self.auto_reset = auto_reset
        self.envs = [Env(cfg, backend=backend) for _ in range(k)]
        self.manifest = self.envs[0].manifest
        self._seeds: list[int] = []
        self._episode_idx = [0] * k
        self._reset_time = 0.0
        n = cfg.n_agents
        self._obs = np.zeros((k, n, self.manifest.length), dtype=np.float32)
        self._rewards = np.zeros((k, n), dtype=np.float64)
        self._dones = np.zeros((k, n), dtype=bool)

    @property
    def n_agents(self) -> int:
        return self.cfg.n_agents

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    def reset(self, seeds: list[int]) -> np.ndarray:
        if len(seeds) != self.k:
            raise ValueError(f"need {self.k} seeds, got {len(seeds)}")
        self._seeds = list(seeds)
        self._episode_idx = [0] * self.k
        for i, env in enumerate(self.envs):
            self._obs[i] = env.reset(seeds[i])
        return self._obs.copy()

    def step(self, actions) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[dict]]:
        """Step every instance. Out-of-range actions become NOOP and are
        counted in the per-instance info dict."""
        if not self._seeds:
            raise RuntimeError("reset the batch before stepping")
        acts = np.asarray(actions, dtype=np.int32)
        if acts.shape != (self.k, self.cfg.n_agents):
            raise ValueError(
                f"actions must have shape {(self.k, self.cfg.n_agents)}, "
                f"got {acts.shape}")
        invalid = (acts < 0) | (acts >= N_ACTIONS)
        if invalid.any():
            acts = np.where(invalid, int(ActionKind.NOOP), acts)
        infos: list[dict] = []
        for i, env in enumerate(self.envs):
            obs, rewards, dones, info = env.step(acts[i])
            info["invalid_actions"] = invalid[i].sum()
            info["episode_end"] = bool(dones.all())
            if dones.all() and self.auto_reset:
                t0 = time.perf_counter()
                self._episode_idx[i] += 1
                next_seed = fold(self._seeds[i], self._episode_idx[i])
                info["next_seed"] = next_seed
                obs = env.reset(next_seed)
                self._reset_time += time.perf_counter() - t0
            self._obs[i] = obs
            self._rewards[i] = rewards
            self._dones[i] = dones
            infos.append(info)
        return self._obs.copy(), self._rewards.copy(), self._dones.copy(), infos

    def consume_reset_time(self) -> float:
        """Accumulated auto-reset seconds since the last call (for bench)."""
        t, self._reset_time = self._reset_time, 0.0
        return t
