"""Environment facade: reset/step over one world instance.

Two interchangeable backends drive the same state layout: "reference"
(readable Python, `engine` module) and "fast" (numba kernels, `fastpath`
module). They are differential-tested to produce identical digests, events,
rewards, and observations.
"""

from __future__ import annotations

import numpy as np

from . import engine
from .config import GameConfig, validate_config
from .observation import encode_all, obs_manifest
from .state import PALIVE, WorldState
from .worldgen import generate_world


class Env:
    """One environment instance; strictly single-threaded per step."""

    def __init__(self, cfg: GameConfig, backend: str = "fast"):
        self.cfg = validate_config(cfg)
        if backend not in ("fast", "reference"):
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self.manifest = obs_manifest(cfg)
        self.state: WorldState | None = None
        self._done = True
        if backend == "fast":
            from . import fastpath
            self._fast = fastpath.FastContext(cfg)
        else:
            self._fast = None

    @property
    def n_agents(self) -> int:
        return self.cfg.n_agents

    def reset(self, seed: int, world: WorldState | None = None) -> np.ndarray:
        """Start an episode from a generated world (or a caller fixture)."""
        self.state = world.copy() if world is not None else generate_world(self.cfg, seed)
        self._done = False
        return self._encode()

    def step(self, actions) -> tuple[np.ndarray, np.ndarray, np.ndarray, dict]:
        if self.state is None:
            raise engine.EpisodeOver("reset the environment before stepping")
        actions = np.asarray(actions, dtype=np.int32).reshape(-1)
        if self._fast is not None:
            rewards, dones, events = self._fast.step_inplace(self.state, actions)
        else:
            rewards, dones, events = engine.step_inplace(self.state, actions, self.cfg)
        self._done = bool(dones.all())
        info = {
            "events": events,
            "step": self.state.step_counter,
            "light": self.state.light_level,
            "alive": self.state.player_arr[:, PALIVE].astype(bool).copy(),
        }
        return self._encode(), rewards, dones, info

    @property
    def done(self) -> bool:
        return self._done

    def _encode(self) -> np.ndarray:
        if self._fast is not None:
            return self._fast.encode_all(self.state)
        return encode_all(self.state, self.cfg, self.manifest)
