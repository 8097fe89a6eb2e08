"""Episode orchestration: policies, expert scenarios, batches, benchmarks.

Experts are ordinary policies placed in the world whose *visibility* to
other agents is scenario-controlled; they act in every scenario, including
solo. Frozen (non-trainable) policies never receive learning callbacks.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import GameConfig, validate_config
from .env import Env
from .log import TrajectoryLog, config_digest, state_to_bytes, write_log
from .observation import ObsManifest
from .rng import RngState, new_rng
from .state import WorldState
from .types import N_ACTIONS, ActionKind

_POLICY_RNG_LABEL = 9000


class Policy:
    """Behavior contract: act(obs, rng) -> action index in [0, 17).

    `trainable` marks learner slots; frozen experts never get `observe`
    callbacks. Policies may keep per-episode state via `reset`.
    """

    trainable: bool = False

    def setup(self, manifest: ObsManifest) -> None:
        self.manifest = manifest

    def reset(self, agent_id: int, rng: RngState) -> None:
        pass

    def act(self, obs: np.ndarray, rng: RngState) -> int:
        raise NotImplementedError

    def observe(self, obs: np.ndarray, action: int, reward: float,
                done: bool) -> None:
        pass


class NoopPolicy(Policy):
    def act(self, obs, rng):
        return int(ActionKind.NOOP)


class RandomPolicy(Policy):
    """Uniform over all 17 actions."""

    def act(self, obs, rng):
        return rng.randbelow(N_ACTIONS)


class ScriptedPolicy(Policy):
    """Plays a fixed action list, then NOOPs."""

    def __init__(self, script):
        self.script = list(script)
        self._t = 0

    def reset(self, agent_id, rng):
        self._t = 0

    def act(self, obs, rng):
        a = self.script[self._t] if self._t < len(self.script) else int(ActionKind.NOOP)
        self._t += 1
        return int(a)


class BiasedRandomPolicy(Policy):
    """Random policy that favors DO/PLACE/MAKE, for tech-tree fuzzing."""

    def act(self, obs, rng):
        u = rng.randbelow(100)
        if u < 35:
            return int(ActionKind.DO)
        if u < 55:
            return 1 + rng.randbelow(4)       # movement
        if u < 75:
            return 7 + rng.randbelow(4)       # placements
        if u < 95:
            return 11 + rng.randbelow(6)      # crafts
        return rng.randbelow(N_ACTIONS)


class SurvivorPolicy(Policy):
    """Hand-coded smoke-test heuristic: drink, eat, fight back, chop wood."""

    _NEED = 0.45

    def setup(self, manifest):
        super().setup(manifest)
        self.r = manifest.view_rows
        self.c = manifest.view_cols
        self.cells = self.r * self.c
        self.center = (self.r // 2, self.c // 2)

    def _grid(self, obs, channel):
        start = channel * self.cells
        return obs[start:start + self.cells].reshape(self.r, self.c)

    def _toward(self, dr, dc, rng):
        if abs(dr) >= abs(dc):
            return int(ActionKind.DOWN) if dr > 0 else int(ActionKind.UP)
        return int(ActionKind.RIGHT) if dc > 0 else int(ActionKind.LEFT)

    def _seek(self, obs, channels, rng):
        """Move toward (or DO when facing-adjacent) the nearest target."""
        best = None
        for ch in channels:
            grid = self._grid(obs, ch)
            for r, c in np.argwhere(grid > 0.5):
                d = max(abs(int(r) - self.center[0]), abs(int(c) - self.center[1]))
                if best is None or d < best[0]:
                    best = (d, int(r) - self.center[0], int(c) - self.center[1])
        if best is None:
            return None
        d, dr, dc = best
        if abs(dr) + abs(dc) == 1:
            # face it, then DO next step; facing action also moves only if
            # walkable, which targets never are
            face = self._toward(dr, dc, rng)
            return int(ActionKind.DO) if rng.randbelow(2) else face
        return self._toward(dr, dc, rng)

    def act(self, obs, rng):
        from .types import BlockKind
        off = 21 * self.cells
        drink = obs[off + 14]
        food = obs[off + 13]
        zombie = self._grid(obs, 16)
        if zombie.any():
            a = self._seek(obs, (16,), rng)
            if a is not None:
                return a
        if drink < self._NEED:
            a = self._seek(obs, (int(BlockKind.WATER),), rng)
            if a is not None:
                return a
        if food < self._NEED:
            a = self._seek(obs, (18, int(BlockKind.RIPE_PLANT)), rng)
            if a is not None:
                return a
        a = self._seek(obs, (int(BlockKind.TREE),), rng)
        if a is not None and rng.randbelow(3) == 0:
            return a
        return 1 + rng.randbelow(4)


POLICY_REGISTRY = {
    "noop": NoopPolicy,
    "random": RandomPolicy,
    "survivor": SurvivorPolicy,
    "biased_random": BiasedRandomPolicy,
}


def make_policies(names: list[str]) -> list[Policy]:
    return [POLICY_REGISTRY[n]() for n in names]


@dataclass(frozen=True)
class ScenarioSpec:
    """Expert wiring: which slots are experts and how long they stay
    visible. Experts are present and acting in every variant; only their
    visibility differs."""

    kind: str                       # "solo" | "full_expert" | "half_expert"
    k: int = 50
    expert_slots: tuple[int, ...] | None = None   # default: every slot but 0
    reward_scenario: str | None = None
    fixed_timesteps: bool | None = None

    def slots(self, n_agents: int) -> tuple[int, ...]:
        if self.expert_slots is not None:
            return self.expert_slots
        return tuple(range(1, n_agents))

    def apply(self, cfg: GameConfig) -> GameConfig:
        if self.kind not in ("solo", "full_expert", "half_expert"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "half_expert" and self.k < 0:
            raise ValueError("half_expert k must be >= 0")
        rule = {"solo": "never", "full_expert": "always",
                "half_expert": f"first_k:{self.k}"}[self.kind]
        schedule = ["always"] * cfg.n_agents
        for slot in self.slots(cfg.n_agents):
            schedule[slot] = rule
        changes: dict = {"expert_schedule": tuple(schedule)}
        if self.reward_scenario is not None:
            changes["reward_scenario"] = self.reward_scenario
            if self.reward_scenario == "attack":
                changes["attack_enabled"] = True
        if self.fixed_timesteps is not None:
            changes["fixed_timestep_mode"] = self.fixed_timesteps
        return validate_config(dataclasses.replace(cfg, **changes))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "k": self.k,
                "expert_slots": None if self.expert_slots is None
                else list(self.expert_slots),
                "reward_scenario": self.reward_scenario,
                "fixed_timesteps": self.fixed_timesteps}


def run_episode(cfg: GameConfig, policies: list[Policy], seed: int,
                scenario: ScenarioSpec | None = None,
                horizon: int | None = None,
                world: WorldState | None = None,
                backend: str = "fast") -> TrajectoryLog:
    """Play one episode and return its fully populated log."""
    eff = scenario.apply(cfg) if scenario is not None else cfg
    if horizon is not None:
        eff = validate_config(dataclasses.replace(eff, max_episode_steps=horizon))
    if len(policies) != eff.n_agents:
        raise ValueError(f"need {eff.n_agents} policies, got {len(policies)}")

    env = Env(eff, backend=backend)
    obs = env.reset(seed, world=world)
    base = new_rng(seed)
    rngs = [base.substream(_POLICY_RNG_LABEL + i) for i in range(eff.n_agents)]
    for i, pol in enumerate(policies):
        pol.setup(env.manifest)
        pol.reset(i, rngs[i])

    actions_log, digests, events_log, rewards_log, dones_log = [], [], [], [], []
    invalid = np.zeros(eff.n_agents, dtype=np.int64)
    header = {
        "format": [1, 0],
        "config": eff.to_dict(),
        "config_digest": config_digest(eff),
        "seed": seed,
        "n_agents": eff.n_agents,
        "manifest_version": env.manifest.version,
        "obs_length": env.manifest.length,
        "engine_version": _engine_version(),
        "world": {"kind": "embedded"} if world is not None else {"kind": "generated"},
        "world_digest": env.state.digest(),
        "scenario": scenario.to_dict() if scenario is not None else None,
    }
    world_blob = state_to_bytes(world) if world is not None else None

    while True:
        acts = np.zeros(eff.n_agents, dtype=np.int32)
        for i, pol in enumerate(policies):
            a = pol.act(obs[i], rngs[i])
            if not isinstance(a, (int, np.integer)) or not 0 <= int(a) < N_ACTIONS:
                invalid[i] += 1
                a = int(ActionKind.NOOP)
            acts[i] = int(a)
        obs, rewards, dones, info = env.step(acts)
        actions_log.append(acts.astype(np.int8))
        digests.append(np.frombuffer(bytes.fromhex(env.state.digest()),
                                     dtype=np.uint8))
        events_log.append(info["events"])
        rewards_log.append(rewards)
        dones_log.append(dones)
        for i, pol in enumerate(policies):
            if pol.trainable:
                pol.observe(obs[i], int(acts[i]), float(rewards[i]),
                            bool(dones[i]))
        if dones.all():
            break

    t_steps = len(actions_log)
    return TrajectoryLog(
        header=header,
        actions=np.array(actions_log, dtype=np.int8),
        digests=np.array(digests, dtype=np.uint8).reshape(t_steps, 16),
        events=events_log,
        rewards=np.array(rewards_log, dtype=np.float64),
        dones=np.array(dones_log, dtype=bool),
        final_ach=env.state.ach_mask.copy(),
        invalid_counts=invalid,
        world_blob=world_blob,
    )


def _engine_version() -> str:
    from . import __version__
    return __version__


def _batch_worker(args):
    cfg_dict, scenario, policy_names, seed, horizon, backend = args
    from .config import config_from_dict
    cfg = config_from_dict(cfg_dict)
    policies = make_policies(policy_names)
    return run_episode(cfg, policies, seed, scenario=scenario,
                       horizon=horizon, backend=backend)


def run_batch(cfg: GameConfig, policy_names: list[str], seeds: list[int],
              scenario: ScenarioSpec | None = None,
              parallelism: int = 1, horizon: int | None = None,
              backend: str = "fast",
              out_dir: str | None = None):
    """Run one episode per seed; identical results for any parallelism.

    Returns (logs, stats). Episode errors are collected per seed, not
    raised, so one bad episode cannot abort a batch.
    """
    if len(set(seeds)) != len(seeds):
        raise ValueError("duplicate seeds in batch")
    jobs = [(cfg.to_dict(), scenario, policy_names, s, horizon, backend)
            for s in seeds]
    logs: list[TrajectoryLog | None] = [None] * len(seeds)
    errors: dict[int, str] = {}
    if parallelism <= 1:
        for idx, job in enumerate(jobs):
            try:
                logs[idx] = _batch_worker(job)
            except Exception as exc:  # noqa: BLE001 - reported per episode
                errors[seeds[idx]] = repr(exc)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for idx, result in enumerate(pool.map(_batch_worker_safe, jobs)):
                if isinstance(result, str):
                    errors[seeds[idx]] = result
                else:
                    logs[idx] = result

    done_logs = [lg for lg in logs if lg is not None]
    stats = batch_stats(done_logs)
    stats["errors"] = errors
    if out_dir is not None:
        import os
        os.makedirs(out_dir, exist_ok=True)
        for lg in done_logs:
            write_log(lg, os.path.join(out_dir, f"episode_{lg.seed}.gclog"))
    return done_logs, stats


def _batch_worker_safe(args):
    try:
        return _batch_worker(args)
    except Exception as exc:  # noqa: BLE001
        return repr(exc)


def batch_stats(logs) -> dict:
    if not logs:
        return {"episodes": 0}
    per_episode = np.array([lg.achievements_per_agent() for lg in logs],
                           dtype=np.float64)     # (E, N)
    lengths = np.array([lg.n_steps for lg in logs])
    return {
        "episodes": len(logs),
        "mean_achievements": float(per_episode.mean()),
        "std_achievements": float(per_episode.std(ddof=1)) if per_episode.size > 1 else 0.0,
        "per_agent_mean": per_episode.mean(axis=0).tolist(),
        "mean_episode_length": float(lengths.mean()),
        "total_steps": int(lengths.sum()),
    }


def _bench_worker(args):
    cfg_dict, duration, seed = args
    from .config import config_from_dict
    report = bench(config_from_dict(cfg_dict), duration=duration, seed=seed)
    return report["env_steps_per_s"]


def bench_parallel(cfg: GameConfig, duration: float = 5.0,
                   workers: int = 2) -> dict:
    """Aggregate stepping throughput across independent worker processes,
    one environment instance each."""
    jobs = [(cfg.to_dict(), duration, 1000 + w) for w in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        rates = list(pool.map(_bench_worker, jobs))
    total = float(sum(rates))
    return {
        "workers": workers,
        "env_steps_per_s": total,
        "agent_steps_per_s": total * cfg.n_agents,
        "per_worker_env_steps_per_s": rates,
    }


def bench(cfg: GameConfig, duration: float = 5.0, batch: int = 1,
          with_logging: bool = False, backend: str = "fast",
          seed: int = 0) -> dict:
    """Steady-state stepping throughput with symbolic encoding.

    Episode resets run outside the timed sections and are reported
    separately; per-phase numbers split raw stepping from observation
    encoding and log appends.
    """
    from .vector import BatchedEnv

    rng = np.random.default_rng(seed)
    actions = rng.integers(0, N_ACTIONS, size=(8192, batch, cfg.n_agents),
                           ).astype(np.int32)

    venv = BatchedEnv(cfg, batch, backend=backend)
    venv.reset([seed + i for i in range(batch)])
    for w in range(200):            # warm JIT and caches
        venv.step(actions[w % len(actions)])

    stepped = 0
    t_step = 0.0
    t_log = 0.0
    t_reset = 0.0
    log_rows = []
    t_end = time.perf_counter() + duration
    i = 0
    while time.perf_counter() < t_end:
        t0 = time.perf_counter()
        obs, rewards, dones, infos = venv.step(actions[i % len(actions)])
        t_step += time.perf_counter() - t0
        if with_logging:
            t1 = time.perf_counter()
            log_rows.append((actions[i % len(actions)].copy(),
                             rewards.copy(), [inf["events"] for inf in infos]))
            t_log += time.perf_counter() - t1
        t_reset += venv.consume_reset_time()
        stepped += 1
        i += 1

    env_steps = stepped * batch
    agent_steps = env_steps * cfg.n_agents
    timed = t_step + t_log
    # encode share measured separately on one instance
    single = venv.envs[0]
    n_enc = 2000
    t0 = time.perf_counter()
    for _ in range(n_enc):
        single._encode()
    encode_us = (time.perf_counter() - t0) / n_enc * 1e6
    return {
        "backend": backend,
        "batch": batch,
        "n_agents": cfg.n_agents,
        "env_steps_per_s": env_steps / timed,
        "agent_steps_per_s": agent_steps / timed,
        "steps_timed": env_steps,
        "step_seconds": t_step,
        "log_seconds": t_log,
        "reset_seconds": t_reset,
        "encode_us_per_env_step": encode_us,
        "logging": with_logging,
    }
