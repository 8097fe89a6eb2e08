"""Episode orchestration: determinism, scenarios, batches, policies."""

import numpy as np
import pytest
from scipy import stats

from conftest import arena, quiet_cfg
from gridcraft.config import GameConfig, validate_config
from gridcraft.observation import obs_manifest
from gridcraft.rng import new_rng
from gridcraft.runner import (NoopPolicy, Policy, RandomPolicy, ScenarioSpec,
                              bench, make_policies, run_batch, run_episode)
from gridcraft.types import N_ACTIONS

CFG = validate_config(GameConfig())


def test_same_seed_same_log():
    a = run_episode(CFG, make_policies(["random"] * 4), seed=21)
    b = run_episode(CFG, make_policies(["random"] * 4), seed=21)
    assert np.array_equal(a.actions, b.actions)
    assert np.array_equal(a.digests, b.digests)
    assert np.array_equal(a.rewards, b.rewards)


def test_all_noop_episode_ends_by_starvation():
    decay, regen = CFG.intrinsic_decay_interval, CFG.health_regen_interval

    def oracle():
        food = drink = energy = 9
        hp, t = 18, 0
        while hp > 0:
            t += 1
            if t % decay == 0:
                food, drink, energy = (max(0, v - 1) for v in (food, drink, energy))
                if min(food, drink, energy) == 0:
                    hp = max(0, hp - 2)
            if t % regen == 0 and min(food, drink, energy) > 0:
                hp = min(18, hp + 2)
        return t

    cfg = validate_config(GameConfig(
        zombie_spawn_prob=0.0, skeleton_spawn_prob=0.0, cow_spawn_prob=0.0,
        cow_cap=0, skeleton_cap=0))
    log = run_episode(cfg, make_policies(["noop"] * 4), seed=2)
    assert log.n_steps == oracle()


def test_fixed_horizon_exact_step_count():
    scenario = ScenarioSpec(kind="solo", fixed_timesteps=True)
    log = run_episode(CFG, make_policies(["random"] * 4), seed=3,
                      scenario=scenario, horizon=500)
    assert log.n_steps == 500
    assert log.dones[-1].all() and not log.dones[:-1].any()


def test_half_expert_visibility_boundary():
    scenario = ScenarioSpec(kind="half_expert", k=50)
    cfg = quiet_cfg(n_agents=2, fixed_timestep_mode=True, max_episode_steps=60)
    world = arena(cfg, {(5, 4): "0", (5, 6): "1"})
    m = obs_manifest(cfg)
    sl = m.slice_of("other_0")

    class Probe(NoopPolicy):
        def __init__(self):
            self.blocks = []

        def act(self, obs, rng):
            self.blocks.append(float(np.abs(obs[sl]).sum()))
            return 0

    probe = Probe()
    run_episode(cfg, [probe, NoopPolicy()], seed=0, scenario=scenario,
                world=world)
    # act() at step t sees the observation emitted after step t
    assert all(b > 0 for b in probe.blocks[:50])
    assert all(b == 0 for b in probe.blocks[50:])


def test_invalid_policy_actions_become_noop_and_are_counted():
    class Broken(Policy):
        def act(self, obs, rng):
            return 99

    cfg = quiet_cfg(n_agents=1, fixed_timestep_mode=True, max_episode_steps=10)
    world = arena(cfg, {(5, 4): "0"})
    log = run_episode(cfg, [Broken()], seed=0, world=world)
    assert log.invalid_counts[0] == 10
    assert (log.actions == 0).all()


def test_frozen_experts_receive_no_learning_callbacks():
    calls = []

    class Learner(RandomPolicy):
        trainable = True

        def observe(self, obs, action, reward, done):
            calls.append(("learner", action))

    class Expert(RandomPolicy):
        trainable = False

        def observe(self, obs, action, reward, done):
            calls.append(("expert", action))

    cfg = quiet_cfg(n_agents=2, fixed_timestep_mode=True, max_episode_steps=15)
    world = arena(cfg, {(5, 4): "0", (5, 10): "1"})
    run_episode(cfg, [Learner(), Expert()], seed=0, world=world)
    assert len(calls) == 15
    assert all(who == "learner" for who, _ in calls)


def test_run_batch_rejects_duplicate_seeds():
    with pytest.raises(ValueError, match="duplicate"):
        run_batch(CFG, ["random"] * 4, seeds=[1, 2, 1])


def test_run_batch_parallel_matches_sequential():
    seeds = [0, 1, 2, 3]
    seq_logs, seq_stats = run_batch(CFG, ["random"] * 4, seeds, parallelism=1)
    par_logs, par_stats = run_batch(CFG, ["random"] * 4, seeds, parallelism=2)
    for a, b in zip(seq_logs, par_logs):
        assert np.array_equal(a.digests, b.digests)
        assert np.array_equal(a.rewards, b.rewards)
    assert seq_stats["mean_achievements"] == par_stats["mean_achievements"]


def test_random_policy_histogram_uniform():
    pol = RandomPolicy()
    rng = new_rng(77)
    counts = np.zeros(N_ACTIONS)
    n = 1_000_000
    for _ in range(n):
        counts[pol.act(None, rng)] += 1
    chi2, p = stats.chisquare(counts)
    assert p > 0.01, f"chi2={chi2}, p={p}"


def test_survivor_outlives_random():
    cfg = validate_config(GameConfig(n_agents=2))
    seeds = list(range(25))
    _, rand_stats = run_batch(cfg, ["random", "random"], seeds)
    _, surv_stats = run_batch(cfg, ["survivor", "survivor"], seeds)
    assert surv_stats["mean_episode_length"] > rand_stats["mean_episode_length"]


def test_bench_reports_required_fields():
    cfg = validate_config(GameConfig())
    report = bench(cfg, duration=0.5)
    assert report["agent_steps_per_s"] == report["env_steps_per_s"] * cfg.n_agents
    assert report["agent_steps_per_s"] > 0
    assert "encode_us_per_env_step" in report


def test_bench_logging_not_faster():
    cfg = validate_config(GameConfig())
    plain = bench(cfg, duration=0.75, with_logging=False)
    logged = bench(cfg, duration=0.75, with_logging=True)
    assert plain["agent_steps_per_s"] >= logged["agent_steps_per_s"] * 0.8


def test_bench_parallel_aggregates_workers():
    from gridcraft.runner import bench_parallel
    cfg = validate_config(GameConfig())
    report = bench_parallel(cfg, duration=0.4, workers=2)
    assert report["workers"] == 2
    assert len(report["per_worker_env_steps_per_s"]) == 2
    assert report["env_steps_per_s"] == sum(report["per_worker_env_steps_per_s"])
