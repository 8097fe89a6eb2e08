"""Reward composition per scenario, plus attack conservation."""

import numpy as np

from conftest import arena, put_player, quiet_cfg, set_meters
from gridcraft.engine import step
from gridcraft.rng import new_rng
from gridcraft.state import PHP, PINV
from gridcraft.types import ActionKind, Direction, EventType, Item, events_of

DO = int(ActionKind.DO)
NOOP = int(ActionKind.NOOP)


def test_first_achievement_with_no_health_change_pays_one():
    cfg = quiet_cfg(n_agents=1)
    world = arena(cfg, {(5, 4): "0", (5, 5): "T"})
    put_player(world, 0, 5, 4, Direction.RIGHT)
    res = step(world, [DO], cfg)
    assert res.rewards[0] == 1.0


def test_repeat_collection_pays_zero():
    cfg = quiet_cfg(n_agents=1)
    world = arena(cfg, {(5, 4): "0", (5, 5): "T", (4, 4): "T"})
    put_player(world, 0, 5, 4, Direction.RIGHT)
    state = step(world, [DO], cfg).state
    res = step(state, [int(ActionKind.UP)], cfg)       # turn to second tree
    res = step(res.state, [DO], cfg)
    assert res.state.player_arr[0, PINV + Item.WOOD] == 2
    assert res.rewards[0] == 0.0


def test_health_loss_scales_at_point_one():
    # zombie hit for 2 health, no achievements: reward -0.2
    cfg = quiet_cfg(n_agents=1, zombie_damage=2)
    world = arena(cfg, {(5, 4): "0", (5, 5): "Z"})
    res = step(world, [NOOP], cfg)
    assert res.rewards[0] == 0.1 * (-2.0)


def test_unlock_and_health_gain_compose():
    # one achievement plus +1 health in the same step pays 1.1
    cfg = quiet_cfg(n_agents=1, health_regen_interval=1)
    world = arena(cfg, {(5, 4): "0", (5, 5): "T"})
    put_player(world, 0, 5, 4, Direction.RIGHT)
    set_meters(world, 0, health_halves=16)
    res = step(world, [DO], cfg)
    assert abs(res.rewards[0] - 1.1) < 1e-12


def test_attack_scenario_composition():
    cfg = quiet_cfg(n_agents=2, reward_scenario="attack", attack_enabled=True)
    world = arena(cfg, {(5, 4): "0", (5, 5): "1"})
    put_player(world, 0, 5, 4, Direction.RIGHT)
    set_meters(world, 0, health_halves=16)   # room for the +0.5 gain
    res = step(world, [DO, NOOP], cfg)
    assert abs(res.rewards[0] - 1.05) < 1e-9   # +1 attack, +0.1 * 0.5 health
    assert abs(res.rewards[1] - (-0.6)) < 1e-9  # -0.5 attacked, -0.1 * 1.0


def test_attack_conservation_exact_half_and_whole():
    cfg = quiet_cfg(n_agents=2, attack_enabled=True)
    for seed in range(10):
        world = arena(cfg, {(5, 4): "0", (5, 5): "1"})
        world.rng_key = new_rng(seed).key
        put_player(world, 0, 5, 4, Direction.RIGHT)
        set_meters(world, 0, health_halves=10)
        set_meters(world, 1, health_halves=12)
        res = step(world, [DO, NOOP], cfg)
        assert res.state.player_arr[0, PHP] - 10 == 1
        assert res.state.player_arr[1, PHP] - 12 == -2


def test_shared_scenario_sums_base_rewards():
    cfg = quiet_cfg(n_agents=4, map_width=24, reward_scenario="shared")
    world = arena(cfg, {(5, 4): "0", (5, 10): "1", (5, 16): "2",
                        (8, 10): "3", (5, 5): "T"})
    put_player(world, 0, 5, 4, Direction.RIGHT)
    res = step(world, [DO, NOOP, NOOP, NOOP], cfg)
    assert np.allclose(res.rewards, 1.0)


def test_proximity_scenario_pays_per_visible_neighbor():
    cfg = quiet_cfg(n_agents=3, map_width=24,
                    reward_scenario="proximity", proximity_beta=0.25)
    world = arena(cfg, {(5, 4): "0", (5, 6): "1", (5, 20): "2"})
    res = step(world, [NOOP, NOOP, NOOP], cfg)
    # 0 and 1 see each other; 2 sees nobody
    assert np.allclose(res.rewards, [0.25, 0.25, 0.0])


def test_independent_rewards_reconstruct_from_events():
    from gridcraft.runner import make_policies, run_episode
    from gridcraft.config import GameConfig, validate_config

    cfg = validate_config(GameConfig())
    log = run_episode(cfg, make_policies(["biased_random"] * 4), seed=11)
    for t in range(log.n_steps):
        events = log.events[t]
        recon = np.zeros(4)
        for row in events_of(events, EventType.ACHIEVEMENT):
            recon[row[1]] += 1.0
        for row in events_of(events, EventType.HEALTH_CHANGED):
            recon[row[1]] += 0.05 * row[2]
        assert np.array_equal(recon, log.rewards[t]), f"step {t}"
