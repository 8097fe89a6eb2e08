"""Intrinsic decay, regen, sleep/wake, lava, deaths, episode modes."""

from conftest import arena, quiet_cfg, set_meters
from gridcraft.engine import EpisodeOver, light_level, step
from gridcraft.state import PALIVE, PENERGY, PDRINK, PFOOD, PHP, PSLEEP
from gridcraft.types import ActionKind, EventType, events_of

import pytest

NOOP = int(ActionKind.NOOP)


def test_decay_tick_reduces_meters_and_starvation_hurts():
    cfg = quiet_cfg(n_agents=1, intrinsic_decay_interval=1)
    world = arena(cfg, {(5, 4): "0"})
    set_meters(world, 0, food=1, drink=5, energy=5)
    res = step(world, [NOOP], cfg)
    row = res.state.player_arr[0]
    assert row[PFOOD] == 0 and row[PDRINK] == 4 and row[PENERGY] == 4
    assert row[PHP] == 16   # food hit zero this tick: -1 health


def test_regen_after_full_interval():
    cfg = quiet_cfg(n_agents=1, health_regen_interval=20)
    world = arena(cfg, {(5, 4): "0"})
    set_meters(world, 0, health_halves=14)   # health 7
    state = world
    for _ in range(20):
        state = step(state, [NOOP], cfg).state
    assert state.player_arr[0, PHP] == 16    # health 8


def test_lava_kills_on_entry():
    cfg = quiet_cfg(n_agents=1)
    world = arena(cfg, {(5, 4): "0", (5, 5): "L"})
    res = step(world, [int(ActionKind.RIGHT)], cfg)
    row = res.state.player_arr[0]
    assert row[PALIVE] == 0 and row[PHP] == 0
    assert len(events_of(res.events, EventType.DEATH)) == 1
    assert res.dones.all()


def test_sleep_recovers_energy_and_wakes_in_daylight():
    cfg = quiet_cfg(n_agents=1)
    world = arena(cfg, {(5, 4): "0"})
    set_meters(world, 0, energy=6)
    state = step(world, [int(ActionKind.SLEEP)], cfg).state
    assert state.player_arr[0, PSLEEP] == 1
    woke_at = None
    for t in range(6):
        res = step(state, [NOOP], cfg)
        state = res.state
        if len(events_of(res.events, EventType.WOKE)):
            woke_at = t
            break
    assert woke_at is not None
    assert state.player_arr[0, PSLEEP] == 0
    assert state.player_arr[0, PENERGY] == 9


def test_sleeping_agent_actions_are_ignored():
    cfg = quiet_cfg(n_agents=1, day_length=300)
    world = arena(cfg, {(5, 4): "0", (5, 5): "T"})
    set_meters(world, 0, energy=1)
    world.step_counter = 150        # midnight: wake is blocked by darkness
    state = step(world, [int(ActionKind.SLEEP)], cfg).state
    res = step(state, [int(ActionKind.DO)], cfg)   # asleep: forced NOOP
    assert res.state.tiles[5, 5] == 3              # tree untouched


def test_all_noop_agents_die_exactly_at_oracle_step():
    # independent oracle: simulate the decay bookkeeping alone
    decay, regen = 25, 20

    def oracle_death_step():
        food = drink = energy = 9
        hp = 18
        t = 0
        while hp > 0:
            t += 1
            if t % decay == 0:
                food = max(0, food - 1)
                drink = max(0, drink - 1)
                energy = max(0, energy - 1)
                if food == 0 or drink == 0 or energy == 0:
                    hp = max(0, hp - 2)
            if t % regen == 0 and food > 0 and drink > 0 and energy > 0:
                hp = min(18, hp + 2)
        return t

    cfg = quiet_cfg(n_agents=2, intrinsic_decay_interval=decay,
                    health_regen_interval=regen)
    world = arena(cfg, {(5, 4): "0", (5, 10): "1"})
    expected = oracle_death_step()
    state = world
    t = 0
    while True:
        t += 1
        res = step(state, [NOOP, NOOP], cfg)
        state = res.state
        if res.dones.all():
            break
    assert t == expected


def test_fixed_timestep_mode_runs_past_death():
    cfg = quiet_cfg(n_agents=1, fixed_timestep_mode=True, max_episode_steps=30)
    world = arena(cfg, {(5, 4): "0", (5, 5): "L"})
    state = world
    steps = 0
    dead_digests = set()
    while True:
        res = step(state, [int(ActionKind.RIGHT)], cfg)
        state = res.state
        steps += 1
        if steps > 3:
            dead_digests.add(state.player_arr[0].tobytes())
        if res.dones.all():
            break
    assert steps == 30
    assert len(dead_digests) == 1   # dead player state is frozen


def test_stepping_finished_episode_raises():
    cfg = quiet_cfg(n_agents=1)
    world = arena(cfg, {(5, 4): "0", (5, 5): "L"})
    res = step(world, [int(ActionKind.RIGHT)], cfg)
    assert res.dones.all()
    with pytest.raises(EpisodeOver):
        step(res.state, [NOOP], cfg)


def test_wrong_action_vector_length_raises():
    cfg = quiet_cfg(n_agents=2)
    world = arena(cfg, {(5, 4): "0", (5, 10): "1"})
    with pytest.raises(ValueError):
        step(world, [NOOP], cfg)


def test_light_level_cycle():
    assert light_level(0, 300) == 1.0
    assert light_level(150, 300) == 0.0
    assert light_level(300, 300) == 1.0
    assert 0.0 < light_level(75, 300) < 1.0


def test_dead_player_fields_frozen_100_steps():
    cfg = quiet_cfg(n_agents=2, fixed_timestep_mode=True, max_episode_steps=120)
    world = arena(cfg, {(5, 4): "0", (5, 10): "1", (5, 5): "L"})
    res = step(world, [int(ActionKind.RIGHT), NOOP], cfg)
    assert res.state.player_arr[0, PALIVE] == 0
    frozen = res.state.player_arr[0].tobytes()
    state = res.state
    for _ in range(100):
        state = step(state, [int(ActionKind.DO), NOOP], cfg).state
        assert state.player_arr[0].tobytes() == frozen


def test_meters_and_inventory_always_clamped():
    from gridcraft.config import GameConfig, validate_config
    from gridcraft.env import Env
    from gridcraft.rng import new_rng
    from gridcraft.state import PINV

    cfg = validate_config(GameConfig(attack_enabled=True))
    env = Env(cfg)
    env.reset(seed=3)
    rng = new_rng(3)
    for _ in range(300):
        acts = [rng.randbelow(17) for _ in range(cfg.n_agents)]
        _, _, dones, _ = env.step(acts)
        players = env.state.player_arr
        assert (players[:, PHP] >= 0).all() and (players[:, PHP] <= 18).all()
        for col in (PFOOD, PDRINK, PENERGY):
            assert (players[:, col] >= 0).all() and (players[:, col] <= 9).all()
        inv = players[:, PINV:PINV + 12]
        assert (inv >= 0).all() and (inv <= 9).all()
        if dones.all():
            break
