import pytest

from gridcraft.config import GameConfig, validate_config
from gridcraft.state import PC, PDIR, PDRINK, PENERGY, PFOOD, PHP, PINV, PR
from gridcraft.types import Direction, Item
from gridcraft.worldgen import world_from_text


def quiet_cfg(**overrides) -> GameConfig:
    """Arena config: no mob spawning, no decay surprises unless asked."""
    base = dict(
        map_width=16, map_height=12, n_agents=2,
        zombie_spawn_prob=0.0, skeleton_spawn_prob=0.0, cow_spawn_prob=0.0,
        intrinsic_decay_interval=10_000, health_regen_interval=10_000,
        day_length=10_000, spawn_min_distance=1,
    )
    base.update(overrides)
    return validate_config(GameConfig(**base))


def grass_text(cfg: GameConfig, placements: dict[tuple[int, int], str]) -> str:
    """All-grass map text with single characters dropped at (row, col)."""
    rows = [["."] * cfg.map_width for _ in range(cfg.map_height)]
    for (r, c), ch in placements.items():
        rows[r][c] = ch
    return "\n".join("".join(r) for r in rows)


def arena(cfg: GameConfig, placements: dict[tuple[int, int], str]):
    """Fixture world: all grass plus the given placements (digits = players)."""
    return world_from_text(grass_text(cfg, placements), cfg)


def put_player(state, agent, r, c, direction=Direction.UP):
    state.player_arr[agent, PR] = r
    state.player_arr[agent, PC] = c
    state.player_arr[agent, PDIR] = int(direction)


def give(state, agent, item: Item, n: int):
    state.player_arr[agent, PINV + int(item)] = n


def set_meters(state, agent, health_halves=None, food=None, drink=None,
               energy=None):
    row = state.player_arr[agent]
    if health_halves is not None:
        row[PHP] = health_halves
    if food is not None:
        row[PFOOD] = food
    if drink is not None:
        row[PDRINK] = drink
    if energy is not None:
        row[PENERGY] = energy


@pytest.fixture
def cfg2():
    return quiet_cfg()


@pytest.fixture
def world2(cfg2):
    return arena(cfg2, {(5, 4): "0", (5, 10): "1"})
