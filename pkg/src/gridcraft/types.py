"""Enumerations and lightweight view records shared across the engine."""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class BlockKind(IntEnum):
    GRASS = 0
    SAND = 1
    WATER = 2
    TREE = 3
    STONE = 4
    PATH = 5
    COAL_ORE = 6
    IRON_ORE = 7
    DIAMOND_ORE = 8
    LAVA = 9
    TABLE = 10
    FURNACE = 11
    SAPLING = 12          # planted, not yet ripe
    RIPE_PLANT = 13
    PLACED_STONE = 14
    DARKNESS = 15         # out-of-bounds sentinel, never stored in the grid


class ActionKind(IntEnum):
    NOOP = 0
    LEFT = 1
    RIGHT = 2
    UP = 3
    DOWN = 4
    DO = 5
    SLEEP = 6
    PLACE_STONE = 7
    PLACE_TABLE = 8
    PLACE_FURNACE = 9
    PLACE_PLANT = 10
    MAKE_WOOD_PICKAXE = 11
    MAKE_STONE_PICKAXE = 12
    MAKE_IRON_PICKAXE = 13
    MAKE_WOOD_SWORD = 14
    MAKE_STONE_SWORD = 15
    MAKE_IRON_SWORD = 16


N_ACTIONS = 17


class Direction(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# (row, col) step for each Direction value
DIR_VECTORS = np.array([[-1, 0], [1, 0], [0, -1], [0, 1]], dtype=np.int32)

ACTION_TO_DIRECTION = {
    ActionKind.LEFT: Direction.LEFT,
    ActionKind.RIGHT: Direction.RIGHT,
    ActionKind.UP: Direction.UP,
    ActionKind.DOWN: Direction.DOWN,
}


class Item(IntEnum):
    WOOD = 0
    STONE = 1
    COAL = 2
    IRON = 3
    DIAMOND = 4
    SAPLING = 5
    WOOD_PICKAXE = 6
    STONE_PICKAXE = 7
    IRON_PICKAXE = 8
    WOOD_SWORD = 9
    STONE_SWORD = 10
    IRON_SWORD = 11


N_ITEMS = 12

# Pseudo-resources used only in events (not inventory slots).
RES_DRINK = 100
RES_PLANT_FOOD = 101


class MobKind(IntEnum):
    ZOMBIE = 0
    SKELETON = 1
    COW = 2
    ARROW = 3


class Achievement(IntEnum):
    COLLECT_WOOD = 0
    PLACE_TABLE = 1
    EAT_COW = 2
    COLLECT_SAPLING = 3
    COLLECT_DRINK = 4
    MAKE_WOOD_PICKAXE = 5
    MAKE_WOOD_SWORD = 6
    PLACE_PLANT = 7
    DEFEAT_ZOMBIE = 8
    COLLECT_STONE = 9
    PLACE_STONE = 10
    EAT_PLANT = 11
    DEFEAT_SKELETON = 12
    COLLECT_COAL = 13
    MAKE_STONE_PICKAXE = 14
    MAKE_STONE_SWORD = 15
    PLACE_FURNACE = 16
    COLLECT_IRON = 17
    MAKE_IRON_PICKAXE = 18
    MAKE_IRON_SWORD = 19
    COLLECT_DIAMOND = 20
    WAKE_UP = 21


N_ACHIEVEMENTS = 22


class EventType(IntEnum):
    """Row tags for the packed (etype, a, b, c, d, e) event records."""

    ACHIEVEMENT = 0       # (agent, achievement, -, -, -)
    ATTACK = 1            # (attacker, victim, damage_halves, -, -); attacker < 0 => mob of kind -attacker-1
    TOOL_USED = 2         # (agent, row, col, placer, station_block)
    BLOCK_CHANGED = 3     # (row, col, from, to, agent or -1)
    MOB_KILLED = 4        # (agent, mob_kind, -, -, -)
    DEATH = 5             # (agent, -, -, -, -)
    RESOURCE_COLLECTED = 6  # (agent, item or pseudo-resource, amount, -, -)
    HEALTH_CHANGED = 7    # (agent, delta_halves, -, -, -)
    CRAFTED = 8           # (agent, item, -, -, -)
    WOKE = 9              # (agent, -, -, -, -)


EVENT_WIDTH = 6


def events_of(events: np.ndarray, etype: EventType) -> np.ndarray:
    """Rows of one event type from a packed (k, 6) int32 array."""
    if len(events) == 0:
        return events.reshape(0, EVENT_WIDTH)
    return events[events[:, 0] == int(etype)]


@dataclass
class PlayerState:
    """Read-only snapshot of one player, decoded from the packed arrays."""

    pos: tuple[int, int]
    direction: Direction
    inventory: dict[Item, int]
    health: float             # 0..9 in 0.5 steps
    food: int
    drink: int
    energy: int
    alive: bool
    sleeping: bool
    achievements: set[Achievement]


@dataclass
class MobState:
    kind: MobKind
    pos: tuple[int, int]
    health: int
    direction: Direction
    cooldown: int
