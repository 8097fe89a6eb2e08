"""Joint-step state machine: intents, conflicts, action effects, mobs,
survival, deaths, achievements, and scenario rewards.

This module is the readable reference implementation; `fastpath` compiles
the same pipeline with numba and is differential-tested against it. Any
behavior change must land in both.

Stepping order within one tick is fixed: dead/sleeping agents are forced to
NOOP, DO/PLACE intents are collected against pre-step facings, contested
cells pick one uniform winner, movement applies in ascending agent order,
then DO/PLACE/MAKE/SLEEP effects, mob updates, survival dynamics, deaths,
achievement unlocks, and finally rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GameConfig
from .rng import fold, u64_to_unit
from .state import (MAX_HEALTH_HALVES, MAX_ITEMS, MAX_METER, MCD, MDIR, MHP,
                    MKIND, MR, MC, PALIVE, PC, PDIR, PENERGY, PDRINK, PFOOD,
                    PHP, PINV, PR, PSLEEP, WorldState)
from .types import (ACTION_TO_DIRECTION, DIR_VECTORS, EVENT_WIDTH,
                    Achievement, ActionKind, BlockKind, EventType, Item,
                    MobKind, RES_DRINK, RES_PLANT_FOOD)

# Draw salts: every random decision hashes (key, step, salt, labels...) so
# draws are order-independent and replay-stable.
SALT_CONFLICT = 11
SALT_SAPLING = 12
SALT_RIPEN = 13
SALT_COW_MOVE = 14
SALT_SPAWN_KIND = 15
SALT_SPAWN_CELL = 16
SALT_SPAWN_PLAYER = 17

ZOMBIE_ATTACK_COOLDOWN = 5
SKELETON_FIRE_COOLDOWN = 4
SKELETON_MIN_RANGE = 3
SKELETON_FIRE_RANGE = 6

WALKABLE_PLAYER = frozenset({
    int(BlockKind.GRASS), int(BlockKind.SAND), int(BlockKind.PATH),
    int(BlockKind.LAVA),
})
WALKABLE_MOB = frozenset({
    int(BlockKind.GRASS), int(BlockKind.SAND), int(BlockKind.PATH),
})
# Arrows stop only on solid blocks.
ARROW_SOLID = frozenset({
    int(BlockKind.TREE), int(BlockKind.STONE), int(BlockKind.COAL_ORE),
    int(BlockKind.IRON_ORE), int(BlockKind.DIAMOND_ORE), int(BlockKind.TABLE),
    int(BlockKind.FURNACE), int(BlockKind.PLACED_STONE),
})

# block -> (required pickaxe tier, yielded item, block left behind)
MINEABLE = {
    int(BlockKind.TREE): (0, Item.WOOD, int(BlockKind.GRASS)),
    int(BlockKind.STONE): (1, Item.STONE, int(BlockKind.PATH)),
    int(BlockKind.PLACED_STONE): (1, Item.STONE, int(BlockKind.PATH)),
    int(BlockKind.COAL_ORE): (1, Item.COAL, int(BlockKind.PATH)),
    int(BlockKind.IRON_ORE): (2, Item.IRON, int(BlockKind.PATH)),
    int(BlockKind.DIAMOND_ORE): (3, Item.DIAMOND, int(BlockKind.PATH)),
}


@dataclass(frozen=True)
class Recipe:
    """One craftable product: input costs plus required nearby stations."""

    product: Item
    cost: tuple[tuple[Item, int], ...]
    needs_table: bool
    needs_furnace: bool


RECIPES: dict[int, Recipe] = {
    int(ActionKind.MAKE_WOOD_PICKAXE): Recipe(
        Item.WOOD_PICKAXE, ((Item.WOOD, 1),), True, False),
    int(ActionKind.MAKE_STONE_PICKAXE): Recipe(
        Item.STONE_PICKAXE, ((Item.WOOD, 1), (Item.STONE, 1)), True, False),
    int(ActionKind.MAKE_IRON_PICKAXE): Recipe(
        Item.IRON_PICKAXE, ((Item.WOOD, 1), (Item.COAL, 1), (Item.IRON, 1)),
        True, True),
    int(ActionKind.MAKE_WOOD_SWORD): Recipe(
        Item.WOOD_SWORD, ((Item.WOOD, 1),), True, False),
    int(ActionKind.MAKE_STONE_SWORD): Recipe(
        Item.STONE_SWORD, ((Item.WOOD, 1), (Item.STONE, 1)), True, False),
    int(ActionKind.MAKE_IRON_SWORD): Recipe(
        Item.IRON_SWORD, ((Item.WOOD, 1), (Item.COAL, 1), (Item.IRON, 1)),
        True, True),
}

# action -> (placed block, cost item, cost count, allowed target blocks)
PLACEMENTS = {
    int(ActionKind.PLACE_STONE): (
        int(BlockKind.PLACED_STONE), Item.STONE, 1,
        frozenset({int(BlockKind.GRASS), int(BlockKind.SAND),
                   int(BlockKind.PATH), int(BlockKind.WATER),
                   int(BlockKind.LAVA)})),
    int(ActionKind.PLACE_TABLE): (
        int(BlockKind.TABLE), Item.WOOD, 2,
        frozenset({int(BlockKind.GRASS), int(BlockKind.SAND),
                   int(BlockKind.PATH)})),
    int(ActionKind.PLACE_FURNACE): (
        int(BlockKind.FURNACE), Item.STONE, 1,
        frozenset({int(BlockKind.GRASS), int(BlockKind.SAND),
                   int(BlockKind.PATH)})),
    int(ActionKind.PLACE_PLANT): (
        int(BlockKind.SAPLING), Item.SAPLING, 1,
        frozenset({int(BlockKind.GRASS)})),
}

CRAFT_ACHIEVEMENT = {
    Item.WOOD_PICKAXE: Achievement.MAKE_WOOD_PICKAXE,
    Item.STONE_PICKAXE: Achievement.MAKE_STONE_PICKAXE,
    Item.IRON_PICKAXE: Achievement.MAKE_IRON_PICKAXE,
    Item.WOOD_SWORD: Achievement.MAKE_WOOD_SWORD,
    Item.STONE_SWORD: Achievement.MAKE_STONE_SWORD,
    Item.IRON_SWORD: Achievement.MAKE_IRON_SWORD,
}
COLLECT_ACHIEVEMENT = {
    int(Item.WOOD): Achievement.COLLECT_WOOD,
    int(Item.STONE): Achievement.COLLECT_STONE,
    int(Item.COAL): Achievement.COLLECT_COAL,
    int(Item.IRON): Achievement.COLLECT_IRON,
    int(Item.DIAMOND): Achievement.COLLECT_DIAMOND,
    int(Item.SAPLING): Achievement.COLLECT_SAPLING,
    RES_DRINK: Achievement.COLLECT_DRINK,
    RES_PLANT_FOOD: Achievement.EAT_PLANT,
}
PLACE_ACHIEVEMENT = {
    int(BlockKind.TABLE): Achievement.PLACE_TABLE,
    int(BlockKind.FURNACE): Achievement.PLACE_FURNACE,
    int(BlockKind.PLACED_STONE): Achievement.PLACE_STONE,
}
KILL_ACHIEVEMENT = {
    int(MobKind.COW): Achievement.EAT_COW,
    int(MobKind.ZOMBIE): Achievement.DEFEAT_ZOMBIE,
    int(MobKind.SKELETON): Achievement.DEFEAT_SKELETON,
}

OCC_EMPTY = -1
OCC_MOB_BASE = 1000


class EpisodeOver(RuntimeError):
    """Raised when stepping an episode whose done flags were all true."""


@dataclass
class Intent:
    """A DO/PLACE claim on the faced cell, pre-movement."""

    agent: int
    action: int
    target: tuple[int, int]


@dataclass
class StepResult:
    state: WorldState
    rewards: np.ndarray     # (N,) float64
    dones: np.ndarray       # (N,) bool
    events: np.ndarray      # (K, 6) int32


def light_level(t: int, day_length: int) -> float:
    """Triangular day/night ramp: 1.0 at dawn of each cycle, 0.0 mid-night."""
    half = day_length / 2.0
    phase = t % day_length
    return abs(phase - half) / half


def pickaxe_tier(inv_row) -> int:
    if inv_row[PINV + Item.IRON_PICKAXE] > 0:
        return 3
    if inv_row[PINV + Item.STONE_PICKAXE] > 0:
        return 2
    if inv_row[PINV + Item.WOOD_PICKAXE] > 0:
        return 1
    return 0


def sword_damage(inv_row) -> int:
    if inv_row[PINV + Item.IRON_SWORD] > 0:
        return 5
    if inv_row[PINV + Item.STONE_SWORD] > 0:
        return 3
    if inv_row[PINV + Item.WOOD_SWORD] > 0:
        return 2
    return 1


def build_occupancy(state: WorldState) -> np.ndarray:
    """Cell owners: players (alive) by id, solid mobs by OCC_MOB_BASE+slot."""
    occ = np.full(state.tiles.shape, OCC_EMPTY, dtype=np.int32)
    for slot in range(state.mob_arr.shape[0]):
        row = state.mob_arr[slot]
        if row[MKIND] >= 0 and row[MKIND] != int(MobKind.ARROW):
            occ[row[MR], row[MC]] = OCC_MOB_BASE + slot
    for i in range(state.n_agents):
        row = state.player_arr[i]
        if row[PALIVE]:
            occ[row[PR], row[PC]] = i
    return occ


def nearest_living_player(state: WorldState, pos: tuple[int, int]) -> int | None:
    """Closest alive player by Chebyshev distance; ties go to the lowest id."""
    best, best_d = None, None
    for i in range(state.n_agents):
        row = state.player_arr[i]
        if not row[PALIVE]:
            continue
        d = max(abs(int(row[PR]) - pos[0]), abs(int(row[PC]) - pos[1]))
        if best_d is None or d < best_d:
            best, best_d = i, d
    return best


def resolve_cell_conflicts(intents: list[Intent], key: int, step: int) -> dict[tuple[int, int], int]:
    """One uniform winner per contested cell, keyed by (step, cell).

    Returns {cell: winning agent} for every targeted cell; losers' actions
    must be treated as NOOP by the caller.
    """
    by_cell: dict[tuple[int, int], list[int]] = {}
    for it in intents:
        by_cell.setdefault(it.target, []).append(it.agent)
    winners: dict[tuple[int, int], int] = {}
    for cell, agents in by_cell.items():
        agents.sort()
        if len(agents) == 1:
            winners[cell] = agents[0]
        else:
            # grid width is irrelevant as long as the cell label is unique
            label = cell[0] * 65536 + cell[1]
            u = fold(key, step, SALT_CONFLICT, label)
            winners[cell] = agents[u % len(agents)]
    return winners


class _Events:
    def __init__(self):
        self.rows: list[tuple[int, int, int, int, int, int]] = []

    def add(self, etype, a=0, b=0, c=0, d=0, e=0):
        self.rows.append((int(etype), int(a), int(b), int(c), int(d), int(e)))

    def array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, EVENT_WIDTH), dtype=np.int32)
        return np.array(self.rows, dtype=np.int32)


def _faced_cell(row) -> tuple[int, int]:
    vec = DIR_VECTORS[row[PDIR]]
    return int(row[PR] + vec[0]), int(row[PC] + vec[1])


def _in_bounds(state, cell) -> bool:
    return 0 <= cell[0] < state.tiles.shape[0] and 0 <= cell[1] < state.tiles.shape[1]


def _wake(row):
    row[PSLEEP] = 0


def apply_do(state: WorldState, agent: int, cfg: GameConfig, ev: _Events,
             occ: np.ndarray, t: int) -> None:
    """Faced-cell dispatch: attack players/mobs, mine, drink, eat, gather."""
    row = state.player_arr[agent]
    cell = _faced_cell(row)
    if not _in_bounds(state, cell):
        return
    holder = int(occ[cell])
    if 0 <= holder < OCC_MOB_BASE and holder != agent:
        if not cfg.attack_enabled:
            return
        victim = state.player_arr[holder]
        row[PHP] = min(MAX_HEALTH_HALVES, row[PHP] + 1)
        victim[PHP] = max(0, victim[PHP] - 2)
        _wake(victim)
        ev.add(EventType.ATTACK, agent, holder, 2)
        return
    if holder >= OCC_MOB_BASE:
        slot = holder - OCC_MOB_BASE
        mob = state.mob_arr[slot]
        dmg = sword_damage(row)
        mob[MHP] -= dmg
        if mob[MHP] <= 0:
            kind = int(mob[MKIND])
            mob[MKIND] = -1
            occ[cell] = OCC_EMPTY
            ev.add(EventType.MOB_KILLED, agent, kind)
            if kind == int(MobKind.COW):
                row[PFOOD] = min(MAX_METER, row[PFOOD] + cfg.cow_food_gain)
        return

    block = int(state.tiles[cell])
    if block == int(BlockKind.GRASS):
        label = cell[0] * 65536 + cell[1]
        if u64_to_unit(fold(state.rng_key, t, SALT_SAPLING, label)) < cfg.sapling_prob:
            row[PINV + Item.SAPLING] = min(MAX_ITEMS, row[PINV + Item.SAPLING] + 1)
            ev.add(EventType.RESOURCE_COLLECTED, agent, int(Item.SAPLING), 1)
        return
    if block == int(BlockKind.WATER):
        if row[PDRINK] < MAX_METER:
            row[PDRINK] += 1
            ev.add(EventType.RESOURCE_COLLECTED, agent, RES_DRINK, 1)
        return
    if block == int(BlockKind.RIPE_PLANT):
        row[PFOOD] = min(MAX_METER, row[PFOOD] + cfg.plant_food_gain)
        state.tiles[cell] = BlockKind.SAPLING
        ev.add(EventType.RESOURCE_COLLECTED, agent, RES_PLANT_FOOD, 1)
        ev.add(EventType.BLOCK_CHANGED, cell[0], cell[1],
               int(BlockKind.RIPE_PLANT), int(BlockKind.SAPLING), agent)
        return
    mine = MINEABLE.get(block)
    if mine is not None:
        tier, item, leftover = mine
        if pickaxe_tier(row) < tier:
            return
        row[PINV + item] = min(MAX_ITEMS, row[PINV + item] + 1)
        state.tiles[cell] = leftover
        state.provenance[cell] = -1
        ev.add(EventType.RESOURCE_COLLECTED, agent, int(item), 1)
        ev.add(EventType.BLOCK_CHANGED, cell[0], cell[1], block, leftover, agent)


def apply_place(state: WorldState, agent: int, action: int, cfg: GameConfig,
                ev: _Events, occ: np.ndarray) -> None:
    row = state.player_arr[agent]
    cell = _faced_cell(row)
    if not _in_bounds(state, cell) or occ[cell] != OCC_EMPTY:
        return
    placed, cost_item, cost_n, targets = PLACEMENTS[action]
    block = int(state.tiles[cell])
    if block not in targets or row[PINV + cost_item] < cost_n:
        return
    row[PINV + cost_item] -= cost_n
    state.tiles[cell] = placed
    state.provenance[cell] = agent
    ev.add(EventType.BLOCK_CHANGED, cell[0], cell[1], block, placed, agent)


def _stations_in_radius(state: WorldState, pos, radius: int, block: int):
    """(distance, placer, row, col) for each matching station, sorted so the
    first entry is the credited one (nearest, ties to lowest placer id)."""
    h, w = state.tiles.shape
    found = []
    for r in range(max(0, pos[0] - radius), min(h, pos[0] + radius + 1)):
        for c in range(max(0, pos[1] - radius), min(w, pos[1] + radius + 1)):
            if int(state.tiles[r, c]) == block:
                d = max(abs(r - pos[0]), abs(c - pos[1]))
                found.append((d, int(state.provenance[r, c]), r, c))
    found.sort()
    return found


def apply_craft(state: WorldState, agent: int, action: int, cfg: GameConfig,
                ev: _Events) -> None:
    row = state.player_arr[agent]
    recipe = RECIPES[action]
    pos = (int(row[PR]), int(row[PC]))
    tables = _stations_in_radius(state, pos, cfg.station_radius,
                                 int(BlockKind.TABLE)) if recipe.needs_table else []
    furnaces = _stations_in_radius(state, pos, cfg.station_radius,
                                   int(BlockKind.FURNACE)) if recipe.needs_furnace else []
    if recipe.needs_table and not tables:
        return
    if recipe.needs_furnace and not furnaces:
        return
    for item, n in recipe.cost:
        if row[PINV + item] < n:
            return
    for item, n in recipe.cost:
        row[PINV + item] -= n
    row[PINV + recipe.product] = min(MAX_ITEMS, row[PINV + recipe.product] + 1)
    ev.add(EventType.CRAFTED, agent, int(recipe.product))
    if recipe.needs_table:
        d, placer, r, c = tables[0]
        ev.add(EventType.TOOL_USED, agent, r, c, placer, int(BlockKind.TABLE))
    if recipe.needs_furnace:
        d, placer, r, c = furnaces[0]
        ev.add(EventType.TOOL_USED, agent, r, c, placer, int(BlockKind.FURNACE))


def apply_sleep(state: WorldState, agent: int) -> None:
    row = state.player_arr[agent]
    if row[PENERGY] < MAX_METER:
        row[PSLEEP] = 1


def _try_move_mob(state, occ, slot, dr, dc) -> bool:
    mob = state.mob_arr[slot]
    nr, nc = int(mob[MR]) + dr, int(mob[MC]) + dc
    if not (0 <= nr < state.tiles.shape[0] and 0 <= nc < state.tiles.shape[1]):
        return False
    if int(state.tiles[nr, nc]) not in WALKABLE_MOB or occ[nr, nc] != OCC_EMPTY:
        return False
    occ[mob[MR], mob[MC]] = OCC_EMPTY
    mob[MR], mob[MC] = nr, nc
    occ[nr, nc] = OCC_MOB_BASE + slot
    if dr == -1:
        mob[MDIR] = 0
    elif dr == 1:
        mob[MDIR] = 1
    elif dc == -1:
        mob[MDIR] = 2
    elif dc == 1:
        mob[MDIR] = 3
    return True


def _greedy_step(dr, dc):
    """Primary and secondary unit steps toward a (dr, dc) offset."""
    row_step = (int(np.sign(dr)), 0)
    col_step = (0, int(np.sign(dc)))
    if abs(dc) > abs(dr):
        return col_step, row_step
    return row_step, col_step


def _damage_player(state, victim: int, halves: int, attacker_code: int,
                   ev: _Events) -> None:
    row = state.player_arr[victim]
    row[PHP] = max(0, row[PHP] - halves)
    _wake(row)
    ev.add(EventType.ATTACK, attacker_code, victim, halves)


def _find_slot(mob_arr) -> int:
    for slot in range(mob_arr.shape[0]):
        if mob_arr[slot, MKIND] < 0:
            return slot
    return -1


def update_mobs(state: WorldState, cfg: GameConfig, ev: _Events,
                occ: np.ndarray, t: int) -> None:
    """Chase/flee/wander/advance per mob, then spawn/despawn by distance to
    the nearest player and the light level."""
    alive = [i for i in range(state.n_agents) if state.player_arr[i, PALIVE]]
    if not alive:
        return
    key = state.rng_key
    light = light_level(t, cfg.day_length)
    night = light < cfg.night_light_threshold

    def nearest(pos):
        best, best_d = -1, 1 << 30
        for i in alive:
            prow = state.player_arr[i]
            d = max(abs(int(prow[PR]) - pos[0]), abs(int(prow[PC]) - pos[1]))
            if d < best_d:
                best, best_d = i, d
        return best, best_d

    for slot in range(state.mob_arr.shape[0]):
        mob = state.mob_arr[slot]
        kind = int(mob[MKIND])
        if kind < 0:
            continue
        pos = (int(mob[MR]), int(mob[MC]))
        if kind != int(MobKind.ARROW):
            tgt, dist = nearest(pos)
            if dist > cfg.despawn_distance:
                mob[MKIND] = -1
                occ[pos] = OCC_EMPTY
                continue
        if kind == int(MobKind.ZOMBIE):
            if mob[MCD] > 0:
                mob[MCD] -= 1
            prow = state.player_arr[tgt]
            dr = int(prow[PR]) - pos[0]
            dc = int(prow[PC]) - pos[1]
            if abs(dr) + abs(dc) == 1:
                if mob[MCD] == 0:
                    _damage_player(state, tgt, 2 * cfg.zombie_damage, -1 - kind, ev)
                    mob[MCD] = ZOMBIE_ATTACK_COOLDOWN
            else:
                first, second = _greedy_step(dr, dc)
                if not _try_move_mob(state, occ, slot, *first):
                    _try_move_mob(state, occ, slot, *second)
        elif kind == int(MobKind.SKELETON):
            if mob[MCD] > 0:
                mob[MCD] -= 1
            prow = state.player_arr[tgt]
            dr = int(prow[PR]) - pos[0]
            dc = int(prow[PC]) - pos[1]
            if dist < SKELETON_MIN_RANGE:
                first, second = _greedy_step(-dr, -dc)
                if not _try_move_mob(state, occ, slot, *first):
                    _try_move_mob(state, occ, slot, *second)
            elif (dist <= SKELETON_FIRE_RANGE and (dr == 0 or dc == 0)
                  and mob[MCD] == 0):
                n_arrows = int(np.sum(state.mob_arr[:, MKIND] == int(MobKind.ARROW)))
                step, _ = _greedy_step(dr, dc)
                ar, ac = pos[0] + step[0], pos[1] + step[1]
                if (n_arrows < cfg.arrow_cap and _in_bounds(state, (ar, ac))
                        and int(state.tiles[ar, ac]) not in ARROW_SOLID):
                    aslot = _find_slot(state.mob_arr)
                    if aslot >= 0:
                        arrow = state.mob_arr[aslot]
                        arrow[MKIND] = int(MobKind.ARROW)
                        arrow[MR], arrow[MC] = ar, ac
                        arrow[MHP] = 1
                        if step[0] == -1:
                            arrow[MDIR] = 0
                        elif step[0] == 1:
                            arrow[MDIR] = 1
                        elif step[1] == -1:
                            arrow[MDIR] = 2
                        else:
                            arrow[MDIR] = 3
                        # a fresh arrow holds still until the next tick
                        arrow[MCD] = 1
                        mob[MCD] = SKELETON_FIRE_COOLDOWN
        elif kind == int(MobKind.COW):
            u = fold(key, t, SALT_COW_MOVE, slot)
            if (u >> 8) & 1:
                d = u & 3
                vec = DIR_VECTORS[d]
                _try_move_mob(state, occ, slot, int(vec[0]), int(vec[1]))
        elif kind == int(MobKind.ARROW):
            if mob[MCD] > 0:
                mob[MCD] -= 1
                continue
            vec = DIR_VECTORS[mob[MDIR]]
            nr, nc = pos[0] + int(vec[0]), pos[1] + int(vec[1])
            if not _in_bounds(state, (nr, nc)):
                mob[MKIND] = -1
                continue
            holder = int(occ[nr, nc])
            if 0 <= holder < OCC_MOB_BASE:
                _damage_player(state, holder, 2 * cfg.arrow_damage,
                               -1 - int(MobKind.ARROW), ev)
                mob[MKIND] = -1
            elif holder >= OCC_MOB_BASE:
                mob[MKIND] = -1
            elif int(state.tiles[nr, nc]) in ARROW_SOLID:
                mob[MKIND] = -1
            else:
                mob[MR], mob[MC] = nr, nc

    # Spawns: zombies at night, cows by day, skeletons on cave paths.
    counts = {k: int(np.sum(state.mob_arr[:, MKIND] == k)) for k in range(3)}
    spawn_rules = (
        (int(MobKind.ZOMBIE), cfg.zombie_cap, cfg.zombie_spawn_prob, night,
         WALKABLE_MOB, cfg.zombie_health),
        (int(MobKind.SKELETON), cfg.skeleton_cap, cfg.skeleton_spawn_prob, True,
         frozenset({int(BlockKind.PATH)}), cfg.skeleton_health),
        (int(MobKind.COW), cfg.cow_cap, cfg.cow_spawn_prob, not night,
         frozenset({int(BlockKind.GRASS)}), cfg.cow_health),
    )
    for kind, cap, prob, allowed, tiles_ok, health in spawn_rules:
        if not allowed or counts[kind] >= cap:
            continue
        if u64_to_unit(fold(key, t, SALT_SPAWN_KIND, kind)) >= prob:
            continue
        anchor = alive[fold(key, t, SALT_SPAWN_PLAYER, kind) % len(alive)]
        arow = state.player_arr[anchor]
        span = 2 * cfg.spawn_distance_max + 1
        for j in range(4):
            v = fold(key, t, SALT_SPAWN_CELL, kind, j)
            dr = v % span - cfg.spawn_distance_max
            dc = (v >> 16) % span - cfg.spawn_distance_max
            cell = (int(arow[PR]) + dr, int(arow[PC]) + dc)
            if not _in_bounds(state, cell):
                continue
            _, dmin = nearest(cell)
            if not cfg.spawn_distance_min <= dmin <= cfg.spawn_distance_max:
                continue
            if int(state.tiles[cell]) not in tiles_ok or occ[cell] != OCC_EMPTY:
                continue
            slot = _find_slot(state.mob_arr)
            if slot < 0:
                break
            mob = state.mob_arr[slot]
            mob[MKIND] = kind
            mob[MR], mob[MC] = cell
            mob[MHP] = health
            mob[MDIR] = 0
            mob[MCD] = 0
            occ[cell] = OCC_MOB_BASE + slot
            break


def update_survival(state: WorldState, cfg: GameConfig, ev: _Events, t: int,
                    sapling_mask: np.ndarray) -> None:
    """Plant growth, sleep recovery, intrinsic decay, regen, waking, lava.

    Only saplings present at step start may ripen, so a cell never emits
    two block changes in one step.
    """
    key = state.rng_key
    for r, c in np.argwhere(sapling_mask):
        if int(state.tiles[r, c]) != int(BlockKind.SAPLING):
            continue
        label = int(r) * 65536 + int(c)
        if u64_to_unit(fold(key, t, SALT_RIPEN, label)) < cfg.plant_ripen_prob:
            state.tiles[r, c] = BlockKind.RIPE_PLANT
            ev.add(EventType.BLOCK_CHANGED, int(r), int(c),
                   int(BlockKind.SAPLING), int(BlockKind.RIPE_PLANT), -1)

    players = state.player_arr
    for i in range(state.n_agents):
        row = players[i]
        if row[PALIVE] and row[PSLEEP]:
            row[PENERGY] = min(MAX_METER, row[PENERGY] + 1)

    if t % cfg.intrinsic_decay_interval == 0:
        for i in range(state.n_agents):
            row = players[i]
            if not row[PALIVE]:
                continue
            row[PFOOD] = max(0, row[PFOOD] - 1)
            row[PDRINK] = max(0, row[PDRINK] - 1)
            if not row[PSLEEP]:
                row[PENERGY] = max(0, row[PENERGY] - 1)
            if row[PFOOD] == 0 or row[PDRINK] == 0 or row[PENERGY] == 0:
                row[PHP] = max(0, row[PHP] - 2)

    if t % cfg.health_regen_interval == 0:
        for i in range(state.n_agents):
            row = players[i]
            if row[PALIVE] and row[PFOOD] > 0 and row[PDRINK] > 0 \
                    and row[PENERGY] > 0:
                row[PHP] = min(MAX_HEALTH_HALVES, row[PHP] + 2)

    light = light_level(t, cfg.day_length)
    for i in range(state.n_agents):
        row = players[i]
        if row[PALIVE] and row[PSLEEP] and row[PENERGY] >= MAX_METER \
                and light >= cfg.night_light_threshold:
            row[PSLEEP] = 0
            ev.add(EventType.WOKE, i)

    for i in range(state.n_agents):
        row = players[i]
        if row[PALIVE] and int(state.tiles[row[PR], row[PC]]) == int(BlockKind.LAVA):
            row[PHP] = 0


def apply_deaths(state: WorldState, cfg: GameConfig, ev: _Events,
                 occ: np.ndarray) -> None:
    for i in range(state.n_agents):
        row = state.player_arr[i]
        if row[PALIVE] and row[PHP] <= 0:
            row[PALIVE] = 0
            row[PSLEEP] = 0
            row[PHP] = 0
            occ[row[PR], row[PC]] = OCC_EMPTY
            ev.add(EventType.DEATH, i)


def unlock_achievements(state: WorldState, ev: _Events) -> list[tuple[int, Achievement]]:
    """First-occurrence mapping from step events to the 22 achievements."""
    unlocked = []
    n_rows = len(ev.rows)
    for idx in range(n_rows):
        etype, a, b, c, d, e = ev.rows[idx]
        ach = None
        agent = a
        if etype == int(EventType.RESOURCE_COLLECTED):
            ach = COLLECT_ACHIEVEMENT.get(b)
        elif etype == int(EventType.MOB_KILLED):
            ach = KILL_ACHIEVEMENT.get(b)
        elif etype == int(EventType.CRAFTED):
            ach = CRAFT_ACHIEVEMENT.get(Item(b))
        elif etype == int(EventType.WOKE):
            ach = Achievement.WAKE_UP
        elif etype == int(EventType.BLOCK_CHANGED):
            agent = e
            if agent < 0:
                continue
            to = d
            if to == int(BlockKind.SAPLING) and c == int(BlockKind.GRASS):
                ach = Achievement.PLACE_PLANT
            else:
                ach = PLACE_ACHIEVEMENT.get(to)
        if ach is None:
            continue
        bit = 1 << int(ach)
        if not state.ach_mask[agent] & bit:
            state.ach_mask[agent] |= bit
            ev.add(EventType.ACHIEVEMENT, agent, int(ach))
            unlocked.append((agent, ach))
    return unlocked


def visible_count(state: WorldState, cfg: GameConfig, observer: int) -> int:
    """Alive players inside the observer's window and allowed by the rules."""
    from .observation import visible_players
    return len(visible_players(state, observer, cfg))


def compute_rewards(pre_health: np.ndarray, pre_ach: np.ndarray,
                    state: WorldState, events: np.ndarray,
                    cfg: GameConfig) -> np.ndarray:
    """Base reward (+1 per new achievement, 0.1 per health point change)
    plus the configured scenario terms."""
    n = state.n_agents
    rewards = np.zeros(n, dtype=np.float64)
    for i in range(n):
        new_ach = bin(int(state.ach_mask[i]) & ~int(pre_ach[i])).count("1")
        dh = int(state.player_arr[i, PHP]) - int(pre_health[i])
        rewards[i] = new_ach + 0.05 * dh

    scenario = cfg.reward_scenario
    if scenario == "shared":
        rewards[:] = rewards.sum()
    elif scenario == "attack":
        for row in events:
            if row[0] == int(EventType.ATTACK) and row[1] >= 0:
                rewards[row[1]] += 1.0
                rewards[row[2]] -= 0.5
    elif scenario == "proximity":
        for i in range(n):
            if state.player_arr[i, PALIVE]:
                rewards[i] += cfg.proximity_beta * visible_count(state, cfg, i)
    elif scenario != "independent":
        raise ValueError(f"unknown reward scenario {scenario!r}")
    return rewards


def step(state: WorldState, actions, cfg: GameConfig) -> StepResult:
    """Advance one tick. Pure: the input state is copied, never mutated."""
    new = state.copy()
    rewards, dones, events = step_inplace(new, actions, cfg)
    return StepResult(new, rewards, dones, events)


def step_inplace(state: WorldState, actions, cfg: GameConfig):
    """Advance one tick, mutating `state`. Returns (rewards, dones, events)."""
    n = state.n_agents
    acts = [int(a) for a in actions]
    if len(acts) != n:
        raise ValueError(f"expected {n} actions, got {len(acts)}")

    players = state.player_arr
    if cfg.fixed_timestep_mode:
        if state.step_counter >= cfg.max_episode_steps:
            raise EpisodeOver("episode horizon reached")
    elif not players[:, PALIVE].any():
        raise EpisodeOver("all agents are dead")

    t = state.step_counter + 1
    state.step_counter = t
    key = state.rng_key
    ev = _Events()
    pre_health = players[:, PHP].copy()
    pre_ach = state.ach_mask.copy()

    for i in range(n):
        if not players[i, PALIVE] or players[i, PSLEEP]:
            acts[i] = int(ActionKind.NOOP)

    sapling_mask = state.tiles == int(BlockKind.SAPLING)
    occ = build_occupancy(state)

    intents = []
    for i in range(n):
        a = acts[i]
        if a == int(ActionKind.DO) or a in PLACEMENTS:
            cell = _faced_cell(players[i])
            if _in_bounds(state, cell):
                intents.append(Intent(i, a, cell))
            else:
                acts[i] = int(ActionKind.NOOP)
    winners = resolve_cell_conflicts(intents, key, t)
    for it in intents:
        if winners[it.target] != it.agent:
            acts[it.agent] = int(ActionKind.NOOP)

    for i in range(n):
        a = acts[i]
        if a in (int(ActionKind.LEFT), int(ActionKind.RIGHT),
                 int(ActionKind.UP), int(ActionKind.DOWN)):
            row = players[i]
            d = int(ACTION_TO_DIRECTION[ActionKind(a)])
            row[PDIR] = d
            vec = DIR_VECTORS[d]
            nr, nc = int(row[PR] + vec[0]), int(row[PC] + vec[1])
            if _in_bounds(state, (nr, nc)) \
                    and int(state.tiles[nr, nc]) in WALKABLE_PLAYER \
                    and occ[nr, nc] == OCC_EMPTY:
                occ[row[PR], row[PC]] = OCC_EMPTY
                row[PR], row[PC] = nr, nc
                occ[nr, nc] = i

    for i in range(n):
        a = acts[i]
        if a == int(ActionKind.DO):
            apply_do(state, i, cfg, ev, occ, t)
        elif a in PLACEMENTS:
            apply_place(state, i, a, cfg, ev, occ)
        elif a in RECIPES:
            apply_craft(state, i, a, cfg, ev)
        elif a == int(ActionKind.SLEEP):
            apply_sleep(state, i)

    update_mobs(state, cfg, ev, occ, t)
    update_survival(state, cfg, ev, t, sapling_mask)
    apply_deaths(state, cfg, ev, occ)
    unlock_achievements(state, ev)

    for i in range(n):
        dh = int(players[i, PHP]) - int(pre_health[i])
        if dh != 0:
            ev.add(EventType.HEALTH_CHANGED, i, dh)

    events = ev.array()
    rewards = compute_rewards(pre_health, pre_ach, state, events, cfg)
    state.light_level = light_level(t, cfg.day_length)

    if cfg.fixed_timestep_mode:
        done = t >= cfg.max_episode_steps
    else:
        done = not players[:, PALIVE].any() or t >= cfg.max_episode_steps
    dones = np.full(n, done, dtype=bool)
    return rewards, dones, events
