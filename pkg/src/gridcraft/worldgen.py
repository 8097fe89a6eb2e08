"""Procedural world generation from a seed.

Terrain is thresholded fractal value noise: water, sand, grass with trees,
and a mountain belt carved with cave paths, ores, and lava pockets. A staged
flood fill verifies that every resource the tech tree needs is reachable
from the spawn cells (treating mineable blocks as passable once the tools
that mine them become obtainable); attempts that fail are rejected and the
generator reseeds, up to a bounded number of tries.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .config import GameConfig
from .rng import RngState, fold, new_rng
from .state import (MKIND, MR, MC, MHP, PR, PC, WorldState, empty_mobs,
                    empty_players)
from .types import BlockKind, MobKind

MAX_GEN_ATTEMPTS = 16

WALKABLE_SPAWN = (BlockKind.GRASS, BlockKind.SAND, BlockKind.PATH)


class WorldGenError(RuntimeError):
    """Raised when no reachable world can be generated for a seed."""


def _philox(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=key))


def _value_noise(gen: np.random.Generator, h: int, w: int, scale: float) -> np.ndarray:
    """Bilinearly interpolated lattice noise in [0, 1]."""
    gh = int(np.ceil(h / scale)) + 2
    gw = int(np.ceil(w / scale)) + 2
    coarse = gen.random((gh, gw))
    ys = np.arange(h) / scale
    xs = np.arange(w) / scale
    y0 = ys.astype(int)
    x0 = xs.astype(int)
    ty = (ys - y0)[:, None]
    tx = (xs - x0)[None, :]
    v00 = coarse[np.ix_(y0, x0)]
    v01 = coarse[np.ix_(y0, x0 + 1)]
    v10 = coarse[np.ix_(y0 + 1, x0)]
    v11 = coarse[np.ix_(y0 + 1, x0 + 1)]
    top = v00 * (1 - tx) + v01 * tx
    bot = v10 * (1 - tx) + v11 * tx
    return top * (1 - ty) + bot * ty


def _fractal_noise(gen, h, w, scale, octaves, persistence) -> np.ndarray:
    total = np.zeros((h, w))
    amp = 1.0
    norm = 0.0
    for o in range(octaves):
        total += amp * _value_noise(gen, h, w, max(2.0, scale / (2 ** o)))
        norm += amp
        amp *= persistence
    return total / norm


def _build_tiles(cfg: GameConfig, gen: np.random.Generator) -> np.ndarray:
    t = cfg.terrain
    h, w = cfg.map_height, cfg.map_width
    elev = _fractal_noise(gen, h, w, t.elevation_scale, t.octaves, t.persistence)
    caves = _fractal_noise(gen, h, w, t.cave_scale, 2, t.persistence)
    u_tree = gen.random((h, w))
    u_ore = gen.random((h, w))
    u_lava = gen.random((h, w))

    tiles = np.full((h, w), int(BlockKind.GRASS), dtype=np.int8)
    tiles[elev < t.water_level] = BlockKind.WATER
    band = (elev >= t.water_level) & (elev < t.sand_level)
    tiles[band] = BlockKind.SAND

    grass = elev >= t.sand_level
    mountain = elev >= t.mountain_level
    grass &= ~mountain
    tiles[grass & (u_tree < t.tree_density)] = BlockKind.TREE

    tiles[mountain] = BlockKind.STONE
    carved = mountain & (caves > t.cave_level)
    tiles[carved] = BlockKind.PATH

    rock = mountain & ~carved
    d, i, c = t.diamond_density, t.iron_density, t.coal_density
    tiles[rock & (u_ore < d)] = BlockKind.DIAMOND_ORE
    tiles[rock & (u_ore >= d) & (u_ore < d + i)] = BlockKind.IRON_ORE
    tiles[rock & (u_ore >= d + i) & (u_ore < d + i + c)] = BlockKind.COAL_ORE
    tiles[rock & (u_ore >= d + i + c) & (u_lava < t.lava_density)] = BlockKind.LAVA
    return tiles


def choose_spawns(tiles: np.ndarray, n_agents: int, rng: RngState,
                  min_distance: int = 10,
                  blocked: set[tuple[int, int]] | None = None) -> list[tuple[int, int]]:
    """Pick n distinct walkable cells, pairwise at least min_distance apart
    (Chebyshev) where achievable, falling back to max-dispersion placement."""
    cells = np.argwhere(np.isin(tiles, [int(b) for b in WALKABLE_SPAWN]))
    if len(cells) == 0:
        raise WorldGenError("no walkable cells to spawn on")
    blocked = blocked or set()
    chosen: list[tuple[int, int]] = []

    def dist_to_chosen(cell):
        if not chosen:
            return float("inf")
        return min(max(abs(cell[0] - r), abs(cell[1] - c)) for r, c in chosen)

    for _ in range(n_agents):
        placed = False
        for _try in range(64):
            r, c = cells[rng.randbelow(len(cells))]
            cell = (int(r), int(c))
            if cell in blocked or cell in chosen:
                continue
            if dist_to_chosen(cell) >= min_distance:
                chosen.append(cell)
                placed = True
                break
        if not placed:
            # Max-dispersion fallback: best of a candidate sample.
            best, best_d = None, -1.0
            for _try in range(64):
                r, c = cells[rng.randbelow(len(cells))]
                cell = (int(r), int(c))
                if cell in blocked or cell in chosen:
                    continue
                d = dist_to_chosen(cell)
                if d > best_d:
                    best, best_d = cell, d
            if best is None:
                raise WorldGenError("not enough walkable cells for all spawns")
            chosen.append(best)
    return chosen


_FLOOD_STRUCTURE = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _flood(tiles: np.ndarray, start: tuple[int, int], passable: set[int]) -> np.ndarray:
    mask = np.isin(tiles, list(passable))
    if not mask[start]:
        return np.zeros_like(mask)
    labels, _ = ndimage.label(mask, structure=_FLOOD_STRUCTURE)
    return labels == labels[start]


def _adjacent_kinds(tiles: np.ndarray, seen: np.ndarray) -> set[int]:
    """Block kinds inside or 4-adjacent to the visited region."""
    reach = seen.copy()
    reach[:-1] |= seen[1:]
    reach[1:] |= seen[:-1]
    reach[:, :-1] |= seen[:, 1:]
    reach[:, 1:] |= seen[:, :-1]
    return set(np.unique(tiles[reach]).tolist())


def check_reachability(tiles: np.ndarray, spawns: list[tuple[int, int]]) -> bool:
    """Staged flood fill: resources must be reachable in tech order.

    Mineable blocks join the passable set once the tool tier that clears
    them is obtainable (wood -> stone/coal and water bridging -> iron ->
    diamond).
    """
    passable = {int(BlockKind.GRASS), int(BlockKind.SAND), int(BlockKind.PATH)}
    have = set()
    while True:
        seen = _flood(tiles, spawns[0], passable)
        kinds = _adjacent_kinds(tiles, seen)
        before = len(passable) + len(have)
        if int(BlockKind.TREE) in kinds:
            have.add("wood")
            passable.add(int(BlockKind.TREE))
        if int(BlockKind.WATER) in kinds:
            have.add("water")
        if "wood" in have and int(BlockKind.STONE) in kinds:
            have.add("stone")
            passable.add(int(BlockKind.STONE))
            passable.add(int(BlockKind.WATER))  # bridge by placing stone
        if "wood" in have and int(BlockKind.COAL_ORE) in kinds:
            have.add("coal")
            passable.add(int(BlockKind.COAL_ORE))
        if "stone" in have and int(BlockKind.IRON_ORE) in kinds:
            have.add("iron")
            passable.add(int(BlockKind.IRON_ORE))
        if {"iron", "coal"} <= have and int(BlockKind.DIAMOND_ORE) in kinds:
            have.add("diamond")
            passable.add(int(BlockKind.DIAMOND_ORE))
        if int(BlockKind.GRASS) in kinds:
            have.add("grass")
        if len(passable) + len(have) == before:
            break
    needed = {"wood", "water", "stone", "coal", "iron", "diamond", "grass"}
    if not needed <= have:
        return False
    # Every spawn must live in the same connected region.
    seen = _flood(tiles, spawns[0], passable)
    return all(seen[s] for s in spawns[1:])


def _place_initial_mobs(tiles, mob_arr, cfg: GameConfig, rng: RngState,
                        occupied: set[tuple[int, int]]) -> None:
    slot = 0

    def put(kind, kinds_ok, count, health):
        nonlocal slot
        cells = np.argwhere(np.isin(tiles, kinds_ok))
        placed = 0
        tries = 0
        while placed < count and tries < 64 and len(cells):
            tries += 1
            r, c = cells[rng.randbelow(len(cells))]
            cell = (int(r), int(c))
            if cell in occupied:
                continue
            mob_arr[slot, MKIND] = kind
            mob_arr[slot, MR] = cell[0]
            mob_arr[slot, MC] = cell[1]
            mob_arr[slot, MHP] = health
            occupied.add(cell)
            slot += 1
            placed += 1

    put(int(MobKind.COW), [int(BlockKind.GRASS)],
        min(3, cfg.cow_cap), cfg.cow_health)
    put(int(MobKind.SKELETON), [int(BlockKind.PATH)],
        min(2, cfg.skeleton_cap), cfg.skeleton_health)


def generate_world(cfg: GameConfig, seed: int) -> WorldState:
    """Deterministic world for (cfg, seed); raises WorldGenError when the
    terrain parameters cannot produce a reachable resource set."""
    state_key = new_rng(seed).key
    for attempt in range(MAX_GEN_ATTEMPTS):
        attempt_key = fold(state_key, 7000 + attempt)
        gen = _philox(attempt_key)
        tiles = _build_tiles(cfg, gen)
        rng = RngState(fold(attempt_key, 1))
        try:
            spawns = choose_spawns(tiles, cfg.n_agents, rng,
                                   cfg.spawn_min_distance)
        except WorldGenError:
            continue
        if not check_reachability(tiles, spawns):
            continue

        players = empty_players(cfg.n_agents)
        for i, (r, c) in enumerate(spawns):
            players[i, PR] = r
            players[i, PC] = c
        slots = cfg.zombie_cap + cfg.skeleton_cap + cfg.cow_cap + cfg.arrow_cap
        mobs = empty_mobs(max(slots, 1))
        occupied = set(spawns)
        _place_initial_mobs(tiles, mobs, cfg, rng, occupied)

        prov = np.full(tiles.shape, -1, dtype=np.int16)
        return WorldState(
            tiles=tiles,
            provenance=prov,
            player_arr=players,
            ach_mask=np.zeros(cfg.n_agents, dtype=np.int64),
            mob_arr=mobs,
            step_counter=0,
            rng_key=state_key,
        )
    raise WorldGenError(
        f"generation-retry-exhausted: no reachable world in "
        f"{MAX_GEN_ATTEMPTS} attempts for seed {seed} (check TerrainParams)"
    )


# Text fixtures ---------------------------------------------------------

BLOCK_CHARS = {
    BlockKind.GRASS: ".",
    BlockKind.SAND: ",",
    BlockKind.WATER: "~",
    BlockKind.TREE: "T",
    BlockKind.STONE: "#",
    BlockKind.PATH: "_",
    BlockKind.COAL_ORE: "c",
    BlockKind.IRON_ORE: "i",
    BlockKind.DIAMOND_ORE: "d",
    BlockKind.LAVA: "L",
    BlockKind.TABLE: "t",
    BlockKind.FURNACE: "f",
    BlockKind.SAPLING: "s",
    BlockKind.RIPE_PLANT: "r",
    BlockKind.PLACED_STONE: "P",
}
CHAR_BLOCKS = {v: k for k, v in BLOCK_CHARS.items()}

# Entities drawn over grass in fixture maps.
ENTITY_CHARS = {"Z": MobKind.ZOMBIE, "S": MobKind.SKELETON, "C": MobKind.COW}


def dump_map(state: WorldState) -> str:
    """One character per block; players overlaid as their agent index."""
    h, w = state.tiles.shape
    rows = [[BLOCK_CHARS[BlockKind(int(state.tiles[r, c]))] for c in range(w)]
            for r in range(h)]
    for i in range(state.n_agents):
        if state.player_arr[i, 7]:  # PALIVE
            rows[state.player_arr[i, PR]][state.player_arr[i, PC]] = str(i % 10)
    return "\n".join("".join(r) for r in rows)


def world_from_text(text: str, cfg: GameConfig, seed: int = 0) -> WorldState:
    """Build a fixture world from an ASCII map.

    Digits place players, Z/S/C place mobs (standing on grass). The map
    must match the config dimensions.
    """
    lines = [ln for ln in text.strip("\n").splitlines()]
    h, w = len(lines), len(lines[0])
    if (h, w) != (cfg.map_height, cfg.map_width):
        raise ValueError(
            f"map text is {w}x{h}, config wants {cfg.map_width}x{cfg.map_height}"
        )
    tiles = np.zeros((h, w), dtype=np.int8)
    players = empty_players(cfg.n_agents)
    slots = cfg.zombie_cap + cfg.skeleton_cap + cfg.cow_cap + cfg.arrow_cap
    mobs = empty_mobs(max(slots, 1))
    slot = 0
    seen_players = set()
    health = {MobKind.ZOMBIE: cfg.zombie_health,
              MobKind.SKELETON: cfg.skeleton_health,
              MobKind.COW: cfg.cow_health}
    for r, line in enumerate(lines):
        if len(line) != w:
            raise ValueError(f"ragged map line {r}")
        for c, ch in enumerate(line):
            if ch.isdigit():
                idx = int(ch)
                players[idx, PR], players[idx, PC] = r, c
                seen_players.add(idx)
                tiles[r, c] = BlockKind.GRASS
            elif ch in ENTITY_CHARS:
                kind = ENTITY_CHARS[ch]
                mobs[slot, MKIND] = int(kind)
                mobs[slot, MR], mobs[slot, MC] = r, c
                mobs[slot, MHP] = health[kind]
                slot += 1
                tiles[r, c] = BlockKind.GRASS
            else:
                tiles[r, c] = CHAR_BLOCKS[ch]
    if seen_players != set(range(cfg.n_agents)):
        raise ValueError(
            f"map places players {sorted(seen_players)}, config wants 0..{cfg.n_agents - 1}"
        )
    return WorldState(
        tiles=tiles,
        provenance=np.full((h, w), -1, dtype=np.int16),
        player_arr=players,
        ach_mask=np.zeros(cfg.n_agents, dtype=np.int64),
        mob_arr=mobs,
        step_counter=0,
        rng_key=new_rng(seed).key,
    )
