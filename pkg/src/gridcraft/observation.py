"""Per-agent symbolic observations and the replay frame renderer.

The symbolic vector is laid out by ObsManifest: 21 one-hot view grids
(16 block kinds + zombie, skeleton, cow, arrow, other-player), the agent's
inventory and intrinsics scaled to tenths, a direction one-hot, light level,
sleeping and alive flags, then one fixed-size block per other agent that is
zero-filled whenever that agent is not visible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import (GameConfig, VISIBILITY_ALWAYS, VISIBILITY_NEVER,
                     _parse_rule)
from .state import (MKIND, MR, MC, PALIVE, PC, PDIR, PENERGY, PDRINK, PFOOD,
                    PHP, PINV, PR, PSLEEP, WorldState)
from .types import BlockKind, MobKind

OBS_LAYOUT_VERSION = 1

N_BLOCK_CHANNELS = 16
N_MAP_CHANNELS = 21  # blocks + zombie, skeleton, cow, arrow, other-player
CH_ZOMBIE = 16
CH_SKELETON = 17
CH_COW = 18
CH_ARROW = 19
CH_PLAYER = 20

SELF_SCALARS = 12 + 4 + 4 + 1 + 1 + 1   # inventory, intrinsics, dir, light, sleep, alive
PLAYER_BLOCK_SCALARS = 12 + 4 + 4

_TENTH = np.float32(0.1)
_TWENTIETH = np.float32(0.05)


@dataclass(frozen=True)
class ObsManifest:
    """Layout descriptor for the flat observation vector."""

    version: int
    n_agents: int
    view_rows: int
    view_cols: int
    length: int
    sections: tuple[tuple[str, int, tuple[int, ...]], ...]

    def section(self, name: str) -> tuple[int, tuple[int, ...]]:
        for sec_name, offset, shape in self.sections:
            if sec_name == name:
                return offset, shape
        raise KeyError(name)

    def slice_of(self, name: str) -> slice:
        offset, shape = self.section(name)
        return slice(offset, offset + int(np.prod(shape)))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "n_agents": self.n_agents,
            "view_rows": self.view_rows,
            "view_cols": self.view_cols,
            "length": self.length,
            "channels": [BlockKind(i).name.lower() for i in range(N_BLOCK_CHANNELS)]
            + ["zombie", "skeleton", "cow", "arrow", "other_player"],
            "sections": [
                {"name": n, "offset": o, "shape": list(s)}
                for n, o, s in self.sections
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def obs_manifest(cfg: GameConfig) -> ObsManifest:
    """Deterministic layout for a config; total length is a pure function
    of (view shape, n_agents)."""
    r, c = cfg.view_rows, cfg.view_cols
    cells = r * c
    sections: list[tuple[str, int, tuple[int, ...]]] = []
    off = 0

    def add(name, shape):
        nonlocal off
        sections.append((name, off, shape))
        off += int(np.prod(shape))

    add("map_onehot", (N_MAP_CHANNELS, r, c))
    add("inventory", (12,))
    add("intrinsics", (4,))
    add("direction", (4,))
    add("light", (1,))
    add("sleeping", (1,))
    add("alive", (1,))
    for other in range(cfg.n_agents - 1):
        add(f"other_{other}", (cells + PLAYER_BLOCK_SCALARS,))
    return ObsManifest(
        version=OBS_LAYOUT_VERSION,
        n_agents=cfg.n_agents,
        view_rows=r,
        view_cols=c,
        length=off,
        sections=tuple(sections),
    )


def _rule_allows(cfg: GameConfig, target: int, step: int) -> bool:
    kind, k = _parse_rule(cfg.schedule()[target])
    if kind == VISIBILITY_ALWAYS:
        return True
    if kind == VISIBILITY_NEVER:
        return False
    return step < k


def visible_players(state: WorldState, observer: int, cfg: GameConfig) -> list[int]:
    """Targets that are alive, inside the observer's view window, and
    permitted by the visibility schedule at the current step."""
    row = state.player_arr[observer]
    half_r = cfg.view_rows // 2
    half_c = cfg.view_cols // 2
    out = []
    for target in range(state.n_agents):
        if target == observer:
            continue
        trow = state.player_arr[target]
        if not trow[PALIVE]:
            continue
        if abs(int(trow[PR]) - int(row[PR])) > half_r:
            continue
        if abs(int(trow[PC]) - int(row[PC])) > half_c:
            continue
        if not _rule_allows(cfg, target, state.step_counter):
            continue
        out.append(target)
    return out


def encode_symbolic(state: WorldState, observer: int, cfg: GameConfig,
                    manifest: ObsManifest | None = None) -> np.ndarray:
    """Flat float32 vector for one observer, matching obs_manifest exactly."""
    m = manifest or obs_manifest(cfg)
    vec = np.zeros(m.length, dtype=np.float32)
    r, c = m.view_rows, m.view_cols
    half_r, half_c = r // 2, c // 2
    row = state.player_arr[observer]
    pr, pc = int(row[PR]), int(row[PC])
    h, w = state.tiles.shape

    grids = vec[: N_MAP_CHANNELS * r * c].reshape(N_MAP_CHANNELS, r, c)
    padded = np.full((h + 2 * half_r, w + 2 * half_c),
                     int(BlockKind.DARKNESS), dtype=np.int8)
    padded[half_r:half_r + h, half_c:half_c + w] = state.tiles
    window = padded[pr:pr + r, pc:pc + c]
    for ch in range(N_BLOCK_CHANNELS):
        grids[ch][window == ch] = 1.0

    def in_window(mr, mc):
        dr, dc = mr - pr, mc - pc
        if abs(dr) <= half_r and abs(dc) <= half_c:
            return dr + half_r, dc + half_c
        return None

    mob_channel = {int(MobKind.ZOMBIE): CH_ZOMBIE,
                   int(MobKind.SKELETON): CH_SKELETON,
                   int(MobKind.COW): CH_COW,
                   int(MobKind.ARROW): CH_ARROW}
    for mob in state.mob_arr:
        kind = int(mob[MKIND])
        if kind < 0:
            continue
        at = in_window(int(mob[MR]), int(mob[MC]))
        if at is not None:
            grids[mob_channel[kind], at[0], at[1]] = 1.0

    visible = visible_players(state, observer, cfg)
    for target in visible:
        trow = state.player_arr[target]
        at = in_window(int(trow[PR]), int(trow[PC]))
        if at is not None:
            grids[CH_PLAYER, at[0], at[1]] = 1.0

    def fill_player_scalars(dst, prow):
        dst[0:12] = prow[PINV:PINV + 12].astype(np.float32) * _TENTH
        dst[12] = np.float32(prow[PHP]) * _TWENTIETH
        dst[13] = np.float32(prow[PFOOD]) * _TENTH
        dst[14] = np.float32(prow[PDRINK]) * _TENTH
        dst[15] = np.float32(prow[PENERGY]) * _TENTH
        dst[16 + int(prow[PDIR])] = 1.0

    off = N_MAP_CHANNELS * r * c
    fill_player_scalars(vec[off:off + 20], row)
    vec[off + 20] = np.float32(state.light_level)
    vec[off + 21] = 1.0 if row[PSLEEP] else 0.0
    vec[off + 22] = 1.0 if row[PALIVE] else 0.0

    block = off + 23
    block_len = r * c + PLAYER_BLOCK_SCALARS
    others = [i for i in range(state.n_agents) if i != observer]
    for target in others:
        if target in visible:
            trow = state.player_arr[target]
            at = in_window(int(trow[PR]), int(trow[PC]))
            if at is not None:
                vec[block + at[0] * c + at[1]] = 1.0
            fill_player_scalars(vec[block + r * c: block + r * c + 20], trow)
        block += block_len
    return vec


def encode_all(state: WorldState, cfg: GameConfig,
               manifest: ObsManifest | None = None) -> np.ndarray:
    m = manifest or obs_manifest(cfg)
    return np.stack([encode_symbolic(state, i, cfg, m)
                     for i in range(state.n_agents)])


# Frame rendering --------------------------------------------------------

SPRITE = 8

BLOCK_COLORS = {
    int(BlockKind.GRASS): (88, 140, 62),
    int(BlockKind.SAND): (216, 200, 140),
    int(BlockKind.WATER): (58, 96, 180),
    int(BlockKind.TREE): (36, 88, 38),
    int(BlockKind.STONE): (122, 122, 122),
    int(BlockKind.PATH): (168, 148, 120),
    int(BlockKind.COAL_ORE): (62, 62, 66),
    int(BlockKind.IRON_ORE): (178, 155, 130),
    int(BlockKind.DIAMOND_ORE): (132, 202, 222),
    int(BlockKind.LAVA): (222, 86, 34),
    int(BlockKind.TABLE): (152, 104, 52),
    int(BlockKind.FURNACE): (94, 74, 74),
    int(BlockKind.SAPLING): (108, 182, 84),
    int(BlockKind.RIPE_PLANT): (214, 120, 160),
    int(BlockKind.PLACED_STONE): (142, 142, 148),
    int(BlockKind.DARKNESS): (12, 12, 16),
}
PLAYER_COLORS = ((230, 60, 60), (60, 120, 230), (230, 200, 60), (170, 70, 210),
                 (60, 210, 180), (240, 140, 40), (120, 220, 60), (230, 100, 180))
MOB_COLORS = {
    int(MobKind.ZOMBIE): (70, 170, 70),
    int(MobKind.SKELETON): (235, 235, 235),
    int(MobKind.COW): (150, 92, 60),
    int(MobKind.ARROW): (30, 30, 30),
}


def render_frame(state: WorldState) -> np.ndarray:
    """Deterministic RGB image of the whole map; dead players are absent."""
    h, w = state.tiles.shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    for kind, color in BLOCK_COLORS.items():
        img[state.tiles == kind] = color
    img = np.repeat(np.repeat(img, SPRITE, axis=0), SPRITE, axis=1)

    def paint(r, c, color, inset):
        r0, c0 = r * SPRITE + inset, c * SPRITE + inset
        img[r0:(r + 1) * SPRITE - inset, c0:(c + 1) * SPRITE - inset] = color

    for mob in state.mob_arr:
        kind = int(mob[MKIND])
        if kind < 0:
            continue
        inset = 3 if kind == int(MobKind.ARROW) else 2
        paint(int(mob[MR]), int(mob[MC]), MOB_COLORS[kind], inset)

    for i in range(state.n_agents):
        row = state.player_arr[i]
        if not row[PALIVE]:
            continue
        r, c = int(row[PR]), int(row[PC])
        paint(r, c, PLAYER_COLORS[i % len(PLAYER_COLORS)], 1)
        # direction notch
        nr = r * SPRITE + SPRITE // 2 - 1
        nc = c * SPRITE + SPRITE // 2 - 1
        dr, dc = ((-1, 0), (1, 0), (0, -1), (0, 1))[int(row[PDIR])]
        img[nr + dr * 2: nr + dr * 2 + 2, nc + dc * 2: nc + dc * 2 + 2] = (255, 255, 255)
    return img


def save_gif(frames: list[np.ndarray], path: str, fps: int = 10) -> None:
    from PIL import Image

    images = [Image.fromarray(f) for f in frames]
    images[0].save(path, save_all=True, append_images=images[1:],
                   duration=max(1, int(1000 / fps)), loop=0)
