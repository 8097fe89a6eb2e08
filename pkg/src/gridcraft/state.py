"""Packed world state and its canonical digest.

State is stored structure-of-arrays so the stepping kernels can run over
flat numpy buffers. The column layout below is the canonical serialization
order for digests; changing it is a format break and must bump
STATE_LAYOUT_VERSION.
"""

from __future__ import annotations

import struct
import sys
from dataclasses import dataclass, field

import numpy as np

from .rng import mix64
from .types import Achievement, Direction, Item, MobKind, MobState, PlayerState

STATE_LAYOUT_VERSION = 1

# Player array columns (int32)
PR, PC, PDIR, PHP, PFOOD, PDRINK, PENERGY, PALIVE, PSLEEP = range(9)
PINV = 9                      # first of 12 inventory columns
PLAYER_COLS = PINV + 12

# Health is stored in half-points so the 0.5-point attack gain stays exact.
MAX_HEALTH_HALVES = 18
MAX_METER = 9
MAX_ITEMS = 9

# Mob array columns (int32); kind == -1 marks an inactive slot
MKIND, MR, MC, MHP, MDIR, MCD = range(6)
MOB_COLS = 6


@dataclass
class WorldState:
    """Full simulation state. One environment owns one instance."""

    tiles: np.ndarray          # (H, W) int8 BlockKind
    provenance: np.ndarray     # (H, W) int16, placing agent or -1
    player_arr: np.ndarray     # (N, PLAYER_COLS) int32
    ach_mask: np.ndarray       # (N,) int64 achievement bitmask
    mob_arr: np.ndarray        # (M, MOB_COLS) int32
    step_counter: int = 0
    rng_key: int = 0           # uint64 stream key, constant per episode
    light_level: float = field(default=1.0)

    @property
    def n_agents(self) -> int:
        return self.player_arr.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.tiles.shape

    def copy(self) -> "WorldState":
        return WorldState(
            tiles=self.tiles.copy(),
            provenance=self.provenance.copy(),
            player_arr=self.player_arr.copy(),
            ach_mask=self.ach_mask.copy(),
            mob_arr=self.mob_arr.copy(),
            step_counter=self.step_counter,
            rng_key=self.rng_key,
            light_level=self.light_level,
        )

    # Convenience views -------------------------------------------------

    @property
    def players(self) -> list[PlayerState]:
        out = []
        for i in range(self.n_agents):
            row = self.player_arr[i]
            ach = {Achievement(b) for b in range(64) if self.ach_mask[i] >> b & 1}
            out.append(PlayerState(
                pos=(int(row[PR]), int(row[PC])),
                direction=Direction(int(row[PDIR])),
                inventory={Item(j): int(row[PINV + j]) for j in range(12)},
                health=row[PHP] / 2.0,
                food=int(row[PFOOD]),
                drink=int(row[PDRINK]),
                energy=int(row[PENERGY]),
                alive=bool(row[PALIVE]),
                sleeping=bool(row[PSLEEP]),
                achievements=ach,
            ))
        return out

    @property
    def mobs(self) -> list[MobState]:
        out = []
        for row in self.mob_arr:
            if row[MKIND] < 0:
                continue
            out.append(MobState(
                kind=MobKind(int(row[MKIND])),
                pos=(int(row[MR]), int(row[MC])),
                health=int(row[MHP]),
                direction=Direction(int(row[MDIR])),
                cooldown=int(row[MCD]),
            ))
        return out

    def digest(self) -> str:
        return digest_state(self)


def empty_players(n: int) -> np.ndarray:
    arr = np.zeros((n, PLAYER_COLS), dtype=np.int32)
    arr[:, PHP] = MAX_HEALTH_HALVES
    arr[:, PFOOD] = MAX_METER
    arr[:, PDRINK] = MAX_METER
    arr[:, PENERGY] = MAX_METER
    arr[:, PALIVE] = 1
    return arr


def empty_mobs(slots: int) -> np.ndarray:
    arr = np.zeros((slots, MOB_COLS), dtype=np.int32)
    arr[:, MKIND] = -1
    return arr


def _le(arr: np.ndarray) -> np.ndarray:
    if sys.byteorder == "little":
        return arr
    return arr.byteswap()


def canonical_bytes(state: WorldState) -> bytes:
    """Fixed-order little-endian serialization used by the digest."""
    h, w = state.tiles.shape
    head = struct.pack(
        "<IIIIIQ",
        STATE_LAYOUT_VERSION, h, w,
        state.n_agents, state.step_counter & 0xFFFFFFFF,
        state.rng_key,
    )
    parts = [
        head,
        _le(state.tiles).tobytes(),
        _le(state.provenance).tobytes(),
        _le(state.player_arr).tobytes(),
        _le(state.ach_mask).tobytes(),
        _le(state.mob_arr).tobytes(),
    ]
    return b"".join(parts)


_LANE1_K = np.uint64(0x9E3779B97F4A7C15)
_LANE2_K = np.uint64(0xC2B2AE3D27D4EB4F)
_IDX_K = np.uint64(0xFF51AFD7ED558CCD)


def digest128(data: bytes) -> str:
    """Position-dependent non-cryptographic 128-bit hash, hex encoded."""
    pad = (-(len(data) + 8)) % 8
    buf = data + b"\x00" * pad + struct.pack("<Q", len(data))
    words = np.frombuffer(buf, dtype="<u8")
    idx = np.arange(len(words), dtype=np.uint64)
    lane1 = (words ^ (idx * _IDX_K + _LANE1_K)) * _LANE1_K
    lane1 ^= lane1 >> np.uint64(29)
    lane2 = (words ^ (idx * _LANE1_K + _LANE2_K)) * _LANE2_K
    lane2 ^= lane2 >> np.uint64(31)
    h1 = mix64(int(lane1.sum(dtype=np.uint64)))
    h2 = mix64(int(lane2.sum(dtype=np.uint64)) ^ h1)
    return f"{h1:016x}{h2:016x}"


def digest_state(state: WorldState) -> str:
    """Canonical 128-bit digest; equal states always hash equal."""
    return digest128(canonical_bytes(state))
