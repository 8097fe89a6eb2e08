"""Deterministic multi-agent survival grid-world engine."""

from .config import (ConfigError, GameConfig, TerrainParams, config_from_dict,
                     load_config, validate_config)
from .engine import (EpisodeOver, Intent, Recipe, StepResult,
                     nearest_living_player, resolve_cell_conflicts, step)
from .env import Env
from .observation import ObsManifest, encode_symbolic, obs_manifest, render_frame, visible_players
from .rng import RngState, new_rng, substream
from .state import WorldState, digest_state
from .types import (Achievement, ActionKind, BlockKind, Direction, EventType,
                    Item, MobKind, MobState, PlayerState)
from .worldgen import (WorldGenError, choose_spawns, dump_map, generate_world,
                       world_from_text)

__version__ = "0.1.0"

__all__ = [
    "Achievement", "ActionKind", "BlockKind", "ConfigError", "Direction",
    "Env", "EpisodeOver", "EventType", "GameConfig", "Intent", "Item",
    "MobKind", "MobState", "ObsManifest", "PlayerState", "Recipe",
    "RngState", "StepResult", "TerrainParams", "WorldGenError", "WorldState",
    "choose_spawns", "config_from_dict", "digest_state", "dump_map",
    "encode_symbolic", "generate_world", "load_config",
    "nearest_living_player", "new_rng", "obs_manifest", "render_frame",
    "resolve_cell_conflicts", "step", "substream", "validate_config",
    "visible_players", "world_from_text",
]
