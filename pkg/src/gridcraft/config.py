"""Game configuration: every tunable constant, validated once up front.

Configs are plain dataclasses accepted from JSON documents. Unknown keys are
rejected so typos cannot silently fall back to defaults. Validation reports
every violated constraint, not just the first.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

SCENARIOS = ("independent", "shared", "attack", "proximity")

VISIBILITY_ALWAYS = "always"
VISIBILITY_NEVER = "never"
VISIBILITY_FIRST_K = "first_k"  # written as "first_k:<steps>"


class ConfigError(ValueError):
    """Raised by validate_config with the full list of violations."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid config: " + "; ".join(errors))


@dataclass(frozen=True)
class TerrainParams:
    """Procedural terrain knobs. Densities are per-cell probabilities."""

    elevation_scale: float = 12.0
    octaves: int = 3
    persistence: float = 0.5
    water_level: float = 0.32
    sand_level: float = 0.37
    mountain_level: float = 0.65
    cave_scale: float = 6.0
    cave_level: float = 0.58
    tree_density: float = 0.22
    coal_density: float = 0.10
    iron_density: float = 0.05
    diamond_density: float = 0.02
    lava_density: float = 0.015

    def validate(self) -> list[str]:
        errs = []
        for name in ("tree_density", "coal_density", "iron_density",
                     "diamond_density", "lava_density"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                errs.append(f"terrain.{name} must be in [0, 1], got {v}")
        if not self.diamond_density < self.iron_density < self.coal_density:
            errs.append("terrain ore densities must satisfy diamond < iron < coal")
        if self.octaves < 1:
            errs.append("terrain.octaves must be >= 1")
        if not self.water_level <= self.sand_level <= self.mountain_level:
            errs.append("terrain levels must be ordered water <= sand <= mountain")
        return errs


@dataclass(frozen=True)
class GameConfig:
    # World shape
    map_width: int = 48
    map_height: int = 48
    n_agents: int = 4
    view_rows: int = 7
    view_cols: int = 9

    # Episode clock
    max_episode_steps: int = 10_000
    fixed_timestep_mode: bool = False
    day_length: int = 300
    intrinsic_decay_interval: int = 25
    health_regen_interval: int = 20
    night_light_threshold: float = 0.3

    # Mobs
    zombie_cap: int = 8
    skeleton_cap: int = 8
    cow_cap: int = 8
    arrow_cap: int = 16
    spawn_distance_min: int = 6
    spawn_distance_max: int = 16
    despawn_distance: int = 24
    zombie_spawn_prob: float = 0.3
    skeleton_spawn_prob: float = 0.05
    cow_spawn_prob: float = 0.01
    zombie_damage: int = 2
    arrow_damage: int = 2
    zombie_health: int = 5
    skeleton_health: int = 3
    cow_health: int = 3

    # Action effects
    sapling_prob: float = 0.1
    plant_ripen_prob: float = 0.05
    cow_food_gain: int = 6
    plant_food_gain: int = 4
    station_radius: int = 2

    # Rewards and scenario wiring
    reward_scenario: str = "independent"
    proximity_beta: float = 0.0
    attack_enabled: bool = False
    expert_schedule: tuple[str, ...] | None = None

    # Spawning of players
    spawn_min_distance: int = 10

    # Seeding
    rng_seed: int = 0

    terrain: TerrainParams = field(default_factory=TerrainParams)

    def schedule(self) -> tuple[str, ...]:
        """Per-agent visibility rules, defaulting to mutual visibility."""
        if self.expert_schedule is None:
            return (VISIBILITY_ALWAYS,) * self.n_agents
        return self.expert_schedule

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["terrain"] = dataclasses.asdict(self.terrain)
        if self.expert_schedule is not None:
            d["expert_schedule"] = list(self.expert_schedule)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _parse_rule(rule: str) -> tuple[str, int]:
    """Split a visibility rule string into (kind, k)."""
    if rule in (VISIBILITY_ALWAYS, VISIBILITY_NEVER):
        return rule, 0
    if rule.startswith(VISIBILITY_FIRST_K + ":"):
        return VISIBILITY_FIRST_K, int(rule.split(":", 1)[1])
    raise ValueError(f"unknown visibility rule {rule!r}")


def validate_config(raw: GameConfig) -> GameConfig:
    """Return the config if every invariant holds, else raise ConfigError
    listing all violations by field name."""
    errs: list[str] = []

    if raw.n_agents < 1:
        errs.append(f"n_agents must be >= 1, got {raw.n_agents}")
    if raw.view_rows < 1 or raw.view_rows % 2 == 0:
        errs.append(f"view_rows must be odd and >= 1, got {raw.view_rows}")
    if raw.view_cols < 1 or raw.view_cols % 2 == 0:
        errs.append(f"view_cols must be odd and >= 1, got {raw.view_cols}")
    if raw.map_height < raw.view_rows or raw.map_width < raw.view_cols:
        errs.append(
            f"map smaller than view window: map {raw.map_width}x{raw.map_height}, "
            f"view {raw.view_cols}x{raw.view_rows}"
        )

    for name in ("max_episode_steps", "day_length", "intrinsic_decay_interval",
                 "health_regen_interval"):
        if getattr(raw, name) < 1:
            errs.append(f"{name} must be >= 1, got {getattr(raw, name)}")

    for name in ("zombie_cap", "skeleton_cap", "cow_cap", "arrow_cap",
                 "spawn_distance_min", "spawn_distance_max", "despawn_distance",
                 "zombie_damage", "arrow_damage", "zombie_health",
                 "skeleton_health", "cow_health", "cow_food_gain",
                 "plant_food_gain", "spawn_min_distance"):
        if getattr(raw, name) < 0:
            errs.append(f"{name} must be >= 0, got {getattr(raw, name)}")
    if raw.station_radius < 1:
        errs.append(f"station_radius must be >= 1, got {raw.station_radius}")
    if raw.spawn_distance_min > raw.spawn_distance_max:
        errs.append("spawn_distance_min must be <= spawn_distance_max")

    for name in ("zombie_spawn_prob", "skeleton_spawn_prob", "cow_spawn_prob",
                 "sapling_prob", "plant_ripen_prob", "night_light_threshold"):
        v = getattr(raw, name)
        if not 0.0 <= v <= 1.0:
            errs.append(f"{name} must be in [0, 1], got {v}")

    if raw.reward_scenario not in SCENARIOS:
        errs.append(
            f"reward_scenario must be one of {SCENARIOS}, got {raw.reward_scenario!r}"
        )
    if raw.proximity_beta < 0:
        errs.append(f"proximity_beta must be >= 0, got {raw.proximity_beta}")
    if raw.reward_scenario == "attack" and not raw.attack_enabled:
        errs.append("reward_scenario 'attack' requires attack_enabled=true")

    if raw.expert_schedule is not None:
        if len(raw.expert_schedule) != raw.n_agents:
            errs.append(
                f"expert_schedule must list one rule per agent "
                f"({raw.n_agents}), got {len(raw.expert_schedule)}"
            )
        for i, rule in enumerate(raw.expert_schedule):
            try:
                kind, k = _parse_rule(rule)
                if kind == VISIBILITY_FIRST_K and k < 0:
                    errs.append(f"expert_schedule[{i}]: first_k steps must be >= 0")
            except (ValueError, IndexError):
                errs.append(f"expert_schedule[{i}]: unknown rule {rule!r}")

    errs.extend(raw.terrain.validate())

    if errs:
        raise ConfigError(errs)
    return raw


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(GameConfig)}
_TERRAIN_FIELDS = {f.name for f in dataclasses.fields(TerrainParams)}


def config_from_dict(data: dict) -> GameConfig:
    """Build and validate a GameConfig from a JSON-style dict.

    Unknown keys are rejected to keep config files honest.
    """
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError([f"unknown config key {k!r}" for k in sorted(unknown)])
    kwargs = dict(data)
    if "terrain" in kwargs:
        tdata = kwargs["terrain"]
        bad = set(tdata) - _TERRAIN_FIELDS
        if bad:
            raise ConfigError([f"unknown terrain key {k!r}" for k in sorted(bad)])
        kwargs["terrain"] = TerrainParams(**tdata)
    if "expert_schedule" in kwargs and kwargs["expert_schedule"] is not None:
        kwargs["expert_schedule"] = tuple(kwargs["expert_schedule"])
    return validate_config(GameConfig(**kwargs))


def load_config(path: str) -> GameConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
