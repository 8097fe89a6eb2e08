"""Trajectory logs: binary serialization and verified replay.

A log holds everything needed to regenerate an episode exactly: config,
seed (or an embedded fixture world), per-step joint actions, the event
stream, rewards, done flags, and per-step state digests. The file format is
a JSON header followed by length-prefixed binary records and a trailing
CRC32, so truncation and corruption are always detected.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .config import GameConfig, config_from_dict
from .state import WorldState, digest128
from .types import EVENT_WIDTH

FORMAT_MAJOR = 1
FORMAT_MINOR = 0

_MAGIC = b"GCLG"
_MAGIC_END = b"GCEN"
_REC_STEP = 1
_REC_FOOTER = 2


class LogFormatError(ValueError):
    """Corrupt, truncated, or version-incompatible log file."""


class ReplayDivergence(RuntimeError):
    """Replay produced a different state or event stream than the log."""

    def __init__(self, step: int, what: str):
        self.step = step
        self.what = what
        super().__init__(f"replay diverged at step {step}: {what}")


@dataclass
class TrajectoryLog:
    header: dict
    actions: np.ndarray          # (T, N) int8
    digests: np.ndarray          # (T, 16) uint8
    events: list[np.ndarray]     # T arrays of shape (k, 6) int32
    rewards: np.ndarray          # (T, N) float64
    dones: np.ndarray            # (T, N) bool
    final_ach: np.ndarray        # (N,) int64
    invalid_counts: np.ndarray   # (N,) int64
    world_blob: bytes | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return self.actions.shape[0]

    @property
    def n_agents(self) -> int:
        return self.actions.shape[1]

    @property
    def seed(self) -> int:
        return self.header["seed"]

    def config(self) -> GameConfig:
        return config_from_dict(self.header["config"])

    def achievements_per_agent(self) -> np.ndarray:
        return np.array([bin(int(m)).count("1") for m in self.final_ach])


def config_digest(cfg: GameConfig) -> str:
    return digest128(cfg.to_json().encode())


def state_to_bytes(state: WorldState) -> bytes:
    buf = io.BytesIO()
    np.savez(
        buf,
        tiles=state.tiles,
        provenance=state.provenance,
        player_arr=state.player_arr,
        ach_mask=state.ach_mask,
        mob_arr=state.mob_arr,
        scalars=np.array([state.step_counter], dtype=np.int64),
        rng_key=np.array([state.rng_key], dtype=np.uint64),
    )
    return buf.getvalue()


def state_from_bytes(blob: bytes) -> WorldState:
    with np.load(io.BytesIO(blob)) as z:
        return WorldState(
            tiles=z["tiles"],
            provenance=z["provenance"],
            player_arr=z["player_arr"],
            ach_mask=z["ach_mask"],
            mob_arr=z["mob_arr"],
            step_counter=int(z["scalars"][0]),
            rng_key=int(z["rng_key"][0]),
        )


def _pack_step(actions_row, digest: bytes, events: np.ndarray,
               rewards_row, dones_row) -> bytes:
    n_events = events.shape[0]
    payload = b"".join([
        actions_row.astype("<i1").tobytes(),
        digest,
        struct.pack("<I", n_events),
        events.astype("<i4").tobytes(),
        rewards_row.astype("<f8").tobytes(),
        dones_row.astype("<u1").tobytes(),
    ])
    return payload


def write_log(log: TrajectoryLog, path: str) -> None:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<BB", *log.header["format"]))
    header_json = json.dumps(log.header, sort_keys=True).encode()
    buf.write(struct.pack("<I", len(header_json)))
    buf.write(header_json)
    if log.header["world"]["kind"] == "embedded":
        if log.world_blob is None:
            raise ValueError("embedded world header without a world blob")
        buf.write(struct.pack("<I", len(log.world_blob)))
        buf.write(log.world_blob)
    n = log.n_agents
    for t in range(log.n_steps):
        payload = _pack_step(log.actions[t], log.digests[t].tobytes(),
                             log.events[t], log.rewards[t], log.dones[t])
        buf.write(struct.pack("<BI", _REC_STEP, len(payload)))
        buf.write(payload)
    footer = b"".join([
        struct.pack("<I", log.n_steps),
        log.final_ach.astype("<i8").tobytes(),
        log.invalid_counts.astype("<i8").tobytes(),
    ])
    buf.write(struct.pack("<BI", _REC_FOOTER, len(footer)))
    buf.write(footer)
    body = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(body)))
        fh.write(_MAGIC_END)


def read_log(path: str) -> TrajectoryLog:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16 or raw[:4] != _MAGIC:
        raise LogFormatError("not a trajectory log (bad magic)")
    if raw[-4:] != _MAGIC_END:
        raise LogFormatError("truncated log (missing end marker)")
    body, crc_bytes = raw[:-8], raw[-8:-4]
    if zlib.crc32(body) != struct.unpack("<I", crc_bytes)[0]:
        raise LogFormatError("checksum mismatch (corrupt or truncated log)")

    notes: list[str] = []
    off = 4
    major, minor = struct.unpack_from("<BB", body, off)
    off += 2
    if major != FORMAT_MAJOR:
        raise LogFormatError(
            f"log format major version {major} unsupported (reader is {FORMAT_MAJOR})")
    if minor > FORMAT_MINOR:
        raise LogFormatError(
            f"log minor version {minor} is newer than reader ({FORMAT_MINOR})")
    if minor < FORMAT_MINOR:
        notes.append(f"migrated from format {major}.{minor} to "
                     f"{FORMAT_MAJOR}.{FORMAT_MINOR}")

    (hlen,) = struct.unpack_from("<I", body, off)
    off += 4
    header = json.loads(body[off:off + hlen])
    off += hlen
    world_blob = None
    if header["world"]["kind"] == "embedded":
        (blen,) = struct.unpack_from("<I", body, off)
        off += 4
        world_blob = body[off:off + blen]
        off += blen

    n = header["n_agents"]
    actions, digests, events, rewards, dones = [], [], [], [], []
    final_ach = invalid = None
    total_steps = None
    while off < len(body):
        rec_type, rlen = struct.unpack_from("<BI", body, off)
        off += 5
        rec = body[off:off + rlen]
        if len(rec) != rlen:
            raise LogFormatError("truncated record")
        off += rlen
        if rec_type == _REC_STEP:
            p = 0
            actions.append(np.frombuffer(rec, dtype="<i1", count=n, offset=p))
            p += n
            digests.append(np.frombuffer(rec, dtype=np.uint8, count=16, offset=p))
            p += 16
            (k,) = struct.unpack_from("<I", rec, p)
            p += 4
            ev = np.frombuffer(rec, dtype="<i4", count=k * EVENT_WIDTH,
                               offset=p).reshape(k, EVENT_WIDTH)
            p += k * EVENT_WIDTH * 4
            events.append(ev)
            rewards.append(np.frombuffer(rec, dtype="<f8", count=n, offset=p))
            p += 8 * n
            dones.append(np.frombuffer(rec, dtype="<u1", count=n, offset=p).astype(bool))
        elif rec_type == _REC_FOOTER:
            (total_steps,) = struct.unpack_from("<I", rec, 0)
            final_ach = np.frombuffer(rec, dtype="<i8", count=n, offset=4)
            invalid = np.frombuffer(rec, dtype="<i8", count=n, offset=4 + 8 * n)
        else:
            raise LogFormatError(f"unknown record type {rec_type}")
    if final_ach is None:
        raise LogFormatError("log has no footer record")
    if total_steps != len(actions):
        raise LogFormatError(
            f"footer says {total_steps} steps, found {len(actions)}")
    return TrajectoryLog(
        header=header,
        actions=np.array(actions, dtype=np.int8).reshape(len(actions), n),
        digests=np.array(digests, dtype=np.uint8).reshape(len(actions), 16),
        events=events,
        rewards=np.array(rewards, dtype=np.float64).reshape(len(actions), n),
        dones=np.array(dones, dtype=bool).reshape(len(actions), n),
        final_ach=final_ach.astype(np.int64),
        invalid_counts=invalid.astype(np.int64),
        world_blob=world_blob,
        notes=notes,
    )


def _rebuild_initial_state(log: TrajectoryLog, cfg: GameConfig) -> WorldState:
    if log.header["world"]["kind"] == "embedded":
        return state_from_bytes(log.world_blob)
    from .worldgen import generate_world
    return generate_world(cfg, log.seed)


def iter_states(log: TrajectoryLog, backend: str = "fast"):
    """Yield (t, state) after each logged step, without verification.

    State objects are views of the live environment; copy them to keep.
    """
    from .env import Env
    cfg = log.config()
    env = Env(cfg, backend=backend)
    env.reset(seed=log.seed, world=_rebuild_initial_state(log, cfg))
    yield 0, env.state
    for t in range(log.n_steps):
        env.step(log.actions[t].astype(np.int32))
        yield t + 1, env.state


def replay(log: TrajectoryLog, backend: str = "fast",
           collect_frames: bool = False):
    """Re-simulate a log and assert per-step digest and event equality.

    Returns (steps_verified, frames). Raises ReplayDivergence naming the
    first mismatching step.
    """
    from .env import Env
    from .observation import render_frame

    cfg = log.config()
    env = Env(cfg, backend=backend)
    env.reset(seed=log.seed, world=_rebuild_initial_state(log, cfg))
    if "world_digest" in log.header:
        if env.state.digest() != log.header["world_digest"]:
            raise ReplayDivergence(0, "initial world digest")
    frames = [render_frame(env.state)] if collect_frames else []
    for t in range(log.n_steps):
        _, rewards, dones, info = env.step(log.actions[t].astype(np.int32))
        digest = bytes.fromhex(env.state.digest())
        if digest != log.digests[t].tobytes():
            raise ReplayDivergence(t, "state digest")
        if not np.array_equal(info["events"], log.events[t]):
            raise ReplayDivergence(t, "event stream")
        if not np.array_equal(rewards, log.rewards[t]):
            raise ReplayDivergence(t, "rewards")
        if not np.array_equal(dones, log.dones[t]):
            raise ReplayDivergence(t, "done flags")
        if collect_frames:
            frames.append(render_frame(env.state))
    if not np.array_equal(env.state.ach_mask, log.final_ach):
        raise ReplayDivergence(log.n_steps, "final achievement sets")
    return log.n_steps, frames
