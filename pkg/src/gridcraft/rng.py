"""Counter-based splittable random streams.

Every draw is a pure function of (key, counter) and substreams are derived
by hashing labels into the key, so draws are order-independent across
entities and reproducible regardless of scheduling. The mixer is the
splitmix64 finalizer, which passes standard statistical batteries and is
cheap enough to evaluate per cell or per mob.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """splitmix64 finalizer over one 64-bit word."""
    z &= MASK64
    z = (z ^ (z >> 30)) * _C1 & MASK64
    z = (z ^ (z >> 27)) * _C2 & MASK64
    return z ^ (z >> 31)


def fold(key: int, *words: int) -> int:
    """Absorb integer labels into a key, one mix round per word."""
    h = key & MASK64
    for w in words:
        h = mix64(h ^ mix64((w + GOLDEN) & MASK64))
    return h


def u64_to_unit(u: int) -> float:
    """Map a 64-bit word to [0, 1) using the top 53 bits."""
    return (u >> 11) * (1.0 / (1 << 53))


@dataclass
class RngState:
    """A named stream: a 64-bit key plus a draw counter."""

    key: int
    counter: int = field(default=0)

    def substream(self, label: int) -> "RngState":
        return RngState(fold(self.key, label))

    def next_u64(self) -> int:
        self.counter += 1
        return fold(self.key, self.counter)

    def uniform(self) -> float:
        return u64_to_unit(self.next_u64())

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.randbelow(len(seq))]


def new_rng(seed: int) -> RngState:
    """Root stream for a 64-bit seed."""
    return RngState(mix64((seed & MASK64) + GOLDEN))


def substream(rng: RngState, label: int) -> RngState:
    return rng.substream(label)
