"""Deterministic, replayable random streams.

Every randomized operation in the package takes an explicit RngStream.
A stream is identified by a 64-bit seed plus a derivation path of labels;
recreating a stream with the same identity and issuing the same draw
sequence reproduces identical outputs bit for bit (counter-based Philox
underneath). Child streams are derived by label, never by draw position,
so adding repeats or stages never perturbs existing streams.
"""
from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["RngStream", "label_hash"]


def label_hash(label: str) -> int:
    """Stable 64-bit hash of a derivation label (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


class RngStream:
    """A seeded, counter-tracked random stream.

    `seed` plus the derivation `path` identify the stream; `counter` counts
    draw calls issued so far (for audit/replay diagnostics only -- replay is
    done by recreating the stream and repeating the draw sequence).
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self.counter = 0
        self._gen = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((self.seed, *self.path)))
        )

    def __repr__(self):
        return f"RngStream(seed={self.seed}, path={self.path}, counter={self.counter})"

    def child(self, label: str, index: int = 0) -> "RngStream":
        """Derive an independent stream by label (and optional index).

        Derivation depends only on (seed, path, label, index), not on how many
        draws the parent has issued.
        """
        return RngStream(self.seed, self.path + (label_hash(label), int(index)))

    # -- draws ------------------------------------------------------------

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        self.counter += 1
        return self._gen.uniform(low, high, size)

    def integers(self, low: int, high: int, size=None):
        """Integers in [low, high) like numpy's Generator.integers."""
        self.counter += 1
        return self._gen.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        self.counter += 1
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, replace: bool = False) -> np.ndarray:
        self.counter += 1
        return self._gen.choice(n, size=size, replace=replace)

    def normal(self, loc: float, scale: float, size=None) -> np.ndarray:
        self.counter += 1
        return self._gen.normal(loc, scale, size)
