"""Deterministic, splittable random streams.

A stream is identified by a root seed plus a path of labels. Equal
(seed, path) pairs always produce the same draw sequence, so a whole
tuning run replays from a single seed no matter how work is scheduled.
Substreams for unrelated labels are statistically independent: each
stream seeds its own generator from a keyed hash of the full path.
"""

from __future__ import annotations

import hashlib
import random


class RandomStream:
    """A named, seedable pseudo-random stream."""

    __slots__ = ("seed", "path", "_rng")

    def __init__(self, seed: int, path: tuple["str | int", ...] = ()):
        self.seed = int(seed)
        self.path = tuple(path)
        self._rng = random.Random(self._derive_key())

    def _derive_key(self) -> int:
        h = hashlib.blake2b(digest_size=16)
        h.update(str(self.seed).encode("ascii"))
        for label in self.path:
            tag = b"i" if isinstance(label, int) else b"s"
            payload = str(label).encode("utf-8")
            h.update(tag)
            h.update(len(payload).to_bytes(4, "big"))
            h.update(payload)
        return int.from_bytes(h.digest(), "big")

    def split(self, *labels: "str | int") -> "RandomStream":
        """Child stream for the given labels; independent of this one."""
        return RandomStream(self.seed, self.path + labels)

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return self._rng.random()

    def __repr__(self) -> str:
        suffix = "/".join(str(p) for p in self.path)
        return f"RandomStream(seed={self.seed}, path={suffix!r})"
