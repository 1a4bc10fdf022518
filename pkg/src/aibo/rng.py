"""Seedable, splittable random streams.

Every stream wraps a Philox counter-based generator whose 128-bit key is
derived by hashing the parent key together with a child label, so a child
stream depends only on ``(root seed, label path)``. Normal variates are
produced by the inverse CDF so the same path serves plain and
low-discrepancy draws.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

__all__ = ["Stream", "normal_bank"]

# keeps ndtri finite for u in {0, 1}
_U_EPS = 2.0**-53
# Sobol banks are drawn at this many columns (at least) and truncated
BANK_WIDTH = 32


def _derive_key(parent_key: int, label: str) -> int:
    h = hashlib.blake2b(digest_size=16)
    h.update(parent_key.to_bytes(16, "little"))
    h.update(label.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


class Stream:
    """A single-owner random stream identified by a label path."""

    def __init__(self, seed: int, *, _key: int | None = None, _path: str = ""):
        if _key is None:
            if seed < 0 or seed >= 2**64:
                raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
            _key = _derive_key(0, f"root:{seed}")
        self.seed = seed
        self.key = _key
        self.path = _path
        self._children: set[str] = set()
        self._gen = np.random.Generator(np.random.Philox(key=_key))

    def __repr__(self) -> str:
        return f"Stream(seed={self.seed}, path={self.path!r})"

    def split(self, label: str) -> Stream:
        """Return an independent child stream; each label may be used once."""
        if label in self._children:
            raise ValueError(f"duplicate stream label {label!r} under {self.path!r}")
        self._children.add(label)
        return Stream(self.seed, _key=_derive_key(self.key, label), _path=f"{self.path}/{label}")

    def uniform(self, size=None, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = self._gen.random(size)
        return u if (low, high) == (0.0, 1.0) else low + (high - low) * u

    def normal(self, size=None) -> np.ndarray:
        u = self._gen.random(size)
        return ndtri(np.clip(u, _U_EPS, 1.0 - _U_EPS))

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size)

    def scramble_seed(self) -> int:
        return int(self._gen.integers(0, 2**63 - 1))


def normal_bank(stream: Stream, rows: int, cols: int, *, quasi: bool = True,
                width: int | None = None) -> np.ndarray:
    """Draw a ``rows x cols`` matrix of standard-normal base samples.

    The bank is generated at ``width`` columns (default
    ``max(cols, BANK_WIDTH)``) and the first ``cols`` columns are returned,
    so banks drawn from equal stream states share column prefixes. With
    ``quasi`` the uniforms come from a scrambled Sobol sequence; otherwise
    each column is an independent child stream, which makes the prefix
    property hold for any width.
    """
    if rows < 1 or cols < 1:
        raise ValueError("bank needs at least one row and one column")
    width = max(cols, BANK_WIDTH) if width is None else width
    if width < cols:
        raise ValueError(f"width {width} smaller than requested columns {cols}")
    if quasi:
        sobol = qmc.Sobol(d=width, scramble=True, seed=stream.scramble_seed())
        m = int(np.ceil(np.log2(rows)))
        u = sobol.random_base2(m)[:rows, :cols]
        return ndtri(np.clip(u, _U_EPS, 1.0 - _U_EPS))
    out = np.empty((rows, cols))
    for j in range(cols):
        out[:, j] = stream.split(f"bank-col-{j}").normal(rows)
    return out
