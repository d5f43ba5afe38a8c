"""Alias tables for O(1) draws from fixed discrete distributions (Vose's
construction)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import ValidationError

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class AliasTable:
    """Probability table ``prob`` and alias indices ``alias`` for one
    distribution; reconstructable to the input within 1e-12 per entry."""

    prob: np.ndarray
    alias: np.ndarray

    def __post_init__(self):
        self.prob.flags.writeable = False
        self.alias.flags.writeable = False

    @property
    def size(self) -> int:
        return self.prob.shape[0]


def build_alias(p) -> AliasTable:
    """Build an alias table for probability vector ``p``.

    ``p`` must be entrywise >= 0 and sum to 1 within 1e-9.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError("alias input must be a non-empty 1-d vector")
    if (p < 0).any():
        raise ValidationError(f"alias input has negative entry at {int(np.argmin(p))}")
    total = p.sum()
    if abs(total - 1.0) > _SUM_TOL:
        raise ValidationError(f"alias input sums to {total!r}, expected 1 within {_SUM_TOL}")

    n = p.size
    prob = np.ones(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    scaled = p * n
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small.append(g)
        else:
            large.append(g)
    # leftovers are numerically 1 (either queue may hold them at the end)
    for q in (small, large):
        for g in q:
            prob[g] = 1.0
            alias[g] = g
    return AliasTable(prob=prob, alias=alias)


def alias_draw(table: AliasTable, rng: np.random.Generator) -> int:
    """Draw one index from the table using two uniform variates."""
    i = int(rng.integers(table.size))
    if rng.random() < table.prob[i]:
        return i
    return int(table.alias[i])


def reconstruct(table: AliasTable) -> np.ndarray:
    """Invert a table back to its probability vector.

    Slot ``i`` contributes ``prob[i]`` to outcome ``i`` and the remaining
    ``1 - prob[i]`` to outcome ``alias[i]``; dividing by the slot count
    recovers the distribution exactly up to float rounding.
    """
    out = table.prob.copy()
    np.add.at(out, table.alias, 1.0 - table.prob)
    return out / table.size
