"""Largest-remainder integer apportionment.

Fractional targets (regional emigrant counts, per-bracket quotas) are turned
into integers that sum exactly to the requested total.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def largest_remainder(shares: Sequence[float], total: int) -> list[int]:
    """Apportion ``total`` units proportionally to ``shares``.

    Floors each fair share, then hands the remaining units to the largest
    fractional parts (ties broken by lower index, for determinism). Each
    result lies within one unit of its fair share.
    """
    if total < 0:
        raise ValueError("total must be nonnegative")
    shares = np.asarray(shares, dtype=np.float64)
    if len(shares) == 0:
        if total:
            raise ValueError("cannot apportion a positive total over no shares")
        return []
    if shares.min() < 0:
        raise ValueError("shares must be nonnegative")
    s = shares.sum()
    if s <= 0:
        # Nothing to weight by: spread evenly from the front.
        base, extra = divmod(total, len(shares))
        return [base + (1 if i < extra else 0) for i in range(len(shares))]
    quotas = (shares / s) * total
    floors = np.floor(quotas).astype(int)
    missing = total - int(floors.sum())
    if missing > 0:
        remainders = quotas - floors
        # argsort is stable, so equal remainders resolve to the lower index.
        order = np.argsort(-remainders, kind="stable")
        floors[order[:missing]] += 1
    return [int(x) for x in floors]


def round_half_up(x: float) -> int:
    """Integer target from a rate product; .5 always rounds up."""
    return int(math.floor(x + 0.5))
