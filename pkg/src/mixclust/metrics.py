"""Misclustering losses and the theoretical rate helper."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

__all__ = ["HammingReport", "hamming", "theoretical_rate"]

_MAX_K = 6  # exhaustive permutation search; all uses have k in {2, K}


@dataclass(frozen=True)
class HammingReport:
    """Minimum-over-permutations Hamming misclustering rate."""

    rate: float
    best_perm: tuple
    raw_mismatch_counts: dict


def hamming(z, z_star, k):
    """h(z, z*) = min over permutations pi of (1/n) sum I(z_i != pi(z*_i)).

    Both label vectors take values in 1..k; the search is exact over all
    k! permutations, ties broken by lexicographic permutation order.
    """
    z = np.asarray(z, dtype=int)
    z_star = np.asarray(z_star, dtype=int)
    if z.shape != z_star.shape or z.ndim != 1:
        raise ShapeError("label vectors must be 1-d and of equal length")
    if z.size == 0:
        raise ValueError("label vectors must be nonempty")
    if not 2 <= k <= _MAX_K:
        raise ValueError(f"k={k} outside supported range 2..{_MAX_K}")
    for name, v in (("z", z), ("z_star", z_star)):
        if v.min() < 1 or v.max() > k:
            raise ValueError(f"{name} entries must lie in 1..{k}")
    n = z.size
    counts = {}
    best_perm, best = None, None
    for perm in itertools.permutations(range(1, k + 1)):
        mapped = np.asarray(perm)[z_star - 1]
        mism = int(np.sum(z != mapped))
        counts[perm] = mism
        if best is None or mism < best:
            best_perm, best = perm, mism
    return HammingReport(rate=best / n, best_perm=best_perm, raw_mismatch_counts=counts)


def theoretical_rate(i_star):
    """Oracle misclustering bound exp(-I*/2)."""
    if i_star < 0:
        raise ValueError(f"separation strength must be nonnegative, got {i_star}")
    return math.exp(-i_star / 2.0)
