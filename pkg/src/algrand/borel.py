"""Borel normality metric over non-overlapping m-bit blocks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitstore import BitSource

# bits per counting chunk; a multiple of lcm(1..6) keeps blocks aligned
_CHUNK_BITS = 60 * (1 << 18)


@dataclass(frozen=True)
class BorelResult:
    metric: float
    per_m_deviation: dict[int, float] = field(default_factory=dict)
    m_max: int = 0
    string_length: int = 0

    @property
    def normal(self) -> bool:
        return self.metric <= 1.0


def max_block_size(length: int) -> int:
    """floor(log2(log2(length))) in exact integer arithmetic."""
    # log2 log2 |x| >= m  iff  |x| >= 2**(2**m)
    m = 0
    while length >= 1 << (1 << (m + 1)):
        m += 1
    return m


def block_counts(x: BitSource, m: int) -> np.ndarray:
    """Occurrences of each m-bit pattern among the floor(|x|/m) disjoint blocks."""
    nblocks = x.length // m
    counts = np.zeros(1 << m, dtype=np.int64)
    weights = (1 << np.arange(m - 1, -1, -1)).astype(np.int64)
    usable = nblocks * m
    for start in range(0, usable, _CHUNK_BITS):
        stop = min(start + _CHUNK_BITS, usable)
        blocks = x.bits(start, stop).reshape(-1, m).astype(np.int64)
        counts += np.bincount(blocks @ weights, minlength=1 << m)
    return counts


def borel_metric(x: BitSource) -> BorelResult:
    """Left-hand side of the scaled Borel condition; normal iff metric <= 1.

    For each m <= floor(log2 log2 |x|) the deviation is
    max_j |N_j / (|x|/m) - 2**-m|; the metric is the largest deviation
    scaled by sqrt(|x| / log2 |x|). Remainder bits are dropped per m.
    """
    length = x.length
    if length < 16:
        raise ValueError(f"Borel test needs at least 16 bits, got {length}")
    m_max = max_block_size(length)
    scale = math.sqrt(length / math.log2(length))
    deviations: dict[int, float] = {}
    for m in range(1, m_max + 1):
        counts = block_counts(x, m)
        # |N_j m 2^m - |x|| / (|x| 2^m): exact integer numerator
        worst = int(np.abs(counts * (m << m) - length).max())
        deviations[m] = worst / (length * (1 << m))
    metric = max(deviations.values()) * scale
    return BorelResult(metric=metric, per_m_deviation=deviations, m_max=m_max, string_length=length)


def bias(x: BitSource) -> float:
    """|p0 - 1/2| where p0 is the relative frequency of zeros."""
    if x.length < 1:
        raise ValueError("bias of an empty string")
    zeros = int(block_counts(x, 1)[0])
    return abs(2 * zeros - x.length) / (2 * x.length)
