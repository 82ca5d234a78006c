"""
Prime enumeration below N and classification into admissible / excluded primes.
"""

import logging
import math
from typing import Iterator, List, Tuple

import numpy as np

from pcurv.errors import ContractError
from pcurv.models import ExclusionReason, PrimePlan

logger = logging.getLogger(__name__)

SEGMENT_SIZE = 2 ** 20


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p: limit + 1: p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def _segments(limit: int, segment_odd_count: int) -> Iterator[List[int]]:
    base = simple_sieve(math.isqrt(limit) + 1).tolist()
    span = 2 * segment_odd_count
    low = 3
    while low <= limit:
        high = min(low + span, limit + 1)
        odd_count = (high - low + 1) // 2
        mask = np.ones(odd_count, dtype=bool)
        for p in base:
            if p == 2:
                continue
            p2 = p * p
            if p2 > limit:
                break
            start = max(p2, ((low + p - 1) // p) * p)
            if (start & 1) == 0:
                start += p
            if start >= high:
                continue
            mask[(start - low) // 2::p] = False
        if mask.any():
            yield (low + 2 * np.flatnonzero(mask)).tolist()
        low = high


def primes_below(N: int, segment_odd_count: int = SEGMENT_SIZE) -> List[int]:
    """Primes p < N in ascending order, via an odd-only segmented sieve."""
    limit = N - 1
    if limit < 2:
        return []
    primes = [2]
    for chunk in _segments(limit, segment_odd_count):
        primes.extend(chunk)
    return primes


def plan_primes(N: int, l_theta: int, d: int, include_small: bool = False) -> PrimePlan:
    """
    Classify every prime p < N.

    DIVIDES_LEADING takes precedence over LE_DEGREE. With include_small, primes
    p <= d not dividing l_θ are admissible and listed in `small`.
    """
    if N < 2:
        raise ContractError(f"N must be >= 2, got {N}")
    if l_theta == 0:
        raise ContractError("leading coefficient l_theta must be nonzero")
    admissible: List[int] = []
    excluded: List[Tuple[int, ExclusionReason]] = []
    small = []
    for p in primes_below(N):
        if l_theta % p == 0:
            excluded.append((p, ExclusionReason.DIVIDES_LEADING))
        elif p <= d:
            if include_small:
                admissible.append(p)
                small.append(p)
            else:
                excluded.append((p, ExclusionReason.LE_DEGREE))
        else:
            admissible.append(p)
    logger.info("plan for N=%d: %d admissible, %d excluded (%d small)",
                N, len(admissible), len(excluded), len(small))
    return PrimePlan(N=N, admissible=admissible, excluded=excluded, small=frozenset(small))
