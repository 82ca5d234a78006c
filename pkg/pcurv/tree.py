"""
Accumulating remainder tree: M(θ)·M(θ+1)⋯M(θ+p-1) mod (p, θ^e) for every
admissible prime p < N at once.

Level i of the tree has 2^i nodes; node (i, j) covers the integers
U_{i,j} = {k : jN/2^i < k <= (j+1)N/2^i}. T holds the ordered product of
M(θ+k) over U_{i,j}, S the product of the admissible primes in U_{i,j}, and
W the product of everything to the left of U_{i,j} reduced mod S_{i,j}.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from gmpy2 import mpz

from pcurv.kernel import Modulus, TruncPolyMat, mat_mul, mat_reduce
from pcurv.models import PrimePlan
from pcurv.ore import CompanionMat

logger = logging.getLogger(__name__)


def tree_height(N: int) -> int:
    """η = ⌈log₂ N⌉."""
    return (N - 1).bit_length()


@dataclass(frozen=True)
class IntervalIndex:
    level: int
    position: int

    def bounds(self, N: int) -> Tuple[int, int]:
        """First and last k of U_{level, position}; empty when first > last."""
        first = ((self.position * N) >> self.level) + 1
        last = ((self.position + 1) * N) >> self.level
        return first, last

    def members(self, N: int) -> range:
        first, last = self.bounds(N)
        return range(first, last + 1)


@dataclass
class FactorialTrees:
    """The T and S trees, stored level by level (level 0 is the root)."""
    N: int
    e: int
    T: List[Optional[List[TruncPolyMat]]]
    S: List[List[int]]
    released: List[int] = field(default_factory=list)

    @property
    def height(self) -> int:
        return len(self.S) - 1

    def node_sizes(self) -> List[Tuple[int, int, int]]:
        """(level, index, max bit size) for every T node still held."""
        rows = []
        for level, nodes in enumerate(self.T):
            if nodes is None:
                continue
            for index, node in enumerate(nodes):
                rows.append((level, index, node.max_bit_size()))
        return rows

    def release(self, level: int):
        if self.T[level] is not None:
            self.T[level] = None
            self.released.append(level)


def build_leaves(M: CompanionMat, N: int, e: int, plan: PrimePlan) -> Tuple[List[TruncPolyMat], List[int]]:
    """Leaves at level η: T = M(θ+k) or the identity, S = k for admissible k, else 1."""
    height = tree_height(N)
    identity = TruncPolyMat.identity(M.s, e)
    t_leaves, s_leaves = [], []
    for j in range(1 << height):
        members = IntervalIndex(height, j).members(N)
        if len(members) == 0:
            t_leaves.append(identity)
            s_leaves.append(mpz(1))
            continue
        k = members[0]
        t_leaves.append(M.at(k, e))
        s_leaves.append(mpz(k) if plan.is_admissible(k) else mpz(1))
    return t_leaves, s_leaves


def build_product_trees(t_leaves: List[TruncPolyMat], s_leaves: List[int], N: int) -> FactorialTrees:
    """Fill T and S bottom-up; T products keep ascending-k order."""
    T = [t_leaves]
    S = [s_leaves]
    level = (len(t_leaves) - 1).bit_length()
    while len(T[0]) > 1:
        below_t, below_s = T[0], S[0]
        T.insert(0, [mat_mul(below_t[2 * j], below_t[2 * j + 1]) for j in range(len(below_t) // 2)])
        S.insert(0, [below_s[2 * j] * below_s[2 * j + 1] for j in range(len(below_s) // 2)])
        level -= 1
        if logger.isEnabledFor(logging.DEBUG):
            logger.debug("T level %d: %d nodes, max %d bits", level, len(T[0]),
                         max(node.max_bit_size() for node in T[0]))
    return FactorialTrees(N=N, e=t_leaves[0].e, T=T, S=S)


def descend_remainders(trees: FactorialTrees, release: bool = True) -> Dict[int, TruncPolyMat]:
    """
    Top-down W tree.

    W_{0,0} is the identity, W_{i+1,2j} = W_{i,j} mod S_{i+1,2j} and
    W_{i+1,2j+1} = W_{i,j}·T_{i+1,2j} mod S_{i+1,2j+1}. Nodes with S = 1 carry
    nothing. Returns W at every leaf whose S is an admissible prime.
    """
    root_s = trees.S[0][0]
    if root_s == 1:
        return {}
    s = trees.T[-1][0].s
    W: List[Optional[TruncPolyMat]] = [TruncPolyMat.identity(s, trees.e, Modulus(root_s))]
    if release:
        trees.release(0)
    for level in range(trees.height):
        next_s = trees.S[level + 1]
        next_t = trees.T[level + 1]
        below: List[Optional[TruncPolyMat]] = [None] * (2 * len(W))
        for j, w in enumerate(W):
            if w is None:
                continue
            s_left, s_right = next_s[2 * j], next_s[2 * j + 1]
            if s_left > 1:
                below[2 * j] = mat_reduce(w, Modulus(s_left))
            if s_right > 1:
                m_right = Modulus(s_right)
                below[2 * j + 1] = mat_mul(mat_reduce(w, m_right), mat_reduce(next_t[2 * j], m_right))
        W = below
        if release:
            trees.release(level + 1)
    return {int(s_leaf): w for s_leaf, w in zip(trees.S[-1], W) if w is not None}


def matrix_factorial(M: CompanionMat, N: int, e: int, plan: PrimePlan,
                     timings: Optional[Dict[str, float]] = None,
                     tree_sizes: Optional[List[Tuple[int, int, int]]] = None,
                     release: bool = True) -> Dict[int, TruncPolyMat]:
    """
    M(θ)·M(θ+1)⋯M(θ+p-1) mod (p, θ^e) for every admissible p.

    Args:
        M: scaled companion matrix
        N: bound on the primes
        e: truncation order
        plan: admissible primes
        timings: optional dict receiving 't_tree' and 'w_tree' wall-clock seconds
        tree_sizes: optional list receiving (level, index, max bit size) of T nodes
        release: drop each T level once the W descent has consumed it

    Returns:
        Mapping p ↦ product matrix over 𝔽_p[θ]/θ^e.
    """
    if not plan.admissible:
        return {}
    start = time.perf_counter()
    t_leaves, s_leaves = build_leaves(M, N, e, plan)
    trees = build_product_trees(t_leaves, s_leaves, N)
    built = time.perf_counter()
    if tree_sizes is not None:
        tree_sizes.extend(trees.node_sizes())
    prefixes = descend_remainders(trees, release=release)
    result = {}
    for p in sorted(prefixes):
        result[p] = mat_mul(M.at(0, e, Modulus(p)), prefixes[p])
    done = time.perf_counter()
    if timings is not None:
        timings['t_tree'] = built - start
        timings['w_tree'] = done - built
    logger.info("matrix factorial for N=%d: T tree %.3fs, W tree %.3fs, %d primes",
                N, built - start, done - built, len(result))
    return result
