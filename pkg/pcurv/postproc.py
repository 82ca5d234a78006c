"""
Per-prime post-processing of the tree output.

For one prime p the tree hands over l_θ^p·B_p mod (p, θ^e). This module turns
it into P_p ∈ 𝔽_p[x, Y]: recover B_p, take its characteristic polynomial over
𝔽_p[θ]/θ^e, scale by l_θ, map back from polynomials in θ^p-θ to polynomials
in x^p, divide by Y^k and by l_x, and undo the shift.
"""

import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, List, Sequence

import numpy as np

from pcurv.errors import ConsistencyError, ExactDivisionFailed, NonzeroLowYCoefficients
from pcurv.kernel import (IntPoly, Modulus, TruncPoly, TruncPolyMat, scalar_inv_mod, scalar_stack_product,
                          truncated_convolution)
from pcurv.models import BivarPoly, CharPolyRecord, ExclusionReason

logger = logging.getLogger(__name__)

YPoly = List[TruncPoly]

# primes below this get the direct-exponentiation checks in debug runs
FERMAT_CHECK_LIMIT = 50


@dataclass(frozen=True)
class PostprocContext:
    """Per-operator data every prime needs; picklable for worker processes."""
    l_theta: int
    k: int
    m: int
    d: int
    l_x: IntPoly
    shift: int

    @property
    def e(self) -> int:
        return self.d + 1


def charpoly_trunc(A: TruncPolyMat) -> YPoly:
    """
    det(Y·I - A) over 𝔽_p[θ]/θ^e by Berkowitz's division-free method.

    Returns the coefficients in ascending powers of Y; the last one is 1.
    """
    if A.modulus is None:
        raise ConsistencyError("charpoly_trunc expects a reduced matrix")
    p = A.modulus.value
    e, n = A.e, A.s
    data = A.data

    one = np.zeros(e, dtype=object)
    one[0] = 1

    c = [one]
    for r in range(1, n + 1):
        sub = data[:, :r - 1, :r - 1]
        col = data[:, :r - 1, r - 1]
        row = data[:, r - 1, :r - 1]
        t = [one, (-data[:, r - 1, r - 1]) % p]
        v = col
        for _ in range(r - 1):
            t.append((-truncated_convolution(row, v, np.dot)) % p)
            v = truncated_convolution(sub, v, np.matmul, p)
        c = [
            sum((scalar_stack_product(t[i - j], c[j], p) for j in range(max(0, i - r), min(i, r - 1) + 1)),
                np.zeros(e, dtype=object)) % p
            for i in range(r + 1)
        ]
    return [TruncPoly.from_coeffs(c[n - i].tolist(), e, A.modulus) for i in range(n + 1)]


def recover_Bp(prod: TruncPolyMat, l_theta: int, p: int) -> TruncPolyMat:
    """Multiply by l_θ⁻¹ once: the tree product is l_θ^p·B_p and l_θ^(p-1) ≡ 1."""
    modulus = Modulus(p)
    inv = scalar_inv_mod(l_theta % p, modulus)
    if inv == 1:
        return prod
    return TruncPolyMat(prod.data * inv, modulus)


def xi_scale(chi: YPoly, l_theta: int, p: int) -> YPoly:
    """Multiply every coefficient by l_θ (l_θ^p ≡ l_θ mod p)."""
    c = l_theta % p
    if c == 1:
        return list(chi)
    return [q * c for q in chi]


def solve_u_digits(truncated: Sequence[int], p: int, d: int) -> List[int]:
    """
    Coefficients q_0..q_d of Q(u) = Σ q_j u^j from the θ-coefficients of
    Q(θ^p - θ) mod θ^(d+1).

    The θ^i coefficient is Σ_k (-1)^(i-kp) C(i-k(p-1), k) q_(i-k(p-1)); this
    triangular system has diagonal (-1)^i and is solved forwards. For p > d
    it reduces to q_i = (-1)^i q'_i.
    """
    q = [0] * (d + 1)
    for i in range(d + 1):
        acc = truncated[i] if i < len(truncated) else 0
        k = 1
        while k * (p - 1) <= i:
            j = i - k * (p - 1)
            if k <= j:
                sign = -1 if (i - k * p) % 2 else 1
                acc -= sign * comb(j, k) * q[j]
            k += 1
        q[i] = (acc if i % 2 == 0 else -acc) % p
    return q


def expand_u_digits(q: Sequence[int], p: int, e: int) -> List[int]:
    """Inverse of solve_u_digits: θ-coefficients of Σ q_j (θ^p - θ)^j mod θ^e."""
    out = [0] * e
    for j, qj in enumerate(q):
        if not qj:
            continue
        for k in range(j + 1):
            exponent = j + k * (p - 1)
            if exponent < e:
                out[exponent] += comb(j, k) * (-1) ** (j - k) * qj
    return [c % p for c in out]


def _transport(digits: Dict[int, List[int]], p: int, k: int, m: int) -> BivarPoly:
    # u^j Y^i ↦ x^j Y^(i+j); then divide by Y^k
    terms: Dict[int, Dict[int, int]] = {}
    for i, q in digits.items():
        for j, c in enumerate(q):
            if c % p:
                row = terms.setdefault(i + j, {})
                row[j] = (row.get(j, 0) + c) % p
    low = [y for y in range(k) if any(terms.get(y, {}).values())]
    if low:
        raise NonzeroLowYCoefficients(f"Y^{low[0]} survives the division by Y^{k} modulo {p}")
    top = max((y for y, row in terms.items() if any(row.values())), default=-1)
    if top - k > m:
        raise ConsistencyError(f"Y-degree {top - k} exceeds the operator order {m} modulo {p}")
    rows = []
    for y in range(k, top + 1):
        row = terms.get(y, {})
        rows.append([row.get(j, 0) for j in range(max(row, default=-1) + 1)])
    return BivarPoly.from_ints(p, rows)


def reverse_iso(Q_theta: YPoly, p: int, k: int, m: int) -> BivarPoly:
    """
    Map the truncated Ξ_θ image back to 𝔽_p[x][Y] for p > d.

    Y^i q'_i(θ) with q'_(i,j) = (-1)^j q_(i,j) becomes Σ_j q_(i,j) x^j Y^(i+j);
    the result is then divided by Y^k.
    """
    digits = {}
    for i, coeff in enumerate(Q_theta):
        digits[i] = [(-c if j % 2 else c) % p for j, c in enumerate(coeff.coeffs)]
    return _transport(digits, p, k, m)


def reverse_iso_small(Q_theta: YPoly, p: int, d: int, k: int, m: int) -> BivarPoly:
    """reverse_iso for any p, solving the triangular system for p <= d."""
    digits = {i: solve_u_digits(coeff.coeffs, p, d) for i, coeff in enumerate(Q_theta)}
    return _transport(digits, p, k, m)


def finalize(R: BivarPoly, l_x: IntPoly, a: int, p: int, small: bool = False) -> CharPolyRecord:
    """
    Divide by l_x over 𝔽_p and substitute x ← x - a.

    l_x is the leading coefficient of the shifted operator; x stands for x^p,
    which is why the leading Y-coefficient must equal l_x mod p.
    """
    expected = l_x.reduce(p)
    if R.leading != expected:
        raise ConsistencyError(f"leading Y-coefficient modulo {p} is not the leading coefficient of L")
    try:
        quotient = R.divide_x(l_x)
    except ExactDivisionFailed as e:
        raise ExactDivisionFailed(p, xi=R.shift_x(-a)) from e
    return CharPolyRecord.create(p, quotient.shift_x(-a), shift=a, small=small)


def _power_mod(f: IntPoly, n: int, p: int) -> IntPoly:
    out = IntPoly.constant(1)
    for _ in range(n):
        out = (out * f).reduce(p)
    return out


def check_fermat_identities(context: PostprocContext, p: int):
    """
    Check by direct exponentiation the cancellations the per-prime path uses:
    l_θ^(p-1) ≡ 1, l_θ^p ≡ l_θ, l_x^p ≡ l_x(x^p) and (x - a)^p ≡ x^p - a mod p.
    """
    l = context.l_theta % p
    if pow(l, p - 1, p) != 1:
        raise ConsistencyError(f"l_theta^(p-1) is not 1 modulo {p}")
    if pow(l, p, p) != l:
        raise ConsistencyError(f"l_theta^p is not l_theta modulo {p}")
    spread = [0] * (context.l_x.degree * p + 1)
    for i, c in enumerate(context.l_x.coeffs):
        spread[i * p] = c
    if _power_mod(context.l_x, p, p) != IntPoly.from_coeffs(spread).reduce(p):
        raise ConsistencyError(f"l_x^p is not l_x(x^p) modulo {p}")
    a = context.shift
    frobenius = IntPoly.from_coeffs([-a] + [0] * (p - 1) + [1]).reduce(p)
    if _power_mod(IntPoly.from_coeffs((-a, 1)), p, p) != frobenius:
        raise ConsistencyError(f"(x - a)^p is not x^p - a modulo {p}")


def postprocess_prime(prod: TruncPolyMat, context: PostprocContext, p: int,
                      small: bool = False) -> CharPolyRecord:
    """Recover, characteristic polynomial, Ξ scale, reverse map and finalize for one prime."""
    try:
        if __debug__ and p < FERMAT_CHECK_LIMIT:
            check_fermat_identities(context, p)
        B = recover_Bp(prod, context.l_theta, p)
        chi = xi_scale(charpoly_trunc(B), context.l_theta, p)
        if p <= context.d:
            R = reverse_iso_small(chi, p, context.d, context.k, context.m)
        else:
            R = reverse_iso(chi, p, context.k, context.m)
        record = finalize(R, context.l_x, context.shift, p, small=small)
    except ExactDivisionFailed as e:
        logger.debug("p=%d: division by the leading coefficient is inexact", p)
        return CharPolyRecord.create_excluded(p, ExclusionReason.DIVISION_INEXACT, xi=e.xi,
                                              shift=context.shift)
    except ConsistencyError as e:
        logger.warning("p=%d: consistency check failed: %s", p, e)
        return CharPolyRecord.create_excluded(p, ExclusionReason.CONSISTENCY_FAILURE,
                                              shift=context.shift)
    logger.debug("p=%d: nilpotent=%s", p, record.nilpotent)
    return record
