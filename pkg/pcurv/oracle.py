"""
Slow single-prime ground truth.

Everything here runs on sympy: 𝔽_p[t] is a sparse polynomial ring over GF(p)
and matrices over it are DomainMatrix objects, whose charpoly is
division-free. Only the operator containers and the output record types are
shared with the tree pipeline, so agreement between the two means something.

Katz's recursion is carried in common-denominator form: with C = N/l the
matrix of ∂ on D/DL, A_i = P_i / l^i where
    P_1 = N,  P_(i+1) = l·P_i' - i·l'·P_i + N·P_i.
"""

import logging
from dataclasses import dataclass
from math import comb
from typing import Dict, List, Sequence, Tuple

from sympy import GF
from sympy.polys.matrices import DomainMatrix
from sympy.polys.rings import PolyElement, ring

from pcurv.errors import MembershipError, NonzeroLowYCoefficients, NotReducible
from pcurv.kernel import IntPoly
from pcurv.models import BivarPoly, CharPolyRecord, ExclusionReason
from pcurv.ore import OperatorTheta, OperatorX, phi

logger = logging.getLogger(__name__)

ORACLE_LIMIT = 50


class FpX:
    """𝔽_p[t] as a sympy polynomial ring, plus the matrix domain over it."""

    def __init__(self, p: int):
        self.p = p
        self.ring, self.t = ring("t", GF(p))
        self.domain = self.ring.to_domain()

    @property
    def zero(self) -> PolyElement:
        return self.ring.zero

    @property
    def one(self) -> PolyElement:
        return self.ring.one

    def make(self, coeffs: Sequence[int]) -> PolyElement:
        """Polynomial from ascending integer coefficients."""
        return self.ring.from_dict({(i,): int(c) % self.p for i, c in enumerate(coeffs) if int(c) % self.p})

    def coeffs(self, f: PolyElement) -> List[int]:
        """Ascending coefficients in [0, p); [] for zero."""
        if not f:
            return []
        out = [0] * (f.degree() + 1)
        for (i,), c in f.terms():
            out[i] = int(c) % self.p
        return out

    def shift_arg(self, f: PolyElement, i: int) -> PolyElement:
        """f(t + i)."""
        return f.compose(self.t, self.t + i)

    def matrix(self, rows: List[List[PolyElement]]) -> DomainMatrix:
        return DomainMatrix(rows, (len(rows), len(rows)), self.domain)

    def identity(self, n: int) -> DomainMatrix:
        return self.matrix([[self.one if r == c else self.zero for c in range(n)] for r in range(n)])


@dataclass
class RatFunMat:
    """Square matrix over 𝔽_p(x) written as numerators over one common denominator."""
    fx: FpX
    numerators: DomainMatrix
    denominator: PolyElement

    @property
    def dim(self) -> int:
        return self.numerators.shape[0]

    def reduced(self) -> 'RatFunMat':
        """Cancel the gcd of the denominator and all numerators; monic denominator."""
        g = self.denominator
        for entry in self.numerators.to_list_flat():
            g = g.gcd(entry)
        denominator = self.denominator.exquo(g)
        lead = denominator.LC
        numerators = self.numerators.applyfunc(lambda f: f.exquo(g).quo_ground(lead))
        return RatFunMat(self.fx, numerators, denominator.monic())

    def numerator(self, i: int, j: int) -> List[int]:
        return self.fx.coeffs(self.numerators.to_list()[i][j])

    @property
    def denominator_coeffs(self) -> List[int]:
        return self.fx.coeffs(self.denominator)

    def is_zero(self) -> bool:
        return self.numerators.is_zero_matrix


# --------------------------------------------------------------------------
# Katz recursion (x side)
# --------------------------------------------------------------------------

def _reduce_operator(operator_coeffs: Sequence[IntPoly], fx: FpX) -> List[PolyElement]:
    coeffs = [fx.make(c.coeffs) for c in operator_coeffs]
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return coeffs


def _system_numerator(coeffs: List[PolyElement], fx: FpX) -> Tuple[DomainMatrix, PolyElement]:
    n = len(coeffs) - 1
    l = coeffs[-1]
    rows = [[fx.zero for _ in range(n)] for _ in range(n)]
    for i in range(n - 1):
        rows[i + 1][i] = l
    for i in range(n):
        rows[i][n - 1] = -coeffs[i]
    return fx.matrix(rows), l


def _katz_numerator(coeffs: List[PolyElement], fx: FpX) -> Tuple[DomainMatrix, PolyElement]:
    """(P_p, l) with A_p = P_p / l^p."""
    t = fx.t
    N, l = _system_numerator(coeffs, fx)
    dl = l.diff(t)
    P = N
    for i in range(1, fx.p):
        P = P.applyfunc(lambda f: l * f.diff(t) - dl * f * i) + N * P
    return P, l


def katz_p_curvature(operator: OperatorX, p: int) -> RatFunMat:
    """The p-curvature matrix A_p of L over 𝔽_p(x), in lowest terms."""
    fx = FpX(p)
    coeffs = _reduce_operator(operator.coeffs, fx)
    if len(coeffs) != len(operator.coeffs):
        raise NotReducible(p)
    P, l = _katz_numerator(coeffs, fx)
    return RatFunMat(fx, P, l ** p).reduced()


def _xi_from_numerator(fx: FpX, P: DomainMatrix, c: PolyElement) -> List[PolyElement]:
    """
    c·det(Y - P/c) as a list over ascending Y-degree; raises MembershipError if
    a division by a power of c is inexact.

    With det(Z - P) = Σ e_i Z^(n-i), the Y^(n-i) coefficient is e_i / c^(i-1).
    """
    n = P.shape[0]
    chi = P.charpoly()
    out = [fx.zero] * (n + 1)
    out[n] = c
    power = fx.one
    for i in range(1, n + 1):
        e_i = chi[i]
        if i >= 2:
            power = power * c
            e_i, rem = e_i.div(power)
            if rem:
                raise MembershipError(f"characteristic polynomial is not integral modulo {fx.p}")
        out[n - i] = e_i
    return out


def _compress(fx: FpX, values: List[PolyElement]) -> List[PolyElement]:
    """x^p ↦ x; every exponent must be a multiple of p."""
    p = fx.p
    out = []
    for a in values:
        terms = {}
        for (i,), c in a.terms():
            if i % p:
                raise MembershipError(f"coefficient is not a polynomial in x^{p}")
            terms[(i // p,)] = c
        out.append(fx.ring.from_dict(terms))
    return out


def _xi_internal(coeffs: List[PolyElement], fx: FpX) -> List[PolyElement]:
    P, l = _katz_numerator(coeffs, fx)
    return _compress(fx, _xi_from_numerator(fx, P, l ** fx.p))


def _to_bivar(fx: FpX, values: List[PolyElement]) -> BivarPoly:
    return BivarPoly.from_coeffs(fx.p, (IntPoly.from_coeffs(fx.coeffs(a)) for a in values))


def xi_x(operator: OperatorX, p: int) -> BivarPoly:
    """Ξ(L) = l^p·χ(A_p(L)) with x^p written as x and ∂^p as Y."""
    fx = FpX(p)
    coeffs = _reduce_operator(operator.coeffs, fx)
    if len(coeffs) != len(operator.coeffs):
        raise NotReducible(p)
    return _to_bivar(fx, _xi_internal(coeffs, fx))


def oracle_record(operator: OperatorX, p: int, shift: int = 0, small: bool = False) -> CharPolyRecord:
    """Per-prime record computed only from the Katz side."""
    fx = FpX(p)
    coeffs = _reduce_operator(operator.coeffs, fx)
    if len(coeffs) != len(operator.coeffs):
        raise NotReducible(p)
    xi = _xi_internal(coeffs, fx)
    l = coeffs[-1]
    quotients = []
    for a in xi:
        q, r = a.div(l)
        if r:
            logger.debug("oracle p=%d: division by the leading coefficient is inexact", p)
            return CharPolyRecord.create_excluded(p, ExclusionReason.DIVISION_INEXACT,
                                                  xi=_to_bivar(fx, xi), shift=shift)
        quotients.append(q)
    return CharPolyRecord.create(p, _to_bivar(fx, quotients), shift=shift, small=small)


# --------------------------------------------------------------------------
# θ side
# --------------------------------------------------------------------------

def _u(fx: FpX) -> PolyElement:
    return fx.t ** fx.p - fx.t


def _u_digits(fx: FpX, a: PolyElement) -> List[int]:
    """Digits of a in base u = θ^p - θ; raises MembershipError if a ∉ 𝔽_p[u]."""
    u = _u(fx)
    digits = []
    while a:
        a, r = a.div(u)
        if r and r.degree() > 0:
            raise MembershipError(f"value is not a polynomial in θ^{fx.p}-θ")
        digits.append(fx.coeffs(r)[0] if r else 0)
    return digits


def _theta_xi(L_theta: OperatorTheta, fx: FpX) -> List[PolyElement]:
    coeffs = _reduce_operator(L_theta.coeffs, fx)
    if len(coeffs) != len(L_theta.coeffs):
        raise NotReducible(fx.p)
    N, l = _system_numerator(coeffs, fx)
    P = fx.identity(len(coeffs) - 1)
    c = fx.one
    for i in range(fx.p):
        P = P * N.applyfunc(lambda f: fx.shift_arg(f, i))
        c = c * fx.shift_arg(l, i)
    return _xi_from_numerator(fx, P, c)


def theta_product_oracle(L_theta: OperatorTheta, p: int) -> List[IntPoly]:
    """
    Ξ_θ of the operator whose ∂^i coefficient is L_theta.coeffs[i].

    Computes B(θ)B(θ+1)⋯B(θ+p-1) untruncated over 𝔽_p[θ], its characteristic
    polynomial and the (Π l(θ+i)) scaling, and checks every coefficient lies
    in 𝔽_p[θ^p-θ].
    """
    fx = FpX(p)
    values = _theta_xi(L_theta, fx)
    for a in values:
        _u_digits(fx, a)
    return [IntPoly.from_coeffs(fx.coeffs(a)) for a in values]


def reverse_iso_exact(Q: Sequence[IntPoly], p: int, k: int) -> BivarPoly:
    """u^j Y^i ↦ x^j Y^(i+j) on untruncated data, then division by Y^k."""
    fx = FpX(p)
    terms: Dict[int, Dict[int, int]] = {}
    for i, q in enumerate(Q):
        for j, digit in enumerate(_u_digits(fx, fx.make(q.coeffs))):
            if digit:
                terms.setdefault(i + j, {})[j] = digit
    for y in range(k):
        if terms.get(y):
            raise NonzeroLowYCoefficients(f"Y^{y} survives the division by Y^{k} modulo {p}")
    top = max(terms, default=k - 1)
    rows = []
    for y in range(k, top + 1):
        row = terms.get(y, {})
        rows.append([row.get(j, 0) for j in range(max(row, default=-1) + 1)])
    return BivarPoly.from_ints(p, rows)


def diagram_check(operator: OperatorX, p: int) -> bool:
    """Ξ_θ(φ(L)·∂^k) = φ_p(Ξ_x(L))·Y^k, with φ_p(x^(pj) Y^i) = (θ^p-θ)^j Y^(i-j)."""
    fx = FpX(p)
    L_theta = phi(operator)
    theta_side = _theta_xi(L_theta, fx)
    coeffs = _reduce_operator(operator.coeffs, fx)
    if len(coeffs) != len(operator.coeffs):
        raise NotReducible(p)
    x_side = _xi_internal(coeffs, fx)
    u = _u(fx)
    mapped: Dict[int, PolyElement] = {}
    for i, a in enumerate(x_side):
        for j, digit in enumerate(fx.coeffs(a)):
            if digit:
                target = i - j + L_theta.k
                if target < 0:
                    return False
                mapped[target] = mapped.get(target, fx.zero) + u ** j * digit
    top = max(len(theta_side) - 1, max(mapped, default=0))
    return all(
        mapped.get(i, fx.zero) == (theta_side[i] if i < len(theta_side) else fx.zero)
        for i in range(top + 1)
    )


# --------------------------------------------------------------------------
# Multiplicativity
# --------------------------------------------------------------------------

def _leibniz_mod_p(left: List[PolyElement], right: List[PolyElement], fx: FpX) -> List[PolyElement]:
    m1, m2 = len(left) - 1, len(right) - 1
    out = [fx.zero] * (m1 + m2 + 1)
    for j, g in enumerate(right):
        derivs = [g]
        for _ in range(m1):
            derivs.append(derivs[-1].diff(fx.t))
        for i, f in enumerate(left):
            if not f:
                continue
            for k in range(i + 1):
                if not derivs[k]:
                    break
                out[i + j - k] = out[i + j - k] + f * derivs[k] * comb(i, k)
    return out


def _bivar_mul(fx: FpX, a: List[PolyElement], b: List[PolyElement]) -> List[PolyElement]:
    out = [fx.zero] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] = out[i + j] + ai * bj
    return out


def xi_multiplicativity_check(left: OperatorX, right: OperatorX, p: int) -> bool:
    """Ξ(L1·L2) == Ξ(L1)·Ξ(L2) over 𝔽_p."""
    fx = FpX(p)
    a = _reduce_operator(left.coeffs, fx)
    b = _reduce_operator(right.coeffs, fx)
    if len(a) != len(left.coeffs) or len(b) != len(right.coeffs):
        raise NotReducible(p)
    lhs = _xi_internal(_leibniz_mod_p(a, b, fx), fx)
    rhs = _bivar_mul(fx, _xi_internal(a, fx), _xi_internal(b, fx))
    return len(lhs) == len(rhs) and all(x == y for x, y in zip(lhs, rhs))
