"""
Differential operators in x and in the Euler operator θ = x∂.

OperatorX holds Σ f_j(x)∂^j with integer polynomial coefficients written to the
left of ∂. OperatorTheta holds a Laurent operator Σ c_t(θ)∂^t, t ∈ [-k, m],
in which ∂^i g(θ) = g(θ+i)∂^i. The map phi sends x ↦ θ∂⁻¹ and ∂ ↦ ∂.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from math import comb, perm
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from pcurv.errors import NormalizationRequired, OperatorFormatError, StructuralError
from pcurv.kernel import IntPoly, Modulus, TruncPolyMat

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OperatorX:
    """Differential operator Σ f_j(x)∂^j; coeffs[j] is f_j."""
    coeffs: Tuple[IntPoly, ...]

    def __post_init__(self):
        if not self.coeffs or self.coeffs[-1].is_zero:
            raise StructuralError("operator must be nonzero with a nonzero leading coefficient")

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[Iterable[int]]) -> 'OperatorX':
        """coeffs[j][i] is the coefficient of x^i in f_j."""
        polys = [c if isinstance(c, IntPoly) else IntPoly.from_coeffs(c) for c in coeffs]
        while polys and polys[-1].is_zero:
            polys.pop()
        return cls(tuple(polys))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def degree(self) -> int:
        """Largest x-degree among the coefficients."""
        return max(c.degree for c in self.coeffs)

    @property
    def leading(self) -> IntPoly:
        return self.coeffs[-1]

    def __mul__(self, other: 'OperatorX') -> 'OperatorX':
        return op_mul(self, other)

    def to_json(self) -> Dict[str, Any]:
        return {"variable": "x", "coefficients": [c.to_json() for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> 'OperatorX':
        if not isinstance(data, Mapping):
            raise OperatorFormatError("operator must be a JSON object")
        if data.get("variable", "x") != "x":
            raise OperatorFormatError(f"unsupported variable {data.get('variable')!r}")
        rows = data.get("coefficients")
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise OperatorFormatError("'coefficients' must be a list of lists")
        try:
            operator = cls.from_coeffs(IntPoly.from_json(r) for r in rows)
        except ValueError as e:
            raise OperatorFormatError(str(e)) from e
        except StructuralError as e:
            raise OperatorFormatError("the operator is zero") from e
        if operator.order < 1:
            raise OperatorFormatError("the operator must have order at least 1")
        return operator


def _derivatives(g: IntPoly, n: int) -> List[IntPoly]:
    out = [g]
    for _ in range(n):
        out.append(out[-1].derivative())
    return out


def op_mul(left: OperatorX, right: OperatorX) -> OperatorX:
    """Product left·right using ∂^i g = Σ_k C(i, k) g^(k) ∂^(i-k)."""
    m1, m2 = left.order, right.order
    out = [IntPoly()] * (m1 + m2 + 1)
    for j, g in enumerate(right.coeffs):
        derivs = _derivatives(g, m1)
        for i, f in enumerate(left.coeffs):
            if f.is_zero:
                continue
            for k in range(i + 1):
                if derivs[k].is_zero:
                    break
                out[i + j - k] = out[i + j - k] + f * derivs[k] * comb(i, k)
    return OperatorX.from_coeffs(out)


def shift(operator: OperatorX, a: int) -> OperatorX:
    """Replace every coefficient f_j(x) by f_j(x + a)."""
    return OperatorX(tuple(c.taylor_shift(a) for c in operator.coeffs))


def pick_shift(l_x: IntPoly) -> int:
    """First b in 0, 1, -1, 2, -2, ... with l_x(b) ≠ 0."""
    if l_x.is_zero:
        raise StructuralError("cannot pick a shift for the zero polynomial")
    b = 0
    while l_x(b) == 0:
        b = -b + 1 if b <= 0 else -b
    return b


def transpose_xd(operator: OperatorX) -> OperatorX:
    """Image under x ↦ -∂, ∂ ↦ x, rewritten in the Σ f_j(x)∂^j normal form."""
    terms: Dict[int, Dict[int, int]] = {}
    for j, f in enumerate(operator.coeffs):
        for i, a in enumerate(f.coeffs):
            if not a:
                continue
            # x^i ∂^j ↦ (-1)^i ∂^i x^j = (-1)^i Σ_k C(i, k) j!/(j-k)! x^(j-k) ∂^(i-k)
            sign = -1 if i % 2 else 1
            for k in range(min(i, j) + 1):
                c = sign * a * comb(i, k) * perm(j, k)
                row = terms.setdefault(i - k, {})
                row[j - k] = row.get(j - k, 0) + c
    order = max(terms) if terms else 0
    rows = []
    for t in range(order + 1):
        row = terms.get(t, {})
        width = max(row, default=-1) + 1
        rows.append([row.get(i, 0) for i in range(width)])
    return OperatorX.from_coeffs(rows)


# --------------------------------------------------------------------------
# θ-side
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorTheta:
    """
    Laurent operator Σ c_t(θ)∂^t for t in [-k, m].

    coeffs[t + k] is c_t. k is the smallest nonnegative depth that holds every
    nonzero term, so coeffs[i] is also the coefficient of ∂^i in φ(L)·∂^k.
    """
    k: int
    coeffs: Tuple[IntPoly, ...]

    def __post_init__(self):
        if self.k < 0:
            raise StructuralError("Laurent depth must be nonnegative")
        if not self.coeffs or self.coeffs[-1].is_zero:
            raise StructuralError("top coefficient must be nonzero")

    @classmethod
    def from_terms(cls, terms: Mapping[int, IntPoly]) -> 'OperatorTheta':
        """Canonical operator from a mapping ∂-exponent ↦ θ-polynomial."""
        support = [t for t, c in terms.items() if not c.is_zero]
        if not support:
            raise StructuralError("zero Laurent operator")
        low, top = min(support), max(support)
        k = max(0, -low)
        return cls(k, tuple(terms.get(t, IntPoly()) for t in range(-k, top + 1)))

    def coefficient(self, t: int) -> IntPoly:
        i = t + self.k
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else IntPoly()

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1 - self.k

    @property
    def size(self) -> int:
        """Dimension s = m + k of the companion matrix."""
        return len(self.coeffs) - 1

    @property
    def theta_degree(self) -> int:
        return max(c.degree for c in self.coeffs)

    @property
    def leading(self) -> IntPoly:
        return self.coeffs[-1]

    @property
    def leading_constant(self) -> int:
        if self.leading.degree != 0:
            raise NormalizationRequired(
                f"leading coefficient has θ-degree {self.leading.degree}; shift the operator first")
        return self.leading.coeffs[0]

    def __mul__(self, other: 'OperatorTheta') -> 'OperatorTheta':
        return theta_mul(self, other)


def theta_mul(left: OperatorTheta, right: OperatorTheta) -> OperatorTheta:
    """Laurent product using ∂^a g(θ) = g(θ+a)∂^a, negative a included."""
    terms: Dict[int, IntPoly] = {}
    for i, c in enumerate(left.coeffs):
        if c.is_zero:
            continue
        a = i - left.k
        for j, g in enumerate(right.coeffs):
            if g.is_zero:
                continue
            t = a + j - right.k
            terms[t] = terms.get(t, IntPoly()) + c * g.taylor_shift(a)
    return OperatorTheta.from_terms(terms)


def phi(operator: OperatorX) -> OperatorTheta:
    """φ(L) via φ(x^i ∂^j) = p_i(θ)∂^(j-i), p_i the falling factorial θ(θ-1)⋯(θ-i+1)."""
    falling = [IntPoly.constant(1)]
    for i in range(operator.degree):
        falling.append(falling[-1] * IntPoly.from_coeffs((-i, 1)))
    terms: Dict[int, IntPoly] = {}
    for j, f in enumerate(operator.coeffs):
        for i, a in enumerate(f.coeffs):
            if a:
                terms[j - i] = terms.get(j - i, IntPoly()) + falling[i] * a
    result = OperatorTheta.from_terms(terms)
    logger.debug("phi: order %d, depth %d, theta degree %d", result.order, result.k, result.theta_degree)
    return result


def theta_shift_arg(q: IntPoly, a: int) -> IntPoly:
    """Q(θ + a)."""
    return q.taylor_shift(a)


@dataclass(frozen=True)
class CompanionMat:
    """M(θ) = l_θ·B(L_θ); entries[i][j] is a θ-polynomial."""
    s: int
    entries: Tuple[Tuple[IntPoly, ...], ...]
    l_theta: int

    @property
    def theta_degree(self) -> int:
        return max(max(c.degree for c in row) for row in self.entries)

    @cached_property
    def _coefficient_stack(self) -> np.ndarray:
        depth = max(self.theta_degree + 1, 1)
        stack = np.zeros((depth, self.s, self.s), dtype=object)
        for i, row in enumerate(self.entries):
            for j, q in enumerate(row):
                for t, c in enumerate(q.coeffs):
                    stack[t, i, j] = c
        return stack

    def at(self, k: int, e: int, modulus: Optional[Modulus] = None) -> TruncPolyMat:
        """M(θ + k) truncated to θ^e."""
        stack = self._coefficient_stack
        depth = stack.shape[0]
        data = np.zeros((e, self.s, self.s), dtype=object)
        if k == 0:
            rows = min(e, depth)
            data[:rows] = stack[:rows]
        else:
            powers = [1] * depth
            for i in range(1, depth):
                powers[i] = powers[i - 1] * k
            for j in range(min(e, depth)):
                acc = data[j]
                for i in range(j, depth):
                    acc = acc + stack[i] * (comb(i, j) * powers[i - j])
                data[j] = acc
        return TruncPolyMat(data, modulus)


def companion(operator: OperatorTheta) -> CompanionMat:
    """Scaled companion matrix: subdiagonal l_θ, last column -c_i(θ)."""
    l_theta = operator.leading_constant
    s = operator.size
    if s < 1:
        raise StructuralError("companion matrix needs an operator of positive size")
    zero = IntPoly()
    rows: List[List[IntPoly]] = [[zero] * s for _ in range(s)]
    for i in range(s - 1):
        rows[i + 1][i] = IntPoly.constant(l_theta)
    for i in range(s):
        rows[i][s - 1] = -operator.coeffs[i]
    return CompanionMat(s, tuple(tuple(r) for r in rows), l_theta)
