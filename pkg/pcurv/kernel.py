"""
Exact arithmetic substrate: integers, dense univariate polynomials, truncated
polynomials and square matrices over (ℤ or ℤ/m)[θ]/θ^e.

Scalars, IntPoly and TruncPoly use Python ints. Matrix stacks hold gmpy2
mpz entries. CPython's int product stops at Karatsuba (exponent log2 3 ≈ 1.58),
so a product tree on Python ints grows about 3x per doubling of N once its top
nodes pass a few thousand bits. GMP goes on from Karatsuba through Toom-Cook to
FFT multiplication (crossover at a few thousand limbs, some 10^5 bits, on
common 64-bit builds) and divides in a constant number of multiplications, so
both the T tree and the remainder descent stay quasi-linear.

Polynomial products above KRONECKER_THRESHOLD coefficients are packed into
single integers (Kronecker substitution) so they inherit the same behaviour.
"""

import logging
import operator
import re
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from gmpy2 import invert, mpz

from pcurv.errors import ContractError, NotInvertible, StructuralError

logger = logging.getLogger(__name__)

KRONECKER_THRESHOLD = 16

MPZ = type(mpz(0))

# object stacks to mpz, leaving existing mpz entries untouched
_as_mpz = np.frompyfunc(lambda v: v if type(v) is MPZ else mpz(int(v)), 1, 1)

_DECIMAL = re.compile(r"-?[0-9]+")


def int_to_json(value: int) -> str:
    """Serialize an integer as a decimal string."""
    return str(int(value))


def int_from_json(text: Union[str, int]) -> int:
    """Parse a decimal string (an optional leading "-" is allowed)."""
    if isinstance(text, bool):
        raise ValueError("booleans are not integers")
    if isinstance(text, int):
        return text
    if not isinstance(text, str) or not _DECIMAL.fullmatch(text.strip()):
        raise ValueError(f"not a decimal integer: {text!r}")
    return int(text.strip())


# --------------------------------------------------------------------------
# Kronecker substitution
# --------------------------------------------------------------------------

def _slot_width(a: Sequence[int], b: Sequence[int]) -> int:
    bits_a = max((abs(c).bit_length() for c in a), default=0)
    bits_b = max((abs(c).bit_length() for c in b), default=0)
    terms = min(len(a), len(b))
    return bits_a + bits_b + terms.bit_length() + 2


def _pack(coeffs: Sequence[int], slot: int) -> int:
    value = 0
    for c in reversed(coeffs):
        value = (value << slot) + c
    return value


def _unpack(value: int, slot: int, count: int) -> List[int]:
    mask = (1 << slot) - 1
    half = 1 << (slot - 1)
    out = []
    for _ in range(count):
        digit = value & mask
        if digit >= half:
            digit -= 1 << slot
        out.append(digit)
        value = (value - digit) >> slot
    return out


def kronecker_product(a: Sequence[int], b: Sequence[int], count: int) -> List[int]:
    """First `count` coefficients of a·b through one big-integer product."""
    if not a or not b:
        return [0] * count
    slot = _slot_width(a, b)
    return _unpack(_pack(a, slot) * _pack(b, slot), slot, count)


def _schoolbook_product(a: Sequence[int], b: Sequence[int], count: int) -> List[int]:
    out = [0] * count
    for i, ai in enumerate(a):
        if not ai or i >= count:
            continue
        for j in range(min(len(b), count - i)):
            out[i + j] += ai * b[j]
    return out


def _product(a: Sequence[int], b: Sequence[int], count: int) -> List[int]:
    if min(len(a), len(b)) > KRONECKER_THRESHOLD:
        return kronecker_product(a, b, count)
    return _schoolbook_product(a, b, count)


# --------------------------------------------------------------------------
# IntPoly
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class IntPoly:
    """Dense polynomial with integer coefficients, index = degree."""
    coeffs: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.coeffs and self.coeffs[-1] == 0:
            raise StructuralError("IntPoly must not end with a zero coefficient")

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int]) -> 'IntPoly':
        values = [int(c) for c in coeffs]
        while values and values[-1] == 0:
            values.pop()
        return cls(tuple(values))

    @classmethod
    def constant(cls, c: int) -> 'IntPoly':
        return cls.from_coeffs((c,))

    @classmethod
    def monomial(cls, c: int, n: int) -> 'IntPoly':
        return cls.from_coeffs([0] * n + [c])

    @property
    def degree(self) -> int:
        """Degree, with -1 standing for the zero polynomial."""
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def leading(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    def coefficient(self, i: int) -> int:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else 0

    def __add__(self, other: 'IntPoly') -> 'IntPoly':
        n = max(len(self.coeffs), len(other.coeffs))
        return IntPoly.from_coeffs(self.coefficient(i) + other.coefficient(i) for i in range(n))

    def __neg__(self) -> 'IntPoly':
        return IntPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: 'IntPoly') -> 'IntPoly':
        return self + (-other)

    def __mul__(self, other: Union['IntPoly', int]) -> 'IntPoly':
        if isinstance(other, int):
            return IntPoly.from_coeffs(c * other for c in self.coeffs) if other else IntPoly()
        if self.is_zero or other.is_zero:
            return IntPoly()
        count = len(self.coeffs) + len(other.coeffs) - 1
        return IntPoly.from_coeffs(_product(self.coeffs, other.coeffs, count))

    __rmul__ = __mul__

    def __call__(self, a: int) -> int:
        value = 0
        for c in reversed(self.coeffs):
            value = value * a + c
        return value

    def derivative(self) -> 'IntPoly':
        return IntPoly.from_coeffs(i * c for i, c in enumerate(self.coeffs) if i)

    def taylor_shift(self, a: int) -> 'IntPoly':
        """Q(t + a), coefficient j being Σ_{i≥j} C(i, j) q_i a^(i-j)."""
        if a == 0 or self.degree < 1:
            return self
        n = len(self.coeffs)
        powers = [1] * n
        for i in range(1, n):
            powers[i] = powers[i - 1] * a
        return IntPoly.from_coeffs(
            sum(comb(i, j) * self.coeffs[i] * powers[i - j] for i in range(j, n))
            for j in range(n)
        )

    def reduce(self, p: int) -> 'IntPoly':
        return IntPoly.from_coeffs(c % p for c in self.coeffs)

    def divmod_mod(self, divisor: 'IntPoly', p: int) -> Tuple['IntPoly', 'IntPoly']:
        """Euclidean division over 𝔽_p."""
        divisor = divisor.reduce(p)
        if divisor.is_zero:
            raise ZeroDivisionError("division by the zero polynomial")
        inv = scalar_inv_mod(divisor.leading, Modulus(p))
        rem = [c % p for c in self.coeffs]
        dd = divisor.degree
        quot = [0] * max(len(rem) - dd, 0)
        for shift in range(len(rem) - 1 - dd, -1, -1):
            c = rem[shift + dd] * inv % p
            if c:
                quot[shift] = c
                for i, dc in enumerate(divisor.coeffs):
                    rem[shift + i] = (rem[shift + i] - c * dc) % p
        return IntPoly.from_coeffs(quot), IntPoly.from_coeffs(rem[:dd] if dd > 0 else [])

    def to_json(self) -> List[str]:
        return [int_to_json(c) for c in self.coeffs]

    @classmethod
    def from_json(cls, data: Sequence[Union[str, int]]) -> 'IntPoly':
        return cls.from_coeffs(int_from_json(c) for c in data)


# --------------------------------------------------------------------------
# Moduli and truncated polynomials
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Modulus:
    """A prime p or a product of primes S_{i,j}."""
    value: Union[int, MPZ]

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, MPZ)) or self.value < 2:
            raise ContractError(f"modulus must be an integer >= 2, got {self.value!r}")


def _modulus_value(modulus: Optional[Modulus]) -> Optional[int]:
    return int(modulus.value) if modulus is not None else None


def scalar_inv_mod(c: int, p: Modulus) -> int:
    """c⁻¹ mod p, raising NotInvertible when gcd(c, p) ≠ 1."""
    try:
        return int(invert(c, p.value))
    except ZeroDivisionError:
        raise NotInvertible(c, p.value) from None


@dataclass(frozen=True)
class TruncPoly:
    """Element of (ℤ or ℤ/m)[θ]/θ^e, stored with exactly e coefficients."""
    e: int
    coeffs: Tuple[int, ...]
    modulus: Optional[Modulus] = None

    def __post_init__(self):
        if self.e < 1:
            raise StructuralError("truncation order must be at least 1")
        if len(self.coeffs) > self.e:
            raise StructuralError(f"{len(self.coeffs)} coefficients exceed truncation order {self.e}")
        m = _modulus_value(self.modulus)
        if m is not None and any(not 0 <= c < m for c in self.coeffs):
            raise StructuralError("coefficients must be reduced into [0, modulus)")
        if len(self.coeffs) < self.e:
            object.__setattr__(self, 'coeffs', tuple(self.coeffs) + (0,) * (self.e - len(self.coeffs)))

    @classmethod
    def from_coeffs(cls, coeffs: Iterable[int], e: int, modulus: Optional[Modulus] = None) -> 'TruncPoly':
        values = [int(c) for c in coeffs][:e]
        m = _modulus_value(modulus)
        if m is not None:
            values = [c % m for c in values]
        return cls(e, tuple(values), modulus)

    @classmethod
    def one(cls, e: int, modulus: Optional[Modulus] = None) -> 'TruncPoly':
        return cls(e, (1,), modulus)

    @property
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def _check(self, other: 'TruncPoly'):
        if self.e != other.e or self.modulus != other.modulus:
            raise StructuralError("truncated polynomials disagree on truncation order or modulus")

    def __add__(self, other: 'TruncPoly') -> 'TruncPoly':
        self._check(other)
        return TruncPoly.from_coeffs((a + b for a, b in zip(self.coeffs, other.coeffs)), self.e, self.modulus)

    def __neg__(self) -> 'TruncPoly':
        return TruncPoly.from_coeffs((-c for c in self.coeffs), self.e, self.modulus)

    def __sub__(self, other: 'TruncPoly') -> 'TruncPoly':
        return self + (-other)

    def __mul__(self, other: Union['TruncPoly', int]) -> 'TruncPoly':
        if isinstance(other, int):
            return TruncPoly.from_coeffs((c * other for c in self.coeffs), self.e, self.modulus)
        return poly_mul_trunc(self, other)

    def as_intpoly(self) -> IntPoly:
        return IntPoly.from_coeffs(self.coeffs)


def poly_mul_trunc(a: TruncPoly, b: TruncPoly) -> TruncPoly:
    """a·b truncated to θ^e, reduced when a modulus is attached."""
    a._check(b)
    return TruncPoly.from_coeffs(_product(a.coeffs, b.coeffs, a.e), a.e, a.modulus)


# --------------------------------------------------------------------------
# Stacked coefficient arrays
# --------------------------------------------------------------------------

def _nonzero(x) -> bool:
    return bool(np.any(x))


def truncated_convolution(a, b, product: Callable = np.matmul, modulus: Optional[int] = None) -> np.ndarray:
    """
    Truncated θ-convolution of two coefficient stacks.

    Args:
        a, b: object arrays whose first axis indexes powers of θ (same length e)
        product: bilinear map applied to the coefficient slices
        modulus: optional integer every output entry is reduced by

    Returns:
        Object array c with c[t] = Σ_{u+v=t} product(a[u], b[v]) for t < e.
    """
    e = len(a)
    a_support = [u for u in range(e) if _nonzero(a[u])]
    b_support = set(v for v in range(e) if _nonzero(b[v]))
    first = product(a[0], b[0])
    out = np.empty((e,) + np.shape(first), dtype=object)
    out[...] = 0
    out[0] = first
    for t in range(1, e):
        acc = None
        for u in a_support:
            if u > t:
                break
            if t - u in b_support:
                term = product(a[u], b[t - u])
                acc = term if acc is None else acc + term
        if acc is not None:
            out[t] = acc
    if modulus is not None:
        out = out % modulus
    return out


def scalar_stack_product(a, b, modulus: Optional[int] = None) -> np.ndarray:
    """Truncated product of two (e,) scalar stacks."""
    return truncated_convolution(a, b, operator.mul, modulus)


# --------------------------------------------------------------------------
# TruncPolyMat
# --------------------------------------------------------------------------

class TruncPolyMat:
    """
    Square s×s matrix over (ℤ or ℤ/m)[θ]/θ^e.

    The entries live in an immutable numpy object array of shape (e, s, s) of
    mpz values: data[t, i, j] is the coefficient of θ^t in entry (i, j).
    """

    __slots__ = ("data", "modulus", "is_identity")

    def __init__(self, data: np.ndarray, modulus: Optional[Modulus] = None, is_identity: bool = False):
        data = np.array(data, dtype=object)
        if data.ndim != 3 or data.shape[1] != data.shape[2] or data.shape[0] < 1:
            raise StructuralError(f"expected an (e, s, s) coefficient stack, got shape {data.shape}")
        data = _as_mpz(data)
        if modulus is not None:
            data = data % modulus.value
        data.flags.writeable = False
        self.data = data
        self.modulus = modulus
        self.is_identity = is_identity

    @property
    def e(self) -> int:
        return self.data.shape[0]

    @property
    def s(self) -> int:
        return self.data.shape[1]

    @classmethod
    def identity(cls, s: int, e: int, modulus: Optional[Modulus] = None) -> 'TruncPolyMat':
        data = np.zeros((e, s, s), dtype=object)
        for i in range(s):
            data[0, i, i] = 1
        return cls(data, modulus, is_identity=True)

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence[TruncPoly]]) -> 'TruncPolyMat':
        s = len(entries)
        if s == 0 or any(len(row) != s for row in entries):
            raise StructuralError("matrix must be square and nonempty")
        e, modulus = entries[0][0].e, entries[0][0].modulus
        data = np.zeros((e, s, s), dtype=object)
        for i, row in enumerate(entries):
            for j, entry in enumerate(row):
                if entry.e != e or entry.modulus != modulus:
                    raise StructuralError("entries disagree on truncation order or modulus")
                for t, c in enumerate(entry.coeffs):
                    data[t, i, j] = c
        return cls(data, modulus)

    @classmethod
    def from_ints(cls, rows: Sequence[Sequence[Sequence[int]]], e: int,
                  modulus: Optional[Modulus] = None) -> 'TruncPolyMat':
        """Build from nested lists where rows[i][j] lists the θ-coefficients of entry (i, j)."""
        return cls.from_entries([[TruncPoly.from_coeffs(c, e, modulus) for c in row] for row in rows])

    def entry(self, i: int, j: int) -> TruncPoly:
        return TruncPoly(self.e, tuple(int(c) for c in self.data[:, i, j]), self.modulus)

    def scale(self, c: int) -> 'TruncPolyMat':
        return TruncPolyMat(self.data * c, self.modulus)

    def max_bit_size(self) -> int:
        return max((abs(int(v)).bit_length() for v in self.data.flat), default=0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TruncPolyMat):
            return NotImplemented
        return (self.modulus == other.modulus and self.data.shape == other.data.shape
                and bool(np.array_equal(self.data, other.data)))

    def __hash__(self):
        return hash((self.modulus, self.data.shape, tuple(self.data.flat)))

    def __repr__(self) -> str:
        m = self.modulus.value if self.modulus else None
        return f"TruncPolyMat(s={self.s}, e={self.e}, modulus={m})"


def _check_compatible(a: TruncPolyMat, b: TruncPolyMat):
    if a.s != b.s:
        raise StructuralError(f"dimension mismatch: {a.s} vs {b.s}")
    if a.e != b.e:
        raise StructuralError(f"truncation order mismatch: {a.e} vs {b.e}")
    if a.modulus != b.modulus:
        raise StructuralError("modulus mismatch")


def _kronecker_matmul(a: TruncPolyMat, b: TruncPolyMat) -> np.ndarray:
    e, s = a.e, a.s
    bits = max(a.max_bit_size(), 1) + max(b.max_bit_size(), 1)
    slot = bits + (e * s).bit_length() + 2

    def pack(data: np.ndarray) -> np.ndarray:
        packed = np.empty((s, s), dtype=object)
        for i in range(s):
            for j in range(s):
                packed[i, j] = _pack(data[:, i, j].tolist(), slot)
        return packed

    prod = np.matmul(pack(a.data), pack(b.data))
    out = np.zeros((e, s, s), dtype=object)
    for i in range(s):
        for j in range(s):
            out[:, i, j] = _unpack(prod[i, j], slot, e)
    return out


def mat_mul(a: TruncPolyMat, b: TruncPolyMat) -> TruncPolyMat:
    """Exact product in the truncated (and possibly reduced) matrix ring."""
    _check_compatible(a, b)
    if a.is_identity:
        return b
    if b.is_identity:
        return a
    if a.e > KRONECKER_THRESHOLD:
        data = _kronecker_matmul(a, b)
    else:
        data = truncated_convolution(a.data, b.data, np.matmul)
    return TruncPolyMat(data, a.modulus)


def mat_reduce(a: TruncPolyMat, m: Modulus) -> TruncPolyMat:
    """Reduce every coefficient into [0, m); m must divide the current modulus."""
    if a.modulus is not None and a.modulus.value % m.value:
        raise ContractError(f"{m.value} does not divide the modulus {a.modulus.value}")
    if a.modulus == m:
        return a
    return TruncPolyMat(a.data, m, is_identity=a.is_identity)
