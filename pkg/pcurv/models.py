"""
Data models and configuration classes for the p-curvature pipeline.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from pcurv.errors import ContractError, ExactDivisionFailed
from pcurv.kernel import IntPoly, int_from_json, int_to_json

MODES = ("tree", "oracle", "compare")
FORMATS = ("full", "compact")


class ExclusionReason(str, Enum):
    """Why a prime below N has no polynomial in the output."""
    DIVIDES_LEADING = "DIVIDES_LEADING"
    LE_DEGREE = "LE_DEGREE"
    DIVISION_INEXACT = "DIVISION_INEXACT"
    CONSISTENCY_FAILURE = "CONSISTENCY_FAILURE"


@dataclass
class RunConfig:
    """Settings of one CLI run; flags map onto fields one to one."""
    input: Optional[str] = None
    N: int = 100
    mode: str = "tree"
    include_small_primes: bool = False
    jobs: int = 1
    output: Optional[str] = None
    stats: bool = False
    format: str = "full"
    tree_sizes: Optional[str] = None
    transpose: bool = False
    bench: List[int] = None
    log_level: str = "WARNING"

    def __post_init__(self):
        if self.bench is None:
            self.bench = []
        if isinstance(self.N, bool) or not isinstance(self.N, int) or self.N < 2:
            raise ContractError(f"N must be an integer >= 2, got {self.N!r}")
        if self.jobs < 1:
            raise ContractError(f"jobs must be >= 1, got {self.jobs}")
        if self.mode not in MODES:
            raise ContractError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.format not in FORMATS:
            raise ContractError(f"format must be one of {', '.join(FORMATS)}, got {self.format!r}")
        if any(b < 2 for b in self.bench) or list(self.bench) != sorted(self.bench):
            raise ContractError("bench bounds must be ascending integers >= 2")


@dataclass
class PrimePlan:
    """Partition of the primes below N into admissible and excluded ones."""
    N: int
    admissible: List[int]
    excluded: List[Tuple[int, ExclusionReason]]
    small: FrozenSet[int] = frozenset()
    _admissible_set: FrozenSet[int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._admissible_set = frozenset(self.admissible)

    def is_admissible(self, k: int) -> bool:
        return k in self._admissible_set

    @property
    def all_primes(self) -> List[int]:
        return sorted(self.admissible + [p for p, _ in self.excluded])


@dataclass(frozen=True)
class BivarPoly:
    """
    Polynomial in 𝔽_p[x][Y]: coeffs[i] is the x-polynomial multiplying Y^i.

    Residues are kept in [0, p); trailing zero Y-coefficients are stripped.
    """
    p: int
    coeffs: Tuple[IntPoly, ...]

    @classmethod
    def from_coeffs(cls, p: int, coeffs: Iterable[IntPoly]) -> 'BivarPoly':
        values = [c.reduce(p) for c in coeffs]
        while values and values[-1].is_zero:
            values.pop()
        return cls(p, tuple(values))

    @classmethod
    def from_ints(cls, p: int, rows: Sequence[Sequence[int]]) -> 'BivarPoly':
        """rows[i][j] is the coefficient of x^j Y^i."""
        return cls.from_coeffs(p, (IntPoly.from_coeffs(r) for r in rows))

    @property
    def degY(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> IntPoly:
        return self.coeffs[-1] if self.coeffs else IntPoly()

    def coefficient(self, i: int) -> IntPoly:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else IntPoly()

    def __mul__(self, other: 'BivarPoly') -> 'BivarPoly':
        if not self.coeffs or not other.coeffs:
            return BivarPoly(self.p, ())
        out = [IntPoly()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return BivarPoly.from_coeffs(self.p, out)

    def shift_x(self, a: int) -> 'BivarPoly':
        """Substitute x ← x + a in every coefficient."""
        return BivarPoly.from_coeffs(self.p, (c.taylor_shift(a) for c in self.coeffs))

    def scale(self, c: int) -> 'BivarPoly':
        return BivarPoly.from_coeffs(self.p, (q * c for q in self.coeffs))

    def divide_x(self, divisor: IntPoly) -> 'BivarPoly':
        """Exact coefficient-wise division by an x-polynomial over 𝔽_p."""
        out = []
        for c in self.coeffs:
            q, r = c.divmod_mod(divisor, self.p)
            if not r.is_zero:
                raise ExactDivisionFailed(self.p, xi=self)
            out.append(q)
        return BivarPoly.from_coeffs(self.p, out)

    def is_y_power(self, m: int) -> bool:
        """True when the polynomial is exactly Y^m."""
        return (self.degY == m and self.leading == IntPoly.constant(1)
                and all(c.is_zero for c in self.coeffs[:-1]))

    def to_json(self) -> List[List[str]]:
        return [c.to_json() for c in self.coeffs]

    @classmethod
    def from_json(cls, p: int, data: Sequence[Sequence[Any]]) -> 'BivarPoly':
        return cls.from_coeffs(p, (IntPoly.from_json(row) for row in data))


@dataclass
class CharPolyRecord:
    """Per-prime outcome: P_p with P_p(x^p, Y) = χ(A_p(L)), or an exclusion."""
    p: int
    m: int = 0
    coeffs: Optional[BivarPoly] = None
    nilpotent: bool = False
    shift: int = 0
    excluded: Optional[ExclusionReason] = None
    xi: Optional[BivarPoly] = None
    small: bool = False

    @classmethod
    def create(cls, p: int, polynomial: BivarPoly, shift: int, small: bool = False) -> 'CharPolyRecord':
        """Create a record for a successfully finalized prime."""
        m = polynomial.degY
        return cls(p=p, m=m, coeffs=polynomial, nilpotent=polynomial.is_y_power(m),
                   shift=shift, small=small)

    @classmethod
    def create_excluded(cls, p: int, reason: ExclusionReason, xi: Optional[BivarPoly] = None,
                        shift: int = 0) -> 'CharPolyRecord':
        return cls(p=p, shift=shift, excluded=reason, xi=xi)

    @property
    def is_excluded(self) -> bool:
        return self.excluded is not None

    def same_result(self, other: 'CharPolyRecord') -> bool:
        """Compare the mathematical content of two records; xi counts when the division was inexact."""
        if self.p != other.p or self.excluded != other.excluded:
            return False
        if self.excluded == ExclusionReason.DIVISION_INEXACT:
            return self.xi == other.xi
        return self.coeffs == other.coeffs and self.nilpotent == other.nilpotent

    def to_dict(self, fmt: str = "full") -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        if self.excluded is not None:
            data = {'p': self.p, 'excluded': self.excluded.value}
            if self.xi is not None:
                data['xi'] = self.xi.to_json()
            return data
        if fmt == "compact":
            return {'p': self.p, 'nilpotent': self.nilpotent}
        data = {
            'p': self.p,
            'm': self.m,
            'coeffs': self.coeffs.to_json(),
            'nilpotent': self.nilpotent,
            'shift': int_to_json(self.shift),
        }
        if self.small:
            data['small'] = True
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'CharPolyRecord':
        p = int(data['p'])
        if 'excluded' in data:
            xi = BivarPoly.from_json(p, data['xi']) if 'xi' in data else None
            return cls.create_excluded(p, ExclusionReason(data['excluded']), xi)
        if 'coeffs' not in data:
            return cls(p=p, nilpotent=bool(data['nilpotent']))
        polynomial = BivarPoly.from_json(p, data['coeffs'])
        return cls(p=p, m=int(data['m']), coeffs=polynomial, nilpotent=bool(data['nilpotent']),
                   shift=int_from_json(data.get('shift', '0')), small=bool(data.get('small', False)))


@dataclass
class PipelineResult:
    """Records of one run, ordered by p, plus timings and diagnostics."""
    records: List[CharPolyRecord]
    plan: PrimePlan
    shift: int
    timings: Dict[str, float] = field(default_factory=dict)
    tree_sizes: List[Tuple[int, int, int]] = field(default_factory=list)

    @property
    def consistency_failures(self) -> List[int]:
        return [r.p for r in self.records if r.excluded == ExclusionReason.CONSISTENCY_FAILURE]

    @property
    def nilpotent_primes(self) -> List[int]:
        return [r.p for r in self.records if not r.is_excluded and r.nilpotent]


@dataclass
class BenchRow:
    """Wall-clock measurements for one bound N."""
    N: int
    primes: int
    total: float
    t_tree: float
    w_tree: float
    postproc: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'N': self.N,
            'primes': self.primes,
            'total': round(self.total, 6),
            't_tree': round(self.t_tree, 6),
            'w_tree': round(self.w_tree, 6),
            'postproc': round(self.postproc, 6),
        }
