import pytest

from pcurv.conftest import make_random_operator
from pcurv.errors import MembershipError, NotReducible
from pcurv.kernel import IntPoly
from pcurv.models import BivarPoly, ExclusionReason
from pcurv.oracle import (FpX, RatFunMat, diagram_check, katz_p_curvature, oracle_record, reverse_iso_exact,
                          theta_product_oracle, xi_multiplicativity_check, xi_x)
from pcurv.ore import OperatorTheta, OperatorX, phi, pick_shift, shift
from pcurv.pipeline import prepare
from pcurv.postproc import charpoly_trunc, recover_Bp, xi_scale
from pcurv.sieve import plan_primes
from pcurv.tree import matrix_factorial

P = IntPoly.from_coeffs
D = OperatorX.from_coeffs([[0], [1]])
D_MINUS_1 = OperatorX.from_coeffs([[-1], [1]])
AIRY = OperatorX.from_coeffs([[0, -1], [0], [1]])


def normalized(operator):
    return shift(operator, pick_shift(operator.leading))


def leading_survives(operator, p):
    return any(c % p for c in operator.leading.coeffs)


# ---------------------------------------------------------------- F_p arithmetic

def test_fpx_arithmetic():
    fx = FpX(7)
    a, b = fx.make([1, 1]), fx.make([6, 1])
    assert fx.coeffs(a * b) == [6, 0, 1]
    q, r = fx.make([6, 0, 1]).div(a)
    assert q == b and not r
    assert fx.coeffs(fx.shift_arg(fx.make([0, 0, 1]), 1)) == [1, 2, 1]
    assert fx.coeffs((a * b).gcd(a * a)) == [1, 1]
    assert fx.coeffs(fx.make([3, 2, 5]).diff(fx.t)) == [2, 3]
    assert fx.make([7, 14]) == fx.zero and fx.coeffs(fx.zero) == []


def test_rational_matrix_is_reduced_to_lowest_terms():
    fx = FpX(5)
    x_plus_1 = fx.make([1, 1])
    numerators = fx.matrix([[x_plus_1 * 3, fx.zero], [fx.zero, x_plus_1 * fx.make([0, 1])]])
    A = RatFunMat(fx, numerators, x_plus_1 * x_plus_1 * 2).reduced()
    assert A.denominator_coeffs == [1, 1]
    assert A.numerator(0, 0) == [4] and A.numerator(1, 1) == [0, 3]
    assert A.numerator(0, 1) == [] and not A.is_zero()


# ---------------------------------------------------------------- Katz side

@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_katz_examples(p):
    assert katz_p_curvature(D, p).is_zero()
    assert xi_x(D, p) == BivarPoly.from_ints(p, [[], [1]])
    assert xi_x(D_MINUS_1, p) == BivarPoly.from_ints(p, [[-1], [1]])
    A = katz_p_curvature(D_MINUS_1, p)
    assert A.numerator(0, 0) == [1] and A.denominator_coeffs == [1]


@pytest.mark.parametrize("p", [3, 5, 7])
def test_algebraic_solution_gives_zero_p_curvature(p):
    x_d_minus_1 = OperatorX.from_coeffs([[-1], [0, 1]])
    assert katz_p_curvature(x_d_minus_1, p).is_zero()
    record = oracle_record(x_d_minus_1, p)
    assert record.nilpotent and record.coeffs == BivarPoly.from_ints(p, [[], [1]])


def test_katz_not_reducible():
    with pytest.raises(NotReducible):
        katz_p_curvature(OperatorX.from_coeffs([[-1], [5]]), 5)


def test_oracle_record_inexact_division():
    # (x² + 1)∂ - 1 at p = 3: A_3 = 2/(1 + x²)³, so Ξ = (1 + x²)Y + 1
    operator = OperatorX.from_coeffs([[-1], [1, 0, 1]])
    assert xi_x(operator, 3) == BivarPoly.from_ints(3, [[1], [1, 0, 1]])
    record = oracle_record(operator, 3)
    assert record.excluded == ExclusionReason.DIVISION_INEXACT
    assert record.xi == BivarPoly.from_ints(3, [[1], [1, 0, 1]])


# ---------------------------------------------------------------- θ side

@pytest.mark.parametrize("p", [3, 5, 7])
def test_theta_product_examples(p):
    d_minus_1 = OperatorTheta.from_terms({0: P([-1]), 1: P([1])})
    assert theta_product_oracle(d_minus_1, p) == [P([p - 1]), P([1])]
    d_minus_theta = OperatorTheta.from_terms({0: P([0, -1]), 1: P([1])})
    u = [0, -1] + [0] * (p - 2) + [1]
    assert theta_product_oracle(d_minus_theta, p)[0] == P([(-c) % p for c in u])


def test_reverse_iso_exact_identity():
    for p in (3, 5, 7):
        u = P([0, p - 1] + [0] * (p - 2) + [1])
        assert reverse_iso_exact([u], p, 0) == BivarPoly.from_ints(p, [[0], [0, 1]])


def test_membership_violation_is_reported():
    with pytest.raises(MembershipError):
        reverse_iso_exact([P([0, 1])], 5, 0)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_airy_dual_oracle_agreement(p):
    L_theta = phi(AIRY)
    assert L_theta.k == 1
    assert reverse_iso_exact(theta_product_oracle(L_theta, p), p, L_theta.k) == xi_x(AIRY, p)


def test_dual_oracle_agreement_random(rng):
    checked = 0
    for _ in range(15):
        operator = normalized(make_random_operator(rng, max_order=2, max_degree=2, bound=9))
        L_theta = phi(operator)
        for p in (3, 5, 7, 11):
            if L_theta.leading_constant % p == 0:
                continue
            theta_side = theta_product_oracle(L_theta, p)
            assert reverse_iso_exact(theta_side, p, L_theta.k) == xi_x(operator, p)
            checked += 1
    assert checked > 0


def test_theta_values_lie_in_theta_p_minus_theta_ring(rng):
    for _ in range(15):
        operator = normalized(make_random_operator(rng, max_order=3, max_degree=2, bound=9))
        L_theta = phi(operator)
        for p in (3, 5, 7, 11):
            if L_theta.leading_constant % p:
                theta_product_oracle(L_theta, p)


def test_pipeline_preimage_is_truncated_theta_xi(rng):
    p = 5
    for _ in range(10):
        prepared = prepare(make_random_operator(rng, max_order=2, max_degree=1, bound=9))
        if prepared.l_theta % p == 0:
            continue
        e = prepared.d + 1
        plan = plan_primes(p + 1, prepared.l_theta, prepared.d)
        product = matrix_factorial(prepared.M, p + 1, e, plan)[p]
        chi = xi_scale(charpoly_trunc(recover_Bp(product, prepared.l_theta, p)), prepared.l_theta, p)
        full = theta_product_oracle(prepared.L_theta, p)
        for mine, exact in zip(chi, full):
            assert list(mine.coeffs) == [exact.coefficient(t) for t in range(e)]


# ---------------------------------------------------------------- Ξ properties

@pytest.mark.parametrize("p", [3, 5, 7])
def test_multiplicativity_examples(p):
    assert xi_multiplicativity_check(D, D, p)
    assert xi_multiplicativity_check(D_MINUS_1, D, p)
    assert xi_x(D_MINUS_1 * D, p) == BivarPoly.from_ints(p, [[], [-1], [1]])


def test_multiplicativity_random_pairs(rng):
    pairs = 0
    while pairs < 20:
        left = make_random_operator(rng, max_order=2, max_degree=2, bound=9)
        right = make_random_operator(rng, max_order=2, max_degree=2, bound=9)
        p = int(rng.choice([3, 5, 7]))
        if not (leading_survives(left, p) and leading_survives(right, p)):
            continue
        assert xi_multiplicativity_check(left, right, p)
        pairs += 1


def test_commutative_diagram(rng):
    checked = 0
    for _ in range(20):
        operator = normalized(make_random_operator(rng, max_order=2, max_degree=2, bound=9))
        for p in (3, 5):
            if operator.leading(0) % p:
                assert diagram_check(operator, p)
                checked += 1
    assert checked > 0
