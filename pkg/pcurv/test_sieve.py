import pytest

from pcurv.errors import ContractError
from pcurv.models import ExclusionReason
from pcurv.sieve import plan_primes, primes_below, simple_sieve

DL = ExclusionReason.DIVIDES_LEADING
LE = ExclusionReason.LE_DEGREE


def trial_division_primes(N):
    return [n for n in range(2, N) if all(n % q for q in range(2, int(n ** 0.5) + 1))]


def test_plan_example_leading_takes_precedence():
    plan = plan_primes(12, 10, 2)
    assert plan.admissible == [3, 7, 11]
    assert plan.excluded == [(2, DL), (5, DL)]


def test_plan_example_no_exclusions():
    plan = plan_primes(10, 1, 1)
    assert plan.admissible == [2, 3, 5, 7]
    assert plan.excluded == []


def test_plan_example_small_primes():
    plan = plan_primes(10, 1, 4, include_small=True)
    assert plan.admissible == [2, 3, 5, 7]
    assert plan.small == {2, 3}
    off = plan_primes(10, 1, 4)
    assert off.admissible == [5, 7]
    assert off.excluded == [(2, LE), (3, LE)]


def test_plan_negative_leading_coefficient():
    plan = plan_primes(20, -6, 0)
    assert [p for p, _ in plan.excluded] == [2, 3]


@pytest.mark.parametrize("N", [2, 3, 4, 10, 100, 1000, 7919, 10 ** 5])
def test_prime_count_matches_trial_division(N):
    plan = plan_primes(N, 30, 3)
    assert len(plan.admissible) + len(plan.excluded) == len(trial_division_primes(N))
    assert plan.all_primes == trial_division_primes(N)


@pytest.mark.parametrize("segment", [1, 7, 64, 1000])
def test_segment_size_does_not_change_output(segment):
    assert primes_below(5000, segment_odd_count=segment) == trial_division_primes(5000)


def test_simple_sieve_small_limits():
    assert simple_sieve(1).tolist() == []
    assert simple_sieve(2).tolist() == [2]
    assert simple_sieve(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


def test_plan_preconditions():
    with pytest.raises(ContractError):
        plan_primes(1, 1, 0)
    with pytest.raises(ContractError):
        plan_primes(10, 0, 0)
