import statistics
import time

import pytest

from pcurv.conftest import make_random_operator
from pcurv.models import BivarPoly, CharPolyRecord, ExclusionReason, RunConfig
from pcurv.ore import OperatorX, shift
from pcurv.pipeline import bench, charpoly_p_curv, compare_records, oracle_records, prepare
from pcurv.sieve import primes_below

D = OperatorX.from_coeffs([[0], [1]])
D_MINUS_1 = OperatorX.from_coeffs([[-1], [1]])
AIRY = OperatorX.from_coeffs([[0, -1], [0], [1]])
SQRT_1_PLUS_X = OperatorX.from_coeffs([[-1], [2, 2]])


def by_prime(result):
    return {r.p: r for r in result.records}


# ---------------------------------------------------------------- examples

def test_d_is_nilpotent_everywhere():
    result = charpoly_p_curv(D, 20)
    assert [r.p for r in result.records] == [2, 3, 5, 7, 11, 13, 17, 19]
    for record in result.records:
        assert record.coeffs == BivarPoly.from_ints(record.p, [[], [1]])
        assert record.nilpotent and record.m == 1
    assert result.nilpotent_primes == [2, 3, 5, 7, 11, 13, 17, 19]


def test_d_minus_1_is_never_nilpotent():
    result = charpoly_p_curv(D_MINUS_1, 20)
    for record in result.records:
        assert record.coeffs == BivarPoly.from_ints(record.p, [[-1], [1]])
        assert not record.nilpotent
    assert result.nilpotent_primes == []


def test_algebraic_solution_example():
    # x∂ - 1 kills x
    result = charpoly_p_curv(OperatorX.from_coeffs([[-1], [0, 1]]), 30)
    assert result.shift != 0
    for record in result.records:
        if not record.is_excluded:
            assert record.coeffs == BivarPoly.from_ints(record.p, [[], [1]])


def test_airy_matches_oracle():
    tree = charpoly_p_curv(AIRY, 20)
    oracle = oracle_records(AIRY, 20)
    assert compare_records(tree.records, oracle.records) == []
    assert all(not r.is_excluded for r in tree.records if r.p > 2)
    assert tree.records[-1].m == 2


def test_records_sorted_and_complete(rng):
    operator = make_random_operator(rng)
    result = charpoly_p_curv(operator, 60)
    assert [r.p for r in result.records] == primes_below(60)
    assert result.plan.all_primes == primes_below(60)
    for p, reason in result.plan.excluded:
        assert by_prime(result)[p].excluded == reason


def test_timings_cover_every_phase():
    result = charpoly_p_curv(AIRY, 50)
    assert {'prepare', 't_tree', 'w_tree', 'postproc'} <= set(result.timings)


def test_tree_sizes_only_when_requested():
    assert charpoly_p_curv(AIRY, 30).tree_sizes == []
    result = charpoly_p_curv(AIRY, 30, RunConfig(N=30, tree_sizes="sizes.csv"))
    assert result.tree_sizes and result.tree_sizes[0][0] == 0


# ---------------------------------------------------------------- oracle equivalence

def test_tree_equals_oracle_on_random_operators(rng):
    """Every admissible p < 50 for 200 random operators with m <= 3, d <= 2."""
    for _ in range(200):
        operator = make_random_operator(rng, max_order=3, max_degree=2, bound=63)
        tree = charpoly_p_curv(operator, 50)
        oracle = oracle_records(operator, 50)
        assert tree.consistency_failures == []
        assert compare_records(tree.records, oracle.records) == []


def test_small_primes_match_oracle(rng):
    checked = 0
    config = RunConfig(N=40, include_small_primes=True)
    while checked < 10:
        operator = make_random_operator(rng, max_order=2, max_degree=2, bound=15)
        prepared = prepare(operator)
        if prepared.d < 2:
            continue
        tree = charpoly_p_curv(operator, 40, config)
        oracle = oracle_records(operator, 40, config)
        assert compare_records(tree.records, oracle.records) == []
        small = [r for r in tree.records if r.small]
        assert all(r.p <= prepared.d for r in small)
        assert not any(r.excluded == ExclusionReason.LE_DEGREE for r in tree.records)
        checked += 1


def test_compare_records_reports_mismatches():
    tree = charpoly_p_curv(D_MINUS_1, 20).records
    oracle = list(oracle_records(D_MINUS_1, 20).records)
    assert compare_records(tree, oracle) == []
    oracle[2] = CharPolyRecord.create(5, BivarPoly.from_ints(5, [[], [1]]), 0)
    assert compare_records(tree, oracle) == [5]
    assert compare_records(tree, oracle, limit=5) == []
    assert compare_records(tree[:-1], oracle) == [19]


def test_compare_records_checks_xi_of_inexact_divisions():
    operator = OperatorX.from_coeffs([[-1], [1, 0, 1]])
    tree = charpoly_p_curv(operator, 20).records
    oracle = list(oracle_records(operator, 20).records)
    assert tree[1].excluded == ExclusionReason.DIVISION_INEXACT
    assert compare_records(tree, oracle) == []
    oracle[1] = CharPolyRecord.create_excluded(3, ExclusionReason.DIVISION_INEXACT,
                                               xi=BivarPoly.from_ints(3, [[1], [1]]))
    assert compare_records(tree, oracle) == [3]


def test_inexact_divisions_are_summarized_in_one_warning(caplog):
    caplog.set_level("WARNING", logger="pcurv")
    result = charpoly_p_curv(OperatorX.from_coeffs([[-1], [1, 0, 1]]), 200)
    inexact = [r.p for r in result.records if r.excluded == ExclusionReason.DIVISION_INEXACT]
    assert len(inexact) > 1
    warnings = [r for r in caplog.records if r.levelname == "WARNING"]
    assert len(warnings) == 1
    assert warnings[0].name == "pcurv.pipeline"
    assert warnings[0].getMessage().startswith(f"{len(inexact)} of ")


# ---------------------------------------------------------------- properties

@pytest.mark.parametrize("a", [1, 2, -1])
def test_shift_covariance(rng, a):
    inexact = ExclusionReason.DIVISION_INEXACT
    for _ in range(20):
        operator = make_random_operator(rng, max_order=3, max_degree=2, bound=63)
        direct = by_prime(charpoly_p_curv(operator, 30))
        moved = by_prime(charpoly_p_curv(shift(operator, a), 30))
        for p, record in moved.items():
            if record.excluded == inexact and direct[p].excluded == inexact:
                assert record.xi.shift_x(-a) == direct[p].xi
            elif not (record.is_excluded or direct[p].is_excluded):
                assert record.coeffs.shift_x(-a) == direct[p].coeffs


def test_nilpotency_scan_below_1000():
    result = charpoly_p_curv(SQRT_1_PLUS_X, 1000)
    admissible = result.plan.admissible
    assert 2 not in admissible and len(admissible) == len(primes_below(1000)) - 1
    assert result.nilpotent_primes == admissible
    for record in result.records:
        if not record.is_excluded:
            assert record.coeffs.is_y_power(1)

    assert charpoly_p_curv(D_MINUS_1, 1000).nilpotent_primes == []


def test_output_independent_of_worker_count(rng):
    operator = make_random_operator(rng, max_order=3, max_degree=2)
    single = charpoly_p_curv(operator, 200, RunConfig(N=200, jobs=1))
    pooled = charpoly_p_curv(operator, 200, RunConfig(N=200, jobs=2))
    assert [r.to_dict() for r in single.records] == [r.to_dict() for r in pooled.records]


# ---------------------------------------------------------------- bench

def test_bench_rows():
    rows = bench(D_MINUS_1, [20, 40])
    assert [row.N for row in rows] == [20, 40]
    assert [row.primes for row in rows] == [8, 12]
    for row in rows:
        assert row.total >= row.t_tree + row.w_tree >= 0
        assert set(row.to_dict()) == {'N', 'primes', 'total', 't_tree', 'w_tree', 'postproc'}


@pytest.mark.slow
def test_running_time_is_quasi_linear():
    operator = OperatorX.from_coeffs([[3, -1, 2], [1, 0, 5], [-2, 7, 1], [1, 1, 1]])
    medians = []
    for N in (2 ** 14, 2 ** 15, 2 ** 16):
        runs = []
        for _ in range(3):
            start = time.perf_counter()
            charpoly_p_curv(operator, N)
            runs.append(time.perf_counter() - start)
        medians.append(statistics.median(runs))
    assert medians[1] / medians[0] <= 2.5
    assert medians[2] / medians[1] <= 2.5
