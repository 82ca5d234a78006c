"""
End-to-end orchestration: operator in, one record per prime below N out.

charpoly_p_curv runs shift, phi, companion, prime plan, matrix factorial and
per-prime post-processing; oracle_records produces the same records from the
Katz recursion alone so the two can be compared.
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from pcurv.kernel import TruncPolyMat
from pcurv.models import BenchRow, CharPolyRecord, ExclusionReason, PipelineResult, PrimePlan, RunConfig
from pcurv.oracle import ORACLE_LIMIT, oracle_record
from pcurv.ore import CompanionMat, OperatorTheta, OperatorX, companion, phi, pick_shift, shift
from pcurv.postproc import PostprocContext, postprocess_prime
from pcurv.sieve import plan_primes
from pcurv.tree import matrix_factorial

logger = logging.getLogger(__name__)


@dataclass
class PreparedOperator:
    """Everything derived from L before the primes enter."""
    operator: OperatorX
    shift: int
    shifted: OperatorX
    L_theta: OperatorTheta
    d: int
    l_theta: int
    M: CompanionMat

    @property
    def context(self) -> PostprocContext:
        return PostprocContext(l_theta=self.l_theta, k=self.L_theta.k, m=self.operator.order,
                               d=self.d, l_x=self.shifted.leading, shift=self.shift)


def prepare(operator: OperatorX, timings: Optional[Dict[str, float]] = None) -> PreparedOperator:
    """Shift so that l_x(0) ≠ 0, convert to θ, build the scaled companion matrix."""
    start = time.perf_counter()
    a = pick_shift(operator.leading)
    shifted = shift(operator, a)
    L_theta = phi(shifted)
    d = L_theta.theta_degree
    l_theta = L_theta.leading_constant
    M = companion(L_theta)
    if timings is not None:
        timings['prepare'] = time.perf_counter() - start
    logger.info("shift a=%d, order m=%d, depth k=%d, d=%d, l_theta=%d, matrix size %d",
                a, operator.order, L_theta.k, d, l_theta, M.s)
    return PreparedOperator(operator, a, shifted, L_theta, d, l_theta, M)


def _postprocess_job(job: Tuple[TruncPolyMat, PostprocContext, int, bool]) -> CharPolyRecord:
    prod, context, p, small = job
    return postprocess_prime(prod, context, p, small=small)


def _excluded_records(plan: PrimePlan, a: int) -> List[CharPolyRecord]:
    return [CharPolyRecord.create_excluded(p, reason, shift=a) for p, reason in plan.excluded]


def charpoly_p_curv(operator: OperatorX, N: int, config: Optional[RunConfig] = None) -> PipelineResult:
    """
    Records for every prime p < N, sorted by p.

    Per-prime failures become excluded records; nothing here aborts the run
    once the plan has been made.
    """
    config = config or RunConfig(N=N)
    timings: Dict[str, float] = {}
    prepared = prepare(operator, timings)
    plan = plan_primes(N, prepared.l_theta, prepared.d, config.include_small_primes)

    tree_sizes: List[Tuple[int, int, int]] = []
    products = matrix_factorial(prepared.M, N, prepared.d + 1, plan, timings=timings,
                                tree_sizes=tree_sizes if config.tree_sizes else None)

    start = time.perf_counter()
    context = prepared.context
    jobs = [(products[p], context, p, p in plan.small) for p in plan.admissible]
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as executor:
            chunksize = max(1, len(jobs) // (4 * config.jobs))
            computed = list(executor.map(_postprocess_job, jobs, chunksize=chunksize))
    else:
        computed = [_postprocess_job(job) for job in jobs]
    timings['postproc'] = time.perf_counter() - start
    logger.info("post-processing of %d primes took %.3fs", len(jobs), timings['postproc'])
    inexact = [r.p for r in computed if r.excluded == ExclusionReason.DIVISION_INEXACT]
    if inexact:
        logger.warning("%d of %d primes (first p=%d) have an inexact division by the leading coefficient; "
                       "their records carry xi", len(inexact), len(jobs), min(inexact))

    records = sorted(computed + _excluded_records(plan, prepared.shift), key=lambda r: r.p)
    return PipelineResult(records=records, plan=plan, shift=prepared.shift,
                          timings=timings, tree_sizes=tree_sizes)


def oracle_records(operator: OperatorX, N: int, config: Optional[RunConfig] = None) -> PipelineResult:
    """Records from the Katz recursion, using the same prime plan as the tree pipeline."""
    config = config or RunConfig(N=N)
    prepared = prepare(operator)
    plan = plan_primes(N, prepared.l_theta, prepared.d, config.include_small_primes)
    start = time.perf_counter()
    computed = [oracle_record(operator, p, shift=prepared.shift, small=p in plan.small)
                for p in plan.admissible]
    elapsed = time.perf_counter() - start
    logger.info("oracle: %d primes in %.3fs", len(computed), elapsed)
    records = sorted(computed + _excluded_records(plan, prepared.shift), key=lambda r: r.p)
    return PipelineResult(records=records, plan=plan, shift=prepared.shift,
                          timings={'oracle': elapsed})


def compare_records(tree: Sequence[CharPolyRecord], oracle: Sequence[CharPolyRecord],
                    limit: Optional[int] = ORACLE_LIMIT) -> List[int]:
    """Primes (below limit) on which the two record lists disagree."""
    by_p = {r.p: r for r in oracle}
    mismatches = []
    for record in tree:
        if limit is not None and record.p >= limit:
            continue
        other = by_p.get(record.p)
        if other is None or not record.same_result(other):
            mismatches.append(record.p)
    missing = sorted(set(by_p) - {r.p for r in tree})
    mismatches.extend(p for p in missing if limit is None or p < limit)
    if mismatches:
        logger.warning("tree and oracle disagree at p in %s", mismatches)
    return sorted(mismatches)


def bench(operator: OperatorX, N_list: Sequence[int], config: Optional[RunConfig] = None) -> List[BenchRow]:
    """Wall-clock of charpoly_p_curv for each N, with the T/W/post-processing split."""
    rows = []
    for N in N_list:
        start = time.perf_counter()
        result = charpoly_p_curv(operator, N, config)
        total = time.perf_counter() - start
        rows.append(BenchRow(N=N, primes=len(result.plan.admissible), total=total,
                             t_tree=result.timings.get('t_tree', 0.0),
                             w_tree=result.timings.get('w_tree', 0.0),
                             postproc=result.timings.get('postproc', 0.0)))
        logger.info("bench N=%d: %.3fs", N, total)
    return rows
