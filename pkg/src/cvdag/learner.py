"""Two-step structure learning: greedy conditional-variance ordering, then
parent selection by partial-correlation tests along the ordering.

A population-oracle twin (`learn_from_covariance`) runs the same search in
exact arithmetic on a covariance matrix, deciding independence by thresholding
|partial correlation| instead of a finite-sample test.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import InsufficientSamplesError, NumericalDegeneracyError, ValidationError
from .graphs import Dag, Ordering
from .numerics import (
    Dataset,
    _cholesky,
    conditional_variances_from_gram,
    fisher_z_test,
    partial_correlation,
    residual_partial_correlation,
    schur_variances,
)

ParentTestMode = Literal["conditional", "marginal"]


@dataclass(frozen=True)
class LearnConfig:
    """Knobs of the learner.

    ``parent_test_mode`` selects the conditioning set of each parent test:
    "conditional" tests a candidate given all other predecessors, "marginal"
    tests the plain pairwise correlation.
    """

    alpha: float = 0.01
    oracle_tolerance: float = 1e-9
    parent_test_mode: ParentTestMode = "conditional"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.oracle_tolerance <= 0.0:
            raise ValidationError("oracle_tolerance must be positive")
        if self.parent_test_mode not in ("conditional", "marginal"):
            raise ValidationError(f"unknown parent_test_mode {self.parent_test_mode!r}")


@dataclass(frozen=True)
class TestRecord:
    """One logged independence decision for the pair (earlier, later)."""

    earlier: int
    later: int
    given: tuple[int, ...]
    r: float
    statistic: float
    threshold: float
    dependent: bool


@dataclass(frozen=True)
class LearnResult:
    ordering: Ordering
    dag: Dag
    # step_variances[m] lists (candidate, conditional variance) for every node
    # still unplaced when position m was decided
    step_variances: tuple[tuple[tuple[int, float], ...], ...]
    test_log: tuple[TestRecord, ...] = field(repr=False)


def _greedy_ordering(cond_var_fn, p: int):
    """Shared forward selection: argmin conditional variance, ties to low index."""
    remaining = list(range(p))
    order: list[int] = []
    steps = []
    while remaining:
        values = cond_var_fn(order, remaining)
        steps.append(tuple(zip(remaining, (float(v) for v in values))))
        best = min(range(len(remaining)), key=lambda i: (values[i], remaining[i]))
        order.append(remaining.pop(best))
    return Ordering(tuple(order)), tuple(steps)


def estimate_ordering(data: Dataset, cfg: LearnConfig | None = None):
    """Greedy minimal-conditional-variance ordering of the dataset's columns.

    Returns (ordering, step diagnostics). Requires n > p + 1 so that every
    regression along the way, and the final parent tests, are estimable.
    """
    del cfg  # ordering has no tunables; accepted for symmetry with the other steps
    if data.n <= data.p + 1:
        raise InsufficientSamplesError(
            f"ordering needs n > p + 1 (n={data.n}, p={data.p})"
        )
    centered = data.data - data.data.mean(axis=0)
    gram = centered.T @ centered

    def cond_vars(selected, remaining):
        return conditional_variances_from_gram(gram, data.n, selected, remaining)

    return _greedy_ordering(cond_vars, data.p)


def _select_parents(pi: Ordering, decide):
    """Run the per-position tests; `decide(later, earlier, given)` -> TestRecord."""
    p = len(pi)
    edges: set[tuple[int, int]] = set()
    log: list[TestRecord] = []
    for m in range(1, p):
        later = pi[m]
        predecessors = [pi[i] for i in range(m)]
        for earlier in predecessors:
            given = tuple(q for q in predecessors if q != earlier)
            rec = decide(later, earlier, given)
            log.append(rec)
            if rec.dependent:
                edges.add((earlier, later))
    return Dag(p, frozenset(edges)), tuple(log)


def estimate_parents(data: Dataset, pi: Ordering, cfg: LearnConfig | None = None):
    """Parent sets along ``pi`` by Fisher z tests at cfg.alpha.

    Conditional mode tests each candidate given the remaining predecessors;
    marginal mode tests the pairwise correlation. Every decision is logged,
    so the log is a complete audit of the returned edge set.
    """
    cfg = cfg or LearnConfig()
    if len(pi) != data.p:
        raise ValidationError(f"ordering of length {len(pi)} for p={data.p} dataset")
    largest = data.p - 2 if cfg.parent_test_mode == "conditional" else 0
    if data.n <= largest + 3:
        raise InsufficientSamplesError(
            f"Fisher z with conditioning sets up to {largest} needs n > {largest + 3},"
            f" got n={data.n}"
        )
    centered = data.data - data.data.mean(axis=0)
    gram = centered.T @ centered

    def decide(later, earlier, given):
        if cfg.parent_test_mode == "marginal":
            given = ()
        # residual-vector route: equal to the covariance Schur complement in
        # exact arithmetic, but tolerant of wildly scaled columns
        r = residual_partial_correlation(centered, gram, later, earlier, given)
        out = fisher_z_test(r, data.n, len(given), cfg.alpha)
        return TestRecord(earlier, later, given, r, out.statistic, out.threshold,
                          out.dependent)

    return _select_parents(pi, decide)


def learn(data: Dataset, cfg: LearnConfig | None = None) -> LearnResult:
    """Full pipeline: ordering, then parents; the result is acyclic by construction."""
    cfg = cfg or LearnConfig()
    ordering, steps = estimate_ordering(data, cfg)
    dag, log = estimate_parents(data, ordering, cfg)
    return LearnResult(ordering, dag, steps, log)


def learn_from_covariance(cov: np.ndarray, cfg: LearnConfig | None = None) -> LearnResult:
    """Exact-arithmetic analogue of :func:`learn` on a population covariance.

    Conditional variances come from Schur complements and independence is
    |partial correlation| <= cfg.oracle_tolerance; on the covariance of an
    identifiable model this returns the generating graph exactly.
    """
    cfg = cfg or LearnConfig()
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ValidationError(f"covariance must be square, got shape {cov.shape}")
    if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-8 * max(1.0, np.abs(cov).max())):
        raise NumericalDegeneracyError("covariance is not symmetric")
    _cholesky(cov, jitter=False)  # SPD gate
    p = cov.shape[0]

    def cond_vars(selected, remaining):
        return schur_variances(cov, selected, remaining)

    ordering, steps = _greedy_ordering(cond_vars, p)

    def decide(later, earlier, given):
        if cfg.parent_test_mode == "marginal":
            given = ()
        r = partial_correlation(cov, later, earlier, given)
        dependent = abs(r) > cfg.oracle_tolerance
        return TestRecord(earlier, later, given, r, abs(r), cfg.oracle_tolerance,
                          dependent)

    dag, log = _select_parents(ordering, decide)
    return LearnResult(ordering, dag, steps, log)


def ordering_is_greedy_minimal(result: LearnResult) -> bool:
    """Audit helper: the node picked at each step attains that step's minimum."""
    for m, candidates in enumerate(result.step_variances):
        by_node = dict(candidates)
        if by_node[result.ordering[m]] > min(by_node.values()):
            return False
    return True
