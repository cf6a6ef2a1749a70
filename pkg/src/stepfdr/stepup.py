"""Step-up multiple testing procedures driven by step-function null CDFs.

The adaptive procedure takes the pointwise maximum F* of the per-test null
CDFs of the p-values, then uses critical values
``gamma_k = max{t in grid : F*(t) <= alpha * k / m}`` over the sorted union
of all support points.  Rejections follow the usual step-up scan.  With
uniform p-values F* is the identity and the procedure reduces to the
classical step-up of Benjamini and Hochberg, which `bh` implements directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvariantViolation
from .pvalue import PValueSupport

__all__ = [
    "MaxCdf",
    "StepUpResult",
    "MidComparison",
    "build_max_cdf",
    "critical_values",
    "bh_plus",
    "bh",
    "mid_vs_conventional",
]


@dataclass(frozen=True, eq=False)
class MaxCdf:
    """Pointwise maximum of several step CDFs, tabulated on their union grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.ndim != 1 or grid.size == 0 or values.shape != grid.shape:
            raise ValueError("grid and values must be matching 1-D arrays")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise ValueError("grid must be strictly increasing")
        if grid.size > 1 and not np.all(np.diff(values) >= 0.0):
            raise ValueError("values must be nondecreasing")
        if values[-1] != 1.0:
            raise ValueError("the last value must equal 1.0 exactly")
        for name, arr in (("grid", grid), ("values", values)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def evaluate(self, t):
        """Right-continuous step evaluation; 0 below the first grid point."""
        t_arr = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.grid, t_arr, side="right") - 1
        out = np.where(idx >= 0, self.values[np.maximum(idx, 0)], 0.0)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


def build_max_cdf(supports: Sequence[PValueSupport]) -> MaxCdf:
    """Tabulate max_i F_i over the sorted union of all support points.

    Repeated support objects (tests sharing a margin) are collapsed before
    the sweep; the result is unchanged because the maximum is idempotent.
    """
    if len(supports) == 0:
        raise ValueError("at least one support is required")
    unique = list({id(s): s for s in supports}.values())
    points = np.concatenate([s.points for s in unique])
    cdfs = np.concatenate([s.cdf_values for s in unique])
    order = np.argsort(points, kind="stable")
    points = points[order]
    # Once events are in point order, each test's running CDF is the largest
    # of its processed values, so the max over tests is one running maximum.
    running = np.maximum.accumulate(cdfs[order])
    grid = np.unique(points)
    last = np.searchsorted(points, grid, side="right") - 1
    return MaxCdf(grid=grid, values=running[last])


def critical_values(max_cdf: MaxCdf, alpha: float, m: int) -> np.ndarray:
    """gamma_k for k = 1..m; NaN marks ranks with no feasible grid point.

    gamma_k is the largest grid point whose F* value is <= alpha * k / m.
    NaN (rather than 0) is the none-feasible marker, so a literal p-value of
    0 can never pass a comparison against an infeasible rank.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    thresholds = alpha * np.arange(1, m + 1, dtype=np.float64) / m
    idx = np.searchsorted(max_cdf.values, thresholds, side="right") - 1
    return np.where(idx >= 0, max_cdf.grid[np.maximum(idx, 0)], np.nan)


@dataclass(frozen=True, eq=False)
class StepUpResult:
    """Outcome of one step-up run.

    critical_values holds gamma_k per rank (NaN = none feasible), threshold
    is gamma_R (None when R = 0), and rejected lists the original indices of
    all p-values <= threshold, in increasing index order.
    """

    critical_values: np.ndarray
    rejection_count: int
    threshold: float | None
    rejected: np.ndarray


def _validate_pvalues(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("pvalues must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise ValueError("pvalues must lie in [0, 1]")
    return p


def _scan(p: np.ndarray, gamma: np.ndarray) -> tuple[int, float | None, np.ndarray]:
    """Shared step-up scan: R = max{k : p_(k) <= gamma_k}, reject p <= gamma_R."""
    order = np.argsort(p, kind="stable")
    hits = np.flatnonzero(p[order] <= gamma)
    if hits.size == 0:
        return 0, None, np.empty(0, dtype=np.int64)
    r = int(hits[-1]) + 1
    threshold = float(gamma[r - 1])
    rejected = np.flatnonzero(p <= threshold)
    if rejected.size != r:
        raise InvariantViolation(
            f"step-up rejected {rejected.size} p-values but R = {r}")
    return r, threshold, rejected


def bh_plus(pvalues, supports: Sequence[PValueSupport], alpha: float,
            *, max_cdf: MaxCdf | None = None) -> StepUpResult:
    """Step-up run against critical values adapted to the null supports.

    Every p-value must be a point of its own support (exact float equality;
    both sides come from the same rational-to-float conversion).  A
    premultiplied `max_cdf` for the same supports may be passed to reuse work
    across alpha levels.
    """
    p = _validate_pvalues(pvalues)
    if len(supports) != p.size:
        raise ValueError(
            f"got {p.size} p-values but {len(supports)} supports")
    for i, (value, support) in enumerate(zip(p, supports)):
        j = int(np.searchsorted(support.points, value))
        if j == support.points.size or support.points[j] != value:
            raise ValueError(
                f"p-value {value!r} of test {i} is not a point of its support")
    if max_cdf is None:
        max_cdf = build_max_cdf(supports)
    gamma = critical_values(max_cdf, alpha, p.size)
    r, threshold, rejected = _scan(p, gamma)
    return StepUpResult(critical_values=gamma, rejection_count=r,
                        threshold=threshold, rejected=rejected)


def bh(pvalues, alpha: float) -> StepUpResult:
    """Classical step-up with critical values alpha * k / m."""
    p = _validate_pvalues(pvalues)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    m = p.size
    gamma = alpha * np.arange(1, m + 1, dtype=np.float64) / m
    r, threshold, rejected = _scan(p, gamma)
    return StepUpResult(critical_values=gamma, rejection_count=r,
                        threshold=threshold, rejected=rejected)


@dataclass(frozen=True, eq=False)
class MidComparison:
    """Mid-p versus conventional rejection counts and the crossing condition.

    condition_holds reports whether the mid max-CDF at the r_cp-th smallest
    mid p-value stays within alpha * r_cp / m (vacuously true when r_cp = 0),
    which is equivalent to r_mp >= r_cp.
    """

    condition_holds: bool
    r_cp: int
    r_mp: int
    mid_result: StepUpResult


def mid_vs_conventional(conv_result: StepUpResult,
                        mid_supports: Sequence[PValueSupport],
                        mid_pvalues, alpha: float,
                        *, max_cdf: MaxCdf | None = None) -> MidComparison:
    """Run the step-up on mid p-values and test the count-ordering condition.

    `conv_result` must come from a run on the conventional p-values of the
    same m tests at the same alpha.  The equivalence between the condition
    and r_mp >= r_cp is asserted on every call.
    """
    p_mid = _validate_pvalues(mid_pvalues)
    m = p_mid.size
    if conv_result.critical_values.size != m:
        raise ValueError(
            f"conventional run had m = {conv_result.critical_values.size}, "
            f"but got {m} mid p-values")
    if max_cdf is None:
        max_cdf = build_max_cdf(mid_supports)
    mid_result = bh_plus(p_mid, mid_supports, alpha, max_cdf=max_cdf)
    r_cp = conv_result.rejection_count
    if r_cp == 0:
        condition = True
    else:
        q_rcp = float(np.partition(p_mid, r_cp - 1)[r_cp - 1])
        condition = max_cdf.evaluate(q_rcp) <= alpha * r_cp / m
    if condition != (mid_result.rejection_count >= r_cp):
        raise InvariantViolation(
            "count-ordering condition disagrees with the realized counts: "
            f"condition={condition}, r_cp={r_cp}, r_mp={mid_result.rejection_count}")
    return MidComparison(condition_holds=condition, r_cp=r_cp,
                         r_mp=mid_result.rejection_count, mid_result=mid_result)
