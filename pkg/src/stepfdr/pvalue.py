"""Exact two-sided p-values for discrete statistics and their null supports.

For an observed outcome x0 with null pmf f, the conventional two-sided
p-value is P(x0) = l(x0) + e(x0) where l is the total mass of outcomes with
f(x) < f(x0) and e is the total mass of the tie class f(x) = f(x0).  The mid
p-value is Q(x0) = l(x0) + e(x0) / 2.  Both are computed on big-integer mass
numerators over the table's common denominator and converted to float once,
so equal rationals always produce bit-identical floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dist import DiscreteDistribution, binomial_null, hypergeometric_null

__all__ = [
    "PValueFlavor",
    "TwoSidedPValues",
    "PValueSupport",
    "two_sided",
    "null_support",
    "bt_pvalues",
    "fet_pvalues",
    "bt_support",
    "fet_support",
    "bt_outcome_pvalues",
    "fet_outcome_pvalues",
]


class PValueFlavor(str, enum.Enum):
    CONVENTIONAL = "conventional"
    MID = "mid"


def _as_flavor(flavor) -> PValueFlavor:
    if isinstance(flavor, PValueFlavor):
        return flavor
    try:
        return PValueFlavor(flavor)
    except ValueError:
        raise ValueError(
            f"flavor must be 'conventional' or 'mid', got {flavor!r}") from None


@dataclass(frozen=True)
class TwoSidedPValues:
    """Both p-value flavors for one observed outcome.

    l is the mass strictly less likely than the observation, e the mass of
    its tie class; p_conventional = l + e and p_mid = l + e / 2.
    """

    l: float
    e: float
    p_conventional: float
    p_mid: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.l < 1.0:
            raise ValueError(f"l must lie in [0, 1), got {self.l}")
        if not 0.0 < self.e <= 1.0:
            raise ValueError(f"e must lie in (0, 1], got {self.e}")
        if not self.p_mid < self.p_conventional:
            raise ValueError("p_mid must be strictly below p_conventional")


@dataclass(frozen=True, eq=False)
class PValueSupport:
    """Attainable p-values of one test together with their null CDF.

    points are the distinct attainable p-values in increasing order and
    cdf_values[j] = Pr(p <= points[j]) under the null.  For the conventional
    flavor the CDF is the identity on its support; for the mid flavor
    cdf_values[j] is the conventional p-value of the same tie class, which
    always weakly exceeds points[j].
    """

    flavor: PValueFlavor
    points: np.ndarray
    cdf_values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "flavor", _as_flavor(self.flavor))
        points = np.asarray(self.points, dtype=np.float64)
        cdf = np.asarray(self.cdf_values, dtype=np.float64)
        if points.ndim != 1 or points.size == 0 or cdf.shape != points.shape:
            raise ValueError("points and cdf_values must be matching 1-D arrays")
        if not (np.all(points > 0.0) and np.all(points <= 1.0)):
            raise ValueError("support points must lie in (0, 1]")
        if points.size > 1 and not np.all(np.diff(points) > 0.0):
            raise ValueError("support points must be strictly increasing")
        if points.size > 1 and not np.all(np.diff(cdf) >= 0.0):
            raise ValueError("cdf_values must be nondecreasing")
        if cdf[-1] != 1.0:
            raise ValueError("the last cdf_value must equal 1.0 exactly")
        if self.flavor is PValueFlavor.CONVENTIONAL:
            if not np.array_equal(points, cdf):
                raise ValueError(
                    "conventional supports must satisfy cdf_values == points")
        else:
            if not np.all(cdf >= points):
                raise ValueError(
                    "mid supports must satisfy cdf_values >= points")
        for name, arr in (("points", points), ("cdf_values", cdf)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return int(self.points.size)


@dataclass(frozen=True, eq=False)
class _TieTable:
    """Per-tie-class exact quantities of one null table, in ascending mass order."""

    class_of: np.ndarray   # tie-class index for each outcome, support-aligned
    l: np.ndarray          # float l per class
    e: np.ndarray          # float e per class
    p_conv: np.ndarray     # float P per class, strictly increasing
    p_mid: np.ndarray      # float Q per class, strictly increasing


@lru_cache(maxsize=None)
def _tie_table(dist: DiscreteDistribution) -> _TieTable:
    # Cached by table identity; constructors behind bt/fet lookups intern
    # one table per margin, so each table is classified once.
    if not dist.is_exact:
        raise ValueError(
            "two-sided p-values need exact rational weights; "
            f"a {dist.kind} table with float weights cannot classify ties")
    nums = dist.numerators
    den = dist.denominator
    order = sorted(range(len(nums)), key=nums.__getitem__)
    class_of = np.empty(len(nums), dtype=np.int64)
    l_num: list[int] = []
    e_num: list[int] = []
    acc = 0
    prev = None
    for idx in order:
        n = nums[idx]
        if n != prev:
            l_num.append(acc)
            e_num.append(0)
            prev = n
        class_of[idx] = len(l_num) - 1
        e_num[-1] += n
        acc += n
    two_den = 2 * den
    l = np.array([ln / den for ln in l_num])
    e = np.array([en / den for en in e_num])
    p_conv = np.array([(ln + en) / den for ln, en in zip(l_num, e_num)])
    p_mid = np.array([(2 * ln + en) / two_den for ln, en in zip(l_num, e_num)])
    return _TieTable(class_of=class_of, l=l, e=e, p_conv=p_conv, p_mid=p_mid)


def _support_with_map(dist: DiscreteDistribution,
                      flavor: PValueFlavor) -> tuple[PValueSupport, np.ndarray]:
    """Build one flavor's support plus the tie-class -> point-index map.

    Distinct tie classes have distinct rational p-values, but two of them can
    collapse to the same float; collapsed classes are merged onto one support
    point, keeping the largest (right-continuous) CDF value.
    """
    table = _tie_table(dist)
    points = table.p_conv if flavor is PValueFlavor.CONVENTIONAL else table.p_mid
    cdf = table.p_conv
    keep = np.ones(points.size, dtype=bool)
    keep[1:] = points[1:] > points[:-1]
    point_index = np.cumsum(keep) - 1
    n_points = int(point_index[-1]) + 1
    # Right-continuous step CDF: a merged point carries its last class's mass.
    last_class = np.searchsorted(point_index, np.arange(n_points), side="right") - 1
    support = PValueSupport(flavor=flavor, points=points[keep],
                            cdf_values=cdf[last_class])
    outcome_to_point = point_index[table.class_of]
    return support, outcome_to_point


def two_sided(dist: DiscreteDistribution, x0: int) -> TwoSidedPValues:
    """Exact conventional and mid two-sided p-values for outcome x0."""
    table = _tie_table(dist)
    x0 = int(x0)
    pos = int(np.searchsorted(dist.support, x0))
    if pos == dist.support.size or int(dist.support[pos]) != x0:
        raise ValueError(
            f"outcome {x0} is not in the support; check the table margins")
    c = int(table.class_of[pos])
    return TwoSidedPValues(
        l=float(table.l[c]),
        e=float(table.e[c]),
        p_conventional=float(table.p_conv[c]),
        p_mid=float(table.p_mid[c]),
    )


def null_support(dist: DiscreteDistribution, flavor) -> PValueSupport:
    """The attainable p-values of `dist` for one flavor, with their null CDF."""
    support, _ = _support_with_map(dist, _as_flavor(flavor))
    return support


@lru_cache(maxsize=None)
def _bt_lookup(total: int, flavor: PValueFlavor) -> tuple[PValueSupport, np.ndarray]:
    support, outcome_to_point = _support_with_map(binomial_null(total), flavor)
    outcome_to_point.flags.writeable = False
    return support, outcome_to_point


@lru_cache(maxsize=None)
def _fet_lookup(n1: int, n2: int, total: int,
                flavor: PValueFlavor) -> tuple[PValueSupport, np.ndarray]:
    support, outcome_to_point = _support_with_map(
        hypergeometric_null(n1, n2, total), flavor)
    outcome_to_point.flags.writeable = False
    return support, outcome_to_point


def bt_support(total: int, flavor) -> PValueSupport:
    """Cached binomial-test support for a fixed total count; interned per margin."""
    if total < 0:
        raise ValueError(f"total must be >= 0, got {total}")
    return _bt_lookup(int(total), _as_flavor(flavor))[0]


def fet_support(n1: int, n2: int, total: int, flavor) -> PValueSupport:
    """Cached Fisher-exact support for fixed margins; interned per margin triple."""
    return _fet_lookup(int(n1), int(n2), int(total), _as_flavor(flavor))[0]


def bt_outcome_pvalues(total: int, flavor) -> np.ndarray:
    """p-value of every outcome c1 = 0..total, as floats taken from the support."""
    support, outcome_to_point = _bt_lookup(int(total), _as_flavor(flavor))
    return support.points[outcome_to_point]


def fet_outcome_pvalues(n1: int, n2: int, total: int, flavor) -> np.ndarray:
    """p-value of every feasible outcome c1, aligned with the hypergeometric support."""
    support, outcome_to_point = _fet_lookup(int(n1), int(n2), int(total),
                                            _as_flavor(flavor))
    return support.points[outcome_to_point]


def bt_pvalues(c1: int, c2: int, flavor) -> tuple[float, PValueSupport]:
    """Binomial-test p-value of (c1, c2) plus the support it lives on.

    The null conditions on the total c1 + c2 and tests symmetry between the
    two counts; a zero total yields the point-mass table (p = 1 conventional,
    p = 0.5 mid).
    """
    c1, c2 = int(c1), int(c2)
    if c1 < 0 or c2 < 0:
        raise ValueError(f"counts must be >= 0, got ({c1}, {c2})")
    flavor = _as_flavor(flavor)
    support, outcome_to_point = _bt_lookup(c1 + c2, flavor)
    return float(support.points[outcome_to_point[c1]]), support


def fet_pvalues(c1: int, c2: int, n1: int, n2: int,
                flavor) -> tuple[float, PValueSupport]:
    """Fisher-exact p-value of a 2x2 table plus the support it lives on.

    The null conditions on both margins: group sizes (n1, n2) and the total
    success count c1 + c2.
    """
    c1, c2, n1, n2 = int(c1), int(c2), int(n1), int(n2)
    if c1 < 0 or c2 < 0:
        raise ValueError(f"counts must be >= 0, got ({c1}, {c2})")
    if c1 > n1 or c2 > n2:
        raise ValueError(
            f"impossible table: counts ({c1}, {c2}) exceed totals ({n1}, {n2})")
    flavor = _as_flavor(flavor)
    support, outcome_to_point = _fet_lookup(n1, n2, c1 + c2, flavor)
    lo = max(0, c1 + c2 - n2)
    return float(support.points[outcome_to_point[c1 - lo]]), support
