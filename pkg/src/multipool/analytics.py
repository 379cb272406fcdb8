"""Closed-form accuracy statistics for multipool screening.

Everything here reduces to one per-pool quantity: in a pool of size q
containing a fixed item known negative, the other q - 1 members are
independently infected with probability rho, so the pool tests negative
with probability

    gamma_1 = (1 - p_fp) * (1 - (1 - p_fn) * rho) ** (q - 1).

Because the design lets any two items share at most one pool, the m
pools of one item overlap only in that item, and their results are
conditionally independent given the item's status.  Sensitivity and
specificity of the threshold decoder are therefore binomial tails in
gamma_1, and the posterior error rates follow from Bayes' rule.  These
expressions hold for any design with the multipool properties, not only
for the ones built in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import (
    DomainError,
    InfeasibleError,
    NoSolutionError,
    NotApplicableError,
    UndefinedResultError,
)
from .model import NOISELESS, NoiseModel


@dataclass(frozen=True)
class ScenarioParams:
    """One screening scenario: prevalence, design shape, decoder, noise.

    ``n`` is only needed by the count statistics (expectations and
    variance bounds) and may be left unset otherwise.
    """

    rho: float
    q: int
    m: int
    nc: int = 0
    noise: NoiseModel = NOISELESS
    n: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise DomainError(f"prevalence must lie in [0, 1], got {self.rho}")
        if self.q < 2:
            raise DomainError(f"pool size must be at least 2, got {self.q}")
        if self.m < 1:
            raise DomainError(f"multiplicity must be at least 1, got {self.m}")
        if not 0 <= self.nc <= self.m:
            raise DomainError(f"nc must lie in [0, {self.m}], got {self.nc}")
        if self.n is not None and self.n < 1:
            raise DomainError(f"item count must be positive, got {self.n}")

    def _require_n(self) -> int:
        if self.n is None:
            raise DomainError("this statistic needs the item count n")
        return self.n


def _clamp_probability(value: float) -> float:
    # Binomial tail sums can drift past the unit interval by a few ulps.
    return min(1.0, max(0.0, value))


def gamma(k: int, scenario: ScenarioParams) -> float:
    """P(a pool tests negative | exactly k fixed members are infected).

    The remaining q - k members are infected independently at rate rho:

        gamma_k = (1 - p_fp) * (1 - (1 - p_fn) * rho) ** (q - k)
    """
    if not 0 <= k <= scenario.q:
        raise DomainError(f"k must lie in [0, {scenario.q}], got {k}")
    noise = scenario.noise
    base = 1.0 - (1.0 - noise.p_fn) * scenario.rho
    return (1.0 - noise.p_fp) * base ** (scenario.q - k)


def _flag_probability(m: int, nc: int, pool_negative: float) -> float:
    """P(at most nc of m independent pools test negative).

    Each pool is negative with probability ``pool_negative``; the decoder
    flags an item when at least m - nc of its pools are positive.
    """
    positive = 1.0 - pool_negative
    total = 0.0
    for k in range(m - nc, m + 1):
        total += math.comb(m, k) * positive ** k * pool_negative ** (m - k)
    return _clamp_probability(total)


def sensitivity(scenario: ScenarioParams) -> float:
    """P(item flagged positive | item infected).

    Each pool of an infected item is negative with probability
    p_fn * gamma_1, independently across its m pools.
    """
    pool_negative = scenario.noise.p_fn * gamma(1, scenario)
    return _flag_probability(scenario.m, scenario.nc, pool_negative)


def specificity(scenario: ScenarioParams) -> float:
    """P(item flagged negative | item not infected).

    Each pool of a healthy item is negative with probability gamma_1, so
    the flag probability is the same binomial tail with that rate.
    """
    return _clamp_probability(1.0 - _flag_probability(scenario.m, scenario.nc, gamma(1, scenario)))


def type_one(scenario: ScenarioParams) -> float:
    """P(item not infected | item flagged positive).

    Interior evaluation uses
        (1 + rho / (1 - rho) * sens / (1 - spec)) ** -1,
    which is the Bayes posterior rearranged.  When no probability mass is
    ever flagged positive the conditional does not exist and an
    UndefinedResultError is raised.
    """
    rho = scenario.rho
    sens = sensitivity(scenario)
    spec = specificity(scenario)
    false_positive_mass = (1.0 - rho) * (1.0 - spec)
    true_positive_mass = rho * sens
    if false_positive_mass == 0.0 and true_positive_mass == 0.0:
        raise UndefinedResultError("nothing is ever flagged positive in this scenario")
    if false_positive_mass == 0.0:
        return 0.0
    if true_positive_mass == 0.0:
        return 1.0
    return 1.0 / (1.0 + (rho / (1.0 - rho)) * (sens / (1.0 - spec)))


def type_two(scenario: ScenarioParams) -> float:
    """P(item infected | item flagged negative), the mirror posterior."""
    rho = scenario.rho
    sens = sensitivity(scenario)
    spec = specificity(scenario)
    false_negative_mass = rho * (1.0 - sens)
    true_negative_mass = (1.0 - rho) * spec
    if false_negative_mass == 0.0 and true_negative_mass == 0.0:
        raise UndefinedResultError("nothing is ever flagged negative in this scenario")
    if false_negative_mass == 0.0:
        return 0.0
    if true_negative_mass == 0.0:
        return 1.0
    return 1.0 / (1.0 + ((1.0 - rho) / rho) * (spec / (1.0 - sens)))


class ExpectedCounts(NamedTuple):
    positives: float
    false_positives: float
    false_negatives: float


def expected_counts(scenario: ScenarioParams) -> ExpectedCounts:
    """Expected flagged, falsely flagged, and missed items out of n."""
    n = scenario._require_n()
    sens = sensitivity(scenario)
    spec = specificity(scenario)
    rho = scenario.rho
    return ExpectedCounts(
        positives=n * (rho * sens + (1.0 - rho) * (1.0 - spec)),
        false_positives=n * (1.0 - rho) * (1.0 - spec),
        false_negatives=n * rho * (1.0 - sens),
    )


class VarianceBounds(NamedTuple):
    positives: float
    false_positives: float


def variance_bounds(scenario: ScenarioParams) -> VarianceBounds:
    """Upper bounds on Var[positives] and Var[false positives].

    Valid only for exact tests decoded with nc = 0; anything else raises
    NotApplicableError.  With beta = 1 - (1 - rho) ** (q - 1), items
    interact only through shared pools, and an Efron-Stein argument gives

        Var[T]    <= n*m*q*rho*(1-rho) * (1 - beta**m + c)
        Var[T_fp] <= n*m*q*rho*(1-rho) * (beta**m + c)

    where c = m*(q-1) * (1-rho)**(q-1) * beta**(m-1) accounts for pairs
    of items meeting in one pool.
    """
    if scenario.nc != 0:
        raise NotApplicableError("variance bounds hold only for nc = 0")
    if not scenario.noise.noiseless:
        raise NotApplicableError("variance bounds hold only for noiseless tests")
    n = scenario._require_n()
    rho, q, m = scenario.rho, scenario.q, scenario.m
    beta = 1.0 - (1.0 - rho) ** (q - 1)
    shared_pair_term = m * (q - 1) * (1.0 - rho) ** (q - 1) * beta ** (m - 1)
    scale = n * m * q * rho * (1.0 - rho)
    return VarianceBounds(
        positives=scale * (1.0 - beta ** m + shared_pair_term),
        false_positives=scale * (beta ** m + shared_pair_term),
    )


def pivotal_probability(scenario: ScenarioParams) -> float:
    """P(one infection, in a shared pool, flips a healthy item's decode).

    For two items sharing a pool under exact tests: the flip happens when
    the other q - 2 members of the shared pool are healthy, the target
    item is healthy, and each of its other m - 1 pools already carries an
    infection.  Equals
        (1 - rho)**(q-1) * (1 - (1 - rho)**(q-1)) ** (m-1).
    """
    if not scenario.noise.noiseless:
        raise NotApplicableError("pivotal probability is defined for noiseless tests")
    rho, q, m = scenario.rho, scenario.q, scenario.m
    quiet = (1.0 - rho) ** (q - 1)
    return quiet * (1.0 - quiet) ** (m - 1)


@dataclass(frozen=True)
class TuningResult:
    """Outcome of multiplicity tuning: the integer m, the real-valued
    bound it was rounded from, and the posterior error m achieves."""

    m: int
    raw_bound: float
    type_one: float


def min_multiplicity(
    rho: float,
    q: int,
    noise: NoiseModel,
    epsilon: float,
    cap: int | None = None,
) -> TuningResult:
    """Smallest multiplicity whose nc = 0 posterior false-positive rate
    is at most epsilon.

    The real-valued bound

        log((1 - rho)/rho * (1/epsilon - 1)) / log((1 - p_fn*gamma_1)/(1 - gamma_1))

    locates the crossing; the returned integer is verified against the
    closed form directly, so rounding of the bound can never produce an m
    that misses the budget.  Raises InfeasibleError when no m up to
    ``cap`` (default q + 1) suffices.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"prevalence must lie strictly inside (0, 1), got {rho}")
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie strictly inside (0, 1), got {epsilon}")
    if q < 2:
        raise DomainError(f"pool size must be at least 2, got {q}")
    if cap is None:
        cap = q + 1
    if cap < 1:
        raise DomainError(f"cap must be at least 1, got {cap}")

    gamma_1 = gamma(1, ScenarioParams(rho=rho, q=q, m=1, noise=noise))
    if gamma_1 >= 1.0:
        raise DomainError("gamma_1 must be below 1 for tuning; the tests carry no signal")
    ratio = (1.0 - noise.p_fn * gamma_1) / (1.0 - gamma_1)
    numerator = math.log(((1.0 - rho) / rho) * (1.0 / epsilon - 1.0))
    raw_bound = numerator / math.log(ratio) if ratio > 1.0 else math.inf

    for m in range(1, cap + 1):
        scenario = ScenarioParams(rho=rho, q=q, m=m, nc=0, noise=noise)
        try:
            achieved = type_one(scenario)
        except UndefinedResultError:
            # Nothing is ever flagged positive, so no false positives occur.
            achieved = 0.0
        if achieved <= epsilon:
            return TuningResult(m=m, raw_bound=raw_bound, type_one=achieved)
    raise InfeasibleError(
        f"no multiplicity up to {cap} meets epsilon={epsilon} (raw bound {raw_bound})",
        raw_bound=raw_bound,
    )


def threshold_disjunct(q: int, m: int) -> float:
    """Prevalence below which expected infections stay under the design's
    guaranteed-exact decoding capacity: (m - 1) / q**2."""
    if q < 2:
        raise DomainError(f"pool size must be at least 2, got {q}")
    if m < 1:
        raise DomainError(f"multiplicity must be at least 1, got {m}")
    return (m - 1) / (q * q)


def binary_entropy(x: float) -> float:
    """H(x) = -x log2(x) - (1 - x) log2(1 - x), with H(0) = H(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def threshold_info(q: int, m: int) -> float:
    """Prevalence where the design's m/q bits per item match the entropy
    of the infection vector: the unique x in (0, 1/2] with H(x) = m/q.

    Solved by bisection; no solution exists when m/q exceeds 1.
    """
    if q < 2:
        raise DomainError(f"pool size must be at least 2, got {q}")
    if m < 1:
        raise DomainError(f"multiplicity must be at least 1, got {m}")
    target = m / q
    if target > 1.0:
        raise NoSolutionError(f"m/q = {m}/{q} exceeds 1 bit; H(x) cannot reach it")
    if target == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if binary_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13:
            break
    return (lo + hi) / 2.0


class ConfusionStats(NamedTuple):
    """Empirical rates from a confusion table; entries with an empty
    conditioning class are None."""

    sensitivity: float | None
    specificity: float | None
    type_one: float | None
    type_two: float | None


def confusion_stats(
    true_positives: int,
    false_negatives: int,
    false_positives: int,
    true_negatives: int,
) -> ConfusionStats:
    counts = (true_positives, false_negatives, false_positives, true_negatives)
    if any(c < 0 for c in counts):
        raise DomainError(f"confusion counts must be non-negative, got {counts}")

    def ratio(num: int, den: int) -> float | None:
        return num / den if den > 0 else None

    return ConfusionStats(
        sensitivity=ratio(true_positives, true_positives + false_negatives),
        specificity=ratio(true_negatives, true_negatives + false_positives),
        type_one=ratio(false_positives, false_positives + true_positives),
        type_two=ratio(false_negatives, false_negatives + true_negatives),
    )


@dataclass(frozen=True)
class AnalyticReport:
    """All closed-form statistics for one scenario in one place.

    Fields that do not exist for the scenario are None: the posteriors
    when their conditioning event has zero mass, the count statistics
    when n is unset, the variance bounds away from noiseless nc = 0, and
    the information threshold when m exceeds q.
    """

    gamma_1: float
    sensitivity: float
    specificity: float
    type_one: float | None
    type_two: float | None
    expected_positives: float | None
    expected_false_positives: float | None
    expected_false_negatives: float | None
    var_positives_bound: float | None
    var_false_positives_bound: float | None
    beta: float
    rho_disjunct: float
    rho_info: float | None


def analytic_report(scenario: ScenarioParams) -> AnalyticReport:
    try:
        t1 = type_one(scenario)
    except UndefinedResultError:
        t1 = None
    try:
        t2 = type_two(scenario)
    except UndefinedResultError:
        t2 = None
    expected = None
    if scenario.n is not None:
        expected = expected_counts(scenario)
    bounds = None
    if scenario.n is not None:
        try:
            bounds = variance_bounds(scenario)
        except NotApplicableError:
            bounds = None
    try:
        rho_info = threshold_info(scenario.q, scenario.m)
    except NoSolutionError:
        rho_info = None
    return AnalyticReport(
        gamma_1=gamma(1, scenario),
        sensitivity=sensitivity(scenario),
        specificity=specificity(scenario),
        type_one=t1,
        type_two=t2,
        expected_positives=expected.positives if expected else None,
        expected_false_positives=expected.false_positives if expected else None,
        expected_false_negatives=expected.false_negatives if expected else None,
        var_positives_bound=bounds.positives if bounds else None,
        var_false_positives_bound=bounds.false_positives if bounds else None,
        beta=1.0 - (1.0 - scenario.rho) ** (scenario.q - 1),
        rho_disjunct=threshold_disjunct(scenario.q, scenario.m),
        rho_info=rho_info,
    )
