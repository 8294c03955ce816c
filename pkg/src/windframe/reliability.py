"""Stratified rare-event estimation over wind speed intervals.

The wind-speed axis is partitioned into intervals of equal squared-speed
width (WSIs). Standard Monte Carlo runs inside each stratum; the annual
exceedance rate of a limit state combines per-stratum failure fractions with
stratum probabilities from the fitted speed distribution. Sample allocation
minimizes the estimator variance using pilot failure-probability estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize, stats

from .errors import EstimationError, FitError, InputError

DRIFT_LIMIT_PREFIX = "peak_drift_gt_"
RESIDUAL_LIMIT_PREFIX = "residual_drift_gt_"


@dataclass(frozen=True)
class LimitStateCatalog:
    """Named boolean limit states plus drift thresholds evaluated per sample.

    ``peak_drift_thresholds`` / ``residual_drift_thresholds`` are story-drift
    ratios (e.g. 0.01 for 1%); each threshold becomes its own limit state.
    """

    peak_drift_thresholds: tuple[float, ...] = (0.01, 0.035)
    residual_drift_thresholds: tuple[float, ...] = (0.0025, 0.005)

    def names(self) -> list[str]:
        base = [
            "system_collapse",
            "component_first_yield",
            "system_first_yield",
            "component_buckling",
            "component_fracture",
        ]
        base += [f"{DRIFT_LIMIT_PREFIX}{t:g}" for t in self.peak_drift_thresholds]
        base += [f"{RESIDUAL_LIMIT_PREFIX}{t:g}" for t in self.residual_drift_thresholds]
        return base

    def evaluate(self, flags: Mapping[str, bool], peak_drift: float, residual_drift: float) -> dict[str, bool]:
        out = {
            "system_collapse": bool(flags.get("system_collapse", False)),
            "component_first_yield": bool(flags.get("component_first_yield", False)),
            "system_first_yield": bool(flags.get("system_first_yield", False)),
            "component_buckling": bool(flags.get("component_buckling", False)),
            "component_fracture": bool(flags.get("component_fracture", False)),
        }
        for t in self.peak_drift_thresholds:
            out[f"{DRIFT_LIMIT_PREFIX}{t:g}"] = bool(peak_drift > t)
        for t in self.residual_drift_thresholds:
            out[f"{RESIDUAL_LIMIT_PREFIX}{t:g}"] = bool(residual_drift > t)
        return out


@dataclass(frozen=True)
class StratifiedPlan:
    """WSI bounds (last upper bound inf), stratum probabilities and allocations."""

    lower: np.ndarray
    upper: np.ndarray
    probabilities: np.ndarray
    allocations: np.ndarray
    pilot_size: int = 0

    @property
    def n_strata(self) -> int:
        return len(self.lower)

    def stratum_of(self, v: float) -> int:
        """Index of the WSI containing speed v."""
        if v < 0:
            raise InputError(f"negative wind speed {v}")
        idx = int(np.searchsorted(self.upper[:-1], v, side="right"))
        return idx


@dataclass(frozen=True)
class SampleOutcome:
    """One row of the result ledger."""

    sample_id: int
    stratum: int
    v_h: float
    alpha: float
    limit_states: Mapping[str, bool]
    peak_drift: float
    residual_drift: float
    mechanism: str = "none"
    failure_height: float = float("nan")
    runtime_s: float = 0.0
    infrastructure_failure: bool = False


@dataclass(frozen=True)
class RateEstimate:
    rate: float
    variance_pf: float
    cov: float
    beta: float


@dataclass(frozen=True)
class EstimateResult:
    nu: float
    horizon_years: float
    per_limit_state: Mapping[str, RateEstimate]


@dataclass(frozen=True)
class FragilityFit:
    """Lognormal fragility parameters, overall and per 45-degree sector."""

    median: float
    dispersion: float
    sector_fits: tuple[tuple[float, float] | None, ...] = ()

    def probability(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        with np.errstate(divide="ignore"):
            z = (np.log(v) - math.log(self.median)) / self.dispersion
        return stats.norm.cdf(z)


def partition_wsi(v_top_lower: float, n_w: int) -> tuple[np.ndarray, np.ndarray]:
    """Bounds of n_w intervals with equal squared-speed widths up to v_top_lower.

    Returns (lower, upper) arrays; lower[0] = 0, upper[-1] = inf. Interior
    bound i is sqrt(i * v_top_lower**2 / (n_w - 1)).
    """
    if not v_top_lower > 0:
        raise InputError("v_top_lower must be positive")
    if n_w < 2:
        raise InputError("need at least two strata")
    i = np.arange(1, n_w)
    interior = np.sqrt(i * v_top_lower**2 / (n_w - 1))
    lower = np.concatenate(([0.0], interior))
    upper = np.concatenate((interior, [np.inf]))
    return lower, upper


def strata_probabilities(speed_cdf: Callable[[np.ndarray], np.ndarray],
                         lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """P(E_i) = F(upper_i) - F(lower_i) from the fitted marginal speed CDF."""
    hi = np.where(np.isinf(upper), 1.0, speed_cdf(np.where(np.isinf(upper), 0.0, upper)))
    lo = speed_cdf(lower)
    return hi - lo


def _allocation_variance(weights_a: np.ndarray, n: np.ndarray) -> float:
    # A_i = p(1-p) P^2 per stratum; Var = sum A_i / n_i
    with np.errstate(divide="ignore"):
        terms = np.where(weights_a > 0, weights_a / n, 0.0)
    return float(np.sum(terms))


def allocate_samples(total: int, pilot_p: Sequence[float], probabilities: Sequence[float],
                     n_min: int = 5) -> np.ndarray:
    """Integer allocation minimizing the stratified variance, floor n_min each.

    Continuous optimum is n_i proportional to P_i * sqrt(p_i (1 - p_i));
    rounded by largest remainder, then improved by pairwise moves until no
    single-sample move reduces the plug-in variance (the objective is
    separable convex, so this terminates at the integer optimum).
    Strata with pilot p in {0, 1} carry zero plug-in variance and keep the
    floor unless every stratum is degenerate, in which case the remainder is
    spread proportionally to P_i.
    """
    p = np.asarray(pilot_p, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise InputError("pilot estimates must lie in [0, 1]")
    n_w = len(p)
    if total < n_w * n_min:
        raise InputError(f"total {total} cannot cover {n_w} strata at floor {n_min}")

    weights = probs * np.sqrt(p * (1.0 - p))
    n = np.full(n_w, n_min, dtype=int)
    remaining = total - n_min * n_w
    if weights.sum() <= 0:
        share = probs / probs.sum()
    else:
        share = weights / weights.sum()
    extra = np.floor(share * remaining).astype(int)
    n += extra
    remainder = remaining - int(extra.sum())
    if remainder > 0:
        frac = share * remaining - extra
        order = np.argsort(-frac, kind="stable")
        n[order[:remainder]] += 1

    # Exchange pass: move one sample at a time while variance strictly drops.
    a = p * (1.0 - p) * probs**2
    for _ in range(10 * total):
        gain = np.where(a > 0, a / (n * (n + 1.0)), 0.0)           # add one
        loss = np.where(n > n_min, a / (n * (n - 1.0)), np.inf)    # remove one
        i_add = int(np.argmax(gain))
        i_rem = int(np.argmin(loss))
        if i_add == i_rem or gain[i_add] <= loss[i_rem] * (1 + 1e-12):
            break
        n[i_add] += 1
        n[i_rem] -= 1
    assert n.sum() == total
    return n


def proportional_allocation(total: int, probabilities: Sequence[float], n_min: int = 5) -> np.ndarray:
    """Largest-remainder allocation proportional to stratum probabilities."""
    probs = np.asarray(probabilities, dtype=float)
    n_w = len(probs)
    if total < n_w * n_min:
        raise InputError(f"total {total} cannot cover {n_w} strata at floor {n_min}")
    n = np.full(n_w, n_min, dtype=int)
    remaining = total - n_min * n_w
    share = probs / probs.sum()
    extra = np.floor(share * remaining).astype(int)
    n += extra
    remainder = remaining - int(extra.sum())
    if remainder > 0:
        frac = share * remaining - extra
        order = np.argsort(-frac, kind="stable")
        n[order[:remainder]] += 1
    return n


def stratified_variance(p: Sequence[float], probabilities: Sequence[float],
                        n: Sequence[int]) -> float:
    """Plug-in variance of the conditional-failure-probability estimator."""
    p = np.asarray(p, dtype=float)
    probs = np.asarray(probabilities, dtype=float)
    n = np.asarray(n, dtype=float)
    return _allocation_variance(p * (1 - p) * probs**2, n)


def reliability_index(annual_rate: float, horizon_years: float) -> float:
    """Standard-normal index of the horizon non-failure probability.

    Identifies the annual failure probability with the annual rate, valid for
    small rates.
    """
    if annual_rate < 0:
        raise InputError("annual rate must be nonnegative")
    if annual_rate >= 1.0:
        return -math.inf
    p_nonfail = (1.0 - annual_rate) ** horizon_years
    return float(stats.norm.ppf(p_nonfail))


def estimate_rates(outcomes: Sequence[SampleOutcome], plan: StratifiedPlan, nu: float,
                   catalog: LimitStateCatalog, horizon_years: float = 50.0) -> EstimateResult:
    """Annual exceedance rate, variance, COV and reliability index per limit state."""
    usable = [o for o in outcomes if not o.infrastructure_failure]
    names = catalog.names()
    counts = np.zeros(plan.n_strata, dtype=int)
    fails = {name: np.zeros(plan.n_strata, dtype=int) for name in names}
    for o in usable:
        counts[o.stratum] += 1
        for name in names:
            if o.limit_states.get(name, False):
                fails[name][o.stratum] += 1
    empty = np.nonzero(counts == 0)[0]
    if len(empty):
        raise EstimationError(f"no usable outcomes in strata {empty.tolist()}")

    per_ls = {}
    for name in names:
        p_i = fails[name] / counts
        pf = float(np.sum(p_i * plan.probabilities))
        var = stratified_variance(p_i, plan.probabilities, counts)
        rate = nu * pf
        cov = math.sqrt(var) / pf if pf > 0 else math.inf
        beta = reliability_index(rate, horizon_years) if rate > 0 else math.inf
        per_ls[name] = RateEstimate(rate=rate, variance_pf=var, cov=cov, beta=beta)
    return EstimateResult(nu=nu, horizon_years=horizon_years, per_limit_state=per_ls)


def wsi_centers(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Fragility-fitting abscissas: interval midpoints; the unbounded last
    stratum uses its lower bound plus half the penultimate stratum width."""
    centers = 0.5 * (lower + upper)
    if np.isinf(upper[-1]):
        prev_width = upper[-2] - lower[-2]
        centers[-1] = lower[-1] + 0.5 * prev_width
    return centers


def _neg_log_likelihood(params: np.ndarray, centers: np.ndarray,
                        failures: np.ndarray, trials: np.ndarray) -> float:
    log_median, log_disp = params
    disp = math.exp(log_disp)
    z = (np.log(centers) - log_median) / disp
    p = stats.norm.cdf(z)
    p = np.clip(p, 1e-12, 1 - 1e-12)
    ll = failures * np.log(p) + (trials - failures) * np.log1p(-p)
    return -float(np.sum(ll))


def fit_fragility(centers: Sequence[float], failures: Sequence[int], trials: Sequence[int],
                  sector_data: Sequence[tuple[Sequence[int], Sequence[int]]] | None = None,
                  ) -> FragilityFit:
    """Binomial MLE of a lognormal fragility curve at the WSI centers.

    ``sector_data`` optionally holds (failures, trials) per 45-degree wind
    sector to fit a fragility surface; sectors with degenerate data yield
    ``None`` entries rather than failing the overall fit.
    """
    centers = np.asarray(centers, dtype=float)
    failures = np.asarray(failures, dtype=float)
    trials = np.asarray(trials, dtype=float)
    if len(centers) < 3:
        raise FitError("need at least three strata with defined centers")
    if np.any(failures > trials) or np.any(failures < 0):
        raise InputError("failures must lie in [0, trials]")
    mask = trials > 0
    p_hat = np.zeros_like(centers)
    p_hat[mask] = failures[mask] / trials[mask]
    if not np.any((p_hat > 0) & (p_hat < 1) & mask):
        if np.all(p_hat[mask] == 0) or np.all(p_hat[mask] == 1):
            raise FitError("all-zero or all-one failure data cannot identify a fragility curve")

    median0 = _initial_median(centers[mask], p_hat[mask])
    x0 = np.array([math.log(median0), math.log(0.3)])
    res = optimize.minimize(
        _neg_log_likelihood, x0, args=(centers[mask], failures[mask], trials[mask]),
        method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000},
    )
    median = float(math.exp(res.x[0]))
    dispersion = float(math.exp(res.x[1]))

    sectors: list[tuple[float, float] | None] = []
    if sector_data is not None:
        for sf, st in sector_data:
            try:
                fit = fit_fragility(centers, sf, st)
                sectors.append((fit.median, fit.dispersion))
            except (FitError, InputError):
                sectors.append(None)
    return FragilityFit(median=median, dispersion=dispersion, sector_fits=tuple(sectors))


def _initial_median(centers: np.ndarray, p_hat: np.ndarray) -> float:
    crossing = np.nonzero(p_hat >= 0.5)[0]
    if len(crossing):
        return float(centers[crossing[0]])
    active = np.nonzero(p_hat > 0)[0]
    if len(active):
        return float(centers[active[-1]] * 1.5)
    return float(centers[-1] * 2.0)
