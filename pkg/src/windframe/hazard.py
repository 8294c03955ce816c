"""Site wind climate: speed marginal, direction density, and their dependence.

Event data are (speed, direction) pairs of 1-hour mean storm maxima at the
building top height. The speed marginal is a Weibull fitted by maximum
likelihood, the direction marginal a von Mises kernel density, and the
dependence a kernel copula density evaluated on a unit-square grid with
marginals renormalized to uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats

from .errors import FitError, InputError, ModelStateError

TWO_PI = 2.0 * math.pi

DIRECTION_GRID_POINTS = 720       # trapezoid rule resolution for the CCDF integral
COPULA_GRID = 128


@dataclass(frozen=True)
class DirectionalWindRecord:
    """Observed storm events: speeds [m/s] and directions [rad, wrapped)."""

    speeds: np.ndarray
    directions: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.speeds, dtype=float)
        d = np.mod(np.asarray(self.directions, dtype=float), TWO_PI)
        if s.ndim != 1 or s.shape != d.shape:
            raise InputError("speeds and directions must be 1-D arrays of equal length")
        if np.any(s < 0):
            raise InputError("negative wind speed in record")
        object.__setattr__(self, "speeds", s)
        object.__setattr__(self, "directions", d)

    def __len__(self) -> int:
        return len(self.speeds)


def load_directional_record(path: str | Path) -> DirectionalWindRecord:
    """Read delimited text: header line, then speed [m/s] and direction [deg]."""
    path = Path(path)
    speeds, dirs = [], []
    with path.open() as fh:
        header = fh.readline()
        if not header.strip():
            raise InputError(f"{path}: empty file")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            if len(parts) < 2:
                raise InputError(f"{path}:{lineno}: expected two columns")
            try:
                s = float(parts[0])
                d = float(parts[1])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if s < 0:
                raise InputError(f"{path}:{lineno}: negative speed {s}")
            speeds.append(s)
            dirs.append(math.radians(d))
    return DirectionalWindRecord(np.array(speeds), np.array(dirs))


@dataclass(frozen=True)
class WindIntensity:
    v_h: float
    alpha: float

    def __post_init__(self):
        if self.v_h < 0:
            raise InputError("wind speed must be nonnegative")
        object.__setattr__(self, "alpha", float(np.mod(self.alpha, TWO_PI)))


class VonMisesKde:
    """Mixture of von Mises kernels centered at the data angles."""

    def __init__(self, angles: np.ndarray, concentration: float):
        self.angles = np.asarray(angles, dtype=float)
        self.concentration = float(concentration)
        self._log_norm = math.log(TWO_PI) + math.log(special.i0e(self.concentration)) + self.concentration

    def pdf(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        # exp(kappa cos(t - a)) / (2 pi I0(kappa)), averaged over data angles;
        # chunked so large records do not allocate a full outer-product matrix
        total = np.zeros_like(theta)
        for start in range(0, len(self.angles), 4096):
            block = self.angles[start:start + 4096]
            total += np.exp(self.concentration * np.cos(theta[:, None] - block[None, :])
                            - self._log_norm).sum(axis=1)
        return total / len(self.angles)

    def cdf_grid(self, n: int = DIRECTION_GRID_POINTS) -> tuple[np.ndarray, np.ndarray]:
        """(theta grid, CDF values) by trapezoid integration from 0."""
        theta = np.linspace(0.0, TWO_PI, n + 1)
        pdf = self.pdf(theta)
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(theta))))
        return theta, cdf


def taylor_concentration(angles: np.ndarray) -> float:
    """Plug-in kernel concentration (Taylor 2008 rule for von Mises KDE)."""
    n = len(angles)
    c, s = np.cos(angles).mean(), np.sin(angles).mean()
    r_bar = math.hypot(c, s)
    kappa_hat = _solve_mean_resultant(r_bar)
    if kappa_hat < 1e-6:
        return 1e-6
    # evaluated in log space; I_nu(x) = ive(nu, x) * exp(x)
    log_num = (math.log(3.0 * n) + 2.0 * math.log(kappa_hat)
               + math.log(special.ive(2, 2.0 * kappa_hat)) + 2.0 * kappa_hat)
    log_den = (math.log(4.0) + 0.5 * math.log(math.pi)
               + 2.0 * (math.log(special.i0e(kappa_hat)) + kappa_hat))
    return float(min(math.exp(0.4 * (log_num - log_den)), 1e8))


def _solve_mean_resultant(r_bar: float) -> float:
    # A(kappa) = I1/I0 = r_bar, Banerjee-style approximation then refinement
    if r_bar <= 0:
        return 0.0
    if r_bar >= 1:
        return 1e6
    kappa = r_bar * (2.0 - r_bar**2) / (1.0 - r_bar**2)
    for _ in range(25):
        a = special.i1e(kappa) / special.i0e(kappa)
        # derivative of A: 1 - A/kappa - A^2
        da = 1.0 - a / max(kappa, 1e-12) - a * a
        if abs(da) < 1e-14:
            break
        step = (a - r_bar) / da
        kappa = max(kappa - step, 1e-12)
        if abs(step) < 1e-12 * max(1.0, kappa):
            break
    return kappa


@dataclass
class WindClimateModel:
    """Fitted joint speed/direction model plus the storm occurrence rate."""

    nu: float
    weibull_shape: float
    weibull_scale: float
    direction_kde: VonMisesKde
    copula_grid: np.ndarray | None = None      # density on unit square, cell midpoints
    _direction_cdf: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    _pdf_cache: np.ndarray | None = field(default=None, repr=False)
    _curve_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.nu <= 0 or self.weibull_shape <= 0 or self.weibull_scale <= 0:
            raise InputError("nu and Weibull parameters must be positive")

    # -- speed marginal ----------------------------------------------------
    def speed_cdf(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return -np.expm1(-np.power(np.maximum(v, 0.0) / self.weibull_scale, self.weibull_shape))

    def speed_quantile(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return self.weibull_scale * np.power(-np.log1p(-q), 1.0 / self.weibull_shape)

    def hazard_rate(self, v) -> np.ndarray:
        """Annual rate of exceeding v: nu * (1 - F(v))."""
        return self.nu * (1.0 - self.speed_cdf(v))

    def speed_for_aer(self, target_rate: float) -> float:
        """Speed whose annual exceedance rate equals target_rate (exact inversion)."""
        if not (0 < target_rate < self.nu):
            raise InputError(f"target rate must lie in (0, nu={self.nu})")
        return float(self.speed_quantile(1.0 - target_rate / self.nu))

    def sample_speed_in_interval(self, lo: float, hi: float, rng: np.random.Generator) -> float:
        """Inverse-CDF draw of the speed conditional on lo <= v < hi."""
        qlo = float(self.speed_cdf(lo))
        qhi = 1.0 if math.isinf(hi) else float(self.speed_cdf(hi))
        u = rng.uniform(qlo, qhi)
        return float(self.speed_quantile(min(u, 1.0 - 1e-16)))

    # -- direction ----------------------------------------------------------
    def _dir_cdf(self) -> tuple[np.ndarray, np.ndarray]:
        if self._direction_cdf is None:
            object.__setattr__(self, "_direction_cdf", self.direction_kde.cdf_grid())
        return self._direction_cdf

    def conditional_direction_ccdf(self, alpha: float, v: float) -> float:
        """P(direction > alpha | speed = v) by quadrature of copula * f_alpha."""
        theta, g = self._conditional_ccdf_curve(v)
        return float(np.interp(alpha, theta, g))

    def _conditional_ccdf_curve(self, v: float) -> tuple[np.ndarray, np.ndarray]:
        if self.copula_grid is None:
            raise ModelStateError("copula density has not been fitted")
        cached = self._curve_cache.get(v)
        if cached is not None:
            return cached
        theta, f_cdf = self._dir_cdf()
        if self._pdf_cache is None:
            object.__setattr__(self, "_pdf_cache", self.direction_kde.pdf(theta))
        f_pdf = self._pdf_cache
        u_v = float(np.clip(self.speed_cdf(v), 1e-9, 1 - 1e-9))
        c = _interp_copula(self.copula_grid, f_cdf / max(f_cdf[-1], 1e-300), u_v)
        integrand = c * f_pdf
        # CCDF: integral from alpha to 2*pi
        rev = np.concatenate(([0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(theta))))
        g = rev[-1] - rev
        if len(self._curve_cache) > 64:
            self._curve_cache.clear()
        self._curve_cache[v] = (theta, g)
        return theta, g

    def sample_direction_given_speed(self, v: float, rng: np.random.Generator) -> float:
        theta, g = self._conditional_ccdf_curve(v)
        total = g[0]
        cdf = 1.0 - g / total if total > 0 else np.linspace(0, 1, len(theta))
        u = rng.random()
        return float(np.interp(u, cdf, theta))


def _interp_copula(grid: np.ndarray, u_axis_values: np.ndarray, u_v: float) -> np.ndarray:
    """Linear interpolation of the copula density at (u_alpha(theta), u_v)."""
    m = grid.shape[0]
    cell = 1.0 / m
    mids = (np.arange(m) + 0.5) * cell

    jv = np.clip((u_v - mids[0]) / cell, 0.0, m - 1.0)
    j0 = int(np.floor(jv))
    j1 = min(j0 + 1, m - 1)
    wj = jv - j0
    col = (1 - wj) * grid[:, j0] + wj * grid[:, j1]

    iu = np.clip((u_axis_values - mids[0]) / cell, 0.0, m - 1.0)
    i0 = np.floor(iu).astype(int)
    i1 = np.minimum(i0 + 1, m - 1)
    wi = iu - i0
    return (1 - wi) * col[i0] + wi * col[i1]


def fit_speed_marginal(record: DirectionalWindRecord) -> tuple[float, float]:
    """Maximum-likelihood Weibull (shape, scale) with the location fixed at 0."""
    if len(record) < 30:
        raise FitError(f"need at least 30 events, got {len(record)}")
    data = record.speeds
    if np.ptp(data) <= 0:
        raise FitError("degenerate speed data (all values equal)")
    shape, _, scale = stats.weibull_min.fit(data, floc=0.0)
    if not (shape > 0 and scale > 0 and np.isfinite(shape) and np.isfinite(scale)):
        raise FitError("Weibull fit did not converge to positive parameters")
    return float(shape), float(scale)


def fit_direction_density(record: DirectionalWindRecord,
                          concentration: float | None = None) -> VonMisesKde:
    """Circular kernel density of the direction marginal."""
    if len(record) < 30:
        raise FitError(f"need at least 30 events, got {len(record)}")
    if concentration is None:
        concentration = taylor_concentration(record.directions)
    if concentration <= 0:
        raise InputError("kernel concentration must be positive")
    return VonMisesKde(record.directions, concentration)


def fit_copula_density(record: DirectionalWindRecord, grid: int = COPULA_GRID,
                       bandwidth_factor: float = 1.0) -> np.ndarray:
    """Kernel copula density on a unit-square grid with uniform marginals.

    Pseudo-observations by ranks; Gaussian KDE in the normal-scores domain;
    back-transform to the copula scale; then alternate row/column
    renormalization so both grid marginals integrate to one.
    """
    n = len(record)
    if n < 30:
        raise FitError(f"need at least 30 events, got {n}")
    u = (stats.rankdata(record.speeds) - 0.5) / n
    w = (stats.rankdata(record.directions) - 0.5) / n
    z = stats.norm.ppf(np.column_stack([w, u]))      # rows: direction axis first
    kde = stats.gaussian_kde(z.T, bw_method="scott")
    if bandwidth_factor != 1.0:
        kde.set_bandwidth(kde.factor * bandwidth_factor)

    mids = (np.arange(grid) + 0.5) / grid
    zg = stats.norm.ppf(mids)
    za, zv = np.meshgrid(zg, zg, indexing="ij")
    pts = np.vstack([za.ravel(), zv.ravel()])
    dens = kde(pts).reshape(grid, grid)
    dens /= stats.norm.pdf(za) * stats.norm.pdf(zv)

    # enforce uniform marginals on the evaluation grid
    for _ in range(200):
        rows = dens.mean(axis=1, keepdims=True)
        dens /= np.maximum(rows, 1e-300)
        cols = dens.mean(axis=0, keepdims=True)
        dens /= np.maximum(cols, 1e-300)
        if (np.abs(dens.mean(axis=1) - 1).max() < 1e-9
                and np.abs(dens.mean(axis=0) - 1).max() < 1e-9):
            break
    return dens


def independence_copula(grid: int = COPULA_GRID) -> np.ndarray:
    return np.ones((grid, grid))


def fit_climate(record: DirectionalWindRecord, nu: float,
                concentration: float | None = None,
                copula_grid: int = COPULA_GRID) -> WindClimateModel:
    """Fit all three components and assemble the climate model."""
    shape, scale = fit_speed_marginal(record)
    kde = fit_direction_density(record, concentration)
    copula = fit_copula_density(record, grid=copula_grid)
    return WindClimateModel(nu=nu, weibull_shape=shape, weibull_scale=scale,
                            direction_kde=kde, copula_grid=copula)
