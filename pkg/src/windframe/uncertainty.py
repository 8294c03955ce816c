"""Basic random variables and seed-deterministic sampling of analysis realizations.

One realization bundles everything that varies between Monte Carlo samples
besides the wind intensity pair: gravity load factors, wind-load model
multipliers, per-section material draws, per-member camber amplitudes, the
global damping ratio, and the spectral phase vector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidSpecError

FAMILIES = ("normal", "lognormal", "gamma", "truncated-normal", "uniform-circular")

# Deterministic steel-model constants (not sampled).
FATIGUE_SLOPE_M = -0.3
ISO_HARDENING_A2 = 1.0
ISO_HARDENING_A4 = 1.0
MP_TRANSITION_CR1 = 0.925
MP_TRANSITION_CR2 = 0.15


@dataclass(frozen=True)
class RandomVariableSpec:
    """Distribution of one basic random variable, parameterized by mean and COV.

    ``mean`` is either an absolute physical value or, when ``scaling_reference``
    is set, a multiplier on that nominal quantity (e.g. 1.05 on D_n).
    """

    name: str
    family: str
    mean: float
    cov: float
    lower_bound: float | None = None
    upper_bound: float | None = None
    scaling_reference: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidSpecError(f"{self.name}: unknown family {self.family!r}")
        if self.family != "uniform-circular":
            if not (self.cov > 0):
                raise InvalidSpecError(f"{self.name}: cov must be > 0, got {self.cov}")
        if self.family in ("lognormal", "gamma") and not (self.mean > 0):
            raise InvalidSpecError(f"{self.name}: {self.family} requires mean > 0")
        if self.family == "truncated-normal":
            lo = -math.inf if self.lower_bound is None else self.lower_bound
            hi = math.inf if self.upper_bound is None else self.upper_bound
            if not lo < hi:
                raise InvalidSpecError(f"{self.name}: requires lower_bound < upper_bound")


def default_catalog() -> dict[str, RandomVariableSpec]:
    """Catalog of the basic random variables used in every sample.

    Gravity loads (multipliers on nominals), wind load model factors
    (truncated at zero), and structural properties (per unique section,
    except camber per member and damping global).

    Note: the 0.075 COV is carried by w1 here while w2/w3 use 0.05; some
    sources attach the record-length dependent 0.075 to w2 instead. Override
    via run-config if the alternative assignment is wanted. The hardening
    ratio COV of 0.01 is intentionally small.
    """
    specs = [
        RandomVariableSpec("D", "normal", 1.05, 0.10, scaling_reference="D_n"),
        RandomVariableSpec("L_apt", "gamma", 0.24, 0.60, scaling_reference="L_rn"),
        RandomVariableSpec("w1", "truncated-normal", 1.0, 0.075, lower_bound=0.0),
        RandomVariableSpec("w2", "truncated-normal", 1.0, 0.05, lower_bound=0.0),
        RandomVariableSpec("w3", "truncated-normal", 1.0, 0.05, lower_bound=0.0),
        RandomVariableSpec("E", "lognormal", 200e9, 0.04),
        RandomVariableSpec("F_y", "lognormal", 1.1, 0.06, scaling_reference="F_yn"),
        RandomVariableSpec("b", "lognormal", 0.001, 0.01),
        RandomVariableSpec("eps0", "lognormal", 0.077, 0.161),
        RandomVariableSpec("R0", "truncated-normal", 20.0, 0.166, lower_bound=15.0, upper_bound=25.0),
        RandomVariableSpec("a1", "lognormal", 0.01, 2.0),
        RandomVariableSpec("a3", "lognormal", 0.02, 0.5),
        RandomVariableSpec("delta", "normal", 0.000556, 0.77, scaling_reference="L"),
        RandomVariableSpec("zeta", "lognormal", 0.015, 0.4),
    ]
    return {s.name: s for s in specs}


STRUCTURAL_PER_SECTION = ("E", "F_y", "b", "eps0", "R0", "a1", "a3")


@dataclass(frozen=True)
class Topology:
    """Section/member inventory needed to size a realization.

    ``members`` maps member id -> length [m]; material draws are shared
    within a section designation and independent across designations.
    """

    sections: tuple[str, ...]
    members: Mapping[str, float]
    nominal_fy: float = 345e6


@dataclass(frozen=True)
class SectionMaterialDraw:
    E: float
    Fy: float
    b: float
    eps0: float
    R0: float
    a1: float
    a3: float


@dataclass(frozen=True)
class UncertaintyRealization:
    """One complete draw of all non-intensity random variables."""

    dead_factor: float
    live_factor: float
    w1: float
    w2: float
    w3: float
    materials: Mapping[str, SectionMaterialDraw]
    camber: Mapping[str, float]
    damping_ratio: float
    phases: np.ndarray = field(repr=False)

    def wind_factor(self) -> float:
        return self.w1 * self.w2 * self.w3

    def to_text(self) -> str:
        """Structured-text dump for audit; deterministic field order."""
        payload = {
            "dead_factor": self.dead_factor,
            "live_factor": self.live_factor,
            "w1": self.w1,
            "w2": self.w2,
            "w3": self.w3,
            "damping_ratio": self.damping_ratio,
            "materials": {k: asdict(v) for k, v in sorted(self.materials.items())},
            "camber": dict(sorted(self.camber.items())),
            "phases": [float(p) for p in np.asarray(self.phases).ravel()],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def moments_to_lognormal(mean: float, cov: float) -> tuple[float, float]:
    """Exact (log-mean, log-std) reproducing the given mean and COV."""
    if not (mean > 0) or not (cov > 0):
        raise InvalidSpecError(f"lognormal requires mean > 0 and cov > 0, got {mean}, {cov}")
    log_std = math.sqrt(math.log1p(cov * cov))
    log_mean = math.log(mean) - 0.5 * log_std * log_std
    return log_mean, log_std


def moments_to_gamma(mean: float, cov: float) -> tuple[float, float]:
    """(shape, scale) by moment matching: shape = cov**-2, scale = mean*cov**2."""
    if not (mean > 0) or not (cov > 0):
        raise InvalidSpecError(f"gamma requires mean > 0 and cov > 0, got {mean}, {cov}")
    shape = 1.0 / (cov * cov)
    return shape, mean * cov * cov


def sample_variable(spec: RandomVariableSpec, rng: np.random.Generator,
                    scale: float = 1.0, size: int | None = None):
    """Draw from a spec; ``scale`` resolves the nominal when scaling_reference is set.

    Returns a float for ``size=None``, else an ndarray of that length.
    """
    n = 1 if size is None else size
    mean = spec.mean * scale
    if spec.family == "normal":
        out = rng.normal(mean, abs(mean) * spec.cov, size=n)
    elif spec.family == "lognormal":
        mu, sig = moments_to_lognormal(mean, spec.cov)
        out = rng.lognormal(mu, sig, size=n)
    elif spec.family == "gamma":
        shape, scl = moments_to_gamma(mean, spec.cov)
        out = rng.gamma(shape, scl, size=n)
    elif spec.family == "truncated-normal":
        # Parent normal keeps the catalog mean/COV; resample until inside bounds.
        lo = -math.inf if spec.lower_bound is None else spec.lower_bound
        hi = math.inf if spec.upper_bound is None else spec.upper_bound
        sd = abs(mean) * spec.cov
        out = rng.normal(mean, sd, size=n)
        for _ in range(100_000):
            bad = (out < lo) | (out > hi)
            if not bad.any():
                break
            out[bad] = rng.normal(mean, sd, size=int(bad.sum()))
        else:
            raise InvalidSpecError(f"{spec.name}: truncated-normal rejection did not terminate")
    elif spec.family == "uniform-circular":
        out = rng.uniform(0.0, 2.0 * math.pi, size=n)
    else:
        raise InvalidSpecError(f"{spec.name}: unknown family {spec.family!r}")
    return float(out[0]) if size is None else out


def _require(catalog: Mapping[str, RandomVariableSpec], name: str) -> RandomVariableSpec:
    try:
        return catalog[name]
    except KeyError:
        raise ConfigurationError(f"uncertainty catalog is missing required entry {name!r}") from None


def sample_realization(
    catalog: Mapping[str, RandomVariableSpec],
    topology: Topology,
    n_phases: int,
    rng: np.random.Generator,
) -> UncertaintyRealization:
    """One complete draw, deterministic given the generator state.

    Material draws are shared by all members of a section designation and
    independent across designations; camber is i.i.d. per member with a
    symmetric random sign on the magnitude of the normal draw.
    """
    dead = sample_variable(_require(catalog, "D"), rng)
    live = sample_variable(_require(catalog, "L_apt"), rng)
    w1 = sample_variable(_require(catalog, "w1"), rng)
    w2 = sample_variable(_require(catalog, "w2"), rng)
    w3 = sample_variable(_require(catalog, "w3"), rng)

    materials = {}
    for section in topology.sections:
        draws = {}
        for name in STRUCTURAL_PER_SECTION:
            spec = _require(catalog, name)
            scale = topology.nominal_fy if spec.scaling_reference == "F_yn" else 1.0
            draws[name] = sample_variable(spec, rng, scale=scale)
        materials[section] = SectionMaterialDraw(
            E=draws["E"], Fy=draws["F_y"], b=draws["b"], eps0=draws["eps0"],
            R0=draws["R0"], a1=draws["a1"], a3=draws["a3"],
        )

    camber_spec = _require(catalog, "delta")
    camber = {}
    for member_id, length in topology.members.items():
        magnitude = abs(sample_variable(camber_spec, rng, scale=length))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        camber[member_id] = sign * magnitude

    zeta = sample_variable(_require(catalog, "zeta"), rng)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=n_phases)

    return UncertaintyRealization(
        dead_factor=dead, live_factor=live, w1=w1, w2=w2, w3=w3,
        materials=materials, camber=camber, damping_ratio=zeta, phases=phases,
    )


def substream(base_seed: int, sample_id: int) -> np.random.Generator:
    """Per-sample generator; reproducible independently of execution order."""
    return np.random.default_rng(np.random.SeedSequence((base_seed, sample_id)))
