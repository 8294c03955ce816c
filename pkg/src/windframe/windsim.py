"""Stochastic wind load synthesis from frequency-wise POD of the load XPSD.

Pipeline: estimate the cross power spectral density matrix of the floor load
process (Welch, Hann window), eigendecompose it per frequency, and synthesize
realizations as a superposition of cosines with independent uniform phases,

    f_i(t) = fbar_i + 2 sum_l sum_j |Psi_il| sqrt(Lambda_l domega)
             cos(omega_j t + theta_il + phi_jl),

where Lambda/Psi are eigenpairs of the two-sided XPSD on the uniform grid
omega_j = j*domega. Realizations are linearly ramped up and down and end with
a stretch of zero load so residual deformations can be read off the tail.

Site scaling preserves reduced frequency: the frequency axis stretches with
the speed ratio, mean loads go with its square, and PSD ordinates with its
cube, so total fluctuating variance scales with the fourth power.

A synthetic spectrum builder (power-law + shedding-peak PSD with exponential
floor-to-floor coherence decay) makes the full pipeline runnable without
proprietary tunnel data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import InputError

TWO_PI = 2.0 * math.pi

DEFAULT_LOADED_DURATION = 4200.0
DEFAULT_RAMP = 300.0
DEFAULT_ZERO_TAIL = 200.0
DEFAULT_N_MODES = 5


@dataclass(frozen=True)
class LoadEnsemble:
    """Recorded load histories for one wind direction."""

    mean: np.ndarray          # (n_ch,) mean loads [N]
    fluctuations: np.ndarray  # (n_ch, n_samples), zero-mean histories [N]
    dt: float
    reference_speed: float

    def __post_init__(self):
        if self.fluctuations.ndim != 2:
            raise InputError("fluctuations must be (channels, samples)")
        if len(self.mean) != self.fluctuations.shape[0]:
            raise InputError("mean vector length must match channel count")
        if self.dt <= 0 or self.reference_speed <= 0:
            raise InputError("dt and reference speed must be positive")

    @property
    def duration(self) -> float:
        return self.fluctuations.shape[1] * self.dt


@dataclass(frozen=True)
class SpectralLoadModel:
    """Frequency-indexed POD eigenpairs plus mean loads for one direction.

    eigenvalues are two-sided PSD ordinates [N^2 s/rad] on omega_j = j*d_omega;
    eigenvectors are unit norm with the complex angle carrying theta_il.
    """

    d_omega: float
    eigenvalues: np.ndarray    # (n_freq, n_modes), descending per frequency
    eigenvectors: np.ndarray   # (n_freq, n_ch, n_modes) complex
    mean_loads: np.ndarray     # (n_ch,)
    reference_speed: float
    direction: float = 0.0

    def __post_init__(self):
        if self.eigenvalues.ndim != 2 or self.eigenvectors.ndim != 3:
            raise InputError("bad eigenpair array shapes")
        if self.eigenvalues.shape[0] != self.eigenvectors.shape[0]:
            raise InputError("eigenvalue/eigenvector frequency counts differ")
        if self.eigenvalues.shape[1] != self.eigenvectors.shape[2]:
            raise InputError("eigenvalue/eigenvector mode counts differ")

    @property
    def n_freq(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n_channels(self) -> int:
        return self.eigenvectors.shape[1]

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[1]

    @property
    def n_phases(self) -> int:
        return self.n_modes * self.n_freq

    @property
    def omega(self) -> np.ndarray:
        return np.arange(self.n_freq) * self.d_omega

    @property
    def cutoff(self) -> float:
        return self.n_freq * self.d_omega

    @property
    def period(self) -> float:
        return TWO_PI / self.d_omega

    def channel_variance(self) -> np.ndarray:
        """Retained-mode variance per channel, 2 * sum Lambda |Psi|^2 domega."""
        contrib = (np.abs(self.eigenvectors) ** 2) * self.eigenvalues[:, None, :]
        return 2.0 * contrib.sum(axis=(0, 2)) * self.d_omega

    def target_onesided_psd(self) -> np.ndarray:
        """Retained-mode one-sided XPSD (n_freq, n_ch, n_ch) implied by Eq-form."""
        psi = self.eigenvectors
        lam = self.eigenvalues
        s = np.einsum("fil,fl,fjl->fij", psi, lam, psi.conj())
        return 2.0 * s


@dataclass(frozen=True)
class EnvelopeSpec:
    ramp_up: float = DEFAULT_RAMP
    ramp_down: float = DEFAULT_RAMP
    zero_tail: float = DEFAULT_ZERO_TAIL

    def __post_init__(self):
        if min(self.ramp_up, self.ramp_down, self.zero_tail) < 0:
            raise InputError("envelope durations must be nonnegative")


@dataclass(frozen=True)
class LoadRealization:
    """Synthesized force histories on a uniform grid, envelope applied."""

    t: np.ndarray
    forces: np.ndarray          # (n_ch, n_t)
    ramp_up_end: float
    ramp_down_start: float
    zero_tail_start: float

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def steady_slice(self) -> slice:
        i0 = int(np.searchsorted(self.t, self.ramp_up_end, side="left"))
        i1 = int(np.searchsorted(self.t, self.ramp_down_start, side="right"))
        return slice(i0, i1)

    def scaled(self, factor: float) -> "LoadRealization":
        return replace(self, forces=self.forces * factor)


# ---------------------------------------------------------------------------
# XPSD estimation and POD
# ---------------------------------------------------------------------------

def estimate_xpsd(ensemble: LoadEnsemble, segment_length: int,
                  overlap: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Welch XPSD (Hann window) of the fluctuating loads.

    Returns (omega [rad/s], S) with S of shape (n_freq, n_ch, n_ch), one-sided
    in angular frequency so that the integral of the diagonal over omega
    recovers the channel variances.
    """
    x = ensemble.fluctuations
    n_ch, n_samp = x.shape
    if segment_length > n_samp:
        raise InputError(f"records ({n_samp}) shorter than one segment ({segment_length})")
    if not 0 <= overlap < 1:
        raise InputError("overlap must lie in [0, 1)")
    fs = 1.0 / ensemble.dt
    noverlap = int(segment_length * overlap)
    f, pxy = signal.csd(x[:, None, :], x[None, :, :], fs=fs, window="hann",
                        nperseg=segment_length, noverlap=noverlap,
                        detrend="constant", axis=-1)
    s = np.moveaxis(pxy, -1, 0) / TWO_PI      # per-Hz -> per-(rad/s)
    omega = TWO_PI * f
    return omega, s


def pod_decompose(s: np.ndarray, n_modes: int,
                  hermitian_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Descending eigenpairs of a Hermitian XPSD stack (n_freq, n_ch, n_ch)."""
    s = np.asarray(s)
    if s.ndim != 3 or s.shape[1] != s.shape[2]:
        raise InputError("XPSD stack must have shape (n_freq, n_ch, n_ch)")
    scale = np.max(np.abs(s)) or 1.0
    defect = np.max(np.abs(s - s.conj().transpose(0, 2, 1)))
    if defect > hermitian_tol * scale:
        raise InputError(f"input not Hermitian: relative defect {defect / scale:.2e}")
    n_modes = min(n_modes, s.shape[1])
    w, v = np.linalg.eigh(0.5 * (s + s.conj().transpose(0, 2, 1)))
    w = w[:, ::-1][:, :n_modes]
    v = v[:, :, ::-1][:, :, :n_modes]
    return np.maximum(w, 0.0), v


def reconstruct_xpsd(eigenvalues: np.ndarray, eigenvectors: np.ndarray) -> np.ndarray:
    """Sum of Lambda_l Psi_l Psi_l^H per frequency."""
    return np.einsum("fil,fl,fjl->fij", eigenvectors, eigenvalues, eigenvectors.conj())


def model_from_xpsd(omega: np.ndarray, s_onesided: np.ndarray, mean_loads: np.ndarray,
                    reference_speed: float, n_modes: int = DEFAULT_N_MODES,
                    direction: float = 0.0) -> SpectralLoadModel:
    """Build the synthesis model from a one-sided XPSD on a uniform grid.

    The synthesis amplitude convention uses two-sided eigenvalues, half the
    one-sided ones; the DC line carries no fluctuation (the mean is explicit).
    """
    omega = np.asarray(omega, dtype=float)
    d_omega = float(omega[1] - omega[0])
    if not np.allclose(np.diff(omega), d_omega, rtol=1e-9):
        raise InputError("frequency grid must be uniform")
    if abs(omega[0]) > 1e-12 * d_omega:
        raise InputError("frequency grid must start at zero")
    lam, psi = pod_decompose(s_onesided, n_modes)
    lam = 0.5 * lam
    lam[0, :] = 0.0
    return SpectralLoadModel(d_omega=d_omega, eigenvalues=lam, eigenvectors=psi,
                             mean_loads=np.asarray(mean_loads, dtype=float),
                             reference_speed=reference_speed, direction=direction)


# ---------------------------------------------------------------------------
# Site scaling and synthesis
# ---------------------------------------------------------------------------

def scale_to_site(model: SpectralLoadModel, v: float) -> SpectralLoadModel:
    """Rescale the calibrated model to site speed v at fixed length scale.

    Mean loads go with (v/v_ref)^2; the frequency axis with (v/v_ref); PSD
    ordinates with (v/v_ref)^3 so the fluctuating variance scales with the
    fourth power.
    """
    if v <= 0:
        raise InputError("site speed must be positive")
    s = v / model.reference_speed
    return replace(
        model,
        d_omega=model.d_omega * s,
        eigenvalues=model.eigenvalues * s**3,
        mean_loads=model.mean_loads * s**2,
        reference_speed=v,
    )


def evaluate_series(model: SpectralLoadModel, phases: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Exact evaluation of the cosine double sum at arbitrary times (no mean,
    no envelope); reference implementation for tests and small cases."""
    phases = _phase_matrix(model, phases)
    omega = model.omega
    out = np.zeros((model.n_channels, len(t)))
    amp = np.sqrt(model.eigenvalues * model.d_omega)      # (n_freq, n_modes)
    for l in range(model.n_modes):
        coeff = model.eigenvectors[:, :, l].T * (amp[:, l] * np.exp(1j * phases[l]))[None, :]
        out += 2.0 * (coeff @ np.exp(1j * np.outer(omega, t))).real
    return out


def _phase_matrix(model: SpectralLoadModel, phases: np.ndarray) -> np.ndarray:
    phases = np.asarray(phases, dtype=float)
    if phases.size != model.n_phases:
        raise InputError(f"need {model.n_phases} phases (modes x frequencies), got {phases.size}")
    return phases.reshape(model.n_modes, model.n_freq)


def simulate_loads(model: SpectralLoadModel, phases: np.ndarray,
                   duration: float = DEFAULT_LOADED_DURATION, dt: float = 0.06,
                   envelope: EnvelopeSpec = EnvelopeSpec()) -> LoadRealization:
    """Synthesize one enveloped realization of the load process.

    The series is evaluated exactly on a uniform grid at least as fine as
    both the requested dt and the Nyquist step of the model cutoff, using an
    FFT over the frequency lines. The loaded duration must not exceed the
    spectral period 2*pi/d_omega (the series repeats beyond it).
    """
    if duration <= 0 or dt <= 0:
        raise InputError("duration and dt must be positive")
    if duration > model.period * (1 + 1e-9):
        raise InputError(
            f"loaded duration {duration:.1f}s exceeds the spectral period "
            f"{model.period:.1f}s; decrease d_omega")
    if envelope.ramp_up + envelope.ramp_down > duration:
        raise InputError("ramps exceed the loaded duration")

    dt_nyq = math.pi / model.cutoff if model.cutoff > 0 else dt
    dt_target = min(dt, dt_nyq)
    n_fft = 1
    while model.period / n_fft > dt_target or n_fft < 2 * model.n_freq:
        n_fft *= 2
    dt_out = model.period / n_fft

    total = duration + envelope.zero_tail
    n_t = int(round(total / dt_out)) + 1
    t = np.arange(n_t) * dt_out

    if model.n_modes > 0 and model.n_freq > 0:
        pm = _phase_matrix(model, phases)
        amp = np.sqrt(model.eigenvalues * model.d_omega)
        coeff = np.zeros((model.n_channels, n_fft), dtype=complex)
        for l in range(model.n_modes):
            coeff[:, :model.n_freq] += (model.eigenvectors[:, :, l]
                                        * (amp[:, l] * np.exp(1j * pm[l]))[:, None]).T
        series = 2.0 * (np.fft.ifft(coeff, axis=1) * n_fft).real
        reps = int(np.ceil(n_t / n_fft))
        fluct = np.tile(series, (1, reps))[:, :n_t]
    else:
        fluct = np.zeros((model.n_channels, n_t))

    forces = model.mean_loads[:, None] + fluct
    env = _envelope(t, duration, envelope)
    forces *= env[None, :]
    return LoadRealization(t=t, forces=forces, ramp_up_end=envelope.ramp_up,
                           ramp_down_start=duration - envelope.ramp_down,
                           zero_tail_start=duration)


def _envelope(t: np.ndarray, duration: float, spec: EnvelopeSpec) -> np.ndarray:
    env = np.ones_like(t)
    if spec.ramp_up > 0:
        env = np.minimum(env, t / spec.ramp_up)
    if spec.ramp_down > 0:
        env = np.minimum(env, (duration - t) / spec.ramp_down)
    return np.clip(env, 0.0, 1.0)


def apply_model_uncertainty(loads: LoadRealization, w1: float, w2: float,
                            w3: float) -> LoadRealization:
    """Multiply every force sample by the three model-uncertainty factors."""
    if min(w1, w2, w3) <= 0:
        raise InputError("uncertainty factors must be positive")
    return loads.scaled(w1 * w2 * w3)


def torsion_to_frame_forces(frame_shear_loads: np.ndarray, torsion_loads: np.ndarray,
                            building_width: float) -> np.ndarray:
    """Add the frame share of the building torsion as lateral floor forces.

    Each of the four identical frames resists a shear of T/4 acting on the
    half-width lever arm, so the added force per floor is T / (4 * width/2).
    """
    if building_width <= 0:
        raise InputError("building width must be positive")
    return frame_shear_loads + torsion_loads / (4.0 * (building_width / 2.0))


# ---------------------------------------------------------------------------
# Directional catalogs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionalSpectralCatalog:
    """Spectral load models on a grid of tested wind directions."""

    directions: np.ndarray       # radians, sorted
    models: tuple[SpectralLoadModel, ...]

    def model_for(self, alpha: float) -> SpectralLoadModel:
        """Nearest tested direction (circular distance); no interpolation."""
        alpha = float(np.mod(alpha, TWO_PI))
        d = np.abs((self.directions - alpha + math.pi) % TWO_PI - math.pi)
        return self.models[int(np.argmin(d))]


# ---------------------------------------------------------------------------
# Synthetic spectrum (self-contained stand-in for tunnel data)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpectrumSpec:
    """Parametric building-load spectrum for desk-scale studies.

    Channels are the per-floor lateral building loads in the frame direction
    followed by per-floor torsional loads [N m]. Alongwind content follows a
    broadband boundary-layer form; acrosswind content is a narrowband peak at
    the shedding frequency St * v / width.
    """

    floor_heights: tuple[float, ...]
    building_width: float
    reference_speed: float
    mean_coefficient: float             # N per (m/s)^2 per floor at the top
    turbulence_intensity: float = 0.25
    acrosswind_ratio: float = 2.0
    strouhal: float = 0.11
    coherence_decay: float = 8.0
    torsion_intensity: float = 0.15
    profile_exponent: float = 0.3
    turbulence_length: float = 180.0
    n_freq: int = 2048
    d_omega: float = 0.012

    @property
    def n_floors(self) -> int:
        return len(self.floor_heights)

    @property
    def n_channels(self) -> int:
        return 2 * self.n_floors


def synthetic_xpsd(spec: SyntheticSpectrumSpec, alpha: float
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(omega, one-sided XPSD, mean loads) at the reference speed."""
    z = np.asarray(spec.floor_heights, dtype=float)
    h = z.max()
    profile = (z / h) ** spec.profile_exponent
    v = spec.reference_speed
    omega = np.arange(spec.n_freq) * spec.d_omega

    mean_floor = spec.mean_coefficient * profile * v**2 * math.cos(alpha)
    mean = np.concatenate([mean_floor, np.zeros(spec.n_floors)])

    # unit-variance spectral shapes on the retained band
    lt = spec.turbulence_length
    s_along = (lt / v) / (1.0 + 70.8 * (omega * lt / (TWO_PI * v)) ** 2) ** (5.0 / 6.0)
    omega_s = TWO_PI * spec.strouhal * v / spec.building_width
    s_shed = np.exp(-0.5 * ((omega - omega_s) / (0.25 * omega_s)) ** 2)
    for shape in (s_along, s_shed):
        shape[0] = 0.0
    s_along = s_along / np.trapezoid(s_along, omega)
    s_shed = s_shed / np.trapezoid(s_shed, omega)

    amp = spec.turbulence_intensity * spec.mean_coefficient * profile * v**2
    ca, cx = math.cos(alpha) ** 2, math.sin(alpha) ** 2 * spec.acrosswind_ratio
    var_floor = amp**2 * (ca + cx)
    shape_floor = (ca * s_along + cx * s_shed) / max(ca + cx, 1e-12)

    coh = np.exp(-spec.coherence_decay * np.abs(z[:, None] - z[None, :])[None, :, :]
                 * omega[:, None, None] / (TWO_PI * v))
    sig = np.sqrt(var_floor)
    s_floor = coh * (sig[:, None] * sig[None, :])[None, :, :] * shape_floor[:, None, None]

    sig_t = spec.torsion_intensity * spec.building_width * amp
    s_tors = coh * (sig_t[:, None] * sig_t[None, :])[None, :, :] * s_shed[:, None, None]

    n = spec.n_floors
    s = np.zeros((spec.n_freq, 2 * n, 2 * n))
    s[:, :n, :n] = s_floor
    s[:, n:, n:] = s_tors
    return omega, s, mean


def build_synthetic_catalog(spec: SyntheticSpectrumSpec,
                            directions_deg: Sequence[float] | None = None,
                            n_modes: int = DEFAULT_N_MODES) -> DirectionalSpectralCatalog:
    if directions_deg is None:
        directions_deg = np.arange(0.0, 360.0, 10.0)
    directions = np.sort(np.mod(np.radians(np.asarray(directions_deg, float)), TWO_PI))
    models = []
    for a in directions:
        omega, s, mean = synthetic_xpsd(spec, float(a))
        models.append(model_from_xpsd(omega, s, mean, spec.reference_speed,
                                      n_modes=n_modes, direction=float(a)))
    return DirectionalSpectralCatalog(directions=directions, models=tuple(models))


# ---------------------------------------------------------------------------
# Ensemble file I/O (delimited text and flat binary)
# ---------------------------------------------------------------------------

BINARY_MAGIC = b"WFLE"


def write_ensemble_binary(path: str | Path, ensemble: LoadEnsemble) -> None:
    """Flat binary: magic, channels, samples (int64), dt, v_ref (float64),
    mean vector, then row-major float64 fluctuation samples."""
    n_ch, n_samp = ensemble.fluctuations.shape
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        np.array([n_ch, n_samp], dtype="<i8").tofile(fh)
        np.array([ensemble.dt, ensemble.reference_speed], dtype="<f8").tofile(fh)
        ensemble.mean.astype("<f8").tofile(fh)
        ensemble.fluctuations.astype("<f8").tofile(fh)


def read_ensemble_binary(path: str | Path) -> LoadEnsemble:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BINARY_MAGIC:
            raise InputError(f"{path}: not a load-ensemble binary file")
        n_ch, n_samp = np.fromfile(fh, dtype="<i8", count=2)
        dt, v_ref = np.fromfile(fh, dtype="<f8", count=2)
        mean = np.fromfile(fh, dtype="<f8", count=int(n_ch))
        data = np.fromfile(fh, dtype="<f8", count=int(n_ch * n_samp))
    if data.size != n_ch * n_samp:
        raise InputError(f"{path}: truncated sample block")
    return LoadEnsemble(mean=mean, fluctuations=data.reshape(int(n_ch), int(n_samp)),
                        dt=float(dt), reference_speed=float(v_ref))


def read_ensemble_text(path: str | Path, dt: float, reference_speed: float) -> LoadEnsemble:
    """Delimited text: header line, then one row per time step, one column per
    channel; the mean is taken out of each column."""
    raw = np.loadtxt(path, skiprows=1)
    if raw.ndim == 1:
        raw = raw[:, None]
    mean = raw.mean(axis=0)
    return LoadEnsemble(mean=mean, fluctuations=(raw - mean).T, dt=dt,
                        reference_speed=reference_speed)
