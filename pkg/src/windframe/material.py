"""Uniaxial hysteretic steel with low-cycle fatigue and fracture.

The stress-strain law is the Menegotto-Pinto curve with kinematic hardening
(ratio b) and isotropic envelope growth (a1..a4), with the elastic-to-plastic
transition sharpness R degrading with the plastic excursion,
R = R0 * (1 - cR1*xi / (cR2 + xi)).

Fatigue damage uses incremental three-point rainflow counting on the
committed strain history. A counted excursion of strain range r contributes
1/N_f(r) for a closed cycle and 0.5/N_f(r) for a residual half cycle, where
N_f(r) = (r / eps0)**(1/m). "Amplitude" throughout means the full strain
range of the excursion, so a monotonic ramp of size eps0 yields exactly half
the single-cycle damage. Fracture drops the stress to zero, immediately for
tension-triggered failures and at the next zero-force crossing for
compression-triggered ones.

Batched kernels operate on flat fiber arrays; thin scalar wrappers expose the
same behavior for single-fiber use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InputError
from .uncertainty import (
    ISO_HARDENING_A2,
    ISO_HARDENING_A4,
    MP_TRANSITION_CR1,
    MP_TRANSITION_CR2,
)

RAINFLOW_STACK_CAP = 96
FRACTURED_TANGENT_RATIO = 1e-8     # residual stiffness of a fractured fiber

# fail_mode codes
INTACT = 0
PENDING_COMPRESSION = 1
RELEASED = 2


@dataclass(frozen=True)
class SteelParams:
    E: float
    Fy: float
    b: float
    R0: float = 20.0
    cR1: float = MP_TRANSITION_CR1
    cR2: float = MP_TRANSITION_CR2
    a1: float = 0.01
    a2: float = ISO_HARDENING_A2
    a3: float = 0.02
    a4: float = ISO_HARDENING_A4

    def __post_init__(self):
        if not (self.E > 0 and self.Fy > 0):
            raise InputError("E and Fy must be positive")
        if not (0 <= self.b < 1):
            raise InputError("hardening ratio must satisfy 0 <= b < 1")
        if not (15.0 <= self.R0 <= 25.0):
            raise InputError("R0 must lie in [15, 25]")


@dataclass(frozen=True)
class FatigueParams:
    eps0: float
    m: float = -0.3

    def __post_init__(self):
        if not self.eps0 > 0:
            raise InputError("eps0 must be positive")
        if not self.m < 0:
            raise InputError("fatigue slope m must be negative")


def fatigue_cycles_to_failure(params: FatigueParams, amplitude: float) -> float:
    """Constant-amplitude cycles to failure, N_f = (amplitude/eps0)**(1/m)."""
    if not amplitude > 0:
        raise InputError("amplitude must be positive")
    return (amplitude / params.eps0) ** (1.0 / params.m)


# --------------------------------------------------------------------------
# Batched Menegotto-Pinto state
# --------------------------------------------------------------------------

N_MP_STATE = 10  # per-fiber floats: eps, sig, eps_r, sig_r, eps_s0, sig_s0,
#                  eps_min, eps_max, eps_pl, kon (stored as float)
N_MP_PARAM = 10  # E, Fy, b, R0, cR1, cR2, a1, a2, a3, a4

I_EPS, I_SIG, I_EPSR, I_SIGR, I_EPSS0, I_SIGS0, I_EPSMIN, I_EPSMAX, I_EPSPL, I_KON = range(10)
P_E, P_FY, P_B, P_R0, P_CR1, P_CR2, P_A1, P_A2, P_A3, P_A4 = range(10)


def make_mp_state(n: int) -> np.ndarray:
    return np.zeros((n, N_MP_STATE))


def pack_mp_params(params: SteelParams, n: int = 1) -> np.ndarray:
    row = np.array([params.E, params.Fy, params.b, params.R0, params.cR1,
                    params.cR2, params.a1, params.a2, params.a3, params.a4])
    return np.tile(row, (n, 1))


@njit(cache=True, inline="always")
def mp_point(eps_tr, state_c, state_t, par, fail_mode):
    """One-fiber trial update: reads committed state row, writes trial row.

    Returns (stress, tangent). fail_mode is the committed fracture state;
    the permanent pending->released transition happens at commit time, but a
    pending-compression fiber already reports zero once its parent stress
    crosses into tension.
    """
    E0 = par[P_E]
    Fy = par[P_FY]
    b = par[P_B]
    epsy = Fy / E0
    Esh = b * E0

    eps_c = state_c[I_EPS]
    deps = eps_tr - eps_c

    kon = state_c[I_KON]
    eps_r = state_c[I_EPSR]
    sig_r = state_c[I_SIGR]
    eps_s0 = state_c[I_EPSS0]
    sig_s0 = state_c[I_SIGS0]
    eps_min = state_c[I_EPSMIN]
    eps_max = state_c[I_EPSMAX]
    eps_pl = state_c[I_EPSPL]

    if kon == 0.0:
        eps_max = epsy
        eps_min = -epsy
        if deps < 0.0:
            kon = 2.0
            eps_s0 = eps_min
            sig_s0 = -Fy
            eps_pl = eps_min
        else:
            kon = 1.0
            eps_s0 = eps_max
            sig_s0 = Fy
            eps_pl = eps_max
    elif kon == 2.0 and deps > 0.0:
        # reversal compression -> tension; isotropic shift uses a3/a4
        kon = 1.0
        eps_r = eps_c
        sig_r = state_c[I_SIG]
        if eps_c < eps_min:
            eps_min = eps_c
        d1 = (eps_max - eps_min) / (2.0 * par[P_A4] * epsy)
        shft = 1.0 + par[P_A3] * d1 ** 0.8
        eps_s0 = (Fy * shft - Esh * epsy * shft - sig_r + E0 * eps_r) / (E0 - Esh)
        sig_s0 = Fy * shft + Esh * (eps_s0 - epsy * shft)
        eps_pl = eps_max
    elif kon == 1.0 and deps < 0.0:
        # reversal tension -> compression; isotropic shift uses a1/a2
        kon = 2.0
        eps_r = eps_c
        sig_r = state_c[I_SIG]
        if eps_c > eps_max:
            eps_max = eps_c
        d1 = (eps_max - eps_min) / (2.0 * par[P_A2] * epsy)
        shft = 1.0 + par[P_A1] * d1 ** 0.8
        eps_s0 = (-Fy * shft + Esh * epsy * shft - sig_r + E0 * eps_r) / (E0 - Esh)
        sig_s0 = -Fy * shft + Esh * (eps_s0 + epsy * shft)
        eps_pl = eps_min

    if fail_mode == RELEASED:
        sig = 0.0
        tan = FRACTURED_TANGENT_RATIO * E0
    else:
        xi = abs((eps_pl - eps_s0) / epsy)
        R = par[P_R0] * (1.0 - par[P_CR1] * xi / (par[P_CR2] + xi))
        den = eps_s0 - eps_r
        if abs(den) < 1e-300:
            den = 1e-300
        epsrat = (eps_tr - eps_r) / den
        dum1 = 1.0 + abs(epsrat) ** R
        dum2 = dum1 ** (1.0 / R)
        sig_star = b * epsrat + (1.0 - b) * epsrat / dum2
        sig = sig_star * (sig_s0 - sig_r) + sig_r
        tan = (b + (1.0 - b) / (dum1 * dum2)) * (sig_s0 - sig_r) / den
        if fail_mode == PENDING_COMPRESSION and sig >= 0.0:
            # compression-triggered fracture releases at the zero crossing
            sig = 0.0
            tan = FRACTURED_TANGENT_RATIO * E0

    state_t[I_EPS] = eps_tr
    state_t[I_SIG] = sig
    state_t[I_EPSR] = eps_r
    state_t[I_SIGR] = sig_r
    state_t[I_EPSS0] = eps_s0
    state_t[I_SIGS0] = sig_s0
    state_t[I_EPSMIN] = eps_min
    state_t[I_EPSMAX] = eps_max
    state_t[I_EPSPL] = eps_pl
    state_t[I_KON] = kon
    return sig, tan


@njit(cache=True)
def mp_trial_batch(eps_tr, state_c, state_t, par, fail_mode, sig_out, tan_out):
    """Trial stress/tangent for all fibers; fills state_t, never touches state_c."""
    for i in range(eps_tr.shape[0]):
        sig_out[i], tan_out[i] = mp_point(eps_tr[i], state_c[i], state_t[i],
                                          par[i], fail_mode[i])


# --------------------------------------------------------------------------
# Batched fatigue state (incremental three-point rainflow, ASTM residue rule)
# --------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _half_damage(r, eps0, inv_m, min_range):
    # gated everywhere with the same threshold so the bookkeeping stays
    # consistent between open, confirmed, and retired excursions
    if r <= 0.0 or r < min_range:
        return 0.0
    return 0.5 * (r / eps0) ** (-inv_m)


@njit(cache=True)
def rainflow_commit_batch(eps_new, stack, nstk, have_run, run_val, run_dir,
                          di_closed, di_conf, eps0, inv_m, min_range):
    """Advance every fiber's rainflow state by one committed strain.

    stack holds confirmed turning points; run_val is the open extremum.
    di_closed accumulates extracted cycles and retired half cycles; di_conf
    is the running half-cycle total over confirmed consecutive pairs. The
    queryable damage is di_closed + di_conf + (open excursion half damage).
    Excursions with range below min_range are ignored.
    """
    n = eps_new.shape[0]
    cap = stack.shape[1]
    for i in range(n):
        e = eps_new[i]
        if not have_run[i]:
            stack[i, 0] = e
            nstk[i] = 1
            run_val[i] = e
            run_dir[i] = 0.0
            have_run[i] = True
            continue
        d = e - run_val[i]
        if d == 0.0:
            continue
        newdir = 1.0 if d > 0.0 else -1.0
        m = nstk[i]
        if run_dir[i] == 0.0 or newdir == run_dir[i]:
            # excursion keeps growing; a cycle can still close mid-excursion
            run_val[i] = e
            run_dir[i] = newdir
        else:
            # direction reversed: confirm the running extremum as a turning point
            if m >= cap:
                # overflow: retire the oldest excursion as a half cycle
                r_old = abs(stack[i, 1] - stack[i, 0])
                h_old = _half_damage(r_old, eps0[i], inv_m[i], min_range)
                di_closed[i] += h_old
                di_conf[i] -= h_old
                for k in range(m - 1):
                    stack[i, k] = stack[i, k + 1]
                m -= 1
            stack[i, m] = run_val[i]
            if m >= 1:
                di_conf[i] += _half_damage(abs(stack[i, m] - stack[i, m - 1]),
                                           eps0[i], inv_m[i], min_range)
            m += 1
            run_val[i] = e
            run_dir[i] = newdir
        # three-point extraction against the current running point
        while m >= 2:
            x = abs(run_val[i] - stack[i, m - 1])
            y = abs(stack[i, m - 1] - stack[i, m - 2])
            if x < y:
                break
            h_y = _half_damage(y, eps0[i], inv_m[i], min_range)
            if m == 2:
                # range contains the start point: retire as half cycle
                di_closed[i] += h_y
                di_conf[i] -= h_y
                stack[i, 0] = stack[i, 1]
                m = 1
            else:
                # full cycle over the two newest confirmed points
                di_closed[i] += 2.0 * h_y
                di_conf[i] -= h_y
                di_conf[i] -= _half_damage(abs(stack[i, m - 2] - stack[i, m - 3]),
                                           eps0[i], inv_m[i], min_range)
                m -= 2
        nstk[i] = m


@njit(cache=True)
def rainflow_damage_batch(stack, nstk, have_run, run_val, di_closed, di_conf,
                          eps0, inv_m, min_range, out):
    """Current damage index per fiber, including the open excursion."""
    n = out.shape[0]
    for i in range(n):
        di = di_closed[i] + di_conf[i]
        if have_run[i] and nstk[i] >= 1:
            r = abs(run_val[i] - stack[i, nstk[i] - 1])
            di += _half_damage(r, eps0[i], inv_m[i], min_range)
        out[i] = di


class FatigueStateArrays:
    """Rainflow/damage state for a batch of fibers."""

    def __init__(self, n: int, eps0, m, min_range: float = 0.0,
                 stack_cap: int = RAINFLOW_STACK_CAP):
        self.stack = np.zeros((n, stack_cap))
        self.nstk = np.zeros(n, dtype=np.int64)
        self.have_run = np.zeros(n, dtype=np.bool_)
        self.run_val = np.zeros(n)
        self.run_dir = np.zeros(n)
        self.di_closed = np.zeros(n)
        self.di_conf = np.zeros(n)
        self.eps0 = np.broadcast_to(np.asarray(eps0, float), (n,)).copy()
        self.inv_m = 1.0 / np.broadcast_to(np.asarray(m, float), (n,)).copy()
        self.min_range = min_range

    def commit(self, eps: np.ndarray) -> None:
        rainflow_commit_batch(eps, self.stack, self.nstk, self.have_run,
                              self.run_val, self.run_dir, self.di_closed,
                              self.di_conf, self.eps0, self.inv_m, self.min_range)

    def damage(self) -> np.ndarray:
        out = np.empty(len(self.run_val))
        rainflow_damage_batch(self.stack, self.nstk, self.have_run, self.run_val,
                              self.di_closed, self.di_conf, self.eps0, self.inv_m,
                              self.min_range, out)
        return out


# --------------------------------------------------------------------------
# Scalar wrappers
# --------------------------------------------------------------------------

class UniaxialSteel:
    """Single-fiber convenience wrapper over the batched kernels.

    trial() evaluates the response without committing; commit() makes the
    last trial the new reference state and advances the fatigue/fracture
    bookkeeping when a fatigue model is attached.
    """

    def __init__(self, params: SteelParams, fatigue: FatigueParams | None = None,
                 min_range: float = 0.0):
        self.params = params
        self._par = pack_mp_params(params, 1)
        self._state_c = make_mp_state(1)
        self._state_t = make_mp_state(1)
        self._fail_mode = np.zeros(1, dtype=np.int8)
        self._sig = np.zeros(1)
        self._tan = np.zeros(1)
        self._tan[0] = params.E
        self.fatigue = None
        if fatigue is not None:
            self.fatigue = FatigueStateArrays(1, fatigue.eps0, fatigue.m, min_range)
            self.fatigue.commit(np.zeros(1))

    def trial(self, strain: float) -> tuple[float, float]:
        if not math.isfinite(strain):
            raise InputError("trial strain must be finite")
        eps = np.array([strain])
        mp_trial_batch(eps, self._state_c, self._state_t, self._par,
                       self._fail_mode, self._sig, self._tan)
        return float(self._sig[0]), float(self._tan[0])

    def commit(self) -> None:
        if self._fail_mode[0] == PENDING_COMPRESSION and self._state_t[0, I_SIG] >= 0.0:
            self._fail_mode[0] = RELEASED
        self._state_c[:] = self._state_t
        if self.fatigue is not None:
            self.fatigue.commit(self._state_c[:, I_EPS].copy())
            if self._fail_mode[0] == INTACT and self.fatigue.damage()[0] >= 1.0:
                self._fail_mode[0] = (RELEASED if self._state_c[0, I_SIG] > 0.0
                                      else PENDING_COMPRESSION)

    @property
    def strain(self) -> float:
        return float(self._state_c[0, I_EPS])

    @property
    def stress(self) -> float:
        sig = float(self._state_c[0, I_SIG])
        return 0.0 if self._fail_mode[0] == RELEASED else sig

    @property
    def damage_index(self) -> float:
        return float(self.fatigue.damage()[0]) if self.fatigue is not None else 0.0

    @property
    def failed(self) -> bool:
        return self._fail_mode[0] != INTACT


class FatigueAccumulator:
    """Online damage accumulation for a single strain history."""

    def __init__(self, params: FatigueParams, min_range: float = 0.0,
                 start_strain: float = 0.0):
        self.params = params
        self._arrays = FatigueStateArrays(1, params.eps0, params.m, min_range)
        self._arrays.commit(np.array([start_strain]))

    def update(self, strain: float) -> tuple[float, bool]:
        self._arrays.commit(np.array([float(strain)]))
        di = float(self._arrays.damage()[0])
        return di, di >= 1.0

    @property
    def damage_index(self) -> float:
        return float(self._arrays.damage()[0])
