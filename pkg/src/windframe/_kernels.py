"""Numba kernels for planar frame state determination and assembly.

Basic element system: q = [N, M1, M2] against v = [chord elongation,
end rotation i, end rotation j] measured from the rotated chord
(corotational kinematics, exact rigid-body separation). Inside force-based
elements the bending moment includes the axial force acting through the
transverse displacement relative to the chord, recovered from the curvature
field by polynomial integration on the Gauss-Lobatto points (so member
buckling is captured with two sub-elements per member). Axial compatibility
carries the bowing term -0.5 * integral(w'^2).

Sign conventions: y transverse to the chord with rotations counterclockwise,
curvature kappa = w'', fiber strain eps = eps_a - y*kappa, section moment
M = -integral(sigma * y), axial force positive in tension.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .material import (
    INTACT,
    PENDING_COMPRESSION,
    RELEASED,
    I_EPS,
    I_SIG,
    mp_point,
    rainflow_commit_batch,
    rainflow_damage_batch,
)

N_IP = 5

FORCE_BASED = 0
DISPL_BASED = 1

ELEMENT_TOL = 1e-8
ELEMENT_MAX_ITER = 25
SECTION_STIFF_FLOOR = 1e-9


def gauss_lobatto_unit() -> tuple[np.ndarray, np.ndarray]:
    """5-point Gauss-Lobatto abscissas/weights on [0, 1]."""
    a = np.sqrt(3.0 / 7.0) / 2.0
    xi = np.array([0.0, 0.5 - a, 0.5, 0.5 + a, 1.0])
    wt = np.array([1.0 / 20.0, 49.0 / 180.0, 16.0 / 45.0, 49.0 / 180.0, 1.0 / 20.0])
    return xi, wt


def cbdi_matrices(xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(L*, L') such that w = L0^2 (L* kappa) and w' = L0 (L' kappa).

    Curvature is interpolated by the polynomial through the integration
    points; displacement integrates it twice with w = 0 at both ends.
    """
    n = len(xi)
    k = np.arange(n)
    vander = xi[:, None] ** k[None, :]
    g = (xi[:, None] ** (k[None, :] + 2) - xi[:, None]) / ((k + 1) * (k + 2))[None, :]
    gp = xi[:, None] ** (k[None, :] + 1) / (k + 1)[None, :] - (1.0 / ((k + 1) * (k + 2)))[None, :]
    vinv = np.linalg.inv(vander)
    return g @ vinv, gp @ vinv


@njit(cache=True, inline="always")
def _invert_sym2(k11, k12, k22, floor):
    det = k11 * k22 - k12 * k12
    lim = floor * (abs(k11) + abs(k22)) ** 2
    if det < lim:
        det = lim if lim > 0.0 else 1e-30
    return k22 / det, -k12 / det, k11 / det


@njit(cache=True, inline="always")
def _section_response(esec_a, esec_k, fib_y, fib_A, f0, nf, mrow0,
                      mstate_c, mstate_t, mpar, fail_mode):
    """Fiber integration at one section; returns (N, M, k11, k12, k22)."""
    n_res = 0.0
    m_res = 0.0
    k11 = 0.0
    k12 = 0.0
    k22 = 0.0
    for k in range(nf):
        y = fib_y[f0 + k]
        a = fib_A[f0 + k]
        eps = esec_a - y * esec_k
        row = mrow0 + k
        sig, tan = mp_point(eps, mstate_c[row], mstate_t[row], mpar[row], fail_mode[row])
        n_res += sig * a
        m_res -= sig * a * y
        ea = tan * a
        k11 += ea
        k12 -= ea * y
        k22 += ea * y * y
    return n_res, m_res, k11, k12, k22


@njit(cache=True)
def element_state_batch(
    v_t, L0, GAs, etype,
    xi, wt, lstar, lprime,
    fib_off, fib_y, fib_A,
    mpar, mstate_c, mstate_t, fail_mode,
    v_c, q_c, esec_c, ssec_c, ksec_c, kb_c,
    q_t, esec_t, ssec_t, ksec_t, w_t, kb_t,
    conv_out,
):
    """State determination of every fiber element for trial deformations v_t."""
    ne = v_t.shape[0]
    nip = xi.shape[0]
    for e in range(ne):
        nf = fib_off[e + 1] - fib_off[e]
        f0 = fib_off[e]
        base = f0 * nip
        length = L0[e]
        shear_f = 1.0 / (GAs[e] * length) if GAs[e] > 0.0 else 0.0

        if etype[e] == DISPL_BASED:
            _displacement_based(e, v_t, length, shear_f, xi, wt, fib_off, fib_y,
                                fib_A, mpar, mstate_c, mstate_t, fail_mode,
                                q_t, esec_t, ssec_t, ksec_t, w_t, kb_t)
            conv_out[e] = True
            continue

        # predictor from committed basic stiffness
        dv0 = v_t[e, 0] - v_c[e, 0]
        dv1 = v_t[e, 1] - v_c[e, 1]
        dv2 = v_t[e, 2] - v_c[e, 2]
        q0 = q_c[e, 0] + kb_c[e, 0, 0] * dv0 + kb_c[e, 0, 1] * dv1 + kb_c[e, 0, 2] * dv2
        q1 = q_c[e, 1] + kb_c[e, 1, 0] * dv0 + kb_c[e, 1, 1] * dv1 + kb_c[e, 1, 2] * dv2
        q2 = q_c[e, 2] + kb_c[e, 2, 0] * dv0 + kb_c[e, 2, 1] * dv1 + kb_c[e, 2, 2] * dv2

        for ip in range(nip):
            for comp in range(2):
                esec_t[e, ip, comp] = esec_c[e, ip, comp]
                ssec_t[e, ip, comp] = ssec_c[e, ip, comp]
            for comp in range(3):
                ksec_t[e, ip, comp] = ksec_c[e, ip, comp]
            w_t[e, ip] = 0.0
        # rebuild w from the committed curvature field
        for ip in range(nip):
            acc = 0.0
            for jp in range(nip):
                acc += lstar[ip, jp] * esec_c[e, jp, 1]
            w_t[e, ip] = length * length * acc

        converged = False
        vnorm = abs(v_t[e, 0]) + length * (abs(v_t[e, 1]) + abs(v_t[e, 2])) + 1e-16
        for _ in range(ELEMENT_MAX_ITER):
            # section strain update toward force targets, then re-evaluate
            for ip in range(nip):
                s_tn = q0
                s_tm = (xi[ip] - 1.0) * q1 + xi[ip] * q2 + q0 * w_t[e, ip]
                dn = s_tn - ssec_t[e, ip, 0]
                dm = s_tm - ssec_t[e, ip, 1]
                f11, f12, f22 = _invert_sym2(ksec_t[e, ip, 0], ksec_t[e, ip, 1],
                                             ksec_t[e, ip, 2], SECTION_STIFF_FLOOR)
                esec_t[e, ip, 0] += f11 * dn + f12 * dm
                esec_t[e, ip, 1] += f12 * dn + f22 * dm
                n_res, m_res, k11, k12, k22 = _section_response(
                    esec_t[e, ip, 0], esec_t[e, ip, 1], fib_y, fib_A, f0, nf,
                    base + ip * nf, mstate_c, mstate_t, mpar, fail_mode)
                ssec_t[e, ip, 0] = n_res
                ssec_t[e, ip, 1] = m_res
                ksec_t[e, ip, 0] = k11
                ksec_t[e, ip, 1] = k12
                ksec_t[e, ip, 2] = k22

            # transverse displacement and slope from the curvature field
            for ip in range(nip):
                acc = 0.0
                for jp in range(nip):
                    acc += lstar[ip, jp] * esec_t[e, jp, 1]
                w_t[e, ip] = length * length * acc

            # element flexibility and internal deformations
            fl00 = 0.0; fl01 = 0.0; fl02 = 0.0
            fl11 = 0.0; fl12 = 0.0; fl22 = 0.0
            vi0 = 0.0; vi1 = 0.0; vi2 = 0.0
            for ip in range(nip):
                f11, f12, f22 = _invert_sym2(ksec_t[e, ip, 0], ksec_t[e, ip, 1],
                                             ksec_t[e, ip, 2], SECTION_STIFF_FLOOR)
                wl = wt[ip] * length
                b0 = w_t[e, ip]          # dM/dN column entry
                bm1 = xi[ip] - 1.0
                bm2 = xi[ip]
                # b^T f b with b = [[1, 0, 0], [b0, bm1, bm2]]
                fl00 += wl * (f11 + 2.0 * f12 * b0 + f22 * b0 * b0)
                fl01 += wl * (f12 + f22 * b0) * bm1
                fl02 += wl * (f12 + f22 * b0) * bm2
                fl11 += wl * f22 * bm1 * bm1
                fl12 += wl * f22 * bm1 * bm2
                fl22 += wl * f22 * bm2 * bm2
                # slope for the bowing term
                wp = 0.0
                for jp in range(nip):
                    wp += lprime[ip, jp] * esec_t[e, jp, 1]
                wp *= length
                vi0 += wl * (esec_t[e, ip, 0] - 0.5 * wp * wp)
                vi1 += wl * bm1 * esec_t[e, ip, 1]
                vi2 += wl * bm2 * esec_t[e, ip, 1]
            # elastic shear flexibility on the rotational block
            fl11 += shear_f
            fl12 += shear_f
            fl22 += shear_f
            vi1 += shear_f * (q1 + q2)
            vi2 += shear_f * (q1 + q2)

            r0 = v_t[e, 0] - vi0
            r1 = v_t[e, 1] - vi1
            r2 = v_t[e, 2] - vi2
            rnorm = abs(r0) + length * (abs(r1) + abs(r2))

            # invert the symmetric 3x3 flexibility
            d00 = fl11 * fl22 - fl12 * fl12
            d01 = fl02 * fl12 - fl01 * fl22
            d02 = fl01 * fl12 - fl02 * fl11
            det = fl00 * d00 + fl01 * d01 + fl02 * d02
            if det <= 0.0 or not np.isfinite(det):
                break
            k00 = d00 / det
            k01 = d01 / det
            k02 = d02 / det
            k11_ = (fl00 * fl22 - fl02 * fl02) / det
            k12_ = (fl01 * fl02 - fl00 * fl12) / det
            k22_ = (fl00 * fl11 - fl01 * fl01) / det
            kb_t[e, 0, 0] = k00
            kb_t[e, 0, 1] = k01
            kb_t[e, 0, 2] = k02
            kb_t[e, 1, 0] = k01
            kb_t[e, 1, 1] = k11_
            kb_t[e, 1, 2] = k12_
            kb_t[e, 2, 0] = k02
            kb_t[e, 2, 1] = k12_
            kb_t[e, 2, 2] = k22_

            if rnorm < ELEMENT_TOL * vnorm:
                converged = True
                break
            q0 += k00 * r0 + k01 * r1 + k02 * r2
            q1 += k01 * r0 + k11_ * r1 + k12_ * r2
            q2 += k02 * r0 + k12_ * r1 + k22_ * r2

        q_t[e, 0] = q0
        q_t[e, 1] = q1
        q_t[e, 2] = q2
        conv_out[e] = converged


@njit(cache=True, inline="always")
def _displacement_based(e, v_t, length, shear_f, xi, wt, fib_off, fib_y, fib_A,
                        mpar, mstate_c, mstate_t, fail_mode,
                        q_t, esec_t, ssec_t, ksec_t, w_t, kb_t):
    """Hermite displacement-based alternative, strain-driven (no iteration).

    Shear stays elastic in series on the rotational block, applied as a
    correction of the basic stiffness.
    """
    nf = fib_off[e + 1] - fib_off[e]
    f0 = fib_off[e]
    base = f0 * xi.shape[0]
    nip = xi.shape[0]
    ea = v_t[e, 0] / length
    t1 = v_t[e, 1]
    t2 = v_t[e, 2]
    for comp in range(3):
        q_t[e, comp] = 0.0
        for c2 in range(3):
            kb_t[e, comp, c2] = 0.0
    for ip in range(nip):
        x = xi[ip]
        h1 = (-4.0 + 6.0 * x) / length
        h2 = (-2.0 + 6.0 * x) / length
        kappa = h1 * t1 + h2 * t2
        esec_t[e, ip, 0] = ea
        esec_t[e, ip, 1] = kappa
        w_t[e, ip] = 0.0
        n_res, m_res, k11, k12, k22 = _section_response(
            ea, kappa, fib_y, fib_A, f0, nf, base + ip * nf,
            mstate_c, mstate_t, mpar, fail_mode)
        ssec_t[e, ip, 0] = n_res
        ssec_t[e, ip, 1] = m_res
        ksec_t[e, ip, 0] = k11
        ksec_t[e, ip, 1] = k12
        ksec_t[e, ip, 2] = k22
        wl = wt[ip] * length
        q_t[e, 0] += wl * n_res / length
        q_t[e, 1] += wl * m_res * h1
        q_t[e, 2] += wl * m_res * h2
        kb_t[e, 0, 0] += wl * k11 / (length * length)
        kb_t[e, 0, 1] += wl * k12 * h1 / length
        kb_t[e, 0, 2] += wl * k12 * h2 / length
        kb_t[e, 1, 1] += wl * k22 * h1 * h1
        kb_t[e, 1, 2] += wl * k22 * h1 * h2
        kb_t[e, 2, 2] += wl * k22 * h2 * h2
    kb_t[e, 1, 0] = kb_t[e, 0, 1]
    kb_t[e, 2, 0] = kb_t[e, 0, 2]
    kb_t[e, 2, 1] = kb_t[e, 1, 2]


@njit(cache=True)
def corotational_basic(u, xy0, enod, edof, L0, c0, s0, v_out, geom_out):
    """Basic deformations and current chord geometry for all fiber elements."""
    ne = enod.shape[0]
    for e in range(ne):
        n1 = enod[e, 0]
        n2 = enod[e, 1]
        ux1 = u[edof[e, 0]] if edof[e, 0] >= 0 else 0.0
        uy1 = u[edof[e, 1]] if edof[e, 1] >= 0 else 0.0
        r1 = u[edof[e, 2]] if edof[e, 2] >= 0 else 0.0
        ux2 = u[edof[e, 3]] if edof[e, 3] >= 0 else 0.0
        uy2 = u[edof[e, 4]] if edof[e, 4] >= 0 else 0.0
        r2 = u[edof[e, 5]] if edof[e, 5] >= 0 else 0.0
        dx = (xy0[n2, 0] + ux2) - (xy0[n1, 0] + ux1)
        dy = (xy0[n2, 1] + uy2) - (xy0[n1, 1] + uy1)
        ln = np.sqrt(dx * dx + dy * dy)
        c = dx / ln
        s = dy / ln
        sb = c0[e] * s - s0[e] * c
        cb = c0[e] * c + s0[e] * s
        beta = np.arctan2(sb, cb)
        v_out[e, 0] = ln - L0[e]
        v_out[e, 1] = r1 - beta
        v_out[e, 2] = r2 - beta
        geom_out[e, 0] = c
        geom_out[e, 1] = s
        geom_out[e, 2] = ln


@njit(cache=True)
def assemble_fiber_elements(q_t, kb_t, geom, edof, f_out, k_out):
    """Scatter corotationally transformed element forces and tangents."""
    ne = q_t.shape[0]
    bvec = np.empty((3, 6))
    pe = np.empty(6)
    ke = np.empty((6, 6))
    for e in range(ne):
        c = geom[e, 0]
        s = geom[e, 1]
        ln = geom[e, 2]
        # rows: de/du, dtheta1/du, dtheta2/du
        bvec[0, 0] = -c; bvec[0, 1] = -s; bvec[0, 2] = 0.0
        bvec[0, 3] = c;  bvec[0, 4] = s;  bvec[0, 5] = 0.0
        bvec[1, 0] = -s / ln; bvec[1, 1] = c / ln; bvec[1, 2] = 1.0
        bvec[1, 3] = s / ln;  bvec[1, 4] = -c / ln; bvec[1, 5] = 0.0
        bvec[2, 0] = -s / ln; bvec[2, 1] = c / ln; bvec[2, 2] = 0.0
        bvec[2, 3] = s / ln;  bvec[2, 4] = -c / ln; bvec[2, 5] = 1.0

        for i in range(6):
            pe[i] = (bvec[0, i] * q_t[e, 0] + bvec[1, i] * q_t[e, 1]
                     + bvec[2, i] * q_t[e, 2])
        # material part B^T Kb B
        for i in range(6):
            for j in range(6):
                acc = 0.0
                for a in range(3):
                    for b in range(3):
                        acc += bvec[a, i] * kb_t[e, a, b] * bvec[b, j]
                ke[i, j] = acc
        # geometric part
        n_ax = q_t[e, 0]
        msum = q_t[e, 1] + q_t[e, 2]
        # t_z = [s, -c, 0, -s, c, 0], t_r = [-c, -s, 0, c, s, 0]
        tz0 = s; tz1 = -c; tz3 = -s; tz4 = c
        tr0 = -c; tr1 = -s; tr3 = c; tr4 = s
        tz = (tz0, tz1, 0.0, tz3, tz4, 0.0)
        tr = (tr0, tr1, 0.0, tr3, tr4, 0.0)
        for i in range(6):
            for j in range(6):
                ke[i, j] += (n_ax / ln) * tz[i] * tz[j]
                ke[i, j] += (msum / (ln * ln)) * (tr[i] * tz[j] + tz[i] * tr[j])

        for i in range(6):
            gi = edof[e, i]
            if gi < 0:
                continue
            f_out[gi] += pe[i]
            for j in range(6):
                gj = edof[e, j]
                if gj >= 0:
                    k_out[gi, gj] += ke[i, j]


@njit(cache=True)
def assemble_truss_elements(u, xy0, tnod, tdof, tL0, tEA, f_out, k_out):
    """Elastic corotational pin-pin elements (leaning column segments)."""
    nt = tnod.shape[0]
    for e in range(nt):
        n1 = tnod[e, 0]
        n2 = tnod[e, 1]
        ux1 = u[tdof[e, 0]] if tdof[e, 0] >= 0 else 0.0
        uy1 = u[tdof[e, 1]] if tdof[e, 1] >= 0 else 0.0
        ux2 = u[tdof[e, 2]] if tdof[e, 2] >= 0 else 0.0
        uy2 = u[tdof[e, 3]] if tdof[e, 3] >= 0 else 0.0
        dx = (xy0[n2, 0] + ux2) - (xy0[n1, 0] + ux1)
        dy = (xy0[n2, 1] + uy2) - (xy0[n1, 1] + uy1)
        ln = np.sqrt(dx * dx + dy * dy)
        c = dx / ln
        s = dy / ln
        n_ax = tEA[e] * (ln - tL0[e]) / tL0[e]
        r = (-c, -s, c, s)
        z = (s, -c, -s, c)
        for i in range(4):
            gi = tdof[e, i]
            if gi < 0:
                continue
            f_out[gi] += n_ax * r[i]
            for j in range(4):
                gj = tdof[e, j]
                if gj >= 0:
                    k_out[gi, gj] += (tEA[e] / tL0[e]) * r[i] * r[j] \
                        + (n_ax / ln) * z[i] * z[j]


@njit(cache=True)
def commit_fracture_transitions(fail_mode, sig_committed, damage):
    """Fatigue trigger and pending-compression release, at commit time."""
    n = fail_mode.shape[0]
    for i in range(n):
        if fail_mode[i] == PENDING_COMPRESSION and sig_committed[i] >= 0.0:
            fail_mode[i] = RELEASED
        if fail_mode[i] == INTACT and damage[i] >= 1.0:
            if sig_committed[i] > 0.0:
                fail_mode[i] = RELEASED
            else:
                fail_mode[i] = PENDING_COMPRESSION
