"""Planar frame model: fiber sections, members with camber, DOF management.

Lateral members (columns, braces) become chains of corotational fiber
sub-elements with the initial out-of-straightness imposed at the internal
nodes; braces are pin-ended via private end-rotation DOFs. Floors are rigid
in plane (one shared horizontal DOF per diaphragm). Gravity not carried by
the frame goes through an elastic pin-pin leaning column that contributes
its destabilizing second-order demand through the same corotational
kinematics.

Fibers sit at Gauss-Legendre stations of each plate rectangle (six across
the flange width and web depth, two through the thicknesses), which keeps
the elastic section constants of the discretized section exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as ker
from .errors import ConfigurationError, InputError, ModelStateError
from .material import (
    FatigueStateArrays,
    N_MP_STATE,
    INTACT,
    I_EPS,
    I_SIG,
    P_E, P_FY,
)
from .uncertainty import (
    FATIGUE_SLOPE_M,
    ISO_HARDENING_A2,
    ISO_HARDENING_A4,
    MP_TRANSITION_CR1,
    MP_TRANSITION_CR2,
    SectionMaterialDraw,
    Topology,
    UncertaintyRealization,
)

ROLES = ("column", "brace", "leaning", "gravity-beam")

BUCKLING_OFFSET_RATIO = 0.05
YIELD_STRAIN_RATIO = 1.0          # yielded when |eps| exceeds Fy/E


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WideFlange:
    name: str
    d: float
    bf: float
    tf: float
    tw: float

    def __post_init__(self):
        if min(self.d, self.bf, self.tf, self.tw) <= 0 or self.d <= 2 * self.tf:
            raise InputError(f"{self.name}: non-physical wide-flange dimensions")

    @property
    def area(self) -> float:
        return 2 * self.bf * self.tf + (self.d - 2 * self.tf) * self.tw

    @property
    def inertia(self) -> float:
        hw = self.d - 2 * self.tf
        i_web = self.tw * hw**3 / 12
        i_fl = self.bf * self.tf**3 / 12 + self.bf * self.tf * ((self.d - self.tf) / 2) ** 2
        return i_web + 2 * i_fl

    @property
    def shear_area(self) -> float:
        return self.d * self.tw


@dataclass(frozen=True)
class RectangleBar:
    name: str
    depth: float
    width: float

    def __post_init__(self):
        if min(self.depth, self.width) <= 0:
            raise InputError(f"{self.name}: non-physical bar dimensions")

    @property
    def area(self) -> float:
        return self.depth * self.width

    @property
    def inertia(self) -> float:
        return self.width * self.depth**3 / 12

    @property
    def shear_area(self) -> float:
        return self.area * 5.0 / 6.0


@dataclass(frozen=True)
class FiberSection:
    y: np.ndarray
    area: np.ndarray
    shear_area: float
    depth: float

    @property
    def total_area(self) -> float:
        return float(self.area.sum())

    @property
    def inertia(self) -> float:
        return float(np.sum(self.area * self.y**2))

    @property
    def first_moment(self) -> float:
        return float(np.sum(self.area * self.y))


def _gauss_rectangle(center: float, height: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    pts, wts = np.polynomial.legendre.leggauss(n)
    return center + 0.5 * height * pts, 0.5 * height * wts


def discretize_section(profile: WideFlange | RectangleBar) -> FiberSection:
    """Fiber layout: 6 stations along flange width / web depth, 2 through
    the thicknesses, at Gauss points so elastic A, Q, I are exact."""
    ys, areas = [], []
    if isinstance(profile, WideFlange):
        hw = profile.d - 2 * profile.tf
        yw, ww = _gauss_rectangle(0.0, hw, 6)
        _, wt2 = _gauss_rectangle(0.0, profile.tw, 2)
        for y, w in zip(yw, ww):
            for w2 in wt2:
                ys.append(y)
                areas.append(w * w2)
        for side in (+1.0, -1.0):
            yc = side * (profile.d - profile.tf) / 2
            yf, wf = _gauss_rectangle(yc, profile.tf, 2)
            _, wb = _gauss_rectangle(0.0, profile.bf, 6)
            for y, w in zip(yf, wf):
                for w2 in wb:
                    ys.append(y)
                    areas.append(w * w2)
        shear_area = profile.shear_area
        depth = profile.d
    elif isinstance(profile, RectangleBar):
        yd, wd = _gauss_rectangle(0.0, profile.depth, 6)
        _, wt2 = _gauss_rectangle(0.0, profile.width, 2)
        for y, w in zip(yd, wd):
            for w2 in wt2:
                ys.append(y)
                areas.append(w * w2)
        shear_area = profile.shear_area
        depth = profile.depth
    else:
        raise InputError(f"unsupported profile type {type(profile).__name__}")
    sec = FiberSection(y=np.array(ys), area=np.array(areas),
                       shear_area=shear_area, depth=depth)
    if abs(sec.total_area - profile.area) > 0.01 * profile.area:
        raise InputError(f"{profile.name}: fiber areas do not close the profile area")
    return sec


# ---------------------------------------------------------------------------
# Model definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Member:
    member_id: str
    node_i: str
    node_j: str
    section: str
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise InputError(f"{self.member_id}: unknown role {self.role!r}")


@dataclass
class FrameModel:
    nodes: dict[str, tuple[float, float]]
    sections: dict[str, WideFlange | RectangleBar]
    members: list[Member]
    supports: dict[str, tuple[bool, bool, bool]]
    masses: dict[str, float]
    gravity_dead: dict[str, float]
    gravity_live: dict[str, float]
    diaphragms: list[list[str]]
    story_nodes: list[str]
    nominal_fy: float = 345e6
    nominal_e: float = 200e9
    shear_modulus: float = 77e9
    reference_member: str | None = None

    def lateral_members(self) -> list[Member]:
        return [m for m in self.members if m.role in ("column", "brace")]

    def member_length(self, m: Member) -> float:
        xi, yi = self.nodes[m.node_i]
        xj, yj = self.nodes[m.node_j]
        return math.hypot(xj - xi, yj - yi)

    def topology(self) -> Topology:
        sections = tuple(sorted({m.section for m in self.lateral_members()}))
        members = {m.member_id: self.member_length(m) for m in self.lateral_members()}
        return Topology(sections=sections, members=members, nominal_fy=self.nominal_fy)

    @property
    def story_elevations(self) -> list[float]:
        return [self.nodes[n][1] for n in self.story_nodes]

    @property
    def height(self) -> float:
        return max(y for _, y in self.nodes.values())


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MemberRecord:
    member_id: str
    role: str
    section: str
    length: float
    element_ids: tuple[int, ...]
    end_knodes: tuple[int, int]
    mid_knode: int
    camber: float
    fiber_rows: tuple[int, int]      # [start, stop) into fiber-ip state arrays


class AssembledFrame:
    """Kernel-array view of one realization of the frame, analysis-ready."""

    def __init__(self, model: FrameModel, realization: UncertaintyRealization,
                 n_sub: int = 2, element_formulation: str = "force",
                 fatigue_min_range: float = 0.0):
        if n_sub < 2 or n_sub % 2:
            raise ConfigurationError("members need an even number >= 2 of sub-elements")
        if element_formulation not in ("force", "displacement"):
            raise ConfigurationError(f"unknown formulation {element_formulation!r}")
        if element_formulation == "displacement" and n_sub < 4:
            n_sub = 4
        self.model = model
        self.realization = realization
        self.n_sub = n_sub
        self.formulation = element_formulation
        self._build(fatigue_min_range)

    # -- construction -------------------------------------------------------

    def _build(self, fatigue_min_range: float) -> None:
        model = self.model
        xi, wt = ker.gauss_lobatto_unit()
        self.xi, self.wt = xi, wt
        self.lstar, self.lprime = ker.cbdi_matrices(xi)

        sections = {name: discretize_section(profile)
                    for name, profile in model.sections.items()}

        knodes: list[tuple[float, float]] = []
        kindex: dict[str, int] = {}
        for name, (x, y) in model.nodes.items():
            kindex[name] = len(knodes)
            knodes.append((x, y))

        diaphragm_of = {}
        for g, group in enumerate(model.diaphragms):
            for node in group:
                diaphragm_of[node] = g

        dof_map: dict[tuple, int] = {}
        counter = [0]

        def dof(key: tuple) -> int:
            if key not in dof_map:
                dof_map[key] = counter[0]
                counter[0] += 1
            return dof_map[key]

        def node_dof(name: str, comp: int) -> int:
            fixed = model.supports.get(name, (False, False, False))
            if fixed[comp]:
                return -1
            if comp == 0 and name in diaphragm_of:
                return dof(("dia", diaphragm_of[name]))
            return dof(("n", name, comp))

        elements = []          # per element dict rows
        trusses = []
        members: list[MemberRecord] = []
        fib_y_parts, fib_a_parts = [], []
        fib_off = [0]
        param_rows = []
        nip = len(xi)

        hinge_count = [0]

        def hinge_dof() -> int:
            hinge_count[0] += 1
            return dof(("hinge", hinge_count[0]))

        for m in model.members:
            if m.role == "gravity-beam":
                continue
            if m.role == "leaning":
                profile = model.sections[m.section]
                trusses.append({
                    "nodes": (kindex[m.node_i], kindex[m.node_j]),
                    "dofs": (node_dof(m.node_i, 0), node_dof(m.node_i, 1),
                             node_dof(m.node_j, 0), node_dof(m.node_j, 1)),
                    "ea": model.nominal_e * profile.area,
                })
                continue

            sec = sections[m.section]
            mat = self.realization.materials[m.section]
            length = model.member_length(m)
            camber = self.realization.camber.get(m.member_id, 0.0)
            xi_node, yi_node = model.nodes[m.node_i]
            xj_node, yj_node = model.nodes[m.node_j]
            axis = np.array([xj_node - xi_node, yj_node - yi_node]) / length
            perp = np.array([-axis[1], axis[0]])

            # internal nodes along the half-sine camber shape
            chain = [kindex[m.node_i]]
            for s in range(1, self.n_sub):
                frac = s / self.n_sub
                offset = camber * math.sin(math.pi * frac)
                pos = (np.array([xi_node, yi_node]) + frac * length * axis
                       + offset * perp)
                chain.append(len(knodes))
                knodes.append((float(pos[0]), float(pos[1])))
            chain.append(kindex[m.node_j])

            rot_i = hinge_dof() if m.role == "brace" else node_dof(m.node_i, 2)
            rot_j = hinge_dof() if m.role == "brace" else node_dof(m.node_j, 2)

            first_el = len(elements)
            fib_row_start = fib_off[-1] * nip
            for s in range(self.n_sub):
                ni, nj = chain[s], chain[s + 1]
                if s == 0:
                    di = (node_dof(m.node_i, 0), node_dof(m.node_i, 1), rot_i)
                else:
                    di = (dof(("m", id(m), s, 0)), dof(("m", id(m), s, 1)),
                          dof(("m", id(m), s, 2)))
                if s + 1 == self.n_sub:
                    dj = (node_dof(m.node_j, 0), node_dof(m.node_j, 1), rot_j)
                else:
                    dj = (dof(("m", id(m), s + 1, 0)), dof(("m", id(m), s + 1, 1)),
                          dof(("m", id(m), s + 1, 2)))
                x1, y1 = knodes[ni]
                x2, y2 = knodes[nj]
                el_len = math.hypot(x2 - x1, y2 - y1)
                elements.append({
                    "nodes": (ni, nj),
                    "dofs": di + dj,
                    "L0": el_len,
                    "c0": (x2 - x1) / el_len,
                    "s0": (y2 - y1) / el_len,
                    "GAs": model.shear_modulus * sec.shear_area,
                })
                fib_y_parts.append(sec.y)
                fib_a_parts.append(sec.area)
                fib_off.append(fib_off[-1] + len(sec.y))
                param_rows.append(self._param_block(mat, len(sec.y) * nip))

            members.append(MemberRecord(
                member_id=m.member_id, role=m.role, section=m.section,
                length=length,
                element_ids=tuple(range(first_el, len(elements))),
                end_knodes=(kindex[m.node_i], kindex[m.node_j]),
                mid_knode=chain[self.n_sub // 2],
                camber=camber,
                fiber_rows=(fib_row_start, fib_off[-1] * nip),
            ))

        self.n_dof = counter[0]
        self.xy0 = np.array(knodes)
        self.members = members
        self.kindex = kindex
        self._dof_map = dof_map
        self._diaphragm_of = diaphragm_of

        ne = len(elements)
        self.n_elements = ne
        self.enod = np.array([e["nodes"] for e in elements], dtype=np.int64).reshape(ne, 2)
        self.edof = np.array([e["dofs"] for e in elements], dtype=np.int64).reshape(ne, 6)
        self.L0 = np.array([e["L0"] for e in elements])
        self.c0 = np.array([e["c0"] for e in elements])
        self.s0 = np.array([e["s0"] for e in elements])
        self.GAs = np.array([e["GAs"] for e in elements])
        etype = ker.FORCE_BASED if self.formulation == "force" else ker.DISPL_BASED
        self.etype = np.full(ne, etype, dtype=np.int64)

        self.fib_off = np.array(fib_off, dtype=np.int64)
        self.fib_y = (np.concatenate(fib_y_parts) if fib_y_parts else np.zeros(0))
        self.fib_a = (np.concatenate(fib_a_parts) if fib_a_parts else np.zeros(0))
        totip = int(self.fib_off[-1]) * nip
        self.mpar = (np.vstack(param_rows) if param_rows
                     else np.zeros((0, 10)))
        assert self.mpar.shape[0] == totip

        self.mstate_c = np.zeros((totip, N_MP_STATE))
        self.mstate_t = np.zeros((totip, N_MP_STATE))
        self.fail_mode = np.zeros(totip, dtype=np.int8)
        self.eps_peak = np.zeros(totip)
        self.eps_trough = np.zeros(totip)

        mat_eps0 = np.empty(totip)
        for rec in members:
            lo, hi = rec.fiber_rows
            mat_eps0[lo:hi] = self.realization.materials[rec.section].eps0
        self.fatigue = FatigueStateArrays(totip, mat_eps0, FATIGUE_SLOPE_M,
                                          min_range=fatigue_min_range)
        if totip:
            self.fatigue.commit(np.zeros(totip))

        self.v_c = np.zeros((ne, 3))
        self.q_c = np.zeros((ne, 3))
        self.esec_c = np.zeros((ne, nip, 2))
        self.ssec_c = np.zeros((ne, nip, 2))
        self.ksec_c = np.zeros((ne, nip, 3))
        self.w_c = np.zeros((ne, nip))
        self.kb_c = np.zeros((ne, 3, 3))
        self.v_t = np.zeros((ne, 3))
        self.q_t = np.zeros((ne, 3))
        self.esec_t = np.zeros((ne, nip, 2))
        self.ssec_t = np.zeros((ne, nip, 2))
        self.ksec_t = np.zeros((ne, nip, 3))
        self.w_t = np.zeros((ne, nip))
        self.kb_t = np.zeros((ne, 3, 3))
        self.geom = np.zeros((ne, 3))
        self.conv = np.zeros(ne, dtype=np.bool_)
        self._init_committed_stiffness()

        nt = len(trusses)
        self.tnod = np.array([t["nodes"] for t in trusses], dtype=np.int64).reshape(nt, 2)
        self.tdof = np.array([t["dofs"] for t in trusses], dtype=np.int64).reshape(nt, 4)
        self.tEA = np.array([t["ea"] for t in trusses])
        self.tL0 = np.array([
            math.hypot(self.xy0[t["nodes"][1], 0] - self.xy0[t["nodes"][0], 0],
                       self.xy0[t["nodes"][1], 1] - self.xy0[t["nodes"][0], 1])
            for t in trusses])

        # lumped mass on diaphragm (or nodal) horizontal DOFs
        self.mass = np.zeros(self.n_dof)
        for node, mass in self.model.masses.items():
            d = node_dof(node, 0)
            if d >= 0:
                self.mass[d] += mass

        self.floor_dofs = np.array(
            [dof_map.get(("dia", g), -1) for g in range(len(model.diaphragms))],
            dtype=np.int64)
        self.story_dofs = np.array([node_dof(n, 0) for n in model.story_nodes],
                                   dtype=np.int64)
        self._node_dof = node_dof
        self.u = np.zeros(self.n_dof)

    def _param_block(self, mat: SectionMaterialDraw, rows: int) -> np.ndarray:
        row = np.array([mat.E, mat.Fy, mat.b, mat.R0, MP_TRANSITION_CR1,
                        MP_TRANSITION_CR2, mat.a1, ISO_HARDENING_A2, mat.a3,
                        ISO_HARDENING_A4])
        return np.tile(row, (rows, 1))

    def _init_committed_stiffness(self) -> None:
        """Elastic section/basic stiffness so the first predictor is exact."""
        nip = len(self.xi)
        for e in range(self.n_elements):
            lo = self.fib_off[e]
            hi = self.fib_off[e + 1]
            rows = slice(lo * nip, hi * nip)
            E = self.mpar[rows.start, P_E]
            y = self.fib_y[lo:hi]
            a = self.fib_a[lo:hi]
            ea = E * a.sum()
            eay = -E * np.sum(a * y)
            eay2 = E * np.sum(a * y**2)
            self.ksec_c[e, :, 0] = ea
            self.ksec_c[e, :, 1] = eay
            self.ksec_c[e, :, 2] = eay2
            self.kb_c[e] = self._elastic_basic_stiffness(ea, eay2, self.L0[e], self.GAs[e])

    @staticmethod
    def _elastic_basic_stiffness(ea: float, ei: float, length: float, gas: float) -> np.ndarray:
        f = np.zeros((3, 3))
        f[0, 0] = length / ea
        f[1, 1] = f[2, 2] = length / (3 * ei)
        f[1, 2] = f[2, 1] = -length / (6 * ei)
        if gas > 0:
            f[1:, 1:] += 1.0 / (gas * length)
        return np.linalg.inv(f)

    # -- state evaluation ----------------------------------------------------

    def resisting(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        """Internal force vector and tangent at trial displacements u.

        Returns (f_r, K_t, converged); a False flag means at least one
        element state determination failed and the step must shrink.
        """
        f = np.zeros(self.n_dof)
        k = np.zeros((self.n_dof, self.n_dof))
        if self.n_elements:
            ker.corotational_basic(u, self.xy0, self.enod, self.edof,
                                   self.L0, self.c0, self.s0, self.v_t, self.geom)
            ker.element_state_batch(
                self.v_t, self.L0, self.GAs, self.etype,
                self.xi, self.wt, self.lstar, self.lprime,
                self.fib_off, self.fib_y, self.fib_a,
                self.mpar, self.mstate_c, self.mstate_t, self.fail_mode,
                self.v_c, self.q_c, self.esec_c, self.ssec_c, self.ksec_c, self.kb_c,
                self.q_t, self.esec_t, self.ssec_t, self.ksec_t, self.w_t, self.kb_t,
                self.conv)
            ker.assemble_fiber_elements(self.q_t, self.kb_t, self.geom, self.edof, f, k)
        if len(self.tnod):
            ker.assemble_truss_elements(u, self.xy0, self.tnod, self.tdof,
                                        self.tL0, self.tEA, f, k)
        return f, k, bool(self.conv.all())

    def commit(self, u: np.ndarray) -> None:
        """Accept the last trial state (which must correspond to u)."""
        self.u = u.copy()
        self.v_c[:] = self.v_t
        self.q_c[:] = self.q_t
        self.esec_c[:] = self.esec_t
        self.ssec_c[:] = self.ssec_t
        self.ksec_c[:] = self.ksec_t
        self.w_c[:] = self.w_t
        self.kb_c[:] = self.kb_t
        self.mstate_c[:] = self.mstate_t
        if self.mstate_c.shape[0]:
            eps = self.mstate_c[:, I_EPS]
            np.maximum(self.eps_peak, eps, out=self.eps_peak)
            np.minimum(self.eps_trough, eps, out=self.eps_trough)
            self.fatigue.commit(eps.copy())
            ker.commit_fracture_transitions(self.fail_mode, self.mstate_c[:, I_SIG],
                                            self.fatigue.damage())

    # -- loads and masses ----------------------------------------------------

    def gravity_vector(self, dead_factor: float, live_factor: float) -> np.ndarray:
        f = np.zeros(self.n_dof)
        for node, load in self.model.gravity_dead.items():
            d = self._node_dof(node, 1)
            if d >= 0:
                f[d] -= dead_factor * load
        for node, load in self.model.gravity_live.items():
            d = self._node_dof(node, 1)
            if d >= 0:
                f[d] -= live_factor * load
        return f

    def wind_vector(self, floor_forces: np.ndarray) -> np.ndarray:
        if len(floor_forces) != len(self.floor_dofs):
            raise InputError(f"expected {len(self.floor_dofs)} floor forces")
        f = np.zeros(self.n_dof)
        for d, force in zip(self.floor_dofs, floor_forces):
            if d >= 0:
                f[d] += force
        return f

    # -- response extraction --------------------------------------------------

    def story_displacements(self, u: np.ndarray | None = None) -> np.ndarray:
        u = self.u if u is None else u
        return np.array([u[d] if d >= 0 else 0.0 for d in self.story_dofs])

    def story_drifts(self, u: np.ndarray | None = None) -> np.ndarray:
        disp = self.story_displacements(u)
        elev = np.asarray(self.model.story_elevations)
        below = np.concatenate(([0.0], disp[:-1]))
        elev_below = np.concatenate(([0.0], elev[:-1]))
        return (disp - below) / (elev - elev_below)

    def roof_displacement(self, u: np.ndarray | None = None) -> float:
        return float(self.story_displacements(u)[-1])

    def member_mid_offset(self, rec: MemberRecord, u: np.ndarray | None = None) -> float:
        """Perpendicular offset of the mid-length node relative to the member
        chord, net of the initial camber."""
        u = self.u if u is None else u

        def pos(knode: int, name_dofs: tuple[int, int]) -> np.ndarray:
            ux = u[name_dofs[0]] if name_dofs[0] >= 0 else 0.0
            uy = u[name_dofs[1]] if name_dofs[1] >= 0 else 0.0
            return self.xy0[knode] + np.array([ux, uy])

        el_first = self.members[self.members.index(rec)].element_ids[0] if False else rec.element_ids[0]
        el_last = rec.element_ids[-1]
        dof_i = (self.edof[el_first, 0], self.edof[el_first, 1])
        dof_j = (self.edof[el_last, 3], self.edof[el_last, 4])
        mid_el = rec.element_ids[len(rec.element_ids) // 2]
        dof_m = (self.edof[mid_el, 0], self.edof[mid_el, 1])

        pi = pos(rec.end_knodes[0], dof_i)
        pj = pos(rec.end_knodes[1], dof_j)
        pm = pos(rec.mid_knode, dof_m)
        chord = pj - pi
        ln = np.linalg.norm(chord)
        perp = np.array([-chord[1], chord[0]]) / ln
        return float(np.dot(pm - pi, perp) - rec.camber)

    def component_status(self) -> dict[str, dict]:
        """Per-member limit state flags from the committed state."""
        nip = len(self.xi)
        out = {}
        for rec in self.members:
            lo, hi = rec.fiber_rows
            epsy = (self.mpar[lo:hi, P_FY] / self.mpar[lo:hi, P_E])
            yielded = ((self.eps_peak[lo:hi] > YIELD_STRAIN_RATIO * epsy)
                       | (self.eps_trough[lo:hi] < -YIELD_STRAIN_RATIO * epsy))
            fractured = self.fail_mode[lo:hi] != INTACT
            nf = (hi - lo) // nip
            y_sec = yielded.reshape(nip, nf)
            f_sec = fractured.reshape(nip, nf)
            offset = self.member_mid_offset(rec)
            out[rec.member_id] = {
                "first_fiber_yield": bool(yielded.any()),
                "full_section_yield": bool(y_sec.all(axis=1).any()),
                "partial_fracture": bool(fractured.any()),
                "full_fracture": bool(f_sec.all(axis=1).any()),
                "buckled": bool(abs(offset) > BUCKLING_OFFSET_RATIO * rec.length),
                "mid_offset": offset,
                "max_damage": float(self.fatigue.damage()[lo:hi].max()) if hi > lo else 0.0,
            }
        return out

    def natural_frequencies(self, n: int = 2) -> np.ndarray:
        """First n frequencies [Hz] at the committed state (massive DOFs
        condensed against the rest of the tangent)."""
        _, k, ok = self.resisting(self.u)
        if not ok:
            raise ModelStateError("cannot extract frequencies from a failed state")
        massed = np.nonzero(self.mass > 0)[0]
        if not len(massed):
            raise ModelStateError("model has no mass")
        rest = np.nonzero(self.mass == 0)[0]
        kmm = k[np.ix_(massed, massed)]
        if len(rest):
            kms = k[np.ix_(massed, rest)]
            kss = k[np.ix_(rest, rest)]
            kmm = kmm - kms @ np.linalg.solve(kss, kms.T)
        w2 = np.linalg.eigvalsh(np.linalg.solve(np.diag(self.mass[massed]), kmm)
                                if False else
                                np.diag(1 / np.sqrt(self.mass[massed])) @ kmm
                                @ np.diag(1 / np.sqrt(self.mass[massed])))
        w2 = np.sort(np.maximum(w2, 0.0))
        return np.sqrt(w2[:n]) / (2 * math.pi)

    def strain_energy_increment(self) -> float:
        """Fiber work over the last committed step plus elastic shear work;
        call between the previous and current committed states externally."""
        raise NotImplementedError("tracked by the integrator")


# ---------------------------------------------------------------------------
# Model file format
# ---------------------------------------------------------------------------

def save_frame_model(model: FrameModel, path: str | Path) -> None:
    lines = ["# windframe planar model", "[info]",
             f"nominal_fy {model.nominal_fy!r}",
             f"nominal_e {model.nominal_e!r}",
             f"shear_modulus {model.shear_modulus!r}"]
    if model.reference_member:
        lines.append(f"reference_member {model.reference_member}")
    lines.append("[sections]")
    for name, p in model.sections.items():
        if isinstance(p, WideFlange):
            lines.append(f"{name} W d={p.d!r} bf={p.bf!r} tf={p.tf!r} tw={p.tw!r}")
        else:
            lines.append(f"{name} R depth={p.depth!r} width={p.width!r}")
    lines.append("[nodes]")
    for name, (x, y) in model.nodes.items():
        lines.append(f"{name} {x!r} {y!r}")
    lines.append("[supports]")
    for name, fixed in model.supports.items():
        lines.append(f"{name} {int(fixed[0])} {int(fixed[1])} {int(fixed[2])}")
    lines.append("[members]")
    for m in model.members:
        lines.append(f"{m.member_id} {m.node_i} {m.node_j} {m.section} {m.role}")
    lines.append("[masses]")
    for name, kg in model.masses.items():
        lines.append(f"{name} {kg!r}")
    lines.append("[gravity]")
    for name in model.gravity_dead:
        dead = model.gravity_dead.get(name, 0.0)
        live = model.gravity_live.get(name, 0.0)
        lines.append(f"{name} {dead!r} {live!r}")
    lines.append("[diaphragms]")
    for group in model.diaphragms:
        lines.append(" ".join(group))
    lines.append("[stories]")
    lines.append(" ".join(model.story_nodes))
    Path(path).write_text("\n".join(lines) + "\n")


def load_frame_model(path: str | Path) -> FrameModel:
    path = Path(path)
    section = None
    info: dict[str, str] = {}
    sections: dict[str, WideFlange | RectangleBar] = {}
    nodes: dict[str, tuple[float, float]] = {}
    supports: dict[str, tuple[bool, bool, bool]] = {}
    members: list[Member] = []
    masses: dict[str, float] = {}
    gravity_dead: dict[str, float] = {}
    gravity_live: dict[str, float] = {}
    diaphragms: list[list[str]] = []
    stories: list[str] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            section = line.strip("[]")
            continue
        parts = line.split()
        try:
            if section == "info":
                info[parts[0]] = parts[1]
            elif section == "sections":
                name, kind = parts[0], parts[1]
                kv = dict(p.split("=") for p in parts[2:])
                if kind == "W":
                    sections[name] = WideFlange(name, float(kv["d"]), float(kv["bf"]),
                                                float(kv["tf"]), float(kv["tw"]))
                elif kind == "R":
                    sections[name] = RectangleBar(name, float(kv["depth"]), float(kv["width"]))
                else:
                    raise InputError(f"unknown section kind {kind!r}")
            elif section == "nodes":
                nodes[parts[0]] = (float(parts[1]), float(parts[2]))
            elif section == "supports":
                supports[parts[0]] = (bool(int(parts[1])), bool(int(parts[2])),
                                      bool(int(parts[3])))
            elif section == "members":
                members.append(Member(parts[0], parts[1], parts[2], parts[3], parts[4]))
            elif section == "masses":
                masses[parts[0]] = float(parts[1])
            elif section == "gravity":
                gravity_dead[parts[0]] = float(parts[1])
                gravity_live[parts[0]] = float(parts[2])
            elif section == "diaphragms":
                diaphragms.append(parts)
            elif section == "stories":
                stories.extend(parts)
            else:
                raise InputError(f"line outside a known section")
        except (IndexError, ValueError, KeyError) as exc:
            raise InputError(f"{path}:{lineno}: {exc}") from None
    return FrameModel(
        nodes=nodes, sections=sections, members=members, supports=supports,
        masses=masses, gravity_dead=gravity_dead, gravity_live=gravity_live,
        diaphragms=diaphragms, story_nodes=stories,
        nominal_fy=float(info.get("nominal_fy", 345e6)),
        nominal_e=float(info.get("nominal_e", 200e9)),
        shear_modulus=float(info.get("shear_modulus", 77e9)),
        reference_member=info.get("reference_member"),
    )


# ---------------------------------------------------------------------------
# Bundled desk-scale archetype
# ---------------------------------------------------------------------------

def archetype_8story(bay: float = 6.0, story: float = 4.0,
                     floor_mass: float = 170e3,
                     frame_dead: float = 300e3, frame_live: float = 60e3,
                     leaning_dead: float = 1200e3, leaning_live: float = 240e3,
                     ) -> FrameModel:
    """Single-bay 8-story braced frame with a leaning column.

    Gravity on the frame nodes reflects the columns' tributary area; the
    leaning column carries the rest of the half-building gravity. Masses are
    lumped per floor on the rigid diaphragm.
    """
    n_story = 8
    sections = {
        "COL-LOW": WideFlange("COL-LOW", 0.356, 0.368, 0.0180, 0.0112),
        "COL-UP": WideFlange("COL-UP", 0.354, 0.2045, 0.0167, 0.0094),
        "BRACE": WideFlange("BRACE", 0.260, 0.256, 0.0173, 0.0105),
        "LEAN": WideFlange("LEAN", 0.40, 0.40, 0.05, 0.05),
    }
    nodes = {}
    for lvl in range(n_story + 1):
        nodes[f"L{lvl}"] = (0.0, story * lvl)
        nodes[f"R{lvl}"] = (bay, story * lvl)
        nodes[f"P{lvl}"] = (2 * bay, story * lvl)
    members = []
    for lvl in range(n_story):
        sec = "COL-LOW" if lvl < 4 else "COL-UP"
        members.append(Member(f"colL{lvl + 1}", f"L{lvl}", f"L{lvl + 1}", sec, "column"))
        members.append(Member(f"colR{lvl + 1}", f"R{lvl}", f"R{lvl + 1}", sec, "column"))
        if lvl % 2 == 0:
            members.append(Member(f"br{lvl + 1}", f"L{lvl}", f"R{lvl + 1}", "BRACE", "brace"))
        else:
            members.append(Member(f"br{lvl + 1}", f"R{lvl}", f"L{lvl + 1}", "BRACE", "brace"))
        members.append(Member(f"lean{lvl + 1}", f"P{lvl}", f"P{lvl + 1}", "LEAN", "leaning"))
    supports = {"L0": (True, True, False), "R0": (True, True, False),
                "P0": (True, True, False)}
    masses = {f"L{lvl}": floor_mass for lvl in range(1, n_story + 1)}
    gravity_dead = {}
    gravity_live = {}
    for lvl in range(1, n_story + 1):
        for line in ("L", "R"):
            gravity_dead[f"{line}{lvl}"] = frame_dead / 2
            gravity_live[f"{line}{lvl}"] = frame_live / 2
        gravity_dead[f"P{lvl}"] = leaning_dead
        gravity_live[f"P{lvl}"] = leaning_live
    diaphragms = [[f"L{lvl}", f"R{lvl}", f"P{lvl}"] for lvl in range(1, n_story + 1)]
    story_nodes = [f"L{lvl}" for lvl in range(1, n_story + 1)]
    return FrameModel(
        nodes=nodes, sections=sections, members=members, supports=supports,
        masses=masses, gravity_dead=gravity_dead, gravity_live=gravity_live,
        diaphragms=diaphragms, story_nodes=story_nodes,
        reference_member="br1",
    )
