"""Unit-commitment model assembly and schedule extraction.

Builds the two-stage stochastic UC as a MilpModel: first-stage binary
commitments (shared across scenario leaves), per-leaf recourse in
dispatch, wind, reserve, synthetic inertia and load shedding.  SCC
constraints come in two flavors: the fitted linear surrogate (with
binary products linearized exactly) or the analytical embedding of the
commitment-dependent impedance matrix with McCormick-relaxed products.
Frequency security adds piecewise-linear nadir planes plus steady-state
and RoCoF bounds.

Every extracted schedule is audited from scratch against the exact SCC
oracle; audit results are flags, never copied from surrogate values.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import milp
from .network import GROUND, NetworkCase, FrequencyParams, UcInstance
from .scc import CommitmentPattern, IslandedNetworkError, build_admittance, scc_all_buses
from .surrogate import SurrogateModel, sg_pairs
from . import linalg

log = logging.getLogger("sccuc")

AUDIT_TOL = 1e-6       # exact-SCC slack allowed before an audit flag
AM_BUS_GUARD = 12


class AmGuardError(ValueError):
    """Analytical SCC mode refused (too many buses or resistive branches)."""


class ZBoundError(ValueError):
    """The impedance bound for the McCormick relaxation binds or is invalid."""


class EmptyFeasibleRegionError(ValueError):
    """No (H, R, Hs) point in the sampling box satisfies the nadir constraint."""


class PlaneAuditError(RuntimeError):
    """A generated nadir plane failed its generation-time audit."""


# ------------------------------------------------------------ nadir planes

@dataclass(frozen=True)
class NadirPlane:
    """Half-space a*H + b*R + sum_j c[j]*Hs_j + d <= 0."""

    a: float
    b: float
    c: tuple[float, ...]
    d: float

    def violation(self, h: float, r: float, hs) -> float:
        return self.a * h + self.b * r + float(np.dot(self.c, hs)) + self.d


@dataclass
class NadirGrid:
    """Sampling spec for tangent-plane generation and its audit."""

    h_lo: float
    h_hi: float
    n_h: int = 4
    hs_points: int = 2
    r_max: float = float("inf")
    audit_samples: int = 10000
    seed: int = 0


def _nadir_rhs_terms(freq: FrequencyParams):
    k2 = freq.dp_l * freq.t_d / 4.0
    k0 = freq.dp_l ** 2 * freq.t_d / (4.0 * freq.df_lim) - k2 * freq.damping
    gammas = np.array([f.gamma for f in freq.farms])
    return k0, k2, gammas


def nadir_required(freq: FrequencyParams, h: float, hs) -> float:
    """Exact PFR requirement R >= (K0 + K2 sum gamma Hs^2) / H."""
    k0, k2, gammas = _nadir_rhs_terms(freq)
    hs = np.asarray(hs, dtype=float)
    return (k0 + k2 * float(gammas @ (hs ** 2))) / h


def generate_nadir_planes(freq: FrequencyParams, grid: NadirGrid) -> list[NadirPlane]:
    """Tangent cuts of the nadir surface over the sampling grid.

    The exact feasible set {R >= (K0 + K2 sum gamma Hs^2)/H, H > 0} is
    convex (quadratic-over-linear), so tangent planes are outer bounds:
    every feasible point satisfies every plane.  Both directions are
    audited numerically at generation time; any failure raises.
    """
    freq.validate()
    if grid.h_lo <= 0 or grid.h_hi <= grid.h_lo:
        raise ValueError("need 0 < h_lo < h_hi in the sampling grid")
    k0, k2, gammas = _nadir_rhs_terms(freq)
    si_caps = np.array([f.si_max for f in freq.farms])
    nf = len(freq.farms)

    if nadir_required(freq, grid.h_hi, np.zeros(nf)) > grid.r_max:
        raise EmptyFeasibleRegionError(
            "nadir constraint unsatisfiable: even at maximum inertia and zero SI the "
            f"required response {nadir_required(freq, grid.h_hi, np.zeros(nf)):.4g} "
            f"exceeds r_max={grid.r_max:.4g}"
        )

    h_pts = np.linspace(grid.h_lo, grid.h_hi, grid.n_h)
    if nf:
        axes = [np.linspace(0.0, cap, grid.hs_points) for cap in si_caps]
        mesh = np.meshgrid(*axes, indexing="ij")
        hs_pts = np.column_stack([m.ravel() for m in mesh])
    else:
        hs_pts = np.zeros((1, 0))

    planes = []
    anchors = []
    for h0 in h_pts:
        for hs0 in hs_pts:
            g_val = k0 + k2 * float(gammas @ (hs0 ** 2)) if nf else k0
            phi = g_val / h0
            dphi_dh = -g_val / h0 ** 2
            dphi_dhs = (2.0 * k2 * gammas * hs0 / h0) if nf else np.zeros(0)
            d = phi - dphi_dh * h0 - float(dphi_dhs @ hs0)
            planes.append(NadirPlane(a=float(dphi_dh), b=-1.0,
                                     c=tuple(float(v) for v in dphi_dhs), d=float(d)))
            anchors.append((float(h0), hs0.copy(), float(phi)))

    _audit_planes(freq, grid, planes, anchors)
    return planes


def _audit_planes(freq: FrequencyParams, grid: NadirGrid, planes, anchors):
    rng = np.random.default_rng(grid.seed)
    nf = len(freq.farms)
    si_caps = np.array([f.si_max for f in freq.farms])
    failures = 0
    for _ in range(grid.audit_samples):
        h = rng.uniform(grid.h_lo, grid.h_hi)
        hs = rng.uniform(0.0, si_caps) if nf else np.zeros(0)
        r_req = nadir_required(freq, h, hs)
        r = r_req + rng.uniform(0.0, 1.0 + abs(r_req))
        if any(p.violation(h, r, hs) > 1e-9 for p in planes):
            failures += 1
    if failures:
        raise PlaneAuditError(f"{failures} feasible samples violated a tangent plane")
    # near-tangency probes: a point just below the surface at each anchor
    # must be cut off by at least one plane (its own tangent is active there)
    probe = 0
    for (h0, hs0, phi) in anchors[:200]:
        if phi <= 0:
            continue   # constraint inactive at this anchor, nothing to cut
        r_bad = phi - 1e-3 * (1.0 + abs(phi))
        if not any(q.violation(h0, r_bad, hs0) > 0 for q in planes):
            probe += 1
    if probe:
        raise PlaneAuditError(f"{probe} near-tangency infeasible probes were not cut off")


# ------------------------------------------------------- binary products

def linearize_binary_product(model: milp.MilpModel, x1, x2, name: str) -> int:
    """Continuous eta in [0,1] forced equal to x1*x2 at binary points."""
    i1, i2 = model.index(x1), model.index(x2)
    eta = model.add_var(name, 0.0, 1.0)
    model.add_constr(f"{name}_le1", [(eta, 1.0), (i1, -1.0)], "<=", 0.0)
    model.add_constr(f"{name}_le2", [(eta, 1.0), (i2, -1.0)], "<=", 0.0)
    model.add_constr(f"{name}_ge", [(eta, 1.0), (i1, -1.0), (i2, -1.0)], ">=", -1.0)
    return eta


# ------------------------------------------------------------- AM bounds

def _components(case: NetworkCase) -> list[list[int]]:
    parent = list(range(case.n_bus))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for br in case.branches:
        if br.to_bus != GROUND:
            ra, rb = find(br.from_bus), find(br.to_bus)
            if ra != rb:
                parent[ra] = rb
    groups: dict[int, list[int]] = {}
    for b in range(case.n_bus):
        groups.setdefault(find(b), []).append(b)
    return list(groups.values())


def am_z_bound(case: NetworkCase, margin: float = 1.25) -> float:
    """Valid upper bound on |Z| entries over all nonsingular commitments.

    On reactance-only networks B(x) is a Stieltjes matrix, so its inverse
    shrinks elementwise as more SG shunts commit; the maximum is attained
    at inclusion-minimal nonsingular patterns (one SG per component that
    has no grounding branch).  All such patterns are enumerated.
    """
    comps = _components(case)
    grounded = set()
    for br in case.branches:
        if br.to_bus == GROUND:
            for k, comp in enumerate(comps):
                if br.from_bus in comp:
                    grounded.add(k)
    per_comp_sgs = []
    for k, comp in enumerate(comps):
        if k in grounded:
            continue
        sgs = [g for g, gen in enumerate(case.sgs) if gen.bus in comp]
        if not sgs:
            raise AmGuardError(
                f"buses {[b + 1 for b in comp]} have no SG and no grounding branch; "
                "every commitment is singular there"
            )
        per_comp_sgs.append(sgs)

    import itertools
    combos = list(itertools.product(*per_comp_sgs)) if per_comp_sgs else [()]
    if len(combos) > 512:
        combos = combos[:512]
    zmax = 0.0
    for combo in combos:
        x = [0] * case.n_sg
        for g in combo:
            x[g] = 1
        y = build_admittance(case, x)
        try:
            z = linalg.invert(y)
        except linalg.SingularMatrixError:
            continue
        zmax = max(zmax, float(np.max(np.abs(z))))
    if zmax == 0.0:
        raise AmGuardError("no nonsingular minimal commitment found")
    return zmax * margin


# ---------------------------------------------------------------- builder

@dataclass
class UcBuildInfo:
    """Everything extract_and_audit needs to decode a solved model."""

    inst: UcInstance
    scc_mode: str
    freq_on: bool
    si_enabled: bool
    leaves: list
    alpha: np.ndarray          # (n_leaf, T, n_ibg)
    avail: np.ndarray          # (n_leaf, T, n_ibg)
    demand: np.ndarray         # (n_leaf, T)
    planes: list[NadirPlane] = field(default_factory=list)
    zmax: float = 0.0
    am_w_names: list = field(default_factory=list)   # (name, t, i, j)


def _alpha_table(inst: UcInstance):
    case = inst.case
    leaves = list(inst.leaves())
    t_count = inst.n_periods
    alpha = np.zeros((len(leaves), t_count, case.n_ibg))
    avail = np.zeros((len(leaves), t_count, case.n_ibg))
    demand = np.zeros((len(leaves), t_count))
    for s, leaf in enumerate(leaves):
        for t in range(t_count):
            demand[s, t] = sum(b.demand[t] for b in case.buses) * leaf.demand_scale
            for c, gen in enumerate(case.ibgs):
                av = min(max(gen.avail[t] * leaf.avail_scale, 0.0), gen.capacity)
                avail[s, t, c] = av
                alpha[s, t, c] = av / gen.capacity if gen.capacity > 0 else 0.0
    return leaves, alpha, avail, demand


def build_uc(
    inst: UcInstance,
    scc_mode: str = "none",
    surrogate_model: SurrogateModel | None = None,
    freq_on: bool = False,
    si_enabled: bool = True,
    nadir_grid: NadirGrid | None = None,
    zmax: float | None = None,
) -> tuple[milp.MilpModel, UcBuildInfo]:
    """Assemble the UC MILP for an instance.

    scc_mode: "none", "surrogate" (requires surrogate_model) or "am".
    freq_on requires the instance to carry frequency parameters.
    """
    inst.validate()
    case = inst.case
    if scc_mode not in ("none", "surrogate", "am"):
        raise ValueError(f"unknown scc_mode {scc_mode!r}")
    if scc_mode == "surrogate" and surrogate_model is None:
        raise ValueError("surrogate mode needs a fitted SurrogateModel")
    if freq_on and inst.freq is None:
        raise ValueError("freq_on requires frequency parameters in the instance")

    leaves, alpha, avail, demand = _alpha_table(inst)
    n_leaf, t_count = len(leaves), inst.n_periods
    ng, nc = case.n_sg, case.n_ibg
    dt = inst.dt
    model = milp.MilpModel("uc")
    info = UcBuildInfo(
        inst=inst, scc_mode=scc_mode, freq_on=freq_on, si_enabled=si_enabled,
        leaves=leaves, alpha=alpha, avail=avail, demand=demand,
    )

    # ---- first stage: commitment, startup, shutdown, pair products
    x = [[model.add_var(f"x_g{g}_t{t}", kind="b") for t in range(t_count)] for g in range(ng)]
    u = [[model.add_var(f"u_g{g}_t{t}", 0.0, 1.0) for t in range(t_count)] for g in range(ng)]
    dvar = [[model.add_var(f"d_g{g}_t{t}", 0.0, 1.0) for t in range(t_count)] for g in range(ng)]
    for g in range(ng):
        gen = case.sgs[g]
        for t in range(t_count):
            # u >= x_t - x_{t-1}; d >= x_{t-1} - x_t; all SGs start off
            start_terms = [(x[g][t], 1.0), (u[g][t], -1.0)]
            stop_terms = [(x[g][t], -1.0), (dvar[g][t], -1.0)]
            if t > 0:
                start_terms.append((x[g][t - 1], -1.0))
                stop_terms.append((x[g][t - 1], 1.0))
            model.add_constr(f"start_g{g}_t{t}", start_terms, "<=", 0.0)
            model.add_constr(f"stop_g{g}_t{t}", stop_terms, "<=", 0.0)
            lo = max(0, t - gen.tup + 1)
            model.add_constr(f"minup_g{g}_t{t}",
                             [(u[g][w], 1.0) for w in range(lo, t + 1)] + [(x[g][t], -1.0)],
                             "<=", 0.0)
            lo = max(0, t - gen.tdn + 1)
            model.add_constr(f"mindn_g{g}_t{t}",
                             [(dvar[g][w], 1.0) for w in range(lo, t + 1)] + [(x[g][t], 1.0)],
                             "<=", 1.0)

    eta: dict[tuple[int, int, int], int] = {}
    if scc_mode == "surrogate" and ng >= 2:
        for t in range(t_count):
            for (g1, g2) in sg_pairs(ng):
                eta[(g1, g2, t)] = linearize_binary_product(
                    model, x[g1][t], x[g2][t], f"eta_m{g1}_{g2}_t{t}")

    # ---- recourse: dispatch, wind, shed, reserve, SI
    p = np.empty((ng, t_count, n_leaf), dtype=int)
    w = np.empty((nc, t_count, n_leaf), dtype=int)
    shed = np.empty((t_count, n_leaf), dtype=int)
    rvar = np.empty((ng, t_count, n_leaf), dtype=int) if freq_on else None
    for s in range(n_leaf):
        for t in range(t_count):
            for g in range(ng):
                gen = case.sgs[g]
                p[g, t, s] = model.add_var(f"p_g{g}_t{t}_s{s}", 0.0, gen.pmax)
                if not freq_on:
                    # with freq on, p + r <= pmax*x subsumes this row
                    model.add_constr(f"pmax_g{g}_t{t}_s{s}",
                                     [(p[g, t, s], 1.0), (x[g][t], -gen.pmax)], "<=", 0.0)
                if gen.pmin > 0:
                    model.add_constr(f"pmin_g{g}_t{t}_s{s}",
                                     [(p[g, t, s], -1.0), (x[g][t], gen.pmin)], "<=", 0.0)
            for c in range(nc):
                w[c, t, s] = model.add_var(f"w_c{c}_t{t}_s{s}", 0.0, float(avail[s, t, c]))
            shed[t, s] = model.add_var(f"shed_t{t}_s{s}", 0.0, float(demand[s, t]))
            model.add_constr(
                f"balance_t{t}_s{s}",
                [(int(p[g, t, s]), 1.0) for g in range(ng)]
                + [(int(w[c, t, s]), 1.0) for c in range(nc)]
                + [(int(shed[t, s]), 1.0)],
                "=", float(demand[s, t]))

    # ---- frequency block
    if freq_on:
        freq = inst.freq
        nf = len(freq.farms)
        hs = np.empty((nf, t_count, n_leaf), dtype=int) if nf else None
        h_tot = case_inertia_max(case)
        hs_cap_total = sum(f.si_max for f in freq.farms) if si_enabled else 0.0
        if freq.hs_max > 0:
            hs_cap_total = min(hs_cap_total, freq.hs_max)
        if nadir_grid is None:
            h_rocof = freq.dp_l * freq.f0 / (2.0 * freq.rocof_lim)
            h_lo = max(1e-3, h_rocof)
            h_hi = max(h_tot + hs_cap_total, h_lo * 1.5)
            nadir_grid = NadirGrid(h_lo=h_lo, h_hi=h_hi,
                                   r_max=sum(g.pmax for g in case.sgs))
        info.planes = generate_nadir_planes(freq, nadir_grid)
        for s in range(n_leaf):
            for t in range(t_count):
                hvar = model.add_var(f"H_t{t}_s{s}", 0.0, milp.INF)
                rtot = model.add_var(f"R_t{t}_s{s}", 0.0, milp.INF)
                terms = [(hvar, 1.0)]
                for g in range(ng):
                    gen = case.sgs[g]
                    terms.append((x[g][t], -gen.h * gen.mbase))
                hs_terms = []
                for j in range(nf):
                    cap = freq.farms[j].si_max if si_enabled else 0.0
                    hs[j, t, s] = model.add_var(f"hs_f{j}_t{t}_s{s}", 0.0, cap)
                    hs_terms.append((int(hs[j, t, s]), 1.0))
                    terms.append((int(hs[j, t, s]), -1.0))
                model.add_constr(f"Hdef_t{t}_s{s}", terms, "=", 0.0)
                if nf and si_enabled and freq.hs_max > 0:
                    model.add_constr(f"simax_t{t}_s{s}", hs_terms, "<=", freq.hs_max)
                rterms = [(rtot, 1.0)]
                for g in range(ng):
                    gen = case.sgs[g]
                    rvar[g, t, s] = model.add_var(f"r_g{g}_t{t}_s{s}", 0.0, gen.pmax)
                    model.add_constr(f"headroom_g{g}_t{t}_s{s}",
                                     [(int(p[g, t, s]), 1.0), (int(rvar[g, t, s]), 1.0),
                                      (x[g][t], -gen.pmax)], "<=", 0.0)
                    rterms.append((int(rvar[g, t, s]), -1.0))
                model.add_constr(f"Rdef_t{t}_s{s}", rterms, "=", 0.0)
                # steady state and RoCoF
                model.add_constr(f"ss_t{t}_s{s}", [(rtot, 1.0)], ">=",
                                 freq.dp_l - freq.damping * freq.df_ss)
                model.add_constr(f"rocof_t{t}_s{s}", [(hvar, 1.0)], ">=",
                                 freq.dp_l * freq.f0 / (2.0 * freq.rocof_lim))
                for i, plane in enumerate(info.planes):
                    terms = [(hvar, plane.a), (rtot, plane.b)]
                    for j in range(nf):
                        if plane.c[j] != 0.0:
                            terms.append((int(hs[j, t, s]), plane.c[j]))
                    model.add_constr(f"nadir{i}_t{t}_s{s}", terms, "<=", -plane.d)

    # ---- SCC block
    active_limits = {b: v for b, v in inst.scc_limit.items() if v > 0}
    for b in inst.scc_limit:
        if inst.scc_limit[b] <= 0:
            log.info("scc limit at bus %d is 0: constraint inactive", b + 1)
    if scc_mode == "surrogate" and active_limits:
        for s in range(n_leaf):
            for t in range(t_count):
                for f_bus, lim in sorted(active_limits.items()):
                    sur = surrogate_model.bus(f_bus)
                    terms = [(x[g][t], float(sur.k_sg[g])) for g in range(ng)]
                    pairs = sg_pairs(ng)
                    for m, (g1, g2) in enumerate(pairs):
                        if sur.k_pair[m] != 0.0:
                            terms.append((eta[(g1, g2, t)], float(sur.k_pair[m])))
                    rhs = lim - float(np.dot(sur.k_ibg, alpha[s, t]))
                    model.add_constr(f"scc_F{f_bus}_t{t}_s{s}", terms, ">=", rhs)
    elif scc_mode == "am" and active_limits:
        _add_am_block(model, info, x, active_limits, zmax)

    # ---- objective
    obj = []
    probs = [leaf.prob for leaf in leaves]
    for g in range(ng):
        gen = case.sgs[g]
        for t in range(t_count):
            if gen.cst > 0:
                obj.append((u[g][t], gen.cst))
            if gen.cnl > 0:
                obj.append((x[g][t], gen.cnl * dt))
    for s in range(n_leaf):
        for t in range(t_count):
            for g in range(ng):
                gen = case.sgs[g]
                if gen.cm != 0:
                    obj.append((int(p[g, t, s]), probs[s] * gen.cm * dt))
            obj.append((int(shed[t, s]), probs[s] * inst.shed_cost * dt))
    model.set_objective(obj)
    return model, info


def case_inertia_max(case: NetworkCase) -> float:
    return sum(g.h * g.mbase for g in case.sgs)


def _add_am_block(model, info: UcBuildInfo, x, limits: dict, zmax: float | None):
    """Embed W * B(x) = I with McCormick-relaxed W-x products (reactance-only)."""
    inst = info.inst
    case = inst.case
    if case.n_bus > AM_BUS_GUARD:
        raise AmGuardError(f"analytical mode limited to {AM_BUS_GUARD} buses, case has {case.n_bus}")
    if any(br.r != 0.0 for br in case.branches):
        raise AmGuardError("analytical mode requires reactance-only branches")
    if zmax is None:
        zmax = am_z_bound(case)
    if zmax <= 0:
        raise ZBoundError("impedance bound must be positive; a zero bound always binds")
    info.zmax = zmax

    n = case.n_bus
    ng = case.n_sg
    t_count = inst.n_periods
    y0 = build_admittance(case, [0] * ng)
    b0 = -np.imag(y0)                     # Y = -jB on reactance-only networks

    for t in range(t_count):
        wv = [[model.add_var(f"W_t{t}_i{i}_j{j}", -zmax, zmax) for j in range(n)]
              for i in range(n)]
        for i in range(n):
            for j in range(n):
                info.am_w_names.append((f"W_t{t}_i{i}_j{j}", t, i, j))
        mu = {}
        for i in range(n):
            for g in range(ng):
                bus_g = case.sgs[g].bus
                m = model.add_var(f"mu_t{t}_i{i}_g{g}", -zmax, zmax)
                mu[(i, g)] = m
                xv = x[g][t]
                model.add_constr(f"mc1_t{t}_i{i}_g{g}", [(m, 1.0), (xv, -zmax)], "<=", 0.0)
                model.add_constr(f"mc2_t{t}_i{i}_g{g}", [(m, 1.0), (xv, zmax)], ">=", 0.0)
                model.add_constr(f"mc3_t{t}_i{i}_g{g}",
                                 [(m, 1.0), (wv[i][bus_g], -1.0), (xv, zmax)], "<=", zmax)
                model.add_constr(f"mc4_t{t}_i{i}_g{g}",
                                 [(m, 1.0), (wv[i][bus_g], -1.0), (xv, -zmax)], ">=", -zmax)
        # W B(x) = I rows
        for i in range(n):
            for j in range(n):
                terms = [(wv[i][k], float(b0[k, j])) for k in range(n) if b0[k, j] != 0.0]
                for g in range(ng):
                    if case.sgs[g].bus == j:
                        terms.append((mu[(i, g)], 1.0 / case.sgs[g].xd2))
                model.add_constr(f"zy_t{t}_i{i}_j{j}", terms, "=", 1.0 if i == j else 0.0)
        # SCC rows per leaf (alpha differs by leaf)
        for s in range(len(info.leaves)):
            for f_bus, lim in sorted(limits.items()):
                terms = []
                for g in range(ng):
                    gen = case.sgs[g]
                    inj = case.beta * case.buses[gen.bus].vn / gen.xd2
                    terms.append((mu[(f_bus, g)], inj))
                for c in range(case.n_ibg):
                    gen = case.ibgs[c]
                    a = float(info.alpha[s, t, c])
                    if a > 0 and gen.fault_current > 0:
                        terms.append((wv[f_bus][gen.bus], gen.fault_current * gen.pe_ratio * a))
                terms.append((wv[f_bus][f_bus], -lim))
                model.add_constr(f"amscc_F{f_bus}_t{t}_s{s}", terms, ">=", 0.0)


def check_am_bound(sol: milp.Solution, model: milp.MilpModel, info: UcBuildInfo):
    """Post-solve guard: the impedance bound must not bind at the optimum."""
    if not info.am_w_names or sol.values is None:
        return
    worst = max(abs(sol.value(model, name)) for name, *_ in info.am_w_names)
    if worst >= info.zmax * (1.0 - 1e-6):
        raise ZBoundError(
            f"impedance bound {info.zmax:.4g} binds (max |W| = {worst:.4g}); "
            "re-solve with a larger bound"
        )


# ------------------------------------------------------------- extraction

@dataclass
class AuditRow:
    node: int
    period: int
    bus: int
    scc_exact: float
    ilim: float
    flag: bool


@dataclass
class PeriodDispatch:
    node: int
    period: int
    x: tuple[int, ...]
    p: tuple[float, ...]
    r: tuple[float, ...]
    hs: tuple[float, ...]
    wind: tuple[float, ...]
    shed: float
    rho_w: float


@dataclass
class UcSchedule:
    status: str
    objective: float
    cost_startup: float
    cost_noload: float
    cost_marginal: float
    cost_shed: float
    dispatch: list[PeriodDispatch]
    audit: list[AuditRow]

    @property
    def audit_flags(self) -> int:
        return sum(1 for row in self.audit if row.flag)


def extract_and_audit(sol: milp.Solution, model: milp.MilpModel,
                      info: UcBuildInfo) -> UcSchedule:
    """Decode a solved UC model and re-verify its SCC from scratch.

    The audit recomputes the exact oracle for every (node, period) at
    the solved commitment and flags buses whose exact SCC falls short
    of the instance limit; it never reuses surrogate values.
    """
    if sol.status not in ("optimal", "gap-limit"):
        raise ValueError(f"cannot extract from a {sol.status} solution")
    inst = info.inst
    case = inst.case
    ng, nc = case.n_sg, case.n_ibg
    nf = len(inst.freq.farms) if (info.freq_on and inst.freq) else 0
    dispatch: list[PeriodDispatch] = []
    audit: list[AuditRow] = []
    cost_startup = cost_noload = cost_marginal = cost_shed = 0.0
    dt = inst.dt

    for g in range(ng):
        gen = case.sgs[g]
        for t in range(inst.n_periods):
            cost_startup += gen.cst * sol.value(model, f"u_g{g}_t{t}")
            cost_noload += gen.cnl * dt * sol.value(model, f"x_g{g}_t{t}")

    for s, leaf in enumerate(info.leaves):
        prob = leaf.prob
        for t in range(inst.n_periods):
            xs = tuple(int(round(sol.value(model, f"x_g{g}_t{t}"))) for g in range(ng))
            ps = tuple(sol.value(model, f"p_g{g}_t{t}_s{s}") for g in range(ng))
            ws = tuple(sol.value(model, f"w_c{c}_t{t}_s{s}") for c in range(nc))
            sh = sol.value(model, f"shed_t{t}_s{s}")
            rs = tuple(sol.value(model, f"r_g{g}_t{t}_s{s}") for g in range(ng)) \
                if info.freq_on else (0.0,) * ng
            hss = tuple(sol.value(model, f"hs_f{j}_t{t}_s{s}") for j in range(nf))
            d_tot = float(info.demand[s, t])
            rho = sum(ws) / d_tot if d_tot > 0 else 0.0
            dispatch.append(PeriodDispatch(
                node=leaf.id, period=t, x=xs, p=ps, r=rs, hs=hss, wind=ws,
                shed=sh, rho_w=rho,
            ))
            for g in range(ng):
                cost_marginal += prob * case.sgs[g].cm * dt * ps[g]
            cost_shed += prob * inst.shed_cost * dt * sh

            if inst.scc_limit:
                pattern = CommitmentPattern(xs, tuple(float(a) for a in info.alpha[s, t]))
                try:
                    res = scc_all_buses(case, pattern)
                    mags = res.magnitude
                except IslandedNetworkError:
                    mags = None
                    log.info("audit: islanded commitment at node %d period %d", leaf.id, t)
                for f_bus in sorted(inst.scc_limit):
                    lim = inst.scc_limit[f_bus]
                    exact = float(mags[f_bus]) if mags is not None else float("nan")
                    flag = (not np.isfinite(exact) and lim > 0) or exact < lim - AUDIT_TOL
                    audit.append(AuditRow(node=leaf.id, period=t, bus=f_bus,
                                          scc_exact=exact, ilim=lim, flag=bool(flag)))

    return UcSchedule(
        status=sol.status,
        objective=sol.objective,
        cost_startup=cost_startup,
        cost_noload=cost_noload,
        cost_marginal=cost_marginal,
        cost_shed=cost_shed,
        dispatch=dispatch,
        audit=audit,
    )
