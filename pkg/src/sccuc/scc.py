"""Exact short-circuit-current oracle for mixed SG/IBG networks.

Two independent computation paths are provided on purpose:

* scc_all_buses: the closed form on the commitment-dependent impedance
  matrix Z = (Y0 + Yg(x))^-1, one shot for every fault bus.
* verify_superposition: a direct two-stage nodal computation (pre-fault
  condition, then the pure-fault condition with the fault-bus voltage
  reversed) that never uses the closed-form rearrangement.  IBG
  pre-fault load currents enter both stages and must cancel in the
  result; tests sweep them to confirm.

Phase convention: the SG internal voltages share the beta*Vn angle-0
reference, and IBG fault injections are purely reactive (-j aligned).
On reactance-only networks every source contribution is then phase
coherent and magnitudes add linearly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .network import GROUND, NetworkCase


class IslandedNetworkError(ValueError):
    """Admittance matrix is singular: some buses see no path to any source.

    Carries the 0-based indices of the affected buses.
    """

    def __init__(self, buses, message=None):
        self.buses = tuple(buses)
        ext = ", ".join(str(b + 1) for b in self.buses)
        super().__init__(message or f"islanded/zero-source network; affected buses: {ext}")


@dataclass(frozen=True)
class CommitmentPattern:
    """SG on/off statuses and IBG online fractions."""

    x: tuple[int, ...]
    alpha: tuple[float, ...]

    def validate(self, case: NetworkCase):
        if len(self.x) != case.n_sg:
            raise ValueError(f"x has {len(self.x)} entries, case has {case.n_sg} SGs")
        if len(self.alpha) != case.n_ibg:
            raise ValueError(f"alpha has {len(self.alpha)} entries, case has {case.n_ibg} IBGs")
        if any(v not in (0, 1) for v in self.x):
            raise ValueError("x entries must be 0 or 1")
        if any(a < -1e-12 or a > 1 + 1e-12 for a in self.alpha):
            raise ValueError("alpha entries must lie in [0, 1]")


def all_on(case: NetworkCase) -> CommitmentPattern:
    return CommitmentPattern((1,) * case.n_sg, (1.0,) * case.n_ibg)


@dataclass
class SccResult:
    """Per-bus fault currents plus the impedance matrix they came from."""

    phasor: np.ndarray      # complex I''_sc per fault bus
    magnitude: np.ndarray   # |I''_sc| per fault bus, p.u.
    z: np.ndarray           # impedance matrix used
    zff: np.ndarray         # driving-point impedances diag(Z)


def build_admittance(case: NetworkCase, x) -> np.ndarray:
    """Nodal admittance Y = Y0 (lines) + Yg (committed SG subtransient shunts)."""
    if len(x) != case.n_sg:
        raise ValueError(f"x has {len(x)} entries, case has {case.n_sg} SGs")
    n = case.n_bus
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        ya = 1.0 / br.impedance
        i, j = br.from_bus, br.to_bus
        if j == GROUND:
            y[i, i] += ya
        else:
            y[i, i] += ya
            y[j, j] += ya
            y[i, j] -= ya
            y[j, i] -= ya
    for g, xg in zip(case.sgs, x):
        if xg:
            y[g.bus, g.bus] += 1.0 / (1j * g.xd2)
    return y


def sg_norton_current(case: NetworkCase, g: int) -> complex:
    """Norton source of SG g: (beta * Vn) / (j X''_d)."""
    gen = case.sgs[g]
    vn = case.buses[gen.bus].vn
    return case.beta * vn / (1j * gen.xd2)


def ibg_injection(case: NetworkCase, c: int, alpha: float) -> complex:
    """Fault-current phasor of IBG c at online fraction alpha (reactive, -j)."""
    gen = case.ibgs[c]
    return -1j * gen.fault_current * gen.pe_ratio * alpha


def _ungrounded_buses(case: NetworkCase, x) -> list[int]:
    """Buses in connected components that contain no committed SG and no
    grounding branch; these are what makes Y singular."""
    n = case.n_bus
    parent = list(range(n))

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
    grounded_roots = set()
    for br in case.branches:
        if br.to_bus == GROUND:
            grounded_roots.add(find(br.from_bus))
    for g, xg in zip(case.sgs, x):
        if xg:
            grounded_roots.add(find(g.bus))
    return sorted(b for b in range(n) if find(b) not in grounded_roots)


def _factor_or_islanded(case: NetworkCase, x) -> linalg.LuFactors:
    y = build_admittance(case, x)
    try:
        return linalg.lu_factor(y)
    except linalg.SingularMatrixError:
        bad = _ungrounded_buses(case, x)
        raise IslandedNetworkError(bad if bad else range(case.n_bus)) from None


def injection_vector(case: NetworkCase, pattern: CommitmentPattern) -> np.ndarray:
    """All source injections (SG Norton + IBG fault current) as a nodal vector."""
    j = np.zeros(case.n_bus, dtype=complex)
    for g, xg in enumerate(pattern.x):
        if xg:
            j[case.sgs[g].bus] += sg_norton_current(case, g)
    for c, a in enumerate(pattern.alpha):
        j[case.ibgs[c].bus] += ibg_injection(case, c, a)
    return j


def scc_all_buses(case: NetworkCase, pattern: CommitmentPattern) -> SccResult:
    """Closed-form subtransient SCC at every bus for one commitment pattern.

    I''_sc,F = (-sum_g Z[F,bus(g)] I_g x_g - sum_c Z[F,bus(c)] I_fc alpha_c) / Z_FF

    Raises IslandedNetworkError when Y(x) is singular.
    """
    pattern.validate(case)
    y = build_admittance(case, pattern.x)
    try:
        z = linalg.invert(y)
    except linalg.SingularMatrixError:
        bad = _ungrounded_buses(case, pattern.x)
        raise IslandedNetworkError(bad if bad else range(case.n_bus)) from None
    j = injection_vector(case, pattern)
    zff = np.diag(z).copy()
    phasor = -(z @ j) / zff
    return SccResult(phasor=phasor, magnitude=np.abs(phasor), z=z, zff=zff)


def default_ibg_load_currents(case: NetworkCase, period: int = 0) -> np.ndarray:
    """Pre-fault IBG load currents from a constant-impedance load model.

    The demand at the IBG's bus is served at nominal voltage, so the
    load impedance Vn^2/P draws I_L = P/Vn, in phase with the voltage.
    Only the superposition oracle consumes these; the closed form is
    provably independent of them.
    """
    out = np.zeros(case.n_ibg, dtype=complex)
    for c, gen in enumerate(case.ibgs):
        bus = case.buses[gen.bus]
        d = bus.demand[period] if period < len(bus.demand) else 0.0
        out[c] = d / bus.vn
    return out


def verify_superposition(
    case: NetworkCase,
    pattern: CommitmentPattern,
    fault_bus: int,
    load_scale: float = 1.0,
    ibg_load_current=None,
) -> complex:
    """Independent SCC oracle: explicit pre-fault / pure-fault superposition.

    Stage 1 solves the pre-fault network (SG Norton sources plus IBG
    load currents I_L) for the fault-bus voltage V_F(0).  Stage 2
    clamps the fault bus to -V_F(0), turns SG sources off (their
    admittances stay), injects I_f - I_L at the IBGs, and reads the
    clamp current, which is the fault current.  No closed-form
    shortcut is taken anywhere.
    """
    pattern.validate(case)
    if not (0 <= fault_bus < case.n_bus):
        raise ValueError(f"fault bus {fault_bus} out of range")
    f = _factor_or_islanded(case, pattern.x)
    y = build_admittance(case, pattern.x)
    n = case.n_bus

    if ibg_load_current is None:
        il = default_ibg_load_currents(case)
    else:
        il = np.asarray(ibg_load_current, dtype=complex).copy()
        if il.shape != (case.n_ibg,):
            raise ValueError("ibg_load_current must have one entry per IBG")
    il = il * load_scale

    # stage 1: pre-fault condition
    j_pre = np.zeros(n, dtype=complex)
    for g, xg in enumerate(pattern.x):
        if xg:
            j_pre[case.sgs[g].bus] += sg_norton_current(case, g)
    for c, gen in enumerate(case.ibgs):
        j_pre[gen.bus] += il[c]
    v0 = linalg.solve(f, j_pre)
    vf0 = v0[fault_bus]

    # stage 2: pure-fault condition, fault bus clamped to -V_F(0)
    j_pure = np.zeros(n, dtype=complex)
    for c, gen in enumerate(case.ibgs):
        j_pure[gen.bus] += ibg_injection(case, c, pattern.alpha[c]) - il[c]
    v_full = np.zeros(n, dtype=complex)
    v_full[fault_bus] = -vf0
    keep = [k for k in range(n) if k != fault_bus]
    if keep:
        y_red = y[np.ix_(keep, keep)]
        rhs = j_pure[keep] - y[keep, fault_bus] * (-vf0)
        try:
            f_red = linalg.lu_factor(y_red)
        except linalg.SingularMatrixError:
            raise IslandedNetworkError(keep, "post-fault network is singular") from None
        v_full[keep] = linalg.solve(f_red, rhs)
    return complex((y @ v_full)[fault_bus] - j_pure[fault_bus])
