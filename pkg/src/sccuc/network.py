"""Domain types for the network and unit-commitment instance.

All electrical quantities are stored in per-unit on the system base
power S_B.  Bus ids are 1-based in case files and 0-based internally;
the parser performs the shift, everything downstream is 0-based.
Instances are immutable after construction and safe to share between
threads.

Ground convention: a branch whose `to` field is 0 in the case file
connects `from` to the network reference (ground).  Internally the
ground end is stored as GROUND (-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

GROUND = -1

BETA_MIN = 0.95
BETA_MAX = 1.1


class CaseError(ValueError):
    """Semantic error in a case or instance (dangling ids, bad ranges)."""


@dataclass(frozen=True)
class Bus:
    index: int                  # 0-based internal index
    vn: float = 1.0             # nominal voltage, p.u.
    demand: tuple[float, ...] = ()   # real power per period, p.u. on S_B

    def validate(self):
        if self.vn <= 0:
            raise CaseError(f"bus {self.index + 1}: vn must be positive")
        if any(d < 0 for d in self.demand):
            raise CaseError(f"bus {self.index + 1}: demand must be >= 0 in every period")


@dataclass(frozen=True)
class Branch:
    from_bus: int               # 0-based
    to_bus: int                 # 0-based, or GROUND
    r: float = 0.0
    x: float = 0.0
    rate: float = float("inf")  # optional thermal limit, p.u.; inf = unlimited

    @property
    def impedance(self) -> complex:
        return complex(self.r, self.x)

    def validate(self, n_bus: int):
        label = f"branch {self.from_bus + 1}-{self.to_bus + 1 if self.to_bus != GROUND else 0}"
        if self.from_bus == self.to_bus:
            raise CaseError(f"{label}: from and to must differ")
        for b in (self.from_bus, self.to_bus):
            if b != GROUND and not (0 <= b < n_bus):
                raise CaseError(f"{label}: references nonexistent bus {b + 1}")
        if abs(self.impedance) <= 0:
            raise CaseError(f"{label}: impedance magnitude must be positive")
        if self.rate <= 0:
            raise CaseError(f"{label}: rate must be positive when given")


@dataclass(frozen=True)
class SynchGen:
    id: str
    bus: int                    # 0-based
    xd2: float                  # subtransient reactance, p.u.
    pmin: float = 0.0
    pmax: float = 0.0
    cm: float = 0.0             # marginal cost, currency / p.u. h
    cnl: float = 0.0            # no-load cost, currency / h
    cst: float = 0.0            # startup cost, currency
    tup: int = 1                # min up time, periods
    tdn: int = 1                # min down time, periods
    h: float = 0.0              # inertia constant, s on machine base
    mbase: float = 1.0          # machine base, p.u. on S_B

    def validate(self, n_bus: int):
        if not (0 <= self.bus < n_bus):
            raise CaseError(f"sg {self.id}: references nonexistent bus {self.bus + 1}")
        if self.xd2 <= 0:
            raise CaseError(f"sg {self.id}: xd2 must be positive")
        if not (0 <= self.pmin <= self.pmax):
            raise CaseError(f"sg {self.id}: need 0 <= pmin <= pmax")
        if min(self.cm, self.cnl, self.cst) < 0:
            raise CaseError(f"sg {self.id}: costs must be >= 0")
        if self.h < 0:
            raise CaseError(f"sg {self.id}: inertia constant must be >= 0")
        if self.mbase <= 0:
            raise CaseError(f"sg {self.id}: machine base must be positive")
        if self.tup < 0 or self.tdn < 0:
            raise CaseError(f"sg {self.id}: min up/down times must be >= 0")


@dataclass(frozen=True)
class Ibg:
    id: str
    bus: int                    # 0-based
    fault_current: float        # I_f, p.u. injection magnitude during faults
    capacity: float
    pe_ratio: float = 1.0       # multiplier on I_f (PE overcapacity)
    avail: tuple[float, ...] = ()    # available power per period, p.u.

    def validate(self, n_bus: int):
        if not (0 <= self.bus < n_bus):
            raise CaseError(f"ibg {self.id}: references nonexistent bus {self.bus + 1}")
        if self.fault_current < 0:
            raise CaseError(f"ibg {self.id}: fault current must be >= 0")
        if self.capacity < 0:
            raise CaseError(f"ibg {self.id}: capacity must be >= 0")
        if self.pe_ratio < 1.0:
            raise CaseError(f"ibg {self.id}: pe_ratio must be >= 1")
        if any(a < 0 or a > self.capacity + 1e-12 for a in self.avail):
            raise CaseError(f"ibg {self.id}: avail must lie in [0, capacity]")


@dataclass(frozen=True)
class NetworkCase:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    sgs: tuple[SynchGen, ...]
    ibgs: tuple[Ibg, ...]
    base_mva: float = 100.0
    beta: float = 0.95          # E''_g = beta * V_n

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def n_sg(self) -> int:
        return len(self.sgs)

    @property
    def n_ibg(self) -> int:
        return len(self.ibgs)

    def sg_index(self, sg_id: str) -> int:
        for i, g in enumerate(self.sgs):
            if g.id == sg_id:
                return i
        raise CaseError(f"unknown sg id {sg_id!r}")

    def validate(self):
        if self.base_mva <= 0:
            raise CaseError("system: base_mva must be positive")
        if not (BETA_MIN <= self.beta <= BETA_MAX):
            raise CaseError(f"system: beta must lie in [{BETA_MIN}, {BETA_MAX}]")
        if not self.buses:
            raise CaseError("case has no buses")
        if not self.sgs and not self.ibgs:
            raise CaseError("case needs at least one sg or ibg")
        n = self.n_bus
        for b in self.buses:
            b.validate()
        for br in self.branches:
            br.validate(n)
        seen = set()
        for g in self.sgs:
            g.validate(n)
            if g.id in seen:
                raise CaseError(f"duplicate generator id {g.id!r}")
            seen.add(g.id)
        for c in self.ibgs:
            c.validate(n)
            if c.id in seen:
                raise CaseError(f"duplicate generator id {c.id!r}")
            seen.add(c.id)

    def with_pe_ratio(self, ratio: float) -> "NetworkCase":
        """Copy of the case with every IBG's pe_ratio replaced."""
        ibgs = tuple(
            Ibg(c.id, c.bus, c.fault_current, c.capacity, ratio, c.avail) for c in self.ibgs
        )
        case = NetworkCase(self.buses, self.branches, self.sgs, ibgs, self.base_mva, self.beta)
        case.validate()
        return case


@dataclass(frozen=True)
class WindFarm:
    id: str
    gamma: float                # negative-damping coefficient of SI provision
    si_max: float               # per-farm synthetic inertia cap, s

    def validate(self):
        if self.gamma < 0:
            raise CaseError(f"farm {self.id}: gamma must be >= 0")
        if self.si_max <= 0:
            raise CaseError(f"farm {self.id}: si_max must be positive")


@dataclass(frozen=True)
class FrequencyParams:
    damping: float              # D, p.u. / Hz
    t_d: float                  # PFR delivery time, s
    dp_l: float                 # disturbance size, p.u.
    df_lim: float               # nadir limit, Hz
    df_ss: float                # steady-state limit, Hz
    rocof_lim: float            # Hz / s
    f0: float = 50.0
    hs_max: float = 0.0         # bound on total synthetic inertia, s
    farms: tuple[WindFarm, ...] = ()

    def validate(self):
        for name in ("damping", "t_d", "dp_l", "df_lim", "df_ss", "rocof_lim", "f0"):
            if getattr(self, name) <= 0:
                raise CaseError(f"freq: {name} must be positive")
        if self.hs_max < 0:
            raise CaseError("freq: hs_max must be >= 0")
        for f in self.farms:
            f.validate()


@dataclass(frozen=True)
class TreeNode:
    id: int
    parent: int                 # -1 for the root
    prob: float
    demand_scale: float = 1.0
    avail_scale: float = 1.0


@dataclass(frozen=True)
class UcInstance:
    case: NetworkCase
    n_periods: int
    dt: float                   # hours per period
    tree: tuple[TreeNode, ...]  # root first
    shed_cost: float            # currency / p.u. h
    scc_limit: dict = field(default_factory=dict)   # bus index -> I''_lim, p.u.
    freq: FrequencyParams | None = None

    def leaves(self) -> tuple[TreeNode, ...]:
        parents = {n.parent for n in self.tree}
        return tuple(n for n in self.tree if n.id not in parents)

    def validate(self):
        if self.n_periods < 1:
            raise CaseError("periods: n must be >= 1")
        if self.dt <= 0:
            raise CaseError("periods: dt must be positive")
        if self.shed_cost < 0:
            raise CaseError("shed_cost must be >= 0")
        for b in self.case.buses:
            if len(b.demand) < self.n_periods:
                raise CaseError(
                    f"bus {b.index + 1}: demand profile shorter than horizon "
                    f"({len(b.demand)} < {self.n_periods})"
                )
        for c in self.case.ibgs:
            if len(c.avail) < self.n_periods:
                raise CaseError(
                    f"ibg {c.id}: avail profile shorter than horizon "
                    f"({len(c.avail)} < {self.n_periods})"
                )
        if not self.tree:
            raise CaseError("tree: needs at least the root node")
        ids = [n.id for n in self.tree]
        if len(set(ids)) != len(ids):
            raise CaseError("tree: duplicate node ids")
        byid = {n.id: n for n in self.tree}
        root = self.tree[0]
        if root.parent != -1:
            raise CaseError("tree: first node must be the root (parent -1)")
        if abs(root.prob - 1.0) > 1e-9:
            raise CaseError(f"tree: root probability must be 1, got {root.prob}")
        for n in self.tree[1:]:
            if n.parent not in byid:
                raise CaseError(f"tree: node {n.id} references unknown parent {n.parent}")
        for n in self.tree:
            kids = [k for k in self.tree if k.parent == n.id]
            if kids:
                s = sum(k.prob for k in kids)
                if abs(s - n.prob) > 1e-9:
                    raise CaseError(
                        f"tree: children of node {n.id} have probabilities summing to "
                        f"{s!r}, expected {n.prob!r}"
                    )
        for bus in self.scc_limit:
            if not (0 <= bus < self.case.n_bus):
                raise CaseError(f"scc_limit: unknown bus {bus + 1}")
            if self.scc_limit[bus] < 0:
                raise CaseError(f"scc_limit: bus {bus + 1} limit must be >= 0")
        if self.freq is not None:
            self.freq.validate()
