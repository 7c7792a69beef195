"""Case-file and UC-instance parsing and writing.

The on-disk format is a structured key/value document:

    # network case
    system { base_mva 100.0 beta 0.95 }
    bus { id 1 vn 1.0 demand 0.6 0.9 }
    branch { from 1 to 2 r 0.0 x 0.1 }
    sg { id g1 bus 1 xd2 0.2 pmin 0.1 pmax 1.0 cm 30.0 cnl 5.0 cst 10.0
         tup 1 tdn 1 h 4.0 mbase 1.0 }
    ibg { id w1 bus 2 if 1.0 cap 0.5 pe_ratio 1.0 avail 0.3 0.5 }

A `to 0` in a branch grounds the `from` bus.  The UC-instance document
adds `periods {n, dt}`, `tree[]`, `shed_cost`, `scc_limit[]` and an
optional `freq {...}` block with nested `farm {...}` entries.

Array-valued keys (demand, avail) greedily consume numeric tokens;
every other key takes exactly one token.  Buses must appear in id
order 1..N so file order and id order agree; sg/ibg indices follow
file order.  write_case emits a canonical form, so serialization is
byte-stable and parse(write(c)) == c structurally.
"""

from __future__ import annotations

from importlib import resources

from .network import (
    GROUND,
    Branch,
    Bus,
    CaseError,
    FrequencyParams,
    Ibg,
    NetworkCase,
    SynchGen,
    TreeNode,
    UcInstance,
    WindFarm,
)


class CaseSyntaxError(ValueError):
    """Malformed case-file text, with the offending line number."""


# ---------------------------------------------------------------- tokenizer

class _Tok:
    __slots__ = ("text", "line")

    def __init__(self, text, line):
        self.text = text
        self.line = line

    def __repr__(self):
        return f"{self.text!r}@{self.line}"


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        body = body.replace("{", " { ").replace("}", " } ")
        for word in body.split():
            toks.append(_Tok(word, lineno))
    return toks


class _Stream:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def next(self, what: str) -> _Tok:
        t = self.peek()
        if t is None:
            last = self.toks[-1].line if self.toks else 1
            raise CaseSyntaxError(f"line {last}: unexpected end of document, expected {what}")
        self.pos += 1
        return t

    def expect(self, text: str, what: str) -> _Tok:
        t = self.next(what)
        if t.text != text:
            raise CaseSyntaxError(f"line {t.line}: expected {what}, got {t.text!r}")
        return t


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _parse_block(ts: _Stream, section: str, keys: dict, nested: dict | None = None):
    """Parse `{ key value... }`.  keys maps key -> 'one' | 'many'.
    nested maps a key to a sub-block parser; results collect in lists."""
    ts.expect("{", f"'{{' opening section {section!r}")
    out: dict = {}
    while True:
        t = ts.next(f"key or '}}' in section {section!r}")
        if t.text == "}":
            return out
        key = t.text
        if nested and key in nested:
            out.setdefault(key, []).append(nested[key](ts))
            continue
        if key not in keys:
            raise CaseSyntaxError(f"line {t.line}: unknown key {key!r} in section {section!r}")
        if key in out:
            raise CaseSyntaxError(f"line {t.line}: duplicate key {key!r} in section {section!r}")
        if keys[key] == "one":
            v = ts.next(f"value for {section}.{key}")
            if v.text in ("{", "}"):
                raise CaseSyntaxError(f"line {v.line}: expected value for {section}.{key}")
            out[key] = (v.text, v.line)
        else:  # many: greedy numeric list
            vals = []
            while True:
                nxt = ts.peek()
                if nxt is None or not _is_float(nxt.text):
                    break
                vals.append((nxt.text, nxt.line))
                ts.pos += 1
            if not vals:
                raise CaseSyntaxError(f"line {t.line}: expected numbers for {section}.{key}")
            out[key] = vals


def _need(block: dict, section: str, key: str, line_hint: int):
    if key not in block:
        raise CaseSyntaxError(f"line {line_hint}: section {section!r} is missing key {key!r}")
    return block[key]


def _to_float(pair, section, key) -> float:
    text, line = pair
    try:
        return float(text)
    except ValueError:
        raise CaseSyntaxError(f"line {line}: {section}.{key} must be a number, got {text!r}") from None


def _to_int(pair, section, key) -> int:
    text, line = pair
    try:
        return int(text)
    except ValueError:
        raise CaseSyntaxError(f"line {line}: {section}.{key} must be an integer, got {text!r}") from None


def _to_floats(pairs, section, key) -> tuple[float, ...]:
    return tuple(_to_float(p, section, key) for p in pairs)


# ------------------------------------------------------------- case parsing

_BUS_KEYS = {"id": "one", "vn": "one", "demand": "many"}
_BRANCH_KEYS = {"from": "one", "to": "one", "r": "one", "x": "one", "rate": "one"}
_SG_KEYS = {k: "one" for k in
            ("id", "bus", "xd2", "pmin", "pmax", "cm", "cnl", "cst", "tup", "tdn", "h", "mbase")}
_IBG_KEYS = {"id": "one", "bus": "one", "if": "one", "cap": "one",
             "pe_ratio": "one", "avail": "many"}
_SYSTEM_KEYS = {"base_mva": "one", "beta": "one"}


def _bus_ref(pair, section, key, n_bus, *, ground_ok=False) -> int:
    ext = _to_int(pair, section, key)
    if ground_ok and ext == 0:
        return GROUND
    if not (1 <= ext <= n_bus):
        raise CaseError(f"{section}.{key}: references nonexistent bus {ext}")
    return ext - 1


def parse_case(text: str) -> NetworkCase:
    """Parse a case document into a validated NetworkCase.

    Raises CaseSyntaxError (with line numbers) for malformed text and
    CaseError (with entity ids) for semantic violations.
    """
    ts = _Stream(_tokenize(text))
    system = None
    buses, branches, sgs, ibgs = [], [], [], []
    while ts.peek() is not None:
        t = ts.next("section name")
        if t.text == "system":
            if system is not None:
                raise CaseSyntaxError(f"line {t.line}: duplicate system section")
            system = _parse_block(ts, "system", _SYSTEM_KEYS)
            system["_line"] = t.line
        elif t.text == "bus":
            buses.append((_parse_block(ts, "bus", _BUS_KEYS), t.line))
        elif t.text == "branch":
            branches.append((_parse_block(ts, "branch", _BRANCH_KEYS), t.line))
        elif t.text == "sg":
            sgs.append((_parse_block(ts, "sg", _SG_KEYS), t.line))
        elif t.text == "ibg":
            ibgs.append((_parse_block(ts, "ibg", _IBG_KEYS), t.line))
        else:
            raise CaseSyntaxError(f"line {t.line}: unknown section {t.text!r}")
    if system is None:
        raise CaseSyntaxError("line 1: missing system section")

    base_mva = _to_float(_need(system, "system", "base_mva", system["_line"]), "system", "base_mva")
    beta = _to_float(system.get("beta", ("0.95", system["_line"])), "system", "beta")

    bus_objs = []
    for pos, (blk, line) in enumerate(buses):
        ext = _to_int(_need(blk, "bus", "id", line), "bus", "id")
        if ext != pos + 1:
            raise CaseError(
                f"bus ids must be contiguous and in file order: expected id {pos + 1}, got {ext}"
            )
        bus_objs.append(Bus(
            index=pos,
            vn=_to_float(blk.get("vn", ("1.0", line)), "bus", "vn"),
            demand=_to_floats(blk.get("demand", []), "bus", "demand"),
        ))
    n_bus = len(bus_objs)

    branch_objs = []
    for blk, line in branches:
        branch_objs.append(Branch(
            from_bus=_bus_ref(_need(blk, "branch", "from", line), "branch", "from", n_bus),
            to_bus=_bus_ref(_need(blk, "branch", "to", line), "branch", "to", n_bus, ground_ok=True),
            r=_to_float(blk.get("r", ("0.0", line)), "branch", "r"),
            x=_to_float(_need(blk, "branch", "x", line), "branch", "x"),
            rate=_to_float(blk.get("rate", ("inf", line)), "branch", "rate"),
        ))

    sg_objs = []
    for blk, line in sgs:
        sid = _need(blk, "sg", "id", line)[0]
        sg_objs.append(SynchGen(
            id=sid,
            bus=_bus_ref(_need(blk, "sg", "bus", line), f"sg {sid}", "bus", n_bus),
            xd2=_to_float(_need(blk, "sg", "xd2", line), "sg", "xd2"),
            pmin=_to_float(blk.get("pmin", ("0.0", line)), "sg", "pmin"),
            pmax=_to_float(blk.get("pmax", ("0.0", line)), "sg", "pmax"),
            cm=_to_float(blk.get("cm", ("0.0", line)), "sg", "cm"),
            cnl=_to_float(blk.get("cnl", ("0.0", line)), "sg", "cnl"),
            cst=_to_float(blk.get("cst", ("0.0", line)), "sg", "cst"),
            tup=_to_int(blk.get("tup", ("1", line)), "sg", "tup"),
            tdn=_to_int(blk.get("tdn", ("1", line)), "sg", "tdn"),
            h=_to_float(blk.get("h", ("0.0", line)), "sg", "h"),
            mbase=_to_float(blk.get("mbase", ("1.0", line)), "sg", "mbase"),
        ))

    ibg_objs = []
    for blk, line in ibgs:
        cid = _need(blk, "ibg", "id", line)[0]
        ibg_objs.append(Ibg(
            id=cid,
            bus=_bus_ref(_need(blk, "ibg", "bus", line), f"ibg {cid}", "bus", n_bus),
            fault_current=_to_float(_need(blk, "ibg", "if", line), "ibg", "if"),
            capacity=_to_float(_need(blk, "ibg", "cap", line), "ibg", "cap"),
            pe_ratio=_to_float(blk.get("pe_ratio", ("1.0", line)), "ibg", "pe_ratio"),
            avail=_to_floats(blk.get("avail", []), "ibg", "avail"),
        ))

    case = NetworkCase(
        buses=tuple(bus_objs),
        branches=tuple(branch_objs),
        sgs=tuple(sg_objs),
        ibgs=tuple(ibg_objs),
        base_mva=base_mva,
        beta=beta,
    )
    case.validate()
    return case


# ------------------------------------------------------------- case writing

def _num(v: float) -> str:
    # repr() round-trips exactly and is deterministic; integers stay short
    if v == float("inf"):
        return "inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_case(case: NetworkCase) -> str:
    """Serialize to canonical text; parse_case(write_case(c)) == c."""
    case.validate()
    out = []
    out.append(f"system {{ base_mva {_num(case.base_mva)} beta {_num(case.beta)} }}")
    for b in case.buses:
        demand = (" demand " + " ".join(_num(d) for d in b.demand)) if b.demand else ""
        out.append(f"bus {{ id {b.index + 1} vn {_num(b.vn)}{demand} }}")
    for br in case.branches:
        to_ext = 0 if br.to_bus == GROUND else br.to_bus + 1
        rate = "" if br.rate == float("inf") else f" rate {_num(br.rate)}"
        out.append(
            f"branch {{ from {br.from_bus + 1} to {to_ext} r {_num(br.r)} x {_num(br.x)}{rate} }}"
        )
    for g in case.sgs:
        out.append(
            f"sg {{ id {g.id} bus {g.bus + 1} xd2 {_num(g.xd2)} pmin {_num(g.pmin)} "
            f"pmax {_num(g.pmax)} cm {_num(g.cm)} cnl {_num(g.cnl)} cst {_num(g.cst)} "
            f"tup {g.tup} tdn {g.tdn} h {_num(g.h)} mbase {_num(g.mbase)} }}"
        )
    for c in case.ibgs:
        avail = (" avail " + " ".join(_num(a) for a in c.avail)) if c.avail else ""
        out.append(
            f"ibg {{ id {c.id} bus {c.bus + 1} if {_num(c.fault_current)} "
            f"cap {_num(c.capacity)} pe_ratio {_num(c.pe_ratio)}{avail} }}"
        )
    return "\n".join(out) + "\n"


# --------------------------------------------------------- instance parsing

_PERIODS_KEYS = {"n": "one", "dt": "one"}
_TREE_KEYS = {"id": "one", "parent": "one", "prob": "one",
              "demand_scale": "one", "avail_scale": "one"}
_SCCLIM_KEYS = {"bus": "one", "ilim": "one"}
_FREQ_KEYS = {k: "one" for k in
              ("damping", "t_d", "dp_l", "df_lim", "df_ss", "rocof_lim", "f0", "hs_max")}
_FARM_KEYS = {"id": "one", "gamma": "one", "si_max": "one"}


def parse_uc_instance(text: str, case: NetworkCase) -> UcInstance:
    """Parse a UC-instance document against an already-parsed case."""
    ts = _Stream(_tokenize(text))
    periods = None
    tree_blocks = []
    scclim_blocks = []
    freq_block = None
    shed_cost = None
    while ts.peek() is not None:
        t = ts.next("section name")
        if t.text == "periods":
            periods = (_parse_block(ts, "periods", _PERIODS_KEYS), t.line)
        elif t.text == "tree":
            tree_blocks.append((_parse_block(ts, "tree", _TREE_KEYS), t.line))
        elif t.text == "scc_limit":
            scclim_blocks.append((_parse_block(ts, "scc_limit", _SCCLIM_KEYS), t.line))
        elif t.text == "freq":
            freq_block = (
                _parse_block(ts, "freq", _FREQ_KEYS,
                             nested={"farm": lambda s: _parse_block(s, "farm", _FARM_KEYS)}),
                t.line,
            )
        elif t.text == "shed_cost":
            v = ts.next("value for shed_cost")
            shed_cost = _to_float((v.text, v.line), "instance", "shed_cost")
        else:
            raise CaseSyntaxError(f"line {t.line}: unknown section {t.text!r}")

    if periods is None:
        raise CaseSyntaxError("line 1: missing periods section")
    if shed_cost is None:
        raise CaseSyntaxError("line 1: missing shed_cost")
    pblk, pline = periods
    n_periods = _to_int(_need(pblk, "periods", "n", pline), "periods", "n")
    dt = _to_float(_need(pblk, "periods", "dt", pline), "periods", "dt")

    nodes = []
    for blk, line in tree_blocks:
        nodes.append(TreeNode(
            id=_to_int(_need(blk, "tree", "id", line), "tree", "id"),
            parent=_to_int(_need(blk, "tree", "parent", line), "tree", "parent"),
            prob=_to_float(_need(blk, "tree", "prob", line), "tree", "prob"),
            demand_scale=_to_float(blk.get("demand_scale", ("1.0", line)), "tree", "demand_scale"),
            avail_scale=_to_float(blk.get("avail_scale", ("1.0", line)), "tree", "avail_scale"),
        ))
    if not nodes:
        nodes = [TreeNode(id=0, parent=-1, prob=1.0)]

    limits = {}
    for blk, line in scclim_blocks:
        bus = _bus_ref(_need(blk, "scc_limit", "bus", line), "scc_limit", "bus", case.n_bus)
        limits[bus] = _to_float(_need(blk, "scc_limit", "ilim", line), "scc_limit", "ilim")

    freq = None
    if freq_block is not None:
        fblk, fline = freq_block
        farms = tuple(
            WindFarm(
                id=_need(fb, "farm", "id", fline)[0],
                gamma=_to_float(_need(fb, "farm", "gamma", fline), "farm", "gamma"),
                si_max=_to_float(_need(fb, "farm", "si_max", fline), "farm", "si_max"),
            )
            for fb in fblk.get("farm", [])
        )
        freq = FrequencyParams(
            damping=_to_float(_need(fblk, "freq", "damping", fline), "freq", "damping"),
            t_d=_to_float(_need(fblk, "freq", "t_d", fline), "freq", "t_d"),
            dp_l=_to_float(_need(fblk, "freq", "dp_l", fline), "freq", "dp_l"),
            df_lim=_to_float(_need(fblk, "freq", "df_lim", fline), "freq", "df_lim"),
            df_ss=_to_float(_need(fblk, "freq", "df_ss", fline), "freq", "df_ss"),
            rocof_lim=_to_float(_need(fblk, "freq", "rocof_lim", fline), "freq", "rocof_lim"),
            f0=_to_float(fblk.get("f0", ("50.0", fline)), "freq", "f0"),
            hs_max=_to_float(fblk.get("hs_max", ("0.0", fline)), "freq", "hs_max"),
            farms=farms,
        )

    inst = UcInstance(
        case=case,
        n_periods=n_periods,
        dt=dt,
        tree=tuple(nodes),
        shed_cost=shed_cost,
        scc_limit=limits,
        freq=freq,
    )
    inst.validate()
    return inst


def write_uc_instance(inst: UcInstance) -> str:
    """Canonical serialization of an instance (case written separately)."""
    inst.validate()
    out = [f"periods {{ n {inst.n_periods} dt {_num(inst.dt)} }}"]
    for n in inst.tree:
        out.append(
            f"tree {{ id {n.id} parent {n.parent} prob {_num(n.prob)} "
            f"demand_scale {_num(n.demand_scale)} avail_scale {_num(n.avail_scale)} }}"
        )
    out.append(f"shed_cost {_num(inst.shed_cost)}")
    for bus in sorted(inst.scc_limit):
        out.append(f"scc_limit {{ bus {bus + 1} ilim {_num(inst.scc_limit[bus])} }}")
    f = inst.freq
    if f is not None:
        out.append(
            f"freq {{ damping {_num(f.damping)} t_d {_num(f.t_d)} dp_l {_num(f.dp_l)} "
            f"df_lim {_num(f.df_lim)} df_ss {_num(f.df_ss)} rocof_lim {_num(f.rocof_lim)} "
            f"f0 {_num(f.f0)} hs_max {_num(f.hs_max)}"
        )
        for farm in f.farms:
            out.append(f"  farm {{ id {farm.id} gamma {_num(farm.gamma)} si_max {_num(farm.si_max)} }}")
        out.append("}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------- bundled data

def bundled_names() -> list[str]:
    files = resources.files("sccuc") / "data"
    return sorted(p.name for p in files.iterdir())


def load_bundled_case(name: str) -> NetworkCase:
    """Load a case shipped with the package, e.g. 'net3' or 'net3.case'."""
    if not name.endswith(".case"):
        name += ".case"
    text = (resources.files("sccuc") / "data" / name).read_text(encoding="utf-8")
    return parse_case(text)


def load_bundled_instance(name: str, case: NetworkCase | None = None) -> UcInstance:
    """Load a UC instance shipped with the package, e.g. 'net3' or 'net3.uc'."""
    if not name.endswith(".uc"):
        name += ".uc"
    if case is None:
        case = load_bundled_case(name[: -len(".uc")])
    text = (resources.files("sccuc") / "data" / name).read_text(encoding="utf-8")
    return parse_uc_instance(text, case)
