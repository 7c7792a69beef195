"""Self-contained optimization kernel.

Dense two-phase primal simplex (Dantzig pricing, falling back to
Bland's rule after a stall so cycling cannot occur), best-first branch
and bound on binary variables, a primal active-set solver for convex
QPs, and LP-format text export/import so models can be cross-checked
against external solvers.  Everything is deterministic: all tie-breaks
are by lowest index, so identical inputs give identical solutions and
node counts.

Sized for desk-scale models (a few hundred rows); no sparsity, no
presolve, no cuts.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field

import numpy as np

INF = float("inf")

_FEAS_TOL = 1e-7      # constraint satisfaction guarantee on reported optima
_PIVOT_TOL = 1e-9
_COST_TOL = 1e-9
_INT_TOL = 1e-6       # binaries within this of {0,1}
_STALL_LIMIT = 120    # non-improving iterations before Bland's rule engages


class LpNumericalError(RuntimeError):
    """Simplex broke down numerically; carries pivot diagnostics."""


class QpInfeasibleError(ValueError):
    """The QP's constraint set is empty (beyond tolerance)."""


@dataclass
class Variable:
    name: str
    lower: float = 0.0
    upper: float = INF
    kind: str = "c"          # "c" continuous, "b" binary


@dataclass
class Constraint:
    name: str
    terms: list              # list of (var_index, coef)
    sense: str               # "<=", ">=", "="
    rhs: float


@dataclass
class Solution:
    status: str              # optimal | infeasible | unbounded | gap-limit
    objective: float = 0.0
    values: np.ndarray | None = None
    nodes: int = 0           # LP solves performed (B&B only)
    best_bound: float = float("nan")

    def value(self, model: "MilpModel", name: str) -> float:
        return float(self.values[model.index(name)])


class MilpModel:
    """Linear model container: variables, linear constraints, min objective."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list[Variable] = []
        self._by_name: dict[str, int] = {}
        self.constraints: list[Constraint] = []
        self.objective: dict[int, float] = {}

    # -- construction -------------------------------------------------

    def add_var(self, name: str, lower: float = 0.0, upper: float = INF,
                kind: str = "c") -> int:
        if name in self._by_name:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind not in ("c", "b"):
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == "b":
            lower = max(0.0, lower)
            upper = min(1.0, upper)
        if lower > upper:
            raise ValueError(f"variable {name!r}: lower {lower} > upper {upper}")
        self.variables.append(Variable(name, float(lower), float(upper), kind))
        self._by_name[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def index(self, ref) -> int:
        if isinstance(ref, str):
            try:
                return self._by_name[ref]
            except KeyError:
                raise KeyError(f"unknown variable {ref!r}") from None
        i = int(ref)
        if not (0 <= i < len(self.variables)):
            raise KeyError(f"variable index {i} out of range")
        return i

    def _terms(self, terms) -> list:
        merged: dict[int, float] = {}
        for ref, coef in terms:
            coef = float(coef)
            if not np.isfinite(coef):
                raise ValueError("non-finite coefficient")
            j = self.index(ref)
            merged[j] = merged.get(j, 0.0) + coef
        return sorted(merged.items())

    def add_constr(self, name: str, terms, sense: str, rhs: float) -> int:
        if sense not in ("<=", ">=", "="):
            raise ValueError(f"unknown sense {sense!r}")
        if not np.isfinite(rhs):
            raise ValueError(f"constraint {name!r}: non-finite rhs")
        self.constraints.append(Constraint(name, self._terms(terms), sense, float(rhs)))
        return len(self.constraints) - 1

    def set_objective(self, terms):
        self.objective = dict(self._terms(terms))

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def binary_indices(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.kind == "b"]

    def constraint_activity(self, values: np.ndarray, c: Constraint) -> float:
        return float(sum(coef * values[j] for j, coef in c.terms))

    def max_violation(self, values: np.ndarray) -> float:
        worst = 0.0
        for c in self.constraints:
            a = self.constraint_activity(values, c)
            if c.sense == "<=":
                worst = max(worst, a - c.rhs)
            elif c.sense == ">=":
                worst = max(worst, c.rhs - a)
            else:
                worst = max(worst, abs(a - c.rhs))
        for j, v in enumerate(self.variables):
            worst = max(worst, v.lower - values[j], values[j] - v.upper)
        return worst

    def objective_value(self, values: np.ndarray) -> float:
        return float(sum(coef * values[j] for j, coef in self.objective.items()))


# ---------------------------------------------------------------- simplex

def _standard_form(model: MilpModel, bounds: list):
    """Rewrite onto nonnegative t-variables.

    Returns (columns, fixed, A, senses, b, c, c0) where columns[j] maps
    original variable j to its t-columns: ("fix", value), ("shift", col,
    lb), ("mirror", col, ub) or ("split", pcol, ncol).  Upper-bound caps
    become explicit <= rows.
    """
    columns = []
    ncol = 0
    cap_rows = []            # (col, cap)
    for j, (lo, hi) in enumerate(bounds):
        if lo > hi + 1e-12:
            return None      # infeasible bounds
        if hi - lo <= 1e-12 and np.isfinite(lo):
            columns.append(("fix", lo))
        elif lo == -INF and hi == INF:
            columns.append(("split", ncol, ncol + 1))
            ncol += 2
        elif lo == -INF:
            columns.append(("mirror", ncol, hi))
            ncol += 1
        else:
            columns.append(("shift", ncol, lo))
            if np.isfinite(hi):
                cap_rows.append((ncol, hi - lo))
            ncol += 1

    m = len(model.constraints) + len(cap_rows)
    a = np.zeros((m, ncol))
    b = np.zeros(m)
    senses = []
    for i, c in enumerate(model.constraints):
        rhs = c.rhs
        for j, coef in c.terms:
            kind = columns[j]
            if kind[0] == "fix":
                rhs -= coef * kind[1]
            elif kind[0] == "shift":
                a[i, kind[1]] += coef
                rhs -= coef * kind[2]
            elif kind[0] == "mirror":
                a[i, kind[1]] -= coef
                rhs -= coef * kind[2]
            else:
                a[i, kind[1]] += coef
                a[i, kind[2]] -= coef
        b[i] = rhs
        senses.append(c.sense)
    for k, (col, cap) in enumerate(cap_rows):
        i = len(model.constraints) + k
        a[i, col] = 1.0
        b[i] = cap
        senses.append("<=")

    c_vec = np.zeros(ncol)
    c0 = 0.0
    for j, coef in model.objective.items():
        kind = columns[j]
        if kind[0] == "fix":
            c0 += coef * kind[1]
        elif kind[0] == "shift":
            c_vec[kind[1]] += coef
            c0 += coef * kind[2]
        elif kind[0] == "mirror":
            c_vec[kind[1]] -= coef
            c0 += coef * kind[2]
        else:
            c_vec[kind[1]] += coef
            c_vec[kind[2]] -= coef
    return columns, a, senses, b, c_vec, c0


def _pivot(tab: np.ndarray, basis: np.ndarray, row: int, col: int):
    tab[row] /= tab[row, col]
    piv_row = tab[row]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, piv_row)
    tab[row] = piv_row
    basis[row] = col


def _simplex_iterate(tab, basis, n_real, allowed, max_iter):
    """Run simplex to optimality on the given tableau.

    tab: (m+1) x (n_total+1); bottom row holds reduced costs, corner is
    -objective.  allowed: boolean mask of columns eligible to enter.
    Dantzig pricing with a stall-triggered permanent fallback to
    Bland's rule, which guarantees termination.  Returns "optimal" or
    "unbounded".
    """
    m = tab.shape[0] - 1
    bland = False
    stall = 0
    best_obj = tab[-1, -1]
    for it in range(max_iter):
        r = tab[-1, :-1]
        improving = allowed & (r < -_COST_TOL)
        if not np.any(improving):
            return "optimal"
        if bland:
            col = int(np.flatnonzero(improving)[0])
        else:
            masked = np.where(allowed, r, INF)
            col = int(np.argmin(masked))
        col_vals = tab[:m, col]
        pos = col_vals > _PIVOT_TOL
        if not np.any(pos):
            return "unbounded"
        ratios = np.where(pos, tab[:m, -1] / np.where(pos, col_vals, 1.0), INF)
        best = np.min(ratios)
        ties = np.flatnonzero(ratios <= best + 1e-12)
        if bland or ties.size > 1:
            row = int(ties[np.argmin(basis[ties])])
        else:
            row = int(ties[0])
        _pivot(tab, basis, row, col)
        if tab[-1, -1] > best_obj + 1e-12:
            best_obj = tab[-1, -1]
            stall = 0
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
    raise LpNumericalError(
        f"simplex did not converge in {max_iter} iterations "
        f"(m={m}, n={tab.shape[1] - 1}, bland={bland})"
    )


def solve_lp(model: MilpModel, bound_overrides: dict | None = None) -> Solution:
    """Solve the LP relaxation (binaries relaxed into their bounds).

    Returns a Solution with status optimal, infeasible or unbounded.
    On optimal, all constraints hold within 1e-7.
    """
    bounds = []
    for j, v in enumerate(model.variables):
        lo, hi = v.lower, v.upper
        if bound_overrides and j in bound_overrides:
            olo, ohi = bound_overrides[j]
            lo, hi = max(lo, olo), min(hi, ohi)
        bounds.append((lo, hi))

    sf = _standard_form(model, bounds)
    if sf is None:
        return Solution(status="infeasible")
    columns, a, senses, b, c_vec, c0 = sf
    m, n_real = a.shape

    if m == 0:
        # unconstrained: each t-column runs to 0 unless its cost is negative
        if np.any(c_vec < -_COST_TOL):
            return Solution(status="unbounded")
        t = np.zeros(n_real)
        values = _recover(model, columns, t)
        return Solution(status="optimal", objective=model.objective_value(values),
                        values=values)

    # equalities with slack sign bookkeeping
    rows = a.copy()
    rhs = b.copy()
    for i, s in enumerate(senses):
        if s == ">=":
            rows[i] *= -1.0
            rhs[i] *= -1.0
    neg = rhs < 0
    rows[neg] *= -1.0
    rhs[neg] *= -1.0
    # deterministic anti-degeneracy perturbation: breaks ratio-test ties so
    # Dantzig pricing does not stall on massively degenerate bases; the
    # drift (<= ~1e-9 per row) stays inside the 1e-7 feasibility guarantee
    if m > 1:
        rhs = rhs + 1e-9 * (1.0 + np.abs(rhs)) * (np.arange(1, m + 1) / m)

    slack_cols = {}
    n_slack = sum(1 for s in senses if s != "=")
    art_rows = []
    total = n_real + n_slack
    ext = np.zeros((m, total))
    ext[:, :n_real] = rows
    k = 0
    basis = np.full(m, -1, dtype=int)
    for i, s in enumerate(senses):
        if s != "=":
            coef = -1.0 if neg[i] else 1.0
            ext[i, n_real + k] = coef
            slack_cols[i] = n_real + k
            if coef > 0:
                basis[i] = n_real + k
            k += 1
    for i in range(m):
        if basis[i] < 0:
            art_rows.append(i)
    n_art = len(art_rows)
    if n_art:
        full = np.zeros((m, total + n_art))
        full[:, :total] = ext
        for k2, i in enumerate(art_rows):
            full[i, total + k2] = 1.0
            basis[i] = total + k2
        ext = full
    n_total = ext.shape[1]

    tab = np.zeros((m + 1, n_total + 1))
    tab[:m, :n_total] = ext
    tab[:m, -1] = rhs
    max_iter = 2000 + 60 * (m + n_total)

    # phase 1
    if n_art:
        cost1 = np.zeros(n_total)
        cost1[total:] = 1.0
        tab[-1, :n_total] = cost1
        for i in range(m):
            if basis[i] >= total:
                tab[-1] -= tab[i]
        allowed = np.ones(n_total, dtype=bool)
        status = _simplex_iterate(tab, basis, n_real, allowed, max_iter)
        if status != "optimal":
            raise LpNumericalError("phase-1 LP reported unbounded")
        phase1 = -tab[-1, -1]
        scale = 1.0 + float(np.max(np.abs(rhs))) if m else 1.0
        if phase1 > 1e-7 * scale:
            return Solution(status="infeasible")
        # drive remaining artificials out of the basis
        drop_rows = []
        for i in range(m):
            if basis[i] >= total:
                row_vals = np.abs(tab[i, :total])
                cand = int(np.argmax(row_vals))
                if row_vals[cand] > 1e-9:
                    _pivot(tab, basis, i, cand)
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep = [i for i in range(m) if i not in set(drop_rows)]
            tab = np.vstack([tab[keep], tab[-1:]])
            basis = basis[keep]
            m = len(keep)
        tab = np.hstack([tab[:, :total], tab[:, -1:]])
        n_total = total

    # phase 2
    cost2 = np.zeros(n_total)
    cost2[:n_real] = c_vec
    tab[-1, :] = 0.0
    tab[-1, :n_total] = cost2
    for i in range(m):
        bi = basis[i]
        if bi < n_total and cost2[bi] != 0.0:
            tab[-1] -= cost2[bi] * tab[i]
    allowed = np.ones(n_total, dtype=bool)
    status = _simplex_iterate(tab, basis, n_real, allowed, max_iter)
    if status == "unbounded":
        return Solution(status="unbounded")

    t = np.zeros(n_total)
    t[basis[:m]] = tab[:m, -1]
    values = _recover(model, columns, t[:n_real])
    viol = model.max_violation(values)
    if viol > 1e-6:
        raise LpNumericalError(f"optimal basis violates constraints by {viol:.2e}")
    return Solution(status="optimal", objective=model.objective_value(values),
                    values=values)


def _recover(model: MilpModel, columns, t: np.ndarray) -> np.ndarray:
    values = np.zeros(model.n_vars)
    for j, kind in enumerate(columns):
        if kind[0] == "fix":
            values[j] = kind[1]
        elif kind[0] == "shift":
            values[j] = kind[2] + t[kind[1]]
        elif kind[0] == "mirror":
            values[j] = kind[2] - t[kind[1]]
        else:
            values[j] = t[kind[1]] - t[kind[2]]
    return values


# ----------------------------------------------------------- branch & bound

def solve_milp(model: MilpModel, gap: float = 1e-6) -> Solution:
    """Best-first branch and bound on the binary variables.

    Branches on the most fractional binary (ties: lowest index), children
    explored down-branch first.  Terminates when the bound gap is within
    `gap * max(1, |incumbent|)`.  gap=0 proves optimality exactly (up to
    1e-9 numerical slack).
    """
    if gap < 0:
        raise ValueError("gap must be >= 0")
    binaries = model.binary_indices()
    root = solve_lp(model)
    nodes = 1
    if root.status in ("infeasible", "unbounded"):
        root.nodes = nodes
        return root

    inc_values = None
    inc_obj = INF
    counter = 0
    heap = []

    def is_integral(values) -> bool:
        return all(abs(values[j] - round(values[j])) <= _INT_TOL for j in binaries)

    def push(sol, overrides):
        nonlocal counter
        heapq.heappush(heap, (sol.objective, counter, sol, overrides))
        counter += 1

    push(root, {})
    best_bound = root.objective
    while heap:
        bound, _, sol, overrides = heapq.heappop(heap)
        best_bound = bound
        if inc_values is not None and bound >= inc_obj - max(gap, 1e-9) * max(1.0, abs(inc_obj)):
            best_bound = inc_obj  # proven: nothing left can improve
            break
        if is_integral(sol.values):
            if sol.objective < inc_obj - 1e-12:
                inc_obj = sol.objective
                inc_values = sol.values.copy()
                for j in binaries:
                    inc_values[j] = round(inc_values[j])
            continue
        # most fractional binary, ties by lowest index
        frac, branch_var = -1.0, -1
        for j in binaries:
            f = sol.values[j] - np.floor(sol.values[j])
            score = min(f, 1.0 - f)
            if score > frac + 1e-15:
                frac, branch_var = score, j
        for child_bounds in ((0.0, 0.0), (1.0, 1.0)):
            child = dict(overrides)
            child[branch_var] = child_bounds
            csol = solve_lp(model, bound_overrides=child)
            nodes += 1
            if csol.status != "optimal":
                continue
            if inc_values is not None and csol.objective >= inc_obj - max(gap, 1e-9) * max(1.0, abs(inc_obj)):
                continue
            push(csol, child)

    if inc_values is None:
        return Solution(status="infeasible", nodes=nodes)
    if heap and inc_obj - best_bound > max(gap, 1e-9) * max(1.0, abs(inc_obj)):
        status = "gap-limit"
    else:
        status = "optimal"
        best_bound = inc_obj
    return Solution(status=status, objective=inc_obj, values=inc_values,
                    nodes=nodes, best_bound=best_bound)


# ----------------------------------------------------------- active-set QP

def solve_qp_active_set(q: np.ndarray, c: np.ndarray, g: np.ndarray,
                        h: np.ndarray, max_iter: int | None = None) -> np.ndarray:
    """Minimize 0.5 x'Qx + c'x subject to Gx <= h (Q PSD).

    Primal active-set method.  The start point is pushed strictly
    inside the feasible set when it has an interior, and the
    constraint right-hand sides carry a deterministic 1e-9-scale
    perturbation, both of which break the degenerate-vertex cycling
    that plagues textbook active sets.  After a stall the drop rule
    switches to least-index (Bland-style).  Raises QpInfeasibleError
    when no feasible point exists.
    """
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    g = np.asarray(g, dtype=float).reshape(-1, q.shape[0]) if np.size(g) else np.zeros((0, q.shape[0]))
    h = np.asarray(h, dtype=float).reshape(-1).copy()
    n = q.shape[0]
    m = g.shape[0]
    if m:
        h = h + 1e-9 * (1.0 + np.abs(h)) * (np.arange(1, m + 1) / m)
    if max_iter is None:
        max_iter = 200 + 30 * (n + m)

    x = _qp_feasible_point(n, g, h)
    work: list[int] = [i for i in range(m) if g[i] @ x > h[i] - 1e-11]
    stall = 0
    bland = False
    delta = 1e-12 * (1.0 + float(np.trace(q)) / n)
    grad_tol = 1e-9 * (1.0 + float(np.max(np.abs(c), initial=0.0)))
    last_obj = 0.5 * float(x @ q @ x) + float(c @ x)
    for it in range(max_iter):
        gw = g[work] if work else np.zeros((0, n))
        p, lam, red_grad = _eqp_step(q, q @ x + c, gw, delta)
        # stationarity on the reduced gradient, not on |p|: with a nearly
        # singular Q the step can stay large while the point is optimal
        if red_grad <= grad_tol or \
                np.max(np.abs(p), initial=0.0) <= 1e-10 * (1.0 + np.max(np.abs(x), initial=0.0)):
            if len(work) == 0 or np.min(lam) >= -1e-9:
                return x
            neg = np.flatnonzero(lam < -1e-9)
            drop = int(neg[0]) if bland else int(np.argmin(lam))
            work.pop(drop)
        else:
            # longest step along p that stays feasible (vectorized ratio test)
            alpha = 1.0
            blocker = -1
            if m:
                gp = g @ p
                active = np.zeros(m, dtype=bool)
                active[work] = True
                cand = (~active) & (gp > 1e-12)
                if np.any(cand):
                    steps = np.full(m, INF)
                    steps[cand] = (h[cand] - g[cand] @ x) / gp[cand]
                    i = int(np.argmin(steps))
                    if steps[i] < alpha - 1e-12:
                        alpha = max(float(steps[i]), 0.0)
                        blocker = i
            x = x + alpha * p
            if blocker >= 0 and blocker not in work:
                work.append(blocker)
                work.sort()
        obj = 0.5 * float(x @ q @ x) + float(c @ x)
        if obj < last_obj - 1e-12 * (1.0 + abs(last_obj)):
            stall = 0
        else:
            stall += 1
            if stall > 50:
                bland = True
        last_obj = obj
    raise LpNumericalError(f"active-set QP did not converge in {max_iter} iterations")


def _eqp_step(q: np.ndarray, grad: np.ndarray, gw: np.ndarray, delta: float):
    """Solve min 0.5 p'Qp + grad'p s.t. Gw p = 0 by the nullspace method.

    Returns (p, lam, |Z'grad|_inf).  The reduced Hessian gets a
    proximal shift delta so the solve stays consistent even when Q is
    nearly singular; lam are least-squares multipliers for
    Gw' lam = -(grad + Q p).
    """
    n = q.shape[0]
    if gw.shape[0] == 0:
        red_grad = float(np.max(np.abs(grad), initial=0.0))
        p = -np.linalg.solve(q + delta * np.eye(n), grad)
        return p, np.zeros(0), red_grad
    _, s, vt = np.linalg.svd(gw, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0] if s.size else 1.0)))
    z = vt[rank:].T
    if z.shape[1]:
        zg = z.T @ grad
        red_grad = float(np.max(np.abs(zg), initial=0.0))
        red = z.T @ q @ z + delta * np.eye(z.shape[1])
        pz = np.linalg.solve(red, -zg)
        p = z @ pz
    else:
        p = np.zeros(n)
        red_grad = 0.0
    lam, *_ = np.linalg.lstsq(gw.T, -(grad + q @ p), rcond=None)
    return p, lam, red_grad


def inequalities_feasible(g: np.ndarray, h: np.ndarray) -> bool:
    """True when {x : Gx <= h} is nonempty (to solver tolerance).

    Decided through the Farkas alternative: the system is infeasible
    exactly when some y >= 0 has G'y = 0, 1'y = 1 and h'y < 0.  The
    certificate LP has only n_cols+1 rows, so this is much cheaper than
    a phase-1 solve on the primal when rows vastly outnumber columns.
    """
    g = np.asarray(g, dtype=float)
    h = np.asarray(h, dtype=float).reshape(-1)
    if g.size == 0:
        return True
    m, n = g.shape
    model = MilpModel("farkas")
    for i in range(m):
        model.add_var(f"y{i}", 0.0, INF)
    for j in range(n):
        terms = [(i, g[i, j]) for i in range(m) if g[i, j] != 0.0]
        if terms:
            model.add_constr(f"gt{j}", terms, "=", 0.0)
    model.add_constr("norm", [(i, 1.0) for i in range(m)], "=", 1.0)
    model.set_objective([(i, float(h[i])) for i in range(m)])
    sol = solve_lp(model)
    if sol.status == "infeasible":
        return True          # no normalized ray at all: system is feasible
    if sol.status != "optimal":
        return True
    scale = 1.0 + float(np.max(np.abs(h)))
    return sol.objective >= -1e-9 * scale


def _qp_feasible_point(n: int, g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Feasible start, strictly interior when the region has an interior.

    Maximizes the uniform slack s in Gx + s <= h (s capped so the LP is
    bounded); s* < 0 means the set is empty.
    """
    if g.shape[0] == 0:
        return np.zeros(n)
    scale = 1.0 + float(np.max(np.abs(h)))
    model = MilpModel("qp-start")
    for j in range(n):
        model.add_var(f"x{j}", -INF, INF)
    s = model.add_var("slack", -INF, 1.0)
    for i in range(g.shape[0]):
        terms = [(j, g[i, j]) for j in range(n) if g[i, j] != 0.0]
        terms.append((s, 1.0))
        model.add_constr(f"r{i}", terms, "<=", float(h[i]))
    model.set_objective([(s, -1.0)])
    sol = solve_lp(model)
    if sol.status != "optimal":
        raise QpInfeasibleError("slack LP did not solve; constraint set treated as empty")
    if sol.values[n] < -1e-8 * scale:
        raise QpInfeasibleError("constraint set is empty")
    return sol.values[:n].copy()


# ------------------------------------------------------------ LP-file text

_NAME_RE = re.compile(r"[^A-Za-z0-9_]")


def _sanitize_names(names) -> tuple[list[str], list[tuple[str, str]]]:
    out, seen, mapping = [], set(), []
    for name in names:
        clean = _NAME_RE.sub("_", name)
        if not clean or not (clean[0].isalpha() or clean[0] == "_"):
            clean = "v_" + clean
        base = clean
        k = 2
        while clean in seen:
            clean = f"{base}__{k}"
            k += 1
        seen.add(clean)
        out.append(clean)
        if clean != name:
            mapping.append((name, clean))
    return out, mapping


def _fmt_num(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _fmt_terms(terms, names) -> str:
    parts = []
    for j, coef in terms:
        if coef == 0.0:
            continue
        if not parts:
            parts.append(f"{_fmt_num(coef)} {names[j]}")
        elif coef >= 0:
            parts.append(f"+ {_fmt_num(coef)} {names[j]}")
        else:
            parts.append(f"- {_fmt_num(-coef)} {names[j]}")
    return " ".join(parts) if parts else f"0 {names[0]}"


def export_lp_file(model: MilpModel) -> str:
    """Serialize to LP-format text (re-importable, deterministic).

    Sanitized-name mappings are emitted as leading comment lines.
    """
    vnames, mapping = _sanitize_names([v.name for v in model.variables])
    cnames, cmapping = _sanitize_names([c.name for c in model.constraints])
    lines = []
    for orig, clean in mapping + cmapping:
        lines.append(f"\\ name-map: {orig} -> {clean}")
    lines.append("Minimize")
    lines.append(" obj: " + _fmt_terms(sorted(model.objective.items()), vnames))
    lines.append("Subject To")
    for i, c in enumerate(model.constraints):
        sense = c.sense if c.sense != "=" else "="
        lines.append(f" {cnames[i]}: {_fmt_terms(c.terms, vnames)} {sense} {_fmt_num(c.rhs)}")
    lines.append("Bounds")
    for j, v in enumerate(model.variables):
        if v.lower == v.upper:
            lines.append(f" {vnames[j]} = {_fmt_num(v.lower)}")
        elif v.lower == -INF and v.upper == INF:
            lines.append(f" {vnames[j]} free")
        elif v.upper == INF:
            lines.append(f" {_fmt_num(v.lower)} <= {vnames[j]}")
        else:
            lines.append(f" {_fmt_num(v.lower)} <= {vnames[j]} <= {_fmt_num(v.upper)}")
    binaries = model.binary_indices()
    if binaries:
        lines.append("Binaries")
        for j in binaries:
            lines.append(f" {vnames[j]}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_lp_file(text: str) -> MilpModel:
    """Parse the LP-format dialect written by export_lp_file."""
    model = MilpModel("imported")
    section = None
    pending: list[tuple] = []
    bounds: list[tuple] = []
    binaries: list[str] = []

    def section_of(line: str):
        low = line.strip().lower()
        if low in ("minimize", "minimise", "min"):
            return "objective"
        if low in ("subject to", "such that", "st", "s.t."):
            return "constraints"
        if low == "bounds":
            return "bounds"
        if low in ("binaries", "binary", "bin"):
            return "binaries"
        if low == "end":
            return "end"
        return None

    objective_expr = []
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        sec = section_of(line)
        if sec:
            section = sec
            if sec == "end":
                break
            continue
        if section == "objective":
            expr = line.split(":", 1)[1] if ":" in line else line
            objective_expr.append(expr)
        elif section == "constraints":
            name, expr = (line.split(":", 1) + [""])[:2] if ":" in line else (f"c{len(pending)}", line)
            m = re.search(r"(<=|>=|=)", expr)
            if not m:
                raise ValueError(f"constraint without sense: {line!r}")
            lhs, sense, rhs = expr[: m.start()], m.group(1), expr[m.end():]
            pending.append((name.strip(), lhs.strip(), sense, float(rhs)))
        elif section == "bounds":
            bounds.append(line)
        elif section == "binaries":
            binaries.extend(line.split())
        else:
            raise ValueError(f"content outside any section: {line!r}")

    token_re = re.compile(
        r"[+-]|\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|[A-Za-z_][A-Za-z0-9_.]*"
    )

    def parse_terms(expr: str) -> list[tuple[str, float]]:
        terms: list[tuple[str, float]] = []
        sign, coef = 1.0, None
        for tok in token_re.findall(expr):
            if tok == "+":
                pass
            elif tok == "-":
                sign = -sign
            elif tok[0].isdigit() or tok[0] == ".":
                coef = (coef if coef is not None else 1.0) * float(tok)
            else:
                terms.append((tok, sign * (coef if coef is not None else 1.0)))
                sign, coef = 1.0, None
        return terms

    names_seen: dict[str, None] = {}

    def note_names(terms):
        for n, _ in terms:
            names_seen.setdefault(n)

    obj_terms = parse_terms(" ".join(objective_expr))
    note_names(obj_terms)
    parsed_constraints = []
    for name, lhs, sense, rhs in pending:
        terms = parse_terms(lhs)
        note_names(terms)
        parsed_constraints.append((name, terms, sense, rhs))

    bound_map: dict[str, list] = {}

    def num(tok: str) -> float:
        low = tok.lower()
        if low in ("inf", "+inf", "infinity", "+infinity"):
            return INF
        if low in ("-inf", "-infinity"):
            return -INF
        return float(tok)

    for line in bounds:
        toks = line.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bound_map[toks[0]] = [-INF, INF]
            names_seen.setdefault(toks[0])
        elif len(toks) == 3 and toks[1] == "=":
            v = num(toks[2])
            bound_map[toks[0]] = [v, v]
            names_seen.setdefault(toks[0])
        elif len(toks) == 3 and toks[1] in ("<=", ">="):
            def is_num(t):
                try:
                    num(t)
                    return True
                except ValueError:
                    return False
            if is_num(toks[0]):           # e.g. "0.5 <= z"
                name, lo_side = toks[2], toks[1] == "<="
                val = num(toks[0])
            else:                          # e.g. "z <= 2"
                name, lo_side = toks[0], toks[1] == ">="
                val = num(toks[2])
            names_seen.setdefault(name)
            lo, hi = bound_map.get(name, [0.0, INF])
            if lo_side:
                lo = val
            else:
                hi = val
            bound_map[name] = [lo, hi]
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            bound_map[toks[2]] = [num(toks[0]), num(toks[4])]
            names_seen.setdefault(toks[2])
        else:
            raise ValueError(f"unparsable bounds line: {line!r}")

    for name in binaries:
        names_seen.setdefault(name)
    for name in names_seen:
        lo, hi = bound_map.get(name, [0.0, INF])
        kind = "b" if name in set(binaries) else "c"
        model.add_var(name, lo, hi, kind)
    for name, terms, sense, rhs in parsed_constraints:
        model.add_constr(name, terms, sense, rhs)
    model.set_objective(obj_terms)
    return model
