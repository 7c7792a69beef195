"""Linear SCC surrogates over commitment patterns.

The exact fault current at a bus is a nonlinear function of the SG
statuses x (they enter the impedance matrix) and an affine function of
the IBG online fractions alpha.  The surrogate approximates it as

    I_hat = sum_g k_g x_g + sum_c k_c alpha_c + sum_m k_m x_g1 x_g2

with one pairwise term per unordered SG pair and no intercept (the
all-off pattern maps to 0).  Three fitting schemes are provided, all
exposed both as sklearn-style estimators (fit/predict/get_params) and
as per-fault-bus convenience functions over an enumerated dataset:

* least squares ("dm1"): plain ridge-damped normal equations;
* conservative ("dm2"): an LP that keeps the surrogate at or below
  every exact sample, so the fit never overestimates on the dataset;
* margin classifier ("dm3"): a QP that only penalizes error inside a
  margin band of width nu above the limit, and hard-classifies every
  sample below the limit or above the band.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import milp
from .network import NetworkCase
from .scc import CommitmentPattern, IslandedNetworkError, scc_all_buses

log = logging.getLogger("sccuc")

ENUMERATION_GUARD = 24
STRICT_EPS = 1e-6      # realizes the strict below-limit inequality
RIDGE = 1e-10          # Tikhonov damping for rank-deficient fits


class DatasetSizeError(ValueError):
    """|G| + |C| exceeds the exhaustive-enumeration guard."""


class FitError(RuntimeError):
    """Fitting failed (unbounded LP or solver breakdown)."""


class MarginInfeasibleError(ValueError):
    """The margin nu is too small for a feasible classification fit."""


def sg_pairs(n_sg: int) -> list[tuple[int, int]]:
    return [(g1, g2) for g1 in range(n_sg) for g2 in range(g1 + 1, n_sg)]


def design_matrix(patterns: np.ndarray, n_sg: int) -> np.ndarray:
    """[x | alpha | eta] feature matrix; eta_m = x_g1 * x_g2."""
    patterns = np.asarray(patterns, dtype=float)
    pairs = sg_pairs(n_sg)
    eta = np.column_stack([patterns[:, g1] * patterns[:, g2] for g1, g2 in pairs]) \
        if pairs else np.zeros((patterns.shape[0], 0))
    return np.hstack([patterns, eta])


@dataclass
class SccDataset:
    """Exhaustive SCC samples over x in {0,1}^G, alpha in {0,1}^C."""

    n_sg: int
    n_ibg: int
    patterns: np.ndarray        # (n_samples, n_sg + n_ibg)
    scc: np.ndarray             # (n_samples, n_bus) magnitudes, p.u.
    skipped_singular: int = 0

    @property
    def n_samples(self) -> int:
        return self.patterns.shape[0]

    @property
    def n_bus(self) -> int:
        return self.scc.shape[1]


def enumerate_dataset(case: NetworkCase) -> SccDataset:
    """Evaluate the exact oracle at every binary commitment pattern.

    Sample order is binary counting with the x bits most significant;
    singular (zero-source) patterns are skipped and counted.
    """
    ng, nc = case.n_sg, case.n_ibg
    total_bits = ng + nc
    if total_bits > ENUMERATION_GUARD:
        raise DatasetSizeError(
            f"{total_bits} units exceed the exhaustive enumeration guard ({ENUMERATION_GUARD})"
        )
    rows, sccs = [], []
    skipped = 0
    for s in range(2 ** total_bits):
        bits = [(s >> (total_bits - 1 - k)) & 1 for k in range(total_bits)]
        x = tuple(bits[:ng])
        alpha = tuple(float(b) for b in bits[ng:])
        try:
            res = scc_all_buses(case, CommitmentPattern(x, alpha))
        except IslandedNetworkError:
            skipped += 1
            continue
        rows.append([float(v) for v in bits])
        sccs.append(res.magnitude)
    if skipped:
        log.info("dataset enumeration skipped %d singular pattern(s)", skipped)
    return SccDataset(
        n_sg=ng,
        n_ibg=nc,
        patterns=np.array(rows, dtype=float).reshape(len(rows), total_bits),
        scc=np.array(sccs, dtype=float),
        skipped_singular=skipped,
    )


# ------------------------------------------------------------- estimators

class _SurrogateBase(BaseEstimator, RegressorMixin):
    """Shared prediction/validation; subclasses implement _solve."""

    def __init__(self, n_sg: int):
        self.n_sg = n_sg

    def _validate(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] < self.n_sg:
            raise ValueError(
                f"X has {X.shape[1]} columns but n_sg={self.n_sg}; expected x then alpha"
            )
        if y is not None:
            y = np.asarray(y, dtype=float).reshape(-1)
            if y.shape[0] != X.shape[0]:
                raise ValueError("X and y disagree on sample count")
            return X, y
        return X

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = self._validate(X)
        return design_matrix(X, self.n_sg) @ self.coef_

    def _finish(self, coef: np.ndarray):
        n_ibg = coef.shape[0] - self.n_sg - len(sg_pairs(self.n_sg))
        self.coef_ = coef
        self.coef_sg_ = coef[: self.n_sg]
        self.coef_ibg_ = coef[self.n_sg: self.n_sg + n_ibg]
        self.coef_pair_ = coef[self.n_sg + n_ibg:]
        return self


class LeastSquaresSurrogate(_SurrogateBase):
    """Global least-squares fit ("dm1"), ridge-damped for rank deficiency."""

    def __init__(self, n_sg: int, ridge: float = RIDGE):
        super().__init__(n_sg)
        self.ridge = ridge

    def fit(self, X, y):
        X, y = self._validate(X, y)
        a = design_matrix(X, self.n_sg)
        gram = a.T @ a + self.ridge * np.eye(a.shape[1])
        coef = np.linalg.solve(gram, a.T @ y)
        return self._finish(coef)


class ConservativeSurrogate(_SurrogateBase):
    """Never-overestimating fit ("dm2"): min sum(y - yhat) s.t. yhat <= y."""

    def fit(self, X, y):
        X, y = self._validate(X, y)
        a = design_matrix(X, self.n_sg)
        n = a.shape[1]
        model = milp.MilpModel("dm2")
        for j in range(n):
            model.add_var(f"k{j}", -milp.INF, milp.INF)
        for w in range(a.shape[0]):
            terms = [(j, a[w, j]) for j in range(n) if a[w, j] != 0.0]
            if terms:
                model.add_constr(f"s{w}", terms, "<=", float(y[w]))
        colsum = a.sum(axis=0)
        model.set_objective([(j, -colsum[j]) for j in range(n)])
        sol = milp.solve_lp(model)
        if sol.status == "unbounded":
            raise FitError("conservative fit LP is unbounded")
        assert sol.status == "optimal", "feasible by construction (k = 0)"
        return self._finish(sol.values[:n].copy())


def _classification_system(a: np.ndarray, y: np.ndarray, ilim: float, nu: float,
                           eps: float = STRICT_EPS):
    """Hard classification constraints of the margin fit, as G k <= h."""
    below = y < ilim
    above = y >= ilim + nu
    n = a.shape[1]
    g = np.vstack([a[below], -a[above]]) if (below.any() or above.any()) \
        else np.zeros((0, n))
    h = np.concatenate([
        np.full(int(below.sum()), ilim - eps),
        np.full(int(above.sum()), -ilim),
    ])
    return g, h


class MarginSurrogate(_SurrogateBase):
    """Classification-style fit ("dm3") around a limit with margin nu.

    Samples below the limit are forced strictly below it, samples at
    least nu above are forced to or above it, and only the band in
    between contributes squared error.  The QP ridge is scaled to the
    Gram matrix so near-empty bands stay numerically solvable.
    """

    def __init__(self, n_sg: int, ilim: float, nu: float = 0.0,
                 strict_eps: float = STRICT_EPS, ridge: float = 1e-8):
        super().__init__(n_sg)
        self.ilim = ilim
        self.nu = nu
        self.strict_eps = strict_eps
        self.ridge = ridge

    def fit(self, X, y):
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        X, y = self._validate(X, y)
        a = design_matrix(X, self.n_sg)
        n = a.shape[1]
        below = y < self.ilim
        band = (~below) & (y < self.ilim + self.nu)
        above = y >= self.ilim + self.nu

        a_band = a[band]
        if a_band.shape[0]:
            gram = a_band.T @ a_band
            lam = self.ridge * max(1.0, float(np.trace(gram)) / n)
            q = 2.0 * (gram + lam * np.eye(n))
            c = -2.0 * (a_band.T @ y[band])
        else:
            # degenerate objective: return the minimum-norm feasible point
            q = 2.0 * np.eye(n)
            c = np.zeros(n)
        g, h = _classification_system(a, y, self.ilim, self.nu, self.strict_eps)
        try:
            coef = milp.solve_qp_active_set(q, c, g, h)
        except milp.QpInfeasibleError:
            raise MarginInfeasibleError(
                f"margin nu={self.nu} too small: classification constraints are infeasible"
            ) from None
        return self._finish(coef)


# -------------------------------------------------- per-fault-bus surface

@dataclass
class SccSurrogate:
    """Fitted coefficients for one fault bus plus fit diagnostics."""

    fault_bus: int
    method: str                     # dm1 | dm2 | dm3
    n_sg: int
    k_sg: np.ndarray
    k_ibg: np.ndarray
    k_pair: np.ndarray
    nu: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def coef(self) -> np.ndarray:
        return np.concatenate([self.k_sg, self.k_ibg, self.k_pair])

    def pairs(self) -> list[tuple[int, int]]:
        return sg_pairs(self.n_sg)


def eval_surrogate(s: SccSurrogate, x, alpha) -> float:
    """Surrogate value at one pattern; alpha may be fractional."""
    row = np.concatenate([np.asarray(x, float), np.asarray(alpha, float)])
    if row.shape[0] != s.n_sg + s.k_ibg.shape[0]:
        raise ValueError("pattern dimensions do not match the surrogate")
    return float(design_matrix(row[None, :], s.n_sg)[0] @ s.coef)


def _wrap(est, ds: SccDataset, fault_bus: int, method: str, nu=None) -> SccSurrogate:
    return SccSurrogate(
        fault_bus=fault_bus,
        method=method,
        n_sg=ds.n_sg,
        k_sg=est.coef_sg_.copy(),
        k_ibg=est.coef_ibg_.copy(),
        k_pair=est.coef_pair_.copy(),
        nu=nu,
    )


def fit_dm1(ds: SccDataset, fault_bus: int, ridge: float = RIDGE) -> SccSurrogate:
    est = LeastSquaresSurrogate(ds.n_sg, ridge=ridge).fit(ds.patterns, ds.scc[:, fault_bus])
    return _wrap(est, ds, fault_bus, "dm1")


def fit_dm2(ds: SccDataset, fault_bus: int) -> SccSurrogate:
    est = ConservativeSurrogate(ds.n_sg).fit(ds.patterns, ds.scc[:, fault_bus])
    return _wrap(est, ds, fault_bus, "dm2")


def fit_dm3(ds: SccDataset, fault_bus: int, ilim: float, nu: float) -> SccSurrogate:
    est = MarginSurrogate(ds.n_sg, ilim=ilim, nu=nu).fit(ds.patterns, ds.scc[:, fault_bus])
    return _wrap(est, ds, fault_bus, "dm3", nu=nu)


def select_nu(ds: SccDataset, fault_bus: int, ilim: float,
              rel_tol: float = 1e-4) -> float:
    """Smallest margin nu for which the classification fit is feasible.

    Bisection over [0, max_scc - ilim]; feasibility is monotone in nu
    (a wider band only removes constraints), which the bracket checks
    assert rather than assume.  Only the hard classification system is
    tested during the search; the caller fits once at the result.
    """
    y = ds.scc[:, fault_bus]
    a = design_matrix(ds.patterns, ds.n_sg)

    def feasible(nu: float) -> bool:
        return milp.inequalities_feasible(*_classification_system(a, y, ilim, nu))

    if feasible(0.0):
        return 0.0
    nu_hi = float(np.max(y)) - ilim
    if nu_hi <= 0 or not feasible(nu_hi):
        raise MarginInfeasibleError(
            f"bus {fault_bus}: classification fit infeasible even with the full margin "
            f"(structural misfit)"
        )
    lo, hi = 0.0, nu_hi
    while hi - lo > rel_tol * nu_hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def classify_errors(s: SccSurrogate, ds: SccDataset, fault_bus: int, ilim: float) -> dict:
    """Type-I / Type-II misclassification counts and mean relative errors.

    Type I: surrogate says the limit is met but the exact value violates
    it.  Type II: the opposite.  err is the mean of (yhat - y) / y over
    the error set (0 when the set is empty).
    """
    a = design_matrix(ds.patterns, ds.n_sg)
    yhat = a @ s.coef
    y = ds.scc[:, fault_bus]
    t1 = (yhat >= ilim) & (y < ilim)
    t2 = (yhat < ilim) & (y >= ilim)

    def stats(mask):
        n = int(mask.sum())
        if n == 0:
            return {"n": 0, "err": 0.0}
        rel = (yhat[mask] - y[mask]) / y[mask]
        return {"n": n, "err": float(np.mean(rel))}

    out = {"type1": stats(t1), "type2": stats(t2)}
    s.diagnostics.update(out)
    return out


# ------------------------------------------------------------ whole model

@dataclass
class SurrogateModel:
    """Per-fault-bus surrogates for every bus of a case."""

    method: str
    n_sg: int
    n_ibg: int
    per_bus: list[SccSurrogate]

    def bus(self, fault_bus: int) -> SccSurrogate:
        return self.per_bus[fault_bus]

    def to_json(self) -> str:
        payload = {
            "method": self.method,
            "n_sg": self.n_sg,
            "n_ibg": self.n_ibg,
            "pairs": sg_pairs(self.n_sg),
            "buses": [
                {
                    "bus": s.fault_bus + 1,
                    "k_sg": [float(v) for v in s.k_sg],
                    "k_ibg": [float(v) for v in s.k_ibg],
                    "k_pair": [float(v) for v in s.k_pair],
                    "nu": s.nu,
                    "diagnostics": s.diagnostics,
                }
                for s in self.per_bus
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SurrogateModel":
        d = json.loads(text)
        per_bus = [
            SccSurrogate(
                fault_bus=b["bus"] - 1,
                method=d["method"],
                n_sg=d["n_sg"],
                k_sg=np.array(b["k_sg"], dtype=float),
                k_ibg=np.array(b["k_ibg"], dtype=float),
                k_pair=np.array(b["k_pair"], dtype=float),
                nu=b.get("nu"),
                diagnostics=b.get("diagnostics", {}),
            )
            for b in sorted(d["buses"], key=lambda b: b["bus"])
        ]
        return cls(method=d["method"], n_sg=d["n_sg"], n_ibg=d["n_ibg"], per_bus=per_bus)


def fit_model(ds: SccDataset, method: str, ilim=None, nu="auto") -> SurrogateModel:
    """Fit every fault bus with one method; dm3 needs ilim (scalar or per-bus).

    nu="auto" selects the smallest feasible margin per bus.
    """
    per_bus = []
    for f in range(ds.n_bus):
        if method == "dm1":
            s = fit_dm1(ds, f)
        elif method == "dm2":
            s = fit_dm2(ds, f)
        elif method == "dm3":
            if ilim is None:
                raise ValueError("dm3 needs an ilim")
            lim = float(ilim[f]) if np.ndim(ilim) else float(ilim)
            bus_nu = select_nu(ds, f, lim) if nu == "auto" else float(nu)
            s = fit_dm3(ds, f, lim, bus_nu)
        else:
            raise ValueError(f"unknown method {method!r}")
        if ilim is not None:
            lim = float(ilim[f]) if np.ndim(ilim) else float(ilim)
            classify_errors(s, ds, f, lim)
        per_bus.append(s)
    return SurrogateModel(method=method, n_sg=ds.n_sg, n_ibg=ds.n_ibg, per_bus=per_bus)
