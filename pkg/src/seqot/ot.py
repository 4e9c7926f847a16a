"""Discrete Kantorovich solvers and transport-plan diagnostics.

Exact plans come from the transportation LP (HiGHS), entropic plans from a
stabilized Sinkhorn with epsilon-annealing.  1D transport is closed form via
quantile functions.  Plan diagnostics: cyclical monotonicity over short
cycles, graph concentration, barycentric map extraction.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .measures import DiscreteMeasure, Grid1D, Quantile1D, quantile_from_grid

MARGINAL_TOL = 1e-10
DUAL_FEAS_TOL = 1e-9
GAP_TOL = 1e-9
MAX_LP_CELLS = 1_000_000  # n*m cap for the exact solver

__all__ = [
    "Coupling",
    "DualPair",
    "OTResult",
    "SinkhornResult",
    "Monotone1DMap",
    "CycleReport",
    "solve_discrete_ot",
    "quantile_transport_1d",
    "sinkhorn",
    "barycentric_map",
    "check_cyclical_monotonicity",
    "graph_concentration",
    "cost_matrix",
]


class Coupling:
    """A joint weight table over two discrete supports with prescribed marginals."""

    def __init__(self, source: DiscreteMeasure, target: DiscreteMeasure, weights,
                 check: bool = True):
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(source), len(target)):
            raise ValueError("weight table shape mismatch")
        if check:
            if np.any(w < -MARGINAL_TOL):
                raise ValueError("negative coupling weight")
            row_err = np.max(np.abs(w.sum(axis=1) - source.weights))
            col_err = np.max(np.abs(w.sum(axis=0) - target.weights))
            if row_err > MARGINAL_TOL or col_err > MARGINAL_TOL:
                raise ValueError(
                    f"marginal violation: rows {row_err:.3e}, cols {col_err:.3e}")
            if abs(w.sum() - 1.0) > MARGINAL_TOL:
                raise ValueError("total mass != 1")
        w = np.maximum(w, 0.0)
        w.flags.writeable = False
        self.source = source
        self.target = target
        self.weights = w

    def cost(self, cost=None) -> float:
        """Transport cost sum_ij pi_ij c(x_i, y_j) (quadratic by default)."""
        return float(np.sum(self.weights * cost_matrix(self.source, self.target, cost)))

    def to_dict(self, threshold: float = 0.0) -> dict:
        i, j = np.nonzero(self.weights > threshold)
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "triplets": [[int(a), int(b), float(self.weights[a, b])]
                         for a, b in zip(i, j)],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Coupling":
        src = DiscreteMeasure.from_dict(d["source"])
        tgt = DiscreteMeasure.from_dict(d["target"])
        w = np.zeros((len(src), len(tgt)))
        for i, j, v in d["triplets"]:
            w[int(i), int(j)] = v
        return cls(src, tgt, w)


@dataclass(frozen=True)
class DualPair:
    """Kantorovich potentials for the cost-form dual: phi_i + psi_j <= c_ij.

    The inner-product form potentials are the affine images
    phi'(x) = ||x||^2/2 - phi(x)/2 style bridge; see ``to_inner_product_form``.
    """

    phi: np.ndarray
    psi: np.ndarray

    def value(self, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
        return float(mu.weights @ self.phi + nu.weights @ self.psi)

    def feasibility_violation(self, cost: np.ndarray) -> float:
        return float(np.max(self.phi[:, None] + self.psi[None, :] - cost))

    def to_inner_product_form(self, mu: DiscreteMeasure, nu: DiscreteMeasure):
        """Potentials (F, G) with F(x) + G(y) >= <x, y> for the quadratic cost.

        F_i = ||x_i||^2/2 - phi_i/2, G_j = ||y_j||^2/2 - psi_j/2; feasibility of
        (phi, psi) for c = ||x-y||^2 is equivalent to F_i + G_j >= <x_i, y_j>.
        """
        f = 0.5 * np.sum(mu.points ** 2, axis=1) - 0.5 * self.phi
        g = 0.5 * np.sum(nu.points ** 2, axis=1) - 0.5 * self.psi
        return f, g


@dataclass(frozen=True)
class OTResult:
    plan: Coupling
    dual: DualPair
    value: float
    gap: float
    iterations: int
    wall_time: float


@dataclass(frozen=True)
class SinkhornResult:
    plan: Coupling
    value: float
    converged: bool
    iterations: int
    marginal_violation: float
    epsilon: float
    f: np.ndarray = field(repr=False, default=None)
    g: np.ndarray = field(repr=False, default=None)


def cost_matrix(mu: DiscreteMeasure, nu: DiscreteMeasure, cost=None) -> np.ndarray:
    """Evaluate a cost spec on the support product.

    ``cost`` may be None / "sqeuclidean" (squared Euclidean distance), a
    callable c(X, Y) -> (n, m) table, or a precomputed (n, m) array.
    """
    if cost is None or (isinstance(cost, str) and cost == "sqeuclidean"):
        x, y = mu.points, nu.points
        c = (np.sum(x ** 2, axis=1)[:, None] + np.sum(y ** 2, axis=1)[None, :]
             - 2.0 * x @ y.T)
        return np.maximum(c, 0.0)
    if callable(cost):
        c = np.asarray(cost(mu.points, nu.points), dtype=float)
    else:
        c = np.asarray(cost, dtype=float)
    if c.shape != (len(mu), len(nu)):
        raise ValueError("cost table shape mismatch")
    return c


def _product_plan_result(mu, nu, c, t0) -> OTResult:
    # a single-atom marginal forces the product plan; duals are explicit
    w = np.outer(mu.weights, nu.weights)
    value = float(np.sum(w * c))
    if len(mu) == 1:
        phi = np.zeros(1)
        psi = c[0, :].copy()
    else:
        phi = c[:, 0].copy()
        psi = np.zeros(1)
    dual = DualPair(phi, psi)
    gap = value - dual.value(mu, nu)
    plan = Coupling(mu, nu, w)
    return OTResult(plan, dual, value, abs(gap), 0, time.perf_counter() - t0)


def solve_discrete_ot(mu: DiscreteMeasure, nu: DiscreteMeasure, cost=None) -> OTResult:
    """Exact solution of the discrete Monge-Kantorovich problem.

    Solves min sum_ij c_ij pi_ij over couplings of (mu, nu) as a
    transportation LP and returns the optimal plan, a feasible dual pair and
    the optimal value with certified primal-dual gap <= 1e-9 * (1 + |value|).
    """
    t0 = time.perf_counter()
    n, m = len(mu), len(nu)
    if n * m > MAX_LP_CELLS:
        raise ValueError(f"instance {n}x{m} over the exact-solver size limit")
    if abs(mu.weights.sum() - nu.weights.sum()) > 1e-9:
        raise ValueError("infeasible marginals: mass mismatch")
    c = cost_matrix(mu, nu, cost)
    if n == 1 or m == 1:
        return _product_plan_result(mu, nu, c, t0)

    # row-sum and column-sum equality constraints over vectorized pi
    rows_i = np.repeat(np.arange(n), m)
    cols_j = np.tile(np.arange(m), n)
    var = np.arange(n * m)
    a_eq = sparse.coo_matrix(
        (np.ones(2 * n * m),
         (np.concatenate([rows_i, n + cols_j]), np.concatenate([var, var]))),
        shape=(n + m, n * m),
    ).tocsr()
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(c.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                  method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"LP solver failed: {res.message}")
    plan_w = res.x.reshape(n, m)
    # clean tiny negatives / marginal drift from the solver
    plan_w = np.maximum(plan_w, 0.0)
    phi = np.asarray(res.eqlin.marginals[:n], dtype=float)
    psi = np.asarray(res.eqlin.marginals[n:], dtype=float)
    # one c-transform pass makes the duals exactly feasible
    phi = np.min(c - psi[None, :], axis=1)
    dual = DualPair(phi, psi)
    value = float(np.sum(plan_w * c))
    gap = value - dual.value(mu, nu)
    plan = Coupling(mu, nu, plan_w)
    it = int(res.nit) if res.nit is not None else -1
    return OTResult(plan, dual, value, abs(gap), it, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# one-dimensional closed-form transport


@dataclass(frozen=True)
class Monotone1DMap:
    """The monotone rearrangement between two 1D laws, tabulated on a shared
    quantile grid: x_k = Q_mu(u_k), y_k = Q_nu(u_k), with mass m_k per segment."""

    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    mass: np.ndarray
    w2sq: float

    def __call__(self, t) -> np.ndarray:
        return np.interp(t, self.x, self.y)


def _as_quantile_source(obj, resolution):
    """Return ('discrete', xs, cum) or ('quantile', Quantile1D)."""
    if isinstance(obj, DiscreteMeasure):
        if obj.dim != 1:
            raise ValueError("quantile transport needs 1D measures")
        order = np.argsort(obj.points[:, 0], kind="stable")
        xs = obj.points[order, 0]
        cum = np.cumsum(obj.weights[order])
        return "discrete", (xs, cum)
    if isinstance(obj, Grid1D):
        return "quantile", quantile_from_grid(obj, resolution)
    if isinstance(obj, Quantile1D):
        return "quantile", obj
    raise TypeError(f"cannot interpret {type(obj).__name__} as a 1D law")


def _discrete_quantile_at(xs, cum, u):
    idx = np.searchsorted(cum, u, side="left")
    idx = np.clip(idx, 0, xs.size - 1)
    return xs[idx]


def quantile_transport_1d(mu, nu, resolution: int = 10_000,
                          resample: bool = True) -> Monotone1DMap:
    """Optimal 1D transport T = Q_nu o F_mu with its quadratic cost.

    For a pair of discrete measures the shared grid is the merged set of
    cumulative-mass breakpoints, so the cost is exact.  For function-backed
    laws (Grid1D / Quantile1D) both quantile functions are paired on the
    uniform midpoint grid of the given resolution and the cost is the mean of
    the squared value gaps.
    """
    kind_a, qa = _as_quantile_source(mu, resolution)
    kind_b, qb = _as_quantile_source(nu, resolution)

    if kind_a == "discrete" and kind_b == "discrete":
        xs_a, cum_a = qa
        xs_b, cum_b = qb
        edges = np.unique(np.concatenate([[0.0], cum_a, cum_b, [1.0]]))
        edges = edges[(edges >= 0) & (edges <= 1)]
        mass = np.diff(edges)
        keep = mass > 1e-15
        mass = mass[keep]
        mid = (edges[:-1] + edges[1:])[keep] / 2.0
        x = _discrete_quantile_at(xs_a, cum_a, mid)
        y = _discrete_quantile_at(xs_b, cum_b, mid)
        w2sq = float(mass @ (y - x) ** 2)
        return Monotone1DMap(mid, x, y, mass, w2sq)

    if kind_a != kind_b and not resample:
        raise ValueError("mixed representations need resampling enabled")
    u = (np.arange(resolution) + 0.5) / resolution
    if kind_a == "discrete":
        x = _discrete_quantile_at(*qa, u)
    else:
        if not resample and not np.array_equal(qa.quantile_grid, u):
            raise ValueError("resolution mismatch with resampling disabled")
        x = qa(u)
    if kind_b == "discrete":
        y = _discrete_quantile_at(*qb, u)
    else:
        if not resample and not np.array_equal(qb.quantile_grid, u):
            raise ValueError("resolution mismatch with resampling disabled")
        y = qb(u)
    mass = np.full(resolution, 1.0 / resolution)
    w2sq = float(np.mean((y - x) ** 2))
    return Monotone1DMap(u, x, y, mass, w2sq)


# ---------------------------------------------------------------------------
# entropic solver


def _round_to_marginals(p, a, b):
    """Project an almost-feasible plan onto the transportation polytope."""
    r = p.sum(axis=1)
    p = p * np.minimum(a / np.where(r > 0, r, 1.0), 1.0)[:, None]
    col = p.sum(axis=0)
    p = p * np.minimum(b / np.where(col > 0, col, 1.0), 1.0)[None, :]
    ea = a - p.sum(axis=1)
    eb = b - p.sum(axis=0)
    s = ea.sum()
    if s > 1e-300:
        p = p + np.outer(ea, eb) / s
    return p


def sinkhorn(mu: DiscreteMeasure, nu: DiscreteMeasure, cost=None, epsilon: float = 0.1,
             max_iter: int = 5000, tol: float = 1e-9) -> SinkhornResult:
    """Entropic-regularized transport: stabilized scaling with epsilon-annealing.

    The regularization is halved from max(C)/2 down to the target epsilon,
    warm-starting the potentials at each stage.  Iterations run on scaling
    vectors against a kernel recentered by the current potentials; whenever a
    scaling grows too large it is absorbed into the potentials and the kernel
    rebuilt, so arbitrarily small epsilon stays finite.  The returned plan is
    rounded onto the marginal polytope, making it a valid Coupling; the
    pre-rounding total-variation violation and the iteration count are
    reported, and non-convergence comes back as ``converged=False``, never
    silently.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = cost_matrix(mu, nu, cost)
    a, b = mu.weights, nu.weights
    if len(mu) == 1 or len(nu) == 1:
        w = np.outer(a, b)
        plan = Coupling(mu, nu, w)
        return SinkhornResult(plan, float(np.sum(w * c)), True, 0, 0.0, epsilon,
                              np.zeros(len(mu)), np.zeros(len(nu)))
    log_a = np.log(np.where(a > 0, a, 1e-300))
    log_b = np.log(np.where(b > 0, b, 1e-300))
    c_scale = float(np.max(c))
    ladder = [epsilon]
    while ladder[-1] < c_scale / 2 and len(ladder) < 60:
        ladder.append(ladder[-1] * 2.0)
    ladder = ladder[::-1]

    f = np.zeros(len(mu))
    g = np.zeros(len(nu))
    total_iter = 0
    violation = np.inf
    absorb_cap = 25.0  # |log scaling| beyond this is folded into the potentials

    for stage, eps in enumerate(ladder):
        last_stage = stage == len(ladder) - 1
        stage_iters = max_iter if last_stage else 12
        kernel = np.exp((f[:, None] + g[None, :] - c) / eps)
        u = np.ones(len(mu))
        v = np.ones(len(nu))

        def absorb():
            nonlocal f, g, kernel, u, v
            f = f + eps * np.log(u)
            g = g + eps * np.log(v)
            kernel = np.exp((f[:, None] + g[None, :] - c) / eps)
            u = np.ones(len(mu))
            v = np.ones(len(nu))

        for it in range(stage_iters):
            ku = kernel @ (v * b)
            u = 1.0 / np.maximum(ku, 1e-300)
            kv = kernel.T @ (u * a)
            v = 1.0 / np.maximum(kv, 1e-300)
            total_iter += 1
            logs = max(np.max(np.abs(np.log(u))), np.max(np.abs(np.log(v))))
            if logs > absorb_cap:
                absorb()
                continue
            if last_stage and (it % 10 == 9 or it == stage_iters - 1):
                # columns are exact right after the v-update; the total
                # variation drift lives in the rows
                row = a * u * (kernel @ (v * b))
                violation = 0.5 * float(np.abs(row - a).sum())
                if violation <= tol:
                    break
        absorb()
        if last_stage:
            break
    converged = violation <= tol
    p = np.exp((f[:, None] + g[None, :] - c) / epsilon
               + log_a[:, None] + log_b[None, :])
    p = _round_to_marginals(p, a, b)
    plan = Coupling(mu, nu, p)
    return SinkhornResult(plan, float(np.sum(p * c)), converged, total_iter,
                          float(violation), epsilon, f, g)


# ---------------------------------------------------------------------------
# plan diagnostics


def barycentric_map(plan: Coupling) -> np.ndarray:
    """Row-conditional barycenters T(x_i) = sum_j pi_ij y_j / sum_j pi_ij."""
    r = plan.weights.sum(axis=1)
    if np.any(r <= 0):
        raise ValueError("zero-mass row; barycentric map undefined")
    return (plan.weights @ plan.target.points) / r[:, None]


@dataclass(frozen=True)
class CycleReport:
    passed: bool
    cycles_checked: int
    worst_slack: float
    violating_cycle: tuple | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "cycles_checked": self.cycles_checked,
            "worst_slack": self.worst_slack,
            "violating_cycle": list(self.violating_cycle) if self.violating_cycle else None,
        }


def check_cyclical_monotonicity(plan: Coupling, cycle_length_max: int = 3,
                                support_threshold: float = 1e-12,
                                max_support: int = 80,
                                tol: float = 1e-9) -> CycleReport:
    """Check cyclical monotonicity of the plan's support for quadratic cost.

    For every cycle (up to the given length) of support pairs, the assigned
    cost must not exceed the cyclically shifted one.  Returns the first
    violating cycle if any.  Report-only: never raises on failure.
    """
    i_idx, j_idx = np.nonzero(plan.weights > support_threshold)
    if i_idx.size > max_support:
        order = np.argsort(plan.weights[i_idx, j_idx])[::-1][:max_support]
        i_idx, j_idx = i_idx[order], j_idx[order]
    xs = plan.source.points[i_idx]
    ys = plan.target.points[j_idx]
    k = i_idx.size
    c = (np.sum(xs ** 2, axis=1)[:, None] + np.sum(ys ** 2, axis=1)[None, :]
         - 2.0 * xs @ ys.T)

    checked = 0
    worst = np.inf
    for length in range(2, cycle_length_max + 1):
        for combo in itertools.combinations(range(k), length):
            base = sum(c[p, p] for p in combo)
            # distinct cyclic orders of the chosen pairs
            rest = combo[1:]
            for perm in itertools.permutations(rest):
                cyc = (combo[0],) + perm
                shifted = sum(c[cyc[t], cyc[(t + 1) % length]] for t in range(length))
                slack = shifted - base
                checked += 1
                worst = min(worst, slack)
                if slack < -tol:
                    cycle = tuple((int(i_idx[p]), int(j_idx[p])) for p in cyc)
                    return CycleReport(False, checked, float(slack), cycle)
    if checked == 0:
        worst = 0.0
    return CycleReport(True, checked, float(worst), None)


def graph_concentration(plan: Coupling, tol: float = 0.05) -> float:
    """Fraction of source mass whose conditional row law is within TV <= tol
    of a point mass.  Equals 1 exactly when the plan is induced by a map."""
    r = plan.weights.sum(axis=1)
    mask = r > 0
    tv = 1.0 - plan.weights[mask].max(axis=1) / r[mask]
    return float(r[mask][tv <= tol].sum() / r[mask].sum())
