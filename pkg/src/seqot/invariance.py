"""Finite coordinate-permutation groups acting on measures, functions and plans.

Groups are materialized as explicit element lists (capped at |S_7| = 5040), so
Haar averages and orbit enumeration are exact.  The invariant Kantorovich
problem is solved as an LP over one variable per orbit of support pairs under
the diagonal action, which enforces invariance exactly and shrinks the LP by
roughly a factor |G|.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy import sparse

from .measures import DiscreteMeasure
from .ot import Coupling, cost_matrix, graph_concentration, solve_discrete_ot

MAX_GROUP_SIZE = 5040
INVARIANCE_TOL = 1e-9

__all__ = [
    "GroupAction",
    "closure_from_generators",
    "symmetric_group",
    "cyclic_group",
    "trivial_group",
    "haar_project",
    "symmetrize_coupling",
    "solve_invariant_ot",
    "invariant_duality_value",
    "transitive_identity_check",
    "no_map_counterexample",
    "first_coordinate_cost",
    "close_support",
    "merge_atoms",
]


def _compose(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    # act(compose(p, q), x) = act(p, act(q, x)) with act(p, x)[i] = x[p[i]]
    return q[p]


class GroupAction:
    """A finite group of coordinate permutations of {0..dim-1}.

    ``elements`` is a (k, dim) integer array; the action on a point is
    ``x[p]`` for a row ``p``.  Closure, identity and inverses are verified on
    construction; transitivity is computed, not asserted.
    """

    def __init__(self, dim: int, elements, _verified: bool = False):
        els = np.atleast_2d(np.asarray(elements, dtype=np.intp))
        if els.shape[1] != dim:
            raise ValueError("element length != dim")
        keyed = {e.tobytes(): e for e in els}
        els = np.array(sorted(keyed.values(), key=lambda e: tuple(e)))
        for e in els:
            if sorted(e) != list(range(dim)):
                raise ValueError(f"not a permutation of 0..{dim-1}: {e}")
        if np.arange(dim, dtype=np.intp).tobytes() not in keyed:
            raise ValueError("identity not present")
        if not _verified:
            # a set already closed by construction (generator closure, full
            # symmetric group) skips this quadratic re-validation
            for p in els:
                if np.argsort(p).tobytes() not in keyed:
                    raise ValueError("inverse missing; not a group")
                for q in els:
                    if _compose(p, q).tobytes() not in keyed:
                        raise ValueError("not closed under composition")
        self.dim = dim
        self.elements = els
        self.elements.flags.writeable = False
        # reachable[i, j]: some element sends coordinate i to slot j
        reach = np.zeros((dim, dim), dtype=bool)
        for p in els:
            reach[p, np.arange(dim)] = True
        self.reachable = reach
        self.transitive = bool(reach.all())

    def __len__(self):
        return self.elements.shape[0]

    def __repr__(self):
        return f"GroupAction(dim={self.dim}, order={len(self)}, transitive={self.transitive})"

    def act_points(self, p: np.ndarray, points: np.ndarray) -> np.ndarray:
        return points[:, p]

    def to_dict(self) -> dict:
        return {"dim": self.dim, "generators": self.elements.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "GroupAction":
        return closure_from_generators(d["dim"], d["generators"])


def closure_from_generators(dim: int, generators, max_size: int = MAX_GROUP_SIZE) -> GroupAction:
    """Generate the group closure of the given permutations (BFS)."""
    gens = [np.asarray(g, dtype=np.intp) for g in np.atleast_2d(np.asarray(generators))]
    for g in gens:
        if sorted(g) != list(range(dim)):
            raise ValueError(f"not a permutation of 0..{dim-1}: {g}")
    identity = np.arange(dim, dtype=np.intp)
    els = {identity.tobytes(): identity}
    frontier = [identity]
    while frontier:
        new = []
        for g in gens:
            for h in frontier:
                c = _compose(g, h)
                key = c.tobytes()
                if key not in els:
                    els[key] = c
                    new.append(c)
                    if len(els) > max_size:
                        raise ValueError(f"group closure exceeds max_size={max_size}")
        frontier = new
    return GroupAction(dim, np.array(list(els.values())), _verified=True)


def symmetric_group(dim: int) -> GroupAction:
    if dim > 7:
        raise ValueError("symmetric group materialization capped at dim 7")
    return GroupAction(dim, np.array(list(itertools.permutations(range(dim)))),
                       _verified=True)


def cyclic_group(dim: int) -> GroupAction:
    shift = np.roll(np.arange(dim), 1)
    return closure_from_generators(dim, [shift])


def trivial_group(dim: int) -> GroupAction:
    return GroupAction(dim, [np.arange(dim)])


# ---------------------------------------------------------------------------
# index maps of the action on a finite point set


def _point_index(points: np.ndarray) -> dict:
    return {np.ascontiguousarray(row).tobytes(): i for i, row in enumerate(points)}


def _index_maps(points: np.ndarray, group: GroupAction) -> np.ndarray:
    """(|G|, n) table: maps[g, a] = index of points[a][p_g] in the set.

    Raises if the set is not stable under the action.  Exact float equality is
    used; permuting coordinates never changes the stored values.
    """
    lookup = _point_index(points)
    n = points.shape[0]
    maps = np.empty((len(group), n), dtype=np.intp)
    for gi, p in enumerate(group.elements):
        moved = points[:, p]
        for a in range(n):
            key = np.ascontiguousarray(moved[a]).tobytes()
            if key not in lookup:
                raise ValueError("point set is not stable under the group action")
            maps[gi, a] = lookup[key]
    return maps


def close_support(m: DiscreteMeasure, group: GroupAction) -> DiscreteMeasure:
    """Close the support under the action, adding zero-weight atoms as needed."""
    if m.dim != group.dim:
        raise ValueError("dimension mismatch between measure and group")
    lookup = _point_index(m.points)
    extra = []
    for p in group.elements:
        moved = m.points[:, p]
        for row in moved:
            key = np.ascontiguousarray(row).tobytes()
            if key not in lookup:
                lookup[key] = -1
                extra.append(row.copy())
    if not extra:
        return m
    points = np.vstack([m.points, np.array(extra)])
    weights = np.concatenate([m.weights, np.zeros(len(extra))])
    return DiscreteMeasure(points, weights, normalize=False, prune=False)


def merge_atoms(m: DiscreteMeasure) -> DiscreteMeasure:
    """Sum the weights of exactly coincident atoms."""
    lookup = {}
    points, weights = [], []
    for row, w in zip(m.points, m.weights):
        key = np.ascontiguousarray(row).tobytes()
        if key in lookup:
            weights[lookup[key]] += w
        else:
            lookup[key] = len(points)
            points.append(row.copy())
            weights.append(float(w))
    return DiscreteMeasure(np.array(points), np.array(weights),
                           normalize=False, prune=False)


def _check_invariant_weights(m: DiscreteMeasure, maps: np.ndarray, tol=INVARIANCE_TOL):
    for gi in range(maps.shape[0]):
        if np.max(np.abs(m.weights[maps[gi]] - m.weights)) > tol:
            raise ValueError("marginal is not invariant under the group action")


# ---------------------------------------------------------------------------
# operations


def haar_project(values, points, group: GroupAction) -> np.ndarray:
    """Group-average a function table: (1/|G|) sum_g f(g^-1 x) on every point.

    Idempotent, linear, and sup-norm nonexpansive; the residual f - fbar
    averages to zero over every orbit.
    """
    values = np.asarray(values, dtype=float)
    points = np.asarray(points, dtype=float)
    maps = _index_maps(points, group)
    out = np.zeros_like(values, dtype=float)
    for gi in range(len(group)):
        out += values[maps[gi]]
    return out / len(group)


def symmetrize_coupling(plan: Coupling, group: GroupAction) -> Coupling:
    """Average g . plan over the group (diagonal action on pairs).

    Requires both marginals invariant and both supports stable; preserves the
    marginals exactly and the cost of any invariant cost function exactly.
    """
    src_maps = _index_maps(plan.source.points, group)
    tgt_maps = _index_maps(plan.target.points, group)
    _check_invariant_weights(plan.source, src_maps)
    _check_invariant_weights(plan.target, tgt_maps)
    w = np.zeros_like(plan.weights)
    for gi in range(len(group)):
        w += plan.weights[np.ix_(src_maps[gi], tgt_maps[gi])]
    w /= len(group)
    return Coupling(plan.source, plan.target, w)


def first_coordinate_cost(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """(x_1 - y_1)^2 on the support product."""
    return (x[:, 0][:, None] - y[:, 0][None, :]) ** 2


def _pair_orbits(src_maps: np.ndarray, tgt_maps: np.ndarray):
    """Orbit labels of support pairs under the diagonal action."""
    n, m = src_maps.shape[1], tgt_maps.shape[1]
    label = -np.ones(n * m, dtype=np.intp)
    n_orbits = 0
    for start in range(n * m):
        if label[start] >= 0:
            continue
        stack = [start]
        label[start] = n_orbits
        while stack:
            pid = stack.pop()
            i, j = divmod(pid, m)
            for gi in range(src_maps.shape[0]):
                q = src_maps[gi, i] * m + tgt_maps[gi, j]
                if label[q] < 0:
                    label[q] = n_orbits
                    stack.append(q)
        n_orbits += 1
    return label.reshape(n, m), n_orbits


@dataclass(frozen=True)
class InvariantOTResult:
    plan: Coupling
    value: float
    n_orbits: int


def solve_invariant_ot(mu: DiscreteMeasure, nu: DiscreteMeasure, group: GroupAction,
                       cost=first_coordinate_cost) -> InvariantOTResult:
    """Minimize the cost over couplings invariant under the diagonal action.

    Formulated on orbit-representative variables: an invariant plan is
    constant on each orbit of support pairs, so one LP variable per orbit
    enforces invariance exactly.  The default cost is the single-coordinate
    quadratic (x_1 - y_1)^2.
    """
    mu = close_support(mu, group)
    nu = close_support(nu, group)
    src_maps = _index_maps(mu.points, group)
    tgt_maps = _index_maps(nu.points, group)
    _check_invariant_weights(mu, src_maps)
    _check_invariant_weights(nu, tgt_maps)
    n, m = len(mu), len(nu)
    label, n_orbits = _pair_orbits(src_maps, tgt_maps)
    c = cost_matrix(mu, nu, cost)
    # objective: total cost of one unit of per-pair weight on each orbit
    obj = np.zeros(n_orbits)
    np.add.at(obj, label.ravel(), c.ravel())
    # row i: sum over orbits of (count of pairs (i, *) in orbit) * w_orbit
    rows_a, cols_a, data_a = [], [], []
    for i in range(n):
        cnt = np.bincount(label[i], minlength=n_orbits)
        nz = np.nonzero(cnt)[0]
        rows_a += [i] * nz.size
        cols_a += nz.tolist()
        data_a += cnt[nz].tolist()
    for j in range(m):
        cnt = np.bincount(label[:, j], minlength=n_orbits)
        nz = np.nonzero(cnt)[0]
        rows_a += [n + j] * nz.size
        cols_a += nz.tolist()
        data_a += cnt[nz].tolist()
    a_eq = sparse.coo_matrix((data_a, (rows_a, cols_a)),
                             shape=(n + m, n_orbits)).tocsr()
    b_eq = np.concatenate([mu.weights, nu.weights])
    res = linprog(obj, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"invariant LP failed: {res.message}")
    w = res.x[label]
    plan = Coupling(mu, nu, np.maximum(w, 0.0))
    return InvariantOTResult(plan, float(obj @ res.x), n_orbits)


@dataclass(frozen=True)
class InvariantDualResult:
    value: float
    phi_bar: np.ndarray
    psi_bar: np.ndarray
    projected_cost: np.ndarray


def invariant_duality_value(mu: DiscreteMeasure, nu: DiscreteMeasure, group: GroupAction,
                            cost=first_coordinate_cost) -> InvariantDualResult:
    """Maximize int phi dmu + int psi dnu over invariant potentials with
    phi(x) + psi(y) <= cbar(x, y), cbar the Haar projection of the cost under
    the diagonal action.  On finite supports this is the dual LP of
    ``solve_invariant_ot`` and certifies its value.
    """
    mu = close_support(mu, group)
    nu = close_support(nu, group)
    src_maps = _index_maps(mu.points, group)
    tgt_maps = _index_maps(nu.points, group)
    _check_invariant_weights(mu, src_maps)
    _check_invariant_weights(nu, tgt_maps)
    n, m = len(mu), len(nu)
    c = cost_matrix(mu, nu, cost)
    cbar = np.zeros_like(c)
    for gi in range(len(group)):
        cbar += c[np.ix_(src_maps[gi], tgt_maps[gi])]
    cbar /= len(group)

    # orbits of atoms on each side: invariant potentials are constant on them
    def atom_orbits(maps):
        n_pts = maps.shape[1]
        lab = -np.ones(n_pts, dtype=np.intp)
        k = 0
        for s in range(n_pts):
            if lab[s] >= 0:
                continue
            orbit = np.unique(maps[:, s])
            lab[orbit] = k
            k += 1
        return lab, k

    src_lab, n_src = atom_orbits(src_maps)
    tgt_lab, n_tgt = atom_orbits(tgt_maps)
    pair_lab, n_pairs = _pair_orbits(src_maps, tgt_maps)

    # one representative constraint per pair orbit: phi_O + psi_P <= cbar
    reps = np.zeros(n_pairs, dtype=np.intp)
    seen = np.zeros(n_pairs, dtype=bool)
    flat = pair_lab.ravel()
    for pid, o in enumerate(flat):
        if not seen[o]:
            seen[o] = True
            reps[o] = pid
    ri, rj = np.divmod(reps, m)
    a_ub = sparse.coo_matrix(
        (np.ones(2 * n_pairs),
         (np.concatenate([np.arange(n_pairs), np.arange(n_pairs)]),
          np.concatenate([src_lab[ri], n_src + tgt_lab[rj]]))),
        shape=(n_pairs, n_src + n_tgt)).tocsr()
    b_ub = cbar[ri, rj]
    obj = np.zeros(n_src + n_tgt)
    np.add.at(obj, src_lab, mu.weights)
    np.add.at(obj, n_src + tgt_lab, nu.weights)
    res = linprog(-obj, A_ub=a_ub, b_ub=b_ub, bounds=(None, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"invariant dual LP failed: {res.message}")
    phi = res.x[:n_src][src_lab]
    psi = res.x[n_src:][tgt_lab]
    return InvariantDualResult(float(-res.fun), phi, psi, cbar)


@dataclass(frozen=True)
class TransitiveIdentityReport:
    full_value: float
    invariant_single_value: float
    dim_times_invariant: float
    relative_difference: float
    per_coordinate_costs: np.ndarray
    per_coordinate_spread: float

    def to_dict(self) -> dict:
        return {
            "full_value": self.full_value,
            "invariant_single_value": self.invariant_single_value,
            "dim_times_invariant": self.dim_times_invariant,
            "relative_difference": self.relative_difference,
            "per_coordinate_costs": self.per_coordinate_costs.tolist(),
            "per_coordinate_spread": self.per_coordinate_spread,
        }


def transitive_identity_check(mu: DiscreteMeasure, nu: DiscreteMeasure,
                              group: GroupAction) -> TransitiveIdentityReport:
    """Compare the full quadratic transport value with d x the invariant
    single-coordinate value, for a transitively acting group.

    Also symmetrizes the full optimal plan (cost-preserving for the invariant
    quadratic cost) and reports the per-coordinate costs, which the identity
    predicts to be equal across coordinates.
    """
    if not group.transitive:
        raise ValueError("the identity requires a transitively acting group")
    mu = close_support(mu, group)
    nu = close_support(nu, group)
    full = solve_discrete_ot(mu, nu)
    inv = solve_invariant_ot(mu, nu, group, cost=first_coordinate_cost)
    d = group.dim
    sym_plan = symmetrize_coupling(full.plan, group)
    per_coord = np.array([
        float(np.sum(sym_plan.weights *
                     (mu.points[:, k][:, None] - nu.points[:, k][None, :]) ** 2))
        for k in range(d)
    ])
    rel = abs(full.value - d * inv.value) / max(1.0, abs(full.value))
    return TransitiveIdentityReport(
        full_value=full.value,
        invariant_single_value=inv.value,
        dim_times_invariant=d * inv.value,
        relative_difference=rel,
        per_coordinate_costs=per_coord,
        per_coordinate_spread=float(per_coord.max() - per_coord.min()),
    )


def product_power(component: DiscreteMeasure, d: int) -> DiscreteMeasure:
    """The d-fold product of a 1D discrete measure."""
    if component.dim != 1:
        raise ValueError("component must be 1D")
    xs = component.points[:, 0]
    ws = component.weights
    grids = np.meshgrid(*([xs] * d), indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(points.shape[0])
    for k in range(d):
        weights *= ws[np.meshgrid(*([np.arange(xs.size)] * d), indexing="ij")[k].ravel()]
    return DiscreteMeasure(points, weights, normalize=False, prune=False)


@dataclass(frozen=True)
class NoMapReport:
    value: float
    concentration: float
    is_map: bool
    components_identical: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "concentration": self.concentration,
            "is_map": self.is_map,
            "components_identical": self.components_identical,
        }


def no_map_counterexample(component_a: DiscreteMeasure, component_b: DiscreteMeasure,
                          d: int, group: GroupAction,
                          concentration_tol: float = 0.05) -> NoMapReport:
    """Invariant transport of a^d onto (a^d + b^d)/2 and its graph diagnostics.

    For distinct 1D components the optimal invariant plan cannot concentrate
    on a graph, so the reported concentration is expected strictly below 1;
    for identical components it is 1 (the diagonal plan).  Degenerate inputs
    are reported, not raised.
    """
    mu = product_power(component_a, d)
    pa = product_power(component_a, d)
    pb = product_power(component_b, d)
    nu = merge_atoms(DiscreteMeasure(
        np.vstack([pa.points, pb.points]),
        np.concatenate([0.5 * pa.weights, 0.5 * pb.weights]),
        normalize=False, prune=False))
    identical = (len(component_a) == len(component_b)
                 and np.array_equal(component_a.points, component_b.points)
                 and np.array_equal(component_a.weights, component_b.weights))
    res = solve_invariant_ot(mu, nu, group, cost=first_coordinate_cost)
    conc = graph_concentration(res.plan, tol=concentration_tol)
    return NoMapReport(res.value, conc, conc >= 1.0 - 1e-12, identical)
