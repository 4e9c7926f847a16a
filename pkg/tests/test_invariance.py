import itertools

import numpy as np
import pytest

from seqot.invariance import (
    GroupAction,
    close_support,
    closure_from_generators,
    cyclic_group,
    first_coordinate_cost,
    haar_project,
    invariant_duality_value,
    merge_atoms,
    no_map_counterexample,
    product_power,
    solve_invariant_ot,
    symmetric_group,
    symmetrize_coupling,
    transitive_identity_check,
    trivial_group,
)
from seqot.measures import DiscreteMeasure
from seqot.ot import Coupling, solve_discrete_ot


def worked_instance():
    mu = DiscreteMeasure([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])
    nu = DiscreteMeasure([[0.0, 2.0], [2.0, 0.0]], [0.5, 0.5])
    return mu, nu, symmetric_group(2)


def random_invariant_measure(rng, group, n_orbits=3, scale=1.0):
    """Random G-invariant measure built by orbit closure with per-orbit weights."""
    pts, ws = [], []
    seen = set()
    for _ in range(n_orbits):
        x = np.round(rng.normal(scale=scale, size=group.dim), 3)
        orbit = {tuple(x[p]) for p in group.elements}
        orbit -= seen
        if not orbit:
            continue
        seen |= orbit
        w = rng.random() + 0.1
        for o in sorted(orbit):
            pts.append(o)
            ws.append(w)
    return DiscreteMeasure(np.array(pts), np.array(ws))


class TestGroups:
    def test_cyclic_from_generator(self):
        g = closure_from_generators(3, [[1, 2, 0]])
        assert len(g) == 3
        assert g.transitive

    def test_s3_from_transpositions(self):
        # oracle: enumerate all compositions independently
        g = closure_from_generators(3, [[1, 0, 2], [0, 2, 1]])
        assert len(g) == 6
        want = {p for p in itertools.permutations(range(3))}
        assert {tuple(e) for e in g.elements} == want

    def test_trivial_group(self):
        g = trivial_group(4)
        assert len(g) == 1
        assert not g.transitive

    def test_closure_cap(self):
        with pytest.raises(ValueError):
            closure_from_generators(7, [np.roll(np.arange(7), 1), [1, 0, 2, 3, 4, 5, 6]],
                                    max_size=100)

    def test_group_validation(self):
        with pytest.raises(ValueError):
            GroupAction(3, [[0, 1, 2], [1, 2, 0]])  # missing inverse/closure
        with pytest.raises(ValueError):
            GroupAction(2, [[0, 0]])

    def test_serialization_round_trip(self):
        g = cyclic_group(4)
        g2 = GroupAction.from_dict(g.to_dict())
        assert np.array_equal(g.elements, g2.elements)


class TestHaarProject:
    def stable_points(self, group, rng, n=4):
        m = close_support(
            DiscreteMeasure(rng.normal(size=(n, group.dim))), group)
        return m.points

    def test_invariant_function_fixed(self):
        g = cyclic_group(3)
        pts = self.stable_points(g, np.random.default_rng(0))
        f = np.sum(pts, axis=1)  # symmetric, hence invariant
        assert np.allclose(haar_project(f, pts, g), f)

    def test_coordinate_average(self):
        g = cyclic_group(3)
        pts = self.stable_points(g, np.random.default_rng(1))
        f = pts[:, 0]
        want = pts.mean(axis=1)
        assert np.allclose(haar_project(f, pts, g), want)

    def test_idempotent_linear_nonexpansive(self):
        g = symmetric_group(3)
        rng = np.random.default_rng(2)
        pts = self.stable_points(g, rng)
        f = rng.normal(size=pts.shape[0])
        h = rng.normal(size=pts.shape[0])
        pf = haar_project(f, pts, g)
        assert np.allclose(haar_project(pf, pts, g), pf, atol=1e-12)
        assert np.allclose(haar_project(2 * f + h, pts, g),
                           2 * pf + haar_project(h, pts, g), atol=1e-12)
        assert np.max(np.abs(pf)) <= np.max(np.abs(f)) + 1e-15
        # the residual averages to zero over every orbit
        resid = f - pf
        assert abs(haar_project(resid, pts, g)).max() < 1e-12

    def test_unstable_point_set_rejected(self):
        g = cyclic_group(3)
        pts = np.array([[1.0, 2.0, 3.0]])
        with pytest.raises(ValueError):
            haar_project(np.array([1.0]), pts, g)


class TestSymmetrize:
    def test_invariant_plan_unchanged(self):
        mu, nu, g = worked_instance()
        res = solve_invariant_ot(mu, nu, g)
        again = symmetrize_coupling(res.plan, g)
        assert np.allclose(again.weights, res.plan.weights, atol=1e-14)

    def test_cost_preserved_for_invariant_cost(self):
        mu, nu, g = worked_instance()
        full = solve_discrete_ot(mu, nu)
        sym = symmetrize_coupling(full.plan, g)
        assert sym.cost() == pytest.approx(full.value, abs=1e-12)
        assert np.allclose(sym.weights.sum(1), mu.weights)
        assert np.allclose(sym.weights.sum(0), nu.weights)

    def test_asymmetric_feasible_plan_becomes_invariant(self):
        from seqot.invariance import _index_maps

        g = symmetric_group(2)
        rng = np.random.default_rng(3)
        m = random_invariant_measure(rng, g)
        nu = random_invariant_measure(rng, g)
        # a feasible but deliberately asymmetric plan: greedy north-west fill
        a, b = m.weights.copy(), nu.weights.copy()
        w = np.zeros((a.size, b.size))
        i = j = 0
        while i < a.size and j < b.size:
            q = min(a[i], b[j])
            w[i, j] = q
            a[i] -= q
            b[j] -= q
            if a[i] <= 1e-15:
                i += 1
            if j < b.size and b[j] <= 1e-15:
                j += 1
        sym = symmetrize_coupling(Coupling(m, nu, w), g)
        # invariance under every element, checked elementwise
        smap = _index_maps(m.points, g)
        tmap = _index_maps(nu.points, g)
        for gi in range(len(g)):
            assert np.allclose(sym.weights[np.ix_(smap[gi], tmap[gi])],
                               sym.weights, atol=1e-14)

    def test_non_invariant_marginal_rejected(self):
        g = symmetric_group(2)
        mu = DiscreteMeasure([[0.0, 1.0], [1.0, 0.0]], [0.7, 0.3])
        nu = DiscreteMeasure([[0.0, 2.0], [2.0, 0.0]], [0.5, 0.5])
        plan = Coupling(mu, nu, np.outer(mu.weights, nu.weights))
        with pytest.raises(ValueError):
            symmetrize_coupling(plan, g)


class TestInvariantLP:
    def test_worked_instance_value_half(self):
        # oracle: only two invariant matchings exist, with costs 1/2 and 5/2
        mu, nu, g = worked_instance()
        res = solve_invariant_ot(mu, nu, g)
        assert res.value == pytest.approx(0.5, abs=1e-10)

    def test_identical_marginals_zero_diagonal(self):
        g = symmetric_group(2)
        m = random_invariant_measure(np.random.default_rng(5), g)
        res = solve_invariant_ot(m, m, g)
        assert res.value == pytest.approx(0.0, abs=1e-10)

    def test_trivial_group_reduces_to_plain_ot(self):
        rng = np.random.default_rng(6)
        mu = DiscreteMeasure(rng.normal(size=(6, 2)), rng.random(6) + 0.1)
        nu = DiscreteMeasure(rng.normal(size=(5, 2)), rng.random(5) + 0.1)
        g = trivial_group(2)
        inv = solve_invariant_ot(mu, nu, g)
        plain = solve_discrete_ot(mu, nu, cost=first_coordinate_cost)
        assert inv.value == pytest.approx(plain.value, abs=1e-9)

    def test_duality_on_worked_instance(self):
        mu, nu, g = worked_instance()
        dual = invariant_duality_value(mu, nu, g)
        assert dual.value == pytest.approx(0.5, abs=1e-9)

    def test_duality_trivial_group_matches_standard(self):
        rng = np.random.default_rng(7)
        mu = DiscreteMeasure(rng.normal(size=(5, 2)), rng.random(5) + 0.1)
        nu = DiscreteMeasure(rng.normal(size=(4, 2)), rng.random(4) + 0.1)
        g = trivial_group(2)
        dual = invariant_duality_value(mu, nu, g, cost="sqeuclidean")
        plain = solve_discrete_ot(mu, nu)
        assert dual.value == pytest.approx(plain.value, abs=1e-9)

    def test_primal_equals_dual_random_groups(self):
        rng = np.random.default_rng(8)
        for gidx, g in enumerate([symmetric_group(2), symmetric_group(3),
                                  symmetric_group(4), cyclic_group(3),
                                  cyclic_group(4), cyclic_group(6)]):
            mu = random_invariant_measure(rng, g)
            nu = random_invariant_measure(rng, g)
            primal = solve_invariant_ot(mu, nu, g)
            dual = invariant_duality_value(mu, nu, g)
            assert primal.value >= dual.value - 1e-9
            assert primal.value == pytest.approx(dual.value, abs=1e-8), f"group {gidx}"

    def test_non_invariant_marginal_rejected_by_solver(self):
        g = symmetric_group(2)
        mu = DiscreteMeasure([[0.0, 1.0], [1.0, 0.0]], [0.7, 0.3])
        nu = DiscreteMeasure([[0.0, 2.0], [2.0, 0.0]], [0.5, 0.5])
        with pytest.raises(ValueError, match="invariant"):
            solve_invariant_ot(mu, nu, g)
        with pytest.raises(ValueError, match="invariant"):
            invariant_duality_value(mu, nu, g)

    def test_invariant_cost_projection_noop(self):
        # cost already invariant: cbar = c and values coincide
        mu, nu, g = worked_instance()
        dual = invariant_duality_value(mu, nu, g, cost="sqeuclidean")
        primal = solve_invariant_ot(mu, nu, g, cost="sqeuclidean")
        assert dual.value == pytest.approx(primal.value, abs=1e-9)
        c = (np.sum(primal.plan.source.points**2, 1)[:, None]
             + np.sum(primal.plan.target.points**2, 1)[None, :]
             - 2 * primal.plan.source.points @ primal.plan.target.points.T)
        assert np.allclose(dual.projected_cost, c, atol=1e-12)

    def test_optimality_survives_averaging(self):
        rng = np.random.default_rng(9)
        g = cyclic_group(3)
        mu = random_invariant_measure(rng, g)
        nu = random_invariant_measure(rng, g)
        full = solve_discrete_ot(mu, nu)
        sym = symmetrize_coupling(full.plan, g)
        assert sym.cost() == pytest.approx(full.value, abs=1e-9)


class TestTransitiveIdentity:
    def test_worked_instance(self):
        mu, nu, g = worked_instance()
        rep = transitive_identity_check(mu, nu, g)
        assert rep.full_value == pytest.approx(1.0, abs=1e-9)
        assert rep.invariant_single_value == pytest.approx(0.5, abs=1e-9)
        assert rep.relative_difference <= 1e-8
        assert rep.per_coordinate_spread <= 1e-8

    def test_identical_marginals(self):
        g = cyclic_group(3)
        m = random_invariant_measure(np.random.default_rng(10), g)
        rep = transitive_identity_check(m, m, g)
        assert rep.full_value == pytest.approx(0.0, abs=1e-10)
        assert rep.dim_times_invariant == pytest.approx(0.0, abs=1e-10)

    def test_cyclic_c3_orbit_instance(self):
        rng = np.random.default_rng(11)
        g = cyclic_group(3)
        mu = random_invariant_measure(rng, g, n_orbits=2)
        nu = random_invariant_measure(rng, g, n_orbits=2)
        rep = transitive_identity_check(mu, nu, g)
        assert rep.relative_difference <= 1e-8
        assert rep.per_coordinate_spread <= 1e-8

    def test_non_transitive_group_rejected(self):
        g = trivial_group(2)
        mu, nu, _ = worked_instance()
        with pytest.raises(ValueError):
            transitive_identity_check(mu, nu, g)


class TestNoMap:
    def test_distinct_components_split(self):
        a = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        b = DiscreteMeasure([[0.0], [2.0]], [0.5, 0.5])
        rep = no_map_counterexample(a, b, 2, symmetric_group(2))
        assert rep.concentration < 1.0
        assert not rep.is_map
        assert not rep.components_identical

    def test_identical_components_diagonal(self):
        a = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        rep = no_map_counterexample(a, a, 2, symmetric_group(2))
        assert rep.components_identical
        assert rep.concentration == pytest.approx(1.0)
        assert rep.value == pytest.approx(0.0, abs=1e-12)

    def test_trivial_group_d1_reports(self):
        a = DiscreteMeasure([[0.0], [1.0]], [0.5, 0.5])
        b = DiscreteMeasure([[0.5], [1.5]], [0.5, 0.5])
        rep = no_map_counterexample(a, b, 1, trivial_group(1))
        assert 0.0 <= rep.concentration <= 1.0


def test_product_power_weights():
    a = DiscreteMeasure([[0.0], [1.0]], [0.25, 0.75])
    p = product_power(a, 2)
    assert len(p) == 4
    lookup = {tuple(pt): w for pt, w in zip(p.points, p.weights)}
    assert lookup[(0.0, 0.0)] == pytest.approx(0.0625)
    assert lookup[(1.0, 1.0)] == pytest.approx(0.5625)
    assert lookup[(0.0, 1.0)] == pytest.approx(0.1875)


def test_merge_atoms():
    m = DiscreteMeasure([[0.0], [0.0], [1.0]], [0.25, 0.25, 0.5],
                        normalize=False, prune=False)
    merged = merge_atoms(m)
    assert len(merged) == 2
    assert merged.weights.sum() == pytest.approx(1.0)
