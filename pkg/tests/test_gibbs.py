import math

import numpy as np
import pytest
from scipy.special import gamma as gamma_fn

from seqot.gibbs import (
    GibbsAssumptionError,
    GibbsParams,
    GibbsSpec,
    LatticeSample,
    MCMCConfig,
    cauchy_convergence_experiment,
    cyclic_symmetrize,
    empirical_map_to_gaussian,
    entropy_mn_crosscheck,
    entropy_mn_estimate,
    equivariance_check,
    exp_moment_probe,
    gaussian_site_spec,
    quartic_spec,
    sample_decoupled_product,
    sample_periodic_gibbs,
)
from seqot.measures import Grid1D, gaussian_grid
from seqot.ot import quantile_transport_1d


def quartic_second_moment_oracle():
    # quadrature oracle for E[x^2] under the density propto exp(-x^4)
    x = np.linspace(-4.0, 4.0, 200_001)
    w = np.exp(-x ** 4)
    return float(np.trapezoid(x ** 2 * w, x) / np.trapezoid(w, x))


class TestGibbsSpec:
    def test_quartic_passes_probes(self):
        spec = quartic_spec(0.1)
        assert spec.coupled
        assert spec.assumption_checklist()

    def test_asymmetric_pair_potential_rejected(self):
        w = np.zeros((2, 2))
        w[0, 1] = 0.3  # W(x,y) = 0.3 y, not symmetric
        with pytest.raises(GibbsAssumptionError) as err:
            GibbsSpec([0, 0, 0, 0, 1], w,
                      GibbsParams(J=1, L=4, N=3, sigma=1, A=3.9, B=1, C=4))
        assert "symmetry" in err.value.name

    def test_growth_envelope_violations_named(self):
        with pytest.raises(GibbsAssumptionError) as err:
            # C far too small for V = x^4
            GibbsSpec([0, 0, 0, 0, 1], np.zeros((1, 1)),
                      GibbsParams(J=0.1, L=4, N=3, sigma=1, A=3.9, B=1, C=0.01))
        assert "site growth" in err.value.name
        with pytest.raises(GibbsAssumptionError) as err:
            # coercivity demands more than the quartic delivers
            GibbsSpec([0, 0, 0, 0, 1], np.zeros((1, 1)),
                      GibbsParams(J=0.1, L=4, N=3, sigma=1, A=50.0, B=1, C=4))
        assert "coercivity" in err.value.name
        with pytest.raises(GibbsAssumptionError) as err:
            # strong coupling against a tiny pair envelope
            w = np.zeros((2, 2))
            w[1, 1] = 5.0
            GibbsSpec([0, 0, 0, 0, 1], w,
                      GibbsParams(J=0.001, L=4, N=3, sigma=1, A=3.9, B=1, C=4))
        assert "pair growth" in err.value.name

    def test_serialization_round_trip(self):
        spec = quartic_spec(0.1)
        spec2 = GibbsSpec.from_dict(spec.to_dict())
        assert np.array_equal(spec.v_coeffs, spec2.v_coeffs)
        assert np.array_equal(spec.w_coeffs, spec2.w_coeffs)
        assert spec.content_hash() == spec2.content_hash()

    def test_zero_coupling_clone(self):
        clone = quartic_spec(0.1).zero_coupling_clone()
        assert not clone.coupled


class TestSampler:
    def test_bitwise_reproducibility(self):
        a = sample_periodic_gibbs(quartic_spec(0.1), 2, 500, seed=99)
        b = sample_periodic_gibbs(quartic_spec(0.1), 2, 500, seed=99)
        assert np.array_equal(a.states, b.states)
        assert np.array_equal(a.acceptance, b.acceptance)

    def test_uncoupled_quartic_moments(self):
        config = MCMCConfig()
        keep = 312  # 312 * 64 chains = 19968 states ~ 1e5 site draws on 5 sites
        s = sample_periodic_gibbs(quartic_spec(0.0), 2, keep * config.num_chains,
                                  seed=7, config=config)
        assert s.tuning_ok
        per_chain = s.states.reshape(keep, config.num_chains, 5)
        chain_mean = per_chain.mean(axis=(0, 2))
        se_mean = chain_mean.std(ddof=1) / math.sqrt(config.num_chains)
        assert abs(s.states.mean()) <= 3 * se_mean
        chain_m2 = (per_chain ** 2).mean(axis=(0, 2))
        se_m2 = chain_m2.std(ddof=1) / math.sqrt(config.num_chains)
        oracle = quartic_second_moment_oracle()
        assert oracle == pytest.approx(gamma_fn(0.75) / gamma_fn(0.25), abs=1e-6)
        assert abs(s.states.mean() ** 2 + s.states.var() - oracle) <= 3 * se_m2 + 1e-3

    def test_coupled_ring_edge_symmetry(self):
        config = MCMCConfig()
        keep = 250
        s = sample_periodic_gibbs(quartic_spec(0.1), 3, keep * config.num_chains,
                                  seed=17, config=config)
        d = 7
        per_chain = s.states.reshape(keep, config.num_chains, d)
        edge_cov = []
        for i in range(d):
            j = (i + 1) % d
            cov_chain = (per_chain[:, :, i] * per_chain[:, :, j]).mean(axis=0)
            edge_cov.append((cov_chain.mean(), cov_chain.std(ddof=1) / math.sqrt(config.num_chains)))
        vals = np.array([v for v, _ in edge_cov])
        ses = np.array([e for _, e in edge_cov])
        # negative lag-1 coupling, statistically equal across all ring edges
        assert np.all(vals < 0)
        assert vals.max() - vals.min() <= 3 * (ses.max() + ses.min()) + 2 * ses.mean()

    def test_tuning_failure_is_flagged(self):
        cfg = MCMCConfig(num_chains=16, burn_in=0, thinning=1, step_init=80.0)
        with pytest.warns(UserWarning):
            s = sample_periodic_gibbs(quartic_spec(0.0), 1, 160, seed=3, config=cfg)
        assert not s.tuning_ok

    def test_save_load_round_trip(self, tmp_path):
        spec = quartic_spec(0.1)
        s = sample_periodic_gibbs(spec, 1, 200, seed=5)
        prefix = str(tmp_path / "lattice")
        s.save(prefix, spec, MCMCConfig())
        loaded = LatticeSample.load(prefix)
        assert np.array_equal(loaded.states, s.states)
        assert loaded.seed == s.seed

    def test_exp_moment_probe_stable_in_n(self):
        spec = quartic_spec(0.1)
        maxima = []
        for n in (2, 3):
            s = sample_periodic_gibbs(spec, n, 2000, seed=31 + n)
            probe = exp_moment_probe(s, lam=0.5, power=3.0)
            assert probe["finite"]
            maxima.append(probe["max"])
        # the exponential moment does not blow up as the ring grows
        assert maxima[1] < 2.0 * maxima[0]


class TestCyclicSymmetrize:
    def test_constant_state_fixed(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 1, 4, seed=1)
        s.states = np.full((2, 3), 0.7)
        sym = cyclic_symmetrize(s)
        assert np.allclose(sym.states, 0.7)
        assert sym.states.shape == (6, 3)

    def test_single_state_expansion(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 1, 4, seed=1)
        s.states = np.array([[1.0, 0.0, 0.0]])
        sym = cyclic_symmetrize(s)
        rows = {tuple(r) for r in sym.states}
        assert rows == {(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)}

    def test_per_coordinate_means_exactly_equal(self):
        s = sample_periodic_gibbs(quartic_spec(0.1), 2, 300, seed=23)
        sym = cyclic_symmetrize(s)
        means = sym.states.mean(axis=0)
        assert np.max(np.abs(means - means[0])) < 1e-15

    def test_random_mode_preserves_count(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 1, 50, seed=2)
        sym = cyclic_symmetrize(s, mode="random", seed=9)
        assert sym.states.shape == s.states.shape


def symmetrized_gaussian_cloud(count, d, seed):
    gt = np.random.default_rng(seed).standard_normal((count, d))
    return np.concatenate([np.roll(gt, k, axis=1) for k in range(d)])


class TestEmpiricalMap:
    def test_identity_instance(self):
        # ring of V(x)=x^2/2 sites with no coupling: the law is the standard
        # Gaussian, so the transport map is the identity
        s = cyclic_symmetrize(sample_periodic_gibbs(gaussian_site_spec(), 1, 2000, seed=3))
        target = symmetrized_gaussian_cloud(2000, 3, 99)
        m = empirical_map_to_gaussian(s.states, target, epsilon=0.1, seed=9, tol=1e-4)
        rms_coord = np.sqrt(np.mean((m.values - m.source_points) ** 2))
        assert rms_coord < 0.1

    def test_uncoupled_matches_quantile_oracle(self):
        s = cyclic_symmetrize(sample_periodic_gibbs(quartic_spec(0.0), 1, 2000, seed=5))
        target = symmetrized_gaussian_cloud(2000, 3, 99)
        m = empirical_map_to_gaussian(s.states, target, epsilon=0.1, seed=11, tol=1e-4)
        x = np.linspace(-3.2, 3.2, 20_001)
        oracle = quantile_transport_1d(Grid1D(x, np.exp(-x ** 4)), gaussian_grid(0, 1))
        for k in range(3):
            rms = np.sqrt(np.mean((m.values[:, k] - oracle(m.source_points[:, k])) ** 2))
            assert rms < 0.1

    def test_single_site_reduces_to_monotone_coupling(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 0, 250, seed=7)
        m = empirical_map_to_gaussian(s.states, 250, seed=13)
        assert m.method == "lp"
        # sorted matching: the map's value multiset is the target cloud and
        # the pairing is monotone wherever source points strictly increase
        # (MCMC rejections duplicate states; ties may be assigned either way)
        target = np.random.default_rng(np.random.SeedSequence((13, 0x9a))).standard_normal((250, 1))
        assert np.allclose(np.sort(m.values[:, 0]), np.sort(target[:, 0]), atol=1e-12)
        order = np.argsort(m.source_points[:, 0], kind="stable")
        src_sorted = m.source_points[order, 0]
        val_sorted = m.values[order, 0]
        strict = np.diff(src_sorted) > 0
        assert np.all(np.diff(val_sorted)[strict] >= -1e-12)
        xs = np.sort(s.states[:, 0])
        ys = np.sort(target[:, 0])
        assert np.mean((m.values[:, 0] - m.source_points[:, 0]) ** 2) == pytest.approx(
            np.mean((xs - ys) ** 2), abs=1e-10)

    def test_out_of_sample_extension_continuity(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 1, 400, seed=9)
        m = empirical_map_to_gaussian(s.states, 400, epsilon=0.2, seed=3, tol=1e-6)
        inside = m.evaluate(m.source_points[:5])
        assert np.allclose(inside, m.values[:5], atol=0.05)


class TestEquivariance:
    def test_symmetrized_sample_is_equivariant(self):
        base = sample_periodic_gibbs(quartic_spec(0.0), 2, 250, seed=21)
        sym = cyclic_symmetrize(base)
        target = symmetrized_gaussian_cloud(250, 5, 33)
        m = empirical_map_to_gaussian(sym.states, target, epsilon=0.1, seed=13, tol=1e-6)
        rep = equivariance_check(m)
        assert rep.max_delta < 1e-12

    def test_broken_instance_flagged(self):
        base = sample_periodic_gibbs(quartic_spec(0.0), 2, 250, seed=21)
        skew = base.states + 0.4 * np.arange(5)[None, :]
        target = symmetrized_gaussian_cloud(250, 5, 33)
        m = empirical_map_to_gaussian(np.tile(skew, (5, 1)), target,
                                      epsilon=0.1, seed=13, tol=1e-6)
        rep = equivariance_check(m)
        assert np.all(rep.delta > 10 * rep.standard_error)
        assert rep.max_delta > 0.5

    def test_single_site_vacuous(self):
        s = sample_periodic_gibbs(quartic_spec(0.0), 0, 200, seed=5)
        m = empirical_map_to_gaussian(s.states, 200, seed=3)
        rep = equivariance_check(m)
        assert rep.max_delta == pytest.approx(0.0, abs=1e-20)


class TestEntropy:
    def test_uncoupled_entropy_exactly_zero(self):
        spec = quartic_spec(0.0)
        s = sample_periodic_gibbs(spec, 2, 1000, seed=11)
        est = entropy_mn_estimate(spec, s, 1)
        assert est.value == 0.0
        assert est.standard_error == 0.0

    def test_weak_coupling_positive_and_crosschecked(self):
        spec = quartic_spec(0.1)
        s = sample_periodic_gibbs(spec, 3, 8000, seed=41)
        direct = entropy_mn_estimate(spec, s, 1)
        assert direct.value >= -3 * direct.standard_error
        assert direct.value > 0
        prod = sample_decoupled_product(spec, 3, 1, 8000, seed=43)
        bridge = entropy_mn_crosscheck(spec, s, 1, prod)
        tol = 3 * (direct.standard_error + bridge.standard_error)
        assert abs(direct.value - bridge.value) <= tol

    def test_m_range_validated(self):
        spec = quartic_spec(0.1)
        s = sample_periodic_gibbs(spec, 2, 100, seed=3)
        with pytest.raises(ValueError):
            entropy_mn_estimate(spec, s, 2)


class TestCauchyExperiment:
    def test_small_uncoupled_instance(self):
        # LP-path smoke test: W = 0 means the true D vanishes and the bound is 0
        rep = cauchy_convergence_experiment(
            quartic_spec(0.0), m_list=[1], n=2, samples=1500, epsilon=0.1,
            seed=907, ot_points=300, replicates=3)
        row = rep.rows[0]
        assert row.entropy == 0.0
        assert row.d_raw > 0  # estimation bias is real and reported
        assert abs(row.d_corrected) <= 3 * row.se_d + 1e-12
        assert rep.passed

    def test_validation(self):
        with pytest.raises(ValueError):
            cauchy_convergence_experiment(quartic_spec(0.0), m_list=[3], n=2,
                                          samples=100, epsilon=0.1, seed=1,
                                          ot_points=10, replicates=1)
        with pytest.raises(ValueError):
            cauchy_convergence_experiment(quartic_spec(0.0), m_list=[1], n=2,
                                          samples=100, epsilon=0.1, seed=1,
                                          ot_points=90, replicates=2)
