import numpy as np
import pytest

from coevnet import (
    CovariateSpec,
    McrParams,
    ModelMode,
    SimConfig,
    StabilityError,
    ValidationError,
    forecast_one_step,
    simulate,
)
from coevnet.simulate import apply_thresholds

from conftest import make_instance, stable_params


class TestSimulate:
    def test_seeded_determinism(self):
        rng = np.random.default_rng(90)
        params = stable_params(rng, 5, 1)
        cfg = SimConfig(m=5, n=10, params=params, mode=ModelMode(), seed=3)
        a = simulate(cfg)
        b = simulate(cfg)
        assert np.array_equal(a[0].values, b[0].values)
        assert np.array_equal(a[1].values, b[1].values)

    def test_undirected_exactly_symmetric(self):
        net, _, _, _ = make_instance(91, m=6, n=10, p=2)
        assert np.array_equal(net.values, net.values.transpose(0, 2, 1))

    def test_iid_noise_around_intercepts(self):
        # alpha = H = C = A = 0: y are i.i.d. around the dyad means
        rng = np.random.default_rng(92)
        m, n = 6, 400
        q = m * (m - 1) // 2
        gamma = rng.normal(0, 1, q)
        params = McrParams(
            gamma=gamma, alpha1=0.0, H=np.zeros((1, 1)),
            Gamma=np.zeros((1, m)), A=np.zeros((1, 1)), C1=np.zeros((1, 1)),
            sigma2=1.0, Sigma=np.eye(1),
        )
        net, _, _ = simulate(
            SimConfig(m=m, n=n, params=params, mode=ModelMode(), seed=7)
        )
        iu = np.triu_indices(m, 1)
        sample_means = net.values[1:, iu[0], iu[1]].mean(axis=0)
        se = 1.0 / np.sqrt(n)
        assert np.all(np.abs(sample_means - gamma) < 3.5 * se)

    def test_zero_noise_matches_reference_loop(self):
        # ten-line literal recursion, compared exactly
        rng = np.random.default_rng(93)
        m, n, p = 4, 5, 2
        base = stable_params(rng, m, p)
        params = McrParams(
            gamma=base.gamma, alpha1=base.alpha1, H=base.H, Gamma=base.Gamma,
            A=base.A, C1=base.C1, sigma2=1e-300, Sigma=np.zeros((p, p)),
        )
        Y0 = rng.normal(size=(m, m))
        Y0 = np.triu(Y0, 1) + np.triu(Y0, 1).T
        X0 = rng.normal(size=(m, p))
        net, attrs, _ = simulate(SimConfig(
            m=m, n=n, params=params, mode=ModelMode(), seed=1,
            initial_state=(Y0, X0),
        ))
        from coevnet.design import intercept_matrix, theta_matrix

        M = intercept_matrix(params.gamma, CovariateSpec(), m, ModelMode())
        Theta = theta_matrix(params.Gamma, CovariateSpec(), m)
        Y, X = Y0.copy(), X0.copy()
        for t in range(1, n + 1):
            Y_new = M + params.alpha1 * Y + X @ params.H @ X.T
            upper = np.triu(Y_new, 1)
            Y_new = upper + upper.T
            X_new = Theta + X @ params.A.T + (Y @ X) @ params.C1.T
            Y, X = Y_new, X_new
            assert np.max(np.abs(net.values[t] - Y)) == 0.0
            assert np.max(np.abs(attrs.values[t] - X)) < 1e-250

    def test_stability_guard_names_step(self):
        params = McrParams(
            gamma=np.zeros(3), alpha1=1.5, H=np.zeros((0, 0)),
            Gamma=np.zeros((0, 3)), A=np.zeros((0, 0)), C1=np.zeros((0, 0)),
            sigma2=1.0, Sigma=np.zeros((0, 0)),
        )
        with pytest.raises(StabilityError, match="t="):
            simulate(SimConfig(m=3, n=2000, params=params, mode=ModelMode(),
                               seed=0, init_burn_in=0))

    def test_ar1_lag_autocorrelation(self):
        # H = C = 0: each dyad is an AR(1); empirical lag-1 autocorrelation
        # over a long horizon matches alpha
        alpha = 0.6
        params = McrParams(
            gamma=np.zeros(1), alpha1=alpha, H=np.zeros((0, 0)),
            Gamma=np.zeros((0, 2)), A=np.zeros((0, 0)), C1=np.zeros((0, 0)),
            sigma2=1.0, Sigma=np.zeros((0, 0)),
        )
        net, _, _ = simulate(
            SimConfig(m=2, n=5000, params=params, mode=ModelMode(), seed=11)
        )
        y = net.values[:, 0, 1]
        r = np.corrcoef(y[:-1], y[1:])[0, 1]
        assert abs(r - alpha) < 0.02

    def test_ordinal_monotone_transform_invariance(self):
        rng = np.random.default_rng(94)
        m = 6
        mode = ModelMode(network_scale="ordinal")
        params = McrParams(
            gamma=rng.normal(0, 0.4, m * (m - 1) // 2), alpha1=0.3,
            H=np.zeros((0, 0)), Gamma=np.zeros((0, m)), A=np.zeros((0, 0)),
            C1=np.zeros((0, 0)), sigma2=1.0, Sigma=np.zeros((0, 0)),
        )
        cuts = np.array([-0.5, 0.7])
        net, _, extras = simulate(SimConfig(
            m=m, n=6, params=params, mode=mode, seed=12, network_cuts=cuts,
        ))
        Z = extras["Z"]
        # strictly increasing transform of the latent values, with the cuts
        # mapped the same way, leaves the observed categories unchanged
        g = lambda v: np.sinh(v) + 2 * v
        recoded = apply_thresholds(g(Z), g(cuts))
        offdiag = ~np.eye(m, dtype=bool)
        assert np.array_equal(recoded[:, offdiag], net.values[:, offdiag])

    def test_ordinal_needs_cuts(self):
        rng = np.random.default_rng(95)
        params = stable_params(rng, 4, 0, sigma2=1.0)
        with pytest.raises(ValidationError, match="cuts"):
            simulate(SimConfig(m=4, n=3, params=params,
                               mode=ModelMode(network_scale="ordinal"),
                               seed=0))


class TestForecast:
    def test_trivial_ar_step(self):
        params = McrParams(
            gamma=np.zeros(1), alpha1=0.5, H=np.zeros((0, 0)),
            Gamma=np.zeros((0, 2)), A=np.zeros((0, 0)), C1=np.zeros((0, 0)),
            sigma2=1.0, Sigma=np.zeros((0, 0)),
        )
        Y = np.array([[0.0, 2.0], [2.0, 0.0]])
        mean_Y, _, _ = forecast_one_step(params, Y, np.zeros((2, 0)),
                                         ModelMode())
        assert mean_Y[0, 1] == 1.0

    def test_matches_zero_noise_simulation(self):
        net, attrs, params, mode = make_instance(96, m=5, n=3, p=2)
        p = params.p
        params0 = McrParams(
            gamma=params.gamma, alpha1=params.alpha1, H=params.H,
            Gamma=params.Gamma, A=params.A, C1=params.C1,
            sigma2=1e-300, Sigma=np.zeros((p, p)),
        )
        sim_net, sim_attrs, _ = simulate(SimConfig(
            m=5, n=1, params=params0, mode=mode, seed=2,
            initial_state=(net.values[2], attrs.values[2]),
        ))
        mean_Y, mean_X, _ = forecast_one_step(
            params0, net.values[2], attrs.values[2], mode
        )
        iu = np.triu_indices(5, 1)
        assert np.max(np.abs(mean_Y[iu] - sim_net.values[1][iu])) < 1e-12
        assert np.max(np.abs(mean_X - sim_attrs.values[1])) < 1e-12

    def test_forecast_linear_in_parameters(self):
        # the posterior-mean forecast equals the mean of per-draw forecasts
        # for the network line given a fixed state (the map is linear in
        # (gamma, alpha, H))
        net, attrs, params, mode = make_instance(97, m=4, n=3, p=1)
        rng = np.random.default_rng(97)
        draws = []
        for _ in range(5):
            delta = rng.normal(0, 0.05)
            draws.append(McrParams(
                gamma=params.gamma + rng.normal(0, 0.05, params.q_dyad),
                alpha1=params.alpha1 + delta, H=params.H + delta,
                Gamma=params.Gamma, A=params.A, C1=params.C1,
                sigma2=params.sigma2, Sigma=params.Sigma,
            ))
        per_draw = np.mean([
            forecast_one_step(d, net.values[1], attrs.values[1], mode)[0]
            for d in draws
        ], axis=0)
        avg = McrParams(
            gamma=np.mean([d.gamma for d in draws], axis=0),
            alpha1=np.mean([d.alpha1 for d in draws]),
            H=np.mean([d.H for d in draws], axis=0),
            Gamma=params.Gamma, A=params.A, C1=params.C1,
            sigma2=params.sigma2, Sigma=params.Sigma,
        )
        pooled = forecast_one_step(avg, net.values[1], attrs.values[1],
                                   mode)[0]
        iu = np.triu_indices(4, 1)
        assert np.max(np.abs(per_draw[iu] - pooled[iu])) < 1e-12

    def test_ordinal_category_probabilities(self):
        params = McrParams(
            gamma=np.zeros(1), alpha1=0.0, H=np.zeros((0, 0)),
            Gamma=np.zeros((0, 2)), A=np.zeros((0, 0)), C1=np.zeros((0, 0)),
            sigma2=1.0, Sigma=np.zeros((0, 0)),
        )
        mode = ModelMode(network_scale="ordinal")
        Y = np.zeros((2, 2))
        _, _, extras = forecast_one_step(params, Y, np.zeros((2, 0)), mode,
                                         network_cuts=[0.0])
        probs = extras["category_probs"]
        assert probs.shape == (2, 2, 2)
        assert np.allclose(probs.sum(axis=2), 1.0)
        assert np.allclose(probs[0, 1], [0.5, 0.5])
