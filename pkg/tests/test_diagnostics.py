import numpy as np
import pytest

from coevnet import (
    CovariateSpec,
    InsufficientDataError,
    McrParams,
    ModelMode,
    SimConfig,
    ValidationError,
    effective_sample_size,
    fit_mle,
    forecast_study,
    posterior_quantiles,
    simulate,
    sum_of_squares_decomposition,
)
from coevnet.diagnostics import format_relative

from conftest import make_instance, stable_params


class TestEffectiveSampleSize:
    def test_iid_baseline(self):
        rng = np.random.default_rng(0)
        ess = effective_sample_size(rng.standard_normal(10_000))
        assert 9000 <= ess <= 11_000

    def test_ar1_analytic_value(self):
        rng = np.random.default_rng(1)
        n, rho = 100_000, 0.5
        x = np.empty(n)
        x[0] = rng.standard_normal()
        eps = rng.standard_normal(n) * np.sqrt(1 - rho**2)
        for t in range(1, n):
            x[t] = rho * x[t - 1] + eps[t]
        ess = effective_sample_size(x)
        assert abs(ess - n / 3) < 0.10 * n / 3

    def test_constant_chain_warns_and_returns_n(self):
        with pytest.warns(UserWarning, match="constant"):
            assert effective_sample_size(np.full(500, 2.5)) == 500.0

    def test_never_exceeds_n(self):
        rng = np.random.default_rng(2)
        # antithetic chain has negative lag-1 autocorrelation
        x = rng.standard_normal(2000)
        x[1::2] = -x[::2]
        assert effective_sample_size(x) <= 2000

    def test_affine_invariance(self):
        rng = np.random.default_rng(3)
        x = np.cumsum(rng.standard_normal(5000)) * 0.05 \
            + rng.standard_normal(5000)
        a = effective_sample_size(x)
        b = effective_sample_size(-3.0 * x + 17.0)
        assert abs(a - b) < 1e-8 * a

    def test_minimum_length(self):
        with pytest.raises(InsufficientDataError):
            effective_sample_size(np.arange(50.0))


class TestPosteriorQuantiles:
    def test_single_draw(self):
        out = posterior_quantiles({"a": np.array([3.2])}, (0.1, 0.5, 0.9))
        assert np.allclose(out["a"], 3.2)

    def test_linear_interpolation_convention(self):
        out = posterior_quantiles(np.arange(1.0, 101.0), (0.5,))
        assert out["value"][0] == 50.5

    def test_matches_independent_sort_routine(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(501)
        probs = (0.025, 0.5, 0.975)
        out = posterior_quantiles(x, probs)["value"]
        xs = np.sort(x)
        for q, got in zip(probs, out):
            # independent linear-interpolation quantile
            h = (len(xs) - 1) * q
            lo = int(np.floor(h))
            expect = xs[lo] + (h - lo) * (xs[min(lo + 1, len(xs) - 1)] - xs[lo])
            assert abs(got - expect) < 1e-12

    def test_probs_validated(self):
        with pytest.raises(ValidationError):
            posterior_quantiles(np.arange(10.0), (0.0, 0.5))

    def test_default_probs_match_reporting_convention(self):
        net, attrs, _, mode = make_instance(98, m=4, n=4, p=1)
        from coevnet import run_chain

        s = run_chain(net, attrs, mode=mode, iters=120, burn_in=20, seed=0)
        out = posterior_quantiles(s)
        assert out["alpha1"].shape == (3,)


class TestDecomposition:
    def test_null_terms_near_zero(self):
        # generated with alpha = 0, H = 0: the AR and homophily shares are
        # at the noise floor
        rng = np.random.default_rng(5)
        m, p = 8, 1
        params = McrParams(
            gamma=rng.normal(0, 1.0, m * (m - 1) // 2), alpha1=0.0,
            H=np.zeros((p, p)), Gamma=rng.normal(0, 0.5, (p, m)),
            A=np.array([[0.4]]), C1=np.zeros((p, p)),
            sigma2=0.5, Sigma=np.eye(p),
        )
        net, attrs, _ = simulate(
            SimConfig(m=m, n=100, params=params, mode=ModelMode(), seed=6)
        )
        fit = fit_mle(net, attrs)
        rep = sum_of_squares_decomposition(fit, net, attrs)
        assert rep.network["autoregressive"] < 2.0
        assert rep.network["homophily"] < 2.0

    def test_pure_intercept_noiseless(self):
        rng = np.random.default_rng(7)
        m = 5
        gamma = rng.normal(0, 1, m * (m - 1) // 2)
        params = McrParams(
            gamma=gamma, alpha1=0.0, H=np.zeros((0, 0)),
            Gamma=np.zeros((0, m)), A=np.zeros((0, 0)), C1=np.zeros((0, 0)),
            sigma2=1e-300, Sigma=np.zeros((0, 0)),
        )
        net, attrs, _ = simulate(
            SimConfig(m=m, n=4, params=params, mode=ModelMode(), seed=8)
        )
        rep = sum_of_squares_decomposition(params, net, attrs)
        assert rep.network["intercept"] > 99.9
        assert rep.attributes is None

    def test_percentages_sum_to_hundred(self):
        net, attrs, params, mode = make_instance(99, m=6, n=8, p=2)
        rep = sum_of_squares_decomposition(params, net, attrs, mode)
        assert abs(sum(rep.network.values()) - 100.0) < 0.1
        assert abs(sum(rep.attributes.values()) - 100.0) < 0.1
        for v in list(rep.network.values()) + list(rep.attributes.values()):
            assert v >= 0.0

    def test_accepts_posterior_samples(self):
        net, attrs, _, mode = make_instance(100, m=4, n=5, p=1)
        from coevnet import run_chain

        s = run_chain(net, attrs, mode=mode, iters=150, burn_in=50, seed=1)
        rep = sum_of_squares_decomposition(s, net, attrs, mode)
        assert abs(sum(rep.network.values()) - 100.0) < 0.1


class TestForecastStudy:
    def test_full_model_beats_no_ar_with_strong_alpha(self):
        wins = 0
        for r in range(8):
            rng = np.random.default_rng(200 + r)
            m = 8
            params = stable_params(rng, m, 1, sigma2=0.4)
            params = McrParams(
                gamma=params.gamma, alpha1=0.55, H=params.H,
                Gamma=params.Gamma, A=params.A, C1=params.C1,
                sigma2=0.4, Sigma=params.Sigma,
            )
            net, attrs, _ = simulate(SimConfig(
                m=m, n=16, params=params, mode=ModelMode(), seed=300 + r
            ))
            comp = forecast_study(net, attrs, holdout_times=[12, 14, 16])
            wins += int(np.mean(comp.pess["full"])
                        < np.mean(comp.pess["no_ar"]))
        assert wins >= 7

    def test_null_generator_makes_models_equivalent(self):
        # alpha = 0, C = 0: the four models differ only through noise
        rng = np.random.default_rng(9)
        m = 6
        params = McrParams(
            gamma=rng.normal(0, 0.5, m * (m - 1) // 2), alpha1=0.0,
            H=np.zeros((1, 1)), Gamma=rng.normal(0, 0.4, (1, m)),
            A=np.array([[0.3]]), C1=np.zeros((1, 1)),
            sigma2=0.5, Sigma=np.eye(1),
        )
        diffs = []
        for r in range(10):
            net, attrs, _ = simulate(SimConfig(
                m=m, n=14, params=params, mode=ModelMode(), seed=400 + r
            ))
            comp = forecast_study(net, attrs, holdout_times=[12, 14])
            full = np.mean(comp.pess["full"])
            diffs.append((np.mean(comp.pess["no_ar"]) - full) / full)
        # differences fluctuate around zero instead of favoring either side
        assert abs(np.mean(diffs)) < 0.1

    def test_relative_formatting_convention(self):
        assert format_relative(106.8, 100.0) == "+6.8% worse"
        assert format_relative(98.5, 100.0) == "-1.5% better"

    def test_determinism(self):
        net, attrs, _, mode = make_instance(101, m=5, n=12, p=1)
        a = forecast_study(net, attrs, holdout_times=[10, 12], mode=mode)
        b = forecast_study(net, attrs, holdout_times=[10, 12], mode=mode)
        for name in a.pess:
            assert np.array_equal(a.pess[name], b.pess[name])

    def test_holdout_validation(self):
        net, attrs, _, mode = make_instance(102, m=4, n=5, p=1)
        with pytest.raises(ValidationError):
            forecast_study(net, attrs, holdout_times=[1], mode=mode)
        with pytest.raises(ValidationError):
            forecast_study(net, attrs, holdout_times=[9], mode=mode)

    def test_bayes_estimator_runs(self):
        net, attrs, _, mode = make_instance(103, m=4, n=8, p=1)
        comp = forecast_study(
            net, attrs, holdout_times=[7, 8], mode=mode, estimator="bayes",
            mcmc={"iters": 200, "burn_in": 50, "seed": 1},
        )
        assert np.all(np.concatenate(list(comp.pess.values())) >= 0)
