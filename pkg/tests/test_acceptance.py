"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings. Every tolerance and runtime cap is asserted.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.stats import truncnorm

from coevnet import (
    CovariateSpec,
    McrParams,
    ModelMode,
    PriorSpec,
    SimConfig,
    accumulate_attribute_normal_equations,
    accumulate_network_normal_equations,
    effective_sample_size,
    fit_mle,
    fit_ordinal,
    forecast_study,
    run_chain,
    simulate,
    truncated_normal,
)
from coevnet.cli import main
from coevnet.design import h_vector

from conftest import (
    make_instance,
    stable_params,
    stacked_lstsq_attributes,
    stacked_lstsq_network,
)


@contextmanager
def criterion(num, description, limit_seconds=None):
    start = time.perf_counter()
    try:
        yield
    except Exception:
        elapsed = time.perf_counter() - start
        print(f"FAIL criterion {num}: {description} ({elapsed:.1f} s)")
        raise
    elapsed = time.perf_counter() - start
    print(f"PASS criterion {num}: {description} ({elapsed:.1f} s)")
    if limit_seconds is not None:
        assert elapsed < limit_seconds, (
            f"criterion {num} exceeded its {limit_seconds:.0f} s budget "
            f"({elapsed:.1f} s)"
        )


def test_criterion_1_mle_oracle_equivalence():
    with criterion(1, "MLE oracle equivalence on 50 random instances", 10.0):
        rng = np.random.default_rng(1001)
        for case in range(50):
            m = int(rng.integers(4, 7))
            n = int(rng.integers(3, 6))
            p = int(rng.integers(0, 3))
            directed = bool(rng.integers(0, 2))
            net, attrs, _, mode = make_instance(
                2000 + case, m=m, n=n, p=p, directed=directed
            )
            fit = fit_mle(net, attrs, mode=mode)
            beta_oracle = stacked_lstsq_network(net, attrs, mode)
            beta = np.concatenate([
                fit.params.gamma,
                [fit.params.alpha1]
                + ([fit.params.alpha2] if directed else []),
                h_vector(fit.params.H, mode.homophily_kind),
            ])
            assert np.max(np.abs(beta - beta_oracle)) < 1e-8
            if p:
                B_oracle = stacked_lstsq_attributes(net, attrs, mode)
                B = np.hstack(
                    [fit.params.Gamma, fit.params.A, fit.params.C1]
                    + ([fit.params.C2] if directed else [])
                )
                assert np.max(np.abs(B - B_oracle)) < 1e-8


def test_criterion_2_zero_noise_recovery():
    with criterion(2, "zero-noise exact recovery, both directions", 5.0):
        for directed in (False, True):
            rng = np.random.default_rng(3000 + directed)
            m, p = 5, 2
            base = stable_params(rng, m, p, directed=directed)
            params0 = McrParams(
                gamma=base.gamma, alpha1=base.alpha1, alpha2=base.alpha2,
                H=base.H, Gamma=base.Gamma, A=base.A, C1=base.C1, C2=base.C2,
                sigma2=1e-300, Sigma=np.zeros((p, p)),
            )
            Y0 = rng.normal(size=(m, m))
            if not directed:
                Y0 = np.triu(Y0, 1) + np.triu(Y0, 1).T
            mode = ModelMode(
                direction="directed" if directed else "undirected"
            )
            net, attrs, _ = simulate(SimConfig(
                m=m, n=4, params=params0, mode=mode, seed=3100 + directed,
                initial_state=(Y0, rng.normal(size=(m, p))),
            ))
            fit = fit_mle(net, attrs, mode=mode)
            for got, want in [
                (fit.params.gamma, base.gamma),
                (np.atleast_1d(fit.params.alpha1), np.atleast_1d(base.alpha1)),
                (fit.params.H, base.H),
                (fit.params.Gamma, base.Gamma),
                (fit.params.A, base.A),
                (fit.params.C1, base.C1),
            ]:
                assert np.max(np.abs(np.asarray(got) - np.asarray(want))) \
                    < 1e-8
            if directed:
                assert abs(fit.params.alpha2 - base.alpha2) < 1e-8
                assert np.max(np.abs(fit.params.C2 - base.C2)) < 1e-8


def test_criterion_3_parameter_recovery_at_scale():
    with criterion(3, "m=30, n=200 recovery within 3 SE in >= 95/100", 300.0):
        m, n = 30, 200
        mode = ModelMode()
        H = np.array([[0.12, 0.04], [0.04, -0.08]])
        A = np.array([[0.4, 0.05], [0.0, 0.3]])
        C = np.array([[0.01, 0.0], [0.005, 0.01]])
        hits = {}
        for r in range(100):
            rng = np.random.default_rng(30000 + r)
            sym = rng.normal(size=(m, 1)) + rng.normal(size=(1, m))
            dyad = np.ones((m, m, 2))
            dyad[:, :, 1] = 0.5 * (sym + sym.T)
            node = np.column_stack([np.ones(m), rng.normal(size=m)])
            cov = CovariateSpec(dyad=dyad, node=node)
            params = McrParams(
                gamma=np.array([0.1, 0.15]), alpha1=0.35, H=H,
                Gamma=np.array([[0.1, 0.2], [0.0, -0.1]]), A=A, C1=C,
                sigma2=0.5, Sigma=np.array([[0.4, 0.05], [0.05, 0.3]]),
            )
            net, attrs, _ = simulate(SimConfig(
                m=m, n=n, params=params, mode=mode, covariates=cov,
                seed=40000 + r,
            ))
            fit = fit_mle(net, attrs, cov, mode)
            ne = accumulate_network_normal_equations(net, attrs, cov, mode)
            se_beta = np.sqrt(
                np.diag(np.linalg.inv(ne.Q)) * fit.params.sigma2
            )
            ne_a = accumulate_attribute_normal_equations(net, attrs, cov,
                                                         mode)
            cov_b = np.kron(np.linalg.inv(ne_a.Q), fit.params.Sigma)
            se_B = np.sqrt(np.diag(cov_b)).reshape(2, -1, order="F")
            checks = {"alpha": (fit.params.alpha1 - 0.35, se_beta[2])}
            hv, hfit = h_vector(H, "symmetric"), h_vector(fit.params.H,
                                                          "symmetric")
            for k in range(3):
                checks[f"H{k}"] = (hfit[k] - hv[k], se_beta[3 + k])
            for a in range(2):
                for b in range(2):
                    checks[f"A{a}{b}"] = (fit.params.A[a, b] - A[a, b],
                                          se_B[a, 2 + b])
                    checks[f"C{a}{b}"] = (fit.params.C1[a, b] - C[a, b],
                                          se_B[a, 4 + b])
            for name, (err, se) in checks.items():
                hits[name] = hits.get(name, 0) + int(abs(err) <= 3 * se)
        for name, count in hits.items():
            assert count >= 95, f"{name}: only {count}/100 within 3 SE"


def test_criterion_4_flat_prior_concordance():
    with criterion(4, "flat-prior Gibbs means within 2 MC-SE of MLE", 120.0):
        net, attrs, _, mode = make_instance(555, m=15, n=40, p=2)
        fit = fit_mle(net, attrs)
        s = run_chain(net, attrs, mode=mode,
                      prior=PriorSpec(v_beta=1e6, v_b=1e6),
                      iters=20000, burn_in=2000, seed=79)
        checks = {"alpha1": (s.draws["alpha1"], fit.params.alpha1)}
        for k in range(2):
            for l in range(2):
                checks[f"H[{k},{l}]"] = (s.draws["H"][:, k, l],
                                         fit.params.H[k, l])
                checks[f"A[{k},{l}]"] = (s.draws["A"][:, k, l],
                                         fit.params.A[k, l])
                checks[f"C1[{k},{l}]"] = (s.draws["C1"][:, k, l],
                                          fit.params.C1[k, l])
        for g in (0, 50, 100):
            checks[f"gamma[{g}]"] = (s.draws["gamma"][:, g],
                                     fit.params.gamma[g])
        for name, (d, mle) in checks.items():
            mc_se = d.std(ddof=1) / np.sqrt(effective_sample_size(d))
            assert abs(d.mean() - mle) < 2 * mc_se, name


def test_criterion_5_conditional_oracle_equivalence():
    with criterion(5, "latent/probit conditionals match joint-Gaussian "
                      "conditioning", 30.0):
        # latent attributes: every (i, t) of an m=4, n=3 instance
        from test_latent import _latent_instance, _oracle_conditional
        from coevnet import latent_full_conditional

        net, X, params, mode, cov = _latent_instance(50 + 1, m=4, T=4, p=1)
        for t in range(4):
            for i in range(4):
                mo, co = _oracle_conditional(net, X, params, cov, mode, i, t)
                mi, ci = latent_full_conditional(i, t, net, X, params, cov,
                                                 mode)
                assert np.max(np.abs(mo - mi)) < 1e-8
                assert np.max(np.abs(co - ci)) < 1e-8
        # probit latents: every entry, directed with and without the
        # initial-state regression, plus the undirected variant
        from test_ordinal import (
            _directed_instance,
            _logjoint,
            _oracle_scalar,
            _state_cfg,
        )
        from coevnet import w_full_conditional, z_full_conditional

        for initial_state in (False, True):
            mode_o, cov_o, params_o, Z, W = _directed_instance(70, m=3, T=3,
                                                               p=1)
            prior = PriorSpec(z_prior_mean=0.3, z_prior_var=7.0, v_init=50.0)
            state, cfg = _state_cfg(mode_o, cov_o, params_o, Z, W, prior,
                                    initial_state)
            for t in range(3):
                for i in range(3):
                    for j in range(3):
                        if i == j:
                            continue

                        def f(v, t=t, i=i, j=j):
                            z0 = state.Z[t, i, j]
                            state.Z[t, i, j] = v
                            out = _logjoint(state, cfg)
                            state.Z[t, i, j] = z0
                            return out

                        mo, vo = _oracle_scalar(f)
                        mi, vi = z_full_conditional(i, j, t, state, cfg)
                        assert abs(mo - mi) < 1e-8 and abs(vo - vi) < 1e-8

                    def g(v, t=t, i=i):
                        w0 = state.W[t, i, 0]
                        state.W[t, i, 0] = v
                        out = _logjoint(state, cfg)
                        state.W[t, i, 0] = w0
                        return out

                    mo, vo = _oracle_scalar(g)
                    mi, vi = w_full_conditional(i, 0, t, state, cfg)
                    assert abs(mo - mi) < 1e-8 and abs(vo - vi) < 1e-8


def test_criterion_6_ordinal_calibration():
    with criterion(6, "binary directed probit calibration, 50 replicates",
                   1800.0):
        mode = ModelMode(direction="directed", network_scale="ordinal",
                         attribute_scale="ordinal")
        m, n = 25, 3  # four time points
        truth = [("alpha1", "alpha1", 0.35), ("alpha2", "alpha2", 0.2),
                 ("h", "H", 0.1), ("a", "A", 0.45)]
        hits = {name: 0 for name, _, _ in truth}
        for r in range(50):
            rng = np.random.default_rng(60000 + r)
            s_i = (rng.random(m) < 0.5).astype(float)
            dyad = np.zeros((m, m, 3))
            for i in range(m):
                for j in range(m):
                    dyad[i, j] = (s_i[i], s_i[j], float(s_i[i] == s_i[j]))
            cov = CovariateSpec(dyad=dyad, node=s_i[:, None])
            params = McrParams(
                gamma=np.array([-0.3, -0.1, 0.25]), alpha1=0.35, alpha2=0.2,
                H=np.array([[0.1]]), Gamma=np.array([[0.3]]),
                A=np.array([[0.45]]), C1=np.array([[0.01]]),
                C2=np.array([[0.005]]), sigma2=1.0, Sigma=np.eye(1),
            )
            net, attrs, _ = simulate(SimConfig(
                m=m, n=n, params=params, mode=mode, covariates=cov,
                seed=61000 + r, network_cuts=np.array([0.3]),
                attribute_cuts=[np.array([-1.2, -0.4, 0.4, 1.2])],
            ))
            s = fit_ordinal(net, attrs, covariates=cov, mode=mode,
                            iters=1500, burn_in=500, thin=2,
                            seed=62000 + r, initial_state=True)
            for name, key, tv in truth:
                d = s.draws[key].reshape(s.n_draws, -1)[:, 0]
                lo, hi = np.quantile(d, [0.025, 0.975])
                hits[name] += int(lo <= tv <= hi)
        for name, count in hits.items():
            assert count >= 45, f"{name}: coverage {count}/50 below 90%"


def test_criterion_7_truncated_normal_moments():
    with criterion(7, "truncated-normal moments on three intervals", 5.0):
        rng = np.random.default_rng(7007)
        for a, b in [(0.0, np.inf), (-1.0, 1.0), (2.0, 3.0)]:
            draws = truncated_normal(rng, 0.0, 1.0, a, b, size=100_000)
            dist = truncnorm(a, b)
            se_mean = dist.std() / np.sqrt(draws.size)
            assert abs(draws.mean() - dist.mean()) < 3 * se_mean
            se_var = dist.var() * np.sqrt(2.0 / draws.size) * 2
            assert abs(draws.var() - dist.var()) < 3 * se_var
            assert draws.min() >= a and draws.max() <= b


def test_criterion_8_ess_analytic_check():
    with criterion(8, "ESS of AR(1) rho=0.5 chain within 10% of N/3"):
        rng = np.random.default_rng(8008)
        n, rho = 100_000, 0.5
        x = np.empty(n)
        x[0] = rng.standard_normal()
        eps = rng.standard_normal(n) * np.sqrt(1 - rho**2)
        for t in range(1, n):
            x[t] = rho * x[t - 1] + eps[t]
        ess = effective_sample_size(x)
        assert abs(ess - n / 3) < 0.10 * (n / 3)


def test_criterion_9_forecast_study_direction():
    with criterion(9, "full model beats no-AR submodel in >= 18/20 "
                      "replicates"):
        wins = 0
        for r in range(20):
            rng = np.random.default_rng(70000 + r)
            m = 10
            q = m * (m - 1) // 2
            params = McrParams(
                gamma=rng.normal(0, 0.3, q), alpha1=0.55,
                H=np.array([[0.1]]), Gamma=rng.normal(0, 0.3, (1, m)),
                A=np.array([[0.4]]), C1=np.array([[0.02]]),
                sigma2=0.4, Sigma=0.5 * np.eye(1),
            )
            net, attrs, _ = simulate(SimConfig(
                m=m, n=20, params=params, mode=ModelMode(), seed=71000 + r
            ))
            comp = forecast_study(net, attrs, holdout_times=[16, 18, 20])
            wins += int(np.mean(comp.pess["full"])
                        < np.mean(comp.pess["no_ar"]))
        assert wins >= 18


def test_criterion_10_cli_end_to_end_determinism(tmp_path):
    with criterion(10, "seeded CLI pipelines produce byte-identical outputs"):
        d = tmp_path

        def run(args):
            assert main([str(a) for a in args]) == 0

        def same(path_a, path_b):
            assert open(path_a, "rb").read() == open(path_b, "rb").read(), \
                f"{path_a} differs from {path_b}"

        params = {"p": 1, "directed": False, "gamma": 0.1, "alpha1": 0.35,
                  "H": 0.1, "Gamma": 0.1, "A": 0.4, "C1": 0.01,
                  "sigma2": 0.5, "q_dyad": 28, "q_node": 8}
        (d / "params.json").write_text(json.dumps(params))
        for tag in ("a", "b"):
            run(["simulate", "--params", d / "params.json", "--m", 8,
                 "--n", 12, "--p", 1, "--seed", 5,
                 "--out-prefix", d / f"sim_{tag}"])
        same(d / "sim_a_network.csv", d / "sim_b_network.csv")
        same(d / "sim_a_attributes.csv", d / "sim_b_attributes.csv")
        y, x = d / "sim_a_network.csv", d / "sim_a_attributes.csv"

        for tag in ("a", "b"):
            run(["fit-mle", "--network", y, "--attributes", x,
                 "--out", d / f"mle_{tag}.json"])
        same(d / "mle_a.json", d / "mle_b.json")

        for tag in ("a", "b"):
            run(["fit-bayes", "--network", y, "--attributes", x,
                 "--iters", 250, "--burn-in", 50, "--seed", 3,
                 "--out", d / f"g_{tag}.ndjson"])
        same(d / "g_a.ndjson", d / "g_b.ndjson")

        for tag in ("a", "b"):
            run(["diagnose", "--samples", d / "g_a.ndjson", "--network", y,
                 "--attributes", x, "--out", d / f"diag_{tag}.json"])
        same(d / "diag_a.json", d / "diag_b.json")

        for tag in ("a", "b"):
            run(["forecast-study", "--network", y, "--attributes", x,
                 "--holdouts", "10,12", "--out", d / f"fc_{tag}.json"])
        same(d / "fc_a.json", d / "fc_b.json")

        for tag in ("a", "b"):
            run(["fit-bayes", "--network", y, "--latent-dim", 1,
                 "--iters", 120, "--burn-in", 40, "--seed", 2,
                 "--out", d / f"lat_{tag}.ndjson",
                 "--export-latent", d / f"traj_{tag}.csv"])
        same(d / "lat_a.ndjson", d / "lat_b.ndjson")
        same(d / "traj_a.csv", d / "traj_b.csv")

        # ordinal variant: binarize the simulated network
        import csv

        rows = list(csv.reader(open(y)))
        with open(d / "yb.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(rows[0])
            for t, i, j, v in rows[1:]:
                w.writerow([t, i, j, int(float(v) > 0.3)])
        for tag in ("a", "b"):
            run(["fit-bayes", "--network", d / "yb.csv", "--attributes", x,
                 "--network-scale", "ordinal", "--iters", 150,
                 "--burn-in", 50, "--seed", 6,
                 "--out", d / f"ord_{tag}.ndjson"])
        same(d / "ord_a.ndjson", d / "ord_b.ndjson")
