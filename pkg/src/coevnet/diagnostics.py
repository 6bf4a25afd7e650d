"""MCMC diagnostics, variance decompositions, and forecast comparisons."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    InsufficientDataError,
    McrParams,
    ModelMode,
    NetworkSeries,
    ValidationError,
    dyad_pairs,
)
from . import design as dz
from .mle import MleFit, fit_mle
from .simulate import forecast_one_step


def effective_sample_size(chain):
    """ESS = N / (1 + 2 sum rho_k) with initial-positive-sequence truncation.

    Autocorrelations are summed in consecutive pairs and truncated at the
    first non-positive pair sum. A constant chain is reported as N with a
    degeneracy warning; the estimate is clipped to N.
    """
    chain = np.asarray(chain, dtype=float).ravel()
    n = chain.size
    if n < 100:
        raise InsufficientDataError(
            f"effective sample size needs >= 100 draws, got {n}"
        )
    x = chain - chain.mean()
    var0 = float(x @ x) / n
    if var0 == 0.0:
        warnings.warn(
            "constant chain: effective sample size is degenerate, reporting N"
        )
        return float(n)
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n].real / n
    rho = acov / var0
    tau = 0.0
    j = 0
    while 2 * j + 1 < n:
        gamma = rho[2 * j] + rho[2 * j + 1]
        if gamma <= 0.0:
            break
        tau += gamma
        j += 1
    tau = max(2.0 * tau - 1.0, 1e-12)
    return float(min(n, n / tau))


def average_ess(chains):
    """Mean ESS across a dict of scalar chains (skips constant chains' warnings)."""
    vals = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for arr in chains.values():
            vals.append(effective_sample_size(arr))
    return float(np.mean(vals)) if vals else np.nan


def posterior_quantiles(samples, probs=(0.025, 0.5, 0.975)):
    """Empirical quantiles per scalar parameter (linear interpolation).

    ``samples`` may be a PosteriorSamples, a dict of named chains, or a
    single array. Returns {name: array of quantiles}.
    """
    probs = np.asarray(probs, dtype=float).ravel()
    if probs.size == 0 or np.any((probs <= 0) | (probs >= 1)):
        raise ValidationError("quantile probabilities must lie strictly in (0, 1)")
    if hasattr(samples, "scalar_chains"):
        chains = samples.scalar_chains()
    elif isinstance(samples, dict):
        chains = samples
    else:
        chains = {"value": np.asarray(samples)}
    out = {}
    for name, arr in chains.items():
        arr = np.asarray(arr, dtype=float).ravel()
        if arr.size == 0:
            raise ValidationError(f"chain {name!r} is empty")
        out[name] = np.quantile(arr, probs)
    return out


@dataclass
class DecompositionReport:
    """Relative sum-of-squares contributions, in percent, averaged over time.

    Network terms: intercept, autoregressive, homophily, error.
    Attribute terms: intercept, autoregressive, contagion, error.
    Each four-term block sums to 100 (up to rounding).
    """

    network: dict
    attributes: dict | None
    per_time_network: np.ndarray = field(repr=False, default=None)
    per_time_attributes: np.ndarray = field(repr=False, default=None)


def _resolve_params(fit_or_params, attributes, mode):
    """Accept McrParams, MleFit, or PosteriorSamples; return (params, attrs)."""
    if isinstance(fit_or_params, McrParams):
        return fit_or_params, attributes
    if isinstance(fit_or_params, MleFit):
        return fit_or_params.params, attributes
    if hasattr(fit_or_params, "mean_params"):
        params = fit_or_params.mean_params()
        if attributes is None and fit_or_params.latent is not None:
            attributes = AttributeSeries(fit_or_params.latent.mean(axis=0))
        return params, attributes
    raise ValidationError(
        f"cannot extract parameters from {type(fit_or_params).__name__}"
    )


def sum_of_squares_decomposition(fit_or_params, network, attributes=None,
                                 mode=None, covariates=None):
    """Relative contribution of each model term, averaged across time points.

    For every transition the squared magnitudes of the intercept,
    autoregressive, and homophily/contagion components of the fitted mean
    and of the residual are summed over dyads (nodes); the four sums are
    normalized to percentages per time point and averaged over time.
    """
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    params, attributes = _resolve_params(fit_or_params, attributes, mode)
    if attributes is None:
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    m = network.m
    p = params.p
    ii, jj = dyad_pairs(m, mode.directed)
    M = dz.intercept_matrix(params.gamma, covariates, m, mode)
    Theta = dz.theta_matrix(params.Gamma, covariates, m)
    n = network.n_transitions
    pct_net = np.empty((n, 4))
    pct_att = np.empty((n, 4)) if p else None
    for t in range(1, n + 1):
        Y_lag = network.values[t - 1]
        X_lag = attributes.values[t - 1]
        ar = params.alpha1 * Y_lag
        if mode.directed:
            ar = ar + params.alpha2 * Y_lag.T
        hom = X_lag @ params.H @ X_lag.T if p else np.zeros((m, m))
        resid = network.values[t] - (M + ar + hom)
        ss = np.array([
            float(M[ii, jj] @ M[ii, jj]),
            float(ar[ii, jj] @ ar[ii, jj]),
            float(hom[ii, jj] @ hom[ii, jj]),
            float(resid[ii, jj] @ resid[ii, jj]),
        ])
        total = ss.sum()
        pct_net[t - 1] = 100.0 * ss / total if total > 0 else np.zeros(4)
        if p:
            ar_x = X_lag @ params.A.T
            cont = (Y_lag @ X_lag) @ params.C1.T
            if mode.directed:
                cont = cont + (Y_lag.T @ X_lag) @ params.C2.T
            resid_x = attributes.values[t] - (Theta + ar_x + cont)
            ss = np.array([
                float(np.sum(Theta * Theta)),
                float(np.sum(ar_x * ar_x)),
                float(np.sum(cont * cont)),
                float(np.sum(resid_x * resid_x)),
            ])
            total = ss.sum()
            pct_att[t - 1] = 100.0 * ss / total if total > 0 else np.zeros(4)
    names_net = ("intercept", "autoregressive", "homophily", "error")
    names_att = ("intercept", "autoregressive", "contagion", "error")
    network_pct = dict(zip(names_net, pct_net.mean(axis=0)))
    attr_pct = dict(zip(names_att, pct_att.mean(axis=0))) if p else None
    return DecompositionReport(
        network=network_pct, attributes=attr_pct,
        per_time_network=pct_net, per_time_attributes=pct_att,
    )


NESTED_MODELS = ("full", "no_contagion", "no_ar", "neither")
_MODEL_FLAGS = {
    "full": (True, True),
    "no_contagion": (True, False),
    "no_ar": (False, True),
    "neither": (False, False),
}


@dataclass
class ForecastComparison:
    """One-step-ahead prediction error sums of squares for the nested models.

    ``pess[model]`` holds one value per holdout time; ``relative_pct`` gives
    each submodel's average PESS relative to the full model in percent
    (positive = worse).
    """

    holdout_times: list
    pess: dict
    relative_pct: dict
    summary: dict

    def formatted(self, model):
        return format_relative(
            float(np.mean(self.pess[model])), float(np.mean(self.pess["full"]))
        )


def format_relative(value, reference):
    """Relative-percentage phrasing, e.g. (106.8, 100) -> '+6.8% worse'."""
    pct = 100.0 * (value - reference) / reference
    return f"{pct:+.1f}% {'worse' if pct >= 0 else 'better'}"


def _slice_series(network, attributes, upto):
    net = NetworkSeries(
        network.values[:upto], directed=network.directed,
        missing=None if network.missing is None else network.missing[:upto],
    )
    att = AttributeSeries(
        attributes.values[:upto],
        missing=None if attributes.missing is None else attributes.missing[:upto],
    )
    return net, att


def forecast_study(network, attributes=None, holdout_times=(), mode=None,
                   covariates=None, estimator="mle", prior=None,
                   mcmc=None):
    """Rolling one-step-ahead comparison of the four nested models.

    For each holdout time t* each model (with/without network
    autocorrelation, with/without contagion) is fit on slices 0..t*-1 and
    scored by the squared error of its mean forecast of slice t*.
    ``estimator`` is "mle" (default) or "bayes" (posterior-mean parameters;
    ``mcmc`` supplies iters/burn_in/thin/seed).

    With fully observed attributes the two regression lines are estimated
    independently and the contagion block never enters the one-step network
    mean, so the +-contagion submodels score identically here; the contagion
    channel matters for forecasting only through latent-attribute variants.
    """
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    if attributes is None:
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    holdout_times = sorted(int(t) for t in holdout_times)
    if not holdout_times:
        raise ValidationError("forecast study needs at least one holdout time")
    bad = [t for t in holdout_times if t < 2 or t > network.n_transitions]
    if bad:
        raise ValidationError(
            f"holdout times {bad} outside the usable range [2, "
            f"{network.n_transitions}] (need two training slices and an "
            "observed target)"
        )
    ii, jj = dyad_pairs(network.m, mode.directed)
    pess = {name: np.empty(len(holdout_times)) for name in NESTED_MODELS}
    for h, t_star in enumerate(holdout_times):
        net_tr, att_tr = _slice_series(network, attributes, t_star)
        for name in NESTED_MODELS:
            include_ar, include_contagion = _MODEL_FLAGS[name]
            params = _fit_submodel(
                net_tr, att_tr, covariates, mode, include_ar,
                include_contagion, estimator, prior, mcmc, h,
            )
            mean_Y, _, _ = forecast_one_step(
                params, network.values[t_star - 1],
                attributes.values[t_star - 1], mode, covariates,
            )
            r = network.values[t_star, ii, jj] - mean_Y[ii, jj]
            pess[name][h] = float(r @ r)
    rel = {
        name: float(
            100.0 * (np.mean(pess[name]) - np.mean(pess["full"]))
            / np.mean(pess["full"])
        )
        for name in NESTED_MODELS
    }
    summary = {
        name: format_relative(float(np.mean(pess[name])),
                              float(np.mean(pess["full"])))
        for name in NESTED_MODELS
    }
    return ForecastComparison(
        holdout_times=holdout_times, pess=pess, relative_pct=rel,
        summary=summary,
    )


def _fit_submodel(network, attributes, covariates, mode, include_ar,
                  include_contagion, estimator, prior, mcmc, fold):
    if estimator == "mle":
        fit = fit_mle(
            network, attributes, covariates, mode,
            include_ar=include_ar, include_contagion=include_contagion,
        )
        return fit.params
    if estimator != "bayes":
        raise ValidationError(f"unknown estimator {estimator!r}")
    from .gibbs import run_chain

    mcmc = dict(mcmc or {})
    mcmc.setdefault("iters", 1500)
    mcmc.setdefault("burn_in", 500)
    mcmc.setdefault("seed", 0)
    # distinct substream per fold, deterministic overall
    mcmc["seed"] = int(mcmc["seed"]) * 1000003 + fold
    samples = run_chain(
        network, attributes, covariates=covariates, mode=mode, prior=prior,
        include_ar=include_ar, include_contagion=include_contagion, **mcmc,
    )
    return samples.mean_params()
