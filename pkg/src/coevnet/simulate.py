"""Forward simulation of the coevolution model and one-step forecasts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .data import (
    AttributeSeries,
    CovariateSpec,
    McrParams,
    ModelMode,
    NetworkSeries,
    StabilityError,
    ValidationError,
    dyad_pairs,
)
from .design import (
    attribute_mean_matrix,
    intercept_matrix,
    network_mean_matrix,
    theta_matrix,
)

STABILITY_CAP = 1e8


def apply_thresholds(values, cuts):
    """Map latent values to ordinal categories 0..q-1 via increasing cuts.

    ``cuts`` are the q - 1 interior cut points; category c is the interval
    (cuts[c-1], cuts[c]].
    """
    cuts = np.asarray(cuts, dtype=float).ravel()
    if cuts.size and np.any(np.diff(cuts) <= 0):
        raise ValidationError("threshold cuts must be strictly increasing")
    return np.searchsorted(cuts, values, side="left").astype(float)


@dataclass
class SimConfig:
    """Configuration for :func:`simulate`.

    ``initial_state`` is either None (draw i.i.d. noise around the
    intercepts, then run ``init_burn_in`` discarded steps toward
    stationarity) or an explicit ``(Y0, X0)`` pair. Ordinal scales apply
    step functions with the given interior cuts to the latent values.
    """

    m: int
    n: int
    params: McrParams
    mode: ModelMode = field(default_factory=ModelMode)
    covariates: CovariateSpec = field(default_factory=CovariateSpec)
    initial_state: tuple | None = None
    init_burn_in: int = 50
    seed: int = 0
    network_cuts: np.ndarray | None = None
    attribute_cuts: list | None = None


def _psd_sqrt(S):
    """Square root of a PSD matrix; tolerates exactly singular inputs
    (zero-noise simulations)."""
    S = np.asarray(S, dtype=float)
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(S)
        if np.min(w) < -1e-10 * max(1.0, np.max(np.abs(w))):
            raise ValidationError("Sigma must be positive semidefinite")
        return V * np.sqrt(np.maximum(w, 0.0))


def _noise_network(rng, m, sigma, directed):
    e = rng.standard_normal((m, m)) * sigma
    if not directed:
        e = np.triu(e, k=1)
        e = e + e.T
    np.fill_diagonal(e, 0.0)
    return e


def _check_stability(M, t):
    if np.max(np.abs(M)) > STABILITY_CAP:
        raise StabilityError(
            f"simulated values exceeded {STABILITY_CAP:g} at step t={t}; "
            "the parameter configuration is explosive"
        )


def simulate(config):
    """Simulate the coupled network/attribute recursion.

    Returns ``(NetworkSeries, AttributeSeries, extras)``. For ordinal
    scales the series hold the observed categories and ``extras`` carries
    the latent ``"Z"`` / ``"W"`` tensors; the latent-attribute mode returns
    the latent trajectories as the attribute series.
    """
    params, mode, cov = config.params, config.mode, config.covariates
    params.validate_for_mode(mode)
    m, n, p = config.m, config.n, params.p
    rng = np.random.default_rng(config.seed)
    chol_Sigma = _psd_sqrt(params.Sigma) if p else np.zeros((0, 0))
    sigma = np.sqrt(params.sigma2)
    M = intercept_matrix(params.gamma, cov, m, mode)
    Theta = theta_matrix(params.Gamma, cov, m)

    def attr_noise():
        return rng.standard_normal((m, p)) @ chol_Sigma.T if p else np.zeros((m, 0))

    if config.initial_state is not None:
        Y = np.array(config.initial_state[0], dtype=float, copy=True)
        X = np.array(config.initial_state[1], dtype=float, copy=True).reshape(m, p)
        if Y.shape != (m, m):
            raise ValidationError(
                f"initial network must be ({m}, {m}), got {Y.shape}"
            )
        np.fill_diagonal(Y, 0.0)
        burn = 0
    else:
        Y = M + _noise_network(rng, m, sigma, mode.directed)
        X = Theta + attr_noise()
        burn = config.init_burn_in

    def step(Y, X, t):
        mean_Y = network_mean_matrix(params, Y, X, mode, cov, M=M)
        mean_X = attribute_mean_matrix(params, Y, X, mode, cov, Theta=Theta)
        Y_new = mean_Y + _noise_network(rng, m, sigma, mode.directed)
        if not mode.directed:
            # generate each dyad once and mirror for exact symmetry
            upper = np.triu(Y_new, k=1)
            Y_new = upper + upper.T
        np.fill_diagonal(Y_new, 0.0)
        X_new = mean_X + attr_noise()
        _check_stability(Y_new, t)
        if p:
            _check_stability(X_new, t)
        return Y_new, X_new

    for b in range(burn):
        Y, X = step(Y, X, -burn + b)

    Z = np.empty((n + 1, m, m))
    W = np.empty((n + 1, m, p))
    Z[0], W[0] = Y, X
    for t in range(1, n + 1):
        Y, X = step(Y, X, t)
        Z[t], W[t] = Y, X

    extras = {}
    if mode.ordinal_network:
        if config.network_cuts is None:
            raise ValidationError("ordinal network simulation needs network_cuts")
        extras["Z"] = Z
        Y_obs = apply_thresholds(Z, config.network_cuts)
        diag = np.arange(m)
        Y_obs[:, diag, diag] = 0.0
    else:
        Y_obs = Z
    if mode.ordinal_attributes:
        if config.attribute_cuts is None or len(config.attribute_cuts) != p:
            raise ValidationError(
                "ordinal attribute simulation needs attribute_cuts, one cut "
                "vector per attribute"
            )
        extras["W"] = W
        X_obs = np.stack(
            [apply_thresholds(W[:, :, k], config.attribute_cuts[k]) for k in range(p)],
            axis=2,
        )
    else:
        X_obs = W
    network = NetworkSeries(Y_obs, directed=mode.directed)
    attributes = AttributeSeries(X_obs)
    return network, attributes, extras


def forecast_one_step(params, Y_t, X_t, mode, covariates=None,
                      network_cuts=None):
    """Conditional means of (Y_{t+1}, X_{t+1}) given the time-t state.

    For an ordinal network the returned matrix is the latent-scale mean and
    ``category_probs`` in the extras dict gives P(category c) through the
    supplied cuts.
    """
    covariates = covariates or CovariateSpec()
    Y_t = np.asarray(Y_t, dtype=float)
    X_t = np.asarray(X_t, dtype=float).reshape(Y_t.shape[0], params.p)
    if Y_t.ndim != 2 or Y_t.shape[0] != Y_t.shape[1]:
        raise ValidationError(f"state network must be square, got {Y_t.shape}")
    mean_Y = network_mean_matrix(params, Y_t, X_t, mode, covariates)
    mean_X = attribute_mean_matrix(params, Y_t, X_t, mode, covariates)
    extras = {}
    if mode.ordinal_network and network_cuts is not None:
        cuts = np.asarray(network_cuts, dtype=float).ravel()
        sigma = np.sqrt(params.sigma2)
        upper = ndtr((cuts[None, None, :] - mean_Y[:, :, None]) / sigma)
        cdf = np.concatenate(
            [np.zeros(mean_Y.shape + (1,)), upper, np.ones(mean_Y.shape + (1,))],
            axis=2,
        )
        extras["category_probs"] = np.diff(cdf, axis=2)
    return mean_Y, mean_X, extras


def gaussian_loglik(network, attributes, params, mode, covariates=None):
    """Log-likelihood of the Gaussian model, conditioning on the t = 0 slice."""
    covariates = covariates or CovariateSpec()
    m = network.m
    ii, jj = dyad_pairs(m, mode.directed)
    M = intercept_matrix(params.gamma, covariates, m, mode)
    Theta = theta_matrix(params.Gamma, covariates, m)
    p = params.p
    total = 0.0
    if p:
        Sigma_inv = np.linalg.inv(params.Sigma)
        _, logdet = np.linalg.slogdet(params.Sigma)
    for t in range(1, network.n_plus_1):
        mean_Y = network_mean_matrix(
            params, network.values[t - 1], attributes.values[t - 1], mode,
            covariates, M=M,
        )
        r = network.values[t, ii, jj] - mean_Y[ii, jj]
        total += -0.5 * (
            r.size * np.log(2 * np.pi * params.sigma2)
            + float(r @ r) / params.sigma2
        )
        if p:
            mean_X = attribute_mean_matrix(
                params, network.values[t - 1], attributes.values[t - 1], mode,
                covariates, Theta=Theta,
            )
            E = attributes.values[t] - mean_X
            total += -0.5 * (
                m * (p * np.log(2 * np.pi) + logdet)
                + float(np.sum((E @ Sigma_inv) * E))
            )
    return total
