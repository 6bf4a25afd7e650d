"""Bayesian inference for the fully observed Gaussian model.

Semiconjugate priors

    beta ~ N(0, V_beta),  vec(B) ~ N(0, V_b),
    1/sigma^2 ~ gamma(nu0/2, nu0 sigma0^2 / 2),  Sigma^{-1} ~ Wishart(S0^{-1}, eta0)

give normal / gamma / Wishart full conditionals, cycled in the fixed order
beta -> B -> sigma^2 -> Sigma. The regression conditionals are

    beta | .  ~ N(P^{-1} l / sigma^2, P^{-1}),   P = V_beta^{-1} + Q / sigma^2
    vec(B) | . ~ N(P^{-1} vec(Sigma^{-1} L), P^{-1}),
                                            P = V_b^{-1} + Q (x) Sigma^{-1}

with vec() column-major, so the flat-prior limits are exactly the MLEs
Q^{-1} l and L Q^{-1}. With fully observed data the sufficient statistics
(Q, l, L, sum y^2, sum X'X) are fixed, so each sweep costs only the draws.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    McrParams,
    ModelMode,
    ValidationError,
    dyad_pairs,
)
from . import design as dz
from . import mle as _mle
from .distributions import (
    sample_inv_gamma_variance,
    sample_mvn_precision,
    sample_wishart,
    spawn_rngs,
)


@dataclass(frozen=True)
class PriorSpec:
    """Hyperparameters for the Gibbs samplers.

    ``v_beta`` / ``v_b`` / ``v_init`` may be scalars (isotropic) or full PD
    matrices. ``s0`` defaults to the identity and ``eta0`` to p + 2.
    ``z_prior_mean`` / ``z_prior_var`` anchor latent relation values in the
    ordinal sampler; ``cut_prior_*`` are the normal prior on interior
    threshold cuts.
    """

    v_beta: float | np.ndarray = 100.0
    v_b: float | np.ndarray = 100.0
    nu0: float = 1.0
    sigma0_sq: float = 1.0
    s0: np.ndarray | None = None
    eta0: float | None = None
    z_prior_mean: float = 0.0
    z_prior_var: float = 100.0
    cut_prior_mean: float = 0.0
    cut_prior_var: float = 100.0
    v_init: float = 100.0

    def __post_init__(self):
        problems = []
        for name in ("nu0", "sigma0_sq", "z_prior_var", "cut_prior_var"):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive")
        if problems:
            raise ValidationError(problems)

    def v_beta_inv(self, dim):
        return _prior_precision(self.v_beta, dim, "v_beta")

    def v_b_inv(self, dim):
        return _prior_precision(self.v_b, dim, "v_b")

    def v_init_inv(self, dim):
        return _prior_precision(self.v_init, dim, "v_init")

    def s0_matrix(self, p):
        return np.eye(p) if self.s0 is None else np.asarray(self.s0, float)

    def eta0_value(self, p):
        return float(p + 2) if self.eta0 is None else float(self.eta0)


def _prior_precision(v, dim, name):
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        if v <= 0:
            raise ValidationError(f"{name} must be positive")
        return np.eye(dim) / float(v)
    if v.shape != (dim, dim):
        raise ValidationError(f"{name} must be scalar or ({dim}, {dim}), got {v.shape}")
    return np.linalg.inv(v)


@dataclass
class GibbsState:
    """Current chain position: parameters, iteration counter, generator."""

    params: McrParams
    iteration: int
    rng: np.random.Generator


@dataclass
class PosteriorSamples:
    """Thinned draws stacked per parameter block.

    ``draws`` maps McrParams field names to arrays with the draw index
    leading, e.g. ``draws["H"]`` has shape (S, p, p). ``latent`` (latent
    mode) stacks attribute trajectories as (S, n+1, m, p); ``extras``
    carries mode-specific series (thresholds, initial-state parameters).
    All moves are exact Gibbs updates, recorded in ``move_types``.
    """

    draws: dict
    burn_in: int
    thin: int
    seed: int
    mode: ModelMode
    chains: int = 1
    chain_id: np.ndarray | None = None
    latent: np.ndarray | None = None
    extras: dict = field(default_factory=dict)
    move_types: dict = field(default_factory=dict)

    @property
    def n_draws(self):
        return self.draws["alpha1"].shape[0]

    def params_at(self, s):
        d = self.draws
        return McrParams(
            gamma=d["gamma"][s],
            alpha1=d["alpha1"][s],
            alpha2=d["alpha2"][s] if "alpha2" in d else None,
            H=d["H"][s],
            Gamma=d["Gamma"][s],
            A=d["A"][s],
            C1=d["C1"][s],
            C2=d["C2"][s] if "C2" in d else None,
            sigma2=d["sigma2"][s],
            Sigma=d["Sigma"][s],
        )

    def mean_params(self):
        d = self.draws
        H = d["H"].mean(axis=0)
        if not self.mode.directed:
            H = 0.5 * (H + H.T)
        if self.mode.latent:
            H = np.diag(np.diag(H))
        return McrParams(
            gamma=d["gamma"].mean(axis=0),
            alpha1=float(d["alpha1"].mean()),
            alpha2=float(d["alpha2"].mean()) if "alpha2" in d else None,
            H=H,
            Gamma=d["Gamma"].mean(axis=0),
            A=d["A"].mean(axis=0),
            C1=d["C1"].mean(axis=0),
            C2=d["C2"].mean(axis=0) if "C2" in d else None,
            sigma2=float(d["sigma2"].mean()),
            Sigma=np.eye(d["H"].shape[1]) if self.mode.Sigma_fixed
            else d["Sigma"].mean(axis=0),
        )

    def scalar_chains(self):
        """Flatten every scalar parameter into its own named chain."""
        out = {}
        for name, arr in self.draws.items():
            if arr.ndim == 1:
                out[name] = arr
            elif arr.ndim == 2:
                for i in range(arr.shape[1]):
                    out[f"{name}[{i + 1}]"] = arr[:, i]
            else:
                for r in range(arr.shape[1]):
                    for c in range(arr.shape[2]):
                        out[f"{name}[{r + 1},{c + 1}]"] = arr[:, r, c]
        return out


def _rss_network(ne, beta):
    return max(float(ne.response_ss - 2.0 * beta @ ne.rhs + beta @ ne.Q @ beta), 0.0)


def _rss_attributes(ne, B):
    rss = ne.response_ss - ne.rhs @ B.T - B @ ne.rhs.T + B @ ne.Q @ B.T
    rss = 0.5 * (rss + rss.T)
    w, V = np.linalg.eigh(rss)
    return (V * np.maximum(w, 0.0)) @ V.T


def draw_beta(Q, l, sigma2, v_beta_inv, rng):
    """One draw of beta given the accumulated (Q, l) and current sigma^2."""
    prec = v_beta_inv + Q / sigma2
    draw, _ = sample_mvn_precision(prec, l / sigma2, rng)
    return draw


def beta_conditional(Q, l, sigma2, v_beta_inv):
    """Mean and covariance of the beta full conditional (for tests/inspection)."""
    prec = v_beta_inv + Q / sigma2
    cov = np.linalg.inv(prec)
    return cov @ (l / sigma2), cov


def draw_B(Q, L, Sigma_inv, v_b_inv, rng):
    """One draw of the attribute coefficient matrix B (p, k)."""
    p = L.shape[0]
    prec = np.kron(Q, Sigma_inv) + v_b_inv
    lin = (Sigma_inv @ L).flatten(order="F")
    draw, _ = sample_mvn_precision(prec, lin, rng)
    return draw.reshape(p, -1, order="F")


def b_conditional(Q, L, Sigma_inv, v_b_inv):
    """Mean and covariance of the vec(B) full conditional (column-major)."""
    prec = np.kron(Q, Sigma_inv) + v_b_inv
    cov = np.linalg.inv(prec)
    return cov @ (Sigma_inv @ L).flatten(order="F"), cov


def draw_sigma2(rss, count, prior, rng):
    return sample_inv_gamma_variance(rss, count, prior.nu0, prior.sigma0_sq, rng)


def draw_Sigma(rss_matrix, count, prior, rng):
    p = rss_matrix.shape[0]
    scale = np.linalg.inv(prior.s0_matrix(p) + rss_matrix)
    scale = 0.5 * (scale + scale.T)
    prec = sample_wishart(prior.eta0_value(p) + count, scale, rng)
    Sigma = np.linalg.inv(prec)
    return 0.5 * (Sigma + Sigma.T)


def _network_ne(network, attributes, covariates, mode):
    if network.n_transitions < 1:
        q = covariates.q_dyad(network.m, mode.directed)
        dim = q + 1 + int(mode.directed) + dz.homophily_dim(
            attributes.p, mode.homophily_kind
        )
        return _mle.NormalEquations(
            Q=np.zeros((dim, dim)), rhs=np.zeros(dim), count=0, response_ss=0.0
        )
    return _mle.accumulate_network_normal_equations(
        network, attributes, covariates, mode
    )


def step_beta(state, network, attributes, covariates=None, mode=None,
              prior=None):
    """Gibbs update of beta at the current state; returns the new vector.

    With no transitions the conditional reduces to the prior N(0, V_beta).
    """
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    ne = _network_ne(network, attributes, covariates, mode)
    v_inv = prior.v_beta_inv(ne.Q.shape[0])
    return draw_beta(ne.Q, ne.rhs, state.params.sigma2, v_inv, state.rng)


def step_b(state, network, attributes, covariates=None, mode=None, prior=None):
    """Gibbs update of B at the current state; returns the new (p, k) matrix."""
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    ne = _mle.accumulate_attribute_normal_equations(
        network, attributes, covariates, mode
    )
    p = attributes.p
    Sigma_inv = np.linalg.inv(state.params.Sigma)
    v_inv = prior.v_b_inv(p * ne.Q.shape[0])
    return draw_B(ne.Q, ne.rhs, Sigma_inv, v_inv, state.rng)


def step_sigma2(state, network, attributes, covariates=None, mode=None,
                prior=None):
    """Gibbs update of sigma^2 from the current residual sum of squares."""
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    rss, count = network_rss(network, attributes, state.params, mode, covariates)
    return draw_sigma2(rss, count, prior, state.rng)


def step_Sigma(state, network, attributes, covariates=None, mode=None,
               prior=None):
    """Gibbs update of Sigma from the current residual cross-products."""
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    rss, count = attribute_rss(network, attributes, state.params, mode, covariates)
    return draw_Sigma(rss, count, prior, state.rng)


def network_rss(network, attributes, params, mode, covariates):
    """Residual sum of squares of the network line at the given parameters."""
    m = network.m
    ii, jj = dyad_pairs(m, mode.directed)
    M = dz.intercept_matrix(params.gamma, covariates, m, mode)
    total = 0.0
    count = 0
    for t in range(1, network.n_plus_1):
        mean = dz.network_mean_matrix(
            params, network.values[t - 1], attributes.values[t - 1], mode,
            covariates, M=M,
        )
        r = network.values[t, ii, jj] - mean[ii, jj]
        total += float(r @ r)
        count += r.size
    return total, count


def attribute_rss(network, attributes, params, mode, covariates):
    """Residual cross-product matrix of the attribute line."""
    m = network.m
    Theta = dz.theta_matrix(params.Gamma, covariates, m)
    p = params.p
    total = np.zeros((p, p))
    count = 0
    for t in range(1, network.n_plus_1):
        mean = dz.attribute_mean_matrix(
            params, network.values[t - 1], attributes.values[t - 1], mode,
            covariates, Theta=Theta,
        )
        E = attributes.values[t] - mean
        total += E.T @ E
        count += m
    return total, count


def initial_params(network, attributes, covariates, mode, prior, rng,
                   init="mle"):
    """Chain starting point: the MLE when available, otherwise prior-based."""
    p = attributes.p
    q_dyad = covariates.q_dyad(network.m, mode.directed)
    q_node = covariates.q_node(network.m)
    if init == "mle" and not mode.ordinal_network and not mode.latent \
            and not mode.ordinal_attributes and not network.has_missing() \
            and not attributes.has_missing():
        try:
            fit = _mle.fit_mle(network, attributes, covariates, mode)
            params = fit.params
            if mode.Sigma_fixed or p == 0:
                params = replace(params, Sigma=np.eye(p))
            if mode.sigma2_fixed:
                params = replace(params, sigma2=1.0)
            return params
        except Exception:
            pass
    zeros_pp = np.zeros((p, p))
    if init == "prior-draw":
        dim_beta = q_dyad + 1 + int(mode.directed) + dz.homophily_dim(
            p, mode.homophily_kind
        )
        beta = draw_beta(
            np.zeros((dim_beta, dim_beta)), np.zeros(dim_beta), 1.0,
            prior.v_beta_inv(dim_beta), rng,
        )
        gamma, alpha1, alpha2, H = dz.split_beta(beta, q_dyad, p, mode)
        k = q_node + p + p * (1 + int(mode.directed))
        if p:
            B = draw_B(
                np.zeros((k, k)), np.zeros((p, k)), np.eye(p),
                prior.v_b_inv(p * k), rng,
            )
            Gamma, A, C1, C2 = dz.split_b(B, q_node, p, mode)
        else:
            Gamma, A, C1 = np.zeros((0, q_node)), zeros_pp, zeros_pp
            C2 = zeros_pp if mode.directed else None
    else:
        gamma = np.zeros(q_dyad)
        alpha1, alpha2 = 0.0, (0.0 if mode.directed else None)
        H = zeros_pp
        Gamma, A, C1 = np.zeros((p, q_node)), zeros_pp, zeros_pp
        C2 = zeros_pp.copy() if mode.directed else None
    sigma2 = 1.0 if mode.sigma2_fixed else prior.sigma0_sq
    eta0 = prior.eta0_value(p)
    Sigma = np.eye(p) if (mode.Sigma_fixed or eta0 <= p + 1 or p == 0) \
        else prior.s0_matrix(p) / (eta0 - p - 1)
    return McrParams(
        gamma=gamma, alpha1=alpha1, alpha2=alpha2, H=H, Gamma=Gamma, A=A,
        C1=C1, C2=C2, sigma2=sigma2, Sigma=Sigma,
    )


def _allocate_draws(n_keep, q_dyad, q_node, p, directed):
    draws = {
        "gamma": np.empty((n_keep, q_dyad)),
        "alpha1": np.empty(n_keep),
        "H": np.empty((n_keep, p, p)),
        "Gamma": np.empty((n_keep, p, q_node)),
        "A": np.empty((n_keep, p, p)),
        "C1": np.empty((n_keep, p, p)),
        "sigma2": np.empty(n_keep),
        "Sigma": np.empty((n_keep, p, p)),
    }
    if directed:
        draws["alpha2"] = np.empty(n_keep)
        draws["C2"] = np.empty((n_keep, p, p))
    return draws


def _record(draws, s, params):
    draws["gamma"][s] = params.gamma
    draws["alpha1"][s] = params.alpha1
    draws["H"][s] = params.H
    draws["Gamma"][s] = params.Gamma
    draws["A"][s] = params.A
    draws["C1"][s] = params.C1
    draws["sigma2"][s] = params.sigma2
    draws["Sigma"][s] = params.Sigma
    if "alpha2" in draws:
        draws["alpha2"][s] = params.alpha2
        draws["C2"][s] = params.C2


def _merge_chain_results(results, burn_in, thin, seed, mode):
    first = results[0]
    merged = {
        k: np.concatenate([r.draws[k] for r in results]) for k in first.draws
    }
    chain_id = np.concatenate(
        [np.full(r.n_draws, c, dtype=int) for c, r in enumerate(results)]
    )
    latent = None
    if first.latent is not None:
        latent = np.concatenate([r.latent for r in results])
    extras = {}
    for k in first.extras:
        extras[k] = np.concatenate([r.extras[k] for r in results])
    return PosteriorSamples(
        draws=merged, burn_in=burn_in, thin=thin, seed=seed, mode=mode,
        chains=len(results), chain_id=chain_id, latent=latent, extras=extras,
        move_types=dict(first.move_types),
    )


def run_chain(network, attributes=None, covariates=None, mode=None, prior=None,
              iters=2000, burn_in=500, thin=1, seed=0, chains=1, threads=1,
              init="mle", include_ar=True, include_contagion=True):
    """Gibbs sampler for the fully observed Gaussian model.

    Deterministic given ``seed``: chains get independent substreams and the
    returned draws are concatenated in chain order. Data with missing
    entries is handled by the general sampler (imputation sweeps); latent or
    ordinal modes have their own front ends.
    """
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    if attributes is None:
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    if mode.ordinal_network or mode.ordinal_attributes or mode.latent:
        raise ValidationError(
            "run_chain handles the gaussian observed model; use fit_latent / "
            "fit_ordinal for the extensions"
        )
    if iters <= burn_in:
        raise ValidationError(f"iters={iters} must exceed burn_in={burn_in}")
    if network.has_missing() or attributes.has_missing():
        from .ordinal import fit_ordinal

        return fit_ordinal(
            network, attributes, covariates=covariates, mode=mode, prior=prior,
            iters=iters, burn_in=burn_in, thin=thin, seed=seed, chains=chains,
            threads=threads, init=init,
        )
    rngs = spawn_rngs(seed, chains)

    def one_chain(c):
        return _run_single_chain(
            network, attributes, covariates, mode, prior, iters, burn_in,
            thin, rngs[c], init, include_ar, include_contagion,
        )

    if chains > 1 and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_chain, range(chains)))
    else:
        results = [one_chain(c) for c in range(chains)]
    out = _merge_chain_results(results, burn_in, thin, seed, mode)
    out.move_types = {
        "beta": "gibbs", "B": "gibbs", "sigma2": "gibbs", "Sigma": "gibbs",
    }
    return out


def _run_single_chain(network, attributes, covariates, mode, prior, iters,
                      burn_in, thin, rng, init, include_ar=True,
                      include_contagion=True):
    p = attributes.p
    m = network.m
    q_dyad = covariates.q_dyad(m, mode.directed)
    q_node = covariates.q_node(m)
    if network.n_transitions >= 1:
        ne_net = _mle.accumulate_network_normal_equations(
            network, attributes, covariates, mode, include_ar
        )
    else:
        ne_net = _network_ne(network, attributes, covariates, mode)
    v_beta_inv = prior.v_beta_inv(ne_net.Q.shape[0])
    if p:
        ne_att = _mle.accumulate_attribute_normal_equations(
            network, attributes, covariates, mode, include_contagion
        )
        v_b_inv = prior.v_b_inv(p * ne_att.Q.shape[0])
    params = initial_params(network, attributes, covariates, mode, prior, rng, init)
    n_keep = (iters - burn_in) // thin
    draws = _allocate_draws(n_keep, q_dyad, q_node, p, mode.directed)
    kept = 0
    for it in range(1, iters + 1):
        beta = draw_beta(ne_net.Q, ne_net.rhs, params.sigma2, v_beta_inv, rng)
        gamma, alpha1, alpha2, H = dz.split_beta(beta, q_dyad, p, mode,
                                                 include_ar)
        params = replace(params, gamma=gamma, alpha1=alpha1, alpha2=alpha2, H=H)
        if p:
            Sigma_inv = np.linalg.inv(params.Sigma)
            B = draw_B(ne_att.Q, ne_att.rhs, Sigma_inv, v_b_inv, rng)
            Gamma, A, C1, C2 = dz.split_b(B, q_node, p, mode,
                                          include_contagion)
            params = replace(params, Gamma=Gamma, A=A, C1=C1, C2=C2)
        rss_net = _rss_network(ne_net, beta)
        sigma2 = draw_sigma2(rss_net, ne_net.count, prior, rng)
        params = replace(params, sigma2=sigma2)
        if p:
            rss_att = _rss_attributes(ne_att, B)
            Sigma = draw_Sigma(rss_att, ne_att.count, prior, rng)
            params = replace(params, Sigma=Sigma)
        if it > burn_in and (it - burn_in) % thin == 0:
            _record(draws, kept, params)
            kept += 1
    return PosteriorSamples(
        draws=draws, burn_in=burn_in, thin=thin, seed=0, mode=mode,
    )
