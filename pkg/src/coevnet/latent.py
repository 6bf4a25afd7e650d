"""Latent nodal attributes: full-conditional updates replacing the Sigma step.

When attributes are unobserved the chain treats each x_{i,t} as a parameter
with a Gaussian full conditional combining three information sources: the
one-step prediction from time t-1, the time t+1 network entries that involve
x_{i,t} through homophily, and the time t+1 attributes that involve it
through autocorrelation (its own) and contagion (everyone else's).
Identifiability requires diagonal H and Sigma = I; the leftover column
permutation/sign symmetry is handled after sampling by
:func:`align_latent_draws`.
"""

from __future__ import annotations

import itertools
from dataclasses import replace

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    ModelMode,
    ValidationError,
)
from . import design as dz
from . import mle as _mle
from .distributions import sample_mvn_precision, spawn_rngs
from .gibbs import (
    PosteriorSamples,
    PriorSpec,
    _allocate_draws,
    _merge_chain_results,
    _record,
    _rss_network,
    draw_B,
    draw_beta,
    draw_sigma2,
    initial_params,
)


def latent_full_conditional(i, t, network, X, params, covariates=None,
                            mode=None, x0_anchor=True):
    """Mean and covariance of x_{i,t} given everything else.

    ``X`` is the (n+1, m, p) array of current latent values. At t = 0 the
    past term is an N(0, I) anchor (or absent when ``x0_anchor`` is False);
    at t = n only the past term contributes, so the covariance is the
    identity.
    """
    mode = mode or ModelMode(attribute_scale="latent")
    covariates = covariates or CovariateSpec()
    p = params.p
    Y = network.values if hasattr(network, "values") else np.asarray(network)
    m = Y.shape[1]
    n = Y.shape[0] - 1
    if not 0 <= t <= n:
        raise ValidationError(f"need 0 <= t <= n={n}, got t={t}")
    prec = np.zeros((p, p))
    lin = np.zeros(p)
    Theta = dz.theta_matrix(params.Gamma, covariates, m)
    # information from the past (one-step prediction of x_{i,t})
    if t == 0:
        if x0_anchor:
            prec += np.eye(p)
    else:
        pred = dz.attribute_mean_matrix(
            params, Y[t - 1], X[t - 1], mode, covariates, Theta=Theta
        )[i]
        prec += np.eye(p)
        lin += pred
    if t < n:
        sigma2 = params.sigma2
        mask = np.arange(m) != i
        # information from the future network: rows (H x_j)' for j != i
        G = X[t] @ params.H.T
        M = dz.intercept_matrix(params.gamma, covariates, m, mode)
        r_net = Y[t + 1, i] - M[i] - params.alpha1 * Y[t, i]
        Gm = G[mask]
        prec += (Gm.T @ Gm) / sigma2
        lin += (Gm.T @ r_net[mask]) / sigma2
        # information from the future attributes
        resid = X[t + 1] - dz.attribute_mean_matrix(
            params, Y[t], X[t], mode, covariates, Theta=Theta
        )
        A, C = params.A, params.C1
        y_col = Y[t, :, i]
        r_own = resid[i] + A @ X[t, i]
        prec += A.T @ A + float(y_col[mask] @ y_col[mask]) * (C.T @ C)
        lin += A.T @ r_own
        Cx = C @ X[t, i]
        r_others = resid[mask] + np.outer(y_col[mask], Cx)
        lin += C.T @ (r_others.T @ y_col[mask])
    cov = np.linalg.inv(prec)
    cov = 0.5 * (cov + cov.T)
    return cov @ lin, cov


def step_latent_sweep(network, X, params, covariates=None, mode=None,
                      rng=None, x0_anchor=True):
    """One Gibbs sweep over all (i, t), ascending t then ascending i.

    Updates ``X`` in place and returns it.
    """
    mode = mode or ModelMode(attribute_scale="latent")
    covariates = covariates or CovariateSpec()
    Y = network.values if hasattr(network, "values") else np.asarray(network)
    n = Y.shape[0] - 1
    for t in range(n + 1):
        for i in range(Y.shape[1]):
            mean, cov = latent_full_conditional(
                i, t, network, X, params, covariates, mode, x0_anchor
            )
            prec = np.linalg.inv(cov)
            draw, _ = sample_mvn_precision(prec, prec @ mean, rng)
            X[t, i] = draw
    return X


def initialize_latent(network, p, rng, scale=1.0):
    """Spectral starting trajectories: per-slice eigenvectors, sign-aligned
    across time, plus jitter."""
    T, m = network.n_plus_1, network.m
    X = np.empty((T, m, p))
    prev = None
    for t in range(T):
        Y = network.values[t]
        w, V = np.linalg.eigh(0.5 * (Y + Y.T))
        idx = np.argsort(np.abs(w))[::-1][:p]
        vecs = V[:, idx] * np.sqrt(np.abs(w[idx]))[None, :]
        if vecs.shape[1] < p:
            vecs = np.pad(vecs, ((0, 0), (0, p - vecs.shape[1])))
        if prev is not None:
            signs = np.sign(np.sum(vecs * prev, axis=0))
            signs[signs == 0] = 1.0
            vecs = vecs * signs
        prev = vecs
        X[t] = vecs
    X *= scale
    X += 0.1 * rng.standard_normal(X.shape)
    return X


def fit_latent(network, p, covariates=None, prior=None, iters=2000,
               burn_in=500, thin=1, seed=0, chains=1, threads=1,
               x0_anchor=True):
    """Gibbs sampler for the latent-attribute model (undirected, Gaussian).

    Returns :class:`PosteriorSamples` with ``latent`` holding the thinned
    (n+1, m, p) trajectory draws.
    """
    if p < 1:
        raise ValidationError("latent attribute dimension must be >= 1")
    if network.directed:
        raise ValidationError(
            "latent attributes are supported for undirected networks only"
        )
    if network.has_missing():
        raise ValidationError(
            "latent mode does not support missing network entries"
        )
    if iters <= burn_in:
        raise ValidationError(f"iters={iters} must exceed burn_in={burn_in}")
    mode = ModelMode(attribute_scale="latent")
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    rngs = spawn_rngs(seed, chains)

    def one_chain(c):
        return _run_latent_chain(
            network, p, covariates, mode, prior, iters, burn_in, thin,
            rngs[c], x0_anchor,
        )

    if chains > 1 and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_chain, range(chains)))
    else:
        results = [one_chain(c) for c in range(chains)]
    out = _merge_chain_results(results, burn_in, thin, seed, mode)
    out.move_types = {
        "beta": "gibbs", "B": "gibbs", "sigma2": "gibbs", "latent": "gibbs",
    }
    return out


def _run_latent_chain(network, p, covariates, mode, prior, iters, burn_in,
                      thin, rng, x0_anchor):
    m = network.m
    T = network.n_plus_1
    q_dyad = covariates.q_dyad(m, False)
    q_node = covariates.q_node(m)
    X = initialize_latent(network, p, rng)
    attrs = AttributeSeries(X)
    params = initial_params(network, attrs, covariates, mode, prior, rng,
                            init="prior")
    params = replace(params, Sigma=np.eye(p))
    n_keep = (iters - burn_in) // thin
    draws = _allocate_draws(n_keep, q_dyad, q_node, p, directed=False)
    latent_draws = np.empty((n_keep, T, m, p))
    kept = 0
    for it in range(1, iters + 1):
        attrs = AttributeSeries(X)
        ne_net = _mle.accumulate_network_normal_equations(
            network, attrs, covariates, mode
        )
        beta = draw_beta(
            ne_net.Q, ne_net.rhs, params.sigma2,
            prior.v_beta_inv(ne_net.Q.shape[0]), rng,
        )
        gamma, alpha1, _, H = dz.split_beta(beta, q_dyad, p, mode)
        params = replace(params, gamma=gamma, alpha1=alpha1, H=H)
        ne_att = _mle.accumulate_attribute_normal_equations(
            network, attrs, covariates, mode
        )
        B = draw_B(
            ne_att.Q, ne_att.rhs, np.eye(p),
            prior.v_b_inv(p * ne_att.Q.shape[0]), rng,
        )
        Gamma, A, C1, _ = dz.split_b(B, q_node, p, mode)
        params = replace(params, Gamma=Gamma, A=A, C1=C1)
        rss_net = _rss_network(ne_net, beta)
        sigma2 = draw_sigma2(rss_net, ne_net.count, prior, rng)
        params = replace(params, sigma2=sigma2)
        X = step_latent_sweep(network, X, params, covariates, mode, rng,
                              x0_anchor)
        if it > burn_in and (it - burn_in) % thin == 0:
            _record(draws, kept, params)
            latent_draws[kept] = X
            kept += 1
    return PosteriorSamples(
        draws=draws, burn_in=burn_in, thin=thin, seed=0, mode=mode,
        latent=latent_draws,
    )


def _signed_permutations(p):
    for perm in itertools.permutations(range(p)):
        yield perm


def align_latent_draws(samples, reference=None):
    """Align latent trajectory draws across the permutation/sign symmetry.

    Each draw's columns are permuted and sign-flipped to best correlate with
    the reference trajectories (the first draw by default); H, A, C1, Gamma
    are transformed consistently. Ties are broken by column order. Returns
    a new :class:`PosteriorSamples`.
    """
    if samples.latent is None:
        raise ValidationError("samples carry no latent trajectories to align")
    lat = samples.latent.copy()
    S, T, m, p = lat.shape
    ref = (lat[0] if reference is None else np.asarray(reference)).reshape(T * m, p)
    draws = {k: v.copy() for k, v in samples.draws.items()}
    for s in range(S):
        flat = lat[s].reshape(T * m, p)
        corr = np.empty((p, p))
        for a in range(p):
            for b in range(p):
                va, vb = flat[:, a], ref[:, b]
                sd = va.std() * vb.std()
                corr[a, b] = 0.0 if sd == 0 else float(
                    np.mean((va - va.mean()) * (vb - vb.mean())) / sd
                )
        best, best_score = None, -np.inf
        for perm in _signed_permutations(p):
            score = sum(abs(corr[perm[k], k]) for k in range(p))
            if score > best_score + 1e-12:
                best_score = score
                best = perm
        signs = np.array(
            [1.0 if corr[best[k], k] >= 0 else -1.0 for k in range(p)]
        )
        P = np.zeros((p, p))
        for k in range(p):
            P[best[k], k] = signs[k]
        lat[s] = lat[s] @ P
        draws["H"][s] = P.T @ draws["H"][s] @ P
        draws["A"][s] = P.T @ draws["A"][s] @ P
        draws["C1"][s] = P.T @ draws["C1"][s] @ P
        draws["Gamma"][s] = P.T @ draws["Gamma"][s]
        draws["Sigma"][s] = P.T @ draws["Sigma"][s] @ P
    out = PosteriorSamples(
        draws=draws, burn_in=samples.burn_in, thin=samples.thin,
        seed=samples.seed, mode=samples.mode, chains=samples.chains,
        chain_id=samples.chain_id, latent=lat,
        extras=dict(samples.extras), move_types=dict(samples.move_types),
    )
    return out
