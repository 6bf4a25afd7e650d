"""Seeded sampling primitives used by the Gibbs samplers."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.special import log_ndtr, ndtri_exp

from .data import NumericalError


def make_rng(seed):
    return np.random.default_rng(seed)


def spawn_rngs(seed, n):
    """Independent per-chain generators derived from one seed."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


def sample_mvn_precision(precision, linear, rng):
    """Draw from N(P^{-1} m, P^{-1}) given precision P and linear term m.

    Returns (draw, mean).
    """
    precision = np.asarray(precision, dtype=float)
    linear = np.asarray(linear, dtype=float).ravel()
    try:
        chol, lower = cho_factor(precision, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"conditional precision matrix is not positive definite: {exc}"
        ) from exc
    mean = cho_solve((chol, lower), linear)
    z = rng.standard_normal(linear.size)
    # cov = P^{-1} = L^{-T} L^{-1} for P = L L', so draw = mean + L^{-T} z
    draw = mean + solve_triangular(chol, z, lower=True, trans="T")
    return draw, mean


def sample_wishart(df, scale, rng):
    """Wishart draw via the Bartlett decomposition.

    ``scale`` is the (p, p) scale matrix, ``df`` the degrees of freedom
    (df > p - 1).
    """
    scale = np.asarray(scale, dtype=float)
    p = scale.shape[0]
    if df <= p - 1:
        raise NumericalError(f"Wishart degrees of freedom {df} <= p - 1 = {p - 1}")
    try:
        L = np.linalg.cholesky(scale)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"Wishart scale matrix is not positive definite: {exc}"
        ) from exc
    A = np.zeros((p, p))
    for i in range(p):
        A[i, i] = np.sqrt(rng.chisquare(df - i))
        for j in range(i):
            A[i, j] = rng.standard_normal()
    LA = L @ A
    return LA @ LA.T


def truncated_normal(rng, mean, sd, lower, upper, size=None):
    """Inverse-CDF sampling of N(mean, sd^2) truncated to [lower, upper].

    Works in log-CDF space throughout (with the upper tail reflected to the
    lower one), so draws stay accurate arbitrarily far into the tails.
    Bounds may be ``+-inf``. Arguments broadcast.
    """
    mean, sd, lower, upper = np.broadcast_arrays(
        np.asarray(mean, float), np.asarray(sd, float),
        np.asarray(lower, float), np.asarray(upper, float),
    )
    shape = mean.shape if size is None else size
    u = rng.random(shape)
    a = np.where(np.isneginf(lower), -np.inf, (lower - mean) / sd)
    b = np.where(np.isposinf(upper), np.inf, (upper - mean) / sd)
    z = _std_truncnorm_ppf(u, np.broadcast_to(a, shape), np.broadcast_to(b, shape))
    return mean + sd * z


def _std_truncnorm_ppf(u, a, b):
    """Quantile of the standard normal truncated to [a, b], log-space."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    u = np.asarray(u, float)
    # reflect so the interval sits in the lower half where log_ndtr is sharp
    with np.errstate(invalid="ignore"):
        flip = (a + b) > 0  # nan (unbounded both sides) falls to no-flip
    lo = np.where(flip, -b, a)
    hi = np.where(flip, -a, b)
    uu = np.where(flip, 1.0 - u, u)
    log_lo = np.where(np.isneginf(lo), -np.inf, log_ndtr(lo))
    log_hi = log_ndtr(hi)
    # log of F = (1-u) F_lo + u F_hi, computed relative to the larger F_hi
    with np.errstate(invalid="ignore"):
        ratio = np.exp(np.clip(log_lo - log_hi, None, 0.0))
    ratio = np.where(np.isneginf(log_lo), 0.0, ratio)
    logf = log_hi + np.log(uu + (1.0 - uu) * ratio)
    z = ndtri_exp(np.minimum(logf, 0.0))
    z = np.where(flip, -z, z)
    # degenerate intervals collapse to the bound
    z = np.where(a == b, a, z)
    return z


def sample_inv_gamma_variance(rss, count, nu0, sigma0_sq, rng):
    """Draw sigma^2 with 1/sigma^2 ~ gamma((nu0 + count)/2, (nu0 sigma0^2 + rss)/2)."""
    shape = 0.5 * (nu0 + count)
    rate = 0.5 * (nu0 * sigma0_sq + max(rss, 0.0))
    precision = rng.gamma(shape, 1.0 / rate)
    if precision <= 0 or not np.isfinite(precision):
        raise NumericalError(f"degenerate variance draw (precision={precision})")
    return 1.0 / precision
