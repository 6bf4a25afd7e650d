"""Compiled inner loops for the latent-relation and latent-attribute sweeps.

These kernels implement the sequential scalar Gibbs updates of the ordinal
(and missing-data) samplers for directed networks, where the per-entry
python overhead would dominate. Randomness enters only through a pre-drawn
uniform stream consumed in a fixed order, so a chain is reproducible from
its generator. The normal CDF/quantile helpers are local because scipy is
not callable from nopython code; they are cross-checked against
scipy.special in the tests.

Truncation modes: 0 = none, 1 = fixed threshold cuts. (Rank-likelihood
bounds are handled by the python sweep, which is fast enough at the scales
where rank mode is used.)
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

SQRT2 = math.sqrt(2.0)


@njit(cache=True)
def _ndtr(x):
    return 0.5 * math.erfc(-x / SQRT2)


@njit(cache=True)
def _ndtri(q):
    """Normal quantile, AS241-style rational approximations (double precision)."""
    if q <= 0.0:
        return -np.inf
    if q >= 1.0:
        return np.inf
    r = q - 0.5
    if abs(r) <= 0.425:
        u = 0.180625 - r * r
        num = (((((((2.5090809287301226727e3 * u + 3.3430575583588128105e4) * u
                    + 6.7265770927008700853e4) * u + 4.5921953931549871457e4) * u
                  + 1.3731693765509461125e4) * u + 1.9715909503065514427e3) * u
                + 1.3314166789178437745e2) * u + 3.3871328727963666080e0)
        den = (((((((5.2264952788528545610e3 * u + 2.8729085735721942674e4) * u
                    + 3.9307895800092710610e4) * u + 2.1213794301586595867e4) * u
                  + 5.3941960214247511077e3) * u + 6.8718700749205790830e2) * u
                + 4.2313330701600911252e1) * u + 1.0)
        return r * num / den
    if r < 0.0:
        u = q
    else:
        u = 1.0 - q
    s = math.sqrt(-math.log(u))
    if s <= 5.0:
        t = s - 1.6
        num = (((((((7.74545014278341407640e-4 * t + 2.27238449892691845833e-2) * t
                    + 2.41780725177450611770e-1) * t + 1.27045825245236838258e0) * t
                  + 3.64784832476320460504e0) * t + 5.76949722146069140550e0) * t
                + 4.63033784615654529590e0) * t + 1.42343711074968357734e0)
        den = (((((((1.05075007164441684324e-9 * t + 5.47593808499534494600e-4) * t
                    + 1.51986665636164571966e-2) * t + 1.48103976427480074590e-1) * t
                  + 6.89767334985100004550e-1) * t + 1.67638483018380384940e0) * t
                + 2.05319162663775882187e0) * t + 1.0)
    else:
        t = s - 5.0
        num = (((((((2.01033439929228813265e-7 * t + 2.71155556874348757815e-5) * t
                    + 1.24266094738807843860e-3) * t + 2.65321895265761230930e-2) * t
                  + 2.96560571828504891230e-1) * t + 1.78482653991729133580e0) * t
                + 5.46378491116411436990e0) * t + 6.65790464350110377720e0)
        den = (((((((2.04426310338993978564e-15 * t + 1.42151175831644588870e-7) * t
                    + 1.84631831751005468180e-5) * t + 7.86869131145613259100e-4) * t
                  + 1.48753612908506148525e-2) * t + 1.36929880922735805310e-1) * t
                + 5.99832206555887937690e-1) * t + 1.0)
    val = num / den
    if r < 0.0:
        val = -val
    return val


@njit(cache=True)
def _trunc_std_draw(a, b, u):
    """Inverse-CDF draw from N(0,1) truncated to [a, b] given one uniform."""
    if a == b:
        return a
    fa = 0.0 if a == -np.inf else _ndtr(a)
    fb = 1.0 if b == np.inf else _ndtr(b)
    d = fb - fa
    if d > 1e-12:
        z = _ndtri(fa + u * d)
    elif a >= 0.0:
        # far upper tail: exact inverse for the Rayleigh-dominated density
        if b == np.inf:
            w = 1.0
        else:
            w = 1.0 - math.exp((a * a - b * b) / 2.0)
        z = math.sqrt(a * a - 2.0 * math.log1p(-u * w))
    elif b <= 0.0:
        if a == -np.inf:
            w = 1.0
        else:
            w = 1.0 - math.exp((b * b - a * a) / 2.0)
        z = -math.sqrt(b * b - 2.0 * math.log1p(-u * w))
    else:
        z = 0.5 * (a + b)
    if z < a:
        z = a
    elif z > b:
        z = b
    return z


@njit(cache=True)
def trunc_normal_draw(mu, var, lo, hi, u):
    sd = math.sqrt(var)
    a = -np.inf if lo == -np.inf else (lo - mu) / sd
    b = np.inf if hi == np.inf else (hi - mu) / sd
    return mu + sd * _trunc_std_draw(a, b, u)


@njit(cache=True)
def _hom_term(W, t, i, j, H, p):
    """w_i' H w_j at time t."""
    out = 0.0
    for a in range(p):
        s = 0.0
        for b in range(p):
            s += H[a, b] * W[t, j, b]
        out += W[t, i, a] * s
    return out


@njit(cache=True)
def _contagion(W, Z, t, node, p, m, by_row):
    """sum_l z(node, l) w_l (by_row) or sum_l z(l, node) w_l."""
    out = np.zeros(p)
    for l in range(m):
        z = Z[t, node, l] if by_row else Z[t, l, node]
        if z != 0.0:
            for b in range(p):
                out[b] += z * W[t, l, b]
    return out


@njit(cache=True)
def _attr_resid(W, Z, t, node, Theta, A, C1, C2, p, m):
    """W[t+1, node] minus its conditional mean given time-t values."""
    s1 = _contagion(W, Z, t, node, p, m, True)
    s2 = _contagion(W, Z, t, node, p, m, False)
    out = np.empty(p)
    for a in range(p):
        mu = Theta[node, a]
        for b in range(p):
            mu += A[a, b] * W[t, node, b] + C1[a, b] * s1[b] + C2[a, b] * s2[b]
        out[a] = W[t + 1, node, a] - mu
    return out


@njit(cache=True)
def z_sweep_directed(Z, W, M, a1, a2, H, Theta, A, C1, C2, sigma2, Sigma_inv,
                     anchor_mode, anchor_prec, anchor_mean,
                     use_init, init_mu, init_var,
                     update, cat, trunc_mode, cuts,
                     uniforms, out_mu, out_var, out_lo, out_hi):
    """Sequential update of every flagged network entry, fixed (t, i, j) order.

    anchor_mode: 0 never, 1 at t = 0 only, 2 at all t.
    """
    T, m, _ = Z.shape
    p = W.shape[2]
    pos = 0
    for t in range(T):
        for i in range(m):
            for j in range(m):
                if i == j or not update[t, i, j]:
                    continue
                prec = 0.0
                lin = 0.0
                if anchor_mode == 2 or (anchor_mode == 1 and t == 0):
                    prec += anchor_prec
                    lin += anchor_prec * anchor_mean
                if t == 0:
                    if use_init:
                        prec += 1.0 / init_var
                        lin += init_mu[i, j] / init_var
                else:
                    pred = (M[i, j] + a1 * Z[t - 1, i, j] + a2 * Z[t - 1, j, i]
                            + _hom_term(W, t - 1, i, j, H, p))
                    prec += 1.0 / sigma2
                    lin += pred / sigma2
                if t + 1 < T:
                    z_cur = Z[t, i, j]
                    rest_ij = (M[i, j] + a2 * Z[t, j, i]
                               + _hom_term(W, t, i, j, H, p))
                    prec += a1 * a1 / sigma2
                    lin += a1 * (Z[t + 1, i, j] - rest_ij) / sigma2
                    rest_ji = (M[j, i] + a1 * Z[t, j, i]
                               + _hom_term(W, t, j, i, H, p))
                    prec += a2 * a2 / sigma2
                    lin += a2 * (Z[t + 1, j, i] - rest_ji) / sigma2
                    if p > 0:
                        ri = _attr_resid(W, Z, t, i, Theta, A, C1, C2, p, m)
                        rj = _attr_resid(W, Z, t, j, Theta, A, C1, C2, p, m)
                        for a in range(p):
                            gi = 0.0
                            gj = 0.0
                            for b in range(p):
                                gi += C1[a, b] * W[t, j, b]
                                gj += C2[a, b] * W[t, i, b]
                            ri[a] += z_cur * gi
                            rj[a] += z_cur * gj
                        for a in range(p):
                            gia = 0.0
                            gja = 0.0
                            for b in range(p):
                                gia += C1[a, b] * W[t, j, b]
                                gja += C2[a, b] * W[t, i, b]
                            for b in range(p):
                                gib = 0.0
                                gjb = 0.0
                                for c in range(p):
                                    gib += C1[b, c] * W[t, j, c]
                                    gjb += C2[b, c] * W[t, i, c]
                                prec += gia * Sigma_inv[a, b] * gib
                                prec += gja * Sigma_inv[a, b] * gjb
                                lin += gia * Sigma_inv[a, b] * ri[b]
                                lin += gja * Sigma_inv[a, b] * rj[b]
                var = 1.0 / prec
                mu = lin * var
                lo = -np.inf
                hi = np.inf
                if trunc_mode == 1:
                    c = cat[t, i, j]
                    if c >= 0:
                        lo = cuts[c]
                        hi = cuts[c + 1]
                out_mu[pos] = mu
                out_var[pos] = var
                out_lo[pos] = lo
                out_hi[pos] = hi
                Z[t, i, j] = trunc_normal_draw(mu, var, lo, hi, uniforms[pos])
                pos += 1
    return pos


@njit(cache=True)
def w_sweep_directed(Z, W, M, a1, a2, H, Theta, A, C1, C2, sigma2, Sigma_inv,
                     anchor_mode, anchor_prec,
                     use_init, init_mu, init_var,
                     update, cat, trunc_mode, cuts, n_cuts,
                     uniforms, out_mu, out_var, out_lo, out_hi):
    """Sequential update of flagged attribute entries, fixed (t, i, k) order.

    ``cuts`` is (p, max_cuts) with row k holding the q_k + 1 cut points of
    attribute k (first -inf, last +inf); ``n_cuts[k]`` gives the used length.
    """
    T, m, p = W.shape
    pos = 0
    for t in range(T):
        for i in range(m):
            for k in range(p):
                if not update[t, i, k]:
                    continue
                w_cur = W[t, i, k]
                prec = 0.0
                lin = 0.0
                if anchor_mode == 2 or (anchor_mode == 1 and t == 0):
                    prec += anchor_prec
                if t == 0:
                    if use_init:
                        prec += 1.0 / init_var
                        lin += init_mu[i, k] / init_var
                else:
                    s1 = _contagion(W, Z, t - 1, i, p, m, True)
                    s2 = _contagion(W, Z, t - 1, i, p, m, False)
                    for b in range(p):
                        mu_b = Theta[i, b]
                        for c in range(p):
                            mu_b += (A[b, c] * W[t - 1, i, c]
                                     + C1[b, c] * s1[c] + C2[b, c] * s2[c])
                        diff = mu_b - W[t, i, b]
                        if b == k:
                            diff += w_cur
                        lin += Sigma_inv[k, b] * diff
                    prec += Sigma_inv[k, k]
                if t + 1 < T:
                    # own next attribute vector, coefficient column A[:, k]
                    r = _attr_resid(W, Z, t, i, Theta, A, C1, C2, p, m)
                    for a in range(p):
                        r[a] += w_cur * A[a, k]
                    for a in range(p):
                        for b in range(p):
                            prec += A[a, k] * Sigma_inv[a, b] * A[b, k]
                            lin += A[a, k] * Sigma_inv[a, b] * r[b]
                    # other nodes' next attributes through contagion
                    for l in range(m):
                        if l == i:
                            continue
                        zli = Z[t, l, i]
                        zil = Z[t, i, l]
                        if zli != 0.0 or zil != 0.0:
                            rl = _attr_resid(W, Z, t, l, Theta, A, C1, C2, p, m)
                            for a in range(p):
                                g = zli * C1[a, k] + zil * C2[a, k]
                                rl[a] += w_cur * g
                            for a in range(p):
                                ga = zli * C1[a, k] + zil * C2[a, k]
                                for b in range(p):
                                    gb = zli * C1[b, k] + zil * C2[b, k]
                                    prec += ga * Sigma_inv[a, b] * gb
                                    lin += ga * Sigma_inv[a, b] * rl[b]
                    # next network entries through homophily
                    for l in range(m):
                        if l == i:
                            continue
                        hwl = 0.0
                        hwl_t = 0.0
                        for c in range(p):
                            hwl += H[k, c] * W[t, l, c]
                            hwl_t += H[c, k] * W[t, l, c]
                        mean_il = (M[i, l] + a1 * Z[t, i, l] + a2 * Z[t, l, i]
                                   + _hom_term(W, t, i, l, H, p))
                        r_il = Z[t + 1, i, l] - mean_il + w_cur * hwl
                        prec += hwl * hwl / sigma2
                        lin += hwl * r_il / sigma2
                        mean_li = (M[l, i] + a1 * Z[t, l, i] + a2 * Z[t, i, l]
                                   + _hom_term(W, t, l, i, H, p))
                        r_li = Z[t + 1, l, i] - mean_li + w_cur * hwl_t
                        prec += hwl_t * hwl_t / sigma2
                        lin += hwl_t * r_li / sigma2
                var = 1.0 / prec
                mu = lin * var
                lo = -np.inf
                hi = np.inf
                if trunc_mode == 1:
                    c = cat[t, i, k]
                    if c >= 0:
                        lo = cuts[k, c]
                        hi = cuts[k, c + 1]
                out_mu[pos] = mu
                out_var[pos] = var
                out_lo[pos] = lo
                out_hi[pos] = hi
                W[t, i, k] = trunc_normal_draw(mu, var, lo, hi, uniforms[pos])
                pos += 1
    return pos
