"""Probit treatment of ordinal networks/attributes and missing-data imputation.

Observed ordinal values are non-decreasing step functions of latent Gaussian
processes (network f(z_ij,t), per-attribute g_k(w_ik,t)) that follow the
coevolution model with sigma^2 = 1 (and Sigma = I for ordinal attributes).
The Gibbs cycle augments the Gaussian steps with truncated-normal sweeps
over the latent entries plus, depending on configuration, threshold-cut
updates and initial-state regression updates. Gaussian data with missing
entries reuses the same sweeps with no truncation, restricted to the
missing mask.

Two consistency schemes are available: fixed thresholds (few-category
variables) and the global rank likelihood, where each latent value is
constrained between the largest latent value of a lower category and the
smallest of a higher one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .data import (
    AttributeSeries,
    CovariateSpec,
    McrParams,
    ModelMode,
    NumericalError,
    ValidationError,
    dyad_pairs,
)
from . import design as dz
from . import mle as _mle
from . import _kernels as K
from .distributions import spawn_rngs, truncated_normal
from .gibbs import (
    PosteriorSamples,
    PriorSpec,
    _allocate_draws,
    _merge_chain_results,
    _record,
    _rss_attributes,
    _rss_network,
    draw_B,
    draw_beta,
    draw_sigma2,
    draw_Sigma,
    initial_params,
)
from .latent import step_latent_sweep

ANCHOR_NEVER, ANCHOR_T0, ANCHOR_ALWAYS = 0, 1, 2
TRUNC_NONE, TRUNC_THRESHOLD, TRUNC_RANK = 0, 1, 2


def encode_categories(values, valid_mask, levels=None):
    """Integer category codes for ordinal values; -1 where not valid.

    Returns (codes, levels). Explicit ``levels`` may include values never
    observed; observed values outside ``levels`` are rejected.
    """
    values = np.asarray(values, dtype=float)
    observed = values[valid_mask]
    if levels is None:
        levels = np.unique(observed)
    else:
        levels = np.asarray(sorted(set(np.asarray(levels, dtype=float).ravel())))
        if observed.size and not np.isin(observed, levels).all():
            bad = np.setdiff1d(np.unique(observed), levels)
            raise ValidationError(
                f"observed ordinal values {bad.tolist()} are not in the "
                "supplied levels"
            )
    codes = np.full(values.shape, -1, dtype=np.int64)
    codes[valid_mask] = np.searchsorted(levels, values[valid_mask])
    return codes, levels


def normal_scores(codes, n_levels):
    """Per-category midrank normal scores.

    Returns (values, level_scores): latent starting values with the shape of
    ``codes`` (zero where code < 0) and the score assigned to each level.
    """
    out = np.zeros(codes.shape, dtype=float)
    valid = codes >= 0
    counts = np.bincount(codes[valid].ravel(), minlength=n_levels).astype(float)
    total = counts.sum()
    if total == 0:
        return out, np.zeros(n_levels)
    mids = np.cumsum(counts) - counts / 2.0
    # empty levels borrow the midpoint of their neighbors' ranks
    scores = ndtri(np.clip(mids, 0.5, total - 0.5) / (total + 1.0))
    scores = _strictly_increasing(scores)
    out[valid] = scores[codes[valid]]
    return out, scores


def _strictly_increasing(v, eps=1e-6):
    v = np.asarray(v, dtype=float).copy()
    for i in range(1, v.size):
        if v[i] <= v[i - 1]:
            v[i] = v[i - 1] + eps
    return v


def initial_cuts(level_scores):
    """Interior cuts at midpoints between consecutive category scores."""
    s = np.asarray(level_scores, dtype=float)
    return _strictly_increasing(0.5 * (s[1:] + s[:-1]))


def full_cuts(interior):
    """Pad interior cuts with the infinite end cuts."""
    interior = np.asarray(interior, dtype=float).ravel()
    return np.concatenate([[-np.inf], interior, [np.inf]])


def rank_bounds(i, j, t, Z, categories):
    """Rank-likelihood interval for one network entry (full scan).

    Bounds come from the current latent values of strictly lower / higher
    categories over all entries; unobserved entries (category -1) never
    constrain. Empty sets give infinite bounds.
    """
    c = categories[t, i, j]
    if c < 0:
        return -np.inf, np.inf
    lower = (categories >= 0) & (categories < c)
    higher = categories > c
    lo = float(Z[lower].max()) if lower.any() else -np.inf
    hi = float(Z[higher].min()) if higher.any() else np.inf
    return lo, hi


class RankExtrema:
    """Per-category extrema of the current latent values, kept incrementally.

    Bounds queries scan the q per-category extrema instead of all entries;
    updates rescan one category only when its previous extreme value is
    replaced. ``values_fn`` must return the current flat values (called only
    on those rare rescans). Cross-checked against full rescans in the tests.
    """

    def __init__(self, values_fn, flat_codes, n_levels):
        self.values_fn = values_fn
        self.n_levels = n_levels
        self.members = [
            np.nonzero(flat_codes == c)[0] for c in range(n_levels)
        ]
        self.cls_min = np.full(n_levels, np.inf)
        self.cls_max = np.full(n_levels, -np.inf)
        vals = values_fn()
        for c in range(n_levels):
            if self.members[c].size:
                self.cls_min[c] = vals[self.members[c]].min()
                self.cls_max[c] = vals[self.members[c]].max()

    def bounds(self, c):
        lo, hi = -np.inf, np.inf
        for d in range(c):
            if self.cls_max[d] > lo:
                lo = self.cls_max[d]
        for d in range(c + 1, self.n_levels):
            if self.cls_min[d] < hi:
                hi = self.cls_min[d]
        return lo, hi

    def update(self, c, old, new):
        if new <= self.cls_min[c]:
            self.cls_min[c] = new
        elif old == self.cls_min[c]:
            self.cls_min[c] = self.values_fn()[self.members[c]].min()
        if new >= self.cls_max[c]:
            self.cls_max[c] = new
        elif old == self.cls_max[c]:
            self.cls_max[c] = self.values_fn()[self.members[c]].max()


@dataclass
class OrdinalState:
    """Mutable state of the augmented sampler."""

    params: McrParams
    Z: np.ndarray  # (n+1, m, m) latent (or observed) network values
    W: np.ndarray  # (n+1, m, p) latent (or observed) attribute values
    cuts_network: np.ndarray | None = None  # interior cuts
    cuts_attr: list | None = None  # per-attribute interior cuts
    init_gamma: np.ndarray | None = None
    init_b: np.ndarray | None = None
    tau2: float = 1.0


@dataclass
class _SweepConfig:
    """Static context shared by the sweeps of one chain."""

    mode: ModelMode
    covariates: CovariateSpec
    prior: PriorSpec
    z_trunc: int = TRUNC_NONE
    w_trunc: int = TRUNC_NONE
    cat_z: np.ndarray | None = None
    cat_w: np.ndarray | None = None
    update_z: np.ndarray | None = None
    update_w: np.ndarray | None = None
    z_anchor_mode: int = ANCHOR_T0
    w_anchor_mode: int = ANCHOR_T0
    initial_state: bool = False
    node_design: np.ndarray | None = None
    dyad_design: np.ndarray | None = None  # None = saturated


def _zero(p):
    return np.zeros((p, p))


def _param_mats(params, mode):
    a2 = params.alpha2 if mode.directed else 0.0
    C2 = params.C2 if mode.directed else _zero(params.p)
    return params.alpha1, a2, params.C1, C2


def _init_mu_network(state, cfg, m):
    if not cfg.initial_state:
        return np.zeros((m, m))
    return dz.intercept_matrix(
        state.init_gamma, cfg.covariates, m, cfg.mode
    )


def _init_mu_attr(state, cfg, m):
    if not cfg.initial_state:
        return np.zeros((m, state.W.shape[2]))
    return cfg.node_design @ state.init_b.T


def z_full_conditional(i, j, t, state, cfg):
    """Gaussian full conditional (mean, variance) of the latent relation z_ij,t.

    Combines the backward prediction, the forward autoregressive residuals,
    the future-attribute residuals that involve z through contagion, and,
    in ordinal mode, the weak anchoring prior. Boundary time points drop
    the absent terms.
    """
    params, mode = state.params, cfg.mode
    Z, W = state.Z, state.W
    T, m = Z.shape[0], Z.shape[1]
    p = params.p
    a1, a2, C1, C2 = _param_mats(params, mode)
    sigma2 = params.sigma2
    M = dz.intercept_matrix(params.gamma, cfg.covariates, m, mode)
    Theta = dz.theta_matrix(params.Gamma, cfg.covariates, m)
    Sigma_inv = np.linalg.inv(params.Sigma) if p else np.zeros((0, 0))
    prec = 0.0
    lin = 0.0
    if cfg.z_anchor_mode == ANCHOR_ALWAYS or (
        cfg.z_anchor_mode == ANCHOR_T0 and t == 0
    ):
        prec += 1.0 / cfg.prior.z_prior_var
        lin += cfg.prior.z_prior_mean / cfg.prior.z_prior_var
    if t == 0:
        if cfg.initial_state:
            mu0 = _init_mu_network(state, cfg, m)[i, j]
            prec += 1.0 / sigma2
            lin += mu0 / sigma2
    else:
        pred = (M[i, j] + a1 * Z[t - 1, i, j] + a2 * Z[t - 1, j, i]
                + W[t - 1, i] @ params.H @ W[t - 1, j])
        prec += 1.0 / sigma2
        lin += pred / sigma2
    if t + 1 < T:
        z_cur = Z[t, i, j]
        hom_ij = W[t, i] @ params.H @ W[t, j]
        if mode.directed:
            rest = M[i, j] + a2 * Z[t, j, i] + hom_ij
            prec += a1 * a1 / sigma2
            lin += a1 * (Z[t + 1, i, j] - rest) / sigma2
            rest = M[j, i] + a1 * Z[t, j, i] + W[t, j] @ params.H @ W[t, i]
            prec += a2 * a2 / sigma2
            lin += a2 * (Z[t + 1, j, i] - rest) / sigma2
        else:
            rest = M[i, j] + hom_ij
            prec += a1 * a1 / sigma2
            lin += a1 * (Z[t + 1, i, j] - rest) / sigma2
        if p:
            mean_X = dz.attribute_mean_matrix(
                params, Z[t], W[t], mode, cfg.covariates, Theta=Theta
            )
            g_i = C1 @ W[t, j]
            r_i = (W[t + 1, i] - mean_X[i]) + z_cur * g_i
            prec += g_i @ Sigma_inv @ g_i
            lin += g_i @ Sigma_inv @ r_i
            g_j = (C2 if mode.directed else C1) @ W[t, i]
            r_j = (W[t + 1, j] - mean_X[j]) + z_cur * g_j
            prec += g_j @ Sigma_inv @ g_j
            lin += g_j @ Sigma_inv @ r_j
    return lin / prec, 1.0 / prec


def w_full_conditional(i, k, t, state, cfg):
    """Gaussian full conditional (mean, variance) of the latent attribute w_ik,t.

    Gathers the backward prediction, the forward appearances through its own
    autoregression, other nodes' contagion terms, and the future network
    homophily terms.
    """
    params, mode = state.params, cfg.mode
    Z, W = state.Z, state.W
    T, m, p = W.shape
    a1, a2, C1, C2 = _param_mats(params, mode)
    sigma2 = params.sigma2
    M = dz.intercept_matrix(params.gamma, cfg.covariates, m, mode)
    Theta = dz.theta_matrix(params.Gamma, cfg.covariates, m)
    Sigma_inv = np.linalg.inv(params.Sigma)
    H = params.H
    w_cur = W[t, i, k]
    prec = 0.0
    lin = 0.0
    if cfg.w_anchor_mode == ANCHOR_ALWAYS or (
        cfg.w_anchor_mode == ANCHOR_T0 and t == 0
    ):
        prec += 1.0 if mode.ordinal_attributes else 1.0 / cfg.prior.z_prior_var
    if t == 0:
        if cfg.initial_state:
            mu0 = _init_mu_attr(state, cfg, m)[i, k]
            prec += 1.0 / state.tau2
            lin += mu0 / state.tau2
    else:
        pred = dz.attribute_mean_matrix(
            params, Z[t - 1], W[t - 1], mode, cfg.covariates, Theta=Theta
        )[i]
        diff = pred - W[t, i]
        diff[k] += w_cur
        prec += Sigma_inv[k, k]
        lin += Sigma_inv[k] @ diff
    if t + 1 < T:
        mean_X = dz.attribute_mean_matrix(
            params, Z[t], W[t], mode, cfg.covariates, Theta=Theta
        )
        g = params.A[:, k]
        r = (W[t + 1, i] - mean_X[i]) + w_cur * g
        prec += g @ Sigma_inv @ g
        lin += g @ Sigma_inv @ r
        for l in range(m):
            if l == i:
                continue
            if mode.directed:
                g_l = Z[t, l, i] * C1[:, k] + Z[t, i, l] * C2[:, k]
            else:
                g_l = Z[t, i, l] * C1[:, k]
            if g_l.any():
                r_l = (W[t + 1, l] - mean_X[l]) + w_cur * g_l
                prec += g_l @ Sigma_inv @ g_l
                lin += g_l @ Sigma_inv @ r_l
        for l in range(m):
            if l == i:
                continue
            hwl = H[k] @ W[t, l]
            mean_il = (M[i, l] + a1 * Z[t, i, l] + a2 * Z[t, l, i]
                       + W[t, i] @ H @ W[t, l])
            r_il = Z[t + 1, i, l] - mean_il + w_cur * hwl
            prec += hwl * hwl / sigma2
            lin += hwl * r_il / sigma2
            if mode.directed:
                hwl_t = H[:, k] @ W[t, l]
                mean_li = (M[l, i] + a1 * Z[t, l, i] + a2 * Z[t, i, l]
                           + W[t, l] @ H @ W[t, i])
                r_li = Z[t + 1, l, i] - mean_li + w_cur * hwl_t
                prec += hwl_t * hwl_t / sigma2
                lin += hwl_t * r_li / sigma2
    return lin / prec, 1.0 / prec


def _trunc_draw_py(mu, var, lo, hi, u):
    return float(K.trunc_normal_draw(mu, var, lo, hi, u))


def _z_entry_order(T, m, directed, update):
    order = []
    for t in range(T):
        for i in range(m):
            for j in range(m):
                if i == j or (not directed and j < i):
                    continue
                if update[t, i, j]:
                    order.append((t, i, j))
    return order


def step_z_sweep(state, cfg, rng, record=None):
    """One sweep over the latent network entries, fixed order, in place.

    Directed chains without rank bounds run in the compiled kernel; other
    configurations use the per-entry reference conditional. Exactly one
    uniform is consumed per updated entry.
    """
    Z = state.Z
    T, m, _ = Z.shape
    update = cfg.update_z
    if update is None or not update.any():
        return Z
    if cfg.mode.directed and cfg.z_trunc != TRUNC_RANK:
        count = int(update.sum())
        u = rng.random(count)
        out = np.empty((4, count))
        a1, a2, C1, C2 = _param_mats(state.params, cfg.mode)
        cat = cfg.cat_z if cfg.cat_z is not None else np.full(Z.shape, -1,
                                                              dtype=np.int64)
        cuts = (full_cuts(state.cuts_network)
                if cfg.z_trunc == TRUNC_THRESHOLD else np.array([-np.inf, np.inf]))
        K.z_sweep_directed(
            Z, state.W,
            dz.intercept_matrix(state.params.gamma, cfg.covariates, m, cfg.mode),
            a1, a2, state.params.H,
            dz.theta_matrix(state.params.Gamma, cfg.covariates, m),
            state.params.A, C1, C2, state.params.sigma2,
            np.linalg.inv(state.params.Sigma) if state.params.p else np.eye(1),
            cfg.z_anchor_mode, 1.0 / cfg.prior.z_prior_var,
            cfg.prior.z_prior_mean,
            cfg.initial_state, _init_mu_network(state, cfg, m),
            state.params.sigma2,
            update, cat, cfg.z_trunc, cuts,
            u, out[0], out[1], out[2], out[3],
        )
        if record is not None:
            record["mu"], record["var"] = out[0].copy(), out[1].copy()
            record["lo"], record["hi"] = out[2].copy(), out[3].copy()
        return Z
    # reference path: undirected, rank likelihood, or both
    order = _z_entry_order(T, m, cfg.mode.directed, update)
    u = rng.random(len(order))
    extrema = None
    if cfg.z_trunc == TRUNC_RANK:
        codes = _rank_code_view(cfg.cat_z, cfg.mode.directed, m)
        extrema = RankExtrema(
            lambda: Z.reshape(-1), codes, int(cfg.cat_z.max()) + 1
        )
    rec = ([], [], [], []) if record is not None else None
    for pos, (t, i, j) in enumerate(order):
        mu, var = z_full_conditional(i, j, t, state, cfg)
        lo, hi = -np.inf, np.inf
        if cfg.z_trunc == TRUNC_THRESHOLD:
            c = cfg.cat_z[t, i, j]
            if c >= 0:
                cuts = full_cuts(state.cuts_network)
                lo, hi = cuts[c], cuts[c + 1]
        elif cfg.z_trunc == TRUNC_RANK:
            c = cfg.cat_z[t, i, j]
            if c >= 0:
                lo, hi = extrema.bounds(c)
                if lo > hi:
                    raise NumericalError(
                        f"degenerate rank interval at entry ({t},{i},{j})"
                    )
        old = Z[t, i, j]
        draw = _trunc_draw_py(mu, var, lo, hi, u[pos])
        Z[t, i, j] = draw
        if not cfg.mode.directed:
            Z[t, j, i] = draw
        if extrema is not None and cfg.cat_z[t, i, j] >= 0:
            extrema.update(cfg.cat_z[t, i, j], old, draw)
        if rec is not None:
            rec[0].append(mu)
            rec[1].append(var)
            rec[2].append(lo)
            rec[3].append(hi)
    if record is not None:
        record["mu"], record["var"] = np.array(rec[0]), np.array(rec[1])
        record["lo"], record["hi"] = np.array(rec[2]), np.array(rec[3])
    return Z


def _rank_code_view(cat_z, directed, m):
    """Category codes aligned with the flat latent tensor; undirected
    chains keep only the upper triangle live so each dyad counts once."""
    codes = cat_z.copy()
    if not directed:
        il = np.tril_indices(m)
        codes[:, il[0], il[1]] = -1
    return codes.reshape(-1)


def step_w_sweep(state, cfg, rng, record=None):
    """One sweep over the latent attribute entries, fixed (t, i, k) order."""
    W = state.W
    T, m, p = W.shape
    update = cfg.update_w
    if update is None or not update.any() or p == 0:
        return W
    if cfg.mode.directed and cfg.w_trunc != TRUNC_RANK:
        count = int(update.sum())
        u = rng.random(count)
        out = np.empty((4, count))
        a1, a2, C1, C2 = _param_mats(state.params, cfg.mode)
        cat = cfg.cat_w if cfg.cat_w is not None else np.full(W.shape, -1,
                                                              dtype=np.int64)
        if cfg.w_trunc == TRUNC_THRESHOLD:
            max_len = max(len(c) for c in state.cuts_attr) + 2
            cuts = np.full((p, max_len), np.inf)
            n_cuts = np.zeros(p, dtype=np.int64)
            for k in range(p):
                fc = full_cuts(state.cuts_attr[k])
                cuts[k, : len(fc)] = fc
                n_cuts[k] = len(fc)
        else:
            cuts = np.full((p, 2), np.inf)
            cuts[:, 0] = -np.inf
            n_cuts = np.full(p, 2, dtype=np.int64)
        anchor_prec = 1.0 if cfg.mode.ordinal_attributes else \
            1.0 / cfg.prior.z_prior_var
        K.w_sweep_directed(
            state.Z, W,
            dz.intercept_matrix(state.params.gamma, cfg.covariates, m, cfg.mode),
            a1, a2, state.params.H,
            dz.theta_matrix(state.params.Gamma, cfg.covariates, m),
            state.params.A, C1, C2, state.params.sigma2,
            np.linalg.inv(state.params.Sigma),
            cfg.w_anchor_mode, anchor_prec,
            cfg.initial_state, _init_mu_attr(state, cfg, m), state.tau2,
            update, cat, cfg.w_trunc, cuts, n_cuts,
            u, out[0], out[1], out[2], out[3],
        )
        if record is not None:
            record["mu"], record["var"] = out[0].copy(), out[1].copy()
            record["lo"], record["hi"] = out[2].copy(), out[3].copy()
        return W
    order = [
        (t, i, k)
        for t in range(T)
        for i in range(m)
        for k in range(p)
        if update[t, i, k]
    ]
    u = rng.random(len(order))
    extrema = None
    if cfg.w_trunc == TRUNC_RANK:
        extrema = [
            RankExtrema(
                (lambda kk: lambda: W[:, :, kk].ravel())(k),
                cfg.cat_w[:, :, k].reshape(-1),
                int(cfg.cat_w[:, :, k].max()) + 1,
            )
            for k in range(p)
        ]
    rec = ([], [], [], []) if record is not None else None
    for pos, (t, i, k) in enumerate(order):
        mu, var = w_full_conditional(i, k, t, state, cfg)
        lo, hi = -np.inf, np.inf
        c = cfg.cat_w[t, i, k] if cfg.cat_w is not None else -1
        if cfg.w_trunc == TRUNC_THRESHOLD and c >= 0:
            cuts = full_cuts(state.cuts_attr[k])
            lo, hi = cuts[c], cuts[c + 1]
        elif cfg.w_trunc == TRUNC_RANK and c >= 0:
            lo, hi = extrema[k].bounds(c)
        old = W[t, i, k]
        draw = _trunc_draw_py(mu, var, lo, hi, u[pos])
        W[t, i, k] = draw
        if extrema is not None and c >= 0:
            extrema[k].update(c, old, draw)
        if rec is not None:
            rec[0].append(mu)
            rec[1].append(var)
            rec[2].append(lo)
            rec[3].append(hi)
    if record is not None:
        record["mu"], record["var"] = np.array(rec[0]), np.array(rec[1])
        record["lo"], record["hi"] = np.array(rec[2]), np.array(rec[3])
    return W


def step_thresholds(values, codes, interior_cuts, prior_mean, prior_var, rng):
    """Redraw each interior cut from its truncated normal full conditional.

    The cut separating categories s-1 and s must lie above every current
    latent value of category s-1 and below every value of category s;
    empty categories leave that side unconstrained.
    """
    cuts = np.asarray(interior_cuts, dtype=float).copy()
    flat_v = values.reshape(-1)
    flat_c = codes.reshape(-1)
    for s in range(1, len(cuts) + 1):
        below = flat_v[flat_c == s - 1]
        above = flat_v[flat_c == s]
        lo = below.max() if below.size else -np.inf
        hi = above.min() if above.size else np.inf
        cuts[s - 1] = float(
            truncated_normal(rng, prior_mean, np.sqrt(prior_var), lo, hi,
                             size=())
        )
    if np.any(np.diff(cuts) <= 0):
        raise NumericalError("threshold cuts crossed during update")
    return cuts


def _update_initial_network(state, cfg, rng):
    """Regression update of the slice-0 network coefficients."""
    m = state.Z.shape[1]
    ii, jj = dyad_pairs(m, cfg.mode.directed)
    z0 = state.Z[0, ii, jj]
    sigma2 = state.params.sigma2
    v_inv = 1.0 / cfg.prior.v_init
    if cfg.dyad_design is None:
        prec = 1.0 / sigma2 + v_inv
        mean = (z0 / sigma2) / prec
        return mean + rng.standard_normal(z0.size) / np.sqrt(prec)
    S = cfg.dyad_design
    prec = S.T @ S / sigma2 + v_inv * np.eye(S.shape[1])
    from .distributions import sample_mvn_precision

    draw, _ = sample_mvn_precision(prec, S.T @ z0 / sigma2, rng)
    return draw


def _update_initial_attr(state, cfg, rng):
    """Regression update of slice-0 attribute coefficients and tau^2."""
    W0 = state.W[0]
    S = cfg.node_design
    p = W0.shape[1]
    v_inv = 1.0 / cfg.prior.v_init
    from .distributions import sample_mvn_precision

    init_b = np.empty((p, S.shape[1]))
    prec = S.T @ S / state.tau2 + v_inv * np.eye(S.shape[1])
    for k in range(p):
        draw, _ = sample_mvn_precision(prec, S.T @ W0[:, k] / state.tau2, rng)
        init_b[k] = draw
    resid = W0 - S @ init_b.T
    rss = float(np.sum(resid * resid))
    tau2 = draw_sigma2(rss, W0.size, cfg.prior, rng)
    return init_b, tau2


def _infer_trunc(n_levels, requested):
    if requested in ("rank", "threshold"):
        return TRUNC_RANK if requested == "rank" else TRUNC_THRESHOLD
    return TRUNC_THRESHOLD if n_levels <= 10 else TRUNC_RANK


def fit_ordinal(network, attributes=None, covariates=None, mode=None,
                prior=None, iters=2000, burn_in=500, thin=1, seed=0, chains=1,
                threads=1, ordinal_mode=None, initial_state=False,
                network_levels=None, attribute_levels=None, latent_dim=None,
                x0_anchor=True, init="mle", store_latent=False):
    """Gibbs sampler for the augmented model variants.

    Handles every combination of gaussian/ordinal network with
    gaussian/ordinal/latent attributes, directed or undirected, including
    missing-entry imputation in the gaussian scales and the initial-state
    regression configuration (slice-0 latents regressed on covariates).
    ``ordinal_mode`` picks "rank" or "threshold" consistency (default:
    thresholds up to 10 categories, rank likelihood beyond).
    """
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    prior = prior or PriorSpec()
    if iters <= burn_in:
        raise ValidationError(f"iters={iters} must exceed burn_in={burn_in}")
    if mode.latent:
        if latent_dim is None or latent_dim < 1:
            raise ValidationError("latent mode needs latent_dim >= 1")
        if attributes is not None and attributes.p:
            raise ValidationError(
                "latent mode is exclusive with observed attributes"
            )
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    elif attributes is None:
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    rngs = spawn_rngs(seed, chains)

    def one_chain(c):
        return _run_ordinal_chain(
            network, attributes, covariates, mode, prior, iters, burn_in,
            thin, rngs[c], ordinal_mode, initial_state, network_levels,
            attribute_levels, latent_dim, x0_anchor, init, store_latent,
        )

    if chains > 1 and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_chain, range(chains)))
    else:
        results = [one_chain(c) for c in range(chains)]
    out = _merge_chain_results(results, burn_in, thin, seed, mode)
    out.move_types = {name: "gibbs" for name in
                      ("beta", "B", "sigma2", "Sigma", "z", "w", "thresholds",
                       "initial_state", "latent")}
    return out


def _prepare_network_state(network, mode, network_levels, ordinal_mode):
    m = network.m
    offdiag = ~np.eye(m, dtype=bool)
    observed = np.broadcast_to(offdiag, network.values.shape).copy()
    if network.missing is not None:
        observed &= ~network.missing
    if mode.ordinal_network:
        cat, levels = encode_categories(network.values, observed,
                                        network_levels)
        Z, level_scores = normal_scores(cat, len(levels))
        trunc = _infer_trunc(len(levels), ordinal_mode)
        update = np.broadcast_to(offdiag, network.values.shape).copy()
        cuts = initial_cuts(level_scores) if trunc == TRUNC_THRESHOLD else None
        return Z, cat, levels, trunc, update, cuts
    Z = network.values.copy()
    update = np.zeros(Z.shape, dtype=bool)
    if network.missing is not None:
        update = network.missing.copy()
    return Z, None, None, TRUNC_NONE, update, None


def _prepare_attr_state(attributes, mode, attribute_levels, ordinal_mode,
                        network, latent_dim, rng):
    if mode.latent:
        from .latent import initialize_latent

        W = initialize_latent(network, latent_dim, rng)
        return W, None, None, TRUNC_NONE, np.zeros(W.shape, dtype=bool), None
    p = attributes.p
    observed = np.ones(attributes.values.shape, dtype=bool)
    if attributes.missing is not None:
        observed &= ~attributes.missing
    if mode.ordinal_attributes and p:
        cat = np.empty(attributes.values.shape, dtype=np.int64)
        levels = []
        cuts = []
        W = np.empty(attributes.values.shape)
        max_q = 0
        for k in range(p):
            lv = None if attribute_levels is None else attribute_levels[k]
            cat_k, levels_k = encode_categories(
                attributes.values[:, :, k], observed[:, :, k], lv
            )
            cat[:, :, k] = cat_k
            levels.append(levels_k)
            max_q = max(max_q, len(levels_k))
            W[:, :, k], level_scores = normal_scores(cat_k, len(levels_k))
            cuts.append(initial_cuts(level_scores))
        # one consistency scheme for all attributes
        trunc = _infer_trunc(max_q, ordinal_mode)
        update = np.ones(W.shape, dtype=bool)
        if trunc != TRUNC_THRESHOLD:
            cuts = None
        return W, cat, levels, trunc, update, cuts
    W = attributes.values.copy()
    update = np.zeros(W.shape, dtype=bool)
    if attributes.missing is not None:
        update = attributes.missing.copy()
    return W, None, None, TRUNC_NONE, update, None


def _run_ordinal_chain(network, attributes, covariates, mode, prior, iters,
                       burn_in, thin, rng, ordinal_mode, initial_state,
                       network_levels, attribute_levels, latent_dim,
                       x0_anchor, init, store_latent):
    m, T = network.m, network.n_plus_1
    Z, cat_z, levels_z, z_trunc, update_z, cuts_z = _prepare_network_state(
        network, mode, network_levels, ordinal_mode
    )
    W, cat_w, levels_w, w_trunc, update_w, cuts_w = _prepare_attr_state(
        attributes, mode, attribute_levels, ordinal_mode, network, latent_dim,
        rng,
    )
    p = W.shape[2]
    q_dyad = covariates.q_dyad(m, mode.directed)
    q_node = covariates.q_node(m)
    cfg = _SweepConfig(
        mode=mode, covariates=covariates, prior=prior,
        z_trunc=z_trunc, w_trunc=w_trunc, cat_z=cat_z, cat_w=cat_w,
        update_z=update_z, update_w=update_w,
        z_anchor_mode=ANCHOR_ALWAYS if mode.ordinal_network else ANCHOR_T0,
        w_anchor_mode=ANCHOR_T0,
        initial_state=initial_state,
        node_design=covariates.node_design(m),
        dyad_design=covariates.dyad_design(m, mode.directed),
    )
    if initial_state:
        cfg.z_anchor_mode = (ANCHOR_ALWAYS if mode.ordinal_network
                             else ANCHOR_NEVER)
        cfg.w_anchor_mode = ANCHOR_NEVER
    # parameter initialization from the initialized latents
    latent_mode_for_fit = ModelMode(
        direction=mode.direction,
        network_scale="gaussian",
        attribute_scale="latent" if mode.latent else "gaussian",
    )
    try:
        start_net = type(network)(
            Z if mode.directed else 0.5 * (Z + Z.transpose(0, 2, 1)),
            directed=mode.directed,
        )
        start_att = AttributeSeries(W)
        fit0 = _mle.fit_mle(start_net, start_att, covariates,
                            latent_mode_for_fit)
        params = fit0.params
    except Exception:
        params = initial_params(
            network, AttributeSeries(W), covariates, mode, prior, rng,
            init="prior",
        )
    params = _constrain_params(params, mode, p)
    state = OrdinalState(
        params=params, Z=Z, W=W,
        cuts_network=cuts_z,
        cuts_attr=cuts_w,
        init_gamma=np.zeros(q_dyad),
        init_b=np.zeros((p, q_node)),
        tau2=1.0,
    )
    n_keep = (iters - burn_in) // thin
    draws = _allocate_draws(n_keep, q_dyad, q_node, p, mode.directed)
    extras = {}
    if cuts_z is not None:
        extras["cuts_network"] = np.empty((n_keep, len(cuts_z)))
    if cuts_w is not None:
        for k in range(p):
            extras[f"cuts_attr{k + 1}"] = np.empty((n_keep, len(cuts_w[k])))
    if initial_state:
        extras["init_gamma"] = np.empty((n_keep, q_dyad))
        extras["init_b"] = np.empty((n_keep, p, q_node))
        extras["tau2"] = np.empty(n_keep)
    latent_draws = None
    if mode.latent or store_latent:
        latent_draws = np.empty((n_keep, T, m, p))
    kept = 0
    for it in range(1, iters + 1):
        state = _ordinal_cycle(state, cfg, rng, x0_anchor)
        if it > burn_in and (it - burn_in) % thin == 0:
            _record(draws, kept, state.params)
            if cuts_z is not None:
                extras["cuts_network"][kept] = state.cuts_network
            if cuts_w is not None:
                for k in range(p):
                    extras[f"cuts_attr{k + 1}"][kept] = state.cuts_attr[k]
            if initial_state:
                extras["init_gamma"][kept] = state.init_gamma
                extras["init_b"][kept] = state.init_b
                extras["tau2"][kept] = state.tau2
            if latent_draws is not None:
                latent_draws[kept] = state.W
            kept += 1
    return PosteriorSamples(
        draws=draws, burn_in=burn_in, thin=thin, seed=0, mode=mode,
        latent=latent_draws, extras=extras,
    )


def _constrain_params(params, mode, p):
    updates = {}
    if mode.sigma2_fixed:
        updates["sigma2"] = 1.0
    if mode.Sigma_fixed or p == 0:
        updates["Sigma"] = np.eye(p)
    if mode.latent:
        updates["H"] = np.diag(np.diag(params.H))
    return replace(params, **updates) if updates else params


def _ordinal_cycle(state, cfg, rng, x0_anchor):
    """One full Gibbs cycle:

    beta -> B -> [sigma2] -> [Sigma | latent sweep] -> z-sweep ->
    z-thresholds -> w-sweep -> w-thresholds -> initial-state updates.
    """
    mode, covariates, prior = cfg.mode, cfg.covariates, cfg.prior
    params = state.params
    T, m, p = state.W.shape
    q_dyad = covariates.q_dyad(m, mode.directed)
    q_node = covariates.q_node(m)
    net = _ArrayNetwork(state.Z, mode.directed)
    attrs = _ArrayAttributes(state.W)
    ne_net = _mle.accumulate_network_normal_equations(
        net, attrs, covariates, mode
    )
    beta = draw_beta(
        ne_net.Q, ne_net.rhs, params.sigma2,
        prior.v_beta_inv(ne_net.Q.shape[0]), rng,
    )
    gamma, alpha1, alpha2, H = dz.split_beta(beta, q_dyad, p, mode)
    params = replace(params, gamma=gamma, alpha1=alpha1, alpha2=alpha2, H=H)
    if p:
        ne_att = _mle.accumulate_attribute_normal_equations(
            net, attrs, covariates, mode
        )
        Sigma_inv = np.linalg.inv(params.Sigma)
        B = draw_B(ne_att.Q, ne_att.rhs, Sigma_inv,
                   prior.v_b_inv(p * ne_att.Q.shape[0]), rng)
        Gamma, A, C1, C2 = dz.split_b(B, q_node, p, mode)
        params = replace(params, Gamma=Gamma, A=A, C1=C1, C2=C2)
    if not mode.sigma2_fixed:
        rss = _rss_network(ne_net, beta)
        count = ne_net.count
        if cfg.initial_state:
            ii, jj = dyad_pairs(m, mode.directed)
            r0 = state.Z[0, ii, jj] - dz.intercept_matrix(
                state.init_gamma, covariates, m, mode
            )[ii, jj]
            rss += float(r0 @ r0)
            count += r0.size
        params = replace(params, sigma2=draw_sigma2(rss, count, prior, rng))
    if p and not mode.Sigma_fixed:
        rss_att = _rss_attributes(ne_att, B)
        params = replace(
            params, Sigma=draw_Sigma(rss_att, ne_att.count, prior, rng)
        )
    state.params = params
    if mode.latent:
        step_latent_sweep(state.Z, state.W, params, covariates, mode, rng,
                          x0_anchor)
    state.params = _constrain_params(state.params, mode, p)
    step_z_sweep(state, cfg, rng)
    if cfg.z_trunc == TRUNC_THRESHOLD and state.cuts_network is not None \
            and len(state.cuts_network):
        state.cuts_network = step_thresholds(
            state.Z, cfg.cat_z, state.cuts_network,
            prior.cut_prior_mean, prior.cut_prior_var, rng,
        )
    if not mode.latent:
        step_w_sweep(state, cfg, rng)
        if cfg.w_trunc == TRUNC_THRESHOLD and state.cuts_attr is not None:
            for k in range(p):
                if len(state.cuts_attr[k]):
                    state.cuts_attr[k] = step_thresholds(
                        state.W[:, :, k], cfg.cat_w[:, :, k],
                        state.cuts_attr[k],
                        prior.cut_prior_mean, prior.cut_prior_var, rng,
                    )
    if cfg.initial_state:
        state.init_gamma = _update_initial_network(state, cfg, rng)
        if p:
            state.init_b, state.tau2 = _update_initial_attr(state, cfg, rng)
    return state


class _ArrayNetwork:
    """Array-backed stand-in for NetworkSeries inside the sampler loops.

    The latent tensor is mutated across sweeps, so the frozen validated
    container is not rebuilt every iteration.
    """

    def __init__(self, values, directed):
        self.values = values
        self.directed = directed
        self.missing = None

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def n_plus_1(self):
        return self.values.shape[0]

    @property
    def n_transitions(self):
        return self.values.shape[0] - 1

    def has_missing(self):
        return False


class _ArrayAttributes:
    def __init__(self, values):
        self.values = values
        self.missing = None

    @property
    def m(self):
        return self.values.shape[1]

    @property
    def p(self):
        return self.values.shape[2]

    @property
    def n_plus_1(self):
        return self.values.shape[0]

    def has_missing(self):
        return False
