"""Closed-form least-squares / maximum-likelihood estimation of the Gaussian model.

Both model lines are linear regressions, so the MLE reduces to normal
equations accumulated over time slices:

    network    l = sum_t sum_pairs w y,   Q = sum_t sum_pairs w w'
    attributes L = sum_t X_t' W_t,        Q = sum_t W_t' W_t

with beta_hat = Q^{-1} l and B_hat = L Q^{-1}. Accumulation is a single
pass over t with per-slice partial sums in a fixed order, so results are
bit-reproducible. Saturated one-hot dyad intercepts are accumulated via
their block structure (the one-hot block never materializes as dense rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import (
    AttributeSeries,
    CovariateSpec,
    InsufficientDataError,
    McrParams,
    ModelMode,
    RankDeficiencyError,
    check_paired,
    dyad_pairs,
    n_dyads,
)
from . import design as dz


@dataclass
class NormalEquations:
    """Accumulated Gram matrix Q, right-hand side (l or L), and row count.

    ``response_ss`` is sum(y^2) (network) or sum_t X_t'X_t (attributes),
    kept so residual sums of squares can be evaluated exactly from the
    sufficient statistics. ``labels`` name the design columns for rank
    diagnostics.
    """

    Q: np.ndarray
    rhs: np.ndarray
    count: int
    response_ss: np.ndarray | float
    labels: list = field(default_factory=list)

    @property
    def l(self):
        return self.rhs

    @property
    def L(self):
        return self.rhs


def _network_row_mask(network, attributes, t, ii, jj):
    """Rows at transition t usable for accumulation (complete cases)."""
    ok = np.ones(len(ii), dtype=bool)
    if network.missing is not None:
        ok &= ~network.missing[t, ii, jj]
        ok &= ~network.missing[t - 1, ii, jj]
        ok &= ~network.missing[t - 1, jj, ii]
    if attributes.missing is not None and attributes.p:
        node_ok = ~attributes.missing[t - 1].any(axis=1)
        ok &= node_ok[ii] & node_ok[jj]
    return ok


def accumulate_network_normal_equations(network, attributes, covariates=None,
                                        mode=None, include_ar=True):
    """Normal equations for the network model over transitions t = 1..n."""
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    check_paired(network, attributes)
    n = network.n_transitions
    if n < 1:
        raise InsufficientDataError(
            "need at least one transition (two time points) to accumulate"
        )
    m = network.m
    ii, jj = dyad_pairs(m, mode.directed)
    S = covariates.dyad_design(m, mode.directed)
    q = n_dyads(m, mode.directed) if S is None else S.shape[1]
    k_small = (
        (1 + int(mode.directed)) * int(include_ar)
        + dz.homophily_dim(attributes.p, mode.homophily_kind)
    )
    Qss_diag = np.zeros(q)  # saturated case: the covariate Gram is diagonal
    Qss = np.zeros((q, q))
    Qsx = np.zeros((q, k_small))
    Qxx = np.zeros((k_small, k_small))
    ls = np.zeros(q)
    lx = np.zeros(k_small)
    syy = 0.0
    count = 0
    for t in range(1, n + 1):
        small = dz.network_small_regressors(
            network.values[t - 1], attributes.values[t - 1], mode, include_ar
        )
        y = network.values[t, ii, jj]
        ok = _network_row_mask(network, attributes, t, ii, jj)
        if not ok.all():
            small = small[ok]
            y = y[ok]
        if S is None:
            idx = np.nonzero(ok)[0]
            Qss_diag[idx] += 1.0
            Qsx[idx] += small
            ls[idx] += y
        else:
            Sm = S[ok]
            Qss += Sm.T @ Sm
            Qsx += Sm.T @ small
            ls += Sm.T @ y
        Qxx += small.T @ small
        lx += small.T @ y
        syy += float(y @ y)
        count += int(ok.sum())
    if S is None:
        Qss = np.diag(Qss_diag)
    Q = np.block([[Qss, Qsx], [Qsx.T, Qxx]])
    rhs = np.concatenate([ls, lx])
    labels = dz.network_design_labels(m, covariates, mode, attributes.p, include_ar)
    return NormalEquations(Q=Q, rhs=rhs, count=count, response_ss=syy, labels=labels)


def accumulate_attribute_normal_equations(network, attributes, covariates=None,
                                          mode=None, include_contagion=True):
    """Normal equations for the attribute model over transitions t = 1..n."""
    mode = mode or ModelMode()
    covariates = covariates or CovariateSpec()
    check_paired(network, attributes)
    n = network.n_transitions
    if n < 1:
        raise InsufficientDataError(
            "need at least one transition (two time points) to accumulate"
        )
    p = attributes.p
    if p == 0:
        raise InsufficientDataError("attribute model is empty (p = 0)")
    m = network.m
    node_design = covariates.node_design(m)
    k = node_design.shape[1] + p + p * (1 + int(mode.directed)) * int(include_contagion)
    Q = np.zeros((k, k))
    L = np.zeros((p, k))
    Sxx = np.zeros((p, p))
    count = 0
    for t in range(1, n + 1):
        W = dz.attribute_design_matrix(
            network.values[t - 1], attributes.values[t - 1], node_design,
            mode, include_contagion,
        )
        X = attributes.values[t]
        ok = np.ones(m, dtype=bool)
        if attributes.missing is not None:
            ok &= ~attributes.missing[t].any(axis=1)
            ok &= ~attributes.missing[t - 1].any(axis=1)
            if include_contagion and attributes.missing[t - 1].any():
                # contagion sums need the full lagged attribute slice
                ok &= False
        if network.missing is not None and include_contagion:
            ok &= ~network.missing[t - 1].any(axis=1)
            if mode.directed:
                ok &= ~network.missing[t - 1].any(axis=0)
        if not ok.all():
            W = W[ok]
            X = X[ok]
        Q += W.T @ W
        L += X.T @ W
        Sxx += X.T @ X
        count += int(ok.sum())
    labels = dz.attribute_design_labels(m, covariates, mode, p, include_contagion)
    return NormalEquations(Q=Q, rhs=L, count=count, response_ss=Sxx, labels=labels)


def _near_collinear_columns(Q, labels, k=5):
    """Columns with the largest weight in the smallest singular direction."""
    try:
        _, _, vt = np.linalg.svd(Q)
    except np.linalg.LinAlgError:
        return labels[:k]
    v = np.abs(vt[-1])
    order = np.argsort(v)[::-1]
    cutoff = 0.3 * v[order[0]] if v[order[0]] > 0 else 0.0
    picked = [labels[c] for c in order[:k] if v[c] >= cutoff and c < len(labels)]
    return picked or labels[:1]


def _guarded_solve(Q, rhs, labels, cond_cap, allow_singular):
    """Solve Q x = rhs with a condition-number guard.

    rhs may be a vector or a matrix of stacked right-hand sides.
    Returns (solution, condition_number).
    """
    if Q.shape[0] == 0:
        return np.zeros_like(rhs), 0.0
    cond = float(np.linalg.cond(Q))
    if not np.isfinite(cond) or cond > cond_cap:
        if not allow_singular:
            raise RankDeficiencyError(
                f"normal equations are ill-conditioned (cond={cond:.3g} > "
                f"{cond_cap:.3g}); pass allow_singular=True for a "
                "pseudo-inverse solution",
                columns=_near_collinear_columns(Q, labels),
            )
        return np.linalg.pinv(Q) @ rhs, cond
    try:
        from scipy.linalg import cho_factor, cho_solve

        c = cho_factor(Q, lower=True)
        return cho_solve(c, rhs), cond
    except np.linalg.LinAlgError as exc:
        if allow_singular:
            return np.linalg.pinv(Q) @ rhs, cond
        raise RankDeficiencyError(
            f"normal equations are not positive definite: {exc}",
            columns=_near_collinear_columns(Q, labels),
        ) from exc


def solve_network_mle(ne, cond_cap=1e12, allow_singular=False):
    """Solve the network normal equations.

    Returns (beta, sigma2_hat, condition_number); sigma2_hat uses the MLE
    denominator (the accumulated row count).
    """
    beta, cond = _guarded_solve(ne.Q, ne.rhs, ne.labels, cond_cap, allow_singular)
    rss = float(ne.response_ss - 2.0 * beta @ ne.rhs + beta @ ne.Q @ beta)
    rss = max(rss, 0.0)
    sigma2 = rss / ne.count if ne.count else np.nan
    return beta, sigma2, cond


def solve_attribute_mle(ne, cond_cap=1e12, allow_singular=False):
    """Solve the attribute normal equations.

    Returns (B, Sigma_hat, condition_number); Sigma_hat uses the MLE
    denominator m*n (the accumulated row count), not a rank correction.
    """
    Bt, cond = _guarded_solve(ne.Q, ne.rhs.T, ne.labels, cond_cap, allow_singular)
    B = Bt.T
    rss = ne.response_ss - ne.rhs @ B.T - B @ ne.rhs.T + B @ ne.Q @ B.T
    rss = 0.5 * (rss + rss.T)
    # clip tiny negative eigenvalues from cancellation
    w, V = np.linalg.eigh(rss)
    rss = (V * np.maximum(w, 0.0)) @ V.T
    Sigma = rss / ne.count if ne.count else np.full_like(rss, np.nan)
    return B, Sigma, cond


@dataclass
class MleFit:
    """Result of :func:`fit_mle`.

    ``rss_network`` and ``rss_attributes`` are residual sums of squares at
    the estimate, so ``params.sigma2 = rss_network / dyad_count`` and
    ``params.Sigma = rss_attributes / node_time_count`` (MLE convention).
    """

    params: McrParams
    rss_network: float
    rss_attributes: np.ndarray
    dyad_count: int
    node_time_count: int
    network_condition: float = np.nan
    attribute_condition: float = np.nan


def fit_mle(network, attributes=None, covariates=None, mode=None,
            include_ar=True, include_contagion=True,
            cond_cap=1e12, allow_singular=False):
    """Closed-form fit of the fully observed Gaussian model.

    ``include_ar`` / ``include_contagion`` drop the network autocorrelation
    or the contagion block, which is how the nested forecast-comparison
    submodels are fit.
    """
    mode = mode or ModelMode()
    if mode.network_scale != "gaussian" or mode.attribute_scale != "gaussian":
        raise InsufficientDataError(
            "closed-form MLE requires gaussian, fully observed network and "
            "attributes; use the Bayesian fitters for other modes"
        )
    covariates = covariates or CovariateSpec()
    if attributes is None:
        attributes = AttributeSeries.empty(network.n_plus_1, network.m)
    p = attributes.p
    ne_net = accumulate_network_normal_equations(
        network, attributes, covariates, mode, include_ar
    )
    beta, sigma2, cond_net = solve_network_mle(ne_net, cond_cap, allow_singular)
    q_dyad = covariates.q_dyad(network.m, mode.directed)
    gamma, alpha1, alpha2, H = dz.split_beta(beta, q_dyad, p, mode, include_ar)
    if p:
        ne_att = accumulate_attribute_normal_equations(
            network, attributes, covariates, mode, include_contagion
        )
        B, Sigma, cond_att = solve_attribute_mle(ne_att, cond_cap, allow_singular)
        Gamma, A, C1, C2 = dz.split_b(
            B, covariates.q_node(network.m), p, mode, include_contagion
        )
        rss_att = Sigma * ne_att.count
        n_att = ne_att.count
    else:
        Gamma = np.zeros((0, covariates.q_node(network.m)))
        A = np.zeros((0, 0))
        C1 = np.zeros((0, 0))
        C2 = np.zeros((0, 0)) if mode.directed else None
        Sigma = np.zeros((0, 0))
        rss_att = np.zeros((0, 0))
        cond_att = 0.0
        n_att = 0
    params = McrParams(
        gamma=gamma, alpha1=alpha1, alpha2=alpha2, H=H,
        Gamma=Gamma, A=A, C1=C1, C2=C2,
        sigma2=max(sigma2, np.finfo(float).tiny), Sigma=Sigma,
    )
    return MleFit(
        params=params,
        rss_network=sigma2 * ne_net.count,
        rss_attributes=rss_att,
        dyad_count=ne_net.count,
        node_time_count=n_att,
        network_condition=cond_net,
        attribute_condition=cond_att,
    )
