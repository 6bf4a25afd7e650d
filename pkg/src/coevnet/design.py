"""Design-row algebra shared by the estimators and samplers.

The network model line

    y_ij,t = gamma' s_ij + alpha1 y_ij,t-1 [+ alpha2 y_ji,t-1] + x_i' H x_j + eps

is linear in beta = (gamma, alpha1[, alpha2], h) once the bilinear homophily
term is rewritten as h' r(x_i, x_j); the attribute line

    x_i,t = Gamma s_i + A x_i,t-1 + C1 X' y_i.,t-1 [+ C2 X' y_.i,t-1] + e

is a multivariate regression on w_i,t = (s_i, x_i,t-1, X'y_i., [X'y_.i]).
This module builds those regressors, both entry-wise (the contract used by
tests and the per-entry samplers) and as whole time-slice matrices (the fast
path used for accumulation).
"""

from __future__ import annotations

import numpy as np

from .data import (
    ValidationError,
    dyad_pairs,
    n_dyads,
)


def vech(M, tol=1e-10):
    """Half-vectorization: lower-triangular elements, column-major, with diagonal.

    The input must be symmetric within ``tol``.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"vech needs a square matrix, got shape {M.shape}")
    if M.size and np.max(np.abs(M - M.T)) > tol:
        raise ValidationError("vech input is not symmetric within tolerance")
    p = M.shape[0]
    cols = [M[j:, j] for j in range(p)]
    return np.concatenate(cols) if cols else np.zeros(0)


def unvech(v):
    """Inverse of :func:`vech`: rebuild the symmetric matrix."""
    v = np.asarray(v, dtype=float).ravel()
    p = int(round((np.sqrt(8 * v.size + 1) - 1) / 2))
    if p * (p + 1) // 2 != v.size:
        raise ValidationError(f"length {v.size} is not a triangular number")
    M = np.zeros((p, p))
    pos = 0
    for j in range(p):
        block = v[pos : pos + p - j]
        M[j:, j] = block
        M[j, j:] = block
        pos += p - j
    return M


def homophily_dim(p, kind):
    if kind == "symmetric":
        return p * (p + 1) // 2
    if kind == "full":
        return p * p
    if kind == "diagonal":
        return p
    raise ValidationError(f"unknown homophily kind {kind!r}")


def homophily_regressor(x_i, x_j, kind):
    """Regressor r with h' r = x_i' H x_j for the given H parameterization.

    kind "symmetric": h = vech(H), r = vech(x_i x_j' + x_j x_i' - diag(x_i x_j'))
    kind "full":      h = vec(H) (column-major), r = kron(x_j, x_i)
    kind "diagonal":  h = diag(H), r = x_i * x_j
    """
    x_i = np.asarray(x_i, dtype=float).ravel()
    x_j = np.asarray(x_j, dtype=float).ravel()
    if x_i.shape != x_j.shape:
        raise ValidationError(
            f"attribute vectors differ in length: {x_i.size} vs {x_j.size}"
        )
    if kind == "symmetric":
        outer = np.outer(x_i, x_j)
        return vech(outer + outer.T - np.diag(np.diag(outer)), tol=np.inf)
    if kind == "full":
        return np.kron(x_j, x_i)
    if kind == "diagonal":
        return x_i * x_j
    raise ValidationError(f"unknown homophily kind {kind!r}")


def h_vector(H, kind):
    """Flatten H to the coefficient vector matching :func:`homophily_regressor`."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if kind == "symmetric":
        return vech(H)
    if kind == "full":
        return H.flatten(order="F")
    if kind == "diagonal":
        return np.diag(H).copy()
    raise ValidationError(f"unknown homophily kind {kind!r}")


def h_matrix(h, p, kind):
    """Inverse of :func:`h_vector`."""
    h = np.asarray(h, dtype=float).ravel()
    if kind == "symmetric":
        return unvech(h)
    if kind == "full":
        return h.reshape(p, p, order="F")
    if kind == "diagonal":
        return np.diag(h)
    raise ValidationError(f"unknown homophily kind {kind!r}")


def _homophily_slice(X, kind):
    """Homophily regressors for every dyad of one time slice.

    X is (m, p); returns (n_dyads, homophily_dim) in the fixed dyad order.
    """
    m, p = X.shape
    ii, jj = dyad_pairs(m, kind == "full")
    if kind == "diagonal":
        return X[ii] * X[jj]
    if kind == "full":
        # kron(x_j, x_i): entry (l*p + k) = x_j[l] * x_i[k]
        return (X[jj][:, :, None] * X[ii][:, None, :]).reshape(len(ii), p * p)
    # symmetric: vech of x_i x_j' + x_j x_i' - diag(x_i x_j')
    out = np.empty((len(ii), p * (p + 1) // 2))
    pos = 0
    for b in range(p):
        out[:, pos] = X[ii, b] * X[jj, b]
        pos += 1
        for a in range(b + 1, p):
            out[:, pos] = X[ii, a] * X[jj, b] + X[ii, b] * X[jj, a]
            pos += 1
    return out


def network_small_regressors(Y_lag, X_lag, mode, include_ar=True):
    """Non-covariate part of the network design for one transition.

    Y_lag, X_lag are the time t-1 slices. Returns (n_dyads, k) with columns
    [y_ij,t-1 (, y_ji,t-1)] followed by the homophily block.
    """
    m = Y_lag.shape[0]
    ii, jj = dyad_pairs(m, mode.directed)
    cols = []
    if include_ar:
        cols.append(Y_lag[ii, jj])
        if mode.directed:
            cols.append(Y_lag[jj, ii])
    hom = _homophily_slice(X_lag, mode.homophily_kind)
    if hom.shape[1]:
        cols.append(hom)
    if not cols:
        return np.zeros((len(ii), 0))
    return np.column_stack(cols)


def network_design_row(network, attributes, covariates, i, j, t, mode,
                       include_ar=True):
    """Design row w_ij,t for the network model (predicts y at time t >= 1)."""
    if t < 1 or t >= network.n_plus_1:
        raise ValidationError(
            f"network design rows need 1 <= t <= n, got t={t}"
        )
    if i == j:
        raise ValidationError(f"diagonal entry ({i},{i}) has no design row")
    m = network.m
    S = covariates.dyad_design(m, mode.directed)
    from .data import dyad_index

    if S is None:
        s = np.zeros(n_dyads(m, mode.directed))
        s[dyad_index(i, j, m, mode.directed)] = 1.0
    else:
        s = S[dyad_index(i, j, m, mode.directed)]
    parts = [s]
    if include_ar:
        parts.append([network.values[t - 1, i, j]])
        if mode.directed:
            parts.append([network.values[t - 1, j, i]])
    parts.append(
        homophily_regressor(
            attributes.values[t - 1, i], attributes.values[t - 1, j],
            mode.homophily_kind,
        )
    )
    return np.concatenate([np.asarray(x, dtype=float).ravel() for x in parts])


def attribute_design_matrix(Y_lag, X_lag, node_design, mode,
                            include_contagion=True):
    """Design matrix W_t for the attribute model at one transition.

    Rows are nodes; columns are [s_i | x_i,t-1 | X'y_i. (| X'y_.i)].
    """
    parts = [node_design]
    if X_lag.shape[1]:
        parts.append(X_lag)
        if include_contagion:
            parts.append(Y_lag @ X_lag)
            if mode.directed:
                parts.append(Y_lag.T @ X_lag)
    return np.hstack(parts)


def attribute_design_row(network, attributes, covariates, i, t, mode,
                         include_contagion=True):
    """Design row w_i,t for the attribute model (predicts x at time t >= 1)."""
    if t < 1 or t >= network.n_plus_1:
        raise ValidationError(
            f"attribute design rows need 1 <= t <= n, got t={t}"
        )
    W = attribute_design_matrix(
        network.values[t - 1],
        attributes.values[t - 1],
        covariates.node_design(network.m),
        mode,
        include_contagion=include_contagion,
    )
    return W[i].copy()


def network_design_labels(m, covariates, mode, p, include_ar=True):
    """Column labels for the network design, used in rank diagnostics."""
    labels = []
    if covariates.dyad is None:
        ii, jj = dyad_pairs(m, mode.directed)
        labels += [f"mu[{a + 1},{b + 1}]" for a, b in zip(ii, jj)]
    else:
        labels += [f"s{k + 1}" for k in range(covariates.dyad.shape[2])]
    if include_ar:
        labels.append("alpha1")
        if mode.directed:
            labels.append("alpha2")
    kind = mode.homophily_kind
    if kind == "diagonal":
        labels += [f"H[{k + 1},{k + 1}]" for k in range(p)]
    elif kind == "full":
        labels += [f"H[{a + 1},{b + 1}]" for b in range(p) for a in range(p)]
    else:
        labels += [
            f"H[{a + 1},{b + 1}]" for b in range(p) for a in range(b, p)
        ]
    return labels


def attribute_design_labels(m, covariates, mode, p, include_contagion=True):
    labels = []
    if covariates.node is None:
        labels += [f"theta[{i + 1}]" for i in range(m)]
    else:
        labels += [f"s{k + 1}" for k in range(covariates.node.shape[1])]
    labels += [f"x[{k + 1}]" for k in range(p)]
    if include_contagion and p:
        labels += [f"contagion_out[{k + 1}]" for k in range(p)]
        if mode.directed:
            labels += [f"contagion_in[{k + 1}]" for k in range(p)]
    return labels


def split_beta(beta, q_dyad, p, mode, include_ar=True):
    """Partition beta back into (gamma, alpha1, alpha2, H)."""
    beta = np.asarray(beta, dtype=float).ravel()
    gamma = beta[:q_dyad]
    pos = q_dyad
    alpha1, alpha2 = 0.0, (0.0 if mode.directed else None)
    if include_ar:
        alpha1 = float(beta[pos])
        pos += 1
        if mode.directed:
            alpha2 = float(beta[pos])
            pos += 1
    kind = mode.homophily_kind
    H = h_matrix(beta[pos : pos + homophily_dim(p, kind)], p, kind)
    return gamma, alpha1, alpha2, H


def split_b(B, q_node, p, mode, include_contagion=True):
    """Partition the attribute coefficient matrix back into (Gamma, A, C1, C2)."""
    B = np.asarray(B, dtype=float).reshape(p, -1)
    Gamma = B[:, :q_node]
    pos = q_node
    A = B[:, pos : pos + p]
    pos += p
    if include_contagion and p:
        C1 = B[:, pos : pos + p]
        pos += p
        C2 = B[:, pos : pos + p] if mode.directed else None
    else:
        C1 = np.zeros((p, p))
        C2 = np.zeros((p, p)) if mode.directed else None
    return Gamma, A, C1, C2


def intercept_matrix(gamma, covariates, m, mode):
    """The (m, m) matrix of dyad means mu_ij = gamma' s_ij (diagonal 0)."""
    M = np.zeros((m, m))
    ii, jj = dyad_pairs(m, mode.directed)
    S = covariates.dyad_design(m, mode.directed)
    gamma = np.asarray(gamma, dtype=float)
    expected = len(ii) if S is None else S.shape[1]
    if gamma.size != expected:
        raise ValidationError(
            f"gamma has length {gamma.size} but the dyad design expects "
            f"{expected} (saturated intercepts need one value per dyad)"
        )
    vals = gamma if S is None else S @ gamma
    M[ii, jj] = vals
    if not mode.directed:
        M[jj, ii] = vals
    return M


def theta_matrix(Gamma, covariates, m):
    """The (m, p) matrix of node intercepts theta_i = Gamma s_i."""
    S = covariates.node_design(m)
    Gamma = np.asarray(Gamma, dtype=float)
    if Gamma.shape[1] != S.shape[1]:
        raise ValidationError(
            f"Gamma has {Gamma.shape[1]} columns but the node design expects "
            f"{S.shape[1]}"
        )
    return S @ Gamma.T


def network_mean_matrix(params, Y_t, X_t, mode, covariates, M=None):
    """E[Y_{t+1} | Y_t, X_t] as an (m, m) matrix (diagonal meaningless)."""
    m = Y_t.shape[0]
    if M is None:
        M = intercept_matrix(params.gamma, covariates, m, mode)
    out = M + params.alpha1 * Y_t
    if mode.directed:
        out = out + params.alpha2 * Y_t.T
    if params.p:
        out = out + X_t @ params.H @ X_t.T
    return out


def attribute_mean_matrix(params, Y_t, X_t, mode, covariates, Theta=None):
    """E[X_{t+1} | Y_t, X_t] as an (m, p) matrix."""
    m = Y_t.shape[0]
    if Theta is None:
        Theta = theta_matrix(params.Gamma, covariates, m)
    if params.p == 0:
        return Theta
    out = Theta + X_t @ params.A.T + (Y_t @ X_t) @ params.C1.T
    if mode.directed:
        out = out + (Y_t.T @ X_t) @ params.C2.T
    return out
