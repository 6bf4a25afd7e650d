"""Shared instance builders and independent brute-force oracles.

The oracles here deliberately avoid the package's design/accumulation code:
regressors are rebuilt with explicit loops straight from the model
equations, and estimates come from numpy's stacked least squares.
"""

import numpy as np
import pytest

from coevnet import (
    AttributeSeries,
    CovariateSpec,
    McrParams,
    ModelMode,
    NetworkSeries,
    SimConfig,
    n_dyads,
    simulate,
)


def stable_params(rng, m, p, directed=False, sigma2=0.5, scale=1.0,
                  q_dyad=None, q_node=None):
    """Random parameters in the stable regime of the coupled recursion."""
    q_dyad = n_dyads(m, directed) if q_dyad is None else q_dyad
    q_node = m if q_node is None else q_node
    H = rng.normal(0, 0.12 * scale, (p, p))
    if not directed:
        H = 0.5 * (H + H.T)
    A = rng.normal(0, 0.1, (p, p)) + 0.3 * np.eye(p)
    kwargs = dict(
        gamma=rng.normal(0, 0.3, q_dyad),
        alpha1=0.35 if not directed else 0.3,
        H=H,
        Gamma=rng.normal(0, 0.3, (p, q_node)),
        A=A,
        C1=rng.normal(0, 0.015, (p, p)),
        sigma2=sigma2,
        Sigma=_random_spd(rng, p),
    )
    if directed:
        kwargs["alpha2"] = 0.2
        kwargs["C2"] = rng.normal(0, 0.01, (p, p))
    return McrParams(**kwargs)


def _random_spd(rng, p):
    if p == 0:
        return np.zeros((0, 0))
    G = rng.normal(0, 0.3, (p, p))
    return G @ G.T + 0.3 * np.eye(p)


def make_instance(seed, m=5, n=4, p=2, directed=False, sigma2=0.5):
    """Simulated (network, attributes, params, mode) tuple."""
    rng = np.random.default_rng(seed)
    mode = ModelMode(direction="directed" if directed else "undirected")
    params = stable_params(rng, m, p, directed, sigma2=sigma2)
    network, attributes, _ = simulate(
        SimConfig(m=m, n=n, params=params, mode=mode, seed=seed + 1)
    )
    return network, attributes, params, mode


# ---------------------------------------------------------------------------
# independent design-row construction (explicit loops, no package calls)

def naive_hom_regressor(xi, xj, kind):
    p = len(xi)
    out = []
    if kind == "diagonal":
        return [xi[k] * xj[k] for k in range(p)]
    if kind == "full":
        # pairs with h = vec(H) column-major: entry (b*p + a) is H[a, b]
        for b in range(p):
            for a in range(p):
                out.append(xj[b] * xi[a])
        return out
    for b in range(p):
        out.append(xi[b] * xj[b])
        for a in range(b + 1, p):
            out.append(xi[a] * xj[b] + xi[b] * xj[a])
    return out


def naive_network_rows(network, attributes, mode, dyad_cov=None,
                       include_ar=True):
    """Stacked (rows, y) for the network regression, built by literal loops."""
    Y, X = network.values, attributes.values
    m, T, p = network.m, network.n_plus_1, attributes.p
    kind = mode.homophily_kind
    rows, ys = [], []
    for t in range(1, T):
        for i in range(m):
            for j in range(m):
                if i == j:
                    continue
                if not mode.directed and j <= i:
                    continue
                if dyad_cov is None:
                    s = [0.0] * n_dyads(m, mode.directed)
                    s[_naive_dyad_index(i, j, m, mode.directed)] = 1.0
                else:
                    s = list(dyad_cov[i, j])
                row = list(s)
                if include_ar:
                    row.append(Y[t - 1, i, j])
                    if mode.directed:
                        row.append(Y[t - 1, j, i])
                row += naive_hom_regressor(X[t - 1, i], X[t - 1, j], kind)
                rows.append(row)
                ys.append(Y[t, i, j])
    return np.asarray(rows), np.asarray(ys)


def _naive_dyad_index(i, j, m, directed):
    idx = 0
    for a in range(m):
        for b in range(m):
            if a == b:
                continue
            if not directed and b <= a:
                continue
            if a == i and b == j:
                return idx
            idx += 1
    raise AssertionError


def naive_attribute_rows(network, attributes, mode, node_cov=None,
                         include_contagion=True):
    """Stacked (rows, targets) for the attribute regression."""
    Y, X = network.values, attributes.values
    m, T, p = network.m, network.n_plus_1, attributes.p
    rows, targets = [], []
    for t in range(1, T):
        for i in range(m):
            if node_cov is None:
                s = [0.0] * m
                s[i] = 1.0
            else:
                s = list(node_cov[i])
            row = list(s) + list(X[t - 1, i])
            if include_contagion:
                out_sum = [
                    sum(Y[t - 1, i, l] * X[t - 1, l, k] for l in range(m))
                    for k in range(p)
                ]
                row += out_sum
                if mode.directed:
                    in_sum = [
                        sum(Y[t - 1, l, i] * X[t - 1, l, k] for l in range(m))
                        for k in range(p)
                    ]
                    row += in_sum
            rows.append(row)
            targets.append(X[t, i])
    return np.asarray(rows), np.asarray(targets)


def stacked_lstsq_network(network, attributes, mode, dyad_cov=None,
                          include_ar=True):
    rows, ys = naive_network_rows(network, attributes, mode, dyad_cov,
                                  include_ar)
    beta, _, _, _ = np.linalg.lstsq(rows, ys, rcond=None)
    return beta


def stacked_lstsq_attributes(network, attributes, mode, node_cov=None,
                             include_contagion=True):
    rows, targets = naive_attribute_rows(network, attributes, mode, node_cov,
                                         include_contagion)
    Bt, _, _, _ = np.linalg.lstsq(rows, targets, rcond=None)
    return Bt.T


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
