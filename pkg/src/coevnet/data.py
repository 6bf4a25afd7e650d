"""Core data containers: network series, attribute series, covariates, modes, parameters.

Conventions used throughout the package:

* time is the leading axis, ``t = 0, ..., n`` (so a series holds ``n + 1``
  slices and ``n`` observed transitions),
* node ids are 0-based internally (1-based in CSV files),
* sociomatrix diagonals are stored as 0 and never read,
* unordered dyads are enumerated ``(0,1), (0,2), ..., (m-2,m-1)`` and ordered
  dyads ``(0,1), ..., (0,m-1), (1,0), (1,2), ...`` (row-major, diagonal
  skipped).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNDIRECTED = "undirected"
DIRECTED = "directed"
GAUSSIAN = "gaussian"
ORDINAL = "ordinal"
LATENT = "latent"


class CoevError(Exception):
    """Base class for all package errors."""


class ValidationError(CoevError, ValueError):
    """Invalid inputs, shapes, or mode combinations.

    ``violations`` collects every individual problem found, not just the
    first one.
    """

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DataFormatError(ValidationError):
    """Malformed input files (carries file/line context in the message)."""


class InsufficientDataError(ValidationError):
    """Not enough observations for the requested operation."""


class NumericalError(CoevError, RuntimeError):
    """Numerical failure (non-PD conditional, failed factorization, ...)."""


class RankDeficiencyError(NumericalError):
    """Singular or ill-conditioned normal equations."""

    def __init__(self, message, columns=None):
        self.columns = list(columns) if columns is not None else []
        if self.columns:
            message = f"{message} (near-collinear columns: {', '.join(self.columns)})"
        super().__init__(message)


class StabilityError(NumericalError):
    """Simulated dynamics exceeded the magnitude guard."""


def _readonly(arr, dtype=float):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def dyad_pairs(m, directed):
    """Row/column index arrays for the fixed dyad enumeration."""
    if directed:
        ii, jj = np.nonzero(~np.eye(m, dtype=bool))
    else:
        iu = np.triu_indices(m, k=1)
        ii, jj = iu[0], iu[1]
    return ii, jj


def n_dyads(m, directed):
    return m * (m - 1) if directed else m * (m - 1) // 2


def dyad_index(i, j, m, directed):
    """Position of dyad (i, j) in the fixed enumeration."""
    if i == j:
        raise ValidationError(f"diagonal entry ({i},{i}) is not a dyad")
    if directed:
        return i * (m - 1) + (j if j < i else j - 1)
    if i > j:
        i, j = j, i
    # pairs (0,1)..(0,m-1) come first, then (1,2).. etc.
    return i * m - i * (i + 1) // 2 + (j - i - 1)


@dataclass(frozen=True)
class NetworkSeries:
    """Time series of sociomatrices, shape ``(n + 1, m, m)``.

    ``missing`` is an optional boolean mask (True = unobserved entry); masked
    and diagonal entries are stored as 0. Undirected series must be exactly
    symmetric in both values and mask; asymmetric input is rejected rather
    than symmetrized.
    """

    values: np.ndarray
    directed: bool = False
    missing: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        problems = []
        if vals.ndim != 3 or vals.shape[1] != vals.shape[2]:
            raise ValidationError(
                f"network values must have shape (n+1, m, m), got {vals.shape}"
            )
        T, m, _ = vals.shape
        if m < 2:
            problems.append(f"need at least 2 nodes, got m={m}")
        diag = np.arange(m)
        vals[:, diag, diag] = 0.0
        miss = self.missing
        if miss is not None:
            miss = np.array(miss, dtype=bool, copy=True)
            if miss.shape != vals.shape:
                problems.append(
                    f"missing mask shape {miss.shape} != values shape {vals.shape}"
                )
            else:
                miss[:, diag, diag] = False
                vals[miss] = 0.0
        if not np.all(np.isfinite(vals)):
            problems.append("network values contain non-finite entries")
        if not self.directed:
            if not np.array_equal(vals, vals.transpose(0, 2, 1)):
                problems.append(
                    "undirected network series is not symmetric; "
                    "asymmetric input is rejected, not symmetrized"
                )
            if miss is not None and not np.array_equal(
                miss, miss.transpose(0, 2, 1)
            ):
                problems.append("undirected missing mask is not symmetric")
        if problems:
            raise ValidationError(problems)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if miss is not None:
            miss.setflags(write=False)
        object.__setattr__(self, "missing", miss)

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
        return self.missing is not None and bool(self.missing.any())


@dataclass(frozen=True)
class AttributeSeries:
    """Time series of nodal attribute matrices, shape ``(n + 1, m, p)``.

    ``p = 0`` is allowed and means the model has no attribute process.
    """

    values: np.ndarray
    missing: np.ndarray | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != 3:
            raise ValidationError(
                f"attribute values must have shape (n+1, m, p), got {vals.shape}"
            )
        problems = []
        miss = self.missing
        if miss is not None:
            miss = np.array(miss, dtype=bool, copy=True)
            if miss.shape != vals.shape:
                problems.append(
                    f"missing mask shape {miss.shape} != values shape {vals.shape}"
                )
            else:
                vals[miss] = 0.0
        if not np.all(np.isfinite(vals)):
            problems.append("attribute values contain non-finite entries")
        if problems:
            raise ValidationError(problems)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if miss is not None:
            miss.setflags(write=False)
        object.__setattr__(self, "missing", miss)

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
        return self.missing is not None and bool(self.missing.any())

    @staticmethod
    def empty(n_plus_1, m):
        """A p = 0 attribute series (network-only model)."""
        return AttributeSeries(np.zeros((n_plus_1, m, 0)))


def check_paired(network, attributes):
    problems = []
    if attributes.m != network.m:
        problems.append(
            f"attribute node count {attributes.m} != network node count {network.m}"
        )
    if attributes.n_plus_1 != network.n_plus_1:
        problems.append(
            f"attribute time points {attributes.n_plus_1} != "
            f"network time points {network.n_plus_1}"
        )
    if problems:
        raise ValidationError(problems)


@dataclass(frozen=True)
class CovariateSpec:
    """Exogenous dyad and node covariates.

    ``dyad`` has shape ``(m, m, q_dyad)`` (entry ``[i, j]`` is the covariate
    vector of the ordered pair; must be symmetric in (i, j) for undirected
    models). ``node`` has shape ``(m, q_node)``. Either may be None, in
    which case the design falls back to saturated one-hot intercepts: one
    free intercept per dyad / per node.
    """

    dyad: np.ndarray | None = None
    node: np.ndarray | None = None

    def __post_init__(self):
        if self.dyad is not None:
            d = _readonly(self.dyad)
            if d.ndim != 3 or d.shape[0] != d.shape[1]:
                raise ValidationError(
                    f"dyad covariates must have shape (m, m, q), got {d.shape}"
                )
            object.__setattr__(self, "dyad", d)
        if self.node is not None:
            s = _readonly(self.node)
            if s.ndim != 2:
                raise ValidationError(
                    f"node covariates must have shape (m, q), got {s.shape}"
                )
            object.__setattr__(self, "node", s)

    def q_dyad(self, m, directed):
        if self.dyad is None:
            return n_dyads(m, directed)
        return self.dyad.shape[2]

    def q_node(self, m):
        if self.node is None:
            return m
        return self.node.shape[1]

    def dyad_design(self, m, directed):
        """Dense (n_dyads, q_dyad) covariate block, or None when saturated."""
        if self.dyad is None:
            return None
        if self.dyad.shape[0] != m:
            raise ValidationError(
                f"dyad covariates are for m={self.dyad.shape[0]}, data has m={m}"
            )
        if not directed:
            if not np.array_equal(self.dyad, self.dyad.transpose(1, 0, 2)):
                raise ValidationError(
                    "dyad covariates must satisfy s_ij = s_ji in undirected mode"
                )
        ii, jj = dyad_pairs(m, directed)
        return self.dyad[ii, jj, :]

    def node_design(self, m):
        """Dense (m, q_node) covariate block; identity when saturated."""
        if self.node is None:
            return np.eye(m)
        if self.node.shape[0] != m:
            raise ValidationError(
                f"node covariates are for m={self.node.shape[0]}, data has m={m}"
            )
        return np.asarray(self.node)


@dataclass(frozen=True)
class ModelMode:
    """Which variant of the coevolution model is in play."""

    direction: str = UNDIRECTED
    network_scale: str = GAUSSIAN
    attribute_scale: str = GAUSSIAN

    def __post_init__(self):
        problems = []
        if self.direction not in (UNDIRECTED, DIRECTED):
            problems.append(f"unknown direction {self.direction!r}")
        if self.network_scale not in (GAUSSIAN, ORDINAL):
            problems.append(f"unknown network scale {self.network_scale!r}")
        if self.attribute_scale not in (GAUSSIAN, ORDINAL, LATENT):
            problems.append(f"unknown attribute scale {self.attribute_scale!r}")
        if self.attribute_scale == LATENT and self.direction == DIRECTED:
            problems.append(
                "latent attributes are supported for undirected networks only"
            )
        if problems:
            raise ValidationError(problems)

    @property
    def directed(self):
        return self.direction == DIRECTED

    @property
    def latent(self):
        return self.attribute_scale == LATENT

    @property
    def ordinal_network(self):
        return self.network_scale == ORDINAL

    @property
    def ordinal_attributes(self):
        return self.attribute_scale == ORDINAL

    @property
    def sigma2_fixed(self):
        """Ordinal networks pin the error variance at 1 for identifiability."""
        return self.ordinal_network

    @property
    def Sigma_fixed(self):
        """Latent or ordinal attributes pin Sigma = I for identifiability."""
        return self.attribute_scale in (LATENT, ORDINAL)

    @property
    def homophily_kind(self):
        """How x_i' H x_j is parameterized: which free entries H has."""
        if self.latent:
            return "diagonal"
        return "full" if self.directed else "symmetric"


@dataclass(frozen=True)
class McrParams:
    """Full parameter set of the coevolution model.

    gamma   network intercept/covariate coefficients (mu_ij = gamma' s_ij)
    alpha1  network autocorrelation
    alpha2  reciprocity (directed only, else None)
    H       homophily matrix (p, p); symmetric if undirected, diagonal in
            latent mode
    Gamma   attribute intercept/covariate coefficients, (p, q_node)
    A       attribute autocorrelation, (p, p)
    C1      contagion, (p, p)
    C2      receiver-side contagion (directed only, else None)
    sigma2  network noise variance (1 when the network is ordinal)
    Sigma   attribute noise covariance, (p, p) (I when attributes are
            latent or ordinal)
    """

    gamma: np.ndarray
    alpha1: float
    H: np.ndarray
    Gamma: np.ndarray
    A: np.ndarray
    C1: np.ndarray
    sigma2: float = 1.0
    Sigma: np.ndarray | None = None
    alpha2: float | None = None
    C2: np.ndarray | None = None

    def __post_init__(self):
        gamma = _readonly(np.atleast_1d(self.gamma))
        H = _readonly(np.atleast_2d(self.H))
        p = H.shape[0]
        Gamma = np.asarray(self.Gamma, dtype=float)
        if Gamma.ndim != 2:
            Gamma = Gamma.reshape(p, 0) if Gamma.size == 0 \
                else np.atleast_2d(Gamma)
        Gamma = _readonly(Gamma)
        A = _readonly(np.asarray(self.A, dtype=float).reshape(p, p))
        C1 = _readonly(np.asarray(self.C1, dtype=float).reshape(p, p))
        Sigma = np.eye(p) if self.Sigma is None else np.asarray(self.Sigma, float)
        Sigma = _readonly(Sigma.reshape(p, p))
        C2 = self.C2
        if C2 is not None:
            C2 = _readonly(np.asarray(C2, dtype=float).reshape(p, p))
        problems = []
        if H.shape != (p, p):
            problems.append(f"H must be square, got {H.shape}")
        if Gamma.shape[0] != p:
            problems.append(f"Gamma must have p={p} rows, got {Gamma.shape}")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            problems.append(f"sigma2 must be positive, got {self.sigma2}")
        if (self.alpha2 is None) != (C2 is None):
            problems.append("alpha2 and C2 must both be set (directed) or both None")
        if problems:
            raise ValidationError(problems)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C1", C1)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "C2", C2)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "alpha1", float(self.alpha1))
        if self.alpha2 is not None:
            object.__setattr__(self, "alpha2", float(self.alpha2))

    @property
    def p(self):
        return self.H.shape[0]

    @property
    def q_dyad(self):
        return self.gamma.shape[0]

    @property
    def q_node(self):
        return self.Gamma.shape[1]

    @property
    def directed(self):
        return self.alpha2 is not None

    # undirected aliases
    @property
    def alpha(self):
        return self.alpha1

    @property
    def C(self):
        return self.C1

    def validate_for_mode(self, mode):
        problems = []
        if mode.directed != self.directed:
            problems.append(
                "directed mode requires alpha2/C2, undirected forbids them"
            )
        if not mode.directed and self.p > 0:
            if not np.allclose(self.H, self.H.T, atol=1e-10):
                problems.append("H must be symmetric for undirected models")
        if mode.latent and self.p > 0:
            if np.any(self.H != np.diag(np.diag(self.H))):
                problems.append("H must be diagonal in latent-attribute mode")
        if mode.Sigma_fixed and self.p > 0:
            if not np.array_equal(self.Sigma, np.eye(self.p)):
                problems.append(
                    "Sigma must be the identity in latent/ordinal-attribute mode"
                )
        if mode.sigma2_fixed and self.sigma2 != 1.0:
            problems.append("sigma2 must be 1 when the network is ordinal")
        if problems:
            raise ValidationError(problems)
        return self
