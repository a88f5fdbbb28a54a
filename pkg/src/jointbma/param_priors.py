"""Parameter priors and unit information metrics.

The regression prior is a N(mu_m, c^2 Sigma_m) slab with Sigma_m a
fixed base metric and c the common dispersion scale that the
model-weight policies respond to. The normal linear route scales the
slab by the error variance (beta | sigma^2 is N(mu, sigma^2 c^2 Sigma),
the conjugate convention), and sigma^2 carries an inverse-gamma(alpha,
lambda) prior with alpha = lambda = 0 selecting the improper reference
p(sigma^2) proportional to 1/sigma^2. The Poisson route uses the slab
as an absolute variance.

The information-based calibration c^{-2} = (|V| |i|)^{-1/d} equates the
prior to one observation's worth of information, measured through the
unit Fisher matrix i.
"""
from dataclasses import dataclass, replace
import math

import numpy as np

from ._linalg import chol_factor, chol_logdet, quad_form
from .exceptions import ContractError, SpecificationError

__all__ = [
    "ParamPrior",
    "InformationSource",
    "TermBlock",
    "gprior_base",
    "blockwise_prior",
    "prior_for_linear_model",
    "linear_design",
    "unit_information_count",
    "fisher_info_poisson",
    "log_prior_density",
]


def _as_matrix(a, what):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ContractError(f"{what} must be a 2-d array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class ParamPrior:
    """N(mu, c^2 sigma_base) prior on the d coefficients of one model.

    alpha, lam parameterize the inverse-gamma prior on sigma^2 for
    normal-linear use; alpha = lam = 0 jointly select the improper
    reference prior and are ignored by the Poisson route.
    """

    mu: np.ndarray
    sigma_base: np.ndarray
    c2: float
    alpha: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        sigma = _as_matrix(self.sigma_base, "sigma_base")
        if mu.ndim != 1:
            raise ContractError(f"mu must be a vector, got shape {mu.shape}")
        d = mu.shape[0]
        if sigma.shape != (d, d):
            raise ContractError(
                f"sigma_base shape {sigma.shape} does not match mu length {d}")
        if d > 0:
            if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-10):
                raise ContractError("sigma_base must be symmetric")
            chol_factor(sigma, "sigma_base")
        c2 = float(self.c2)
        if not (c2 > 0.0) or not math.isfinite(c2):
            raise ContractError(f"c2 must be positive and finite, got {c2}")
        alpha, lam = float(self.alpha), float(self.lam)
        if (alpha > 0.0) != (lam > 0.0):
            raise ContractError(
                "alpha and lam must both be positive (proper) or both zero "
                f"(improper reference); got alpha={alpha}, lam={lam}")
        if alpha < 0.0 or lam < 0.0:
            raise ContractError("alpha and lam must be nonnegative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma_base", 0.5 * (sigma + sigma.T))
        object.__setattr__(self, "c2", c2)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self):
        return self.mu.shape[0]

    @property
    def proper_variance(self):
        return self.alpha > 0.0

    def variance(self):
        return self.c2 * self.sigma_base

    def with_c2(self, c2):
        return replace(self, c2=float(c2))


@dataclass(frozen=True)
class InformationSource:
    """Unit Fisher information i (per-observation scale) plus the sample
    size it was normalized by."""

    kind: str
    unit_matrix: np.ndarray
    n: float

    def __post_init__(self):
        mat = _as_matrix(self.unit_matrix, "information matrix")
        if mat.shape[0] != mat.shape[1]:
            raise ContractError(f"information matrix must be square, got {mat.shape}")
        n = float(self.n)
        if not (n > 0.0):
            raise ContractError(f"sample size must be positive, got {n}")
        object.__setattr__(self, "unit_matrix", 0.5 * (mat + mat.T))
        object.__setattr__(self, "n", n)

    @classmethod
    def linear(cls, X):
        X = _as_matrix(X, "design matrix")
        n = X.shape[0]
        if n < 1:
            raise ContractError("design matrix needs at least one row")
        return cls(kind="linear", unit_matrix=X.T @ X / n, n=float(n))

    @classmethod
    def poisson(cls, X, n, beta):
        return cls(kind="poisson", unit_matrix=fisher_info_poisson(X, n, beta),
                   n=float(n))

    @classmethod
    def empirical(cls, matrix, n):
        return cls(kind="empirical", unit_matrix=matrix, n=float(n))

    def matrix(self):
        return self.unit_matrix

    def logdet(self):
        return chol_logdet(self.unit_matrix, "unit information matrix")


def gprior_base(X, n=None):
    """Base metric Sigma = n (X'X)^{-1}, so that c^2 = 1 matches one
    observation's information. Requires full column rank."""
    X = _as_matrix(X, "design matrix")
    if n is None:
        n = X.shape[0]
    n = float(n)
    if not (n > 0.0):
        raise ContractError(f"sample size must be positive, got {n}")
    if X.shape[1] == 0:
        return np.zeros((0, 0))
    gram = X.T @ X
    L = chol_factor(gram, "X'X")
    eye = np.eye(X.shape[1])
    inv = np.linalg.solve(L.T, np.linalg.solve(L, eye))
    inv = 0.5 * (inv + inv.T)
    return n * inv


@dataclass(frozen=True)
class TermBlock:
    """One diagonal block of a blockwise prior: either scale2 * I or
    scale2 * gram^{-1} on a block of `size` coefficients."""

    size: int
    scale2: float
    gram: np.ndarray = None
    mean: np.ndarray = None

    def __post_init__(self):
        if self.size < 1:
            raise ContractError(f"block size must be >= 1, got {self.size}")
        if not (float(self.scale2) > 0.0):
            raise ContractError(f"block scale2 must be positive, got {self.scale2}")

    def base(self):
        if self.gram is None:
            return self.scale2 * np.eye(self.size)
        gram = _as_matrix(self.gram, "block gram matrix")
        if gram.shape != (self.size, self.size):
            raise ContractError(
                f"block gram shape {gram.shape} does not match size {self.size}")
        L = chol_factor(gram, "block gram matrix")
        inv = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(self.size)))
        return self.scale2 * 0.5 * (inv + inv.T)

    def mean_vector(self):
        if self.mean is None:
            return np.zeros(self.size)
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        if mean.shape != (self.size,):
            raise ContractError(
                f"block mean shape {mean.shape} does not match size {self.size}")
        return mean


def blockwise_prior(blocks, c2=1.0, alpha=0.0, lam=0.0):
    """Assemble a block-diagonal ParamPrior from per-term blocks. Terms
    are independent a priori; each block chooses its own scale and
    metric, so unequal-variance conventions stay expressible."""
    blocks = list(blocks)
    d = sum(b.size for b in blocks)
    sigma = np.zeros((d, d))
    mu = np.zeros(d)
    at = 0
    for b in blocks:
        sigma[at:at + b.size, at:at + b.size] = b.base()
        mu[at:at + b.size] = b.mean_vector()
        at += b.size
    return ParamPrior(mu=mu, sigma_base=sigma, c2=c2, alpha=alpha, lam=lam)


def linear_design(X, m):
    """Design matrix of a covariate-subset model: intercept column first
    when present, then the selected columns of X in index order."""
    X = _as_matrix(X, "covariate matrix")
    if m.members and m.members[-1] >= X.shape[1]:
        raise ContractError(
            f"model references column {m.members[-1]} but X has "
            f"{X.shape[1]} columns")
    cols = []
    if m.intercept:
        cols.append(np.ones((X.shape[0], 1)))
    if m.members:
        cols.append(X[:, list(m.members)])
    if not cols:
        return np.zeros((X.shape[0], 0))
    return np.hstack(cols)


def prior_for_linear_model(X, m, c2, alpha=0.0, lam=0.0, mu=None,
                           base="gprior"):
    """ParamPrior for one covariate-subset model, with the base metric
    rebuilt on that model's own design (g-prior) or the identity."""
    Xm = linear_design(X, m)
    d = Xm.shape[1]
    if base == "gprior":
        sigma = gprior_base(Xm) if d else np.zeros((0, 0))
    elif base == "identity":
        sigma = np.eye(d)
    else:
        raise SpecificationError(f"unknown base metric {base!r}")
    if mu is None:
        mu = np.zeros(d)
    return ParamPrior(mu=mu, sigma_base=sigma, c2=float(c2),
                      alpha=alpha, lam=lam)


def unit_information_count(V, i):
    """Dispersion count c with c^{-2} = (|V| |i|)^{-1/d}: the geometric
    mean, per coordinate, of prior variance against unit information."""
    V = _as_matrix(V, "prior variance V")
    i = _as_matrix(i, "unit information matrix")
    d = V.shape[0]
    if d == 0:
        raise ContractError("unit information count is undefined for d = 0")
    if i.shape != V.shape:
        raise ContractError(
            f"V shape {V.shape} does not match information shape {i.shape}")
    log_c = (chol_logdet(V, "prior variance V")
             + chol_logdet(i, "unit information matrix")) / (2.0 * d)
    return math.exp(log_c)


def fisher_info_poisson(X, n, beta):
    """Unit Fisher information X' Diag(exp(X beta)) X / n of the Poisson
    log-linear model at beta."""
    X = _as_matrix(X, "design matrix")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape != (X.shape[1],):
        raise ContractError(
            f"beta shape {beta.shape} does not match design columns "
            f"{X.shape[1]}")
    n = float(n)
    if not (n > 0.0):
        raise ContractError(f"sample size must be positive, got {n}")
    eta = X @ beta
    if eta.size and np.max(eta) > 700.0:
        raise ContractError("linear predictor overflows exp(); rescale first")
    lam0 = np.exp(eta)
    return (X.T * lam0) @ X / n


def log_prior_density(beta, prior):
    """Log N(mu, c^2 sigma_base) density at beta. d = 0 returns 0 (the
    point mass convention for the empty coefficient vector)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.shape != (prior.d,):
        raise ContractError(
            f"beta shape {beta.shape} does not match prior dimension {prior.d}")
    if prior.d == 0:
        return 0.0
    V = prior.variance()
    L = chol_factor(V, "prior variance V")
    ld = 2.0 * float(np.sum(np.log(np.diag(L))))
    q = quad_form(L, beta - prior.mu)
    return -0.5 * (prior.d * math.log(2.0 * math.pi) + ld + q)
