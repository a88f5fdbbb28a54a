"""Exact marginal likelihoods for normal linear models.

Conjugate setup: y | beta, sigma^2 ~ N(X_m beta, sigma^2 I),
beta | sigma^2 ~ N(mu, sigma^2 V) with V = c^2 Sigma_m, and an
inverse-gamma(alpha, lambda) prior on sigma^2 (alpha = lambda = 0 is the
improper reference). The marginal likelihood is available in closed
form:

    log f(y | m) = -(n/2) log pi + lgam(alpha + n/2) - lgam(alpha)
                   + alpha log(2 lambda) + (1/2) log|V*| - (1/2) log|V|
                   - (alpha + n/2) log(2 lambda + s)

with V* = (V^{-1} + X'X)^{-1}, beta~ = V* (V^{-1} mu + X'y) and
s = y'y + mu'V^{-1}mu - beta~'(V*)^{-1}beta~. Under the improper
reference the lgam(alpha) and alpha log(2 lambda) terms are dropped and
the value is defined only up to a constant shared by all models on the
same data, which the 'improper' convention tag records.

The g-prior (mu = 0, Sigma_m = n (X_m'X_m)^{-1}) collapses the
determinant ratio to -(d/2) log(1 + n c^2) and s to a function of the
fit R^2 alone, which is what makes whole-space sweeps over 2^p models
cheap: one batched least-squares pass yields every marginal for every
dispersion scale.
"""
from dataclasses import dataclass
from math import lgamma, log, pi
import math

import numpy as np

from ._linalg import chol_factor, chol_solve, inv_pd, log_sum_exp
from .averaging import LogMarginal, ModelPosterior
from .exceptions import ContractError, DegenerateDataError, SpecificationError
from .model_space import enumerate_linear_models
from .param_priors import linear_design

__all__ = [
    "LinearDataset",
    "LinearPosterior",
    "CvScore",
    "AllSubsets",
    "SweepResult",
    "posterior_moments",
    "log_marginal_nig",
    "log_marginal_gprior_closed",
    "loo_predictive_exact",
    "sample_joint_posterior",
    "cv_score",
    "all_subsets_stats",
    "gprior_log_marginals",
    "gprior_sweep",
]


@dataclass(frozen=True)
class LinearDataset:
    """Response vector and covariate matrix (without intercept column).
    labels optionally names the covariate columns, e.g. from a CSV
    header; empty means unnamed."""

    y: np.ndarray
    X: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        X = np.asarray(self.X, dtype=float)
        if y.ndim != 1:
            raise ContractError(f"y must be a vector, got shape {y.shape}")
        if X.ndim != 2:
            raise ContractError(f"X must be a matrix, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise ContractError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if y.shape[0] < 1:
            raise ContractError("need at least one observation")
        if not np.all(np.isfinite(y)) or not np.all(np.isfinite(X)):
            raise ContractError("data contain non-finite values")
        labels = tuple(str(name) for name in self.labels)
        if labels and len(labels) != X.shape[1]:
            raise ContractError(
                f"{len(labels)} labels for {X.shape[1]} covariate columns")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def yty(self):
        return float(self.y @ self.y)

    @property
    def tss(self):
        yc = self.y - self.y.mean()
        return float(yc @ yc)

    def drop(self, j):
        j = int(j)
        if not 0 <= j < self.n:
            raise ContractError(f"row {j} out of range for n = {self.n}")
        return LinearDataset(y=np.delete(self.y, j),
                             X=np.delete(self.X, j, axis=0),
                             labels=self.labels)


@dataclass(frozen=True)
class LinearPosterior:
    """Conjugate posterior of one model: beta | sigma^2, y is
    N(beta_tilde, sigma^2 Vstar), sigma^2 | y is
    inverse-gamma(a_post, lambda_post)."""

    m: object
    Vstar: np.ndarray
    beta_tilde: np.ndarray
    a_post: float
    lambda_post: float
    logml: LogMarginal


def _sigma2_head(n, alpha, lam):
    # Terms of the marginal that depend only on the sigma^2 prior; the
    # improper reference drops the prior normalizer it does not have.
    if (alpha > 0.0) != (lam > 0.0):
        raise ContractError(
            f"alpha and lam must both be positive or both zero, got "
            f"alpha={alpha}, lam={lam}")
    if alpha < 0.0 or lam < 0.0:
        raise ContractError("alpha and lam must be nonnegative")
    if alpha > 0.0:
        return lgamma(alpha + 0.5 * n) - lgamma(alpha) + alpha * log(2.0 * lam), \
            "proper"
    return lgamma(0.5 * n), "improper"


def posterior_moments(data, m, prior):
    """Full conjugate update of one model, marginal likelihood included."""
    Xm = linear_design(data.X, m)
    d = Xm.shape[1]
    if prior.d != d:
        raise ContractError(
            f"prior dimension {prior.d} does not match model dimension {d}")
    n = data.n
    y = data.y
    yty = data.yty

    if d > 0:
        V = prior.variance()
        v_inv = inv_pd(V, "prior variance V")
        ld_v = 2.0 * float(np.sum(np.log(np.diag(chol_factor(V, "prior variance V")))))
        prec = v_inv + Xm.T @ Xm
        L_prec = chol_factor(prec, "posterior precision")
        b = v_inv @ prior.mu + Xm.T @ y
        beta_tilde = chol_solve(L_prec, b)
        Vstar = chol_solve(L_prec, np.eye(d))
        Vstar = 0.5 * (Vstar + Vstar.T)
        ld_vstar = -2.0 * float(np.sum(np.log(np.diag(L_prec))))
        s = yty + float(prior.mu @ (v_inv @ prior.mu)) - float(beta_tilde @ b)
    else:
        beta_tilde = np.zeros(0)
        Vstar = np.zeros((0, 0))
        ld_v = ld_vstar = 0.0
        s = yty

    # s is a residual sum of squares in exact arithmetic; tolerate
    # rounding at perfect fit but not gross violations.
    if s < -1e-8 * (yty + 1.0):
        raise ContractError(f"negative residual quantity s = {s}")
    s = max(s, 0.0)

    head, convention = _sigma2_head(n, prior.alpha, prior.lam)
    a_post = prior.alpha + 0.5 * n
    lambda_post = prior.lam + 0.5 * s
    if lambda_post <= 0.0:
        raise DegenerateDataError(
            "perfect fit under the improper reference prior leaves the "
            "marginal likelihood undefined; add observations or use a "
            "proper sigma^2 prior")
    value = (-0.5 * n * log(pi) + head + 0.5 * (ld_vstar - ld_v)
             - a_post * log(2.0 * lambda_post))
    logml = LogMarginal(value=value, method="exact_nig", convention=convention)
    return LinearPosterior(m=m, Vstar=Vstar, beta_tilde=beta_tilde,
                           a_post=a_post, lambda_post=lambda_post,
                           logml=logml)


def log_marginal_nig(data, m, prior):
    return posterior_moments(data, m, prior).logml


def _centered_fit(data, members):
    """R^2 of the centered regression on the given covariate columns."""
    yc = data.y - data.y.mean()
    tss = float(yc @ yc)
    if tss <= 0.0:
        raise DegenerateDataError("response is constant; R^2 is undefined")
    if not members:
        return 0.0, tss
    Xs = data.X[:, list(members)]
    Xc = Xs - Xs.mean(axis=0)
    gram = Xc.T @ Xc
    rhs = Xc.T @ yc
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError:
        raise ContractError(
            f"covariate columns {members} are collinear after centering")
    ess = float(coef @ rhs)
    r2 = min(max(ess / tss, 0.0), 1.0)
    return r2, tss


def log_marginal_gprior_closed(data, m, c2, alpha=0.0, lam=0.0):
    """Closed-form g-prior marginal:
    -(d/2) log(1 + n c^2) - (alpha + n/2) log(2 lambda + s(R^2)) plus the
    sigma^2 head, with s = y'y/(1 + n c^2) + w * TSS * (1 - R^2) and
    w = n c^2 / (1 + n c^2). Exactly equals the generic route with
    mu = 0 and Sigma = n (X_m'X_m)^{-1} over all model columns. The fit
    is centered, so the model must contain the intercept."""
    if not m.intercept:
        raise ContractError(
            "the closed-form g-prior marginal requires the intercept in the "
            "model; use the generic route for no-intercept models")
    if m.members and m.members[-1] >= data.p:
        raise ContractError(
            f"model references column {m.members[-1]} but X has {data.p} "
            "columns")
    c2 = float(c2)
    if not (c2 > 0.0) or not math.isfinite(c2):
        raise ContractError(f"c2 must be positive and finite, got {c2}")
    n = data.n
    r2, tss = _centered_fit(data, m.members)
    head, convention = _sigma2_head(n, float(alpha), float(lam))
    nc2 = n * c2
    w = nc2 / (1.0 + nc2)
    s = data.yty / (1.0 + nc2) + w * tss * (1.0 - r2)
    two_lam_s = 2.0 * float(lam) + s
    if two_lam_s <= 0.0:
        raise DegenerateDataError(
            "perfect fit under the improper reference prior leaves the "
            "marginal likelihood undefined")
    value = (-0.5 * n * log(pi) + head - 0.5 * m.d * math.log1p(nc2)
             - (float(alpha) + 0.5 * n) * log(two_lam_s))
    return LogMarginal(value=value, method="closed_g", convention=convention)


def loo_predictive_exact(data, m, prior, j):
    """log f(y_j | y_{-j}, m) as a ratio of marginal likelihoods. The
    improper-convention offsets cancel, so the predictive is proper
    under either convention. The prior is held fixed, not refit."""
    full = log_marginal_nig(data, m, prior).value
    rest = log_marginal_nig(data.drop(j), m, prior).value
    return full - rest


def sample_joint_posterior(data, m, prior, size, rng):
    """Exact i.i.d. draws of (beta, sigma^2) from one model's posterior:
    sigma^2 from its inverse-gamma marginal, beta conditionally normal."""
    size = int(size)
    if size < 1:
        raise ContractError(f"size must be >= 1, got {size}")
    post = posterior_moments(data, m, prior)
    tau = rng.gamma(shape=post.a_post, scale=1.0 / post.lambda_post, size=size)
    sigma2 = 1.0 / tau
    d = post.beta_tilde.shape[0]
    if d == 0:
        return np.zeros((size, 0)), sigma2
    L = chol_factor(post.Vstar, "posterior variance Vstar")
    z = rng.standard_normal((size, d))
    beta = post.beta_tilde + (z @ L.T) * np.sqrt(sigma2)[:, None]
    return beta, sigma2


@dataclass(frozen=True)
class CvScore:
    """Leave-one-out score S = -sum_j log f(y_j | y_{-j}) under the
    model-averaged predictive."""

    total: float
    per_obs: np.ndarray
    mode: str


def cv_score(posterior, data, priors, mode="exact", rng=None, num_draws=2000):
    """Model-averaged leave-one-out predictive score.

    The averaged predictive at observation j satisfies

        log f(y_j | y_{-j}) = lse(lw) - lse(lw - lpd_j)

    where lw are the (possibly unnormalized) log posterior model weights
    on the full data and lpd_j the per-model log predictives; the second
    term re-weights each model by how much observation j supported it.
    mode 'exact' evaluates lpd by marginal-likelihood ratios; 'gelfand'
    estimates it from full-posterior draws as the inverse of the
    posterior mean of the inverse observation density, which targets the
    same full-data-weight decomposition.
    """
    models = posterior.models
    lw = posterior.log_probs
    for m in models:
        if m not in priors:
            raise ContractError(f"no prior supplied for model {m.label()}")
    n = data.n
    lpd = np.zeros((len(models), n))
    if mode == "exact":
        for mi, m in enumerate(models):
            for j in range(n):
                lpd[mi, j] = loo_predictive_exact(data, m, priors[m], j)
    elif mode == "gelfand":
        if rng is None:
            raise ContractError("mode 'gelfand' requires an rng")
        num_draws = int(num_draws)
        if num_draws < 2:
            raise ContractError(f"num_draws must be >= 2, got {num_draws}")
        for mi, m in enumerate(models):
            beta, sigma2 = sample_joint_posterior(data, m, priors[m],
                                                  num_draws, rng)
            Xm = linear_design(data.X, m)
            mean = beta @ Xm.T if Xm.shape[1] else np.zeros((num_draws, n))
            # log N(y_j | mean_tj, sigma2_t) for every draw and column
            resid2 = (data.y[None, :] - mean) ** 2
            log_dens = -0.5 * (np.log(2.0 * pi * sigma2)[:, None]
                               + resid2 / sigma2[:, None])
            for j in range(n):
                lpd[mi, j] = log(num_draws) - log_sum_exp(-log_dens[:, j])
    else:
        raise SpecificationError(
            f"unknown cv mode {mode!r}; expected 'exact' or 'gelfand'")
    lse_lw = log_sum_exp(lw)
    per_obs = np.array([lse_lw - log_sum_exp(lw - lpd[:, j])
                        for j in range(n)])
    return CvScore(total=float(-np.sum(per_obs)), per_obs=per_obs, mode=mode)


@dataclass(frozen=True)
class AllSubsets:
    """Sufficient statistics for every covariate subset: model order is
    canonical (dimension, then lexicographic members), aligned with the
    d and r2 arrays."""

    models: tuple
    d: np.ndarray
    r2: np.ndarray
    n: int
    yty: float
    tss: float


def all_subsets_stats(data):
    """One batched pass computing R^2 for all 2^p intercept-containing
    subsets. Subsets are grouped by size; each group's normal equations
    are solved as one stacked batch."""
    p = data.p
    models = enumerate_linear_models(p, include_intercept=True)
    yc = data.y - data.y.mean()
    tss = float(yc @ yc)
    if tss <= 0.0:
        raise DegenerateDataError("response is constant; R^2 is undefined")
    Xc = data.X - data.X.mean(axis=0)
    G = Xc.T @ Xc
    g = Xc.T @ yc

    by_size = {}
    for pos, m in enumerate(models):
        by_size.setdefault(len(m.members), []).append(pos)
    r2 = np.zeros(len(models))
    for k, positions in by_size.items():
        if k == 0:
            continue
        idx = np.array([models[pos].members for pos in positions], dtype=int)
        Gsub = G[idx[:, :, None], idx[:, None, :]]
        gsub = g[idx]
        try:
            # Explicit trailing axis keeps the solve a batched vector solve.
            coef = np.linalg.solve(Gsub, gsub[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            raise ContractError(
                "collinear covariates: some subset's normal equations are "
                "singular")
        ess = np.einsum("ij,ij->i", coef, gsub)
        r2[positions] = np.clip(ess / tss, 0.0, 1.0)
    d = np.array([m.d for m in models], dtype=int)
    return AllSubsets(models=tuple(models), d=d, r2=r2, n=data.n,
                      yty=data.yty, tss=tss)


def gprior_log_marginals(stats, c2, alpha=0.0, lam=0.0):
    """Vector of closed-form g-prior log marginals over all subsets at
    one dispersion scale."""
    c2 = float(c2)
    if not (c2 > 0.0) or not math.isfinite(c2):
        raise ContractError(f"c2 must be positive and finite, got {c2}")
    alpha, lam = float(alpha), float(lam)
    n = stats.n
    head, convention = _sigma2_head(n, alpha, lam)
    nc2 = n * c2
    w = nc2 / (1.0 + nc2)
    s = stats.yty / (1.0 + nc2) + w * stats.tss * (1.0 - stats.r2)
    two_lam_s = 2.0 * lam + s
    if np.any(two_lam_s <= 0.0):
        raise DegenerateDataError(
            "perfect fit under the improper reference prior leaves some "
            "marginals undefined")
    values = (-0.5 * n * log(pi) + head - 0.5 * stats.d * math.log1p(nc2)
              - (alpha + 0.5 * n) * np.log(two_lam_s))
    return values, convention


@dataclass(frozen=True)
class SweepResult:
    """Posterior over all subsets along a grid of dispersion scales."""

    models: tuple
    c2_grid: np.ndarray
    log_weights: np.ndarray
    log_posterior: np.ndarray
    convention: str

    def posterior_at(self, i):
        return ModelPosterior(models=self.models,
                              log_probs=self.log_posterior[i],
                              convention=self.convention)

    def prob_trace(self, m):
        for pos, model in enumerate(self.models):
            if model == m:
                return np.exp(self.log_posterior[:, pos])
        raise ContractError(f"model {m.label()} not in sweep support")

    def map_models(self):
        return [self.models[i] for i in np.argmax(self.log_posterior, axis=1)]


def gprior_sweep(data, c2_grid, policy, alpha=0.0, lam=0.0):
    """Whole-space posterior as a function of the dispersion scale.

    Supports the policy variants whose weight depends on the model only
    through d: uniform, adjusted_c, and adjusted_info. For the g-prior
    base the information adjustment is exactly d log c (the base metric
    inverts the unit information), so both adjusted variants share one
    code path. Other variants need per-model matrices; use the generic
    route for those.
    """
    c2_grid = np.atleast_1d(np.asarray(c2_grid, dtype=float))
    if c2_grid.size == 0 or np.any(c2_grid <= 0.0):
        raise ContractError("c2_grid must contain positive scales")
    stats = all_subsets_stats(data)
    baseline = np.array([policy.baseline.log_p(m) for m in stats.models])
    if policy.variant == "uniform":
        d_scale = 0.0
    elif policy.variant in ("adjusted_c", "adjusted_info"):
        d_scale = 0.5 * stats.d
    else:
        raise SpecificationError(
            f"policy variant {policy.variant!r} needs per-model matrices; "
            "the closed-form sweep supports uniform, adjusted_c, and "
            "adjusted_info")
    log_weights = np.zeros((c2_grid.size, len(stats.models)))
    convention = None
    for gi, c2 in enumerate(c2_grid):
        lm, convention = gprior_log_marginals(stats, c2, alpha, lam)
        log_weights[gi] = baseline + d_scale * log(c2) + lm
    log_post = log_weights - np.array([log_sum_exp(row)
                                       for row in log_weights])[:, None]
    return SweepResult(models=stats.models, c2_grid=c2_grid,
                       log_weights=log_weights, log_posterior=log_post,
                       convention=convention)
