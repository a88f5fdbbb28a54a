"""Reversible-jump sampling over model space.

Across-model moves pick a neighbor uniformly (models differing by one
selectable member, covariate or term) and redraw the whole coefficient
vector from that model's Laplace proposal N(mode, (V^{-1} - H)^{-1}).
Redrawing everything makes the dimension match trivial and the Jacobian
identity; the acceptance ratio carries the proposal densities in both
directions and the neighbor-count ratio. Within-model moves are a
Gaussian random walk scaled by the Laplace standard deviations.

Normal linear spaces never need the joint chain: (beta, sigma^2)
integrate out exactly, so the sampler collapses to a Metropolized walk
on the model graph with exact marginal likelihoods, and coefficient
draws are reconstructed conjugately afterwards when wanted.

Randomness comes from numpy's counter-based Philox generator, so runs
are reproducible from the seed alone regardless of how many draws each
iteration consumes.
"""
import csv
from dataclasses import dataclass
import math

import numpy as np

from ._linalg import chol_factor, inv_pd
from .exceptions import ContractError
from .glm_laplace import ContingencyTable, PoissonLogLinear, _newton, \
    build_design, unit_info_for_model
from .linear_exact import LinearDataset, log_marginal_nig
from .model_space import log_prior_model_weight
from .param_priors import InformationSource, linear_design, \
    log_prior_density

__all__ = [
    "SamplerConfig",
    "ChainState",
    "RjChain",
    "ModelProbEstimate",
    "rjmcmc_run",
    "estimate_model_probs",
    "rwm_step",
    "batch_means_se",
    "chain_to_csv",
]


@dataclass(frozen=True)
class SamplerConfig:
    iterations: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    jump_prob: float = 0.5
    within_model_scale: float = 1.0
    start_index: int = 0
    store_coefficients: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ContractError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= self.burn_in < self.iterations:
            raise ContractError(
                f"burn_in must lie in [0, iterations), got {self.burn_in}")
        if self.thin < 1:
            raise ContractError(f"thin must be >= 1, got {self.thin}")
        if not 0.0 <= self.jump_prob <= 1.0:
            raise ContractError(
                f"jump_prob must lie in [0, 1], got {self.jump_prob}")
        if not (self.within_model_scale > 0.0):
            raise ContractError("within_model_scale must be positive")
        if self.start_index < 0:
            raise ContractError("start_index must be nonnegative")


@dataclass
class ChainState:
    """Current position of the joint chain."""

    model_index: int
    beta: np.ndarray
    log_target: float


@dataclass(frozen=True)
class RjChain:
    """Raw sampler output: one model index per iteration, burn-in
    included; estimate_model_probs applies burn-in and thinning."""

    models: tuple
    model_index: np.ndarray
    log_target: np.ndarray
    config: SamplerConfig
    kind: str
    attempt_jump: int
    accept_jump: int
    attempt_within: int
    accept_within: int
    coefficients: tuple = None

    def jump_rate(self):
        return self.accept_jump / max(self.attempt_jump, 1)

    def within_rate(self):
        return self.accept_within / max(self.attempt_within, 1)


@dataclass(frozen=True)
class ModelProbEstimate:
    """Posterior model probabilities with batch-means standard errors.
    Unvisited models report probability 0 with standard error 0, which
    understates uncertainty; treat zeros as 'not seen', not 'excluded'."""

    models: tuple
    probs: np.ndarray
    se: np.ndarray
    n_kept: int
    batch_length: int

    def prob_of(self, m):
        for model, p in zip(self.models, self.probs):
            if model == m:
                return float(p)
        raise ContractError(f"model {m.label()} not in sampler support")


def rwm_step(log_target, beta, value, step_sd, rng):
    """One Gaussian random-walk Metropolis step. Returns the new point,
    its log target, and whether the proposal was accepted."""
    d = beta.shape[0]
    if d == 0:
        return beta, value, True
    proposal = beta + step_sd * rng.standard_normal(d)
    new_value = log_target(proposal)
    if math.log(rng.random()) < new_value - value:
        return proposal, new_value, True
    return beta, value, False


def batch_means_se(series):
    """Batch-means standard error of the series mean, batch length
    floor(sqrt(T)). Returns (mean, se, batch_length); series shorter
    than 4 points get se = inf since no batching is meaningful."""
    x = np.asarray(series, dtype=float)
    t = x.shape[0]
    if t < 4:
        return (float(np.mean(x)) if t else math.nan), math.inf, 0
    length = int(math.isqrt(t))
    count = t // length
    trimmed = x[:count * length].reshape(count, length)
    bm = trimmed.mean(axis=1)
    mean = float(np.mean(x))
    se = float(np.sqrt(np.sum((bm - trimmed.mean()) ** 2)
                       / (count * (count - 1))))
    return mean, se, length


def _neighbor_lists(models):
    """Adjacency by single-member toggles, restricted to the given
    space (hierarchy violations are simply absent from it)."""
    index = {frozenset(m.members): i for i, m in enumerate(models)}
    if len(index) != len(models):
        raise ContractError("duplicate models in sampler space")
    union = set()
    common = set(models[0].members)
    for m in models:
        union |= set(m.members)
        common &= set(m.members)
    toggles = sorted(union - common, key=repr)
    neighbors = []
    for m in models:
        have = frozenset(m.members)
        nbr = []
        for t in toggles:
            hit = index.get(have ^ {t})
            if hit is not None:
                nbr.append(hit)
        neighbors.append(tuple(nbr))
    return neighbors


def _policy_weights(models, priors, policy, data):
    out = np.zeros(len(models))
    for i, m in enumerate(models):
        prior = priors[m]
        info = None
        if policy.variant in ("adjusted_info", "adjusted_exact",
                              "loglinear_adjusted"):
            if isinstance(data, ContingencyTable):
                info = unit_info_for_model(data, m, beta_ref=prior.mu)
            elif isinstance(data, LinearDataset):
                info = InformationSource.linear(linear_design(data.X, m))
            else:
                raise ContractError(
                    f"policy {policy.variant!r} needs table or linear data "
                    "to derive an information matrix")
        out[i] = log_prior_model_weight(m, policy, prior=prior, info=info)
    return out


def rjmcmc_run(space, priors, policy, data, config):
    """Sample the joint posterior over (model, parameters).

    space: model list (must be connected under single-member toggles for
    the chain to mix across all of it). priors: ParamPrior per model.
    data: LinearDataset (collapsed exact path), ContingencyTable
    (Poisson path), or a dict mapping each model to a likelihood object
    for testing the machinery on known targets.
    """
    models = tuple(space)
    if not models:
        raise ContractError("sampler space is empty")
    for m in models:
        if m not in priors:
            raise ContractError(f"no prior supplied for model {m.label()}")
    if config.start_index >= len(models):
        raise ContractError(
            f"start_index {config.start_index} out of range for "
            f"{len(models)} models")
    rng = np.random.Generator(np.random.Philox(config.seed))
    neighbors = _neighbor_lists(models)

    if isinstance(data, LinearDataset):
        return _run_linear_collapsed(models, priors, policy, data, config,
                                     rng, neighbors)
    if isinstance(data, ContingencyTable):
        likelihoods = {}
        for m in models:
            design = build_design(data.spec, m)
            likelihoods[m] = PoissonLogLinear(design.X, data.counts)
        lw = _policy_weights(models, priors, policy, data)
        return _run_joint(models, priors, lw, likelihoods, config, rng,
                          neighbors, kind="glm")
    if isinstance(data, dict):
        if policy.variant not in ("uniform", "adjusted_c"):
            raise ContractError(
                "likelihood-dict data supports only the uniform and "
                "adjusted_c policies")
        for m in models:
            if m not in data:
                raise ContractError(f"no likelihood supplied for {m.label()}")
        lw = np.array([log_prior_model_weight(m, policy, prior=priors[m])
                       for m in models])
        return _run_joint(models, priors, lw, data, config, rng, neighbors,
                          kind="custom")
    raise ContractError(
        f"unsupported data object {type(data).__name__}; expected "
        "LinearDataset, ContingencyTable, or a likelihood dict")


def _run_linear_collapsed(models, priors, policy, data, config, rng,
                          neighbors):
    lw = _policy_weights(models, priors, policy, data)
    marginals = [log_marginal_nig(data, m, priors[m]) for m in models]
    conventions = {ml.convention for ml in marginals}
    if len(conventions) > 1:
        raise ContractError(
            "mixed sigma^2 conventions across the space; use one prior "
            "family")
    log_target_by_model = lw + np.array([ml.value for ml in marginals])

    idx = config.start_index
    trace = np.zeros(config.iterations, dtype=np.int64)
    targets = np.zeros(config.iterations)
    attempt = accept = 0
    for it in range(config.iterations):
        nbr = neighbors[idx]
        if nbr:
            attempt += 1
            prop = nbr[int(rng.integers(len(nbr)))]
            log_alpha = (log_target_by_model[prop] - log_target_by_model[idx]
                         + math.log(len(nbr)) - math.log(len(neighbors[prop])))
            if math.log(rng.random()) < log_alpha:
                idx = prop
                accept += 1
        trace[it] = idx
        targets[it] = log_target_by_model[idx]
    return RjChain(models=models, model_index=trace, log_target=targets,
                   config=config, kind="linear_collapsed",
                   attempt_jump=attempt, accept_jump=accept,
                   attempt_within=0, accept_within=0)


def _laplace_proposal(likelihood, prior):
    """Mode and precision Cholesky of the N(mode, (V^{-1} - H)^{-1})
    independence proposal for one model."""
    d = likelihood.dim
    if d == 0:
        return np.zeros(0), np.zeros((0, 0)), 0.0
    v_inv = inv_pd(prior.variance(), "prior variance V")
    fit = _newton(likelihood, prior.mu.copy(), 1e-8, 100,
                  v_inv=v_inv, mu=prior.mu, kind="map")
    precision = likelihood.neg_hessian(fit.beta) + v_inv
    L = chol_factor(precision, "proposal precision")
    ld = 2.0 * float(np.sum(np.log(np.diag(L))))
    return fit.beta, L, ld


def _run_joint(models, priors, lw, likelihoods, config, rng, neighbors,
               kind):
    modes, chols, lds, step_sds = [], [], [], []
    for m in models:
        mode, L, ld = _laplace_proposal(likelihoods[m], priors[m])
        modes.append(mode)
        chols.append(L)
        lds.append(ld)
        if mode.shape[0]:
            cov = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(len(mode))))
            step_sds.append(config.within_model_scale
                            * np.sqrt(np.diag(cov)))
        else:
            step_sds.append(np.zeros(0))

    def q_draw(i):
        d = modes[i].shape[0]
        if d == 0:
            return np.zeros(0)
        z = rng.standard_normal(d)
        return modes[i] + np.linalg.solve(chols[i].T, z)

    def q_logpdf(i, beta):
        d = modes[i].shape[0]
        if d == 0:
            return 0.0
        u = chols[i].T @ (beta - modes[i])
        return -0.5 * (d * math.log(2.0 * math.pi) - lds[i] + float(u @ u))

    def log_target(i, beta):
        return (lw[i] + log_prior_density(beta, priors[models[i]])
                + likelihoods[models[i]].loglik(beta))

    idx = config.start_index
    beta = modes[idx].copy()
    value = log_target(idx, beta)
    state = ChainState(model_index=idx, beta=beta, log_target=value)

    trace = np.zeros(config.iterations, dtype=np.int64)
    targets = np.zeros(config.iterations)
    coef = [] if config.store_coefficients else None
    attempt_jump = accept_jump = attempt_within = accept_within = 0
    for it in range(config.iterations):
        do_jump = rng.random() < config.jump_prob and neighbors[state.model_index]
        if do_jump:
            attempt_jump += 1
            nbr = neighbors[state.model_index]
            prop_idx = nbr[int(rng.integers(len(nbr)))]
            prop_beta = q_draw(prop_idx)
            prop_value = log_target(prop_idx, prop_beta)
            log_alpha = (prop_value - state.log_target
                         + q_logpdf(state.model_index, state.beta)
                         - q_logpdf(prop_idx, prop_beta)
                         + math.log(len(nbr))
                         - math.log(len(neighbors[prop_idx])))
            if math.log(rng.random()) < log_alpha:
                state = ChainState(model_index=prop_idx, beta=prop_beta,
                                   log_target=prop_value)
                accept_jump += 1
        else:
            attempt_within += 1
            i = state.model_index
            new_beta, new_value, ok = rwm_step(
                lambda b: log_target(i, b), state.beta, state.log_target,
                step_sds[i], rng)
            if ok:
                accept_within += 1
            state = ChainState(model_index=i, beta=new_beta,
                               log_target=new_value)
        trace[it] = state.model_index
        targets[it] = state.log_target
        if coef is not None:
            coef.append(state.beta.copy())
    return RjChain(models=models, model_index=trace, log_target=targets,
                   config=config, kind=kind,
                   attempt_jump=attempt_jump, accept_jump=accept_jump,
                   attempt_within=attempt_within,
                   accept_within=accept_within,
                   coefficients=tuple(coef) if coef is not None else None)


def estimate_model_probs(chain, burn_in=None, thin=None):
    """Visit-frequency estimates of the posterior model probabilities
    with batch-means standard errors on the kept, thinned indicators."""
    if burn_in is None:
        burn_in = chain.config.burn_in
    if thin is None:
        thin = chain.config.thin
    total = chain.model_index.shape[0]
    if not 0 <= burn_in < total:
        raise ContractError(f"burn_in {burn_in} out of range for chain of "
                            f"length {total}")
    if thin < 1:
        raise ContractError(f"thin must be >= 1, got {thin}")
    kept = chain.model_index[burn_in::thin]
    n_kept = kept.shape[0]
    m_count = len(chain.models)
    probs = np.bincount(kept, minlength=m_count) / n_kept
    se = np.zeros(m_count)
    batch_length = 0
    for i in np.unique(kept):
        _, se_i, batch_length = batch_means_se(kept == i)
        se[i] = se_i
    return ModelProbEstimate(models=chain.models, probs=probs, se=se,
                             n_kept=n_kept, batch_length=batch_length)


def chain_to_csv(chain, path_or_file):
    """Dump the chain as CSV: iteration, model label, then coefficient
    columns padded with empty fields up to the largest model dimension.
    Coefficient columns appear only when the chain stored coefficients
    (the collapsed linear chain never does)."""
    max_d = max(m.d for m in chain.models) if chain.coefficients else 0
    header = ["iteration", "model"] + [f"b{j + 1}" for j in range(max_d)]

    def write(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for it, idx in enumerate(chain.model_index):
            row = [it, chain.models[idx].label()]
            if chain.coefficients:
                beta = chain.coefficients[it]
                row += [repr(float(b)) for b in beta]
                row += [""] * (max_d - beta.shape[0])
            out.writerow(row)

    if hasattr(path_or_file, "write"):
        write(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            write(fh)
