"""Model identities, enumeration, and prior-weight policies.

Enumeration counts come from brute-force oracles; policy weights are
checked against direct evaluations of their defining formulas.
"""
import math
from itertools import combinations

import numpy as np
import pytest

from jointbma.exceptions import CapacityError, ContractError, \
    SpecificationError
from jointbma.model_space import Baseline, FactorSpec, ModelId, \
    ModelPriorPolicy, calibrate_p, enumerate_hierarchical_models, \
    enumerate_linear_models, is_hierarchical, log_prior_model_weight, \
    term_margins
from jointbma.param_priors import InformationSource, ParamPrior


@pytest.fixture
def ohaspec():
    return FactorSpec(factors=(("O", 3), ("H", 2), ("A", 4)),
                      forced_terms=((), ("O",), ("H",), ("A",)),
                      candidate_terms=(("O", "H"), ("H", "A")))


def test_linear_identity_canonicalization():
    m = ModelId.linear([4, 3, 3])
    assert m.members == (3, 4)
    assert m.d == 3
    assert m.intercept
    assert m.label() == "1+X4+X5"
    assert ModelId.linear([], intercept=False).label() == "0"
    assert ModelId.linear([], intercept=True).label() == "1"


def test_linear_models_hashable_and_equal():
    assert ModelId.linear([1, 2]) == ModelId.linear([2, 1])
    assert len({ModelId.linear([0]), ModelId.linear([0])}) == 1


def test_enumerate_linear_counts():
    for p in (0, 1, 4, 8):
        models = enumerate_linear_models(p)
        assert len(models) == 2 ** p
        assert len(set(models)) == 2 ** p
        # canonical: sorted by dimension then members
        dims = [m.d for m in models]
        assert dims == sorted(dims)


def test_enumerate_linear_capacity():
    with pytest.raises(CapacityError):
        enumerate_linear_models(26)


def test_term_dimension_and_cells(ohaspec):
    assert ohaspec.n_cells == 24
    assert ohaspec.term_dimension(()) == 1
    assert ohaspec.term_dimension(("O",)) == 2
    assert ohaspec.term_dimension(("H", "A")) == 3
    assert ohaspec.term_dimension(("O", "A")) == 6


def test_term_margins_and_hierarchy():
    assert set(term_margins(("O", "H"))) == {(), ("O",), ("H",)}
    assert is_hierarchical({(), ("O",), ("H",), ("O", "H")})
    assert not is_hierarchical({(), ("O", "H")})


def test_loglinear_model_requires_hierarchy(ohaspec):
    with pytest.raises(SpecificationError):
        ModelId.loglinear(ohaspec, [(), ("O",), ("H", "A")])


def test_enumerate_hierarchical_oha(ohaspec):
    models = enumerate_hierarchical_models(ohaspec)
    labels = [m.label() for m in models]
    assert labels == ["O+H+A", "O+H+A+OH", "O+H+A+HA", "O+H+A+OH+HA"]
    assert [m.d for m in models] == [7, 9, 10, 12]


def test_enumerate_hierarchical_matches_bruteforce():
    spec = FactorSpec(factors=(("A", 2), ("B", 3), ("C", 2)),
                      forced_terms=((), ("A",), ("B",), ("C",)),
                      candidate_terms=(("A", "B"), ("A", "C"), ("B", "C"),
                                       ("A", "B", "C")))
    models = enumerate_hierarchical_models(spec)
    # oracle: filter all candidate subsets by the hierarchy predicate
    count = 0
    cand = list(spec.candidate_terms)
    for k in range(len(cand) + 1):
        for extra in combinations(cand, k):
            if is_hierarchical(set(spec.forced_terms) | set(extra)):
                count += 1
    assert len(models) == count == 9


def test_enumerate_hierarchical_rejects_open_margin():
    spec = FactorSpec(factors=(("A", 2), ("B", 2)),
                      forced_terms=((),),
                      candidate_terms=(("A", "B"),))
    with pytest.raises(SpecificationError, match="margin"):
        enumerate_hierarchical_models(spec)


def test_baseline_kinds():
    m = ModelId.linear([0, 1])
    assert Baseline.constant().log_p(m) == 0.0
    w = -0.5 * math.log(2.0)
    assert Baseline.dimension(w).log_p(m) == pytest.approx(3 * w)
    n0, psi0 = 24.0, 1.5
    assert Baseline.calibrated(n0, psi0).log_p(m) == pytest.approx(
        1.5 * (math.log(n0) - psi0))


def test_baseline_table():
    m1, m2 = ModelId.linear([0]), ModelId.linear([1])
    base = Baseline.from_table({m1: -0.5, m2: -1.5})
    assert base.log_p(m1) == -0.5
    with pytest.raises(ContractError):
        base.log_p(ModelId.linear([0, 1]))


def test_calibrate_p():
    assert calibrate_p(4, 24.0, 1.5) == pytest.approx(
        2.0 * (math.log(24.0) - 1.5))
    with pytest.raises(SpecificationError):
        calibrate_p(2, 1.0, 1.5)
    with pytest.raises(SpecificationError):
        calibrate_p(2, 24.0, 0.0)


def _toy_prior(rng, d, c2):
    a = rng.standard_normal((d, d + 2))
    base = a @ a.T + np.eye(d)
    return ParamPrior(mu=np.zeros(d), sigma_base=base, c2=c2)


def test_policy_weight_formulas():
    rng = np.random.default_rng(10)
    m = ModelId.linear([0, 2], intercept=True)  # d = 3
    c2 = 37.0
    prior = _toy_prior(rng, 3, c2)
    X = rng.standard_normal((40, 3))
    info = InformationSource.linear(X)
    lp = math.log(0.25)
    policy = ModelPriorPolicy(variant="uniform",
                              baseline=Baseline.dimension(lp / 3))

    assert log_prior_model_weight(m, policy.with_variant("uniform"),
                                  prior=prior) == pytest.approx(lp)
    assert log_prior_model_weight(
        m, policy.with_variant("adjusted_c"),
        prior=prior) == pytest.approx(lp + 1.5 * math.log(c2))

    v = prior.variance()
    expected_info = lp + 0.5 * (np.linalg.slogdet(v)[1]
                                + np.linalg.slogdet(X.T @ X / 40.0)[1])
    assert log_prior_model_weight(
        m, policy.with_variant("adjusted_info"), prior=prior,
        info=info) == pytest.approx(expected_info, rel=1e-12)

    i_mat = X.T @ X / 40.0
    expected_exact = lp + 0.5 * (
        np.linalg.slogdet(v)[1]
        + np.linalg.slogdet(i_mat + np.linalg.inv(v) / 40.0)[1])
    assert log_prior_model_weight(
        m, policy.with_variant("adjusted_exact"), prior=prior,
        info=info) == pytest.approx(expected_exact, rel=1e-12)


def test_policy_weight_requires_inputs():
    m = ModelId.linear([0])
    policy = ModelPriorPolicy(variant="adjusted_info")
    with pytest.raises(ContractError):
        log_prior_model_weight(m, policy)


def test_policy_weight_d0_is_baseline():
    m = ModelId.linear([], intercept=False)
    policy = ModelPriorPolicy(variant="adjusted_c")
    prior = ParamPrior(mu=np.zeros(0), sigma_base=np.zeros((0, 0)), c2=5.0)
    assert log_prior_model_weight(m, policy, prior=prior) == 0.0


def test_unknown_variant_rejected():
    with pytest.raises(SpecificationError):
        ModelPriorPolicy(variant="florp")
