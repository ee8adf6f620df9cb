import math

import numpy as np
import pytest

from privdet import metrics
from privdet.channels import (
    NetworkMapping,
    SensorChannel,
    identity_mapping,
    random_mapping,
    randomized_response,
    uniform_mapping,
)
from privdet.metrics import (
    BudgetReport,
    avg_info_leakage,
    delta_x,
    empirical_budgets,
    full_report,
    identifiability_budget,
    inference_dp_budget,
    info_privacy_budget,
    ldp_budget,
    max_abs_log_posterior_ratio,
    mutual_info_privacy_budget,
    mutual_information,
)
from privdet.model import JointModel, push_forward
from privdet.relations import example1_joint, random_model

from _oracles import mutual_information_direct

LOG2 = math.log(2.0)


def gz_model(p_gz):
    """Embed a (G, Z)-like table as a 1-sensor model with identity channel.

    H is independent uniform so every pushed view reduces to the table.
    """
    p_gz = np.asarray(p_gz, dtype=float)
    n_g, n_x = p_gz.shape
    q = int(math.log2(n_g))
    prior = np.stack([p_gz.sum(axis=1) / 2] * 2)
    cond = np.zeros((2, n_g, n_x))
    for g in range(n_g):
        if p_gz[g].sum() > 0:
            cond[:, g, :] = p_gz[g] / p_gz[g].sum()
        else:
            cond[:, g, :] = 1.0 / n_x
    model = JointModel(1, n_x, q, "cond_indep", prior, (cond,))
    return push_forward(model, identity_mapping(1, n_x))


# -- local budget ---------------------------------------------------------------


def test_ldp_budget_identical_rows_zero():
    mapping = uniform_mapping(2, 3, 2)
    assert ldp_budget(mapping) == 0.0


def test_ldp_budget_identity_infinite():
    assert ldp_budget(identity_mapping(1, 2)) == math.inf


def test_ldp_budget_randomized_response_exact():
    mapping = NetworkMapping((randomized_response(2, 1.0),))
    assert ldp_budget(mapping) == pytest.approx(1.0, abs=1e-12)


# -- posterior-ratio budget -------------------------------------------------------


def test_info_budget_independent_is_zero():
    pushed = gz_model(np.outer([0.3, 0.7], [0.6, 0.4]))
    assert info_privacy_budget(pushed) == pytest.approx(0.0, abs=1e-14)


def test_info_budget_uniform_conditionals_any_mapping():
    prior = np.full((2, 2), 0.25)
    conds = tuple(np.full((2, 2, 3), 1.0 / 3) for _ in range(2))
    model = JointModel(2, 3, 1, "cond_indep", prior, conds)
    for seed in range(5):
        pushed = push_forward(model, random_mapping(seed, 2, 3, 2))
        assert info_privacy_budget(pushed) <= 1e-10


def test_info_budget_corner_mass_half():
    pushed = gz_model(example1_joint(0.5))
    assert info_privacy_budget(pushed) == pytest.approx(LOG2, abs=1e-12)


# -- neighboring-hypothesis budget ------------------------------------------------


def test_inference_dp_independent_zero():
    pushed = gz_model(np.outer([0.5, 0.5], [0.25, 0.75]))
    assert inference_dp_budget(pushed) == pytest.approx(0.0, abs=1e-14)


def test_inference_dp_symmetric_channel():
    c = 1.0 / (1.0 + math.e)
    p_gz = 0.5 * np.array([[1 - c, c], [c, 1 - c]])
    assert inference_dp_budget(gz_model(p_gz)) == pytest.approx(1.0, abs=1e-12)


def test_inference_dp_at_most_twice_info_budget():
    rng = np.random.default_rng(0)
    for _ in range(500):
        s = int(rng.integers(1, 3))
        model = random_model(rng, s, int(rng.integers(2, 4)), int(rng.integers(1, 3)))
        mapping = random_mapping(int(rng.integers(1 << 30)), s, model.x_size, 2)
        pushed = push_forward(model, mapping)
        assert inference_dp_budget(pushed) <= 2 * info_privacy_budget(pushed) + 1e-9


# -- mutual informations ----------------------------------------------------------


def test_mutual_information_independent_zero():
    assert mutual_information(np.outer([0.4, 0.6], [0.1, 0.9])) == pytest.approx(
        0.0, abs=1e-15
    )


@pytest.mark.parametrize("alpha", [0.5, 0.1, 0.01])
def test_mutual_information_corner_mass_formula(alpha):
    expected = alpha * math.log(1 / alpha) + (1 - alpha) * math.log(1 / (1 - alpha))
    assert mutual_information(example1_joint(alpha)) == pytest.approx(expected, abs=1e-12)


def test_mutual_information_perfect_correlation():
    assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(LOG2, abs=1e-15)


def test_mutual_information_symmetric_nonnegative():
    rng = np.random.default_rng(1)
    for _ in range(50):
        joint = rng.dirichlet(np.ones(12)).reshape(3, 4)
        a = mutual_information(joint)
        assert a >= -1e-15
        assert a == pytest.approx(mutual_information(joint.T), abs=1e-12)
        assert a == pytest.approx(mutual_information_direct(joint), abs=1e-12)


# -- identifiability and the prior gap ---------------------------------------------


def test_delta_x_uniform_prior_zero():
    prior = np.full((2, 2), 0.25)
    conds = tuple(np.full((2, 2, 3), 1.0 / 3) for _ in range(2))
    model = JointModel(2, 3, 1, "cond_indep", prior, conds)
    assert delta_x(model) == pytest.approx(0.0, abs=1e-12)


def test_identifiability_bounded_by_budget_under_uniform_prior():
    prior = np.full((2, 2), 0.25)
    conds = tuple(np.full((2, 2, 3), 1.0 / 3) for _ in range(2))
    model = JointModel(2, 3, 1, "cond_indep", prior, conds)
    for eps in (0.5, 1.0, 2.0):
        mapping = NetworkMapping(tuple(randomized_response(3, eps) for _ in range(2)))
        pushed = push_forward(model, mapping)
        assert identifiability_budget(pushed) <= eps + 1e-9


def test_identifiability_skewed_prior_identity_channel():
    prior = np.array([[0.4, 0.0], [0.1, 0.5]])
    cond = np.zeros((2, 2, 2))
    cond[0] = [0.8, 0.2]  # p(x | h = 0) regardless of g
    cond[1] = [0.2, 0.8]
    # arrange p_X = (0.8, 0.2): p(x=0) = 0.4*0.8 + 0.6*... use custom rows
    cond[:, :, :] = [[0.8, 0.2]]
    model = JointModel(1, 2, 1, "cond_indep", prior, (cond,))
    pushed = push_forward(model, identity_mapping(1, 2))
    assert identifiability_budget(pushed) == math.inf
    assert delta_x(model) == pytest.approx(math.log(4.0), abs=1e-12)


# -- empirical estimators -----------------------------------------------------------


def test_empirical_budgets_constant_output():
    samples = [(g, (0,)) for g in (0, 1, 0, 1, 1)]
    eps_i, eps_ld = empirical_budgets(samples, uniform_mapping(1, 2, 2))
    assert eps_i == 0.0
    assert eps_ld == 0.0


def test_empirical_budgets_single_sample():
    eps_i, _ = empirical_budgets([(1, (0, 1))], uniform_mapping(2, 2, 2))
    assert eps_i == 0.0


def test_empirical_budgets_empty_rejected():
    with pytest.raises(ValueError):
        empirical_budgets([], uniform_mapping(1, 2, 2))


def test_empirical_budget_converges_to_log2():
    # exact posterior-ratio budget log 2: diagonal (G, X) through identity
    prior = np.array([[0.25, 0.25], [0.25, 0.25]])
    cond = np.zeros((2, 2, 2))
    cond[:, 0, :] = [1.0, 0.0]
    cond[:, 1, :] = [0.0, 1.0]
    model = JointModel(1, 2, 1, "cond_indep", prior, (cond,))
    mapping = identity_mapping(1, 2)
    assert info_privacy_budget(push_forward(model, mapping)) == pytest.approx(LOG2)
    rng = np.random.default_rng(7)
    h, g, x = model.sample(100_000, rng)
    z = mapping.sample(x, rng)
    samples = list(zip(g.tolist(), map(tuple, z.tolist())))
    eps_i, eps_ld = empirical_budgets(samples, mapping)
    assert abs(eps_i - LOG2) <= 0.1
    assert eps_ld == ldp_budget(mapping)


# -- aggregate report ----------------------------------------------------------------


def test_full_report_uniform_rows_all_zero_except_prior_terms():
    model = random_model(np.random.default_rng(3), 2, 3, 1)
    report = full_report(model, uniform_mapping(2, 3, 2))
    assert report.eps_info <= 1e-12
    assert report.eps_inference_dp <= 1e-12
    assert report.eps_avg_leakage <= 1e-12
    assert report.eps_ldp == 0.0
    assert report.eps_mutual_info <= 1e-12
    # with Z independent of X, the observation posterior equals the prior
    assert report.eps_identifiability == pytest.approx(report.delta_x, abs=1e-10)
    assert report.delta_x > 0


def test_full_report_identity_mapping_infinite_local_budget():
    model = random_model(np.random.default_rng(4), 1, 3, 1)
    report = full_report(model, identity_mapping(1, 3))
    assert report.eps_ldp == math.inf


def test_full_report_matches_individual_metrics():
    model = random_model(np.random.default_rng(5), 2, 3, 2)
    mapping = NetworkMapping(tuple(randomized_response(3, 1.5) for _ in range(2)))
    report = full_report(model, mapping)
    pushed = push_forward(model, mapping)
    assert report.eps_info == info_privacy_budget(pushed)
    assert report.eps_inference_dp == inference_dp_budget(pushed)
    assert report.eps_avg_leakage == avg_info_leakage(pushed)
    assert report.eps_ldp == ldp_budget(mapping)
    assert report.eps_mutual_info == mutual_info_privacy_budget(pushed)
    assert report.eps_identifiability == identifiability_budget(pushed)
    assert report.delta_x == delta_x(model)


def test_budgets_invariant_under_relabeling():
    rng = np.random.default_rng(6)
    model = random_model(rng, 2, 4, 1)
    mapping = random_mapping(9, 2, 4, 3)
    report = full_report(model, mapping)
    # permute the observation alphabet consistently in model and channels
    perm = np.array([2, 0, 3, 1])
    conds = tuple(c[:, :, perm] for c in model.conditionals)
    model_p = JointModel(2, 4, 1, "cond_indep", model.prior, conds)
    zperm = np.array([1, 2, 0])
    chans = tuple(SensorChannel(ch.rows[perm][:, zperm]) for ch in mapping.channels)
    report_p = full_report(model_p, NetworkMapping(chans))
    for field in (
        "eps_info",
        "eps_inference_dp",
        "eps_avg_leakage",
        "eps_ldp",
        "eps_mutual_info",
        "eps_identifiability",
        "delta_x",
    ):
        assert getattr(report, field) == pytest.approx(
            getattr(report_p, field), abs=1e-10
        )


def test_report_serialization_round_trip():
    report = BudgetReport(0.1, 0.2, 0.05, math.inf, 0.3, math.inf, 0.7)
    data = report.to_dict()
    assert data["eps_ldp"] == "inf"
    back = BudgetReport.from_dict(data)
    assert back == report
    fields = report.csv_fields()
    assert fields["eps_info_bits"] == pytest.approx(0.1 / LOG2)
