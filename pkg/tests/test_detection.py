import itertools
import math

import numpy as np
import pytest

from privdet.channels import (
    NetworkMapping,
    SensorChannel,
    identity_mapping,
    random_mapping,
    uniform_mapping,
)
from privdet.detection import (
    FusionRule,
    bayes_error_G,
    bayes_error_H,
    compute_c_G,
    min_risk_detector,
    min_risk_value,
    optimal_fusion_rule,
    theta,
)
from privdet.model import JointModel, push_forward
from privdet.relations import random_model

from _oracles import best_detector_exhaustive, best_rule_exhaustive, brute_error_with_rule


def biased_h_model(p_h0=0.7):
    prior = np.array([[p_h0 / 2, p_h0 / 2], [(1 - p_h0) / 2, (1 - p_h0) / 2]])
    cond = np.full((2, 2, 2), 0.5)
    return JointModel(1, 2, 1, "cond_indep", prior, (cond,))


def copy_h_model():
    prior = np.full((2, 2), 0.25)
    cond = np.zeros((2, 2, 2))
    cond[0, :, :] = [1.0, 0.0]
    cond[1, :, :] = [0.0, 1.0]
    return JointModel(1, 2, 1, "cond_indep", prior, (cond,))


def test_optimal_rule_falls_back_to_prior():
    model = biased_h_model(0.7)
    rule = optimal_fusion_rule(model, identity_mapping(1, 2))
    assert np.array_equal(rule.table, [0, 0])


def test_optimal_rule_identity_when_z_copies_h():
    model = copy_h_model()
    rule = optimal_fusion_rule(model, identity_mapping(1, 2))
    assert np.array_equal(rule.table, [0, 1])


def test_optimal_rule_matches_exhaustive_search():
    for seed in range(8):
        rng = np.random.default_rng(seed)
        s = int(rng.integers(1, 3))
        model = random_model(rng, s, int(rng.integers(2, 4)), 1)
        mapping = random_mapping(seed, s, model.x_size, 2)
        pushed = push_forward(model, mapping)
        best_err, _ = best_rule_exhaustive(pushed)
        rule = optimal_fusion_rule(model, mapping)
        assert bayes_error_H(model, mapping, rule) == pytest.approx(best_err, abs=1e-12)


def test_bayes_error_H_independent_uniform_half():
    prior = np.full((2, 2), 0.25)
    cond = np.full((2, 2, 2), 0.5)
    model = JointModel(1, 2, 1, "cond_indep", prior, (cond,))
    rule = FusionRule(np.array([0, 1]), 1, 2)
    assert bayes_error_H(model, identity_mapping(1, 2), rule) == pytest.approx(0.5)


def test_bayes_error_H_perfect_copy_zero():
    model = copy_h_model()
    rule = FusionRule(np.array([0, 1]), 1, 2)
    assert bayes_error_H(model, identity_mapping(1, 2), rule) == 0.0


def test_bayes_error_H_constant_rules_hit_prior():
    model = biased_h_model(0.7)
    mapping = identity_mapping(1, 2)
    errs = [
        bayes_error_H(model, mapping, FusionRule(np.array([b, b]), 1, 2))
        for b in (0, 1)
    ]
    assert min(errs) == pytest.approx(0.3, abs=1e-12)


def test_bayes_error_H_optimal_beats_random_rules():
    rng = np.random.default_rng(11)
    model = random_model(rng, 2, 3, 1)
    mapping = random_mapping(2, 2, 3, 2)
    best = bayes_error_H(model, mapping)
    for seed in range(50):
        table = np.random.default_rng(seed).integers(0, 2, size=4)
        err = bayes_error_H(model, mapping, FusionRule(table, 2, 2))
        assert best <= err + 1e-12


def test_bayes_error_H_bounded_by_prior():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        model = random_model(rng, 2, 3, 1)
        mapping = random_mapping(seed, 2, 3, 2)
        p_h = model.prior.sum(axis=1)
        assert bayes_error_H(model, mapping) <= min(p_h) + 1e-12


def test_bayes_error_H_matches_brute_sum():
    rng = np.random.default_rng(3)
    model = random_model(rng, 2, 3, 2)
    mapping = random_mapping(5, 2, 3, 2)
    pushed = push_forward(model, mapping)
    table = np.random.default_rng(0).integers(0, 2, size=pushed.n_z)
    rule = FusionRule(table, 2, 2)
    assert bayes_error_H(model, mapping, rule) == pytest.approx(
        brute_error_with_rule(pushed, table), abs=1e-14
    )


def test_bayes_error_G_independent_uniform():
    prior = np.full((2, 2), 0.25)
    cond = np.full((2, 2, 3), 1 / 3)
    model = JointModel(1, 3, 1, "cond_indep", prior, (cond,))
    assert bayes_error_G(model, identity_mapping(1, 3)) == pytest.approx(0.5)


def test_bayes_error_G_copy_zero():
    prior = np.full((2, 2), 0.25)
    cond = np.zeros((2, 2, 2))
    cond[:, 0, :] = [1.0, 0.0]
    cond[:, 1, :] = [0.0, 1.0]
    model = JointModel(1, 2, 1, "cond_indep", prior, (cond,))
    assert bayes_error_G(model, identity_mapping(1, 2)) == 0.0


def test_bayes_error_G_q2_independent():
    prior = np.full((2, 4), 0.125)
    cond = np.full((2, 4, 2), 0.5)
    model = JointModel(1, 2, 2, "cond_indep", prior, (cond,))
    assert bayes_error_G(model, identity_mapping(1, 2)) == pytest.approx(0.75)


# -- pairwise detection risks -------------------------------------------------


def test_min_risk_detector_independent_half():
    prior = np.full((2, 2), 0.25)
    cond = np.full((2, 2, 3), 1 / 3)
    model = JointModel(1, 3, 1, "cond_indep", prior, (cond,))
    detector, risk = min_risk_detector(model, identity_mapping(1, 3), 1)
    assert risk == pytest.approx(0.5, abs=1e-15)
    assert np.array_equal(detector, [1, 1, 1])  # ratio ties decide g


def test_min_risk_detector_perfect_indicator_zero():
    prior = np.full((2, 2), 0.25)
    cond = np.zeros((2, 2, 2))
    cond[:, 0, :] = [1.0, 0.0]
    cond[:, 1, :] = [0.0, 1.0]
    model = JointModel(1, 2, 1, "cond_indep", prior, (cond,))
    _, risk = min_risk_detector(model, identity_mapping(1, 2), 1)
    assert risk == 0.0


def test_min_risk_detector_matches_exhaustive():
    for seed in range(12):
        rng = np.random.default_rng(seed)
        s = int(rng.integers(1, 3))
        q = int(rng.integers(1, 3))
        model = random_model(rng, s, int(rng.integers(2, 4)), q)
        mapping = random_mapping(seed, s, model.x_size, 2)
        pushed = push_forward(model, mapping)
        p_gy = pushed.p_gz()
        p_g = p_gy.sum(axis=1)
        for g in range(1, model.n_g):
            _, risk = min_risk_detector(model, mapping, g)
            brute = best_detector_exhaustive(p_gy[0] / p_g[0], p_gy[g] / p_g[g])
            assert risk == pytest.approx(brute, abs=1e-12)


def test_min_risk_invariant_under_output_relabeling():
    rng = np.random.default_rng(4)
    model = random_model(rng, 2, 3, 1)
    mapping = random_mapping(8, 2, 3, 2)
    _, risk = min_risk_detector(model, mapping, 1)
    flipped = NetworkMapping(
        tuple(SensorChannel(ch.rows[:, ::-1]) for ch in mapping.channels)
    )
    _, risk_flipped = min_risk_detector(model, flipped, 1)
    assert risk == pytest.approx(risk_flipped, abs=1e-12)


def test_min_risk_detector_rejects_reference_value():
    model = random_model(np.random.default_rng(0), 1, 3, 1)
    with pytest.raises(ValueError):
        min_risk_detector(model, identity_mapping(1, 3), 0)


# -- c_G and theta -------------------------------------------------------------


def test_theta_zero_budget_is_half():
    for c in (0.0, 0.3, 1.0):
        assert theta(0.0, c) == pytest.approx(0.5)


def test_theta_zero_constant_is_half():
    for eps in (0.1, 1.0, 50.0):
        assert theta(eps, 0.0) == pytest.approx(0.5)


def test_theta_limit_zero():
    assert theta(math.inf, 1.0) == pytest.approx(0.0)
    assert theta(200.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_theta_validates_inputs():
    with pytest.raises(ValueError):
        theta(-0.1, 0.5)
    with pytest.raises(ValueError):
        theta(1.0, 1.5)


def test_c_g_constant_mapping_is_one():
    model = random_model(np.random.default_rng(1), 2, 3, 1)
    assert compute_c_G(model, uniform_mapping(2, 3, 2)) == pytest.approx(1.0)


def test_c_g_lies_in_unit_interval():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        model = random_model(rng, 2, 3, int(rng.integers(1, 3)))
        c = compute_c_G(model, random_mapping(seed, 2, 3, 2))
        assert 0.0 <= c <= 1.0
