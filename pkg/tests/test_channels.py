import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privdet import metrics
from privdet.channels import (
    NetworkMapping,
    SensorChannel,
    TwoStageMapping,
    compose,
    identity_mapping,
    load_mapping,
    random_channel,
    random_mapping,
    randomized_response,
    save_mapping,
    uniform_mapping,
)


def test_channel_validation():
    with pytest.raises(ValueError, match="negative"):
        SensorChannel([[1.1, -0.1], [0.5, 0.5]])
    with pytest.raises(ValueError, match="sums to"):
        SensorChannel([[0.6, 0.5], [0.5, 0.5]])


def test_compose_identity_stage2_is_stage1():
    stage1 = NetworkMapping((random_channel(0, 3, 2), random_channel(1, 3, 2)))
    stage2 = identity_mapping(2, 2)
    two = TwoStageMapping(stage1, stage2, "ill")
    comp = compose(two)
    for a, b in zip(comp.channels, stage1.channels):
        assert np.allclose(a.rows, b.rows, atol=1e-15)


def test_compose_constant_stage1_absorbs():
    u = np.array([0.2, 0.8])
    stage1 = NetworkMapping((SensorChannel(np.tile(u, (4, 1))),))
    stage2 = NetworkMapping((random_channel(5, 2, 3),))
    comp = compose(TwoStageMapping(stage1, stage2, "lip"))
    expected = u @ stage2.channels[0].rows
    assert np.allclose(comp.channels[0].rows, np.tile(expected, (4, 1)), atol=1e-15)


def test_compose_two_flips():
    flip = SensorChannel([[0.75, 0.25], [0.25, 0.75]])
    two = TwoStageMapping(
        NetworkMapping((flip,)), NetworkMapping((flip,)), "ill"
    )
    comp = compose(two)
    assert comp.channels[0].rows[0, 1] == pytest.approx(0.375, abs=1e-15)
    assert comp.channels[0].rows[1, 0] == pytest.approx(0.375, abs=1e-15)


def test_compose_alphabet_mismatch():
    a = NetworkMapping((random_channel(0, 2, 3),))
    b = NetworkMapping((random_channel(1, 2, 2),))
    with pytest.raises(ValueError, match="stage-2 input"):
        TwoStageMapping(a, b, "ill")


@given(st.integers(0, 10_000), st.integers(1, 5), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_compose_rows_stochastic(seed, x_size, z_size):
    s1 = NetworkMapping((random_channel(seed, x_size, 3),))
    s2 = NetworkMapping((random_channel(seed + 1, 3, z_size),))
    comp = compose(TwoStageMapping(s1, s2, "lip"))
    assert np.abs(comp.channels[0].rows.sum(axis=1) - 1.0).max() <= 1e-12


def test_randomized_response_zero_budget_uniform():
    ch = randomized_response(4, 0.0)
    assert np.allclose(ch.rows, 0.25, atol=1e-15)


def test_randomized_response_binary_unit_budget():
    ch = randomized_response(2, 1.0)
    assert ch.rows[0, 0] == pytest.approx(math.e / (1 + math.e), abs=1e-15)


@pytest.mark.parametrize("eps", [0.5, 2.0, 5.0])
def test_randomized_response_measured_budget(eps):
    mapping = NetworkMapping((randomized_response(3, eps),))
    assert metrics.ldp_budget(mapping) == pytest.approx(eps, abs=1e-12)


def test_randomized_response_rejects_negative():
    with pytest.raises(ValueError):
        randomized_response(2, -0.5)


def test_random_channel_deterministic():
    a = random_channel(123, 4, 3)
    b = random_channel(123, 4, 3)
    assert np.array_equal(a.rows, b.rows)


def test_random_channel_degenerate_output():
    ch = random_channel(0, 3, 1)
    assert np.array_equal(ch.rows, np.ones((3, 1)))


def test_random_channel_row_sums_over_many_seeds():
    for seed in range(1000):
        rows = random_channel(seed, 3, 2).rows
        assert abs(rows.sum(axis=1) - 1.0).max() <= 1e-15


def test_lip_order_preserves_local_budget():
    # any post-processing of an eps-budget stage keeps the composed budget
    for seed in range(25):
        rng = np.random.default_rng(seed)
        eps = float(rng.uniform(0.2, 3.0))
        stage1 = NetworkMapping(
            (randomized_response(3, eps), randomized_response(3, eps))
        )
        stage2 = random_mapping(seed, 2, 3, 2)
        comp = compose(TwoStageMapping(stage1, stage2, "lip"))
        assert metrics.ldp_budget(comp) <= eps + 1e-9


def test_ill_order_half_budget_per_stage():
    for seed in range(25):
        rng = np.random.default_rng(seed + 1000)
        eps = float(rng.uniform(0.2, 3.0))
        stage1 = random_mapping(seed, 2, 4, 3)
        stage2 = NetworkMapping(
            (randomized_response(3, eps / 2), randomized_response(3, eps / 2))
        )
        comp = compose(TwoStageMapping(stage1, stage2, "ill"))
        assert metrics.ldp_budget(comp) <= eps + 1e-9


def test_mapping_json_round_trips(tmp_path):
    mapping = random_mapping(3, 2, 4, 2)
    path = tmp_path / "mapping.json"
    save_mapping(mapping, path)
    loaded = load_mapping(path)
    for a, b in zip(loaded.channels, mapping.channels):
        assert np.array_equal(a.rows, b.rows)
    two = TwoStageMapping(mapping, random_mapping(4, 2, 2, 2), "ill")
    path2 = tmp_path / "two.json"
    save_mapping(two, path2)
    loaded2 = load_mapping(path2)
    assert loaded2.arch == "ill"
    assert json.loads(path2.read_text())["arch"] == "ill"
