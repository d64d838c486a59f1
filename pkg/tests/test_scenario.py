import numpy as np
import pytest

from mixfield import ArrayGeometry, CsiModel, Scenario, UserSpec
from mixfield.scenario import design_result

from conftest import NOISE, mixed_two_user


def test_build_labels_and_seeded_csi():
    geom = ArrayGeometry(32, 30e9)
    users = [UserSpec(0.0, 0.5), UserSpec(0.3, 150.0)]
    a = Scenario.build(geom, users, 1.0, NOISE, csi=CsiModel(0.1), seeds=(1, 2))
    b = Scenario.build(geom, users, 1.0, NOISE, csi=CsiModel(0.1), seeds=(1, 2))
    assert [c.field_label for c in a.channels] == ["near", "far"]
    assert np.array_equal(a.H_true, b.H_true) and not np.array_equal(a.H, a.H_true)
    assert Scenario.build(geom, users, 1.0, NOISE).true_channels is None


def test_from_matrix_keeps_los_convention():
    sc = mixed_two_user(16)
    raw = Scenario.from_matrix(sc.H, 1.0, NOISE, weights=[1, 2])
    for c, ref in zip(raw.channels, sc.channels):
        assert np.allclose(np.sqrt(16) * c.gain * c.steering, c.entries)
        assert abs(c.gain) == pytest.approx(abs(ref.gain))
    assert np.allclose(np.abs(raw.W), np.abs(sc.W))
    assert raw.weights.tolist() == [1.0, 2.0]
    assert raw.with_weights([3, 3]).weights.tolist() == [3.0, 3.0]
    with pytest.raises(ValueError):
        Scenario.from_matrix(np.zeros((2, 4)), 1.0, NOISE)
    with pytest.raises(ValueError):
        Scenario.from_matrix(sc.H, 1.0, NOISE, H_true=sc.H[:, :8])


def test_validation_and_helpers():
    sc = mixed_two_user(16)
    with pytest.raises(ValueError):
        sc.with_power(0.0)
    assert sc.with_weights([1, 4]).weights.tolist() == [1.0, 4.0]
    assert sc.with_weights([1, 4]).users[1].weight == 4.0


def test_design_result_rescales_overshoot():
    sc = mixed_two_user(16)
    res = design_result("x", sc, np.ones((2, 16)), [0.8, 0.8], note=1)
    assert res.powers.powers.sum() == pytest.approx(1.0)
    assert res.design_rate == pytest.approx(res.weighted_sum_rate)
    assert res.info == {"note": 1}
