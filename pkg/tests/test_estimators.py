import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mixfield import (
    CommonSelection,
    ExhaustiveSelection,
    FullArray,
    GreedySelector,
    PddSelector,
    RandomSelection,
    SubarraySelection,
)
from mixfield.metrics import rate_with_selection
from mixfield.scenario import Scenario

from conftest import NOISE, five_user, mixed_two_user

ESTIMATORS = [GreedySelector(), PddSelector(max_outer=30), FullArray(), RandomSelection(trials=10, random_state=0),
              CommonSelection(), SubarraySelection(num_subarrays=3)]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
def test_fit_predict_transform_score(est):
    sc = five_user(12, count=3)
    est = clone(est).fit(sc)
    masks = est.predict()
    assert masks.shape == (3, 12) and masks.dtype == bool
    X = est.transform()
    assert np.allclose(np.sum(np.abs(X) ** 2, axis=1), est.powers_)
    assert est.score(sc) == pytest.approx(est.result_.weighted_sum_rate)


def test_get_params_round_trip():
    est = PddSelector(rho0=100.0, init="full")
    params = est.get_params()
    assert params["rho0"] == 100.0 and params["init"] == "full"
    assert clone(est).get_params() == params
    assert est.set_params(c=0.5).c == 0.5
    assert est.config_.c == 0.5


def test_matrix_input_and_shape_checks():
    sc = mixed_two_user(16)
    est = GreedySelector(total_power=1.0, noise_power=NOISE).fit(sc.H)
    assert est.n_users_ == 2 and est.n_antennas_ == 16
    with pytest.raises(ValueError):
        est.score(np.ones((2, 8), dtype=complex))
    with pytest.raises(ValueError):
        GreedySelector(noise_power=0.0).fit(sc.H)
    with pytest.raises(NotFittedError):
        FullArray().predict()


def test_score_uses_true_channels():
    sc = mixed_two_user(16)
    rng = np.random.default_rng(0)
    err = rng.standard_normal(sc.H.shape) + 1j * rng.standard_normal(sc.H.shape)
    H_true = sc.H + 0.3 * np.abs(sc.H).mean() * err
    noisy = Scenario.from_matrix(sc.H, 1.0, NOISE, H_true=H_true)
    est = FullArray().fit(noisy)
    # beams stay matched to the estimate, rates are taken on the true channels
    expect = rate_with_selection(H_true, est.masks_, est.powers_, NOISE, beams=est.beams_)
    assert est.score(noisy) == pytest.approx(expect.weighted_sum_rate)
    assert est.score(noisy) != pytest.approx(est.score(sc.H))


def test_exhaustive_estimator_small():
    sc = mixed_two_user(6)
    est = ExhaustiveSelection().fit(sc)
    assert est.score(sc) >= GreedySelector().fit(sc).score(sc) - 1e-9
