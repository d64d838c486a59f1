import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mixfield import PowerSolverConfig, Scenario, sca_power_alloc, two_user_power_search
from mixfield.power import (
    _split,
    gain_matrix,
    grid_rates,
    project_capped_simplex,
    project_capped_simplex_rows,
    sca_power_batch,
    sca_power_from_gains,
    surrogate,
    surrogate_grad,
    weighted_rate,
)

from conftest import NOISE, five_user, mixed_two_user, random_gains

seeds = st.integers(0, 2**31)
vectors = arrays(float, st.integers(1, 8), elements=st.floats(-5, 5))


@given(vectors, st.floats(0.1, 10.0))
def test_capped_simplex_projection(y, budget):
    x = project_capped_simplex(y, budget)
    assert np.all(x >= 0) and x.sum() <= budget * (1 + 1e-12)
    # optimality: no feasible vertex or the clipped point is closer
    for cand in (np.clip(y, 0, None), np.zeros_like(y)):
        if cand.sum() <= budget:
            assert np.linalg.norm(x - y) <= np.linalg.norm(cand - y) + 1e-9
    assert np.allclose(project_capped_simplex_rows(y[None], budget)[0], x)


@given(seeds, st.integers(2, 5))
def test_surrogate_is_tight_minorant(seed, K):
    rng = np.random.default_rng(seed)
    Gn = random_gains(rng, K)
    off = _split(Gn)
    w = rng.uniform(0.5, 2, K)
    x_hat = project_capped_simplex(rng.uniform(0, 1, K))
    b_hat = off @ x_hat
    true = lambda x: weighted_rate(Gn, x, 1.0, w)
    assert surrogate(x_hat, Gn, off, b_hat, w) == pytest.approx(true(x_hat))
    for _ in range(10):
        x = project_capped_simplex(rng.uniform(0, 1, K))
        assert surrogate(x, Gn, off, b_hat, w) <= true(x) + 1e-12


@given(seeds, st.integers(2, 5))
def test_surrogate_gradient_matches_central_differences(seed, K):
    rng = np.random.default_rng(seed)
    Gn = random_gains(rng, K)
    off = _split(Gn)
    w = rng.uniform(0.5, 2, K)
    x = project_capped_simplex(rng.uniform(0.05, 1, K)) + 0.01
    b_hat = off @ project_capped_simplex(rng.uniform(0, 1, K))
    g = surrogate_grad(x, Gn, off, b_hat, w)
    h = 1e-6
    for j in range(K):
        e = np.zeros(K)
        e[j] = h
        fd = (surrogate(x + e, Gn, off, b_hat, w) - surrogate(x - e, Gn, off, b_hat, w)) / (2 * h)
        assert g[j] == pytest.approx(fd, rel=1e-5, abs=1e-8)


@given(seeds, st.integers(1, 5))
def test_sca_trace_monotone_and_feasible(seed, K):
    rng = np.random.default_rng(seed)
    G = random_gains(rng, K) * 1e-10
    P, trace = sca_power_from_gains(G, 1.0, NOISE, rng.uniform(0.5, 2, K))
    assert np.all(P >= 0) and P.sum() <= 1.0 + 1e-9
    assert np.all(np.diff(trace) >= -1e-10 * np.abs(trace[1:]).max())


def test_single_user_gets_full_budget():
    P, _ = sca_power_from_gains(np.array([[3e-10]]), 2.0, NOISE)
    assert P[0] == pytest.approx(2.0)


@given(seeds, st.floats(0.01, 100.0))
def test_joint_scaling_invariance(seed, c):
    rng = np.random.default_rng(seed)
    G = random_gains(rng, 3) * 1e-10
    P1, t1 = sca_power_from_gains(G, 1.0, NOISE)
    P2, t2 = sca_power_from_gains(G, c, c * NOISE)
    # the rate is flat near the optimum, so powers agree less tightly than rates
    assert np.allclose(P2, c * P1, rtol=0, atol=1e-7 * c)
    assert t2[-1] == pytest.approx(t1[-1], abs=1e-9)


def test_batch_matches_single():
    rng = np.random.default_rng(1)
    Gs = np.stack([random_gains(rng, 3) * 1e-10 for _ in range(6)])
    P, rates = sca_power_batch(Gs, 1.0, NOISE)
    for b in range(6):
        Pb, tb = sca_power_from_gains(Gs[b], 1.0, NOISE)
        assert rates[b] == pytest.approx(tb[-1], rel=1e-9)
        assert rates[b] == pytest.approx(weighted_rate(Gs[b], P[b], NOISE, np.ones(3)))


def test_sca_near_grid_optimum_two_users():
    sc = mixed_two_user(32, theta_far=0.05)
    masks = np.ones((2, 32))
    P, trace = sca_power_alloc(sc, masks)
    grid = two_user_power_search(sc, masks)
    G = gain_matrix(sc.H, sc.W, masks)
    r_grid = grid_rates(G, grid.powers[:, None], NOISE, np.ones(2))[0]
    assert trace[-1] >= r_grid - 1e-3


def test_two_user_grid_symmetry_and_budget():
    from mixfield import ArrayGeometry, UserSpec

    geom = ArrayGeometry(32, 30e9)
    sc = Scenario.build(geom, [UserSpec(-0.2, 100.0), UserSpec(0.2, 100.0)], 1.0, NOISE)
    P = two_user_power_search(sc, np.ones((2, 32)), PowerSolverConfig(grid_points=4001))
    assert abs(P.powers[0] - 0.5) <= 1 / 4000 + 1e-12
    assert P.powers.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        two_user_power_search(five_user(16), np.ones((5, 16)))


def test_config_validation():
    with pytest.raises(ValueError):
        PowerSolverConfig(grid_points=1)
    with pytest.raises(ValueError):
        PowerSolverConfig(sca_max_iters=0)


def test_blow_up_is_reported():
    G = np.array([[np.inf, 1.0], [1.0, 1.0]])
    with pytest.raises((FloatingPointError, ValueError)):
        sca_power_from_gains(G, 1.0, 1.0)
