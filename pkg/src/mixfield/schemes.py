"""Name-based access to every design scheme, all returning :class:`SchemeResult`."""

from __future__ import annotations

import numpy as np

from mixfield.baselines import (
    common_as_baseline,
    exhaustive_oracle,
    full_array_baseline,
    pdd_equal_power,
    random_as_baseline,
    subarray_baseline,
)
from mixfield.greedy import (
    closed_form_counts,
    fit_linear_decay,
    greedy_deactivate_two_user,
    greedy_masks,
)
from mixfield.metrics import PowerVector
from mixfield.pdd import PddConfig, pdd_solve
from mixfield.power import (
    PowerSolverConfig,
    gain_matrix,
    sca_power_from_gains,
    two_user_power_search,
)
from mixfield.scenario import design_result


def greedy_scheme(scenario, min_active=1, power=None):
    """Low-complexity design: per-user multi-user greedy masks, then SCA powers."""
    H, W = scenario.H, scenario.W
    masks = greedy_masks(H, W, min_active)
    G = gain_matrix(H, W, masks.astype(float))
    P, trace = sca_power_from_gains(G, scenario.total_power, scenario.noise_power,
                                    scenario.weights, power)
    return design_result("greedy", scenario, masks, P, sca_rounds=len(trace) - 1)


def two_user_pair(scenario):
    """Index order ``(u1, u2)`` with the near-field user first when labels allow."""
    labels = [c.field_label for c in scenario.channels]
    if labels[0] != "near" and labels[1] == "near":
        return 1, 0
    return 0, 1


def two_user_trajectories(scenario):
    """Greedy phase-rule trajectories of both users' beams against the other user.

    Returns ``{user: trajectory}`` keyed by the deactivating user's index.
    """
    S = np.stack([c.steering for c in scenario.channels])
    return {k: greedy_deactivate_two_user(S[1 - k] * np.conj(S[k])) for k in (0, 1)}


def two_user_ao(scenario, max_rounds=20, power=None):
    """Two-user alternating design: closed-form counts on greedy trajectories, grid power.

    The decay slopes come from line fits to each trajectory; a user with no
    power or a non-positive slope keeps all antennas.
    """
    if scenario.num_users != 2:
        raise ValueError("two_user_ao needs exactly two users")
    n = scenario.num_antennas
    u1, u2 = two_user_pair(scenario)
    traj = two_user_trajectories(scenario)
    fits = {k: fit_linear_decay(traj[k]) for k in (0, 1)}
    h_sq = [abs(c.gain) ** 2 for c in scenario.channels]
    P = np.full(2, scenario.total_power / 2)
    counts = None
    for rounds in range(1, max_rounds + 1):
        new = _ao_counts(n, traj, fits, h_sq, P, scenario.noise_power, u1, u2)
        if new == counts:
            break
        counts = new
        masks = np.stack([traj[k].mask(counts[k]) for k in (0, 1)])
        P = two_user_power_search(scenario, masks, power).powers
    return design_result("two_user_ao", scenario, masks, P, rounds=rounds,
                         deactivated=tuple(counts))


def _ao_counts(n, traj, fits, h_sq, P, noise, u1, u2):
    out = [0, 0]
    a1, a2 = fits[u1].slope, fits[u2].slope
    if a1 > 0 and a2 > 0 and min(P) > 0:
        l1, l2 = closed_form_counts(n, traj[u1].coupling[0], a1, traj[u2].coupling[0], a2,
                                    P[u1], P[u2], h_sq[u1], h_sq[u2], noise)
        out[u1], out[u2] = l1, l2
    return tuple(out)


def full_array_equal(scenario):
    """Full array with the equal power split (no optimization)."""
    K, n = scenario.H.shape
    return design_result("full_array_equal", scenario, np.ones((K, n), dtype=bool),
                         PowerVector.equal(K, scenario.total_power))


def pdd_scheme(scenario, config=None):
    res = pdd_solve(scenario, config)
    return design_result("pdd", scenario, res.masks, res.powers, converged=res.converged,
                         outer_iters=len(res.state.trace), rate_terminal=res.rate_terminal,
                         best_outer_iter=res.best_outer_iter, state=res.state)


def _pdd_config(params):
    params = dict(params)
    power = params.pop("power", None)
    if isinstance(power, dict):
        params["power"] = PowerSolverConfig(**power)
    return PddConfig(**params)


def run_scheme(name, scenario, params=None, rng_seed=None):
    """Run scheme ``name`` with keyword ``params`` (plain values, as read from a config)."""
    params = dict(params or {})
    if name == "greedy":
        return greedy_scheme(scenario, **params)
    if name == "pdd":
        return pdd_scheme(scenario, _pdd_config(params))
    if name == "pdd_equal_power":
        return pdd_equal_power(scenario, _pdd_config(params))
    if name == "full_array":
        return full_array_baseline(scenario)
    if name == "full_array_equal":
        return full_array_equal(scenario)
    if name == "two_user_ao":
        return two_user_ao(scenario, **params)
    if name == "random_as":
        return random_as_baseline(scenario, rng_seed=rng_seed, **params)
    if name == "common_as":
        return common_as_baseline(scenario, **params)
    if name == "subarray":
        return subarray_baseline(scenario, **params)
    if name == "oracle":
        return exhaustive_oracle(scenario, **params)
    raise ValueError(f"unknown scheme {name!r}; known: {SCHEME_NAMES}")


SCHEME_NAMES = ("greedy", "pdd", "pdd_equal_power", "full_array", "full_array_equal",
                "two_user_ao", "random_as", "common_as", "subarray", "oracle")


def active_counts(result) -> np.ndarray:
    return np.asarray(result.masks).sum(axis=1)
