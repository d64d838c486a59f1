"""Baseline architectures and brute-force oracles for small arrays."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from mixfield.greedy import greedy_common_mask
from mixfield.pdd import PddConfig, pdd_solve
from mixfield.power import (
    PowerSolverConfig,
    gain_matrix,
    grid_rates,
    sca_power_batch,
    sca_power_from_gains,
)
from mixfield.scenario import design_result

BASELINE_KINDS = ("pdd_equal_power", "random_as", "common_as", "subarray", "full_array")


@dataclass(frozen=True)
class BaselineSpec:
    kind: str
    trials: int = 200
    num_subarrays: int | None = None

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}; expected one of {BASELINE_KINDS}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.kind == "subarray" and (self.num_subarrays is None or self.num_subarrays < 1):
            raise ValueError("subarray baseline needs num_subarrays >= 1")

    def run(self, scenario, rng_seed=None):
        if self.kind == "random_as":
            return random_as_baseline(scenario, self.trials, rng_seed)
        if self.kind == "subarray":
            return subarray_baseline(scenario, self.num_subarrays)
        if self.kind == "common_as":
            return common_as_baseline(scenario)
        if self.kind == "full_array":
            return full_array_baseline(scenario)
        return pdd_equal_power(scenario)


def all_masks(num_antennas: int) -> np.ndarray:
    """Every nonempty subset of ``num_antennas`` antennas as a boolean ``(2^N - 1, N)`` array."""
    codes = np.arange(1, 2**num_antennas)
    return ((codes[:, None] >> np.arange(num_antennas)) & 1).astype(bool)


def _best_of(scenario, mask_stack):
    """Optimize powers for every ``(K, N)`` mask set in the stack; return the best as a tuple."""
    H, W = scenario.H, scenario.W
    G = np.stack([gain_matrix(H, W, m.astype(float)) for m in mask_stack])
    P, rates = sca_power_batch(G, scenario.total_power, scenario.noise_power, scenario.weights)
    best = int(np.argmax(rates))
    return best, P[best], rates


def _optimize_power(scenario, masks, config=None):
    G = gain_matrix(scenario.H, scenario.W, np.asarray(masks, dtype=float))
    P, trace = sca_power_from_gains(G, scenario.total_power, scenario.noise_power,
                                    scenario.weights, config)
    return P, float(trace[-1])


def coupling_oracle(z, scale=1.0):
    """Minimum of ``scale * sum_i |sum_{n in S} z[i, n]| / sqrt(|S|)`` over nonempty ``S``.

    ``z`` is one row of contributions (two-user case, with ``scale = N``) or
    one row per victim.

    Returns
    -------
    value : float
    bits : ndarray of bool
    """
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    n = z.shape[1]
    if n > 24:
        raise ValueError(f"coupling oracle limited to N <= 24, got {n}")
    B = all_masks(n)
    vals = scale * np.abs(B.astype(float) @ z.T).sum(axis=1) / np.sqrt(B.sum(axis=1))
    best = int(np.argmin(vals))
    return float(vals[best]), B[best]


def _simplex_grid(num_users, steps):
    pts = [c for c in itertools.product(range(steps + 1), repeat=num_users - 1) if sum(c) <= steps]
    grid = np.array([list(c) + [steps - sum(c)] for c in pts], dtype=float)
    return grid / steps


def exhaustive_oracle(scenario, max_N=12, grid_steps=None, refine_top=16,
                      max_combinations=2**22, chunk=2**14):
    """Globally best masks and powers by enumerating every mask combination.

    Each combination is scored on a full-budget power grid; the ``refine_top``
    best are re-solved with multistart SCA (and a fine grid when K = 2).
    Weighted sum-rates use the scenario weights on the design channels.
    """
    H, W = scenario.H, scenario.W
    K, n = H.shape
    if n > max_N:
        raise ValueError(f"exhaustive oracle limited to N <= {max_N}, got N = {n}")
    if K > 3:
        raise ValueError(f"exhaustive oracle limited to K <= 3, got K = {K}")
    if K == 1:
        masks = np.ones((1, n), dtype=bool)
        return design_result("oracle", scenario, masks, [scenario.total_power], combinations=1)
    B = all_masks(n)
    S = B.shape[0]
    total = S**K
    if total > max_combinations:
        raise ValueError(f"{total} mask combinations exceed max_combinations={max_combinations}")
    Bf = B.astype(float)
    M = Bf.sum(axis=1)
    # cols[k][s, i]: per-watt power of user k's beam at user i under mask s, over noise
    cols = [np.abs(Bf @ (W[k][None, :] * H).T) ** 2 / M[:, None] / scenario.noise_power
            for k in range(K)]
    steps = grid_steps or (100 if K == 2 else 24)
    grid = _simplex_grid(K, steps) * scenario.total_power
    wts = scenario.weights
    best_val = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), (S,) * K)
        G = np.stack([cols[k][idx[k]] for k in range(K)], axis=2)  # (c, i, k)
        rx = np.einsum("cik,qk->cqi", G, grid)
        sig = np.einsum("cii,qi->cqi", G, grid)
        best_val[start:start + len(idx[0])] = (np.log2((rx + 1) / (rx - sig + 1)) @ wts).max(axis=1)
    top = np.argsort(-best_val, kind="stable")[:refine_top]
    config = PowerSolverConfig()
    winner = None
    for flat in top:
        combo = np.unravel_index(flat, (S,) * K)
        masks = np.stack([B[s] for s in combo])
        G = gain_matrix(H, W, masks.astype(float))
        P, _ = sca_power_from_gains(G, scenario.total_power, scenario.noise_power, wts, config)
        cands = [P, _grid_point(G, grid, scenario.noise_power, wts)]
        if K == 2:
            fine = np.linspace(0.0, scenario.total_power, config.grid_points)
            Pf = np.stack([fine, scenario.total_power - fine])
            cands.append(Pf[:, int(np.argmax(grid_rates(G, Pf, scenario.noise_power, wts)))])
        rates = [grid_rates(G, c[:, None], scenario.noise_power, wts)[0] for c in cands]
        j = int(np.argmax(rates))
        if winner is None or rates[j] > winner[0]:
            winner = (rates[j], masks, cands[j])
    _, masks, P = winner
    return design_result("oracle", scenario, masks, P, combinations=int(total))


def _grid_point(G, grid, noise, weights):
    return grid[int(np.argmax(grid_rates(G, grid.T, noise, weights)))]


def random_as_baseline(scenario, trials=200, rng_seed=None, inject_full=False):
    """Best of ``trials`` random per-user masks, each with optimized powers.

    Masks are uniform over nonempty subsets. ``info['best_so_far']`` holds
    the running maximum of the design rate.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    K, n = scenario.H.shape
    rng = np.random.default_rng(rng_seed)
    stack = []
    for t in range(trials):
        if inject_full and t == 0:
            stack.append(np.ones((K, n), dtype=bool))
            continue
        masks = rng.random((K, n)) < 0.5
        for k in range(K):
            while not masks[k].any():
                masks[k] = rng.random(n) < 0.5
        stack.append(masks)
    best, P, rates = _best_of(scenario, stack)
    return design_result("random_as", scenario, stack[best], P, trials=trials,
                         best_so_far=np.maximum.accumulate(rates))


def common_as_baseline(scenario, inject_full=True, min_active=1):
    """One shared subset from the greedy on the summed coupling, powers optimized.

    With ``inject_full`` the all-ones subset competes on sum-rate as well.
    """
    K, n = scenario.H.shape
    mask, _ = greedy_common_mask(scenario.H, scenario.W, min_active)
    cands = [np.tile(mask.bits, (K, 1))]
    if inject_full:
        cands.append(np.ones((K, n), dtype=bool))
    best = None
    for masks in cands:
        P, rate = _optimize_power(scenario, masks)
        if best is None or rate > best[0]:
            best = (rate, masks, P)
    _, masks, P = best
    return design_result("common_as", scenario, masks, P)


def subarray_partitions(num_antennas, num_subarrays):
    """Contiguous equal blocks; the last block takes the remainder."""
    if not 1 <= num_subarrays <= num_antennas:
        raise ValueError(f"need 1 <= U <= N, got U = {num_subarrays}, N = {num_antennas}")
    size = num_antennas // num_subarrays
    bounds = [u * size for u in range(num_subarrays)] + [num_antennas]
    parts = np.zeros((num_subarrays, num_antennas), dtype=bool)
    for u in range(num_subarrays):
        parts[u, bounds[u]:bounds[u + 1]] = True
    return parts


def subarray_baseline(scenario, num_subarrays, max_users=6):
    """Each user served by its own contiguous subarray; the assignment is exhaustive."""
    K, n = scenario.H.shape
    if K > num_subarrays:
        raise ValueError(f"K = {K} users cannot each get one of U = {num_subarrays} subarrays")
    if K > max_users:
        raise ValueError(f"exhaustive subarray assignment limited to K <= {max_users}")
    parts = subarray_partitions(n, num_subarrays)
    assigns = list(itertools.permutations(range(num_subarrays), K))
    best, P, _ = _best_of(scenario, [parts[list(a)] for a in assigns])
    return design_result("subarray", scenario, parts[list(assigns[best])], P,
                         assignment=tuple(assigns[best]))


def full_array_baseline(scenario):
    K, n = scenario.H.shape
    masks = np.ones((K, n), dtype=bool)
    P, _ = _optimize_power(scenario, masks)
    return design_result("full_array", scenario, masks, P)


def pdd_equal_power(scenario, config=None):
    """PDD selection with powers held at the equal split."""
    config = replace(config or PddConfig(), fixed_power=True)
    res = pdd_solve(scenario, config)
    return design_result("pdd_equal_power", scenario, res.masks, res.powers,
                         converged=res.converged, outer_iters=len(res.state.trace))
