"""Penalty dual decomposition for joint antenna selection and power allocation.

The binary selection is relaxed to ``v`` in ``[0, 1]`` with an auxiliary copy
``vt`` and continuous active counts ``M``; the equalities ``sum(v_k) = M_k``,
``v = vt`` and ``v (1 - vt) = 0`` enter an augmented Lagrangian.  The inner
layer runs block ascent over ``v -> vt -> M -> P``; the outer layer updates
the duals and shrinks the penalty parameter.

All rate computations here use channels scaled by ``1 / sigma``, so the
noise power is 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from mixfield._validation import user_weights
from mixfield.greedy import greedy_masks
from mixfield.power import (
    LOG2E,
    PowerSolverConfig,
    ascend,
    gain_matrix,
    sca_power_from_gains,
)

TRACE_COLUMNS = ("outer_iter", "rho", "g", "sum_rate", "L1", "L2", "L3")


@dataclass(frozen=True)
class PddConfig:
    rho0: float = 800.0
    c: float = 0.6
    tol: float = 1e-3
    max_outer: int = 150
    max_inner: int = 30
    inner_tol: float = 1e-5
    min_active: int = 1
    m_floor: float = 0.5
    threshold: float = 0.5
    block_iters: int = 200
    power: PowerSolverConfig = field(default_factory=lambda: PowerSolverConfig(
        sca_max_iters=20, multistart=False))
    rho_ref_antennas: int | None = 256
    init: str = "greedy"
    fixed_power: bool = False

    def __post_init__(self):
        if self.init not in ("full", "greedy"):
            raise ValueError(f"init must be 'full' or 'greedy', got {self.init!r}")
        if not 0 < self.c < 1:
            raise ValueError("penalty scale c must lie in (0, 1)")
        if self.rho0 <= 0 or self.tol <= 0:
            raise ValueError("rho0 and tol must be positive")
        if self.min_active < 1:
            raise ValueError("min_active must be at least 1")

    def initial_rho(self, num_antennas) -> float:
        """``rho0`` rescaled by ``(N / rho_ref_antennas)^2`` when a reference size is set.

        The balance between the rate terms and the count penalty scales with
        ``N^2``; without the rescaling a large ``rho0`` on a small array lets
        the relaxed counts drop to ``m_floor`` while the masks stay full.
        """
        if self.rho_ref_antennas is None:
            return float(self.rho0)
        return float(self.rho0) * (num_antennas / self.rho_ref_antennas) ** 2


@dataclass
class PddState:
    v: np.ndarray
    vt: np.ndarray
    M: np.ndarray
    P: np.ndarray
    mu: np.ndarray
    delta: np.ndarray
    lam: np.ndarray
    rho: float
    trace: list = field(default_factory=list)
    sweeps: list = field(default_factory=list)

    @classmethod
    def initial(cls, num_users, num_antennas, total_power, rho0, v0=None, P0=None):
        """Zero duals with ``vt = v`` and ``M = sum(v)``; defaults are all-ones and equal power."""
        v = np.ones((num_users, num_antennas)) if v0 is None else np.asarray(v0, dtype=float)
        P = np.full(num_users, total_power / num_users) if P0 is None else np.asarray(P0, dtype=float)
        return cls(
            v=v.copy(),
            vt=v.copy(),
            M=v.sum(axis=1),
            P=P.copy(),
            mu=np.zeros(num_users),
            delta=np.zeros((num_users, num_antennas)),
            lam=np.zeros((num_users, num_antennas)),
            rho=float(rho0),
        )

    def trace_rows(self):
        return [tuple(row[c] for c in TRACE_COLUMNS) for row in self.trace]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            writer.writerows(self.trace_rows())


@dataclass(frozen=True, eq=False)
class PddResult:
    """Outcome of :func:`pdd_solve`.

    ``masks`` and ``powers`` are the best binarized outer iterate
    (``best_outer_iter``); ``rate_terminal`` is what the last iterate alone
    achieves after binarization and power re-optimization.
    """

    masks: np.ndarray
    powers: np.ndarray
    state: PddState
    converged: bool
    rate_relaxed: float
    rate_binarized: float
    rate_terminal: float
    rate_final: float
    best_outer_iter: int


def build_effective_vectors(H, W) -> np.ndarray:
    """``T[k, i, n] = [h_k^H]_n [w_i]_n`` so that ``T[k, i] @ v_i = h_k^H V_i w_i``."""
    return H[:, None, :] * W[None, :, :]


def amplitudes(T, v):
    """``A[k, i] = t_{k,i}^H v_i``."""
    return np.einsum("kin,in->ki", T, v)


def penalty_terms(state: PddState):
    """Augmented-Lagrangian penalties ``(L1, L2, L3)``."""
    rho = state.rho
    if not rho > 0:
        raise ValueError("penalty parameter must be positive")
    r1 = state.v.sum(axis=1) - state.M + rho * state.mu
    r2 = state.v - state.vt + rho * state.delta
    r3 = state.v * (1 - state.vt) + rho * state.lam
    return (float(r1 @ r1) / (2 * rho), float(np.sum(r2**2)) / (2 * rho),
            float(np.sum(r3**2)) / (2 * rho))


def violation(state: PddState) -> float:
    """Largest residual of the three equality constraints."""
    return float(max(np.max(np.abs(state.v * (1 - state.vt))),
                     np.max(np.abs(state.v - state.vt)),
                     np.max(np.abs(state.v.sum(axis=1) - state.M))))


def _rates(T, v, M, P, weights):
    A2 = np.abs(amplitudes(T, v)) ** 2
    rx = A2 * (P / M)[None, :]
    total = rx.sum(axis=1)
    interf = total - np.diag(rx)
    return weights @ (np.log2(1 + total) - np.log2(1 + interf))


def objective(state, T, weights):
    """Weighted sum-rate of the relaxed state minus the three penalties."""
    return float(_rates(T, state.v, state.M, state.P, weights) - sum(penalty_terms(state)))


def _block_config(config):
    return PowerSolverConfig(inner_max_iters=config.block_iters, inner_tol=1e-12)


def v_surrogate(state, T, weights):
    """Concave minorant of the penalized objective in ``v`` at the current state.

    Returns ``(value, gradient)`` callables.
    """
    v_hat, M, P, rho = state.v, state.M, state.P, state.rho
    K = v_hat.shape[0]
    scale = P / M
    A_hat = amplitudes(T, v_hat)
    off = ~np.eye(K, dtype=bool)
    b_hat = (np.abs(A_hat) ** 2 * scale[None, :] * off).sum(axis=1)

    def parts(v):
        A = amplitudes(T, v)
        a_lb = ((2 * np.real(np.conj(A_hat) * A) - np.abs(A_hat) ** 2) * scale[None, :]).sum(axis=1)
        b = (np.abs(A) ** 2 * scale[None, :] * off).sum(axis=1)
        return A, a_lb, b

    def pen(v):
        r1 = v.sum(axis=1) - state.M + rho * state.mu
        r2 = v - state.vt + rho * state.delta
        r3 = v * (1 - state.vt) + rho * state.lam
        return r1, r2, r3

    def value(v):
        _, a_lb, b = parts(v)
        if np.any(1 + a_lb <= 0):
            return -np.inf
        r1, r2, r3 = pen(v)
        rate = weights @ (np.log2(1 + a_lb) - np.log2(1 + b_hat) - LOG2E * (b - b_hat) / (1 + b_hat))
        return float(rate - (r1 @ r1 + np.sum(r2**2) + np.sum(r3**2)) / (2 * rho))

    def grad(v):
        A, a_lb, _ = parts(v)
        ca = (weights / (1 + a_lb))[:, None] * scale[None, :] * np.conj(A_hat)
        cb = (weights / (1 + b_hat))[:, None] * scale[None, :] * np.conj(A) * off
        g_rate = 2 * LOG2E * np.real(np.einsum("ki,kin->in", ca - cb, T))
        r1, r2, r3 = pen(v)
        g_pen = (r1[:, None] + r2 + r3 * (1 - state.vt)) / rho
        return g_rate - g_pen

    return value, grad


def inner_update_v(state, T, weights, config=None):
    """One SCA step on the ``v`` block over the box ``[0, 1]``."""
    config = config or PddConfig()
    value, grad = v_surrogate(state, T, weights)
    v, val = ascend(state.v, value, grad, _block_config(config), lambda z: np.clip(z, 0.0, 1.0))
    if not np.isfinite(val):
        raise FloatingPointError(f"non-finite v surrogate ({val}) at rho={state.rho}")
    return v


def inner_update_vtilde(state):
    """Exact minimizer of ``L2 + L3`` in ``vt``."""
    v, rho = state.v, state.rho
    return (v + v**2 + rho * state.delta + rho * state.lam * v) / (1 + v**2)


def m_surrogate(state, T, weights):
    """Concave minorant of the ``M``-dependent objective at the current ``M``."""
    v, M_hat, P, rho = state.v, state.M, state.P, state.rho
    K = v.shape[0]
    off = ~np.eye(K, dtype=bool)
    q = np.abs(amplitudes(T, v)) ** 2 * P[None, :]
    b_hat = (q / M_hat[None, :] * off).sum(axis=1)
    s = v.sum(axis=1)

    def value(M):
        xi_lb = 1 / M_hat - (M - M_hat) / M_hat**2
        a_lb = (q * xi_lb[None, :]).sum(axis=1)
        if np.any(1 + a_lb <= 0):
            return -np.inf
        b = (q / M[None, :] * off).sum(axis=1)
        r1 = s - M + rho * state.mu
        rate = weights @ (np.log2(1 + a_lb) - np.log2(1 + b_hat) - LOG2E * (b - b_hat) / (1 + b_hat))
        return float(rate - r1 @ r1 / (2 * rho))

    def grad(M):
        xi_lb = 1 / M_hat - (M - M_hat) / M_hat**2
        a_lb = (q * xi_lb[None, :]).sum(axis=1)
        ga = -(weights / (1 + a_lb)) @ q / M_hat**2
        gb = -(weights / (1 + b_hat)) @ (q * off) / M**2
        r1 = s - M + rho * state.mu
        return LOG2E * (ga - gb) + r1 / rho

    return value, grad


def inner_update_M(state, T, weights, config=None):
    """One SCA step on the active counts over ``[m_floor, N]``."""
    config = config or PddConfig()
    n = state.v.shape[1]
    value, grad = m_surrogate(state, T, weights)
    M, _ = ascend(state.M, value, grad, _block_config(config),
                  lambda z: np.clip(z, config.m_floor, n))
    return M


def inner_update_P(state, T, weights, total_power, config=None):
    """SCA power allocation at the current continuous masks, warm-started."""
    config = config or PddConfig()
    G = np.abs(amplitudes(T, state.v)) ** 2 / state.M[None, :]
    P, _ = sca_power_from_gains(G, total_power, 1.0, weights, config.power, initial=state.P)
    P = np.maximum(P, 0.0)
    if P.sum() > total_power:
        P *= total_power / P.sum()
    return P


def outer_update(state, config=None):
    """Dual ascent step, penalty shrink ``rho <- c rho``, and the new violation."""
    config = config or PddConfig()
    rho = state.rho
    lam = state.lam + state.v * (1 - state.vt) / rho
    delta = state.delta + (state.v - state.vt) / rho
    mu = state.mu + (state.v.sum(axis=1) - state.M) / rho
    new = replace(state, lam=lam, delta=delta, mu=mu, rho=config.c * rho)
    return new, violation(state)


def binarize(v, threshold=0.5, min_active=1):
    """Threshold relaxed masks, topping up users left below ``min_active``."""
    bits = v >= threshold
    for k in range(v.shape[0]):
        if bits[k].sum() < min_active:
            bits[k, np.argsort(-v[k], kind="stable")[:min_active]] = True
    return bits


def inner_sweep(state, T, weights, total_power, config):
    """One ``v -> vt -> M -> P`` pass; returns the new state and per-block objectives."""
    vals = [objective(state, T, weights)]
    state = replace(state, v=inner_update_v(state, T, weights, config))
    vals.append(objective(state, T, weights))
    state = replace(state, vt=inner_update_vtilde(state))
    vals.append(objective(state, T, weights))
    state = replace(state, M=inner_update_M(state, T, weights, config))
    vals.append(objective(state, T, weights))
    if not config.fixed_power:
        state = replace(state, P=inner_update_P(state, T, weights, total_power, config))
    vals.append(objective(state, T, weights))
    return state, vals


def pdd_solve(scenario, config=None, weights=None):
    """Run the two-layer PDD method on ``scenario``.

    Returns
    -------
    PddResult
        Best binarized outer iterate with re-optimized powers, the final
        state with traces, and the relaxed, binarized (same powers),
        terminal and returned sum-rates.
    """
    config = config or PddConfig()
    H, W = scenario.H, scenario.W
    K, n = H.shape
    weights = user_weights(scenario.weights if weights is None else weights, K)
    T = build_effective_vectors(H, W) / np.sqrt(scenario.noise_power)
    v0 = P0 = None
    if config.init == "greedy" and K > 1:
        v0 = greedy_masks(H, W, config.min_active).astype(float)
    if v0 is not None and not config.fixed_power:
        P0, _ = sca_power_from_gains(gain_matrix(H, W, v0), scenario.total_power,
                                     scenario.noise_power, weights)
    state = PddState.initial(K, n, scenario.total_power, config.initial_rho(n), v0, P0)
    converged = False
    seen, candidates = set(), {}
    for it in range(config.max_outer):
        prev = objective(state, T, weights)
        for _ in range(config.max_inner):
            state, vals = inner_sweep(state, T, weights, scenario.total_power, config)
            state.sweeps.append((it, vals))
            cur = vals[-1]
            if abs(cur - prev) <= config.inner_tol * max(1.0, abs(cur)):
                break
            prev = cur
        bits = binarize(state.v, config.threshold, config.min_active)
        key = bits.tobytes()
        if key not in seen:
            seen.add(key)
            candidates[it] = (it, bits, state.P.copy())
        L1, L2, L3 = penalty_terms(state)
        rho_used = state.rho
        rate = float(_rates(T, state.v, state.M, state.P, weights))
        state, g = outer_update(state, config)
        state.trace.append(dict(outer_iter=it, rho=rho_used, g=g, sum_rate=rate,
                                L1=L1, L2=L2, L3=L3))
        if g <= config.tol:
            converged = True
            break
    rate_relaxed = state.trace[-1]["sum_rate"]
    bits = binarize(state.v, config.threshold, config.min_active)
    Vb = bits.astype(float)
    rate_bin = float(_rates(T, Vb, Vb.sum(axis=1), state.P, weights))
    powers, rate_terminal = _binary_power(H, W, Vb, T, state.P, scenario, weights, None,
                                          config.fixed_power)
    best_rate, best_it = rate_terminal, len(state.trace) - 1
    best_bits, best_powers = bits, powers
    for it, cand in sorted(candidates.items(), key=lambda kv: kv[1][0]):
        Vc = cand[1].astype(float)
        P_c, r_c = _binary_power(H, W, Vc, T, cand[2], scenario, weights, config.power,
                                config.fixed_power)
        if r_c > best_rate:
            best_rate, best_it, best_bits, best_powers = r_c, it, cand[1], P_c
    return PddResult(best_bits, best_powers, state, converged, rate_relaxed, rate_bin,
                     rate_terminal, best_rate, best_it)


def _binary_power(H, W, Vb, T, P_prev, scenario, weights, power_config, fixed=False):
    """Power for a binary mask: SCA (multistart when ``power_config`` is None) or ``P_prev`` if better."""
    if fixed:
        return P_prev.copy(), float(_rates(T, Vb, Vb.sum(axis=1), P_prev, weights))
    G = gain_matrix(H, W, Vb)
    initial = None if power_config is None else P_prev
    P, _ = sca_power_from_gains(G, scenario.total_power, scenario.noise_power, weights,
                                power_config, initial)
    M = Vb.sum(axis=1)
    r_new = float(_rates(T, Vb, M, P, weights))
    r_old = float(_rates(T, Vb, M, P_prev, weights))
    return (P_prev.copy(), r_old) if r_old > r_new else (P, r_new)
