"""Power allocation for fixed antenna selections.

Rates depend on the powers only through the per-watt gain matrix
``G[k, i] = |h_k^H V_i w_i|^2 / M_i``.  The SCA routine works on powers
normalized by the budget and gains normalized by ``P_tot / sigma^2``, which
makes it exactly invariant to jointly scaling budget and noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mixfield._validation import as_mask_matrix, as_power_array, user_weights
from mixfield.metrics import PowerVector, beam_amplitudes

LOG2E = 1.0 / np.log(2.0)


@dataclass(frozen=True)
class PowerSolverConfig:
    grid_points: int = 4001
    sca_max_iters: int = 200
    sca_tol: float = 1e-10
    inner_step: float = 1.0
    inner_max_iters: int = 500
    inner_tol: float = 1e-13
    multistart: bool = True

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if self.sca_max_iters < 1 or self.inner_max_iters < 1:
            raise ValueError("iteration limits must be at least 1")
        if self.sca_tol <= 0 or self.inner_tol <= 0 or self.inner_step <= 0:
            raise ValueError("tolerances and step must be positive")


def project_capped_simplex(y, budget=1.0):
    """Euclidean projection onto ``{x >= 0, sum(x) <= budget}``."""
    y = np.asarray(y, dtype=float)
    x = np.maximum(y, 0.0)
    if x.sum() <= budget:
        return x
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - budget
    ind = np.arange(1, y.size + 1)
    rho = np.flatnonzero(u - css / ind > 0)[-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(y - tau, 0.0)


def gain_matrix(H, W, V, M=None):
    """Per-watt received powers ``|t_{k,i}^H v_i|^2 / M_i``; ``V`` may be continuous."""
    if M is None:
        M = V.sum(axis=1)
    return np.abs(beam_amplitudes(H, W, V)) ** 2 / np.asarray(M, dtype=float)[None, :]


def weighted_rate(G, P, noise, weights):
    """Weighted sum-rate for gain matrix ``G`` and powers ``P``."""
    rx = G @ P
    sig = np.diag(G) * P
    return float(weights @ np.log2((rx + noise) / (rx - sig + noise)))


def _split(Gn):
    off = Gn.copy()
    np.fill_diagonal(off, 0.0)
    return off


def surrogate(x, Gn, off, b_hat, weights):
    """Concave SCA minorant of the normalized weighted sum-rate at ``b_hat``."""
    a = Gn @ x
    b = off @ x
    if np.any(1 + a <= 0):
        return -np.inf
    val = np.log2(1 + a) - np.log2(1 + b_hat) - LOG2E * (b - b_hat) / (1 + b_hat)
    return float(weights @ val)


def surrogate_grad(x, Gn, off, b_hat, weights):
    a = Gn @ x
    return LOG2E * (Gn.T @ (weights / (1 + a)) - off.T @ (weights / (1 + b_hat)))


def ascend(x, f, grad, config, project):
    """Monotone projected gradient ascent.

    Steps start from the Barzilai-Borwein estimate (``config.inner_step`` on
    the first iteration) and are halved until the objective does not drop.
    Returns ``(x, f(x))``.
    """
    step = config.inner_step
    fx = f(x)
    g = grad(x)
    for _ in range(config.inner_max_iters):
        while True:
            x_new = project(x + step * g)
            f_new = f(x_new)
            if f_new >= fx:
                break
            step *= 0.5
            if step < 1e-20:
                return x, fx
        gain = f_new - fx
        g_new = grad(x_new)
        s_vec, y_vec = x_new - x, g_new - g
        x, fx, g = x_new, f_new, g_new
        if gain <= config.inner_tol * max(1.0, abs(fx)):
            break
        curv = -np.vdot(s_vec, y_vec).real
        step = np.vdot(s_vec, s_vec).real / curv if curv > 0 else 2.0 * step
    return x, fx


def project_capped_simplex_rows(Y, budget=1.0):
    """Row-wise :func:`project_capped_simplex` for a ``(B, K)`` array."""
    Y = np.asarray(Y, dtype=float)
    X = np.maximum(Y, 0.0)
    over = X.sum(axis=1) > budget
    if over.any():
        Yo = Y[over]
        U = -np.sort(-Yo, axis=1)
        css = np.cumsum(U, axis=1) - budget
        ind = np.arange(1, Y.shape[1] + 1)
        cond = U - css / ind > 0
        rho = Y.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
        tau = css[np.arange(len(rho)), rho] / (rho + 1)
        X[over] = np.maximum(Yo - tau[:, None], 0.0)
    return X


class _Batch:
    """Surrogate pieces for a stack of normalized gain matrices."""

    def __init__(self, Gn, weights):
        self.Gn = Gn
        self.off = Gn.copy()
        idx = np.arange(Gn.shape[1])
        self.off[:, idx, idx] = 0.0
        self.w = weights

    def true_objective(self, x, rows):
        a = np.einsum("bkj,bj->bk", self.Gn[rows], x)
        b = np.einsum("bkj,bj->bk", self.off[rows], x)
        return (np.log2(1 + a) - np.log2(1 + b)) @ self.w

    def value(self, x, rows, b_hat):
        a = np.einsum("bkj,bj->bk", self.Gn[rows], x)
        b = np.einsum("bkj,bj->bk", self.off[rows], x)
        val = np.log2(1 + a) - np.log2(1 + b_hat) - LOG2E * (b - b_hat) / (1 + b_hat)
        out = val @ self.w
        out[np.any(1 + a <= 0, axis=1)] = -np.inf
        return out

    def grad(self, x, rows, b_hat):
        a = np.einsum("bkj,bj->bk", self.Gn[rows], x)
        return LOG2E * (np.einsum("bkj,bk->bj", self.Gn[rows], self.w / (1 + a))
                        - np.einsum("bkj,bk->bj", self.off[rows], self.w / (1 + b_hat)))


def _ascend_batch(batch, x, rows, b_hat, config):
    """Row-wise version of :func:`ascend` on the SCA surrogate; returns the new ``x``."""
    x = x.copy()
    step = np.full(len(rows), config.inner_step)
    fx = batch.value(x, rows, b_hat)
    g = batch.grad(x, rows, b_hat)
    live = np.ones(len(rows), dtype=bool)
    for _ in range(config.inner_max_iters):
        L = np.flatnonzero(live)
        if L.size == 0:
            break
        x_new = np.empty((L.size, x.shape[1]))
        f_new = np.empty(L.size)
        pend = np.arange(L.size)
        while pend.size:
            r = L[pend]
            cand = project_capped_simplex_rows(x[r] + step[r, None] * g[r])
            fc = batch.value(cand, rows[r], b_hat[r])
            ok = fc >= fx[r]
            x_new[pend[ok]] = cand[ok]
            f_new[pend[ok]] = fc[ok]
            bad = pend[~ok]
            step[L[bad]] *= 0.5
            dead = step[L[bad]] < 1e-20
            live[L[bad[dead]]] = False
            pend = bad[~dead]
        keep = live[L]
        L, x_new, f_new = L[keep], x_new[keep], f_new[keep]
        if L.size == 0:
            break
        gain = f_new - fx[L]
        g_new = batch.grad(x_new, rows[L], b_hat[L])
        s_vec, y_vec = x_new - x[L], g_new - g[L]
        x[L], fx[L], g[L] = x_new, f_new, g_new
        done = gain <= config.inner_tol * np.maximum(1.0, np.abs(f_new))
        live[L[done]] = False
        curv = -np.einsum("bk,bk->b", s_vec, y_vec)
        ss = np.einsum("bk,bk->b", s_vec, s_vec)
        pos = curv > 0
        new_step = 2.0 * step[L]
        new_step[pos] = ss[pos] / curv[pos]
        step[L] = new_step
    return x


def _sca_batch(Gn, weights, X0, config):
    """SCA from every row of ``X0`` on the matching gain matrix; returns ``(X, traces)``."""
    batch = _Batch(Gn, weights)
    B = Gn.shape[0]
    rows = np.arange(B)
    X = project_capped_simplex_rows(X0)
    traces = [[v] for v in batch.true_objective(X, rows)]
    live = np.ones(B, dtype=bool)
    for _ in range(config.sca_max_iters):
        L = np.flatnonzero(live)
        if L.size == 0:
            break
        b_hat = np.einsum("bkj,bj->bk", batch.off[L], X[L])
        X[L] = _ascend_batch(batch, X[L], L, b_hat, config)
        obj = batch.true_objective(X[L], L)
        if not np.all(np.isfinite(obj)):
            bad = L[~np.isfinite(obj)][0]
            raise FloatingPointError(
                f"numerical blow-up in SCA power allocation: objective={obj}, x={X[bad]}")
        for j, r in enumerate(L):
            prev = traces[r][-1]
            traces[r].append(float(obj[j]))
            if abs(obj[j] - prev) <= config.sca_tol * max(1.0, abs(obj[j])):
                live[r] = False
    return X, [np.array(t) for t in traces]


def _starts(K, initial, total_power, config):
    if initial is not None:
        return np.atleast_2d(as_power_array(initial, K) / total_power)
    starts = [np.full(K, 1.0 / K)]
    if config.multistart and K > 1:
        starts += list(np.eye(K))
    return np.array(starts)


def sca_power_batch(G, total_power, noise, weights=None, config=None):
    """Multistart SCA for a stack of gain matrices ``G`` of shape ``(B, K, K)``.

    Returns
    -------
    powers : ndarray, shape (B, K)
    rates : ndarray, shape (B,)
        Weighted sum-rate of each returned allocation.
    """
    config = config or PowerSolverConfig()
    G = np.asarray(G, dtype=float)
    B, K, _ = G.shape
    weights = user_weights(weights, K)
    X0 = _starts(K, None, total_power, config)
    S = X0.shape[0]
    Gn = np.repeat(G * (total_power / noise), S, axis=0)
    X, traces = _sca_batch(Gn, weights, np.tile(X0, (B, 1)), config)
    final = np.array([t[-1] for t in traces]).reshape(B, S)
    best = np.argmax(final, axis=1)
    X = X.reshape(B, S, K)[np.arange(B), best]
    return X * total_power, final[np.arange(B), best]


def sca_power_from_gains(G, total_power, noise, weights=None, config=None, initial=None):
    """SCA power allocation on a gain matrix.

    Without ``initial`` (and with ``config.multistart``) the equal split and
    every single-user vertex are tried as starting points and the best
    result is kept.

    Returns
    -------
    powers : ndarray
    trace : ndarray
        True weighted sum-rate after each SCA round of the returned run.
    """
    config = config or PowerSolverConfig()
    G = np.asarray(G, dtype=float)
    K = G.shape[0]
    weights = user_weights(weights, K)
    X0 = _starts(K, initial, total_power, config)
    Gn = np.repeat((G * (total_power / noise))[None], X0.shape[0], axis=0)
    X, traces = _sca_batch(Gn, weights, X0, config)
    best = int(np.argmax([t[-1] for t in traces]))
    return X[best] * total_power, traces[best]


def _scenario_parts(scenario, masks):
    H, W = scenario.H, scenario.W
    V = as_mask_matrix(masks, H.shape)
    return H, W, V


def sca_power_alloc(scenario, masks, config=None, initial=None):
    """SCA power allocation for fixed binary masks of ``scenario``."""
    H, W, V = _scenario_parts(scenario, masks)
    G = gain_matrix(H, W, V)
    P, trace = sca_power_from_gains(G, scenario.total_power, scenario.noise_power,
                                    scenario.weights, config, initial)
    return PowerVector(_fit_budget(P, scenario.total_power), scenario.total_power), trace


def _fit_budget(P, budget):
    P = np.maximum(P, 0.0)
    total = P.sum()
    return P * (budget / total) if total > budget else P


def two_user_power_search(scenario, masks, config=None):
    """Grid search over ``P_1`` in ``[0, P_tot]`` with ``P_2 = P_tot - P_1``."""
    config = config or PowerSolverConfig()
    if scenario.num_users != 2:
        raise ValueError("two_user_power_search needs exactly two users")
    H, W, V = _scenario_parts(scenario, masks)
    G = gain_matrix(H, W, V)
    P1 = np.linspace(0.0, scenario.total_power, config.grid_points)
    P = np.stack([P1, scenario.total_power - P1])
    rates = grid_rates(G, P, scenario.noise_power, scenario.weights)
    best = int(np.argmax(rates))
    return PowerVector(_fit_budget(P[:, best], scenario.total_power), scenario.total_power)


def grid_rates(G, P, noise, weights):
    """Weighted sum-rates for a batch of power columns ``P`` of shape ``(K, B)``."""
    rx = G @ P
    sig = np.diag(G)[:, None] * P
    return weights @ np.log2((rx + noise) / (rx - sig + noise))
