"""MRT beams, achievable rates and interference coupling factors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mixfield._validation import (
    as_channel_matrix,
    as_mask_matrix,
    as_power_array,
    as_weight_matrix,
    check_active_counts,
    check_positive,
    user_weights,
)


@dataclass(frozen=True, eq=False)
class SelectionMask:
    """Binary activation vector of one user's RF chain."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 1 or not np.all((bits == 0) | (bits == 1)):
            raise ValueError("mask bits must be a 1-D 0/1 vector")
        object.__setattr__(self, "bits", bits.astype(bool))

    @property
    def active_count(self) -> int:
        return int(self.bits.sum())

    @classmethod
    def full(cls, n):
        return cls(np.ones(n, dtype=bool))


@dataclass(frozen=True, eq=False)
class PowerVector:
    """Per-user transmit powers under a sum budget (watts)."""

    powers: np.ndarray
    budget: float

    def __post_init__(self):
        check_positive(self.budget, "budget")
        P = as_power_array(self.powers, np.size(self.powers), self.budget)
        object.__setattr__(self, "powers", P)

    @classmethod
    def equal(cls, num_users, budget):
        return cls(np.full(num_users, budget / num_users), budget)


@dataclass(frozen=True, eq=False)
class RateReport:
    per_user_rate: np.ndarray
    per_user_sinr: np.ndarray
    interference_matrix: np.ndarray
    weights: np.ndarray

    @property
    def sum_rate(self) -> float:
        return float(self.per_user_rate.sum())

    @property
    def weighted_sum_rate(self) -> float:
        return float(self.weights @ self.per_user_rate)

    def to_row(self, **extra) -> dict:
        """Flat CSV row: caller-supplied keys, per-user rates, sum and weighted sum."""
        row = dict(extra)
        for k, rate in enumerate(self.per_user_rate):
            row[f"rate_{k}"] = float(rate)
        row["sum_rate"] = self.sum_rate
        row["weighted_sum_rate"] = self.weighted_sum_rate
        return row


def mrt_weights(channels) -> np.ndarray:
    """MRT analog beams ``w_k = sqrt(N) * steering_k`` as a ``(K, N)`` array.

    ChannelVector inputs are matched to their LoS steering; raw channel rows
    are matched to their own normalized direction.
    """
    from mixfield.channel import ChannelVector

    if isinstance(channels, ChannelVector):
        channels = [channels]
    if isinstance(channels, (list, tuple)) and channels and isinstance(channels[0], ChannelVector):
        S = np.stack([c.steering for c in channels])
    else:
        H = as_channel_matrix(channels)
        S = H / np.linalg.norm(H, axis=1, keepdims=True)
    return np.sqrt(S.shape[1]) * np.conj(S)


def beam_amplitudes(H, W, V=None):
    """Matrix ``A[k, i] = h_k^H V_i w_i`` of received beam amplitudes."""
    if V is None:
        return H @ W.T
    return H @ (V * W).T


def sinr_from_gains(G, P, noise):
    """SINR per user from ``G[k, i]``, the per-watt received power of beam i at user k."""
    rx = G * P[None, :]
    signal = np.diag(rx).copy()
    interference = rx.sum(axis=1) - signal
    return signal / (interference + noise), rx


def _report(G, P, noise, weights):
    sinr, rx = sinr_from_gains(G, P, noise)
    interference = rx.copy()
    np.fill_diagonal(interference, 0.0)
    return RateReport(np.log2(1 + sinr), sinr, interference, weights)


def _prepare(channels, weights_beam, K_weights):
    H = as_channel_matrix(channels)
    W = mrt_weights(channels) if weights_beam is None else as_weight_matrix(weights_beam, H.shape)
    return H, W, user_weights(K_weights, H.shape[0])


def rate_full_array(channels, powers, noise_power, beams=None, weights=None) -> RateReport:
    """Rates of the full-array two-stage design with ``P_k / N`` scaling."""
    H, W, wts = _prepare(channels, beams, weights)
    noise = check_positive(noise_power, "noise_power")
    P = as_power_array(powers, H.shape[0])
    G = np.abs(beam_amplitudes(H, W)) ** 2 / H.shape[1]
    return _report(G, P, noise, wts)


def rate_with_selection(channels, masks, powers, noise_power, beams=None, weights=None) -> RateReport:
    """Rates under per-user antenna selection with ``P_k / M_k`` scaling."""
    H, W, wts = _prepare(channels, beams, weights)
    noise = check_positive(noise_power, "noise_power")
    V = as_mask_matrix(masks, H.shape)
    M = check_active_counts(V.sum(axis=1))
    P = as_power_array(powers, H.shape[0])
    G = np.abs(beam_amplitudes(H, W, V)) ** 2 / M[None, :]
    return _report(G, P, noise, wts)


def coupling_factors(H, W, V):
    """Interference coupling factor ``I_k`` of every user at once."""
    M = check_active_counts(V.sum(axis=1))
    A = np.abs(beam_amplitudes(H, W, V))
    np.fill_diagonal(A, 0.0)
    return A.sum(axis=0) / np.sqrt(M)


def interference_coupling(k: int, channels, masks, beams=None):
    """Total interference user ``k`` imposes on the others.

    Returns
    -------
    total : float
        ``sum_{i != k} |h_i^H V_k w_k| / sqrt(M_k)``.
    per_victim : ndarray
        The ``K - 1`` summands, ordered by victim index.
    """
    H = as_channel_matrix(channels)
    W = mrt_weights(channels) if beams is None else as_weight_matrix(beams, H.shape)
    V = as_mask_matrix(masks, H.shape)
    mk = V[k].sum()
    if mk <= 0:
        raise ValueError(f"user {k} has no active antennas")
    amp = np.abs(H @ (V[k] * W[k])) / np.sqrt(mk)
    per_victim = np.delete(amp, k)
    return float(per_victim.sum()), per_victim
