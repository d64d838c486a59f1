"""Scenario container tying geometry, users and realized channels together."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from mixfield._validation import as_channel_matrix, user_weights
from mixfield.channel import (
    ArrayGeometry,
    ChannelVector,
    apply_csi_error,
    los_channel,
    rician_channel,
)
from mixfield.metrics import PowerVector, RateReport, mrt_weights, rate_with_selection


@dataclass(frozen=True, eq=False)
class Scenario:
    """A downlink instance: users, channels, power budget and noise power.

    ``channels`` are what the transmitter designs with; ``true_channels``,
    when set, are what the rates are evaluated on (imperfect CSI).
    """

    geometry: ArrayGeometry | None
    users: tuple | None
    channels: tuple
    total_power: float
    noise_power: float
    true_channels: tuple | None = None
    user_weights: tuple | None = None

    def __post_init__(self):
        if self.users is not None and len(self.users) != len(self.channels):
            raise ValueError("one channel per user is required")
        if self.true_channels is not None and len(self.true_channels) != len(self.channels):
            raise ValueError("one true channel per user is required")
        if not self.total_power > 0 or not self.noise_power > 0:
            raise ValueError("total_power and noise_power must be positive")

    @classmethod
    def build(cls, geometry, users, total_power, noise_power, *, beta=None,
              rician_factor=None, num_nlos=4, csi=None, seeds=None):
        """Realize channels for ``users``.

        ``rician_factor=None`` gives pure LoS. ``seeds`` is a pair of
        ``np.random.SeedSequence`` (or ints) for the NLoS and CSI streams.
        """
        users = tuple(u.located(geometry) for u in users)
        nlos_seq, csi_seq = _two_streams(seeds)
        nlos_seeds = nlos_seq.spawn(len(users))
        chans = []
        for k, u in enumerate(users):
            if rician_factor is None:
                chans.append(los_channel(geometry, u, beta))
            else:
                chans.append(rician_channel(geometry, u, beta, rician_factor, num_nlos,
                                            nlos_seeds[k]))
        true = None
        if csi is not None and np.any(np.asarray(csi.csi_eps) > 0):
            csi_seeds = csi_seq.spawn(len(users))
            true = tuple(apply_csi_error(c, csi, csi_seeds[k], user=k) for k, c in enumerate(chans))
        return cls(geometry, users, tuple(chans), float(total_power), float(noise_power), true)

    @classmethod
    def from_matrix(cls, H, total_power, noise_power, weights=None, H_true=None):
        """Scenario from raw ``(K, N)`` channel rows; beams are MRT on each row."""
        H = as_channel_matrix(H)
        K = H.shape[0]
        chans = tuple(_raw_channel(h) for h in H)
        true = None
        if H_true is not None:
            Ht = as_channel_matrix(H_true)
            if Ht.shape != H.shape:
                raise ValueError(f"true channels have shape {Ht.shape}, expected {H.shape}")
            true = tuple(_raw_channel(h) for h in Ht)
        wts = tuple(float(w) for w in user_weights(weights, K))
        return cls(None, None, chans, float(total_power), float(noise_power), true, wts)

    @property
    def num_users(self) -> int:
        return len(self.channels)

    @property
    def num_antennas(self) -> int:
        return self.channels[0].entries.shape[0]

    @property
    def H(self) -> np.ndarray:
        return np.stack([c.entries for c in self.channels])

    @property
    def H_true(self) -> np.ndarray:
        chans = self.channels if self.true_channels is None else self.true_channels
        return np.stack([c.entries for c in chans])

    @property
    def W(self) -> np.ndarray:
        return mrt_weights(list(self.channels))

    @property
    def weights(self) -> np.ndarray:
        if self.users is None:
            return np.array(self.user_weights, dtype=float)
        return np.array([u.weight for u in self.users], dtype=float)

    def with_weights(self, weights) -> Scenario:
        wts = user_weights(weights, self.num_users)
        if self.users is None:
            return replace(self, user_weights=tuple(float(w) for w in wts))
        users = tuple(replace(u, weight=float(w)) for u, w in zip(self.users, wts))
        return replace(self, users=users)

    def with_power(self, total_power) -> Scenario:
        return replace(self, total_power=float(total_power))

    def evaluate(self, masks, powers) -> RateReport:
        """Rates of a design on the true channels, with beams matched to the estimates."""
        P = getattr(powers, "powers", powers)
        return rate_with_selection(self.H_true, masks, P, self.noise_power,
                                   beams=self.W, weights=self.weights)


@dataclass(frozen=True, eq=False)
class SchemeResult:
    """Masks and powers produced by one scheme, with their evaluated rates.

    ``design_rate`` is the weighted sum-rate the scheme saw on the estimated
    channels; ``report`` holds the rates on the true channels.
    """

    scheme: str
    masks: np.ndarray
    powers: PowerVector
    report: RateReport
    design_rate: float
    info: dict = field(default_factory=dict)

    @property
    def sum_rate(self) -> float:
        return self.report.sum_rate

    @property
    def weighted_sum_rate(self) -> float:
        return self.report.weighted_sum_rate


def design_result(scheme, scenario, masks, powers, **info) -> SchemeResult:
    """Bundle a design with its rates on the estimated and the true channels."""
    masks = np.asarray(masks, dtype=bool)
    if not isinstance(powers, PowerVector):
        P = np.maximum(np.asarray(powers, dtype=float), 0.0)
        if P.sum() > scenario.total_power:
            P *= scenario.total_power / P.sum()
        powers = PowerVector(P, scenario.total_power)
    design = rate_with_selection(scenario.H, masks, powers.powers, scenario.noise_power,
                                 beams=scenario.W, weights=scenario.weights)
    return SchemeResult(scheme, masks, powers, scenario.evaluate(masks, powers),
                        design.weighted_sum_rate, dict(info))


def _raw_channel(h):
    norm = np.linalg.norm(h)
    if norm == 0:
        raise ValueError("channel rows must be nonzero")
    return ChannelVector(h.copy(), complex(norm / np.sqrt(h.shape[0])), h / norm, None)


def _two_streams(seeds):
    if seeds is None:
        seeds = (np.random.SeedSequence(0), np.random.SeedSequence(1))
    return tuple(s if isinstance(s, np.random.SeedSequence) else np.random.SeedSequence(s)
                 for s in seeds)

