"""Array geometry, steering vectors and channel synthesis.

Vectors are stored in the conjugate ("row") convention: a channel vector
holds the entries of ``h^H`` and a steering vector holds the entries of
``b^H(theta, r)`` or ``a^H(theta)``.  With that convention the received
amplitude of a beam ``w`` is simply ``np.sum(h * w)``, and the MRT beam of a
steering row ``s`` is ``sqrt(N) * conj(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

SPEED_OF_LIGHT = 2.9979e8
# Constant of the effective Rayleigh distance.
RAYLEIGH_EPS = 0.367

FieldLabel = Literal["near", "far"]


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array centred at the origin.

    Parameters
    ----------
    num_antennas : int
        Number of elements ``N``.
    carrier_freq : float
        Carrier frequency in Hz.
    element_spacing : float, optional
        Inter-element spacing in metres. Defaults to half a wavelength.
    """

    num_antennas: int
    carrier_freq: float
    element_spacing: float | None = None

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ValueError(f"num_antennas must be a positive integer, got {self.num_antennas}")
        if not self.carrier_freq > 0:
            raise ValueError("carrier_freq must be positive")
        object.__setattr__(self, "num_antennas", int(self.num_antennas))
        if self.element_spacing is None:
            object.__setattr__(self, "element_spacing", self.wavelength / 2)
        elif not self.element_spacing > 0:
            raise ValueError("element_spacing must be positive")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    @property
    def aperture(self) -> float:
        return (self.num_antennas - 1) * self.element_spacing

    @property
    def offsets(self) -> np.ndarray:
        """Element index offsets ``(2n - N - 1) / 2`` for ``n = 1..N``."""
        n = np.arange(1, self.num_antennas + 1)
        return (2 * n - self.num_antennas - 1) / 2


def _check_angle(theta):
    theta = float(theta)
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"spatial angle must lie in [-1, 1], got {theta}")
    return theta


def rayleigh_distance(geom: ArrayGeometry, theta: float) -> float:
    """Effective Rayleigh distance ``2 eps D^2 (1 - theta^2) / lambda``."""
    theta = _check_angle(theta)
    return 2 * RAYLEIGH_EPS * geom.aperture**2 * (1 - theta**2) / geom.wavelength


def near_field_steering(geom: ArrayGeometry, theta: float, r: float) -> np.ndarray:
    """Uniform-spherical-wave steering row ``b^H(theta, r)`` with unit norm."""
    theta = _check_angle(theta)
    if not r > 0:
        raise ValueError(f"range must be positive, got {r}")
    y = geom.offsets * geom.element_spacing
    dist = np.sqrt(r**2 + y**2 - 2 * r * theta * y)
    phase = -2 * np.pi * (dist - r) / geom.wavelength
    return np.exp(1j * phase) / np.sqrt(geom.num_antennas)


def far_field_steering(geom: ArrayGeometry, theta: float) -> np.ndarray:
    """Planar-wave steering row ``a^H(theta)`` with unit norm."""
    theta = _check_angle(theta)
    n = np.arange(geom.num_antennas)
    return np.exp(1j * np.pi * n * theta) / np.sqrt(geom.num_antennas)


def free_space_gain(geom: ArrayGeometry) -> float:
    """Reference gain at 1 m, ``(lambda / 4 pi)^2``."""
    return (geom.wavelength / (4 * np.pi)) ** 2


@dataclass(frozen=True)
class UserSpec:
    """Single-antenna user at polar position ``(theta, r)``.

    The field label is derived from the array geometry unless given; users
    exactly on the Rayleigh boundary count as far-field.
    """

    theta: float
    r: float
    weight: float = 1.0
    field_label: FieldLabel | None = None

    def __post_init__(self):
        _check_angle(self.theta)
        if not self.r > 0:
            raise ValueError(f"range must be positive, got {self.r}")
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")
        if self.field_label not in (None, "near", "far"):
            raise ValueError(f"unknown field label {self.field_label!r}")

    def label(self, geom: ArrayGeometry) -> FieldLabel:
        if self.field_label is not None:
            return self.field_label
        return "near" if self.r < rayleigh_distance(geom, self.theta) else "far"

    def located(self, geom: ArrayGeometry) -> UserSpec:
        """Return a copy whose field label is pinned against ``geom``."""
        return UserSpec(self.theta, self.r, self.weight, self.label(geom))


@dataclass(frozen=True, eq=False)
class ChannelVector:
    """Channel row ``h^H`` of one user.

    ``steering`` is the unit LoS steering row the analog beam is matched
    to; ``gain`` is the complex LoS gain ``h``.  Under pure LoS,
    ``entries == sqrt(N) * gain * steering``.
    """

    entries: np.ndarray
    gain: complex
    steering: np.ndarray
    field_label: FieldLabel = "far"
    nlos: np.ndarray | None = field(default=None, repr=False)

    @property
    def num_antennas(self) -> int:
        return self.entries.shape[0]

    @property
    def los(self) -> np.ndarray:
        return np.sqrt(self.num_antennas) * self.gain * self.steering

    def with_entries(self, entries: np.ndarray) -> ChannelVector:
        return ChannelVector(np.asarray(entries, dtype=complex), self.gain,
                             self.steering, self.field_label, self.nlos)


def _steering_for(geom, user):
    if user.label(geom) == "near":
        return near_field_steering(geom, user.theta, user.r)
    return far_field_steering(geom, user.theta)


def los_channel(geom: ArrayGeometry, user: UserSpec, beta: float | None = None) -> ChannelVector:
    """LoS channel ``sqrt(N) h b^H`` (near) or ``sqrt(N) h a^H`` (far)."""
    if beta is None:
        beta = free_space_gain(geom)
    if not beta > 0:
        raise ValueError("beta must be positive")
    steering = _steering_for(geom, user)
    gain = np.sqrt(beta) / user.r * np.exp(-2j * np.pi * user.r / geom.wavelength)
    entries = np.sqrt(geom.num_antennas) * gain * steering
    return ChannelVector(entries, complex(gain), steering, user.label(geom))


def rician_channel(geom: ArrayGeometry, user: UserSpec, beta: float | None = None,
                   rician_factor: float = 10.0, num_nlos: int = 4,
                   rng_seed=None) -> ChannelVector:
    """LoS path plus ``num_nlos`` scattered paths at LoS/NLoS power ratio ``rician_factor``.

    Each scatterer sits at a uniform spatial angle in [-1, 1] and a uniform
    range in ``[0.5 r, 1.5 r]``; its path is a near-field steering row with
    a CN(0, |LoS|^2 / (kappa Q)) gain, so that the expected NLoS energy is
    ``|LoS|^2 / kappa``.  ``rician_factor=np.inf`` returns the LoS channel.
    """
    if not rician_factor > 0:
        raise ValueError("rician_factor must be positive")
    if int(num_nlos) != num_nlos or num_nlos < 1:
        raise ValueError("num_nlos must be a positive integer")
    los = los_channel(geom, user, beta)
    if np.isinf(rician_factor):
        return ChannelVector(los.entries, los.gain, los.steering, los.field_label,
                             np.zeros_like(los.entries))
    rng = np.random.default_rng(rng_seed)
    los_energy = np.vdot(los.entries, los.entries).real
    var = los_energy / (rician_factor * num_nlos)
    angles = rng.uniform(-1.0, 1.0, num_nlos)
    ranges = rng.uniform(0.5 * user.r, 1.5 * user.r, num_nlos)
    gains = np.sqrt(var / 2) * (rng.standard_normal(num_nlos) + 1j * rng.standard_normal(num_nlos))
    nlos = np.zeros(geom.num_antennas, dtype=complex)
    for g, th, rq in zip(gains, angles, ranges):
        nlos += g * near_field_steering(geom, th, rq)
    return ChannelVector(los.entries + nlos, los.gain, los.steering, los.field_label, nlos)


@dataclass(frozen=True)
class CsiModel:
    """Gaussian channel-estimation error of relative level ``csi_eps``.

    ``per_entry`` draws each entry with variance ``eps^2 |h|^2 / N`` so the
    error energy is ``eps^2 |h|^2`` on average; ``literal`` uses variance
    ``eps^2 |h|^2`` per entry.
    """

    csi_eps: float | tuple = 0.0
    normalization: Literal["per_entry", "literal"] = "per_entry"

    def __post_init__(self):
        if np.any(np.asarray(self.csi_eps) < 0):
            raise ValueError("csi_eps must be nonnegative")
        if self.normalization not in ("per_entry", "literal"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def level(self, k: int = 0) -> float:
        eps = np.asarray(self.csi_eps, dtype=float)
        return float(eps) if eps.ndim == 0 else float(eps[k])


def apply_csi_error(channel: ChannelVector, model: CsiModel, rng_seed=None, user: int = 0) -> ChannelVector:
    """Return the true channel ``h_hat + dh`` around the estimate ``channel``."""
    eps = model.level(user)
    if eps == 0:
        return channel
    h = channel.entries
    n = h.shape[0]
    var = eps**2 * np.vdot(h, h).real
    if model.normalization == "per_entry":
        var /= n
    rng = np.random.default_rng(rng_seed)
    dh = np.sqrt(var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return channel.with_entries(h + dh)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30) / 10)
