"""Quasi-in-phase greedy antenna deactivation.

Two rules are provided.  The two-user rule removes the active antenna whose
correlation contribution is closest in phase to the running aggregate; the
multi-user rule removes the antenna whose removal leaves the smallest total
residual coupling, evaluated exactly for every candidate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from mixfield._validation import as_channel_matrix, as_weight_matrix
from mixfield.metrics import SelectionMask, mrt_weights

_PHASE_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class DeactivationTrajectory:
    """Greedy removal history.

    ``coupling[l]`` is the coupling factor after ``l`` removals, ``order[l]``
    the antenna removed at step ``l + 1``.  ``phase_gap[l]`` is the wrapped
    phase difference of that removal (two-user rule only).
    """

    order: np.ndarray
    coupling: np.ndarray
    num_antennas: int
    rule: str
    phase_gap: np.ndarray | None = None

    @property
    def steps(self) -> int:
        return len(self.order)

    def mask(self, step: int) -> np.ndarray:
        """Boolean activation vector after ``step`` removals."""
        if not 0 <= step <= self.steps:
            raise ValueError(f"step {step} outside trajectory of {self.steps} removals")
        bits = np.ones(self.num_antennas, dtype=bool)
        bits[self.order[:step]] = False
        return bits

    def reductions(self) -> np.ndarray:
        return self.coupling[:-1] - self.coupling[1:]

    def to_csv(self, path_or_file):
        rows = [(step, float(c), int(self.order[step - 1]) if step else "")
                for step, c in enumerate(self.coupling)]
        _write_rows(path_or_file, ("step", "coupling", "removed_index"), rows)


def _write_rows(path_or_file, header, rows):
    if hasattr(path_or_file, "write"):
        writer = csv.writer(path_or_file, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(path_or_file, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, header, rows)


@dataclass(frozen=True)
class DecayFit:
    intercept: float
    slope: float
    fit_range: tuple
    residual_rmse: float

    def __call__(self, step):
        return self.intercept - self.slope * np.asarray(step, dtype=float)


def correlation_contributions(victim_channel, own_weight) -> np.ndarray:
    """Per-antenna contributions ``[h]_n^* [w]_n`` to the victim's received amplitude.

    ``victim_channel`` is in the stored row form (entries of ``h^H``) and
    ``own_weight`` is the beam itself, so the contributions sum to ``h^H w``.
    """
    h = np.asarray(getattr(victim_channel, "entries", victim_channel), dtype=complex)
    w = np.asarray(own_weight, dtype=complex)
    if h.shape != w.shape:
        raise ValueError(f"length mismatch: {h.shape} vs {w.shape}")
    return h * w


def _wrapped_gap(a, b):
    return np.abs(np.angle(np.exp(1j * (a - b))))


def greedy_deactivate_two_user(c, target_M: int = 1) -> DeactivationTrajectory:
    """Phase-aligned greedy removal down to ``target_M`` active antennas.

    ``c`` holds the unit-steering contributions of the own beam to the victim;
    the coupling after ``l`` removals is ``N / sqrt(N - l) * |s|``.
    """
    c = np.asarray(c, dtype=complex)
    n = c.shape[0]
    if not 1 <= target_M <= n:
        raise ValueError(f"target_M must lie in [1, {n}], got {target_M}")
    active = np.ones(n, dtype=bool)
    s = c.sum()
    coupling = [np.sqrt(n) * abs(s)]
    order, gaps = [], []
    phases = np.angle(c)
    for step in range(n - target_M):
        idx = np.flatnonzero(active)
        gap = _wrapped_gap(np.angle(s), phases[idx])
        tied = idx[gap <= gap.min() + _PHASE_TIE]
        if tied.size > 1:
            resid = np.abs(s - c[tied])
            tied = tied[resid <= resid.min()]
        j = int(tied[0])
        gaps.append(float(_wrapped_gap(np.angle(s), phases[j])))
        active[j] = False
        s = s - c[j]
        order.append(j)
        coupling.append(n / np.sqrt(n - step - 1) * abs(s))
    return DeactivationTrajectory(np.array(order, dtype=int), np.array(coupling), n,
                                  "phase", np.array(gaps))


def first_order_reduction(step, phase_gap, num_antennas):
    """First-order per-step coupling reduction ``cos(gap) / sqrt(N - step)``."""
    step = np.asarray(step)
    if np.any(step < 0) or np.any(step >= num_antennas):
        raise ValueError("step must satisfy 0 <= step < N")
    return np.cos(phase_gap) / np.sqrt(num_antennas - step)


def pre_floor_length(coupling, floor_fraction=0.1) -> int:
    """Number of leading steps in the linear-decay regime (at least 2).

    The regime ends at the first step that either falls below
    ``floor_fraction`` of the initial coupling or stops decreasing.
    """
    coupling = np.asarray(coupling, dtype=float)
    i0 = coupling[0]
    for step in range(1, len(coupling)):
        if coupling[step] < floor_fraction * i0 or coupling[step] >= coupling[step - 1]:
            return max(step, 2)
    return len(coupling)


def fit_linear_decay(traj, fit_fraction: float = 1.0, floor_fraction: float = 0.1) -> DecayFit:
    """Least-squares line through the pre-floor part of a coupling trajectory.

    ``fit_fraction`` keeps only that leading share of the pre-floor steps.
    """
    if not 0 < fit_fraction <= 1:
        raise ValueError("fit_fraction must lie in (0, 1]")
    coupling = np.asarray(getattr(traj, "coupling", traj), dtype=float)
    if coupling.size < 2 or np.all(coupling == 0):
        raise ValueError("no decay to fit")
    length = pre_floor_length(coupling, floor_fraction)
    length = max(2, int(np.ceil(fit_fraction * length)))
    length = min(length, coupling.size)
    steps = np.arange(length, dtype=float)
    y = coupling[:length]
    slope, intercept = np.polyfit(steps, y, 1)
    resid = y - (intercept + slope * steps)
    return DecayFit(float(intercept), float(-slope), (0, length - 1),
                    float(np.sqrt(np.mean(resid**2))))


def relaxed_counts(num_antennas, i1, a1, i2, a2, p1, p2, h1_sq, h2_sq, noise):
    """Stationary points of the relaxed two-user count problem (before rounding)."""
    n = float(num_antennas)
    l1 = n - np.sqrt((n - i1 / a1) ** 2 + noise / (a1**2 * h2_sq * p1))
    l2 = n - np.sqrt((n - i2 / a2) ** 2 + noise / (a2**2 * h1_sq * p2))
    return l1, l2


def closed_form_counts(num_antennas, i1, a1, i2, a2, p1, p2, h1_sq, h2_sq, noise):
    """Deactivation counts ``(l1, l2)``: floor of the relaxed optimum, clamped to ``[0, N-1]``."""
    if a1 <= 0 or a2 <= 0:
        raise ValueError("decay slopes must be positive")
    if min(p1, p2, h1_sq, h2_sq, noise) <= 0:
        raise ValueError("powers, gains and noise must be positive")
    l1, l2 = relaxed_counts(num_antennas, i1, a1, i2, a2, p1, p2, h1_sq, h2_sq, noise)
    hi = num_antennas - 1
    return (int(np.clip(np.floor(l1), 0, hi)), int(np.clip(np.floor(l2), 0, hi)))


def approx_sum_rate(l1, l2, num_antennas, i1, a1, i2, a2, p1, p2, h1_sq, h2_sq, noise):
    """High-SINR two-user sum-rate under the linear coupling model."""
    n = num_antennas
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    r1 = np.log2(p1 * h1_sq * (n - l1) / (p2 * h1_sq * (i2 - a2 * l2) ** 2 + noise))
    r2 = np.log2(p2 * h2_sq * (n - l2) / (p1 * h2_sq * (i1 - a1 * l1) ** 2 + noise))
    return r1 + r2


def interference_contributions(k, H, W) -> np.ndarray:
    """``z[i, n] = [h_i]_n^* [w_k]_n`` for every victim ``i != k`` (rows ordered by victim)."""
    z = H * W[k][None, :]
    return np.delete(z, k, axis=0)


def greedy_deactivate_multi_user(k: int, channels, beams=None, min_active: int = 1):
    """Greedy deactivation for user ``k`` against all other users.

    Every step removes the active antenna minimizing the exact post-removal
    total coupling.  The returned mask is the trajectory point with the
    smallest coupling among those keeping at least ``min_active`` antennas
    (ties go to more active antennas).

    Returns
    -------
    mask : SelectionMask
    trajectory : DeactivationTrajectory
    """
    H = as_channel_matrix(channels)
    W = mrt_weights(channels) if beams is None else as_weight_matrix(beams, H.shape)
    num_users, n = H.shape
    if num_users < 2:
        raise ValueError("multi-user deactivation needs at least two users")
    if not 1 <= min_active <= n:
        raise ValueError("min_active must lie in [1, N]")
    z = interference_contributions(k, H, W)
    traj = _residual_greedy(z, n)
    best = int(np.argmin(traj.coupling[: n - min_active + 1]))
    return SelectionMask(traj.mask(best)), traj


def _residual_greedy(z, n):
    """Remove antennas one by one, each time minimizing ``sum_i |S_i - z[i, n]|``."""
    active = np.ones(n, dtype=bool)
    sums = z.sum(axis=1)
    coupling = [np.abs(sums).sum() / np.sqrt(n)]
    order = []
    for step in range(n - 1):
        idx = np.flatnonzero(active)
        cand = np.abs(sums[:, None] - z[:, idx]).sum(axis=0)
        j = int(idx[np.argmin(cand)])
        active[j] = False
        sums = sums - z[:, j]
        order.append(j)
        coupling.append(np.abs(sums).sum() / np.sqrt(n - step - 1))
    return DeactivationTrajectory(np.array(order, dtype=int), np.array(coupling), n, "residual")


def greedy_common_mask(channels, beams=None, min_active: int = 1):
    """One shared mask minimizing the users' summed coupling factors."""
    H = as_channel_matrix(channels)
    W = mrt_weights(channels) if beams is None else as_weight_matrix(beams, H.shape)
    num_users, n = H.shape
    if num_users < 2:
        return SelectionMask.full(n), None
    z = np.concatenate([interference_contributions(k, H, W) for k in range(num_users)])
    traj = _residual_greedy(z, n)
    best = int(np.argmin(traj.coupling[: n - min_active + 1]))
    return SelectionMask(traj.mask(best)), traj


def greedy_masks(channels, beams=None, min_active: int = 1) -> np.ndarray:
    """Per-user multi-user greedy masks as a boolean ``(K, N)`` array."""
    H = as_channel_matrix(channels)
    if H.shape[0] < 2:
        return np.ones(H.shape, dtype=bool)
    W = mrt_weights(channels) if beams is None else as_weight_matrix(beams, H.shape)
    return np.stack([greedy_deactivate_multi_user(k, H, W, min_active)[0].bits
                     for k in range(H.shape[0])])
