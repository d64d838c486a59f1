"""Input checks shared by the solvers and estimators.

scikit-learn's ``check_array`` refuses complex input, so channel matrices
are validated here instead.
"""

import numpy as np


def as_channel_matrix(channels):
    """Stack channels into a ``(K, N)`` complex array of ``h^H`` rows."""
    from mixfield.channel import ChannelVector

    if isinstance(channels, ChannelVector):
        channels = [channels]
    if isinstance(channels, (list, tuple)) and channels and isinstance(channels[0], ChannelVector):
        H = np.stack([c.entries for c in channels])
    else:
        H = np.asarray(channels)
    if H.ndim == 1:
        H = H[None, :]
    if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
        raise ValueError(f"expected a (K, N) channel matrix, got shape {H.shape}")
    H = H.astype(complex, copy=False)
    if not np.all(np.isfinite(H)):
        raise ValueError("channel matrix contains non-finite entries")
    return H


def as_weight_matrix(weights, shape):
    W = np.asarray(weights, dtype=complex)
    if W.ndim == 1:
        W = W[None, :]
    if W.shape != shape:
        raise ValueError(f"beam matrix has shape {W.shape}, expected {shape}")
    return W


def as_mask_matrix(masks, shape, binary=True):
    """Return masks as a float ``(K, N)`` array; binary unless told otherwise."""
    from mixfield.metrics import SelectionMask

    if isinstance(masks, SelectionMask):
        masks = [masks]
    if isinstance(masks, (list, tuple)) and masks and isinstance(masks[0], SelectionMask):
        V = np.stack([m.bits for m in masks]).astype(float)
    else:
        V = np.asarray(masks, dtype=float)
    if V.ndim == 1:
        V = V[None, :]
    if V.shape != shape:
        raise ValueError(f"masks have shape {V.shape}, expected {shape}")
    if binary and not np.all((V == 0) | (V == 1)):
        raise ValueError("selection masks must be binary")
    return V


def check_active_counts(M):
    M = np.asarray(M, dtype=float)
    if np.any(M <= 0):
        bad = np.flatnonzero(M <= 0).tolist()
        raise ValueError(f"users {bad} have no active antennas")
    return M


def as_power_array(powers, num_users, budget=None):
    from mixfield.metrics import PowerVector

    if isinstance(powers, PowerVector):
        budget = powers.budget if budget is None else budget
        powers = powers.powers
    P = np.asarray(powers, dtype=float).reshape(-1)
    if P.shape[0] != num_users:
        raise ValueError(f"expected {num_users} powers, got {P.shape[0]}")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ValueError("powers must be finite and nonnegative")
    if budget is not None and P.sum() > budget * (1 + 1e-9):
        raise ValueError(f"total power {P.sum()} exceeds budget {budget}")
    return P


def check_positive(value, name):
    value = float(value)
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def user_weights(weights, num_users):
    if weights is None:
        return np.ones(num_users)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != num_users or np.any(w < 0):
        raise ValueError("user weights must be K nonnegative numbers")
    return w
