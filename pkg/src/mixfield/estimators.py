"""scikit-learn style wrappers around the design schemes.

``fit`` takes either a :class:`~mixfield.scenario.Scenario` or a ``(K, N)``
matrix of channel rows ``h_k^H``; with a Scenario its own power budget,
noise power and weights are used instead of the estimator's.  ``score``
evaluates the fitted design on possibly different (true) channels while
keeping the beams matched to the fit-time estimate.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from mixfield._validation import as_channel_matrix, check_positive
from mixfield.metrics import rate_with_selection
from mixfield.pdd import PddConfig
from mixfield.scenario import Scenario
from mixfield.schemes import run_scheme


class SelectionEstimator(BaseEstimator):
    """Common fit/predict/transform/score logic; subclasses name a scheme."""

    scheme = None

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None):
        self.total_power = total_power
        self.noise_power = noise_power
        self.weights = weights

    def _scheme_params(self):
        return {}

    def _rng_seed(self):
        return None

    def _as_scenario(self, X):
        if isinstance(X, Scenario):
            return X
        check_positive(self.total_power, "total_power")
        check_positive(self.noise_power, "noise_power")
        return Scenario.from_matrix(X, self.total_power, self.noise_power, self.weights)

    def fit(self, X, y=None):
        """Design masks and powers for the channels in ``X``; ``y`` is ignored."""
        scenario = self._as_scenario(X)
        result = run_scheme(self.scheme, scenario, self._scheme_params(), self._rng_seed())
        self.result_ = result
        self.masks_ = np.asarray(result.masks, dtype=bool)
        self.powers_ = result.powers.powers.copy()
        self.beams_ = scenario.W
        self.noise_power_ = scenario.noise_power
        self.weights_ = scenario.weights
        self.n_users_, self.n_antennas_ = self.masks_.shape
        return self

    def _check_channels(self, X):
        H = X.H_true if isinstance(X, Scenario) else as_channel_matrix(X)
        if H.shape != (self.n_users_, self.n_antennas_):
            raise ValueError(f"channels have shape {H.shape}, fitted on "
                             f"{(self.n_users_, self.n_antennas_)}")
        return H

    def predict(self, X=None):
        """Fitted binary masks, shape ``(K, N)``."""
        check_is_fitted(self, "masks_")
        if X is not None:
            self._check_channels(X)
        return self.masks_.copy()

    def transform(self, X=None):
        """Effective precoders ``sqrt(P_k / M_k) V_k w_k`` as a ``(K, N)`` complex array."""
        check_is_fitted(self, "masks_")
        if X is not None:
            self._check_channels(X)
        M = self.masks_.sum(axis=1)
        return np.sqrt(self.powers_ / M)[:, None] * self.masks_ * self.beams_

    def rate_report(self, X):
        check_is_fitted(self, "masks_")
        H = self._check_channels(X)
        return rate_with_selection(H, self.masks_, self.powers_, self.noise_power_,
                                   beams=self.beams_, weights=self.weights_)

    def score(self, X, y=None):
        """Weighted sum-rate (bps/Hz) of the fitted design on channels ``X``."""
        return self.rate_report(X).weighted_sum_rate


class GreedySelector(SelectionEstimator):
    scheme = "greedy"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, min_active=1):
        super().__init__(total_power, noise_power, weights)
        self.min_active = min_active

    def _scheme_params(self):
        return {"min_active": self.min_active}


class PddSelector(SelectionEstimator):
    scheme = "pdd"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, rho0=800.0, c=0.6,
                 tol=1e-3, max_outer=150, max_inner=30, min_active=1, init="greedy",
                 rho_ref_antennas=256):
        super().__init__(total_power, noise_power, weights)
        self.rho0 = rho0
        self.c = c
        self.tol = tol
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.min_active = min_active
        self.init = init
        self.rho_ref_antennas = rho_ref_antennas

    def _scheme_params(self):
        return {k: getattr(self, k) for k in ("rho0", "c", "tol", "max_outer", "max_inner",
                                              "min_active", "init", "rho_ref_antennas")}

    @property
    def config_(self):
        return PddConfig(**self._scheme_params())


class FullArray(SelectionEstimator):
    scheme = "full_array"


class RandomSelection(SelectionEstimator):
    scheme = "random_as"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, trials=200,
                 inject_full=False, random_state=None):
        super().__init__(total_power, noise_power, weights)
        self.trials = trials
        self.inject_full = inject_full
        self.random_state = random_state

    def _scheme_params(self):
        return {"trials": self.trials, "inject_full": self.inject_full}

    def _rng_seed(self):
        return self.random_state


class CommonSelection(SelectionEstimator):
    scheme = "common_as"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, inject_full=True):
        super().__init__(total_power, noise_power, weights)
        self.inject_full = inject_full

    def _scheme_params(self):
        return {"inject_full": self.inject_full}


class SubarraySelection(SelectionEstimator):
    scheme = "subarray"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, num_subarrays=2):
        super().__init__(total_power, noise_power, weights)
        self.num_subarrays = num_subarrays

    def _scheme_params(self):
        return {"num_subarrays": self.num_subarrays}


class ExhaustiveSelection(SelectionEstimator):
    scheme = "oracle"

    def __init__(self, total_power=1.0, noise_power=1e-11, weights=None, max_N=12):
        super().__init__(total_power, noise_power, weights)
        self.max_N = max_N

    def _scheme_params(self):
        return {"max_N": self.max_N}
