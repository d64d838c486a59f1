"""Named experiment presets, sized to run on a single desktop core.

Optimization-heavy presets shrink the array to at most 64 antennas; near
users are then moved in by the aperture ratio ``(N - 1) / 255`` so they
stay inside the shrunken near-field region.  Each preset records the
original and the reduced scale under ``notes``.
"""

from __future__ import annotations

import numpy as np

from mixfield.config import ScenarioConfig

FULL_N = 256
NOISE_DBM = -80.0
FREQ = 30e9

# five-user placement: two near users then three far users, (theta, range in m)
FIVE_USERS = ((-0.3, 5.82), (0.17, 6.21), (-0.22, 150.0), (0.09, 175.0), (0.25, 200.0))


def _grid(lo, hi, num):
    return [round(float(x), 6) for x in np.linspace(lo, hi, num)]


def _desk_r(r, num_antennas):
    """Near-user range moved in by the aperture ratio."""
    return round(r * (num_antennas - 1) / (FULL_N - 1), 6)


def five_users(num_antennas, count=5, jitter=0.02):
    """Five-user placement at ``num_antennas``; angles jitter by ``+-jitter`` per seed."""
    users = []
    for theta, r in FIVE_USERS[:count]:
        near = r < 100.0
        users.append({"theta": [round(theta - jitter, 6), round(theta + jitter, 6)] if jitter
                      else theta,
                      "r": _desk_r(r, num_antennas) if near else r,
                      "field": "near" if near else "far"})
    return users


def _base(name, N, users, schemes, **kw):
    d = {"version": 1, "name": name, "geometry": {"num_antennas": N, "carrier_freq": FREQ},
         "users": users, "total_power": 1.0, "noise_power_dbm": NOISE_DBM,
         "seeds": [0], "schemes": schemes}
    d.update(kw)
    return d


def _notes(full, desk):
    return {"original_scale": full, "desk_scale": desk}


def _two_user(theta_far=0.0):
    return [{"theta": 0.0, "r": 5.0, "field": "near"},
            {"theta": theta_far, "r": 150.0, "field": "far"}]


def _raw_presets():
    sweep_theta = {"axes": {"users.1.theta": _grid(-0.5, 0.5, 101)}}
    ordering = ["pdd", "greedy", "full_array", {"name": "random_as", "params": {"trials": 200}},
                "common_as", {"name": "subarray", "params": {"num_subarrays": 5}}]
    return {
        "correlation_gap": _base("correlation_gap", FULL_N, _two_user(), ["full_array_equal"], sweep=sweep_theta,
                      extras=["correlation"],
                      notes=_notes("N=256, near (0, 5 m), far (dtheta, 150 m)", "unchanged")),
        "decay_fit": _base("decay_fit", FULL_N, _two_user(),
                      [{"name": "decay", "params": {"oracle_max_N": 12}}],
                      sweep={"mode": "product",
                             "axes": {"users.0.theta": [-0.3, 0.0, 0.3],
                                      "users.0.r": [5.0, 10.0, 20.0]}},
                      notes=_notes("N=256 trajectories with a branch-and-bound benchmark",
                                   "N=256 trajectories and line fits, no oracle "
                                   "(see decay_oracle)")),
        "decay_oracle": _base("decay_oracle", 12, _two_user(),
                             [{"name": "decay", "params": {"oracle_max_N": 12}}],
                             sweep={"mode": "product",
                                    "axes": {"users.0.theta": [-0.3, 0.0, 0.3],
                                             "users.0.r_rayleigh": [0.042, 0.084, 0.168]}},
                             notes=_notes("N=256 with a branch-and-bound benchmark",
                                          "N=12 with an exhaustive oracle per cardinality; "
                                          "near ranges 5, 10, 20 m become the same fractions "
                                          "of the Rayleigh distance")),
        "two_user_gap": _base("two_user_gap", FULL_N, _two_user(),
                      ["two_user_ao", "greedy", "full_array"], sweep=sweep_theta,
                      notes=_notes("N=256, near (0, 5 m), far (dtheta, 150 m)", "unchanged")),
        "multi_user_decay": _base("multi_user_decay", FULL_N, five_users(FULL_N, jitter=0.0), ["multi_decay"],
                      notes=_notes("N=256, five users", "unchanged")),
        "pdd_convergence": _base("pdd_convergence", 32, five_users(32, 3, jitter=0.0), ["pdd_trace"],
                      notes=_notes("N=256, K=5", "N=32, K=3, first three users of the "
                                   "five-user placement, near ranges scaled by 31/255")),
        "power_sweep": _base("power_sweep", 64, five_users(64), ordering, seeds=[0, 1],
                      sweep={"axes": {"total_power": [0.1, 0.316228, 1.0]}},
                      notes=_notes("N=256, K=5, 2000 random-AS trials",
                                   "N=64, K=5, 200 random-AS trials, near ranges scaled "
                                   "by 63/255, angles jittered by 0.02 per seed")),
        "csi_error": _base("csi_error", 64, five_users(64), ["greedy", "full_array"], seeds=[0, 1, 2],
                      sweep={"axes": {"csi.csi_eps": [0.0, 0.05, 0.1]}},
                      notes=_notes("N=256, K=5", "N=64, K=5, greedy and full array only")),
        "rician": _base("rician", 64, five_users(64), ["greedy", "full_array"], seeds=[0, 1, 2],
                        channel={"kind": "rician", "rician_factor_db": 0.0, "num_nlos": 4},
                        sweep={"axes": {"channel.rician_factor_db": [-10.0, 0.0, 10.0, "inf"]}},
                        notes=_notes("N=256, K=5", "N=64, K=5, greedy and full array only")),
        "weight_sweep": _base("weight_sweep", 64, five_users(64), ["greedy"], seeds=[0, 1, 2],
                       sweep={"axes": {"users.far.weight": [1.0, 2.0, 4.0, 8.0]}},
                       notes=_notes("N=256, K=5, weighted sum-rate",
                                    "N=64, K=5, greedy selection with weighted SCA powers")),
    }


def figure_suites() -> dict:
    """``{name: ScenarioConfig}`` for every preset."""
    return {name: ScenarioConfig.from_dict(d) for name, d in _raw_presets().items()}


def preset(name) -> ScenarioConfig:
    raw = _raw_presets()
    if name not in raw:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(raw)}")
    return ScenarioConfig.from_dict(raw[name])
