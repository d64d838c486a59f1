"""Experiment runner: scenario realization, scheme rows, CSV and manifest output.

Every (sweep point, seed) pair is one work item.  Its master seed is the
config seed itself, split by :func:`split_streams` into independent
placement, NLoS, CSI and random-AS streams, so all schemes of a row (and
all sweep points of a seed) see the same random draws.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from mixfield.baselines import all_masks
from mixfield.channel import ArrayGeometry, UserSpec, rayleigh_distance
from mixfield.greedy import fit_linear_decay, greedy_deactivate_multi_user, first_order_reduction
from mixfield.pdd import TRACE_COLUMNS, pdd_solve
from mixfield.scenario import Scenario
from mixfield.schemes import SCHEME_NAMES, _pdd_config, run_scheme, two_user_trajectories

STREAMS = ("placement", "nlos", "csi", "random_as")
ANALYSES = ("decay", "multi_decay", "pdd_trace")
FIXED_COLUMNS = ("row", "sweep_index", "seed")


def known_schemes():
    return SCHEME_NAMES + ANALYSES


def split_streams(seed) -> dict:
    """Per-component ``SeedSequence`` children of ``SeedSequence(seed)``, in ``STREAMS`` order."""
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAMS))
    return dict(zip(STREAMS, children))


def _draw(rng, value):
    if isinstance(value, tuple):
        return float(rng.uniform(value[0], value[1]))
    return float(value)


def realize_users(config, rng):
    """Concrete :class:`UserSpec` list; each user draws angle then range."""
    geom = geometry_of(config)
    users = []
    for u in config.users:
        theta = _draw(rng, u.theta) if u.theta is not None else math.sin(_draw(rng, u.phi))
        if u.r is not None:
            r = _draw(rng, u.r)
        else:
            r = _draw(rng, u.r_rayleigh) * rayleigh_distance(geom, theta)
        users.append(UserSpec(theta, r, weight=u.weight))
    return users


def geometry_of(config):
    return ArrayGeometry(config.num_antennas, config.carrier_freq, config.element_spacing)


def realize_scenario(config, seed):
    """Scenario for one seed of a (sweep-point) config, plus its stream dict."""
    streams = split_streams(seed)
    users = realize_users(config, np.random.default_rng(streams["placement"]))
    kappa = config.channel.rician_factor if config.channel.kind == "rician" else None
    scenario = Scenario.build(geometry_of(config), users, config.total_power, config.noise_power,
                              beta=config.beta, rician_factor=kappa,
                              num_nlos=config.channel.num_nlos, csi=config.csi,
                              seeds=(streams["nlos"], streams["csi"]))
    return scenario, streams


def _field_groups(config, scenario):
    groups = []
    for u, ch in zip(config.users, scenario.channels):
        groups.append(u.field or ch.field_label)
    return groups


def _scalar(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    if isinstance(value, str):
        return value
    if isinstance(value, tuple) and all(isinstance(v, (int, np.integer)) for v in value):
        return ";".join(str(int(v)) for v in value)
    return None


def rate_rows(result, config, scenario):
    """One CSV row for a :class:`SchemeResult`."""
    rep = result.report
    row = {}
    for k, r in enumerate(rep.per_user_rate):
        row[f"rate_{k}"] = float(r)
    row["sum_rate"] = rep.sum_rate
    row["weighted_sum_rate"] = rep.weighted_sum_rate
    row["design_rate"] = result.design_rate
    groups = _field_groups(config, scenario)
    for label in ("near", "far"):
        row[f"{label}_sum_rate"] = float(sum(r for r, g in zip(rep.per_user_rate, groups)
                                             if g == label))
    for k, m in enumerate(np.asarray(result.masks).sum(axis=1)):
        row[f"active_{k}"] = int(m)
    for k, p in enumerate(result.powers.powers):
        row[f"power_{k}"] = float(p)
    for key, value in result.info.items():
        v = _scalar(value)
        if v is not None:
            row[key] = v
    return [row]


def size_oracle(z, scale=1.0):
    """Minimum coupling over subsets of every size; entry ``M - 1`` is for ``M`` active antennas."""
    z = np.atleast_2d(np.asarray(z, dtype=complex))
    B = all_masks(z.shape[1])
    M = B.sum(axis=1)
    vals = scale * np.abs(B.astype(float) @ z.T).sum(axis=1) / np.sqrt(M)
    out = np.full(z.shape[1], np.inf)
    np.minimum.at(out, M - 1, vals)
    return out


def decay_rows(scenario, oracle_max_N=12):
    """Two-user phase-rule trajectories of both beams, with fits and small-N oracle overlay."""
    if scenario.num_users != 2:
        raise ValueError("decay analysis needs exactly two users")
    n = scenario.num_antennas
    S = np.stack([c.steering for c in scenario.channels])
    rows = []
    for k, traj in two_user_trajectories(scenario).items():
        fit = fit_linear_decay(traj)
        oracle = size_oracle(S[1 - k] * np.conj(S[k]), n) if n <= oracle_max_N else None
        red = traj.reductions()
        for step, coupling in enumerate(traj.coupling):
            row = {"user": k, "step": step, "coupling": float(coupling),
                   "fit_slope": fit.slope, "fit_intercept": fit.intercept,
                   "fit_end": fit.fit_range[1], "fit_value": float(fit(step))}
            if step < traj.steps:
                row["removed_index"] = int(traj.order[step])
                row["phase_gap"] = float(traj.phase_gap[step])
                row["reduction"] = float(red[step])
                row["first_order_reduction"] = float(first_order_reduction(step, traj.phase_gap[step], n))
            if oracle is not None:
                row["oracle_coupling"] = float(oracle[n - step - 1])
            rows.append(row)
    return rows


def multi_decay_rows(scenario, min_active=1):
    rows = []
    for k in range(scenario.num_users):
        mask, traj = greedy_deactivate_multi_user(k, scenario.H, scenario.W, min_active)
        chosen = scenario.num_antennas - mask.active_count
        for step, coupling in enumerate(traj.coupling):
            rows.append({"user": k, "step": step, "coupling": float(coupling),
                         "removed_index": int(traj.order[step]) if step < traj.steps else "",
                         "selected_step": chosen})
    return rows


def pdd_trace_rows(scenario, params):
    res = pdd_solve(scenario, _pdd_config(params))
    rows = []
    for entry in res.state.trace:
        row = {c: entry[c] for c in TRACE_COLUMNS}
        row.update(converged=res.converged, rate_final=res.rate_final,
                   rate_terminal=res.rate_terminal)
        rows.append(row)
    return rows


def _scheme_rows(scheme, config, scenario, streams):
    if scheme.name == "decay":
        return decay_rows(scenario, **scheme.params)
    if scheme.name == "multi_decay":
        return multi_decay_rows(scenario, **scheme.params)
    if scheme.name == "pdd_trace":
        return pdd_trace_rows(scenario, scheme.params)
    result = run_scheme(scheme.name, scenario, scheme.params, streams["random_as"])
    return rate_rows(result, config, scenario)


def _extras(config, scenario):
    out = {}
    if "correlation" in config.extras and scenario.num_users >= 2:
        s0, s1 = scenario.channels[0].steering, scenario.channels[1].steering
        out["correlation"] = float(abs(np.vdot(s0, s1)))
    return out


def run_item(config, sweep_index, overrides, seed):
    """All rows of one (sweep point, seed) work item, failures reported per row."""
    base = {"sweep_index": sweep_index, "seed": int(seed)}
    base.update({k: _axis_value(v) for k, v in overrides.items()})
    try:
        point = config.with_overrides(overrides)
        scenario, streams = realize_scenario(point, seed)
        base.update(_extras(point, scenario))
    except Exception as exc:  # report and keep going
        return [dict(base, scheme=s.name, error=_err(exc)) for s in config.schemes]
    rows = []
    for scheme in point.schemes:
        try:
            for r in _scheme_rows(scheme, point, scenario, streams):
                rows.append({**base, "scheme": scheme.name, "error": "", **r})
        except Exception as exc:
            rows.append({**base, "scheme": scheme.name, "error": _err(exc)})
    return rows


def _axis_value(v):
    return v if isinstance(v, (int, float, str)) else json.dumps(v)


def _err(exc):
    return f"{type(exc).__name__}: {exc}"


def _run_item_args(args):
    return run_item(*args)


def run_experiment(config, jobs=1):
    """Rows for every sweep point x seed x scheme, in sweep then seed order."""
    items = [(config, i, point, seed) for i, point in enumerate(config.sweep.points())
             for seed in config.seeds]
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_item_args, items))
    else:
        chunks = [run_item(*it) for it in items]
    rows = [r for chunk in chunks for r in chunk]
    for i, r in enumerate(rows):
        r["row"] = i
    return rows


def header_for(config, rows):
    """Fixed leading columns, then the rest in first-seen order."""
    head = list(FIXED_COLUMNS) + list(config.sweep.axes) + ["scheme", "error"]
    if "correlation" in config.extras:
        head.append("correlation")
    seen = set(head)
    for r in rows:
        for k in r:
            if k not in seen:
                seen.add(k)
                head.append(k)
    return head


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=header, lineterminator="\n", restval="")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: _cell(v) for k, v in r.items()})


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_outputs(config, rows, out_dir, command, extra=None):
    """Write ``<name>.csv``, ``config.yaml`` and ``manifest.json``; returns the CSV path."""
    from mixfield import __version__

    os.makedirs(out_dir, exist_ok=True)
    csv_name = f"{config.name}.csv"
    write_csv(os.path.join(out_dir, csv_name), header_for(config, rows), rows)
    with open(os.path.join(out_dir, "config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(config.to_yaml())
    manifest = {
        "library": "mixfield",
        "library_version": __version__,
        "numpy_version": np.__version__,
        "config_name": config.name,
        "config_hash": config.config_hash(),
        "schema_version": config.version,
        "command": command,
        "seeds": list(config.seeds),
        "rows": len(rows),
        "failed_rows": sum(1 for r in rows if r.get("error")),
        "csv": csv_name,
        "notes": config.notes,
    }
    manifest.update(extra or {})
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    return os.path.join(out_dir, csv_name)


def add_oracle_gaps(rows):
    """Set ``oracle_gap`` (oracle minus scheme weighted sum-rate) on rows sharing an oracle row."""
    best = {}
    for r in rows:
        if r.get("scheme") == "oracle" and not r.get("error"):
            best[(r["sweep_index"], r["seed"])] = r["weighted_sum_rate"]
    for r in rows:
        key = (r["sweep_index"], r["seed"])
        if key in best and "weighted_sum_rate" in r and not r.get("error"):
            r["oracle_gap"] = best[key] - r["weighted_sum_rate"]
    return rows
