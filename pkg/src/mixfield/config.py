"""Experiment configuration files.

A config is a YAML mapping (schema version 1)::

    version: 1
    name: demo
    geometry: {num_antennas: 64, carrier_freq: 30.0e9}   # element_spacing optional
    users:
      - {theta: 0.0, r: 5.0}                 # fixed spatial angle / range (m)
      - {theta: [-0.1, 0.1], r: 150.0, field: far, weight: 2.0}
      - {phi: [-1.047, 1.047], r_rayleigh: [0.05, 0.2]}
    total_power_dbm: 30        # or total_power (W)
    noise_power_dbm: -80       # or noise_power (W)
    beta_db: -62               # or beta; omitted means (lambda / 4 pi)^2
    channel: {kind: rician, rician_factor_db: 10, num_nlos: 4}   # or {kind: los}
    csi: {csi_eps: 0.05, normalization: per_entry}
    seeds: [0, 1, 2]
    sweep: {mode: product, axes: {total_power: [0.1, 1.0]}}
    schemes:
      - greedy
      - {name: random_as, params: {trials: 200}}
    extras: [correlation]

Two-element lists draw a uniform value per seed.  ``phi`` is the physical
angle (``theta = sin(phi)``); ``r_rayleigh`` is a range in units of the
user's Rayleigh distance.  dB/dBm keys are converted to linear values at
parse time and :meth:`ScenarioConfig.to_dict` writes linear keys only, so
parsing is round-trip stable.

Sweep axes are dotted paths into the config mapping.  ``users.<i>``,
``users.*``, ``users.near`` and ``users.far`` (by declared ``field``) select
users; dB keys are allowed as axes.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field

import yaml

from mixfield.channel import CsiModel, db_to_linear, dbm_to_watts

SCHEMA_VERSION = 1
SWEEP_MODES = ("product", "zip")
EXTRAS = ("correlation",)


def _scalar_or_range(value, name):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"{name} range must have two entries, got {value}")
        lo, hi = float(value[0]), float(value[1])
        if lo > hi:
            raise ValueError(f"{name} range is reversed: {value}")
        return (lo, hi)
    return float(value)


@dataclass(frozen=True)
class UserConfig:
    theta: float | tuple | None = None
    phi: float | tuple | None = None
    r: float | tuple | None = None
    r_rayleigh: float | tuple | None = None
    field: str | None = None
    weight: float = 1.0

    def __post_init__(self):
        if (self.theta is None) == (self.phi is None):
            raise ValueError("each user needs exactly one of theta or phi")
        if (self.r is None) == (self.r_rayleigh is None):
            raise ValueError("each user needs exactly one of r or r_rayleigh")
        if self.field not in (None, "near", "far"):
            raise ValueError(f"field hint must be near or far, got {self.field!r}")
        if self.weight < 0:
            raise ValueError("user weight must be nonnegative")

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"theta", "phi", "r", "r_rayleigh", "field", "weight"}
        if unknown:
            raise ValueError(f"unknown user keys {sorted(unknown)}")
        kw = {k: _scalar_or_range(d[k], k) for k in ("theta", "phi", "r", "r_rayleigh")
              if d.get(k) is not None}
        return cls(field=d.get("field"), weight=float(d.get("weight", 1.0)), **kw)

    def to_dict(self):
        out = {}
        for k in ("theta", "phi", "r", "r_rayleigh"):
            v = getattr(self, k)
            if v is not None:
                out[k] = list(v) if isinstance(v, tuple) else v
        if self.field is not None:
            out["field"] = self.field
        out["weight"] = self.weight
        return out


@dataclass(frozen=True)
class ChannelConfig:
    kind: str = "los"
    rician_factor: float | None = None
    num_nlos: int = 4

    def __post_init__(self):
        if self.kind not in ("los", "rician"):
            raise ValueError(f"channel kind must be los or rician, got {self.kind!r}")
        if self.kind == "rician" and (self.rician_factor is None or self.rician_factor < 0):
            raise ValueError("rician channel needs a nonnegative rician_factor")
        if self.num_nlos < 1:
            raise ValueError("num_nlos must be at least 1")

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        factor = d.get("rician_factor")
        if "rician_factor_db" in d:
            db = d["rician_factor_db"]
            factor = math.inf if _is_inf(db) else float(db_to_linear(float(db)))
        elif factor is not None:
            factor = math.inf if _is_inf(factor) else float(factor)
        return cls(d.get("kind", "los"), factor, int(d.get("num_nlos", 4)))

    def to_dict(self):
        out = {"kind": self.kind, "num_nlos": self.num_nlos}
        if self.rician_factor is not None:
            out["rician_factor"] = "inf" if math.isinf(self.rician_factor) else self.rician_factor
        return out


def _is_inf(value):
    return isinstance(value, str) and value.strip().lower() in ("inf", "infinity") or (
        isinstance(value, float) and math.isinf(value))


@dataclass(frozen=True)
class SchemeConfig:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_value(cls, value):
        if isinstance(value, str):
            return cls(value)
        unknown = set(value) - {"name", "params"}
        if unknown:
            raise ValueError(f"unknown scheme keys {sorted(unknown)}")
        return cls(value["name"], dict(value.get("params") or {}))

    def to_dict(self):
        return {"name": self.name, "params": copy.deepcopy(self.params)}


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "product"
    axes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in SWEEP_MODES:
            raise ValueError(f"sweep mode must be one of {SWEEP_MODES}")
        if self.mode == "zip" and len({len(v) for v in self.axes.values()}) > 1:
            raise ValueError("zip sweep axes must have equal lengths")

    def points(self):
        """List of ``{axis: value}`` overrides in sweep order (one empty point without axes)."""
        if not self.axes:
            return [{}]
        keys = list(self.axes)
        if self.mode == "zip":
            combos = zip(*(self.axes[k] for k in keys))
        else:
            combos = itertools.product(*(self.axes[k] for k in keys))
        return [dict(zip(keys, c)) for c in combos]

    def to_dict(self):
        return {"mode": self.mode, "axes": {k: list(v) for k, v in self.axes.items()}}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    num_antennas: int
    carrier_freq: float
    users: tuple
    total_power: float
    noise_power: float
    seeds: tuple
    schemes: tuple
    element_spacing: float | None = None
    beta: float | None = None
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    csi: CsiModel = field(default_factory=CsiModel)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    extras: tuple = ()
    notes: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    def __post_init__(self):
        from mixfield.harness import known_schemes

        if self.version != SCHEMA_VERSION:
            raise ValueError(f"unsupported config version {self.version}")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if not self.users:
            raise ValueError("at least one user is required")
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be positive")
        if not self.total_power > 0 or not self.noise_power > 0:
            raise ValueError("total_power and noise_power must be positive")
        for s in self.schemes:
            if s.name not in known_schemes():
                raise ValueError(f"unknown scheme {s.name!r}; known: {known_schemes()}")
        for e in self.extras:
            if e not in EXTRAS:
                raise ValueError(f"unknown extra {e!r}; known: {EXTRAS}")

    @classmethod
    def from_dict(cls, d):
        d = copy.deepcopy(d)
        known = {"version", "name", "geometry", "users", "total_power", "total_power_dbm",
                 "noise_power", "noise_power_dbm", "beta", "beta_db", "channel", "csi",
                 "seeds", "sweep", "schemes", "extras", "notes"}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        geom = d.get("geometry") or {}
        csi = d.get("csi") or {}
        eps = csi.get("csi_eps", 0.0)
        sweep = d.get("sweep") or {}
        return cls(
            name=str(d.get("name", "experiment")),
            num_antennas=int(geom["num_antennas"]),
            carrier_freq=float(geom.get("carrier_freq", 30e9)),
            element_spacing=_opt_float(geom.get("element_spacing")),
            users=tuple(UserConfig.from_dict(u) for u in d["users"]),
            total_power=_power(d, "total_power"),
            noise_power=_power(d, "noise_power"),
            beta=_beta(d),
            channel=ChannelConfig.from_dict(d.get("channel")),
            csi=CsiModel(tuple(float(e) for e in eps) if isinstance(eps, list) else float(eps),
                         csi.get("normalization", "per_entry")),
            seeds=tuple(int(s) for s in d.get("seeds", [0])),
            schemes=tuple(SchemeConfig.from_value(s) for s in d.get("schemes", [])),
            sweep=SweepConfig(sweep.get("mode", "product"), dict(sweep.get("axes") or {})),
            extras=tuple(d.get("extras", ())),
            notes=dict(d.get("notes") or {}),
            version=int(d.get("version", SCHEMA_VERSION)),
        )

    def to_dict(self):
        geom = {"num_antennas": self.num_antennas, "carrier_freq": self.carrier_freq}
        if self.element_spacing is not None:
            geom["element_spacing"] = self.element_spacing
        eps = self.csi.csi_eps
        out = {
            "version": self.version,
            "name": self.name,
            "geometry": geom,
            "users": [u.to_dict() for u in self.users],
            "total_power": self.total_power,
            "noise_power": self.noise_power,
            "channel": self.channel.to_dict(),
            "csi": {"csi_eps": list(eps) if isinstance(eps, tuple) else eps,
                    "normalization": self.csi.normalization},
            "seeds": list(self.seeds),
            "schemes": [s.to_dict() for s in self.schemes],
            "sweep": self.sweep.to_dict(),
            "extras": list(self.extras),
            "notes": copy.deepcopy(self.notes),
        }
        if self.beta is not None:
            out["beta"] = self.beta
        return out

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, allow_unicode=True)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def with_overrides(self, overrides) -> ScenarioConfig:
        """Config with dotted-path ``overrides`` applied (a sweep point)."""
        d = self.to_dict()
        for path, value in overrides.items():
            set_path(d, path, value)
        return ScenarioConfig.from_dict(d)

    def replace_seeds(self, seeds) -> ScenarioConfig:
        d = self.to_dict()
        d["seeds"] = [int(s) for s in seeds]
        return ScenarioConfig.from_dict(d)


def _opt_float(v):
    return None if v is None else float(v)


def _power(d, key):
    if f"{key}_dbm" in d:
        return float(dbm_to_watts(float(d[f"{key}_dbm"])))
    if key not in d:
        raise ValueError(f"config needs {key} or {key}_dbm")
    return float(d[key])


def _beta(d):
    if "beta_db" in d and d["beta_db"] is not None:
        return float(db_to_linear(float(d["beta_db"])))
    return _opt_float(d.get("beta"))


_UNIT_SUFFIXES = ("_dbm", "_db")


def set_path(d, path, value):
    """Set ``value`` at dotted ``path`` in mapping ``d`` (see module docs for user selectors)."""
    parts = path.split(".")
    targets = [d]
    for i, part in enumerate(parts[:-1]):
        nxt = []
        for t in targets:
            if isinstance(t, list):
                nxt.extend(_select_users(t, part))
            else:
                nxt.append(t.setdefault(part, {}))
        targets = nxt
    last = parts[-1]
    for t in targets:
        if isinstance(t, list):
            raise ValueError(f"sweep path {path!r} must end at a field, not a list")
        for suffix in _UNIT_SUFFIXES:
            if last.endswith(suffix):
                t.pop(last[: -len(suffix)], None)
        for suffix in _UNIT_SUFFIXES:
            t.pop(last + suffix, None)
        if last in ("theta", "phi"):
            t.pop("phi" if last == "theta" else "theta", None)
        if last in ("r", "r_rayleigh"):
            t.pop("r_rayleigh" if last == "r" else "r", None)
        t[last] = copy.deepcopy(value)


def _select_users(users, key):
    if key == "*":
        return users
    if key in ("near", "far"):
        return [u for u in users if u.get("field") == key]
    try:
        return [users[int(key)]]
    except (ValueError, IndexError):
        raise ValueError(f"bad user selector {key!r}") from None


def load_config(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return ScenarioConfig.from_dict(yaml.safe_load(fh))
