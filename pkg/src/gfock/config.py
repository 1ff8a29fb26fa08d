"""Run configuration: a TOML document with fixed sections, validated on load.

Sections and keys (all optional; defaults shown by :data:`DEFAULTS`)::

    [model]      d, L, n_max, N_max, m, g, N, tau, eps, P, vacuum_shift, max_states, seed
    [mollifier]  r_inner, r_outer
    [damper]     enabled, r_inner, r_outer
    [ladder]     eps0, rungs, ratio, u_min, u_max, count
    [schedule]   t, h, fd_halvings, lattice
    [output]     directory, formats

``model.P = 0`` selects the smallest lattice satisfying the quadrature bound.
Unknown sections or keys raise :class:`~gfock.errors.ConfigError` naming the
offending key.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import tomli

from .errors import CapacityError, ConfigError
from .fock import DEFAULT_MAX_STATES, basis_size

__all__ = ["DEFAULTS", "RunConfig", "load_config", "parse_config", "estimate"]

DEFAULTS = {
    "model": {
        "d": 1,
        "L": 2 * math.pi,
        "n_max": 2,
        "N_max": 4,
        "m": 1.0,
        "g": 0.3,
        "N": 3,
        "tau": 0.0,
        "eps": 0.3,
        "P": 0,
        "vacuum_shift": False,
        "max_states": DEFAULT_MAX_STATES,
        "seed": 0,
    },
    "mollifier": {"r_inner": 1.0, "r_outer": 2.0},
    "damper": {"enabled": False, "r_inner": 1.0, "r_outer": 2.0},
    "ladder": {"eps0": 0.4, "rungs": 3, "ratio": 0.5, "u_min": 0.5, "u_max": 4.0, "count": 1001},
    "schedule": {"t": [1.0, 2.0, 5.0, 10.0, 20.0], "h": 0.01, "fd_halvings": 3, "lattice": 5},
    "output": {"directory": "gfock-out", "formats": ["csv", "json"]},
}

_INT_KEYS = {
    "model": {"d", "n_max", "N_max", "N", "P", "max_states", "seed"},
    "ladder": {"rungs", "count"},
    "schedule": {"fd_halvings", "lattice"},
}
_BOOL_KEYS = {"model": {"vacuum_shift"}, "damper": {"enabled"}}


def _coerce(section, key, value, default):
    where = f"{section}.{key}"
    if key in _BOOL_KEYS.get(section, ()):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be a boolean", key=where)
        return value
    if key in _INT_KEYS.get(section, ()):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer", key=where)
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number", key=where)
        if not math.isfinite(value):
            raise ConfigError(f"{where} must be finite", key=where)
        return float(value)
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list", key=where)
        kind = type(default[0])
        if kind is float:
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
                raise ConfigError(f"{where} must be a list of numbers", key=where)
            return [float(v) for v in value]
        if not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where} must be a list of strings", key=where)
        return list(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string", key=where)
        return value
    return value


def _require(cond, key, message):
    if not cond:
        raise ConfigError(f"{key}: {message}", key=key)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration; ``data`` holds every section with defaults filled in."""

    data: dict

    def __getitem__(self, section):
        return self.data[section]

    def as_dict(self):
        return copy.deepcopy(self.data)

    @property
    def model(self):
        return self.data["model"]

    def field_config(self, eps=None):
        from .field import make_field_config
        from .moll import Damper, make_plateau_profile

        mo, mol, dmp = self.data["model"], self.data["mollifier"], self.data["damper"]
        damper = Damper(make_plateau_profile(dmp["r_inner"], dmp["r_outer"]), enabled=dmp["enabled"])
        return make_field_config(
            d=mo["d"], L=mo["L"], n_max=mo["n_max"], N_max=mo["N_max"], m=mo["m"],
            r_inner=mol["r_inner"], r_outer=mol["r_outer"],
            eps=mo["eps"] if eps is None else eps, tau=mo["tau"], damper=damper,
            max_states=mo["max_states"],
        )

    def interaction(self):
        from .hamiltonian import Interaction

        mo = self.data["model"]
        return Interaction(mo["g"], mo["N"], mo["vacuum_shift"])

    def quadrature(self):
        from .hamiltonian import QuadratureGrid, min_points

        mo = self.data["model"]
        P = mo["P"] or min_points(mo["n_max"], mo["N"])
        return QuadratureGrid(P, mo["L"], mo["d"])

    def model_object(self, eps=None):
        from .dynamics import Model

        return Model(self.field_config(eps), self.interaction(), self.quadrature())

    def ladder(self):
        from .genfunc import EpsilonLadder

        la = self.data["ladder"]
        return EpsilonLadder.geometric(la["eps0"], la["rungs"], la["ratio"])


def _validate(data):
    mo = data["model"]
    _require(mo["d"] in (1, 2, 3), "model.d", "must be 1, 2 or 3")
    _require(mo["L"] > 0, "model.L", "must be > 0")
    _require(mo["n_max"] >= 0, "model.n_max", "must be >= 0")
    _require(mo["N_max"] >= 1, "model.N_max", "must be >= 1")
    _require(mo["m"] > 0, "model.m", "must be > 0")
    _require(mo["N"] >= 2, "model.N", "must be >= 2")
    _require(mo["eps"] > 0, "model.eps", "must be > 0")
    _require(mo["P"] >= 0, "model.P", "must be >= 0 (0 selects the minimum)")
    _require(mo["max_states"] >= 1, "model.max_states", "must be >= 1")
    if mo["P"]:
        need = 2 * (mo["N"] + 1) * mo["n_max"] + 1
        _require(
            mo["P"] >= need, "model.P",
            f"quadrature invariant P >= 2*(N+1)*n_max+1 = {need} violated",
        )
    mol = data["mollifier"]
    _require(0 < mol["r_inner"] < mol["r_outer"], "mollifier.r_inner", "need 0 < r_inner < r_outer")
    dmp = data["damper"]
    _require(0 < dmp["r_inner"] < dmp["r_outer"], "damper.r_inner", "need 0 < r_inner < r_outer")
    la = data["ladder"]
    _require(la["eps0"] > 0, "ladder.eps0", "must be > 0")
    _require(la["rungs"] >= 0, "ladder.rungs", "must be >= 0")
    _require(0 < la["ratio"] < 1, "ladder.ratio", "must lie in (0, 1)")
    _require(0 < la["u_min"] < la["u_max"], "ladder.u_min", "need 0 < u_min < u_max")
    _require(la["count"] >= 2, "ladder.count", "must be >= 2")
    sc = data["schedule"]
    _require(len(sc["t"]) > 0, "schedule.t", "must be non-empty")
    _require(sc["h"] > 0, "schedule.h", "must be > 0")
    _require(sc["fd_halvings"] >= 1, "schedule.fd_halvings", "must be >= 1")
    _require(sc["lattice"] >= 1, "schedule.lattice", "must be >= 1")
    out = data["output"]
    _require(all(f in ("csv", "json") for f in out["formats"]), "output.formats", "allowed: csv, json")


def parse_config(raw):
    """Merge a parsed TOML mapping over :data:`DEFAULTS` and validate it."""
    data = copy.deepcopy(DEFAULTS)
    for section, body in raw.items():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section [{section}]", key=section)
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table", key=section)
        for key, value in body.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"unknown key {section}.{key}", key=f"{section}.{key}")
            data[section][key] = _coerce(section, key, value, DEFAULTS[section][key])
    _validate(data)
    return RunConfig(data)


def load_config(path=None):
    """Read and validate a TOML file; ``None`` gives the defaults."""
    if path is None:
        return parse_config({})
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", key=None) from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}", key=None) from None
    return parse_config(raw)


def estimate(cfg: RunConfig):
    """Basis size and dense-memory estimates without building anything.

    Raises
    ------
    CapacityError
        When the working basis exceeds ``model.max_states``.
    """
    mo = cfg.model
    modes = (2 * mo["n_max"] + 1) ** mo["d"]
    size = basis_size(modes, mo["N_max"])
    headroom = max(1, (mo["N"] + 1) // 2)
    ext = basis_size(modes, mo["N_max"] + headroom)
    report = {
        "modes": modes,
        "basis_size": size,
        "extended_basis_size": ext,
        "dense_matrix_bytes": 16 * size * size,
        "quadrature_points": cfg.quadrature().P ** mo["d"],
        "capacity_bound": mo["max_states"],
    }
    if size > mo["max_states"]:
        raise CapacityError(f"basis of {size} states exceeds the bound {mo['max_states']}")
    return report
