"""Command-line runner: ``gfock [--config FILE] <experiment>``.

Exit status is 0 when every embedded check passes, 1 on a failed check,
2 on a configuration error and 3 when a capacity bound is exceeded; the
non-zero cases print a JSON error record on stderr.  ``GFOCK_OUTPUT_DIR``
overrides the configured output directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__
from .average import cesaro_mean, sweep_transition, uniform_u_ladder
from .config import RunConfig, estimate, load_config, parse_config
from .dynamics import fingerprint, s_operator, transition_probability
from .errors import CapacityError, ConfigError, GfockError
from .field import ccr_check, in_plateau_regime
from .fock import fock_norm, number_state, vacuum
from .genfunc import (
    associate,
    bump_test_function,
    default_setup,
    gf_derivative,
    heaviside_rep,
    integral,
    pair,
    window_test_function,
)
from .hamiltonian import free_spectrum_analytic, min_points
from .moll import Mollifier, make_plateau_profile

EXPERIMENTS = ("genfunc-demo", "ccr-check", "free-spectrum", "s-matrix", "epsilon-sweep")

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_CAPACITY = 0, 1, 2, 3


class CheckFailed(AssertionError):
    pass


def _check(cond, message):
    if not cond:
        raise CheckFailed(message)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_bytes(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue().encode()


def _json_bytes(obj):
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def write_atomic(path, data: bytes):
    """Write ``data`` to a temporary sibling, then rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    def __init__(self, directory, formats):
        self.directory = directory
        self.formats = set(formats)
        self.files = {}

    def emit(self, name, kind, data):
        if kind not in self.formats:
            return
        path = os.path.join(self.directory, name)
        write_atomic(path, data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def csv(self, name, header, rows):
        self.emit(name, "csv", _csv_bytes(header, rows))

    def json(self, name, obj):
        self.emit(name, "json", _json_bytes(obj))


def _model_fingerprint(rc: RunConfig):
    return fingerprint(rc.field_config(), rc.interaction(), rc.quadrature())


def _parse_occupation(text, modes):
    parts = [p for p in text.replace(",", " ").split() if p]
    try:
        occ = [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad occupation pattern {text!r}", key="state") from None
    if len(occ) != modes or min(occ) < 0:
        raise ConfigError(f"occupation {text!r} needs {modes} non-negative integers", key="state")
    return occ


def _state(basis, text):
    if text in (None, "vacuum"):
        return vacuum(basis), "vacuum"
    occ = _parse_occupation(text, basis.M)
    return number_state(basis, occ), " ".join(map(str, occ))


def run_genfunc_demo(rc: RunConfig, out: Outputs, args):
    mol = rc["mollifier"]
    m = Mollifier(make_plateau_profile(mol["r_inner"], mol["r_outer"]))
    m, grid, ladder = default_setup(m)
    H = heaviside_rep(m, grid)
    dH = gf_derivative(H)
    sixth = (H * H - H) * dH
    tests = {"bump": bump_test_function(0.0, 0.5), "window": window_test_function()}
    rows = []
    for e in ladder:
        v = integral(sixth, e)
        rows.append(("heaviside_sixth", e, v.real, v.imag))
    cases = {
        "H2_vs_H": (H * H, H),
        "2HdH_vs_dH": (2 * H * dH, dH),
        "3H2dH_vs_dH": (3 * H * H * dH, dH),
        "H2dH_vs_HdH": (H * H * dH, H * dH),
    }
    verdicts = {}
    for name, (a, b) in cases.items():
        rep = associate(a, b, ladder, tests)
        verdicts[name] = rep.as_dict()
        for t in tests:
            for e in ladder:
                v = pair(a - b, tests[t], e)
                rows.append((f"{name}:{t}", e, v.real, v.imag))
    out.csv("genfunc.csv", ("test_name", "eps", "pairing_re", "pairing_im"), rows)
    sixth_err = max(abs(r[2] + 1 / 6) for r in rows if r[0] == "heaviside_sixth")
    summary = {
        "associated": {k: v["verdict"] == "associated" for k, v in verdicts.items()},
        "reports": verdicts,
        "heaviside_sixth_max_error": sixth_err,
        "grid_n": grid.n,
        "ladder": list(ladder.eps),
    }
    out.json("genfunc.json", summary)
    _check(sixth_err < 1e-6, f"(H^2 - H) H' integral off -1/6 by {sixth_err:.3e}")
    _check(summary["associated"]["H2_vs_H"], "H^2 not associated with H")
    _check(verdicts["H2dH_vs_HdH"]["verdict"] == "not-associated", "H^2 H' vs H H' not separated")
    return summary


def _lattice(rc):
    mo = rc.model
    n = rc["schedule"]["lattice"]
    axis = -mo["L"] / 2 + mo["L"] * np.arange(n) / n
    return [np.full(mo["d"], a) for a in axis]


def run_ccr_check(rc: RunConfig, out: Outputs, args):
    margin = getattr(args, "margin", 1) or 1
    pts = _lattice(rc)
    rows, worst = [], 0.0
    for e in rc.ladder():
        cfg = rc.field_config(e)
        for x in pts:
            for xp in pts:
                r = ccr_check(cfg, x, xp, rc.model["tau"], margin=margin)
                worst = max(worst, r.max())
                rows.append((
                    " ".join(map(repr, map(float, x))), " ".join(map(repr, map(float, xp))), e,
                    r.phi_phi, r.pi_pi, r.phi_pi,
                ))
    out.csv(
        "ccr.csv",
        ("x", "x_prime", "eps", "residual_phi_phi", "residual_pi_pi", "residual_ccr"),
        rows,
    )
    summary = {"max_residual": worst, "margin": margin}
    if getattr(args, "describe", False):
        cfg = rc.field_config()
        summary["basis"] = cfg.describe()
        print(json.dumps(cfg.describe(), sort_keys=True))
    _check(worst < 1e-10, f"CCR residual {worst:.3e} exceeds 1e-10")
    return summary


def run_free_spectrum(rc: RunConfig, out: Outputs, args):
    model = rc.model_object()
    h0 = model.free_hamiltonian.matrix
    eig = np.linalg.eigvalsh(h0)
    analytic = np.sort(free_spectrum_analytic(model.cfg))
    if model.inter.vacuum_shift:
        analytic = analytic - analytic[0]
    exact = not model.cfg.damper.enabled
    rows = [
        (i, float(a), float(b) if exact else "", float(abs(a - b)) if exact else "")
        for i, (a, b) in enumerate(zip(eig, analytic))
    ]
    out.csv("free_spectrum.csv", ("index", "eigenvalue", "analytic", "abs_error"), rows)
    err = float(np.max(np.abs(eig - analytic))) if exact else None
    summary = {"max_abs_error": err, "plateau": in_plateau_regime(model.cfg), "states": len(eig)}
    if exact:
        _check(err < 1e-8, f"free spectrum off analytic by {err:.3e}")
    return summary


def run_s_matrix(rc: RunConfig, out: Outputs, args):
    model = rc.model_object()
    basis = model.basis
    initial = getattr(args, "initial", None) or ["vacuum"]
    final = getattr(args, "final", None) or ["vacuum"]
    pairs = [(_state(basis, a), _state(basis, b)) for a in initial for b in final]
    rows, worst = [], 0.0
    tau = model.tau
    for dt in rc["schedule"]["t"]:
        s = s_operator(model, tau + dt)
        worst = max(worst, s.unitarity_defect())
        for (v1, l1), (v2, l2) in pairs:
            amp = complex(np.vdot(v2, s.operator @ v1))
            rows.append((l1, l2, tau + dt, tau, model.cfg.eps, model.inter.g, amp.real, amp.imag,
                         transition_probability(s, v1, v2)))
    out.csv(
        "s_matrix.csv",
        ("initial", "final", "t", "tau", "eps", "g", "re", "im", "probability"),
        rows,
    )
    summary = {"max_unitarity_defect": worst, "fingerprint": model.fingerprint}
    out.json("s_matrix.json", summary)
    _check(worst < 1e-10, f"unitarity defect {worst:.3e}")
    return summary


def run_epsilon_sweep(rc: RunConfig, out: Outputs, args):
    la = rc["ladder"]
    model = rc.model_object()
    v1, l1 = _state(model.basis, getattr(args, "initial", None) and args.initial[0])
    v2, l2 = _state(model.basis, getattr(args, "final", None) and args.final[0])
    ladder = uniform_u_ladder(la["u_min"], la["u_max"], la["count"])
    t = model.tau + rc["schedule"]["t"][0]
    sweep = sweep_transition(model, t, v1, v2, ladder)
    order = np.argsort(sweep.u)
    u, vals = sweep.u[order], sweep.values[order]
    out.csv("epsilon_sweep.csv", ("u", "eps", "value"),
            [(float(a), float(1 / a), float(b)) for a, b in zip(u, vals)])
    summary = {"initial": l1, "final": l2, "t": t, "fingerprint": sweep.fingerprint}
    bound = fock_norm(v1) ** 2 * fock_norm(v2) ** 2
    _check(np.all(vals >= 0) and np.all(vals <= bound * (1 + 1e-12)), "probability outside [0, bound]")
    # the mean runs over u measured from the first rung
    if len(vals) - 1 >= 1000:
        est = cesaro_mean(vals, float(u[1] - u[0]))
        summary["mean"] = est.as_dict()
    else:
        summary["mean"] = None
        summary["mean_skipped"] = "fewer than 1000 intervals"
    out.json("epsilon_sweep.json", summary)
    return summary


RUNNERS = {
    "genfunc-demo": run_genfunc_demo,
    "ccr-check": run_ccr_check,
    "free-spectrum": run_free_spectrum,
    "s-matrix": run_s_matrix,
    "epsilon-sweep": run_epsilon_sweep,
}


def validate(rc: RunConfig):
    """Dry-run checks: sizes, memory and the quadrature invariant; no numerics."""
    report = estimate(rc)
    mo = rc.model
    grid = rc.quadrature()
    need = min_points(mo["n_max"], mo["N"])
    if grid.P < need:
        raise ConfigError(
            f"quadrature invariant P >= 2*(N+1)*n_max+1 = {need} violated (P = {grid.P})",
            key="model.P",
        )
    report["quadrature_P"] = grid.P
    report["status"] = "ok"
    return report


def _error_record(kind, exc, status):
    rec = {"status": status, "error": kind, "message": str(exc)}
    key = getattr(exc, "key", None)
    if key:
        rec["key"] = key
    print(json.dumps(rec, sort_keys=True), file=sys.stderr)
    return status


def _apply_overrides(rc: RunConfig, sets):
    if not sets:
        return rc
    import tomli

    raw = {}
    for item in sets:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value", key=item)
        path, value = item.split("=", 1)
        section, key = path.strip().split(".", 1)
        try:
            parsed = tomli.loads(f"v = {value.strip()}")["v"]
        except tomli.TOMLDecodeError:
            raise ConfigError(f"cannot parse value in {item!r}", key=path.strip()) from None
        raw.setdefault(section, {})[key] = parsed
    merged = rc.as_dict()
    for section, body in raw.items():
        if section not in merged:
            raise ConfigError(f"unknown section [{section}]", key=section)
        merged[section].update(body)
    return parse_config(merged)


def build_parser():
    p = argparse.ArgumentParser(prog="gfock", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gfock {__version__}")
    p.add_argument("-c", "--config", help="TOML run configuration (defaults if omitted)")
    p.add_argument("-o", "--output-dir", help="output directory (overrides the config)")
    p.add_argument(
        "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
        help="override one configuration value; repeatable",
    )
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("genfunc-demo", help="Heaviside products and association verdicts")
    cc = sub.add_parser("ccr-check", help="equal-time commutators on a position lattice")
    cc.add_argument("--margin", type=int, default=1)
    cc.add_argument("--describe", action="store_true", help="print the basis summary")
    for flag, key in (("--d", "d"), ("--L", "L"), ("--n-max", "n_max"), ("--N-max", "N_max"), ("--m", "m")):
        cc.add_argument(flag, dest=f"model_{key}", type=float if key in ("L", "m") else int)
    cc.add_argument("--eps0", type=float)
    cc.add_argument("--rungs", type=int)
    sub.add_parser("free-spectrum", help="free Hamiltonian eigenvalues against the harmonic tower")
    for name, helptext in (("s-matrix", "S operator amplitudes over the time schedule"),
                           ("epsilon-sweep", "transition probability against u = 1/eps")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--initial", action="append", metavar="OCC",
                        help="initial occupation pattern, e.g. '0 0 1 0 0' (default vacuum)")
        sp.add_argument("--final", action="append", metavar="OCC",
                        help="final occupation pattern (default vacuum)")
    sub.add_parser("all", help="run every experiment")
    sub.add_parser("validate", help="dry-run validation of the configuration")
    return p


def _flag_overrides(args):
    sets = list(args.set)
    for key in ("d", "L", "n_max", "N_max", "m"):
        v = getattr(args, f"model_{key}", None)
        if v is not None:
            sets.append(f"model.{key}={v}")
    for key in ("eps0", "rungs"):
        v = getattr(args, key, None)
        if v is not None:
            sets.append(f"ladder.{key}={v}")
    return sets


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rc = _apply_overrides(load_config(args.config), _flag_overrides(args))
        if args.command == "validate":
            print(json.dumps(validate(rc), sort_keys=True, indent=2))
            return EXIT_OK
        estimate(rc)
        directory = args.output_dir or os.environ.get("GFOCK_OUTPUT_DIR") or rc["output"]["directory"]
        out = Outputs(directory, rc["output"]["formats"])
        names = EXPERIMENTS if args.command == "all" else (args.command,)
        timings, summaries = {}, {}
        failure = None
        for name in names:
            start = time.perf_counter()
            try:
                summaries[name] = RUNNERS[name](rc, out, args)
            except CheckFailed as exc:
                failure = failure or (name, exc)
                summaries[name] = {"failed": str(exc)}
            timings[name] = time.perf_counter() - start
        manifest = {
            "version": __version__,
            "command": args.command,
            "config": rc.as_dict(),
            "fingerprint": _model_fingerprint(rc),
            "files": dict(sorted(out.files.items())),
            "timings": timings,
            "summaries": summaries,
        }
        write_atomic(os.path.join(directory, "manifest.json"), _json_bytes(_jsonable(manifest)))
        if failure:
            return _error_record("assertion", f"{failure[0]}: {failure[1]}", EXIT_ASSERT)
        return EXIT_OK
    except ConfigError as exc:
        return _error_record("config", exc, EXIT_CONFIG)
    except CapacityError as exc:
        return _error_record("capacity", exc, EXIT_CAPACITY)
    except GfockError as exc:
        return _error_record("config", exc, EXIT_CONFIG)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


if __name__ == "__main__":
    sys.exit(main())
