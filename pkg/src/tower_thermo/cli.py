"""Command-line frontend.

One task per invocation; outputs are deterministic given the config and seed
(timestamps live only in the sidecar meta.json).  Exit codes: 0 success,
1 validation failure, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import kernels
from .cohomology import ReferenceFill, reduce_to_one_sided
from .katok import (
    CatMap,
    KatokMap,
    SlowdownParams,
    build_first_return_scheme,
    pressure_curve,
    unstable_jacobian,
)
from .liftability import check_L2, count_profile
from .pressure import (
    NumericalError,
    ResourceError,
    gibbs_measure,
    pressure_periodic,
    pressure_spectral,
    verify_gibbs,
)
from .shift import InvalidInputError, potential_from_descriptor, potential_to_descriptor
from .stats import clt_check, correlations_markov, fit_decay
from .tower import (
    InducingScheme,
    TowerMeasure,
    abramov_kac_check,
    check_exponential_tail,
    check_P_conditions,
    lift_measure,
    validate_scheme,
)

_SCHEMAS = {
    "pressure": {"potential", "alphabet", "method", "base", "n_max", "collapse_depth"},
    "reduce": {"potential", "alphabet", "fill", "J", "tol"},
    "gibbs-check": {"potential", "alphabet", "L", "pressure"},
    "tower-check": {"scheme", "phi_bar", "P_L", "checks"},
    "lift": {"scheme", "weights"},
    "abramov": {"scheme", "weights", "transition", "phi_cells"},
    "liftability": {"scheme", "h"},
    "katok": {
        "r0", "r1", "alpha", "psi_variant", "ode_tol", "guard_radius",
        "partition", "grid", "horizon", "base", "t_grid", "steps", "orbits",
        "space_grid", "warmup", "system",
    },
    "stats": {
        "kind", "P", "pi", "h1", "h2", "n_max", "n", "replicas",
        "ks_threshold", "values",
    },
}


def _fail(msg, code):
    sys.stderr.write(f"tower-thermo: {msg}\n")
    return code


def _load_config(path, command, overrides):
    cfg = {}
    if path:
        with open(path) as f:
            cfg = json.load(f)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    allowed = _SCHEMAS[command]
    unknown = set(cfg) - allowed
    if unknown:
        raise InvalidInputError(f"unknown config keys for {command}: {sorted(unknown)}")
    return cfg


def _write_json(out_dir, name, obj):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as f:
        json.dump(obj, f, indent=1, sort_keys=True)
        f.write("\n")
    return path


def _write_text(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as f:
        f.write(text)
    return path


def _sidecar(out_dir, args):
    _write_json(
        out_dir,
        "meta.json",
        {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "seed": args.seed,
            "backend": kernels.BACKEND,
            "command": args.command,
        },
    )


def _fmt_curve_csv(rows, header):
    lines = [header]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# handlers


def _cmd_pressure(args):
    cfg = _load_config(args.config, "pressure", {
        "alphabet": args.truncation, "method": args.method,
        "potential": args.potential, "base": args.base, "n_max": args.n_max,
    })
    with open(cfg["potential"]) as f:
        desc = json.load(f)
    from .shift import Alphabet

    alphabet = Alphabet(int(cfg.get("alphabet") or desc.get("alphabet", 2)))
    phi = potential_from_descriptor(desc, alphabet)
    method = cfg.get("method", "both")
    out = {}
    if method in ("periodic_orbits", "both"):
        rep = pressure_periodic(phi, b=int(cfg.get("base", 0)),
                                n_max=int(cfg.get("n_max", 10)))
        out["periodic"] = rep.to_json()
    if method in ("spectral_radius", "both"):
        rep = pressure_spectral(phi, collapse_depth=int(cfg.get("collapse_depth", 2)))
        out["spectral"] = rep.to_json()
    _write_json(args.out, "pressure.json", out)
    return 0


def _cmd_reduce(args):
    cfg = _load_config(args.config, "reduce", {"potential": args.potential})
    with open(cfg["potential"]) as f:
        desc = json.load(f)
    phi = potential_from_descriptor(desc)
    fill = ReferenceFill(tuple(cfg.get("fill", [0])))
    psi = reduce_to_one_sided(phi, fill, J=cfg.get("J"), tol=float(cfg.get("tol", 1e-10)))
    out = potential_to_descriptor(psi)
    out["params"]["tail_bound"] = psi.truncation_error / 2.0
    _write_json(args.out, "reduced.json", out)
    return 0


def _cmd_gibbs_check(args):
    cfg = _load_config(args.config, "gibbs-check", {
        "potential": args.potential, "L": args.L,
    })
    with open(cfg["potential"]) as f:
        desc = json.load(f)
    phi = potential_from_descriptor(desc)
    spec_rep = pressure_spectral(phi)
    pressure = float(cfg.get("pressure", spec_rep.estimate))
    meas = gibbs_measure(phi)
    rep = verify_gibbs(meas, phi, pressure, L=int(cfg.get("L", 6)))
    _write_json(args.out, "gibbs.json", rep.to_json())
    return 0


def _cmd_tower_check(args):
    cfg = _load_config(args.config, "tower-check", {"scheme": args.scheme})
    scheme = InducingScheme.load(cfg["scheme"])
    out = {"validate": validate_scheme(scheme)}
    if "phi_bar" in cfg:
        w = np.asarray(cfg["phi_bar"], float)
        out["P_conditions"] = check_P_conditions(w, scheme, float(cfg.get("P_L", 0.0)))
    _write_json(args.out, "tower_check.json", out)
    return 0


def _cmd_lift(args):
    cfg = _load_config(args.config, "lift", {"scheme": args.scheme})
    scheme = InducingScheme.load(cfg["scheme"])
    w = np.asarray(cfg["weights"], float)
    nu = TowerMeasure(scheme, w)
    lm = lift_measure(nu)
    cells = {f"{scheme.elements[k].id}:{lvl}": v for (k, lvl), v in lm.cells.items()}
    _write_json(args.out, "lift.json", {
        "Q": nu.Q, "total_mass": lm.total_mass(), "base_mass": lm.base_mass(),
        "cells": cells,
    })
    return 0


def _cmd_abramov(args):
    cfg = _load_config(args.config, "abramov", {"scheme": args.scheme})
    scheme = InducingScheme.load(cfg["scheme"])
    nu = TowerMeasure(scheme, np.asarray(cfg["weights"], float),
                      np.asarray(cfg["transition"], float))
    phi_cells = None
    if "phi_cells" in cfg:
        phi_cells = {(int(k), int(l)): float(v) for k, l, v in cfg["phi_cells"]}
    out = abramov_kac_check(nu, phi_cells=phi_cells)
    out["tail"] = check_exponential_tail(nu)
    _write_json(args.out, "abramov.json", out)
    return 0


def _cmd_liftability(args):
    cfg = _load_config(args.config, "liftability", {"scheme": args.scheme})
    scheme = InducingScheme.load(cfg["scheme"])
    prof = count_profile(scheme)
    _write_text(args.out, "counts.csv", prof.to_csv())
    out = prof.to_json()
    if "h" in cfg:
        out["L2"] = check_L2(prof, float(cfg["h"]))
    _write_json(args.out, "liftability.json", out)
    return 0


def _katok_system(cfg):
    if cfg.get("system", "katok") == "cat":
        return CatMap()
    params = SlowdownParams(
        r0=float(cfg.get("r0", 0.1)),
        r1=float(cfg.get("r1", 0.3)),
        alpha=float(cfg.get("alpha", 0.25)),
        psi_variant=cfg.get("psi_variant", "as_printed"),
    )
    return KatokMap(params, ode_tolerance=float(cfg.get("ode_tol", 1e-10)),
                    guard_radius=float(cfg.get("guard_radius", 1e-6)))


def _cmd_katok(args):
    cfg = _load_config(args.config, "katok", {
        "grid": args.grid, "horizon": args.horizon, "t_grid": args.t_grid,
        "base": args.base,
    })
    system = _katok_system(cfg)
    sub = args.subcommand
    grid = cfg.get("grid", {"nx": 400, "ny": 400})
    if isinstance(grid, str):
        nx, ny = (int(v) for v in grid.split("x"))
        grid = {"nx": nx, "ny": ny}
    base = int(cfg.get("base", 6))
    horizon = int(cfg.get("horizon", 30))
    partition = None
    if "partition" in cfg and cfg["partition"] not in (None, "default"):
        from .partition import MarkovPartition

        desc = cfg["partition"]
        if isinstance(desc, str):
            with open(desc) as f:
                desc = json.load(f)
        partition = MarkovPartition.from_descriptor(desc)

    if sub in ("simulate", "induce", "pressure-curve"):
        scheme = build_first_return_scheme(
            system, base=base, horizon=horizon, grid=(grid["nx"], grid["ny"]),
            partition=partition,
        )
        if sub == "simulate":
            rows = []
            for e in scheme.elements:
                cx, cy = (e.rep_point if e.rep_point else (float("nan"),) * 2)
                rows.append((float(cx), float(cy), e.tau,
                             "-".join(map(str, e.word or ()))))
            _write_text(args.out, "cells.csv",
                        _fmt_curve_csv(rows, "cell_x,cell_y,tau,word"))
            scheme.save(os.path.join(args.out, "scheme.json"))
            _write_json(args.out, "simulate.json",
                        {k: v for k, v in scheme.meta.items() if k != "log_Ju_F"})
            return 0
        from .katok import induce_geometric

        logJ = induce_geometric(system, scheme)
        if sub == "induce":
            rows = [(e.id, e.tau, float(l)) for e, l in zip(scheme.elements, logJ)]
            _write_text(args.out, "induced.csv",
                        _fmt_curve_csv(rows, "element,tau,log_Ju_F"))
            return 0
        t_grid = cfg.get("t_grid", "0:1:0.25")
        if isinstance(t_grid, str):
            a, b, s = (float(v) for v in t_grid.split(":"))
            ts = list(np.arange(a, b + 1e-12, s))
        else:
            ts = [float(v) for v in t_grid]
        curve = pressure_curve(system, scheme, ts)
        _write_text(args.out, "pressure_curve.csv",
                    _fmt_curve_csv(curve, "t,P_L"))
        return 0

    if sub == "lyapunov":
        rng = np.random.default_rng(args.seed)
        orbits = int(cfg.get("orbits", 64))
        steps = int(cfg.get("steps", 4000))
        x = rng.random((orbits, 2))
        from .katok import _E  # unstable direction

        v = np.tile(_E[0], (orbits, 1))
        for _ in range(int(cfg.get("warmup", 100))):
            x, v = system.tangent_step_batch(x, v)
            v /= np.linalg.norm(v, axis=1, keepdims=True)
        tot = np.zeros(orbits)
        for _ in range(steps):
            x, v = system.tangent_step_batch(x, v)
            g = np.linalg.norm(v, axis=1)
            tot += np.log(g)
            v /= g[:, None]
        chi = tot / steps
        _write_json(args.out, "lyapunov.json", {
            "chi_time_average": float(chi.mean()),
            "stderr": float(chi.std(ddof=1) / np.sqrt(orbits)),
            "orbits": orbits, "steps": steps, "seed": args.seed,
        })
        return 0
    raise InvalidInputError(f"unknown katok subcommand {sub!r}")


def _cmd_stats(args):
    cfg = _load_config(args.config, "stats", {})
    sub = args.subcommand
    if sub == "correlations":
        kind = cfg.get("kind", "markov")
        if kind != "markov":
            raise InvalidInputError("CLI correlations support exact markov mode")
        P = np.asarray(cfg["P"], float)
        pi = np.asarray(cfg["pi"], float)
        h1 = np.asarray(cfg["h1"], float)
        h2 = np.asarray(cfg["h2"], float)
        series = correlations_markov(P, pi, h1, h2, int(cfg.get("n_max", 20)))
        _write_text(args.out, "correlations.csv", series.to_csv())
        fit = fit_decay(series)
        fit["seed"] = args.seed
        _write_json(args.out, "decay.json", fit)
        return 0
    if sub == "clt":
        kind = cfg.get("kind", "iid_signs")
        n = int(cfg.get("n", 1000))
        if kind == "iid_signs":
            def make(rng):
                s = rng.integers(0, 2, size=n) * 2 - 1
                return float(s.sum() / np.sqrt(n))
        else:
            raise InvalidInputError("CLI clt supports the iid_signs control")
        rep = clt_check(make, n, replicas=int(cfg.get("replicas", 600)),
                        seed=args.seed,
                        ks_threshold=float(cfg.get("ks_threshold", 0.05)))
        _write_json(args.out, "clt.json", rep)
        return 0
    raise InvalidInputError(f"unknown stats subcommand {sub!r}")


# ---------------------------------------------------------------------------


def _build_parser():
    # common flags accepted before or after the subcommand; SUPPRESS keeps a
    # later (sub-level) occurrence from clobbering an earlier one with None
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--truncation", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="tower-thermo", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add_parser(name):
        return sub.add_parser(name, parents=[common])

    sp = add_parser("pressure")
    sp.add_argument("--potential")
    sp.add_argument("--method", choices=["periodic_orbits", "spectral_radius", "both"],
                    default=None)
    sp.add_argument("--base", type=int, default=None)
    sp.add_argument("--n-max", dest="n_max", type=int, default=None)

    sp = add_parser("reduce")
    sp.add_argument("--potential")

    sp = add_parser("gibbs-check")
    sp.add_argument("--potential")
    sp.add_argument("--L", type=int, default=None)

    for name in ("tower-check", "lift", "abramov", "liftability"):
        sp = add_parser(name)
        sp.add_argument("--scheme")

    sp = add_parser("katok")
    sp.add_argument("subcommand",
                    choices=["simulate", "induce", "pressure-curve", "lyapunov"])
    sp.add_argument("--grid", default=None)
    sp.add_argument("--horizon", type=int, default=None)
    sp.add_argument("--t-grid", dest="t_grid", default=None)
    sp.add_argument("--base", type=int, default=None)

    sp = add_parser("stats")
    sp.add_argument("subcommand", choices=["correlations", "clt"])
    return p


_GLOBAL_DEFAULTS = {"config": None, "out": ".", "seed": 0, "truncation": None,
                    "tol": None}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    # SUPPRESS leaves unset globals missing (set_defaults would re-arm the
    # shared parent actions inside every subparser); fill fallbacks here
    for key, val in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, val)
    handlers = {
        "pressure": _cmd_pressure,
        "reduce": _cmd_reduce,
        "gibbs-check": _cmd_gibbs_check,
        "tower-check": _cmd_tower_check,
        "lift": _cmd_lift,
        "abramov": _cmd_abramov,
        "liftability": _cmd_liftability,
        "katok": _cmd_katok,
        "stats": _cmd_stats,
    }
    try:
        code = handlers[args.command](args)
        _sidecar(args.out, args)
        return code
    except (InvalidInputError, FileNotFoundError, KeyError, json.JSONDecodeError) as e:
        return _fail(f"invalid input: {e}", 1)
    except (NumericalError, ResourceError, ArithmeticError) as e:
        return _fail(f"numerical failure: {e}", 2)


if __name__ == "__main__":
    sys.exit(main())
