"""Command-line entry point: ``deepzero {generator,uniqueness,approx}``.

Configuration is an INI file with sections ``generator``, ``lattice``,
``mollifier``, ``approx`` and ``output``.  Unknown sections or keys are
rejected.  Every run writes the fully resolved configuration to
``config.json`` in the output directory and echoes it on stdout.

Exit codes: 0 success, 2 configuration or precondition error, 3 a check
failed, 4 the solver did not converge.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import approx as ax
from .errors import BandExceededError, DegenerateDataError
from .generator import DeepZeroProfile, GeneratorSpec, fit_envelope, verify_deep_zero
from .io import write_csv, write_json
from .lattice import decay_fit, make_lattice, mean_value_gap_check, truncate_lattice
from .mollifier import BumpTestFunction, KHatElement, MollifierPair, d_sweep, pairing_decay_experiment
from .spectrum import (GeneratorPair, PeriodizationEvaluator, flat_zero_check, poisson_discrepancy,
                       poisson_tolerance, strip_decay_check)

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_SOLVER = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _opt_float(text):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


def _opt_str(text):
    return None if text.strip().lower() in ("", "none") else text.strip()


# section -> key -> (parser, default)
SCHEMA = {
    "generator": {
        "a": (float, 1.0),
        "b": (float, 1.0),
        "truncation": (_opt_float, None),
        "step": (float, 1.0 / 256),
        "budget": (float, 1e-9),
        "grid_extent": (float, 8.0),
        "grid_points": (int, 2000),
        "derivative_order": (int, 2),
        "c1_max": (_opt_float, None),
        "c2": (_opt_float, None),
        "freq_extent": (float, 10.0),
        "freq_points": (int, 401),
        "strip_x_max": (int, 20),
        "q_max": (float, 4.0),
        "fold_count": (int, 8),
        "n_max": (int, 32),
        "poisson_points": (int, 50),
    },
    "lattice": {
        "m": (int, 24),
        "scheme": (str, "alternating"),
        "c": (float, 0.5),
        "r": (float, 0.5),
        "seed": (int, 0),
    },
    "mollifier": {
        "eps": (float, 0.02),
        "order": (int, 4),
        "d": (float, 0.3),
        "n_range": (int, 8),
        "n_limit": (int, 12),
        "dsweep": (_floats, (0.4, 0.3, 0.2, 0.15, 0.1)),
        "dsweep_n_max": (int, 8),
    },
    "approx": {
        "p": (float, 1.5),
        "target": (str, "gaussian"),
        "weight": (_opt_str, None),
        "extent": (_opt_float, None),
        "step": (float, ax.DEFAULT_STEP),
        "tau": (float, 1e-10),
        "delta": (float, 1e-8),
        "tol": (float, 1e-8),
        "max_iter": (int, 200),
        "m_list": (_ints, (4, 8, 16, 24)),
        "contrast_m": (int, 8),
        "contrast_target": (str, "odd_half"),
        "annihilator_m": (int, 6),
        "annihilator_dim": (int, 10),
        "annihilator_iterations": (int, 3000),
        "annihilator_starts": (int, 24),
    },
    "output": {
        "dir": (str, "out"),
    },
}


def default_config():
    return {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}


def load_config(path=None):
    """Defaults overlaid with the INI file at ``path``; raises ConfigError on unknown entries."""
    cfg = default_config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                cfg[sec][key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from None
    return cfg


def validate_config(cfg):
    """Rebuild every domain object once so that precondition errors surface before any work."""
    g, lat, mo, ap = cfg["generator"], cfg["lattice"], cfg["mollifier"], cfg["approx"]
    try:
        gp = generator_pair(cfg)
        if g["grid_points"] < 2 or g["freq_points"] < 1 or g["poisson_points"] < 1:
            raise ValueError("grid_points >= 2, freq_points >= 1 and poisson_points >= 1 required")
        if not 0 <= g["derivative_order"] <= 6:
            raise ValueError("derivative_order must lie in 0..6")
        if g["c2"] is not None and not g["c2"] > 0:
            raise ValueError("forced c2 must be positive")
        if g["freq_extent"] > gp.band or g["strip_x_max"] > gp.band:
            raise ValueError(f"frequency range exceeds the generator band {gp.band}")
        if g["fold_count"] < 1 or g["n_max"] < 0:
            raise ValueError("fold_count >= 1 and n_max >= 0 required")
        make_lattice(lat["m"], lat["scheme"], lat["c"], lat["r"], lat["seed"])
        mp = MollifierPair(mo["eps"], mo["order"])
        for d in (mo["d"],) + tuple(mo["dsweep"]):
            BumpTestFunction(d, max_order=0, sup_grid=3)
            if not d + mp.radius < 0.5:
                raise ValueError(f"precondition d + N*eps < 1/2 violated: {d} + {mp.radius}")
        if len(mo["dsweep"]) < 2:
            raise ValueError("dsweep needs at least two radii")
        if not 0 < mo["n_range"] <= mo["n_limit"]:
            raise ValueError("need 0 < n_range <= n_limit")
        if not ap["p"] >= 1:
            raise ValueError("p must be >= 1")
        if ap["p"] == 1 and ap["weight"] is None:
            raise ValueError("p = 1 needs weight = inverse_square (unweighted L^1 is not supported)")
        if ap["weight"] not in (None, "inverse_square"):
            raise ValueError(f"unknown weight {ap['weight']!r}")
        for name in (ap["target"], ap["contrast_target"]):
            if name not in ax.TARGETS and name not in ("in_span", "zero"):
                raise ValueError(f"unknown target {name!r}")
        ms = list(ap["m_list"])
        if not ms or ms != sorted(ms) or ms[0] < 1:
            raise ValueError("m_list must be ascending positive integers")
        if ap["contrast_m"] < 0 or ap["annihilator_m"] < 0 or ap["annihilator_dim"] < 1:
            raise ValueError("contrast_m, annihilator_m >= 0 and annihilator_dim >= 1 required")
        if not (ap["step"] > 0 and ap["tau"] > 0 and ap["delta"] > 0 and ap["tol"] > 0 and ap["max_iter"] > 0):
            raise ValueError("approx step, tau, delta, tol and max_iter must be positive")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def generator_pair(cfg):
    g = cfg["generator"]
    return GeneratorPair(GeneratorSpec(g["a"], g["b"]), g["truncation"], g["step"], g["budget"])


def _resolved(cfg):
    gp = generator_pair(cfg)
    out = json.loads(json.dumps(cfg))
    out["generator"]["truncation"] = gp.truncation
    return out


# --- subcommands ----------------------------------------------------------


def cmd_generator(cfg, out):
    g = cfg["generator"]
    gp = generator_pair(cfg)
    spec = gp.spec
    grid = np.linspace(-g["grid_extent"], g["grid_extent"], g["grid_points"])
    j = g["derivative_order"]
    fitted = fit_envelope(spec, grid, j, g["c1_max"])
    profile = fitted if g["c2"] is None else DeepZeroProfile(fitted.c1, g["c2"])
    deep = verify_deep_zero(spec, profile, grid, j)

    xs = np.linspace(-g["freq_extent"], g["freq_extent"], g["freq_points"])
    strip = strip_decay_check(gp, np.arange(1, g["strip_x_max"] + 1, dtype=float), g["q_max"])
    flat = flat_zero_check(PeriodizationEvaluator(spec, g["fold_count"]), q_max=g["q_max"])

    write_csv(out / "phi_time.csv", ("t", "Phi", "dPhi", "envelope"),
              zip(grid, spec.value(grid), spec.derivative(grid, 1), profile.envelope(grid)))
    write_csv(out / "phi_freq.csv", ("x", "phi"), zip(xs, gp.fourier_grid(xs)))
    checks = {"verify_deep_zero": deep.passed, "strip_decay_check": strip.passed,
              "flat_zero_check": flat.passed}
    report = {
        "fit_envelope": {"c1": fitted.c1, "c2": fitted.c2, "c1_max": g["c1_max"]},
        "verify_deep_zero": deep.to_dict(),
        "strip_decay_check": strip.to_dict(),
        "flat_zero_check": flat.to_dict(),
        "failed_checks": sorted(k for k, v in checks.items() if not v),
        "passed": all(checks.values()),
    }
    write_json(out / "envelope_report.json", report)
    return _gate(report["failed_checks"])


def cmd_uniqueness(cfg, out):
    g, lc, mo = cfg["generator"], cfg["lattice"], cfg["mollifier"]
    gp = generator_pair(cfg)
    pe = PeriodizationEvaluator(gp.spec, g["fold_count"])
    n_max = g["n_max"]
    ts = np.arange(g["poisson_points"]) / g["poisson_points"]
    disc = poisson_discrepancy(gp, pe, ts, n_max)
    tol = poisson_tolerance(gp, pe, n_max)
    write_csv(out / "poisson.csv", ("t", "P", "discrepancy"), zip(ts, pe(ts), disc))

    lat = make_lattice(lc["m"], lc["scheme"], lc["c"], lc["r"], lc["seed"])
    (out / "lattice.txt").write_text(lat.to_text(), encoding="utf-8", newline="\n")
    pert_fit = decay_fit(lat.indices, lat.perturbations)
    gaps = mean_value_gap_check(gp, lat)

    mp = MollifierPair(mo["eps"], mo["order"])
    bump = BumpTestFunction(mo["d"], max_order=0)
    ns = range(-mo["n_range"], mo["n_range"] + 1)
    fams = {"phi": KHatElement(((0, gp),)), "x2_phi": KHatElement(((2, gp),))}
    rows, pair_info = [], {}
    for name, f in fams.items():
        exp = pairing_decay_experiment(f, mp, bump, ns, mo["n_limit"])
        rows += [(name,) + row for row in exp.rows()]
        pair_info[name] = {"rate": exp.rate, "passed": exp.passed,
                           "c_hat": exp.fit.c_hat if exp.fit else None,
                           "r_hat": exp.fit.r_hat if exp.fit else None}
    write_csv(out / "pairing.csv", ("f", "n", "pairing", "fit_envelope"), rows)

    sweep = d_sweep(fams["phi"], mp, mo["dsweep"], mo["dsweep_n_max"])
    write_csv(out / "dsweep.csv", ("d", "periodized_pairing", "fit"), sweep.rows())

    checks = {
        "poisson_discrepancy": bool(np.max(disc) <= tol),
        "mean_value_gap_check": gaps.passed,
        "pairing_decay_phi": pair_info["phi"]["passed"],
        "pairing_decay_x2_phi": pair_info["x2_phi"]["passed"],
        "d_sweep_slope": sweep.passed,
    }
    write_json(out / "decay_fit.json", {
        "perturbations": {"c_hat": pert_fit.c_hat, "r_hat": pert_fit.r_hat, "max_residual": pert_fit.max_residual},
        "mean_value_gaps": gaps.to_dict(),
        "poisson": {"max_discrepancy": float(np.max(disc)), "tolerance": tol},
        "pairing": pair_info,
        "d_sweep": {"slope": sweep.slope, "intercept": sweep.intercept},
        "failed_checks": sorted(k for k, v in checks.items() if not v),
    })
    return _gate([k for k, v in checks.items() if not v])


def cmd_approx(cfg, out):
    ap, lc = cfg["approx"], cfg["lattice"]
    gp = generator_pair(cfg)
    settings = {"tau_rel": ap["tau"], "delta_rel": ap["delta"], "tol": ap["tol"], "max_iter": ap["max_iter"]}
    m_top = max(ap["m_list"])
    lat = make_lattice(m_top, lc["scheme"], lc["c"], lc["r"], lc["seed"])
    curve = ax.completeness_curve(gp, lat, ap["m_list"], ap["p"], ap["target"], step=ap["step"],
                                  weight=ap["weight"], extent=ap["extent"], **settings)
    write_csv(out / "completeness_curve.csv", ax.CURVE_HEADER, [c.row() for c in curve])

    cm = ap["contrast_m"]
    contrast = ax.integer_lattice_contrast(gp, ap["contrast_target"], 2.0, cm, lc["scheme"], lc["c"], lc["r"],
                                           lc["seed"], step=ap["step"], **settings)
    write_csv(out / "contrast.csv", ax.CONTRAST_HEADER,
              [(cm, 2.0, contrast["integer"], contrast["perturbed"])])

    p = ap["p"]
    q = p / (p - 1) if p > 1 else math.inf
    rows = []
    annihilator = None
    if math.isfinite(q):
        am = ap["annihilator_m"]
        alat = truncate_lattice(make_lattice(max(am, 1), lc["scheme"], lc["c"], lc["r"], lc["seed"]), am)
        res = ax.annihilator_probe(gp, alat, q, ap["annihilator_dim"], iterations=ap["annihilator_iterations"],
                                   starts=ap["annihilator_starts"], seed=lc["seed"])
        rows.append((am, q, ap["annihilator_dim"], res.minimum, res.converged))
        annihilator = {"minimum": res.minimum, "converged": res.converged, "q": q}
    write_csv(out / "annihilator.csv", ax.ANNIHILATOR_HEADER, rows)

    unconverged = [c.m for c in curve if not c.converged]
    write_json(out / "run_manifest.json", {
        "config": _resolved(cfg),
        "seeds": {"lattice": lc["seed"], "annihilator": lc["seed"]},
        "curve": [{"M": c.m, "residual": c.residual, "converged": c.converged} for c in curve],
        "contrast": contrast,
        "annihilator": annihilator,
        "unconverged_M": unconverged,
    })
    if unconverged:
        print(f"solver did not converge for M = {unconverged}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _gate(failed):
    if failed:
        print("failed checks: " + ", ".join(sorted(failed)), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"generator": cmd_generator, "uniqueness": cmd_uniqueness, "approx": cmd_approx}


def build_parser():
    parser = argparse.ArgumentParser(prog="deepzero", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="INI file with [generator] [lattice] [mollifier] [approx] [output]")
    parser.add_argument("--out", help="output directory (overrides [output] dir)")
    parser.add_argument("--seed", type=int, help="lattice and search seed (overrides [lattice] seed)")
    parser.add_argument("--threads", type=int, default=1, help="BLAS thread count (results do not depend on it)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg["output"]["dir"] = args.out
        if args.seed is not None:
            cfg["lattice"]["seed"] = args.seed
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        validate_config(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    resolved = _resolved(cfg)
    write_json(out / "config.json", resolved)
    print(json.dumps(resolved, indent=2, sort_keys=True))
    try:
        with threadpool_limits(args.threads):
            return COMMANDS[args.command](cfg, out)
    except (BandExceededError, DegenerateDataError, ValueError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
