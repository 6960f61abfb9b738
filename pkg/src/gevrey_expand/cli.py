"""Command-line pipeline: lattice -> build -> verification -> report.

Subcommands are composable and idempotent; every artifact is written
atomically and deterministically (same config + seed gives byte-identical
output).  Exit status: 0 when everything checked passed, 1 on configuration
errors, 2 when an assertion or verification failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys as _sys

import numpy as np

from .builder import build_expansion, verify_manifest
from .config import RunConfig, load_config
from .errors import ConfigError, GevreyExpandError
from .fileio import atomic_write_json, atomic_write_text
from .identities import run_identity_suite
from .lattice import build_lattice
from .ple import classify
from .realform import check_IP, to_real
from .sampling import random_solenoidal_field, rng_from_seed
from .solver import ExpansionForce, GalerkinBand, SolverConfig, integrate_many
from .spectral import GevreyIndex, SpectralField
from .subordinate import eval_sum
from .verifier import (
    PowerDecayForce,
    defect_of_expansion,
    fit_decay_exponent,
    fode_experiment,
    remainder_norms,
    write_decay_csv,
)


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _status_line(name, ok, detail=""):
    mark = "PASS" if ok else "FAIL"
    return f"[{mark}] {name}" + (f": {detail}" if detail else "")


def _load(args) -> RunConfig:
    if not args.config:
        raise ConfigError("this subcommand needs --config PATH", path="--config")
    cfg = load_config(args.config)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _write_normalized(cfg: RunConfig):
    atomic_write_text(os.path.join(cfg.out_dir, "config.normalized.json"),
                      cfg.normalized_json() + "\n")


def _build_manifest(cfg: RunConfig, args):
    lattice = cfg.lattice()
    n_max = cfg.n_max
    if args.max_n is not None:
        n_max = args.max_n
    manifest = build_expansion(cfg.forcing, lattice, cfg.sys, cfg.gevrey,
                               cap=cfg.cap, n_max=n_max, domain=cfg.domain)
    return manifest


def cmd_lattice(args) -> int:
    cfg = _load(args)
    lattice = build_lattice(cfg.generators, cfg.m_star, cfg.cutoff)
    _write_normalized(cfg)
    atomic_write_json(os.path.join(cfg.out_dir, "lattice.json"),
                      lattice.to_json_dict())
    _say(args, f"lattice: {len(lattice)} exponents up to {cfg.cutoff} "
               f"(m_star={cfg.m_star}): "
               + ", ".join(str(m) for m in lattice.mus[:8])
               + (" ..." if len(lattice) > 8 else ""))
    return 0


def cmd_build(args) -> int:
    cfg = _load(args)
    manifest = _build_manifest(cfg, args)
    report = verify_manifest(manifest)
    failed = [r for r in report if not r["passed"]]
    _write_normalized(cfg)
    atomic_write_json(os.path.join(cfg.out_dir, "manifest.json"),
                      manifest.to_json_dict())
    atomic_write_json(os.path.join(cfg.out_dir, "manifest.verify.json"), report)
    kmax, lmax = manifest.max_dims()
    _say(args, f"built {manifest.n_built} terms; dims (k, ell) = "
               f"({kmax}, {lmax}); {len(report)} class checks, "
               f"{len(failed)} failed")
    for r in failed:
        _say(args, _status_line(r["item"], False, r["detail"]))
    return 2 if failed else 0


def _defect_settings(cfg):
    block = cfg.verify.get("defect", {})
    return {
        "t_lo": float(block.get("t_lo", 1e3)),
        "t_hi": float(block.get("t_hi", 1e6)),
        "n_points": int(block.get("n_points", 160)),
        "N_list": [int(n) for n in block.get("N", [1, 2])],
        "margin": float(block.get("min_slope_margin", 0.3)),
    }


def cmd_defect(args) -> int:
    cfg = _load(args)
    manifest = _build_manifest(cfg, args)
    st = _defect_settings(cfg)
    n_list = [n for n in st["N_list"] if n <= manifest.n_built]
    if args.max_n is not None:
        n_list = [n for n in n_list if n <= args.max_n]
    grid = np.geomspace(st["t_lo"], st["t_hi"], st["n_points"])
    _write_normalized(cfg)
    failures = 0
    fit_rows = []
    for N in n_list:
        samples = defect_of_expansion(manifest, N, grid)
        mu_n = float(manifest.lattice.mus[N - 1])
        fit = fit_decay_exponent(samples, manifest.m_star,
                                 context={"alpha": cfg.gevrey.alpha,
                                          "sigma": cfg.gevrey.sigma,
                                          "N": N, "m_star": manifest.m_star,
                                          "mu_N": mu_n})
        ok = fit.slope >= mu_n + st["margin"]
        failures += (not ok)
        fit_rows.append({"N": N, "mu_N": mu_n,
                         "required": mu_n + st["margin"],
                         **fit.to_json_dict(), "passed": ok})
        write_decay_csv(
            os.path.join(cfg.out_dir, f"defect_N{N}.csv"), samples,
            {"alpha": cfg.gevrey.alpha, "sigma": cfg.gevrey.sigma,
             "rho": "none", "N": N, "m_star": manifest.m_star,
             "kind": "defect_norm"}, [fit])
        _say(args, _status_line(
            f"defect N={N}", ok,
            f"slope {fit.slope:.4f} >= {mu_n + st['margin']:.4f} "
            f"(mu_N={mu_n:.4f})"))
    atomic_write_json(os.path.join(cfg.out_dir, "defect_fits.json"), fit_rows)
    return 2 if failures else 0


def _simulate_settings(cfg):
    block = cfg.verify.get("simulate", {})
    return {
        "band": int(block.get("band", 2)),
        "dt": float(block.get("dt", 5e-3)),
        "t0": float(block.get("t0", 1.0)),
        "t1": float(block.get("t1", 2000.0)),
        "n_samples": int(block.get("n_samples", 96)),
        "fit_t_lo": float(block.get("fit_t_lo", 200.0)),
        "N_list": [int(n) for n in block.get("N", [1, 2])],
        "n_initial": int(block.get("n_initial", 3)),
        "u0_scale": float(block.get("u0_scale", 0.25)),
        "u0_modes": int(block.get("u0_modes", 8)),
        "margin": float(block.get("min_slope_margin", 0.1)),
        "drift_tol": float(block.get("energy_drift_tol", 1e-6)),
    }


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.m_star != 0:
        raise ConfigError(
            "trajectory verification is restricted to the power scale "
            "(m_star = 0); slower log scales cannot be resolved in feasible "
            "horizons -- use the defect check instead", path="force.m_star")
    manifest = _build_manifest(cfg, args)
    st = _simulate_settings(cfg)
    rho_list = tuple(args.rho) if args.rho else cfg.rho_list
    n_list = [n for n in st["N_list"] if n <= manifest.n_built]
    if args.max_n is not None:
        n_list = [n for n in n_list if n <= args.max_n]
    scfg = SolverConfig(band=st["band"], dt=st["dt"], t0=st["t0"],
                        t1=st["t1"], n_samples=st["n_samples"])
    band = GalerkinBand(cfg.domain, st["band"])
    force = ExpansionForce([p for _, p in cfg.forcing], cfg.sys, band)
    rng = rng_from_seed(cfg.seed)
    u0s = []
    for _ in range(st["n_initial"]):
        u0 = random_solenoidal_field(rng, cfg.domain, count=st["u0_modes"],
                                     band=st["band"], real=True)
        u0s.append(u0.scaled(st["u0_scale"] / u0.h_norm()))
    _write_normalized(cfg)
    trajectories = integrate_many(u0s, force, scfg, nonlinear=True,
                                  sys=cfg.sys)
    failures = 0
    fit_rows = []
    for i_traj, traj in enumerate(trajectories):
        drift_ok = traj.energy_drift < st["drift_tol"]
        failures += (not drift_ok)
        _say(args, _status_line(
            f"energy identity u0#{i_traj}", drift_ok,
            f"drift {traj.energy_drift:.3g} < {st['drift_tol']:.1g}"))
        for N in n_list:
            mu_n = float(manifest.lattice.mus[N - 1])
            for rho in rho_list:
                gp = GevreyIndex(cfg.gevrey.alpha + 1.0 - rho,
                                 cfg.gevrey.sigma)
                samples = remainder_norms(traj, manifest, N, gp)
                window = [(t, v) for t, v in samples if t >= st["fit_t_lo"]]
                fit = fit_decay_exponent(
                    window, manifest.m_star,
                    context={"alpha": cfg.gevrey.alpha,
                             "sigma": cfg.gevrey.sigma, "rho": rho, "N": N,
                             "m_star": manifest.m_star, "u0": i_traj})
                ok = fit.slope >= mu_n + st["margin"]
                failures += (not ok)
                fit_rows.append({"u0": i_traj, "N": N, "rho": rho,
                                 "mu_N": mu_n,
                                 "required": mu_n + st["margin"],
                                 **fit.to_json_dict(), "passed": ok})
                write_decay_csv(
                    os.path.join(cfg.out_dir,
                                 f"remainder_u{i_traj}_N{N}_rho{rho}.csv"),
                    samples,
                    {"alpha": cfg.gevrey.alpha, "sigma": cfg.gevrey.sigma,
                     "rho": rho, "N": N, "m_star": manifest.m_star,
                     "kind": "remainder_norm"}, [fit])
                _say(args, _status_line(
                    f"remainder u0#{i_traj} N={N} rho={rho}", ok,
                    f"slope {fit.slope:.4f} >= {mu_n + st['margin']:.4f}"))
    atomic_write_json(os.path.join(cfg.out_dir, "remainder_fits.json"),
                      fit_rows)
    return 2 if failures else 0


def cmd_fode(args) -> int:
    cfg = _load(args)
    block = cfg.verify.get("fode", {})
    scfg = SolverConfig(band=int(block.get("band", 2)),
                        dt=float(block.get("dt", 1e-2)),
                        t0=float(block.get("t0", 1.0)),
                        t1=float(block.get("t1", 2000.0)),
                        n_samples=int(block.get("n_samples", 48)))
    epsilon = float(block.get("epsilon", 0.25))
    delta0_list = [float(d) for d in block.get("delta0", (0.5, 1.0))]
    amplitude = float(block.get("amplitude", 0.5))
    term_index = int(block.get("term_index", 0))
    mu, p = cfg.forcing[term_index]
    descr = classify(p)
    m = max(descr.m, 0)
    band = GalerkinBand(cfg.domain, scfg.band)
    eta = p.terms[0].xi.real_part()
    eta = eta.scaled(1.0 / max(eta.h_norm(), 1e-300))
    _write_normalized(cfg)
    failures = 0
    fit_rows = []
    for delta0 in delta0_list:
        g = PowerDecayForce(eta, m, float(mu) + delta0, amplitude, band)
        result = fode_experiment(p, g, cfg.sys, scfg, cfg.gevrey,
                                 epsilon=epsilon, delta0=delta0)
        failures += (not result.passed)
        fit_rows.append({"delta0": delta0, "mu": result.mu, "m": result.m,
                         "required": result.required_slope,
                         **result.fit.to_json_dict(),
                         "passed": result.passed})
        write_decay_csv(
            os.path.join(cfg.out_dir, f"fode_delta{delta0}.csv"),
            list(result.fit.samples),
            {"alpha": cfg.gevrey.alpha, "sigma": cfg.gevrey.sigma,
             "rho": epsilon, "N": term_index + 1, "m_star": result.m,
             "kind": "fode_remainder"}, [result.fit])
        _say(args, _status_line(
            f"linearized remainder delta0={delta0}", bool(result.passed),
            f"slope {result.fit.slope:.4f} >= {result.required_slope:.4f}"))
    atomic_write_json(os.path.join(cfg.out_dir, "fode_fits.json"), fit_rows)
    return 2 if failures else 0


def cmd_convert(args) -> int:
    cfg = _load(args)
    manifest = _build_manifest(cfg, args)
    block = cfg.verify.get("convert", {})
    t_grid = block.get("t_grid")
    if t_grid is None:
        st = _defect_settings(cfg)
        t_grid = list(np.geomspace(st["t_lo"], st["t_hi"], 7))
    tol = float(block.get("tol", 1e-12))
    real_terms = []
    worst = 0.0
    ip_ok = True
    for n, q in enumerate(manifest.q_list, start=1):
        if q.is_zero():
            real_terms.append(None)
            continue
        ip_ok = ip_ok and check_IP(q)
        rsum, dims = to_real(q)
        real_terms.append(rsum)
        for t in t_grid:
            a = eval_sum(q, float(t), manifest.sys, strict=False).real_part()
            b = rsum.eval(float(t), manifest.sys)
            scale = max(a.h_norm(), b.h_norm())
            if scale > 0:
                worst = max(worst, (a - b).h_norm() / scale)
    _write_normalized(cfg)
    atomic_write_json(
        os.path.join(cfg.out_dir, "manifest.real.json"),
        {"schema": "gevrey-expand/real-manifest-v1",
         "terms": [r.to_json_dict() if r is not None else None
                   for r in real_terms]})
    ok = worst <= tol
    report = {"max_rel_mismatch": worst, "tol": tol,
              "ip_preserved": bool(ip_ok), "passed": bool(ok and ip_ok),
              "t_grid": [float(t) for t in t_grid]}
    atomic_write_json(os.path.join(cfg.out_dir, "convert_report.json"), report)
    _say(args, _status_line("real-form conversion", ok and ip_ok,
                            f"max pointwise mismatch {worst:.3g}, IP "
                            f"{'kept' if ip_ok else 'broken'}"))
    return 0 if (ok and ip_ok) else 2


def cmd_verify_identities(args) -> int:
    seed = args.seed if args.seed is not None else 0
    rows = run_identity_suite(seed)
    out_dir = args.out or "out"
    atomic_write_json(os.path.join(out_dir, "identities.json"),
                      {"seed": seed,
                       "checks": [r.to_json_dict() for r in rows]})
    failed = 0
    for r in rows:
        _say(args, _status_line(r.name, r.passed, r.detail))
        failed += (not r.passed)
    return 2 if failed else 0


def cmd_report(args) -> int:
    out_dir = args.out or (args.config and
                           load_config(args.config).out_dir) or "out"
    if not os.path.isdir(out_dir):
        raise ConfigError("output directory not found", path=out_dir)
    report = {"directory": os.path.abspath(out_dir), "fits": {}, "csv": [],
              "identities": None, "convert": None, "all_passed": True}
    for name in sorted(os.listdir(out_dir)):
        path = os.path.join(out_dir, name)
        if name.endswith(".csv"):
            report["csv"].append(name)
        elif name in ("defect_fits.json", "remainder_fits.json",
                      "fode_fits.json"):
            with open(path) as handle:
                rows = json.load(handle)
            report["fits"][name.replace("_fits.json", "")] = rows
            for row in rows:
                if row.get("passed") is False:
                    report["all_passed"] = False
        elif name == "identities.json":
            with open(path) as handle:
                report["identities"] = json.load(handle)
            for row in report["identities"]["checks"]:
                if not row["passed"]:
                    report["all_passed"] = False
        elif name == "convert_report.json":
            with open(path) as handle:
                report["convert"] = json.load(handle)
            if not report["convert"].get("passed", True):
                report["all_passed"] = False
    atomic_write_json(os.path.join(out_dir, "report.json"), report)
    _say(args, _status_line("aggregate report", report["all_passed"],
                            f"{len(report['csv'])} csv files, "
                            f"{len(report['fits'])} fit groups"))
    return 0 if report["all_passed"] else 2


COMMANDS = {
    "lattice": cmd_lattice,
    "build": cmd_build,
    "defect": cmd_defect,
    "simulate": cmd_simulate,
    "fode": cmd_fode,
    "convert": cmd_convert,
    "verify-identities": cmd_verify_identities,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gevrey-expand",
        description="Asymptotic-expansion construction and Galerkin "
                    "verification for the periodic 3D Navier-Stokes system.")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="path to a JSON/YAML run config")
    parser.add_argument("--out", help="output directory override")
    parser.add_argument("--seed", type=int, default=None,
                        help="seed override for randomized suites")
    parser.add_argument("--max-n", type=int, default=None,
                        help="cap the number of expansion terms")
    parser.add_argument("--rho", type=float, action="append", default=None,
                        help="norm-weakening exponent (repeatable)")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = COMMANDS[args.subcommand](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 1
    except GevreyExpandError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    raise SystemExit(main())
