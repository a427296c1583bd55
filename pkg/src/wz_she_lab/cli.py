"""Command-line interface.

Subcommands:
  run         named experiment -> report.json (exit 0 iff all checks pass)
  solve       one regularized-equation solve at probe points (fd or fk)
  she         limiting-equation second moment by one of three routes
  homog       scale-family sweep rows as CSV
  constants   renormalization constants as JSON
  covariance  mollifier covariance table as CSV
  noise       binary dump of one white-noise realization
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import homogenization as hg
from . import rng, she
from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment
from .functionals import c_star_quadrature, compute_constants, sigma_star_sq_mc
from .mollifier import default_mollifier
from .noise import GridSpec, mollify, sample_white_noise
from .solver import ConstantsEstimate, PRESETS, c_eps, feynman_kac, solve_fd

PHI_SPEC = {"shape": "product bump", "t_halfwidth": 0.5, "x_halfwidth": 0.5}


def _load_config(path: str | None, experiment: str, seed: int) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig(experiment=experiment, master_seed=seed)
    with open(path) as fh:
        cfg = ExperimentConfig.from_json(fh.read())
    if cfg.experiment != experiment or cfg.master_seed != seed:
        from dataclasses import replace

        cfg = replace(cfg, experiment=experiment, master_seed=seed)
    return cfg


def _quick_constants(seed: int) -> ConstantsEstimate:
    s2 = sigma_star_sq_mc(4000, rng.child_seed(seed, "cli-s2"))
    return ConstantsEstimate(
        c_star=c_star_quadrature(),
        c_star_se=0.0,
        sigma_star_sq=s2.value,
        sigma_star_sq_se=s2.se,
        sigma_prime_sq=s2.value,
        sigma_prime_sq_se=s2.se,
    )


def _cmd_run(args) -> int:
    if args.list:
        for name in sorted(EXPERIMENTS):
            print(f"{name}: {EXPERIMENTS[name]}")
        return 0
    if args.experiment is None:
        print("error: an experiment name is required (or --list)", file=sys.stderr)
        return 2
    cfg = _load_config(args.config, args.experiment, args.seed)
    report = run_experiment(cfg)
    if args.out:
        path = report.write(args.out)
        print(path)
    else:
        print(report.to_json())
    return 0 if report.passed else 1


def _cmd_solve(args) -> int:
    cfg = _load_config(args.config, "theorem-convergence", args.seed)
    grid = cfg.grid_spec()
    consts = _quick_constants(args.seed)
    c = c_eps(args.eps, consts)
    u0 = PRESETS["constant"]()
    wn = sample_white_noise(grid, rng.child_seed(args.seed, "solve"))
    field = mollify(wn, args.eps)
    probes = np.asarray(cfg.x_probes, dtype=float)
    out = {"eps": args.eps, "t": args.t, "scheme": args.scheme, "probes": {}}
    if args.scheme == "fd":
        nsteps = max(1, int(round(args.t / grid.dt)))
        sol = solve_fd(field, c, u0, t_max=args.t, store_every=nsteps)
        vals = sol.at(np.full(len(probes), args.t), probes)
        for x, v in zip(probes, vals):
            out["probes"][str(x)] = {"value": float(v), "se": None, "exact_per_realization": True}
        if args.field_csv:
            with open(args.field_csv, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["t", "x", "u"])
                for i, t in enumerate(sol.times):
                    for j, x in enumerate(sol.xs):
                        w.writerow([t, x, sol.values[i, j]])
    else:
        for x in probes:
            est = feynman_kac(
                field, c, u0, args.t, float(x), args.npaths,
                rng.child_seed(args.seed, "fk", str(float(x))),
            )
            out["probes"][str(float(x))] = {"value": est.value, "se": est.se, "n": est.n}
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def _cmd_she(args) -> int:
    target = she.second_moment_oracle(args.t)
    out = {"t": args.t, "method": args.method, "target": target}
    if args.method == "chaos":
        out["value"] = she.chaos_second_moment(args.t, args.kmax)
        out["kmax"] = args.kmax
        out["se"] = None
        out["terms"] = [she.chaos_term(k, args.t) for k in range(args.kmax + 1)]
    elif args.method == "localtime":
        est = she.limit_second_moment(
            args.t, 0.0, PRESETS["constant"](), args.npaths,
            rng.child_seed(args.seed, "she-lt"), dt=1e-4,
        )
        out["value"], out["se"], out["n"] = est.value, est.se, est.n
    else:
        grid = GridSpec(t_max=args.t, x_min=-8.0, x_max=8.0, dt=2e-4, dx=0.02)
        est = she.ito_second_moment(grid, args.reps, rng.child_seed(args.seed, "she-ito"))
        out["value"], out["se"], out["n"] = est.value, est.se, est.n
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


def _cmd_homog(args) -> int:
    grid = GridSpec(t_max=0.75, x_min=-8.0, x_max=8.0, dt=1e-3, dx=0.02, t_min=-0.25)
    probes = np.arange(-3.0, 3.5, 0.5)
    c_star = c_star_quadrature()
    t = args.t
    w = csv.writer(sys.stdout)
    w.writerow(["alpha", "eps", "mean", "var", "target_var", "se"])
    for eps in args.eps:
        scale = hg.ScaleConfig(alpha=args.alpha, eps=eps)
        samples = hg.corrected_field_samples(
            scale, grid, PRESETS["constant"](), c_star, t, probes, args.reps,
            rng.child_seed(args.seed, "homog-cli", str(eps)),
        )
        mean = float(samples.mean())
        se = float(samples.mean(axis=1).std(ddof=1) / np.sqrt(args.reps))
        resc = (samples - samples.mean(axis=0)) / scale.fluctuation_order
        var = float(resc.var(axis=0, ddof=1).mean())
        w.writerow([args.alpha, eps, mean, var, hg.ew_variance_target(t), se])
    return 0


def _cmd_constants(args) -> int:
    est, c_mc = compute_constants(
        args.seed, npaths_c=args.npaths,
        npaths_sigma=max(2000, args.npaths // 5),
        npaths_prime=max(2000, args.npaths // 5),
    )
    print(json.dumps(est.as_dict(PHI_SPEC), sort_keys=True, indent=2))
    return 0


def _cmd_covariance(args) -> int:
    ts, xs, values = default_mollifier().covariance_table()
    w = csv.writer(sys.stdout)
    w.writerow(["t", "x", "R"])
    for i, t in enumerate(ts):
        for j, x in enumerate(xs):
            w.writerow([t, x, values[i, j]])
    return 0


def _cmd_noise(args) -> int:
    grid = GridSpec(t_max=args.t, x_min=-8.0, x_max=8.0, dt=1e-3, dx=0.02)
    wn = sample_white_noise(grid, args.seed)
    wn.write_binary(args.out)
    print(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wz-she-lab", description=__doc__)
    sub = p.add_subparsers(dest="command")

    pr = sub.add_parser("run", help="run a named experiment")
    pr.add_argument("experiment", nargs="?", choices=sorted(EXPERIMENTS))
    pr.add_argument("--config", default=None)
    pr.add_argument("--seed", type=int, default=0)
    pr.add_argument("--out", default=None)
    pr.add_argument("--list", action="store_true")
    pr.set_defaults(fn=_cmd_run)

    ps = sub.add_parser("solve", help="solve the regularized equation once")
    ps.add_argument("--eps", type=float, required=True)
    ps.add_argument("--t", type=float, required=True)
    ps.add_argument("--scheme", choices=("fd", "fk"), default="fd")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--config", default=None)
    ps.add_argument("--npaths", type=int, default=20_000)
    ps.add_argument("--field-csv", default=None)
    ps.set_defaults(fn=_cmd_solve)

    pe = sub.add_parser("she", help="limiting-equation second moment")
    pe.add_argument("--t", type=float, required=True)
    pe.add_argument("--kmax", type=int, default=12)
    pe.add_argument("--method", choices=("ito", "chaos", "localtime"), required=True)
    pe.add_argument("--seed", type=int, default=0)
    pe.add_argument("--npaths", type=int, default=10_000)
    pe.add_argument("--reps", type=int, default=100)
    pe.set_defaults(fn=_cmd_she)

    ph = sub.add_parser("homog", help="scale-family sweep rows as CSV")
    ph.add_argument("--alpha", type=float, required=True)
    ph.add_argument("--eps", type=float, nargs="+", required=True)
    ph.add_argument("--reps", type=int, required=True)
    ph.add_argument("--t", type=float, default=0.5)
    ph.add_argument("--seed", type=int, default=0)
    ph.set_defaults(fn=_cmd_homog)

    pc = sub.add_parser("constants", help="renormalization constants as JSON")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--npaths", type=int, default=100_000)
    pc.set_defaults(fn=_cmd_constants)

    pv = sub.add_parser("covariance", help="covariance table as CSV")
    pv.set_defaults(fn=_cmd_covariance)

    pn = sub.add_parser("noise", help="binary dump of a white-noise realization")
    pn.add_argument("--seed", type=int, default=0)
    pn.add_argument("--t", type=float, default=1.0)
    pn.add_argument("--out", required=True)
    pn.set_defaults(fn=_cmd_noise)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help()
        return 2
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
