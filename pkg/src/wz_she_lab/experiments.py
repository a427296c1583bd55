"""Experiment orchestration: configs, seeding, reports, and the three suites.

Seeds derive hierarchically (master -> experiment -> replicate -> path) with
a keyed splitting function, so reports are bit-for-bit reproducible for a
given (config, master seed) regardless of how replicates are scheduled.
Worker count comes only from the WZ_SHE_LAB_WORKERS environment variable;
aggregation is associative and order-independent.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__, rng
from . import homogenization as hg
from . import she
from .functionals import compute_constants
from .mollifier import default_mollifier
from .noise import GridSpec, mollify, sample_white_noise
from .solver import PRESETS, c_eps, heat_semigroup, solve_fd
from .stats import mean_estimate

WORKERS_ENV = "WZ_SHE_LAB_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer")
    return n


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    experiment: str
    master_seed: int = 0
    phi: dict = field(
        default_factory=lambda: {
            "shape": "product bump",
            "t_halfwidth": 0.5,
            "x_halfwidth": 0.5,
        }
    )
    grid: dict = field(
        default_factory=lambda: {
            "t_max": 0.75,
            "x_min": -8.0,
            "x_max": 8.0,
            "dt": 1e-3,
            "dx": 0.02,
            "t_min": -0.25,
        }
    )
    eps_ladder: tuple = (0.4, 0.2, 0.1)
    alphas: tuple = (1.0,)
    t_probe: float = 0.5
    x_probes: tuple = (-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0)
    replicates: int = 200
    sweep_replicates: int = 200
    npaths: int = 100_000
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        ladder = tuple(self.eps_ladder)
        if any(b >= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("eps ladder must be strictly decreasing")
        g = self.grid_spec()
        for eps in ladder:
            if eps**2 < 2 * g.dt or eps < 2 * g.dx:
                raise ValueError(f"eps={eps} violates the grid resolution preconditions")

    def grid_spec(self) -> GridSpec:
        return GridSpec(**self.grid)

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def to_json(self) -> str:
        d = asdict(self)
        d["eps_ladder"] = list(self.eps_ladder)
        d["alphas"] = list(self.alphas)
        d["x_probes"] = list(self.x_probes)
        return json.dumps(d, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        d = json.loads(text)
        for key in ("eps_ladder", "alphas", "x_probes"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]


@dataclass
class ExperimentReport:
    """Machine-readable result: named cells, verdicts, provenance."""

    experiment: str
    cells: dict
    checks: dict
    provenance: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> str:
        return json.dumps(
            {
                "experiment": self.experiment,
                "cells": self.cells,
                "checks": self.checks,
                "passed": self.passed,
                "provenance": self.provenance,
            },
            sort_keys=True,
            indent=2,
        )

    def write(self, out_dir: str) -> str:
        """Write report.json plus a meta.json sidecar with the wall clock.

        The sidecar keeps timing out of the report so reruns stay
        byte-identical.
        """
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")
        with open(os.path.join(out_dir, "meta.json"), "w") as fh:
            json.dump(
                {"wall_clock_s": time.time(), "workers": worker_count()}, fh, indent=2
            )
        return path


def _cell(est) -> dict:
    return {"value": est.value, "se": est.se, "n": est.n}


def _exact_cell(value) -> dict:
    return {"value": float(value), "exact": True}


def _provenance(config: ExperimentConfig) -> dict:
    return {
        "build": f"wz-she-lab-{__version__}",
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
    }


def _run_replicates(fn, nrep: int):
    """Map a replicate function over indices, optionally across processes.

    Results are combined in index order, so the outcome is independent of
    the worker count.
    """
    nw = worker_count()
    if nw == 1:
        return [fn(r) for r in range(nrep)]
    from multiprocessing import get_context

    with get_context("fork").Pool(nw) as pool:
        return pool.map(fn, range(nrep))


class _ConvergenceReplicate:
    """One coupled replicate of the convergence study (picklable worker)."""

    def __init__(self, config: ExperimentConfig, constants):
        self.config = config
        self.constants = constants
        self.seed = rng.child_seed(config.master_seed, "theorem-convergence")

    def __call__(self, r: int) -> dict:
        cfg = self.config
        moll = default_mollifier()
        grid = cfg.grid_spec()
        t = cfg.t_probe
        xp = np.asarray(cfg.x_probes, dtype=float)
        tq = np.full(len(xp), t)
        nsteps = max(1, int(round(t / grid.dt)))
        wn = sample_white_noise(grid, rng.child_seed(self.seed, "rep", r))
        out = {}
        u0 = PRESETS["constant"]()
        for eps in cfg.eps_ladder:
            fld = mollify(wn, eps, moll)
            sol = solve_fd(fld, c_eps(eps, self.constants), u0, t_max=t, store_every=nsteps)
            out[f"u_{eps}"] = sol.at(tq, xp)
        ito = she.solve_she_ito(wn, u0, t_max=t, store_every=nsteps)
        out["U"] = ito.at(tq, xp)
        return out


def run_theorem_convergence(config: ExperimentConfig, constants) -> ExperimentReport:
    """Coupled eps-ladder convergence study against the limiting solution.

    Each replicate shares one white-noise realization across all eps levels
    and the Ito reference; reported cells are probe-averaged over replicates.
    """
    cfg = config
    ladder = cfg.eps_ladder
    rep = _ConvergenceReplicate(cfg, constants)
    rows = _run_replicates(rep, cfg.replicates)

    def stacked(key):
        return np.array([row[key] for row in rows])  # replicates x probes

    cells = {}
    checks = {}
    # Cauchy differences along ladder pairs
    pair_vals = []
    for e1, e2 in zip(ladder, ladder[1:]):
        d2 = (stacked(f"u_{e1}") - stacked(f"u_{e2}")) ** 2
        est = mean_estimate(d2.mean(axis=1))
        cells[f"cauchy_sq_{e1}_{e2}"] = _cell(est)
        pair_vals.append(est)
    for i, (a, b) in enumerate(zip(pair_vals, pair_vals[1:])):
        gap = a.value - b.value
        checks[f"cauchy_decreasing_pair{i}"] = bool(
            gap > 0 and gap > 3 * np.hypot(a.se, b.se)
        )
    # distance to the Ito reference
    for eps in ladder:
        d2 = (stacked(f"u_{eps}") - stacked("U")) ** 2
        cells[f"dist_to_limit_sq_{eps}"] = _cell(mean_estimate(d2.mean(axis=1)))
    # second-moment limit: product of the two finest levels
    if len(ladder) >= 2:
        e1, e2 = ladder[-2], ladder[-1]
        prod = stacked(f"u_{e1}") * stacked(f"u_{e2}")
        est = mean_estimate(prod.mean(axis=1))
        target = she.second_moment_oracle(cfg.t_probe)
        cells[f"second_moment_{e1}_{e2}"] = _cell(est)
        cells["second_moment_target"] = _exact_cell(target)
        tol2 = cfg.tolerance("second_moment_rel", 0.08)
        checks["second_moment_within_tol"] = bool(abs(est.value - target) <= tol2 * target)
    # first moments against the heat semigroup (constant profile: exactly 1)
    u0 = PRESETS["constant"]()
    sg = float(np.mean(heat_semigroup(u0, cfg.t_probe, np.asarray(cfg.x_probes))))
    for eps in ladder:
        m1 = mean_estimate(stacked(f"u_{eps}").mean(axis=1))
        cells[f"first_moment_{eps}"] = _cell(m1)
        checks[f"first_moment_3se_{eps}"] = bool(abs(m1.value - sg) <= 3 * m1.se)
    cells["first_moment_target"] = _exact_cell(sg)
    # diagnostic fourth moments (boundedness only, no verdict)
    for eps in ladder:
        m4 = mean_estimate((stacked(f"u_{eps}") ** 4).mean(axis=1))
        cells[f"fourth_moment_{eps}"] = _cell(m4)
    return ExperimentReport(
        experiment="theorem-convergence",
        cells=cells,
        checks=checks,
        provenance=_provenance(cfg),
    )


def run_constants_report(config: ExperimentConfig) -> ExperimentReport:
    """Renormalization constants by both routes with agreement verdicts."""
    cfg = config
    seed = rng.child_seed(cfg.master_seed, "constants")
    npaths_sigma = max(2000, cfg.npaths // 5)
    est, c_mc = compute_constants(
        seed,
        npaths_c=cfg.npaths,
        npaths_sigma=npaths_sigma,
        npaths_prime=npaths_sigma,
    )
    cells = {
        "c_star_quadrature": _exact_cell(est.c_star),
        "c_star_mc": _cell(c_mc),
        "sigma_star_sq": {"value": est.sigma_star_sq, "se": est.sigma_star_sq_se},
        "sigma_prime_sq": {"value": est.sigma_prime_sq, "se": est.sigma_prime_sq_se},
    }
    checks = {
        "c_star_routes_agree": bool(abs(est.c_star - c_mc.value) <= 3 * c_mc.se),
        "sigma_routes_agree": bool(
            abs(est.sigma_star_sq - est.sigma_prime_sq)
            <= 3 * np.hypot(est.sigma_star_sq_se, est.sigma_prime_sq_se)
        ),
    }
    return ExperimentReport(
        experiment="constants",
        cells=cells,
        checks=checks,
        provenance=_provenance(cfg),
    )


class _HomogReplicate:
    """One corrected-field replicate for a (alpha, eps) cell (picklable)."""

    def __init__(self, config: ExperimentConfig, scale: hg.ScaleConfig, c_star: float):
        self.config = config
        self.scale = scale
        self.c_star = c_star
        self.seed = rng.child_seed(
            config.master_seed, "homogenization", str(scale.alpha), str(scale.eps)
        )

    def __call__(self, r: int) -> np.ndarray:
        cfg = self.config
        grid = cfg.grid_spec()
        t = cfg.t_probe
        xp = np.asarray(cfg.x_probes, dtype=float)
        nsteps = max(1, int(round(t / grid.dt)))
        wn = sample_white_noise(grid, rng.child_seed(self.seed, "rep", r))
        _, corrected = hg.solve_v(
            self.scale, wn, PRESETS["constant"](), self.c_star, t_max=t, store_every=nsteps
        )
        return corrected.at(np.full(len(xp), t), xp)


def _homog_cell_samples(
    config: ExperimentConfig, scale: hg.ScaleConfig, c_star: float, nreal: int
) -> np.ndarray:
    rep = _HomogReplicate(config, scale, c_star)
    return np.array(_run_replicates(rep, nreal))


def run_homogenization_suite(config: ExperimentConfig, c_star: float) -> ExperimentReport:
    """Corrected-field limit, Edwards-Wilkinson variance, and scale sweep."""
    cfg = config
    t = cfg.t_probe
    cells = {}
    checks = {}
    sweep_rows = []
    samples_by_eps = {}
    for alpha in cfg.alphas:
        for eps in cfg.eps_ladder:
            scale = hg.ScaleConfig(alpha=float(alpha), eps=float(eps))
            finest = alpha == min(cfg.alphas) and eps == min(cfg.eps_ladder)
            nreal = cfg.replicates if finest else cfg.sweep_replicates
            samples = _homog_cell_samples(cfg, scale, c_star, nreal)
            if alpha == min(cfg.alphas):
                samples_by_eps[eps] = samples
            size = hg.fluctuation_size(samples)
            mean = mean_estimate(samples.mean(axis=1))
            cells[f"fluct_size_a{alpha}_e{eps}"] = _cell(size)
            cells[f"corrected_mean_a{alpha}_e{eps}"] = _cell(mean)
            sweep_rows.append(
                {"alpha": float(alpha), "eps": float(eps), "fluct_size": size.value}
            )
    alpha0 = float(min(cfg.alphas))
    eps0 = min(cfg.eps_ladder)
    samples = samples_by_eps[eps0]
    # homogenized limit: probe-mean of the corrected field near 1 in L1
    l1 = float(np.mean(np.abs(samples[:100].mean(axis=0) - 1.0)))
    cells["corrected_L1_error"] = _exact_cell(l1)
    tol_l1 = cfg.tolerance("homog_l1", 0.05)
    checks["corrected_field_L1"] = bool(l1 <= tol_l1)
    # Edwards-Wilkinson variance of the rescaled fluctuation
    scale0 = hg.ScaleConfig(alpha=alpha0, eps=float(eps0))
    ew = hg.ew_fluctuation(scale0, samples, t)
    cells["ew_variance"] = _cell(ew["variance"])
    cells["ew_target"] = _exact_cell(ew["target"])
    tol_ew = cfg.tolerance("ew_rel", 0.15)
    checks["ew_variance_within_tol"] = bool(ew["rel_error"] <= tol_ew)
    # log-log fluctuation slope across the eps ladder
    slope = hg.loglog_slope(sweep_rows, alpha0)
    cells["loglog_slope"] = _exact_cell(slope)
    target_slope = (2.0 - alpha0) / 4.0
    tol_slope = cfg.tolerance("slope_abs", 0.1)
    checks["loglog_slope_within_tol"] = bool(abs(slope - target_slope) <= tol_slope)
    return ExperimentReport(
        experiment="homogenization",
        cells=cells,
        checks=checks,
        provenance=_provenance(cfg),
    )


EXPERIMENTS = {
    "theorem-convergence": "coupled eps-ladder convergence to the limiting equation",
    "constants": "renormalization constants by independent routes",
    "homogenization": "scale-family limit and Edwards-Wilkinson fluctuations",
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch an experiment by name with constants computed as needed."""
    name = config.experiment
    if name == "constants":
        return run_constants_report(config)
    if name == "theorem-convergence":
        from .functionals import ConstantsEstimate, c_star_quadrature, sigma_star_sq_mc

        seed = rng.child_seed(config.master_seed, "constants")
        npaths_sigma = max(2000, config.npaths // 5)
        s2 = sigma_star_sq_mc(npaths_sigma, rng.child_seed(seed, "s2"))
        consts = ConstantsEstimate(
            c_star=c_star_quadrature(),
            c_star_se=0.0,
            sigma_star_sq=s2.value,
            sigma_star_sq_se=s2.se,
            sigma_prime_sq=s2.value,
            sigma_prime_sq_se=s2.se,
        )
        return run_theorem_convergence(config, consts)
    if name == "homogenization":
        from .functionals import c_star_quadrature

        return run_homogenization_suite(config, c_star_quadrature())
    raise ValueError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}")
