"""Scale family between the rough and homogenized regimes.

For alpha in [1, 2) the noise is mollified at scale eps^(alpha/2) (parabolic
scaling: eps^alpha in time, eps^(alpha/2) in space), attenuated by the
prefactor eps^(1/2 - alpha/4).  After the exponential drift correction
exp(-c_star t / eps^(alpha-1)) the solution homogenizes to the deterministic
heat flow, with Gaussian fluctuations of order eps^((2-alpha)/4) solving the
Edwards-Wilkinson equation.  At alpha = 2 the construction coincides with the
rough-regime field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .mollifier import Mollifier, default_mollifier
from .noise import GridSpec, WhiteNoiseRealization, mollify, sample_white_noise
from .solver import InitialCondition, SolutionField, solve_fd
from .stats import EstimateWithCI, mean_estimate


@dataclass(frozen=True)
class ScaleConfig:
    """Derived scales for one (alpha, eps) point of the family."""

    alpha: float
    eps: float

    def __post_init__(self):
        if not (1.0 <= self.alpha <= 2.0):
            raise ValueError("alpha must lie in [1, 2]")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @property
    def kernel_scale(self) -> float:
        """Mollification scale: eps^alpha in time, eps^(alpha/2) in space."""
        return self.eps ** (self.alpha / 2.0)

    @property
    def noise_prefactor(self) -> float:
        return self.eps ** (0.5 - self.alpha / 4.0)

    @property
    def fluctuation_order(self) -> float:
        return self.eps ** ((2.0 - self.alpha) / 4.0)

    def drift_correction(self, t) -> np.ndarray:
        """exp(-c_star t / eps^(alpha-1)) with c_star supplied at call sites."""
        return np.asarray(t, dtype=float) * self.eps ** (1.0 - self.alpha)


def solve_v(
    config: ScaleConfig,
    noise: WhiteNoiseRealization,
    u0: InitialCondition,
    c_star: float,
    t_max: float | None = None,
    moll: Mollifier | None = None,
    store_every: int = 1,
) -> tuple[SolutionField, SolutionField]:
    """Attenuated-noise solution and its drift-corrected field.

    Runs the operator-split scheme with potential prefactor * xi and zero
    renormalization constant, then applies the exact exponential correction.
    """
    moll = moll or default_mollifier()
    field = mollify(noise, config.kernel_scale, moll)
    v = solve_fd(
        field,
        0.0,
        u0,
        t_max=t_max,
        potential_scale=config.noise_prefactor,
        store_every=store_every,
    )
    corr = np.exp(-c_star * config.drift_correction(v.times))
    corrected = SolutionField(
        times=v.times,
        xs=v.xs,
        values=v.values * corr[:, None],
        provenance=dict(v.provenance, alpha=config.alpha, eps=config.eps, corrected=True),
    )
    return v, corrected


def ew_variance_target(t: float) -> float:
    """Variance of the Edwards-Wilkinson field at one point for the constant
    profile: integral of (4 pi (t-r))^(-1/2) over [0, t] = sqrt(t / pi)."""
    return float(np.sqrt(t / np.pi))


def corrected_field_samples(
    config: ScaleConfig,
    grid: GridSpec,
    u0: InitialCondition,
    c_star: float,
    t: float,
    probes: np.ndarray,
    nreal: int,
    seed: int,
    moll: Mollifier | None = None,
) -> np.ndarray:
    """Corrected-field values at (t, probes), one row per realization."""
    moll = moll or default_mollifier()
    probes = np.asarray(probes, dtype=float)
    out = np.empty((nreal, len(probes)))
    nsteps = max(1, int(round(t / grid.dt)))
    for r in range(nreal):
        wn = sample_white_noise(grid, rng.child_seed(seed, "homog", r))
        _, corrected = solve_v(
            config, wn, u0, c_star, t_max=t, moll=moll, store_every=nsteps
        )
        out[r] = corrected.at(np.full(len(probes), t), probes)
    return out


def ew_fluctuation(
    config: ScaleConfig,
    samples: np.ndarray,
    t: float,
) -> dict:
    """Empirical variance of the rescaled centered corrected field.

    `samples` holds corrected-field values (realizations x probes).  The
    statistic is eps^(-(2-alpha)/4) (v_corr - mean v_corr); its variance is
    compared with the Edwards-Wilkinson target sqrt(t / pi).
    """
    if samples.shape[0] < 200:
        raise ValueError("need at least 200 independent realizations")
    resc = (samples - samples.mean(axis=0)) / config.fluctuation_order
    per_probe = resc.var(axis=0, ddof=1)
    var = mean_estimate(per_probe)
    target = ew_variance_target(t)
    return {
        "variance": var,
        "target": target,
        "rel_error": abs(var.value - target) / target,
    }


def fluctuation_size(samples: np.ndarray) -> EstimateWithCI:
    """Realization spread of the corrected field: probe-averaged standard
    deviation, with a jackknife standard error over realizations."""
    n = samples.shape[0]
    full = float(np.mean(samples.std(axis=0, ddof=1)))
    jack = np.empty(n)
    for i in range(n):
        sub = np.delete(samples, i, axis=0)
        jack[i] = float(np.mean(sub.std(axis=0, ddof=1)))
    se = float(np.sqrt((n - 1) * np.var(jack, ddof=0)))
    return EstimateWithCI(value=full, se=se, n=n)


def transition_sweep(
    alphas,
    eps_list,
    grid: GridSpec,
    u0: InitialCondition,
    c_star: float,
    t: float,
    probes: np.ndarray,
    nreal: int,
    seed: int,
    moll: Mollifier | None = None,
) -> list[dict]:
    """Fluctuation-size table over the (alpha, eps) family.

    Within one (alpha, eps) cell realizations are fresh; across cells with
    the same replicate index the white noise is shared, so rows of the table
    are coupled through a common driving field.
    """
    moll = moll or default_mollifier()
    rows = []
    for alpha in alphas:
        for eps in eps_list:
            cfg = ScaleConfig(alpha=float(alpha), eps=float(eps))
            samples = corrected_field_samples(
                cfg, grid, u0, c_star, t, probes, nreal, seed, moll
            )
            size = fluctuation_size(samples)
            mean = mean_estimate(samples.mean(axis=1))
            rows.append(
                {
                    "alpha": float(alpha),
                    "eps": float(eps),
                    "mean": mean.value,
                    "mean_se": mean.se,
                    "fluct_size": size.value,
                    "fluct_se": size.se,
                    "order": cfg.fluctuation_order,
                }
            )
    return rows


def loglog_slope(rows: list[dict], alpha: float) -> float:
    """Least-squares slope of log fluctuation size against log eps at one
    alpha of a transition sweep."""
    pts = [(r["eps"], r["fluct_size"]) for r in rows if r["alpha"] == alpha]
    if len(pts) < 2:
        raise ValueError("need at least two eps values at this alpha")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    return float(np.polyfit(x, y, 1)[0])
