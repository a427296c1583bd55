"""Reference solutions of the limiting stochastic heat equation.

Three independent routes to the same second moment: a semi-implicit Ito
grid scheme driven by discrete white noise, the truncated chaos series with
closed-form simplex integrals, and a Monte Carlo over Brownian pairs of the
exponential intersection local time.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gammaln, ndtr

from . import rng
from .brownian import intersection_local_time_samples
from .noise import WhiteNoiseRealization
from .solver import InitialCondition, SolutionField, _heat_step_matrices, _explicit_rhs
from .stats import EstimateWithCI, mean_estimate


def heat_kernel(s, y):
    """Standard heat kernel q(s, y) = (2 pi s)^(-1/2) exp(-y^2 / 2s)."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(-(y**2) / (2 * s)) / np.sqrt(2 * np.pi * s)


def second_moment_oracle(t: float) -> float:
    """Closed form of E[exp(ell(t))]: 2 e^{t/4} Phi(sqrt(t/2))."""
    return 2.0 * np.exp(t / 4.0) * float(ndtr(np.sqrt(t / 2.0)))


# -- Ito grid scheme -----------------------------------------------------------


def solve_she_ito(
    noise: WhiteNoiseRealization,
    u0: InitialCondition,
    t_max: float | None = None,
    theta: float = 1.0,
    store_every: int = 1,
) -> SolutionField:
    """Semi-discrete Ito Euler scheme, noise in non-anticipating position.

    Step: u^{n+1} = HeatStep(u^n) + u^n * dW^n, with dW^n the cell noise
    value times dt (variance dt/dx per node).  No renormalization constant.
    """
    g = noise.grid
    if g.t_min > 0:
        raise ValueError("noise grid must start at t <= 0")
    t_end = g.t_max if t_max is None else t_max
    h = g.dt
    nsteps = int(round(t_end / h))
    i_zero = int(round(-g.t_min / h))
    if theta < 0.5 and h > g.dx**2 / (2.0 * (1.0 - 2.0 * theta)):
        raise ValueError("CFL violation: explicit heat step unstable at this dt")
    xs = g.x_centers
    ab, mu = _heat_step_matrices(len(xs), h / g.dx**2, theta)

    u = u0(xs).astype(float)
    kept, kept_idx = [u.copy()], [0]
    for n in range(nsteps):
        rhs = _explicit_rhs(u, mu)
        rhs[0], rhs[-1] = u[0], u[-1]
        heat = solve_banded((1, 1), ab, rhs)
        dW = noise.values[i_zero + n] * h
        u = heat + u * dW
        u[0], u[-1] = heat[0], heat[-1]
        if (n + 1) % store_every == 0 or n + 1 == nsteps:
            kept.append(u.copy())
            kept_idx.append(n + 1)
    kept_idx = np.unique(kept_idx)
    return SolutionField(
        times=h * kept_idx,
        xs=xs,
        values=np.array(kept),
        provenance={"scheme": "she-ito", "theta": theta, "seed": noise.seed},
    )


def ito_second_moment(
    grid,
    nreal: int,
    seed: int,
    t: float | None = None,
    x_band: float = 5.0,
    store_every: int | None = None,
) -> EstimateWithCI:
    """E[U(t, x)^2] for the constant profile from repeated Ito scheme runs.

    Averages U^2 over the probe band within each realization and applies a
    control variate: the probe-band mean of U has known expectation 1 by the
    martingale property, which removes most realization-to-realization noise.
    """
    from .noise import sample_white_noise
    from .solver import constant_one

    t_end = grid.t_max if t is None else t
    if store_every is None:
        store_every = int(round(t_end / grid.dt))
    mask = np.abs(grid.x_centers) <= x_band
    a = np.empty(nreal)
    b = np.empty(nreal)
    for r in range(nreal):
        wn = sample_white_noise(grid, rng.child_seed(seed, "ito", r))
        sol = solve_she_ito(wn, constant_one(), t_max=t_end, store_every=store_every)
        v = sol.values[-1][mask]
        a[r] = float(np.mean(v**2))
        b[r] = float(np.mean(v))
    beta = float(np.cov(a, b)[0, 1] / np.var(b, ddof=1))
    adj = a - beta * (b - 1.0)
    return mean_estimate(adj)


# -- chaos expansion -----------------------------------------------------------


def chaos_coefficient(k: int, t: float, x: float, u0: InitialCondition):
    """Evaluator of the order-k chaos kernel f_k(s_1..s_k, y_1..y_k).

    The innermost integral against the initial profile is a heat-semigroup
    value, computed by Gauss-Hermite (exactly 1 for the constant profile).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    xi, w = np.polynomial.hermite_e.hermegauss(60)
    w = w / np.sqrt(2 * np.pi)

    def semigroup(s, y):
        if u0.name == "constant":
            return np.ones_like(np.asarray(y, dtype=float))
        pts = np.asarray(y, dtype=float)[..., None] + np.sqrt(s) * xi
        return u0(pts) @ w

    def f(s, y):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if len(s) != k or len(y) != k:
            raise ValueError("need k time and k space arguments")
        if k == 0:
            return float(semigroup(t, np.array(x)))
        if not (np.all(np.diff(s) > 0) and s[0] > 0 and s[-1] < t):
            return 0.0
        val = semigroup(s[0], y[0])
        for i in range(k - 1):
            val *= heat_kernel(s[i + 1] - s[i], y[i + 1] - y[i])
        val *= heat_kernel(t - s[-1], x - y[-1])
        return float(val)

    return f


def chaos_term(k: int, t: float) -> float:
    """L2 norm squared of the order-k chaos kernel for the constant profile.

    Dirichlet closed form of the simplex integral: (t/4)^{k/2} / Gamma(k/2+1).
    """
    if k == 0:
        return 1.0
    return float(np.exp(0.5 * k * np.log(t / 4.0) - gammaln(0.5 * k + 1.0)))


def chaos_second_moment(t: float, kmax: int) -> float:
    """Truncated chaos series for E[U(t, x)^2] with the constant profile."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    return sum(chaos_term(k, t) for k in range(kmax + 1))


# -- local-time Monte Carlo route ------------------------------------------------


def limit_second_moment(
    t: float,
    x: float,
    u0: InitialCondition,
    npaths: int,
    seed: int,
    dt: float = 1e-5,
    delta: float = 0.01,
    ell_samples: np.ndarray | None = None,
) -> EstimateWithCI:
    """Monte Carlo of u0(x+B1(t)) u0(x+B2(t)) exp(ell(t)) over pairs.

    For the constant profile a precomputed array of intersection local-time
    samples may be supplied to avoid regenerating paths.
    """
    if u0.name == "constant":
        ell = (
            ell_samples
            if ell_samples is not None
            else intersection_local_time_samples(npaths, t, dt, delta, seed)
        )
        return mean_estimate(np.exp(ell))
    n = int(round(t / dt))
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npaths)
    for i in range(npaths):
        g1 = rng.normals(rng.child_seed(seed, "lim2", i, 0), n, dtype=np.float32)
        g2 = rng.normals(rng.child_seed(seed, "lim2", i, 1), n, dtype=np.float32)
        b1 = np.cumsum(sd * g1)
        b2 = np.cumsum(sd * g2)
        diff = b1 - b2
        inside = np.abs(diff) < delta
        cnt = np.count_nonzero(inside[:-1]) + 0.5 * float(inside[-1]) + 0.5
        ell = dt * cnt / (2 * delta)
        out[i] = float(u0(x + b1[-1])) * float(u0(x + b2[-1])) * np.exp(ell)
    return mean_estimate(out)
