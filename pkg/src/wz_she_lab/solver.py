"""Solvers for the regularized equation: finite differences and Feynman-Kac.

The finite-difference scheme is an operator split per time step: a theta-
scheme heat half-step (banded tridiagonal solve), a multiplicative potential
update u <- u * exp(potential * dt), and a second heat half-step.  The
renormalization constant is removed exactly by the substitution
u = w * exp(-c t), so only the bounded noise potential enters the
exponential.  The Feynman-Kac route averages the exponential of the
time-reversed field along independent Brownian paths; both routes consume
the same mollified field, so they discretize the same realization.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels, rng
from .functionals import ConstantsEstimate, _band_tables
from .mollifier import Mollifier, default_mollifier
from .noise import MollifiedField
from .stats import EstimateWithCI, mean_estimate


@dataclass(frozen=True)
class InitialCondition:
    """Bounded continuous initial profile with an explicit bound."""

    f: Callable[[np.ndarray], np.ndarray]
    bound: float
    name: str

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))


def constant_one() -> InitialCondition:
    return InitialCondition(f=lambda x: np.ones_like(x), bound=1.0, name="constant")


def gaussian_bump() -> InitialCondition:
    return InitialCondition(
        f=lambda x: np.exp(-0.5 * x**2), bound=1.0, name="gaussian"
    )


def cosine() -> InitialCondition:
    return InitialCondition(f=lambda x: np.cos(x), bound=1.0, name="cosine")


PRESETS = {"constant": constant_one, "gaussian": gaussian_bump, "cosine": cosine}


def c_eps(eps: float, constants: ConstantsEstimate) -> float:
    """Renormalization constant at scale eps."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return constants.c_star / eps + 0.5 * constants.sigma_star_sq


@dataclass(frozen=True)
class SolutionField:
    """Space-time solution values with provenance."""

    times: np.ndarray
    xs: np.ndarray
    values: np.ndarray  # shape (len(times), len(xs))
    provenance: dict = dc_field(default_factory=dict)

    def at(self, t, x):
        """Bilinear interpolation inside the solved window."""
        dt = self.times[1] - self.times[0]
        dx = self.xs[1] - self.xs[0]
        ti = np.clip((np.asarray(t, dtype=float) - self.times[0]) / dt, 0, len(self.times) - 1)
        xi = np.clip((np.asarray(x, dtype=float) - self.xs[0]) / dx, 0, len(self.xs) - 1)
        i0 = np.minimum(ti.astype(int), len(self.times) - 2)
        j0 = np.minimum(xi.astype(int), len(self.xs) - 2)
        ft, fx = ti - i0, xi - j0
        v = self.values
        return (
            v[i0, j0] * (1 - ft) * (1 - fx)
            + v[i0 + 1, j0] * ft * (1 - fx)
            + v[i0, j0 + 1] * (1 - ft) * fx
            + v[i0 + 1, j0 + 1] * ft * fx
        )


def _heat_step_matrices(nx: int, lam: float, theta: float):
    """Banded forms of (I - theta*lam/2*D) and (I + (1-theta)*lam/2*D) for the
    interior second difference D with frozen Dirichlet boundary rows."""
    ab = np.zeros((3, nx))
    ab[0, 1:] = -0.5 * theta * lam
    ab[1, :] = 1.0 + theta * lam
    ab[2, :-1] = -0.5 * theta * lam
    # frozen boundaries
    ab[1, 0] = ab[1, -1] = 1.0
    ab[0, 1] = ab[2, -2] = 0.0
    mu = 0.5 * (1.0 - theta) * lam
    return ab, mu


def _explicit_rhs(u, mu):
    rhs = u.copy()
    rhs[1:-1] += mu * (u[2:] - 2 * u[1:-1] + u[:-2])
    return rhs


def solve_fd(
    field: MollifiedField,
    c: float,
    u0: InitialCondition,
    t_max: float | None = None,
    dt_s: float | None = None,
    theta: float = 0.5,
    potential_scale: float = 1.0,
    store_every: int = 1,
    xs: np.ndarray | None = None,
) -> SolutionField:
    """Operator-split finite-difference solution on the field's space grid.

    Step: heat theta-half-step, potential update exp(scale*field*dt), heat
    theta-half-step; afterwards the exact factor exp(-c t) is applied.
    Dirichlet values frozen at the initial profile on the padded boundary.
    """
    g = field.grid
    t_end = g.t_max if t_max is None else t_max
    h = g.dt if dt_s is None else dt_s
    nsteps = int(round(t_end / h))
    if xs is None:
        xs = g.x_centers
    xs = np.asarray(xs, dtype=float)
    dx = xs[1] - xs[0]
    lam = 0.5 * h / dx**2  # half-step ratio
    if theta < 0.5 and h > dx**2 / (2.0 * (1.0 - 2.0 * theta)):
        raise ValueError("CFL violation: explicit heat step unstable at this dt")
    ab, mu = _heat_step_matrices(len(xs), lam, theta)

    u = u0(xs).astype(float)
    times = h * np.arange(0, nsteps + 1)
    kept, kept_idx = [u.copy()], [0]
    for n in range(nsteps):
        rhs = _explicit_rhs(u, mu)
        rhs[0], rhs[-1] = u[0], u[-1]
        u = solve_banded((1, 1), ab, rhs)
        tm = times[n] + 0.5 * h
        pot = potential_scale * field.at(np.full(len(xs), tm), xs)
        u = u * np.exp(pot * h)
        rhs = _explicit_rhs(u, mu)
        rhs[0], rhs[-1] = u[0], u[-1]
        u = solve_banded((1, 1), ab, rhs)
        if (n + 1) % store_every == 0 or n + 1 == nsteps:
            kept.append(u.copy())
            kept_idx.append(n + 1)
    kept_idx = np.unique(kept_idx)
    kept_times = times[kept_idx]
    vals = np.array(kept)[: len(kept_idx)]
    vals = vals * np.exp(-c * kept_times)[:, None]
    return SolutionField(
        times=kept_times,
        xs=xs,
        values=vals,
        provenance={
            "scheme": "fd-split",
            "theta": theta,
            "eps": field.eps,
            "c": c,
            "seed": field.seed,
            "dt_s": h,
        },
    )


def feynman_kac(
    field: MollifiedField,
    c: float,
    u0: InitialCondition,
    t: float,
    x: float,
    npaths: int,
    seed: int,
    batch: int = 2000,
) -> EstimateWithCI:
    """Monte Carlo of the path-exponential representation at one point.

    Paths step on the field's time grid; the field is read time-reversed,
    matching the same realization the finite-difference route consumes.
    """
    g = field.grid
    if t > g.t_max + 1e-12:
        raise ValueError("t exceeds the field's time range")
    lo, hi = g.interior(t)
    if not (lo <= x <= hi):
        raise ValueError("x outside the buffered interior")
    h = g.dt
    n = int(round(t / h))
    s_nodes = h * np.arange(n + 1)
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    vals = np.empty(npaths)
    sd = np.sqrt(h)
    done = 0
    bi = 0
    while done < npaths:
        m = min(batch, npaths - done)
        gmat = rng.normals(rng.child_seed(seed, "fk", bi), (m, n), dtype=np.float32)
        paths = np.concatenate(
            [np.zeros((m, 1)), np.cumsum(sd * gmat.astype(np.float64), axis=1)], axis=1
        )
        pos = x + paths
        ts = np.broadcast_to(t - s_nodes, (m, n + 1))
        pot = field.at(ts, pos)
        integral = h * (pot @ w)
        vals[done : done + m] = u0(pos[:, -1]) * np.exp(integral - c * t)
        done += m
        bi += 1
    return mean_estimate(vals)


# -- moment-formula cross checks ------------------------------------------------


def first_moment_mc(
    eps: float,
    t: float,
    c: float,
    u0: InitialCondition,
    x: float,
    npaths: int,
    seed: int,
    dt: float = 1e-3,
    moll: Mollifier | None = None,
) -> EstimateWithCI:
    """Noise-free route for E[u_eps(t, x)]: Brownian functional with the
    self-covariance double integral in the exponent."""
    moll = moll or default_mollifier()
    n = int(round(t / dt))
    K, Ttv, tx0, tinv, Txv = _band_tables(moll, eps, eps, dt)
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npaths)
    for i in range(npaths):
        g = rng.normals(rng.child_seed(seed, "mom1", i), n, dtype=np.float32)
        b = np.concatenate([[0.0], np.cumsum((sd * g).astype(np.float64))])
        D = _kernels.band_double_integral(b, b, dt, K, Ttv, tx0, tinv, Txv)
        out[i] = float(u0(x + b[-1])) * np.exp(0.5 * D - c * t)
    return mean_estimate(out)


def second_moment_pair_mc(
    eps1: float,
    eps2: float,
    t: float,
    c1: float,
    c2: float,
    u0: InitialCondition,
    x: float,
    npairs: int,
    seed: int,
    dt: float = 1e-3,
    moll: Mollifier | None = None,
) -> EstimateWithCI:
    """Noise-free route for E[u_{eps1} u_{eps2}] at one point: two independent
    paths, self-covariance squares plus the cross band integral."""
    moll = moll or default_mollifier()
    n = int(round(t / dt))
    tabs1 = _band_tables(moll, eps1, eps1, dt)
    tabs2 = _band_tables(moll, eps2, eps2, dt)
    tabs12 = _band_tables(moll, eps1, eps2, dt)
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npairs)
    for i in range(npairs):
        g1 = rng.normals(rng.child_seed(seed, "mom2", i, 0), n, dtype=np.float32)
        g2 = rng.normals(rng.child_seed(seed, "mom2", i, 1), n, dtype=np.float32)
        b1 = np.concatenate([[0.0], np.cumsum((sd * g1).astype(np.float64))])
        b2 = np.concatenate([[0.0], np.cumsum((sd * g2).astype(np.float64))])
        D1 = _kernels.band_double_integral(b1, b1, dt, *tabs1)
        D2 = _kernels.band_double_integral(b2, b2, dt, *tabs2)
        Y12 = _kernels.band_double_integral(b1, b2, dt, *tabs12)
        expo = 0.5 * D1 + 0.5 * D2 + Y12 - (c1 + c2) * t
        out[i] = float(u0(x + b1[-1])) * float(u0(x + b2[-1])) * np.exp(expo)
    return mean_estimate(out)


def moment_formulas_check(
    eps: float,
    t: float,
    x: float,
    c: float,
    u0: InitialCondition,
    grid,
    nreal: int,
    npaths_b: int,
    seed: int,
    moll: Mollifier | None = None,
) -> dict:
    """First-moment cross check: noise-averaged solver values against the
    noise-free Brownian-functional representation."""
    from .noise import mollify, sample_white_noise

    fd_vals = np.empty(nreal)
    for r in range(nreal):
        wn = sample_white_noise(grid, rng.child_seed(seed, "mom-real", r))
        f = mollify(wn, eps, moll)
        sol = solve_fd(f, c, u0, t_max=t, store_every=max(1, int(round(t / grid.dt))))
        fd_vals[r] = float(sol.at(t, x))
    route_a = mean_estimate(fd_vals)
    route_b = first_moment_mc(eps, t, c, u0, x, npaths_b, rng.child_seed(seed, "mom-b"), moll=moll)
    return {
        "noise_averaged": route_a,
        "brownian_functional": route_b,
        "agree_3se": route_a.agrees_with(route_b, k=3.0),
    }


def heat_semigroup(u0: InitialCondition, t: float, x) -> np.ndarray:
    """Reference heat-semigroup value E[u0(x + B(t))] by Gauss-Hermite."""
    xi, w = np.polynomial.hermite_e.hermegauss(80)
    w = w / np.sqrt(2 * np.pi)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pts = x[:, None] + np.sqrt(t) * xi[None, :]
    return u0(pts) @ w
