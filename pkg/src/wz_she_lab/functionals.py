"""Brownian path functionals and the renormalization constants.

The first-order constant is the expected running covariance integral along a
path; the second-order constant is computed by two independent routes: the
time correlation of the stationary centered lag functional, and the second
moment of a Clark-Ocone-type kernel integral.  The two-path functionals give
the band-limited double integral that converges to the intersection local
time.

All hot loops live in _kernels; covariance factors enter as uniform 1D/2D
tables evaluated at exact grid lags in time and by linear interpolation in
space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels, rng
from .brownian import BrownianPath, sample_path
from .mollifier import Mollifier, default_mollifier, gauss_panels
from .stats import EstimateWithCI, batch_means_estimate, mean_estimate


@dataclass(frozen=True)
class ConstantsEstimate:
    """The renormalization constants with standard errors and method tags."""

    c_star: float
    c_star_se: float
    sigma_star_sq: float
    sigma_star_sq_se: float
    sigma_prime_sq: float
    sigma_prime_sq_se: float
    methods: tuple = (
        "c_star: quadrature (SE from MC cross-check)",
        "sigma_star_sq: lag-correlation Monte Carlo",
        "sigma_prime_sq: Clark-Ocone kernel Monte Carlo",
    )

    def as_dict(self, phi_spec: dict) -> dict:
        return {
            "c_star": self.c_star,
            "c_star_se": self.c_star_se,
            "sigma_star_sq": self.sigma_star_sq,
            "sigma_star_sq_se": self.sigma_star_sq_se,
            "sigma_prime_sq": self.sigma_prime_sq,
            "sigma_prime_sq_se": self.sigma_prime_sq_se,
            "phi_spec": phi_spec,
        }


# -- covariance factor plumbing ------------------------------------------------


def _space_table(moll: Mollifier):
    tab = moll.corr_x
    return tab.x0, 1.0 / tab.step, np.ascontiguousarray(tab.values)


def _time_lag_values(moll: Mollifier, h: float) -> np.ndarray:
    """Full time factor (normalization included) at lags 0, h, ..., 1."""
    K = int(round(1.0 / h))
    lags = h * np.arange(K + 1)
    return moll.normalization**2 * moll.corr_t(lags)


def _gauss_average(f, var, deg=64):
    """E[f(Z)] for Z ~ N(0, var), by Gauss-Hermite quadrature."""
    xi, w = np.polynomial.hermite_e.hermegauss(deg)
    vals = f(np.sqrt(var) * xi)
    return np.dot(vals, w) / np.sqrt(2 * np.pi)


def mean_lag_curve(moll: Mollifier, u):
    """m(u) = E[R(u, B(u))], the integrand of the first-order constant."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    tf = moll.normalization**2 * moll.corr_t(u)
    out = np.empty_like(u)
    for i, ui in enumerate(u):
        if tf[i] == 0.0:
            out[i] = 0.0
        else:
            out[i] = tf[i] * _gauss_average(moll.corr_x, max(ui, 1e-300))
    return out


def discrete_mean_table(moll: Mollifier, h: float) -> np.ndarray:
    """Mdisc[k] = trapezoid of m over lags 0..k*h, matching the path-grid
    discretization of the lag integral exactly."""
    K = int(round(1.0 / h))
    m = mean_lag_curve(moll, h * np.arange(K + 1))
    w = np.ones(K + 1)
    w[0] = 0.5
    cum = np.cumsum(w * m)
    Mdisc = h * (cum - 0.5 * m)  # trapezoid: half weight at the moving endpoint
    Mdisc[0] = 0.0
    return Mdisc


# -- first-order constant --------------------------------------------------------


def c_star_quadrature(moll: Mollifier | None = None) -> float:
    """Quadrature value of the first-order constant.

    Geometric panels toward u = 0 where the Gaussian average steepens.
    """
    moll = moll or default_mollifier()
    edges = np.concatenate([[0.0], np.geomspace(1e-6, 1.0, 80)])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += gauss_panels(lambda u: mean_lag_curve(moll, u), lo, hi, panels=1, deg=16)
    return total


def c_star_mc(npaths: int, dt: float, seed: int, moll: Mollifier | None = None) -> EstimateWithCI:
    """Monte Carlo of the running covariance integral along Brownian paths."""
    if dt > 1e-3:
        raise ValueError("dt must be <= 1e-3")
    moll = moll or default_mollifier()
    Av = _time_lag_values(moll, dt)
    cx0, cinv, Cv = _space_table(moll)
    n = len(Av) - 1
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npaths)
    for i in range(npaths):
        g = rng.normals(rng.child_seed(seed, "cstar", i), n, dtype=np.float32)
        b = np.concatenate([[0.0], np.cumsum((sd * g).astype(np.float64))])
        out[i] = _kernels.running_R_integral(b, dt, Av, cx0, cinv, Cv)
    return batch_means_estimate(out)


# -- stationary lag functional and the second-order constant ---------------------


def calX(s: float, path: BrownianPath, moll: Mollifier | None = None) -> float:
    """Centered lag functional at time s on a two-sided path covering [s-1, s]."""
    moll = moll or default_mollifier()
    if s - 1.0 < path.t_start - 1e-12:
        raise ValueError("path must cover [s-1, s]")
    h = path.dt
    Av = _time_lag_values(moll, h)
    cx0, cinv, Cv = _space_table(moll)
    j = path.index_of(s)
    val = _kernels.lag_R_integral(np.ascontiguousarray(path.values), j, h, Av, cx0, cinv, Cv)
    return float(val - c_star_quad_cached(moll))


@lru_cache(maxsize=4)
def _c_star_cache(key):
    return c_star_quadrature(key)


def c_star_quad_cached(moll: Mollifier) -> float:
    return _c_star_cache(moll)


def calx_samples(
    npaths: int, s_list, seed: int, dt: float = 2e-3, moll: Mollifier | None = None
) -> np.ndarray:
    """calX at the given times over independent two-sided paths; shape
    (npaths, len(s_list)).  Centering uses the quadrature constant."""
    moll = moll or default_mollifier()
    s_list = list(s_list)
    horizon = max(max(s_list), 0.0) + dt
    Av = _time_lag_values(moll, dt)
    cx0, cinv, Cv = _space_table(moll)
    c = c_star_quad_cached(moll)
    out = np.empty((npaths, len(s_list)))
    for i in range(npaths):
        p = sample_path(horizon, dt, rng.child_seed(seed, "calx", i), t_start=-1.0)
        b = np.ascontiguousarray(p.values)
        for m, s in enumerate(s_list):
            j = p.index_of(s)
            out[i, m] = _kernels.lag_R_integral(b, j, dt, Av, cx0, cinv, Cv) - c
    return out


def sigma_star_sq_mc(
    npaths: int, seed: int, dt: float = 2e-3, s_step: float = 0.01, moll: Mollifier | None = None
) -> EstimateWithCI:
    """Second-order constant via 2 * integral of E[calX(s) calX(0)] over [0, 1].

    One two-sided path per sample covers [-1, 2]; the s-integral is a
    trapezoid over the correlation profile of that path.  Centering uses the
    discretized mean so the product has no centering bias.
    """
    moll = moll or default_mollifier()
    h = dt
    Av = _time_lag_values(moll, h)
    cx0, cinv, Cv = _space_table(moll)
    Mdisc = discrete_mean_table(moll, h)
    c_center = Mdisc[-1]
    stride = int(round(s_step / h))
    nout = int(round(1.0 / s_step)) + 1
    w = np.ones(nout)
    w[0] = w[-1] = 0.5
    out = np.empty(npaths)
    for i in range(npaths):
        p = sample_path(2.0, h, rng.child_seed(seed, "sigma", i), t_start=-1.0)
        b = np.ascontiguousarray(p.values)
        i0 = p.index_of(0.0)
        prof = _kernels.calx_profile(b, i0, h, Av, cx0, cinv, Cv, c_center, stride, nout)
        out[i] = 2.0 * s_step * float(np.dot(w, prof)) * prof[0]
    return batch_means_estimate(out)


# -- Clark-Ocone route ------------------------------------------------------------


def clark_ocone_table(
    moll: Mollifier, dt: float, x_max: float = 6.0, dx_tab: float = 0.02
):
    """Table G[k, :] of the s-integrated Clark-Ocone kernel at u = k*dt.

    G(u, x) = integral over s in [1, 1+u] of
              integral q(s-1, x-y) dR/dy (s-u, y) dy,
    evaluated with the heat-kernel average by Gauss-Hermite and the time
    factor from the autocorrelation table.  Odd in x.
    """
    xg = np.arange(-x_max, x_max + 0.5 * dx_tab, dx_tab)
    # H(a, x) = E[C'(x - sqrt(a) Z)]
    na = 513
    ag = np.linspace(0.0, 1.0, na)
    xi, wgh = np.polynomial.hermite_e.hermegauss(64)
    wgh = wgh / np.sqrt(2 * np.pi)
    H = np.empty((na, len(xg)))
    dC = moll.dcorr_x
    for ia, a in enumerate(ag):
        pts = xg[:, None] - np.sqrt(a) * xi[None, :]
        H[ia] = dC(pts) @ wgh
    astep = ag[1] - ag[0]

    def H_at(a, x_all=True):
        pos = np.clip(a / astep, 0, na - 1 - 1e-12)
        i = int(pos)
        f = pos - i
        return H[i] * (1 - f) + H[i + 1] * f

    nodes, weights = np.polynomial.legendre.leggauss(16)
    n = int(round(1.0 / dt))
    G = np.zeros((n + 1, len(xg)))
    n2 = moll.normalization**2
    for k in range(1, n + 1):
        u = k * dt
        mid, half = 0.5 * u, 0.5 * u
        a_nodes = mid + half * nodes
        tf = n2 * moll.corr_t(1.0 + a_nodes - u)
        acc = np.zeros(len(xg))
        for a, wq, tfv in zip(a_nodes, weights, tf):
            if tfv != 0.0:
                acc += wq * tfv * H_at(a)
        G[k] = half * acc
    return xg, G


def clark_ocone_samples(
    npaths: int, seed: int, dt: float = 1e-3, moll: Mollifier | None = None
) -> np.ndarray:
    """Samples of the Clark-Ocone integral Z(1) over independent paths."""
    moll = moll or default_mollifier()
    xg, G = clark_ocone_table(moll, dt)
    gx0, ginv = xg[0], 1.0 / (xg[1] - xg[0])
    G = np.ascontiguousarray(G)
    n = int(round(1.0 / dt))
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npaths)
    for i in range(npaths):
        g = rng.normals(rng.child_seed(seed, "clark", i), n, dtype=np.float32)
        b = np.concatenate([[0.0], np.cumsum((sd * g).astype(np.float64))])
        out[i] = _kernels.clark_ocone_integral(b, dt, G, gx0, ginv)
    return out


def sigma_prime_sq_mc(
    npaths: int, seed: int, dt: float = 1e-3, moll: Mollifier | None = None
) -> EstimateWithCI:
    """Second-order constant as the second moment of the Clark-Ocone integral."""
    z = clark_ocone_samples(npaths, seed, dt=dt, moll=moll)
    return batch_means_estimate(z**2)


# -- microscopic functional -------------------------------------------------------


def X_eps(
    path: BrownianPath, eps: float, t: float, s_step: float | None = None,
    moll: Mollifier | None = None,
) -> float:
    """Centered double covariance integral in microscopic coordinates.

    The path must resolve the microscopic horizon t/eps^2 at step <= 1e-2;
    the short-time boundary layer s < 1 enters exactly through the truncated
    lag integral and its matching discrete mean.
    """
    moll = moll or default_mollifier()
    if eps <= 0:
        raise ValueError("eps must be positive")
    h = path.dt
    if h > 1e-2 + 1e-12:
        raise ValueError("path must be resolved at microscopic step <= 1e-2")
    T = t / eps**2
    if path.horizon < T - 1e-9:
        raise ValueError("path must cover the microscopic horizon t/eps^2")
    stride = int(round((s_step or 2 * h) / h))
    Av = _time_lag_values(moll, h)
    cx0, cinv, Cv = _space_table(moll)
    Mdisc = discrete_mean_table(moll, h)
    n = path.index_of(T)
    b = np.ascontiguousarray(path.values[: n + 1])
    return eps * float(
        _kernels.x_eps_sum(b, h, stride, Av, cx0, cinv, Cv, Mdisc)
    )


def x_eps_samples(
    npaths: int, eps: float, t: float, seed: int, h: float = 0.01,
    s_step: float = 0.02, moll: Mollifier | None = None,
) -> np.ndarray:
    """X_eps(t) over independent microscopic paths."""
    moll = moll or default_mollifier()
    T = t / eps**2
    n = int(round(T / h))
    stride = int(round(s_step / h))
    Av = _time_lag_values(moll, h)
    cx0, cinv, Cv = _space_table(moll)
    Mdisc = discrete_mean_table(moll, h)
    sd = np.float32(np.sqrt(h))
    out = np.empty(npaths)
    for i in range(npaths):
        g = rng.normals(rng.child_seed(seed, "xeps", i), n, dtype=np.float32)
        b = np.concatenate([[0.0], np.cumsum((sd * g).astype(np.float64))])
        out[i] = eps * _kernels.x_eps_sum(b, h, stride, Av, cx0, cinv, Cv, Mdisc)
    return out


# -- two-path functionals -----------------------------------------------------------


def _band_tables(moll: Mollifier, eps1: float, eps2: float, h: float):
    w = moll.t_halfwidth * (eps1**2 + eps2**2)
    K = int(np.ceil(w / h))
    Ttv = moll.cross_time_factor(h * np.arange(-K, K + 1), eps1, eps2)
    xw = moll.x_halfwidth * (eps1 + eps2)
    xn = np.linspace(-1.05 * xw, 1.05 * xw, 1025)
    Txv = moll.cross_space_factor(xn, eps1, eps2)
    return K, np.ascontiguousarray(Ttv), xn[0], 1.0 / (xn[1] - xn[0]), np.ascontiguousarray(Txv)


def _check_pair(B1: BrownianPath, B2: BrownianPath, t: float):
    if B1.dt != B2.dt or B1.t_start != B2.t_start or len(B1.values) != len(B2.values):
        raise ValueError("paths must share discretization")
    if t > B1.horizon + 1e-12:
        raise ValueError("t exceeds path horizon")


def Y_eps(
    B1: BrownianPath, B2: BrownianPath, eps1: float, eps2: float, t: float,
    moll: Mollifier | None = None,
) -> float:
    """Band-limited double integral of the cross-covariance along two paths."""
    moll = moll or default_mollifier()
    _check_pair(B1, B2, t)
    h = B1.dt
    n = int(round(t / h))
    K, Ttv, tx0, tinv, Txv = _band_tables(moll, eps1, eps2, h)
    b1 = np.ascontiguousarray(B1.values[: n + 1])
    b2 = np.ascontiguousarray(B2.values[: n + 1])
    return float(_kernels.band_double_integral(b1, b2, h, K, Ttv, tx0, tinv, Txv))


def Y_tilde(
    B1: BrownianPath, B2: BrownianPath, eps1: float, eps2: float, t: float,
    moll: Mollifier | None = None,
) -> float:
    """Single-integral surrogate: the x-marginal kernel on the diagonal."""
    moll = moll or default_mollifier()
    _check_pair(B1, B2, t)
    h = B1.dt
    n = int(round(t / h))
    xw = moll.x_halfwidth * (eps1 + eps2)
    xn = np.linspace(-1.05 * xw, 1.05 * xw, 1025)
    Pv = moll.Phi_eps12(xn, eps1, eps2)
    b1 = np.ascontiguousarray(B1.values[: n + 1])
    b2 = np.ascontiguousarray(B2.values[: n + 1])
    return float(
        _kernels.marginal_single_integral(
            b1, b2, h, xn[0], 1.0 / (xn[1] - xn[0]), np.ascontiguousarray(Pv)
        )
    )


def pair_functional_samples(
    npairs: int, eps_list, t: float, seed: int, dt: float = 5e-4,
    delta: float = 0.01, moll: Mollifier | None = None, with_tilde: bool = False,
) -> dict:
    """Per-pair Y values for each scale, plus the occupation local-time
    estimate of the same pair and the single-path local time of the first
    path (for the exponential domination check)."""
    moll = moll or default_mollifier()
    n = int(round(t / dt))
    tabs = {e: _band_tables(moll, e, e, dt) for e in eps_list}
    ptabs = {}
    if with_tilde:
        for e in eps_list:
            xw = moll.x_halfwidth * 2 * e
            xn = np.linspace(-1.05 * xw, 1.05 * xw, 1025)
            ptabs[e] = (xn[0], 1.0 / (xn[1] - xn[0]), np.ascontiguousarray(moll.Phi_eps12(xn, e, e)))
    sd = np.float32(np.sqrt(dt))
    out = {("Y", e): np.empty(npairs) for e in eps_list}
    if with_tilde:
        out.update({("Ytilde", e): np.empty(npairs) for e in eps_list})
    out["ell"] = np.empty(npairs)
    out["L1"] = np.empty(npairs)
    for i in range(npairs):
        g1 = rng.normals(rng.child_seed(seed, "ypair", i, 0), n, dtype=np.float32)
        g2 = rng.normals(rng.child_seed(seed, "ypair", i, 1), n, dtype=np.float32)
        b1 = np.concatenate([[0.0], np.cumsum((sd * g1).astype(np.float64))])
        b2 = np.concatenate([[0.0], np.cumsum((sd * g2).astype(np.float64))])
        for e in eps_list:
            K, Ttv, tx0, tinv, Txv = tabs[e]
            out[("Y", e)][i] = _kernels.band_double_integral(b1, b2, dt, K, Ttv, tx0, tinv, Txv)
            if with_tilde:
                px0, pinv, Pv = ptabs[e]
                out[("Ytilde", e)][i] = _kernels.marginal_single_integral(b1, b2, dt, px0, pinv, Pv)
        diff = b1 - b2
        inside = np.abs(diff) < delta
        cnt = np.count_nonzero(inside[1:-1]) + 0.5 * float(inside[0]) + 0.5 * float(inside[-1])
        out["ell"][i] = dt * cnt / (2 * delta)
        inside1 = np.abs(b1) < delta
        cnt1 = np.count_nonzero(inside1[1:-1]) + 0.5 * float(inside1[0]) + 0.5 * float(inside1[-1])
        out["L1"][i] = dt * cnt1 / (2 * delta)
    return out


# -- assembled constants -------------------------------------------------------------


def compute_constants(
    seed: int, npaths_c: int = 100_000, npaths_sigma: int = 20_000,
    npaths_prime: int = 20_000, moll: Mollifier | None = None,
) -> tuple[ConstantsEstimate, EstimateWithCI]:
    """All renormalization constants; returns (estimate, MC cross-check of the
    first-order constant)."""
    moll = moll or default_mollifier()
    c_quad = c_star_quadrature(moll)
    c_mc = c_star_mc(npaths_c, 1e-3, rng.child_seed(seed, "c"), moll=moll)
    s2 = sigma_star_sq_mc(npaths_sigma, rng.child_seed(seed, "s2"), moll=moll)
    sp2 = sigma_prime_sq_mc(npaths_prime, rng.child_seed(seed, "sp2"), moll=moll)
    est = ConstantsEstimate(
        c_star=c_quad,
        c_star_se=c_mc.se,
        sigma_star_sq=s2.value,
        sigma_star_sq_se=s2.se,
        sigma_prime_sq=sp2.value,
        sigma_prime_sq_se=sp2.se,
    )
    return est, c_mc
