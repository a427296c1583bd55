"""Smooth compactly supported mollifier and the covariance kernels built from it.

The kernel is a product of standard bumps, phi(t, x) = N * beta(t / t_hw) *
beta(x / x_hw) with beta(u) = exp(-1 / (1 - u^2)) on |u| < 1, normalized to
unit total mass.  Because phi factorizes, every derived kernel (the
self-covariance R, the cross-covariance R_{eps1,eps2}, the time marginal Phi)
factorizes into 1D convolutions of the bump with itself, which this module
tabulates once and interpolates linearly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

TABLE_STEP = 1.0 / 256.0  # node spacing of the exported reference table
FINE = 16  # internal 1D tables are this much finer, so lerp error << MC error


def bump(u):
    """Standard bump exp(-1/(1-u^2)) on |u| < 1, zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    ui = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ui * ui))
    return out


def gauss_panels(f, lo, hi, panels=64, deg=8):
    """Composite Gauss-Legendre quadrature of f over [lo, hi]."""
    nodes, weights = np.polynomial.legendre.leggauss(deg)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    x = (mid[:, None] + half * nodes[None, :]).ravel()
    w = np.broadcast_to(half * weights, (panels, deg)).ravel()
    return float(np.dot(w, f(x)))


@dataclass(frozen=True)
class Table1D:
    """Uniform-grid table with linear interpolation, zero outside its range."""

    x0: float
    step: float
    values: np.ndarray

    @property
    def nodes(self):
        return self.x0 + self.step * np.arange(len(self.values))

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values, left=0.0, right=0.0)


def _bump_conv(hw1: float, hw2: float, x, deg=96):
    """Unnormalized convolution of two rescaled bumps.

    Returns integral of bump((x - s)/hw1) * bump(s/hw2) ds, supported on
    |x| < hw1 + hw2.  Single Gauss-Legendre panel over the smooth overlap.
    Callers attach normalization and 1/scale factors.
    """
    scalar = np.isscalar(x) or np.ndim(x) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    nodes, weights = np.polynomial.legendre.leggauss(deg)
    lo = np.maximum(-hw2, x - hw1)
    hi = np.minimum(hw2, x + hw1)
    ok = hi > lo
    if np.any(ok):
        mid = 0.5 * (lo[ok] + hi[ok])
        half = 0.5 * (hi[ok] - lo[ok])
        s = mid[:, None] + half[:, None] * nodes[None, :]
        vals = bump((x[ok, None] - s) / hw1) * bump(s / hw2)
        out[ok] = half * np.dot(vals, weights)
    return out[0] if scalar else out


class Mollifier:
    """The bump mollifier, its rescalings, and derived covariance kernels.

    All methods are pure functions over tables built in __init__; instances
    are safe for concurrent reads.
    """

    def __init__(self, x_halfwidth: float = 0.5):
        if x_halfwidth <= 0:
            raise ValueError("x_halfwidth must be positive")
        self.t_halfwidth = 0.5
        self.x_halfwidth = float(x_halfwidth)
        th, xh = self.t_halfwidth, self.x_halfwidth
        # 1D bump masses; integral of bump(u/h) du = h * c0
        c0 = gauss_panels(bump, -1.0, 1.0, panels=64, deg=8)
        self._mass_t = th * c0
        self._mass_x = xh * c0
        self.normalization = 1.0 / (self._mass_t * self._mass_x)

        # autocorrelation tables: A on |t| < 2*th, C on |x| < 2*xh
        step = TABLE_STEP / FINE
        tn = np.arange(-2 * th, 2 * th + 0.5 * step, step)
        xn = np.arange(-2 * xh, 2 * xh + 0.5 * step, step)
        A = _bump_conv(th, th, tn)
        C = _bump_conv(xh, xh, xn)
        # enforce exact evenness (kills quadrature round-off asymmetry)
        A = 0.5 * (A + A[::-1])
        C = 0.5 * (C + C[::-1])
        self.corr_t = Table1D(tn[0], step, A)
        self.corr_x = Table1D(xn[0], step, C)
        # centered-difference derivative of the space factor
        dC = np.gradient(C, step)
        self.dcorr_x = Table1D(xn[0], step, dC)

    # -- the mollifier itself -------------------------------------------------

    def phi(self, t, x):
        """phi(t, x); exactly zero outside the open support box."""
        return (
            self.normalization
            * bump(np.asarray(t, dtype=float) / self.t_halfwidth)
            * bump(np.asarray(x, dtype=float) / self.x_halfwidth)
        )

    def phi_eps(self, t, x, eps):
        """Parabolic rescaling eps^-3 phi(t/eps^2, x/eps)."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        return self.phi(np.asarray(t) / eps**2, np.asarray(x) / eps) / eps**3

    # -- covariance kernels ---------------------------------------------------

    def covariance_R(self, t, x):
        """Self-covariance R(t, x) = (phi conv phi~)(t, x), from the tables."""
        n2 = self.normalization**2
        return n2 * self.corr_t(t) * self.corr_x(x)

    def covariance_R_eps(self, t, x, eps):
        """R_eps(t, x) = eps^-3 R(t/eps^2, x/eps)."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        return self.covariance_R(np.asarray(t) / eps**2, np.asarray(x) / eps) / eps**3

    def cross_time_factor(self, t, eps1, eps2):
        """Time factor of the two-scale cross-covariance (normalization folded in)."""
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("scales must be positive")
        return (
            self.normalization**2
            * _bump_conv(self.t_halfwidth * eps1**2, self.t_halfwidth * eps2**2, t)
            / (eps1**2 * eps2**2)
        )

    def cross_space_factor(self, x, eps1, eps2):
        """Space factor of the two-scale cross-covariance."""
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("scales must be positive")
        return _bump_conv(self.x_halfwidth * eps1, self.x_halfwidth * eps2, x) / (
            eps1 * eps2
        )

    def covariance_R_eps12(self, t, x, eps1, eps2):
        """Cross-covariance of two mollification scales, by 1D quadrature."""
        return self.cross_time_factor(t, eps1, eps2) * self.cross_space_factor(
            x, eps1, eps2
        )

    def dR_dx(self, t, x):
        """d/dx of R, via centered differences on the space-factor table."""
        n2 = self.normalization**2
        return n2 * self.corr_t(t) * self.dcorr_x(x)

    # -- time marginal --------------------------------------------------------

    def Phi(self, x):
        """Time marginal Phi(x) = integral of phi(t, x) dt."""
        return (
            self.normalization
            * self._mass_t
            * bump(np.asarray(x, dtype=float) / self.x_halfwidth)
        )

    def Phi_eps12(self, x, eps1, eps2):
        """Convolution of the rescaled time marginals at two scales."""
        if eps1 <= 0 or eps2 <= 0:
            raise ValueError("scales must be positive")
        n2 = (self.normalization * self._mass_t) ** 2
        return (
            n2
            * _bump_conv(self.x_halfwidth * eps1, self.x_halfwidth * eps2, x)
            / (eps1 * eps2)
        )

    # -- cross-scale 1D factor tables (hot-loop inputs) ------------------------

    def cross_factor_tables(self, eps1, eps2, nnodes=257):
        """1D factor tables (T_t, T_x) with R_{e1,e2}(t,x) = T_t(t) * T_x(x).

        The normalization N^2 is folded into the time factor.
        """
        tw = self.t_halfwidth * (eps1**2 + eps2**2)
        xw = self.x_halfwidth * (eps1 + eps2)
        tn = np.linspace(-tw, tw, nnodes)
        xn = np.linspace(-xw, xw, nnodes)
        tvals = (
            self.normalization**2
            * _bump_conv(self.t_halfwidth * eps1**2, self.t_halfwidth * eps2**2, tn)
            / (eps1**2 * eps2**2)
        )
        xvals = _bump_conv(self.x_halfwidth * eps1, self.x_halfwidth * eps2, xn) / (
            eps1 * eps2
        )
        return (
            Table1D(tn[0], tn[1] - tn[0], tvals),
            Table1D(xn[0], xn[1] - xn[0], xvals),
        )

    # -- diagnostics ----------------------------------------------------------

    def phi_mass(self):
        """Total mass of phi by 2D composite Gauss-Legendre quadrature."""
        th, xh = self.t_halfwidth, self.x_halfwidth
        inner = lambda x: np.array(
            [gauss_panels(lambda t: self.phi(t, xi), -th, th, panels=64, deg=4) for xi in x]
        )
        return gauss_panels(inner, -xh, xh, panels=64, deg=4)

    def covariance_table(self):
        """Full 2D table of R on [-1,1] x [-2 x_hw, 2 x_hw] (for dumps/tests)."""
        n2 = self.normalization**2
        tn = self.corr_t.nodes[::FINE]
        xn = self.corr_x.nodes[::FINE]
        return tn, xn, n2 * np.outer(
            self.corr_t.values[::FINE], self.corr_x.values[::FINE]
        )


@lru_cache(maxsize=4)
def default_mollifier(x_halfwidth: float = 0.5) -> Mollifier:
    return Mollifier(x_halfwidth=x_halfwidth)
