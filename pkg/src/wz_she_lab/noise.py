"""Grid realizations of spacetime white noise and their mollifications.

White noise is discretized per cell: cell (i, j) holds an i.i.d. standard
normal scaled by (dt*dx)^(-1/2), so the discrete pairing with test functions
is consistent with the continuum one.  Mollified fields are discrete
convolutions with the rescaled kernel and are evaluated anywhere by bilinear
interpolation.  Everything is a pure function of (seed, grid, eps).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import rng
from .mollifier import Mollifier, default_mollifier

_MAGIC = b"WNFIELD1"


@dataclass(frozen=True)
class GridSpec:
    """Space-time cell grid. Cell (i, j) covers [t_min + i*dt, +dt) x [x_min + j*dx, +dx)."""

    t_max: float
    x_min: float
    x_max: float
    dt: float
    dx: float
    t_min: float = 0.0

    def __post_init__(self):
        if self.dt <= 0 or self.dx <= 0:
            raise ValueError("dt and dx must be positive")
        if self.n_t < 2 or self.n_x < 2:
            raise ValueError("grid must have at least 2 cells per axis")

    @property
    def n_t(self) -> int:
        return int(round((self.t_max - self.t_min) / self.dt))

    @property
    def n_x(self) -> int:
        return int(round((self.x_max - self.x_min) / self.dx))

    @property
    def t_centers(self):
        return self.t_min + self.dt * (np.arange(self.n_t) + 0.5)

    @property
    def x_centers(self):
        return self.x_min + self.dx * (np.arange(self.n_x) + 0.5)

    def interior(self, t_query: float) -> tuple[float, float]:
        """x-window at distance 6*sqrt(t_query) from the lateral boundaries.

        Queries inside this window are insulated from the zero padding.
        """
        buf = 6.0 * np.sqrt(max(t_query, 0.0))
        lo, hi = self.x_min + buf, self.x_max - buf
        if lo >= hi:
            raise ValueError("x-domain too narrow for the requested buffer")
        return lo, hi


@dataclass(frozen=True)
class WhiteNoiseRealization:
    """One grid draw of white noise; values have variance 1/(dt*dx) per cell."""

    seed: int
    grid: GridSpec
    values: np.ndarray

    @classmethod
    def sample(cls, grid: GridSpec, seed: int) -> "WhiteNoiseRealization":
        scale = 1.0 / np.sqrt(grid.dt * grid.dx)
        g = rng.normals(rng.child_seed(seed, "whitenoise"), (grid.n_t, grid.n_x))
        return cls(seed=seed, grid=grid, values=scale * g)

    @classmethod
    def zeros(cls, grid: GridSpec, seed: int = 0) -> "WhiteNoiseRealization":
        return cls(seed=seed, grid=grid, values=np.zeros((grid.n_t, grid.n_x)))

    def write_binary(self, path):
        """Dump: magic, seed, grid floats (t_min,t_max,x_min,x_max,dt,dx), shape, row-major f64 LE."""
        g = self.grid
        with open(path, "wb") as f:
            f.write(_MAGIC)
            f.write(struct.pack("<Q", self.seed & rng.MASK64))
            f.write(
                struct.pack("<6d", g.t_min, g.t_max, g.x_min, g.x_max, g.dt, g.dx)
            )
            f.write(struct.pack("<2q", g.n_t, g.n_x))
            f.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())

    @classmethod
    def read_binary(cls, path) -> "WhiteNoiseRealization":
        with open(path, "rb") as f:
            if f.read(8) != _MAGIC:
                raise ValueError("not a white-noise dump")
            (seed,) = struct.unpack("<Q", f.read(8))
            t_min, t_max, x_min, x_max, dt, dx = struct.unpack("<6d", f.read(48))
            n_t, n_x = struct.unpack("<2q", f.read(16))
            grid = GridSpec(
                t_max=t_max, x_min=x_min, x_max=x_max, dt=dt, dx=dx, t_min=t_min
            )
            vals = np.frombuffer(f.read(8 * n_t * n_x), dtype="<f8").reshape(n_t, n_x)
        return cls(seed=seed, grid=grid, values=vals.astype(np.float64))


def sample_white_noise(grid: GridSpec, seed: int) -> WhiteNoiseRealization:
    return WhiteNoiseRealization.sample(grid, seed)


@dataclass(frozen=True)
class MollifiedField:
    """A mollification of one white-noise realization, sampled at cell centers."""

    seed: int
    eps: float
    grid: GridSpec
    values: np.ndarray

    def at(self, t, x):
        """Bilinear interpolation at (t, x); constant extrapolation at edges."""
        g = self.grid
        ti = (np.asarray(t, dtype=float) - g.t_min) / g.dt - 0.5
        xi = (np.asarray(x, dtype=float) - g.x_min) / g.dx - 0.5
        ti = np.clip(ti, 0.0, g.n_t - 1.0)
        xi = np.clip(xi, 0.0, g.n_x - 1.0)
        i0 = np.minimum(ti.astype(int), g.n_t - 2)
        j0 = np.minimum(xi.astype(int), g.n_x - 2)
        ft = ti - i0
        fx = xi - j0
        v = self.values
        return (
            v[i0, j0] * (1 - ft) * (1 - fx)
            + v[i0 + 1, j0] * ft * (1 - fx)
            + v[i0, j0 + 1] * (1 - ft) * fx
            + v[i0 + 1, j0 + 1] * ft * fx
        )


def mollification_kernel(grid: GridSpec, eps: float, moll: Mollifier) -> np.ndarray:
    """The rescaled kernel sampled at grid offsets, renormalized to exact unit
    discrete mass so mollification does not bias the field's mean action."""
    ht = int(np.ceil(moll.t_halfwidth * eps**2 / grid.dt))
    hx = int(np.ceil(moll.x_halfwidth * eps / grid.dx))
    toff = grid.dt * np.arange(-ht, ht + 1)
    xoff = grid.dx * np.arange(-hx, hx + 1)
    kern = moll.phi_eps(toff[:, None], xoff[None, :], eps)
    kern /= kern.sum() * grid.dt * grid.dx
    return kern


def mollify(
    noise: WhiteNoiseRealization, eps: float, moll: Mollifier | None = None
) -> MollifiedField:
    """Discrete convolution of the white-noise array with the rescaled kernel."""
    moll = moll or default_mollifier()
    g = noise.grid
    if eps**2 < 2.0 * g.dt:
        raise ValueError(f"time resolution violated: eps^2={eps**2:g} < 2*dt={2 * g.dt:g}")
    if eps < 2.0 * g.dx:
        raise ValueError(f"space resolution violated: eps={eps:g} < 2*dx={2 * g.dx:g}")
    kern = mollification_kernel(g, eps, moll)
    vals = fftconvolve(noise.values, kern, mode="same") * (g.dt * g.dx)
    return MollifiedField(seed=noise.seed, eps=eps, grid=g, values=vals)


def couple_across_scales(
    noise: WhiteNoiseRealization, eps_list, moll: Mollifier | None = None
) -> list[MollifiedField]:
    """Mollify one underlying realization at several scales (common randomness)."""
    return [mollify(noise, eps, moll) for eps in eps_list]
