"""Brownian path sampling, local-time estimation, and the Tanaka approximation.

Local time is estimated through the occupation measure with a spatial
bandwidth: L(t, x) ~ (1/2 delta) * measure{s <= t : |B(s) - x| < delta},
integrated by the trapezoid rule on the path grid.  The Tanaka route replaces
the sign stochastic integral with a Riemann-Stieltjes sum of a clipped,
steepening soft sign, evaluated on a coarse n-grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng


@dataclass(frozen=True)
class BrownianPath:
    """Discretized Brownian path; values[i] = B(t_start + i*dt), B(0) = 0.

    A negative t_start yields a two-sided path (independent halves glued at 0).
    """

    dt: float
    t_start: float
    values: np.ndarray

    @property
    def horizon(self) -> float:
        return self.t_start + self.dt * (len(self.values) - 1)

    def index_of(self, t: float) -> int:
        i = int(round((t - self.t_start) / self.dt))
        if i < 0 or i >= len(self.values):
            raise ValueError(f"time {t} outside path range")
        return i

    def value(self, t: float) -> float:
        return float(self.values[self.index_of(t)])


def sample_path(horizon, dt, seed, t_start=0.0) -> BrownianPath:
    """Cumulative sum of N(0, dt) increments keyed on (seed, step block)."""
    if horizon <= 0 or dt <= 0:
        raise ValueError("horizon and dt must be positive")
    if t_start > 0:
        raise ValueError("t_start must be <= 0 so the path contains B(0) = 0")
    n_neg = int(round(-t_start / dt))
    n_pos = int(round(horizon / dt))
    sd = np.sqrt(dt)
    fwd = np.cumsum(sd * rng.normals(rng.child_seed(seed, "fwd"), n_pos))
    vals = np.concatenate([[0.0], fwd])
    if n_neg > 0:
        bwd = np.cumsum(sd * rng.normals(rng.child_seed(seed, "bwd"), n_neg))
        vals = np.concatenate([-bwd[::-1], vals])
    return BrownianPath(dt=dt, t_start=-n_neg * dt, values=vals)


@dataclass(frozen=True)
class LocalTimeEstimate:
    t: float
    level: float
    delta: float
    value: float


def _occupation(values, dt, level, delta, i0, i1):
    """Trapezoid integral of the bandwidth indicator over node range [i0, i1]."""
    seg = np.abs(values[i0 : i1 + 1] - level) < delta
    if len(seg) < 2:
        return 0.0
    cnt = np.count_nonzero(seg) - 0.5 * (float(seg[0]) + float(seg[-1]))
    return dt * float(cnt)


def local_time(path: BrownianPath, level, t, delta) -> LocalTimeEstimate:
    """Occupation-measure estimate of L(t, level) with bandwidth delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if t > path.horizon + 1e-12:
        raise ValueError("t exceeds path horizon")
    i0 = path.index_of(0.0)
    i1 = path.index_of(t)
    occ = _occupation(path.values, path.dt, level, delta, i0, i1)
    return LocalTimeEstimate(t=t, level=level, delta=delta, value=occ / (2 * delta))


def intersection_local_time(B1: BrownianPath, B2: BrownianPath, t, delta) -> LocalTimeEstimate:
    """Mutual intersection local time: local time of B1 - B2 at level 0."""
    if B1 is B2:
        raise ValueError("paths must be distinct objects; equal paths degenerate")
    if B1.dt != B2.dt or len(B1.values) != len(B2.values) or B1.t_start != B2.t_start:
        raise ValueError("paths must share discretization")
    diff = BrownianPath(dt=B1.dt, t_start=B1.t_start, values=B1.values - B2.values)
    return local_time(diff, 0.0, t, delta)


def soft_sign(x, n):
    """Clipped linear sign ramp with slope n^(1/4): the Tanaka mollified sign."""
    return np.clip(np.asarray(x, dtype=float) * n**0.25, -1.0, 1.0)


def tanaka_fn(path_diff: BrownianPath, n: int, t: float) -> float:
    """Riemann-Stieltjes sum of the soft sign against the path on the n-grid."""
    if n < 1:
        raise ValueError("n must be >= 1")
    total = 0.0
    for k in range(int(np.ceil(t * n))):
        y0 = path_diff.value(min(k / n, t))
        y1 = path_diff.value(min((k + 1) / n, t))
        total += float(soft_sign(y0, n)) * (y1 - y0)
    return total


def tanaka_local_time(B1: BrownianPath, B2: BrownianPath, t, n) -> float:
    """Local-time estimate from Tanaka's identity, 2L = |y(t)| - int sgn(y) dy."""
    if B1.dt != B2.dt or len(B1.values) != len(B2.values) or B1.t_start != B2.t_start:
        raise ValueError("paths must share discretization")
    diff = BrownianPath(dt=B1.dt, t_start=B1.t_start, values=B1.values - B2.values)
    return 0.5 * (abs(diff.value(t)) - tanaka_fn(diff, n, t))


def sgn_ito_integral_profile(diff_values: np.ndarray) -> np.ndarray:
    """Fine-grid Ito sums int_0^{t_i} sgn(y) dy at every node (t_0 = 0)."""
    incr = np.diff(diff_values)
    return np.concatenate([[0.0], np.cumsum(np.sign(diff_values[:-1]) * incr)])


def tanaka_sup_error_sq(diff_values: np.ndarray, dt: float, ns) -> dict[int, float]:
    """sup_{[0,1]} |U - f_n|^2 for each n, one difference path.

    U is the fine-grid sign Ito integral; f_n interpolates between its coarse
    nodes with the frozen soft-sign coefficient, so the sup runs over all fine
    nodes.
    """
    nsteps = len(diff_values) - 1
    U = sgn_ito_integral_profile(diff_values)
    out = {}
    for n in ns:
        stride = int(round(1.0 / (n * dt)))
        if stride * n != nsteps:
            raise ValueError("1/(n*dt) must be an integer number of steps")
        coarse = diff_values[::stride]
        zeta = soft_sign(coarse, n)
        # f_n at fine node i: sum over completed coarse blocks plus the
        # partial current block
        block_incr = np.diff(coarse)
        fn_at_coarse = np.concatenate([[0.0], np.cumsum(zeta[:-1] * block_incr)])
        k = np.arange(nsteps + 1) // stride
        k = np.minimum(k, n - 1)
        fn = fn_at_coarse[k] + zeta[k] * (diff_values - coarse[k])
        out[n] = float(np.max(np.abs(U - fn)) ** 2)
    return out


# -- batched Monte Carlo sample generators ------------------------------------


def local_time_samples(npaths, t, dt, delta, seed, level=0.0) -> np.ndarray:
    """Occupation local-time estimates L(t, level) over independent paths.

    Heavy path generation uses float32 increments; the bandwidth dominates
    the float32 path error by orders of magnitude.
    """
    n = int(round(t / dt))
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npaths)
    for i in range(npaths):
        g = rng.normals(rng.child_seed(seed, "lt", i), n, dtype=np.float32)
        b = np.cumsum(sd * g)
        inside = np.abs(b - level) < delta
        cnt = np.count_nonzero(inside[:-1]) + 0.5 * inside[-1] + 0.5 * (abs(level) < delta)
        out[i] = dt * float(cnt) / (2 * delta)
    return out


def intersection_local_time_samples(npairs, t, dt, delta, seed) -> np.ndarray:
    """Intersection local-time estimates over independent path pairs."""
    n = int(round(t / dt))
    sd = np.float32(np.sqrt(dt))
    out = np.empty(npairs)
    for i in range(npairs):
        g1 = rng.normals(rng.child_seed(seed, "pair", i, 0), n, dtype=np.float32)
        g2 = rng.normals(rng.child_seed(seed, "pair", i, 1), n, dtype=np.float32)
        b = np.cumsum(sd * (g1 - g2))
        inside = np.abs(b) < delta
        cnt = np.count_nonzero(inside[:-1]) + 0.5 * inside[-1] + 0.5
        out[i] = dt * float(cnt) / (2 * delta)
    return out


def tanaka_local_time_samples(npairs, n, seed, t=1.0) -> np.ndarray:
    """Tanaka local-time estimates at time t over independent pairs.

    The estimator only reads the difference path at the n-grid, so the pair
    is sampled exactly at that resolution.
    """
    nsteps = int(round(t * n))
    sd = np.sqrt(1.0 / n)
    out = np.empty(npairs)
    for i in range(npairs):
        g1 = rng.normals(rng.child_seed(seed, "tanakaL", i, 0), nsteps)
        g2 = rng.normals(rng.child_seed(seed, "tanakaL", i, 1), nsteps)
        y = np.concatenate([[0.0], np.cumsum(sd * (g1 - g2))])
        fn = float(np.sum(soft_sign(y[:-1], n) * np.diff(y)))
        out[i] = 0.5 * (abs(y[-1]) - fn)
    return out


def tanaka_error_ladder(npaths, ns, dt, seed) -> dict[int, np.ndarray]:
    """Per-path sup_{[0,1]}|U - f_n|^2 samples for each rung of the n-ladder."""
    nsteps = int(round(1.0 / dt))
    sd = np.float32(np.sqrt(dt))
    out = {n: np.empty(npaths) for n in ns}
    for i in range(npaths):
        g1 = rng.normals(rng.child_seed(seed, "tanaka", i, 0), nsteps, dtype=np.float32)
        g2 = rng.normals(rng.child_seed(seed, "tanaka", i, 1), nsteps, dtype=np.float32)
        diff = np.concatenate([[0.0], np.cumsum((sd * (g1 - g2)).astype(np.float64))])
        errs = tanaka_sup_error_sq(diff, dt, ns)
        for n in ns:
            out[n][i] = errs[n]
    return out
