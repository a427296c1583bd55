"""Compiled inner loops for the path-functional integrals.

Every kernel works on plain arrays: covariance factors arrive as uniform
tables (origin, inverse step, values) and paths as node arrays.  Time lags
always fall on exact grid multiples, so only the space factor is
interpolated.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _lerp(x0, inv_step, values, x):
    pos = (x - x0) * inv_step
    if pos <= 0.0 or pos >= len(values) - 1:
        return 0.0
    i = int(pos)
    f = pos - i
    return values[i] * (1.0 - f) + values[i + 1] * f


@njit(cache=True, fastmath=True)
def running_R_integral(b, h, Av, cx0, cinv, Cv):
    """integral_0^1 R(u, B(u)) du by trapezoid on the path grid.

    b[k] = B(k*h); Av[k] = time factor at lag k*h (length 1/h + 1, zero at
    the right endpoint); space factor by linear interpolation.
    """
    total = 0.5 * Av[0] * _lerp(cx0, cinv, Cv, 0.0)
    for k in range(1, len(Av) - 1):
        total += Av[k] * _lerp(cx0, cinv, Cv, b[k])
    total += 0.5 * Av[-1] * _lerp(cx0, cinv, Cv, b[len(Av) - 1])
    return h * total


@njit(cache=True, fastmath=True)
def lag_R_integral(b, j, h, Av, cx0, cinv, Cv):
    """integral_0^umax R(u, B(s)-B(s-u)) du at node s = j*h, trapezoid.

    umax = min(s, 1); lags beyond the path start are not available, hence
    the cap at j.
    """
    K = min(j, len(Av) - 1)
    if K == 0:
        return 0.0
    total = 0.5 * Av[0] * _lerp(cx0, cinv, Cv, 0.0)
    for k in range(1, K):
        total += Av[k] * _lerp(cx0, cinv, Cv, b[j] - b[j - k])
    total += 0.5 * Av[K] * _lerp(cx0, cinv, Cv, b[j] - b[j - K])
    return h * total


@njit(cache=True, fastmath=True)
def x_eps_sum(b, h, s_stride, Av, cx0, cinv, Cv, Mdisc):
    """Centered double integral for the microscopic functional.

    Returns trapezoid over s (stride s_stride on the path grid) of
    (lag integral at s) - Mdisc[min(j, K)], where Mdisc[k] is the discrete
    mean of the lag integral truncated at lag k.
    """
    n = len(b) - 1
    hs = h * s_stride
    total = 0.0
    for j in range(0, n + 1, s_stride):
        K = min(j, len(Av) - 1)
        inner = lag_R_integral(b, j, h, Av, cx0, cinv, Cv) - Mdisc[K]
        w = 0.5 if (j == 0 or j + s_stride > n) else 1.0
        total += w * inner
    return hs * total


@njit(cache=True, fastmath=True)
def calx_profile(b, i0, h, Av, cx0, cinv, Cv, c_center, s_stride, nout):
    """calX at s-nodes i0 + m*s_stride for m = 0..nout-1 (lag integral - c)."""
    out = np.empty(nout)
    for m in range(nout):
        j = i0 + m * s_stride
        out[m] = lag_R_integral(b, j, h, Av, cx0, cinv, Cv) - c_center
    return out


@njit(cache=True, fastmath=True)
def band_double_integral(b1, b2, h, K, Ttv, tx0, tinv, Txv):
    """Double trapezoid of T_t(s-u) * T_x(B1(s)-B2(u)) over [0,t]^2.

    Ttv[k + K] = time factor at lag k*h for k in [-K, K]; the integrand
    vanishes for |s-u| > K*h.
    """
    n = len(b1) - 1
    total = 0.0
    for i in range(n + 1):
        wi = 0.5 if (i == 0 or i == n) else 1.0
        lo = i - K if i - K > 0 else 0
        hi = i + K if i + K < n else n
        row = 0.0
        for j in range(lo, hi + 1):
            wj = 0.5 if (j == 0 or j == n) else 1.0
            row += wj * Ttv[j - i + K] * _lerp(tx0, tinv, Txv, b1[i] - b2[j])
        total += wi * row
    return h * h * total


@njit(cache=True, fastmath=True)
def marginal_single_integral(b1, b2, h, px0, pinv, Pv):
    """Trapezoid of P(B1(s) - B2(s)) over [0, t] on the common grid."""
    n = len(b1) - 1
    total = 0.5 * _lerp(px0, pinv, Pv, b1[0] - b2[0])
    for i in range(1, n):
        total += _lerp(px0, pinv, Pv, b1[i] - b2[i])
    total += 0.5 * _lerp(px0, pinv, Pv, b1[n] - b2[n])
    return h * total


@njit(cache=True, fastmath=True)
def clark_ocone_integral(b, h, Gtab, gx0, ginv):
    """Trapezoid over u of G(u, B(1) - B(u)); Gtab row k is the x-profile
    at u = k*h, interpolated linearly in x."""
    n = len(b) - 1
    bn = b[n]
    total = 0.0
    for k in range(n + 1):
        w = 0.5 if (k == 0 or k == n) else 1.0
        total += w * _lerp(gx0, ginv, Gtab[k], bn - b[k])
    return h * total
