"""Special-function kernel: coupling coefficients, spherical harmonics and
modified spherical Bessel functions.

Everything here uses the Condon-Shortley phase convention.  Functions are
pure and hold no shared state.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import gammaln

from .errors import InvalidArgumentError

__all__ = [
    "AngularIndex",
    "clebsch_gordan",
    "cg_zero_projection",
    "cg_stretched",
    "legendre_table",
    "spherical_harmonic",
    "mod_sph_bessel_i",
    "log_mod_sph_bessel_i",
]


@dataclass(frozen=True, order=True)
class AngularIndex:
    I: int
    M: int

    def __post_init__(self):
        if int(self.I) != self.I or int(self.M) != self.M:
            raise InvalidArgumentError("angular indices must be integers")
        if self.I < 0:
            raise InvalidArgumentError(f"I must be non-negative, got {self.I}")
        if abs(self.M) > self.I:
            raise InvalidArgumentError(f"|M|={abs(self.M)} exceeds I={self.I}")


def _lf(n):
    return math.lgamma(n + 1)


def clebsch_gordan(l, lp, m, mp, I, M):
    """<l lp m mp | I M> via the Racah sum evaluated with log-factorials.

    The alternating sum is accumulated with math.fsum so the only rounding
    comes from the individual terms.
    """
    for name, v in (("l", l), ("lp", lp), ("I", I)):
        if v < 0:
            raise InvalidArgumentError(f"{name} must be non-negative, got {v}")
    if abs(m) > l or abs(mp) > lp or abs(M) > I:
        raise InvalidArgumentError("magnetic quantum number exceeds its angular momentum")
    if M != m + mp or I < abs(l - lp) or I > l + lp:
        return 0.0

    log_pre = 0.5 * (
        math.log(2 * I + 1)
        + _lf(I + l - lp) + _lf(I - l + lp) + _lf(l + lp - I) - _lf(l + lp + I + 1)
        + _lf(I + M) + _lf(I - M)
        + _lf(l - m) + _lf(l + m) + _lf(lp - mp) + _lf(lp + mp)
    )
    k_lo = max(0, lp - I - m, l - I + mp)
    k_hi = min(l + lp - I, l - m, lp + mp)
    terms = []
    for k in range(k_lo, k_hi + 1):
        log_den = (
            _lf(k) + _lf(l + lp - I - k) + _lf(l - m - k) + _lf(lp + mp - k)
            + _lf(I - lp + m + k) + _lf(I - l - mp + k)
        )
        sign = -1.0 if k % 2 else 1.0
        terms.append(sign * math.exp(log_pre - log_den))
    return math.fsum(terms)


def cg_zero_projection(l, lp, I):
    """Closed form of <l lp 0 0 | I 0>, vectorised over integer arrays.

    No alternating sum is involved, so this stays accurate for large l.
    """
    l, lp, I = np.broadcast_arrays(np.asarray(l), np.asarray(lp), np.asarray(I))
    two_g = l + lp + I
    ok = (two_g % 2 == 0) & (I >= np.abs(l - lp)) & (I <= l + lp)
    g = np.where(ok, two_g // 2, 0)
    gl, glp, gI = (np.where(ok, g - v, 0) for v in (l, lp, I))
    log_mag = (
        0.5 * np.log(2 * I + 1)
        + 0.5 * (gammaln(2 * gl + 1) + gammaln(2 * glp + 1) + gammaln(2 * gI + 1)
                 - gammaln(2 * g + 2))
        + gammaln(g + 1) - gammaln(gl + 1) - gammaln(glp + 1) - gammaln(gI + 1)
    )
    sign = np.where((g - I) % 2 == 0, 1.0, -1.0)
    return np.where(ok, sign * np.exp(log_mag), 0.0)


def cg_stretched(l, lp, I):
    """Closed form of <l lp l -lp | I l-lp>, vectorised.

    With m = l and mp = -lp the Racah sum has a single term.
    """
    l, lp, I = np.broadcast_arrays(np.asarray(l), np.asarray(lp), np.asarray(I))
    ok = (I >= np.abs(l - lp)) & (I <= l + lp)
    log_val = 0.5 * (
        np.log(2 * I + 1) + gammaln(2 * l + 1) + gammaln(2 * lp + 1)
        - gammaln(l + lp + I + 2) - gammaln(np.where(ok, l + lp - I, 0) + 1)
    )
    return np.where(ok, np.exp(log_val), 0.0)


def legendre_table(i_max, x, sin_theta=None):
    """Orthonormal associated Legendre functions for all 0 <= M <= I <= i_max.

    Returns an array of shape (len(x), i_max + 1, i_max + 1) indexed
    [point, I, M] such that Y^I_M(theta, phi) = table[., I, M] * exp(i M phi)
    for M >= 0.  The Condon-Shortley phase is included.  Values are built by
    the normalised recurrence in I at fixed M, so nothing overflows.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if sin_theta is None:
        s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    else:
        s = np.atleast_1d(np.asarray(sin_theta, dtype=float))
    n = i_max + 1
    P = np.zeros((x.size, n, n))
    P[:, 0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for M in range(1, n):
        P[:, M, M] = -math.sqrt((2 * M + 1) / (2 * M)) * s * P[:, M - 1, M - 1]
    for M in range(0, n - 1):
        P[:, M + 1, M] = math.sqrt(2 * M + 3) * x * P[:, M, M]
    for I in range(2, n):
        M = np.arange(0, I - 1)
        a = np.sqrt((4.0 * I * I - 1.0) / (I * I - M * M))
        a_prev = np.sqrt((4.0 * (I - 1) ** 2 - 1.0) / ((I - 1) ** 2 - M * M))
        P[:, I, : I - 1] = a * (x[:, None] * P[:, I - 1, : I - 1] - P[:, I - 2, : I - 1] / a_prev)
    return P


def spherical_harmonic(idx, theta, phi):
    """Orthonormal Y^I_M(theta, phi) with the Condon-Shortley phase."""
    if not isinstance(idx, AngularIndex):
        idx = AngularIndex(*idx)
    if not (0.0 <= theta <= math.pi):
        raise InvalidArgumentError(f"theta={theta} outside [0, pi]")
    m = abs(idx.M)
    val = legendre_table(idx.I, math.cos(theta), math.sin(theta))[0, idx.I, m]
    y = val * complex(math.cos(m * phi), math.sin(m * phi))
    if idx.M < 0:
        y = (-1) ** m * y.conjugate()
    return y


def _log_i0(x):
    if x < 1e-8:
        return x * x / 6.0
    if x < 20.0:
        return math.log(math.sinh(x) / x)
    return x - math.log(2.0 * x) + math.log1p(-math.exp(-2.0 * x))


def log_mod_sph_bessel_i(i_max, x):
    """log i_I(x) for I = 0..i_max and x > 0.

    Miller's backward recurrence in ratio form: r_I = i_I / i_{I-1} obeys
    r_I = 1 / ((2I+1)/x + r_{I+1}), started far above max(i_max, x) with
    r = 0 and anchored on the closed form i_0 = sinh(x)/x.
    """
    if x <= 0:
        raise InvalidArgumentError("log_mod_sph_bessel_i needs x > 0")
    start = i_max + int(x) + 60 + int(4 * math.sqrt(i_max + x))
    r = 0.0
    ratios = np.empty(i_max + 1)
    for I in range(start, 0, -1):
        r = 1.0 / ((2 * I + 1) / x + r)
        if I <= i_max:
            ratios[I] = r
    ratios[0] = 1.0
    out = np.cumsum(np.log(ratios))
    return out + _log_i0(x)


def mod_sph_bessel_i(I, x):
    """Modified spherical Bessel function of the first kind,
    i_I(x) = sqrt(pi / (2x)) I_{I+1/2}(x)."""
    if I < 0 or int(I) != I:
        raise InvalidArgumentError(f"order must be a non-negative integer, got {I}")
    if x < 0:
        raise InvalidArgumentError(f"x must be non-negative, got {x}")
    if x == 0:
        return 1.0 if I == 0 else 0.0
    return float(math.exp(log_mod_sph_bessel_i(int(I), float(x))[int(I)]))
