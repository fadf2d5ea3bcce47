"""Small numerical helpers: exact unit-circle phases, projective distances."""
import cmath
import math

import numpy as np

#: Marker for the point at infinity of the extended complex plane.
INF = complex(math.inf, 0.0)

_QUARTER = np.array([1.0, 1.0j, -1.0, -1.0j])


def is_inf(z):
    return isinstance(z, complex) and cmath.isinf(z) or (
        isinstance(z, float) and math.isinf(z))


def expi2pi(t):
    """exp(2*pi*i*t) with exact values at multiples of 1/4.

    The argument is reduced mod 1 and split into a quarter turn times a
    remainder in [-1/8, 1/8], so ``expi2pi(0.5) == -1`` exactly.
    """
    t = np.asarray(t, dtype=float)
    r = t - np.floor(t)
    q = np.rint(4.0 * r)
    f = r - q / 4.0
    out = _QUARTER[q.astype(np.int64) % 4] * np.exp(2j * np.pi * f)
    return out


def split_float(a):
    """Split ``a`` into (hi, lo) with hi carrying 26 significant bits.

    ``n * hi`` is then exact for |n| < 2**26, which keeps ``n * alpha mod 1``
    accurate far beyond what the naive product gives.
    """
    a = float(a)
    if a == 0.0:
        return 0.0, 0.0
    m, e = math.frexp(a)
    hi = math.ldexp(math.floor(math.ldexp(m, 26)), e - 26)
    return hi, a - hi


def frac(x):
    x = np.asarray(x, dtype=float)
    r = x - np.floor(x)
    # x - floor(x) can round up to exactly 1.0 for tiny negative x
    return np.where(r >= 1.0, 0.0, r)


def homogeneous(z):
    """Unit-norm homogeneous pair (v1, v2) with z = v2/v1 (chart phi_2)."""
    if is_inf(z):
        return np.array([0.0 + 0j, 1.0 + 0j])
    v = np.array([1.0 + 0j, complex(z)])
    return v / np.linalg.norm(v)


def chart_value(v1, v2, tiny=0.0):
    """Chart phi_2 value of a homogeneous pair; INF when v1 vanishes."""
    if abs(v1) <= tiny * max(abs(v2), 1e-300) or v1 == 0:
        return INF
    return complex(v2 / v1)


def proj_dist(u1, u2, w1, w2):
    """Chordal distance between the lines [u1:u2] and [w1:w2].

    Vectorised; equals |z - w| / sqrt((1+|z|^2)(1+|w|^2)) in chart phi_2 and
    is finite at infinity.
    """
    num = np.abs(u1 * w2 - u2 * w1)
    den = np.sqrt((np.abs(u1) ** 2 + np.abs(u2) ** 2) *
                  (np.abs(w1) ** 2 + np.abs(w2) ** 2))
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, num / den, np.nan)


def chordal(z, w):
    """Chordal distance between two extended complex numbers."""
    u = homogeneous(z)
    v = homogeneous(w)
    return float(proj_dist(u[0], u[1], v[0], v[1]))


def opnorm2(a, b, c, d):
    """Largest singular value of [[a, b], [c, d]], vectorised."""
    s = np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2
    det = np.abs(a * d - b * c)
    disc = np.sqrt(np.maximum(s * s - 4.0 * det * det, 0.0))
    return np.sqrt(0.5 * (s + disc))


def singular_values2(a, b, c, d):
    """(sigma_1, sigma_2) for a 2x2 matrix, vectorised."""
    s1 = opnorm2(a, b, c, d)
    det = np.abs(a * d - b * c)
    with np.errstate(invalid="ignore", divide="ignore"):
        s2 = np.where(s1 > 0, det / np.where(s1 > 0, s1, 1.0), 0.0)
    return s1, s2
