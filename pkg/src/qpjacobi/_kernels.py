"""Compiled inner loops: Weyl sweeps and renormalised cocycle products.

Every kernel loops over independent torus points; nothing is reduced across
points, so results do not depend on scheduling. Sampling functions enter as
(frequency matrix, coefficient vector) pairs and are advanced along orbits by
phase-factor recurrence, resynchronised exactly every ``RESYNC`` steps.
"""
import math

import numpy as np
from numba import njit

RESYNC = 64
TWO_PI = 2.0 * math.pi

KIND_A, KIND_A_TILDE, KIND_B, KIND_B_TILDE = 0, 1, 2, 3


@njit(cache=True)
def _cis(t):
    # exp(2 pi i t) for t in [0, 1), exact at quarter turns
    q = int(math.floor(4.0 * t + 0.5))
    f = TWO_PI * (t - 0.25 * q)
    z = complex(math.cos(f), math.sin(f))
    q = q % 4
    if q == 1:
        return complex(-z.imag, z.real)
    if q == 2:
        return -z
    if q == 3:
        return complex(z.imag, -z.real)
    return z


@njit(cache=True)
def _phase_at(K, x, n, hi, lo, out):
    """out[k] = exp(2 pi i k.(x + n alpha)), written in place."""
    for k in range(K.shape[0]):
        t = 0.0
        for i in range(x.shape[0]):
            a = n * hi[i]
            a = a - math.floor(a)
            y = x[i] + a + n * lo[i]
            t += K[k, i] * (y - math.floor(y))
        out[k] = _cis(t - math.floor(t))


@njit(cache=True)
def _steps(K, hi, lo, sign):
    nt = K.shape[0]
    w = np.empty(nt, dtype=np.complex128)
    for k in range(nt):
        t = 0.0
        for i in range(hi.shape[0]):
            t += K[k, i] * (hi[i] + lo[i])
        t = t - math.floor(t)
        w[k] = complex(math.cos(TWO_PI * t), sign * math.sin(TWO_PI * t))
    return w


@njit(cache=True)
def _val(a, z):
    s = 0j
    for k in range(a.shape[0]):
        s += a[k] * z[k]
    return s


# homogeneous pairs are rescaled only when they drift this far from unit size
BIG = 2.0 ** 200
SMALL = 2.0 ** -200


@njit(cache=True)
def _mag(p, q):
    return max(abs(p.real), abs(p.imag), abs(q.real), abs(q.imag))


@njit(cache=True)
def _store(pout, qout, row, i, p, q):
    sc = _mag(p, q)
    if sc > 0.0:
        p = p * (1.0 / sc)
        q = q * (1.0 / sc)
    pout[i, row] = p
    qout[i, row] = q


@njit(cache=True)
def minus_sweep(points, E, M, N, Kc, ac, Kv, av, hi, lo):
    """Homogeneous m_-(T^j x) for j = 0..N, from an M-site truncation at j = 0.

    Returns (p, q) of shape (N + 1, P) with m = p / q.
    """
    P = points.shape[0]
    pout = np.empty((P, N + 1), dtype=np.complex128)
    qout = np.empty((P, N + 1), dtype=np.complex128)
    wc = _steps(Kc, hi, lo, 1.0)
    wv = _steps(Kv, hi, lo, 1.0)
    zc = np.empty(Kc.shape[0], dtype=np.complex128)
    zv = np.empty(Kv.shape[0], dtype=np.complex128)
    total = M + N
    for i in range(P):
        x = points[i]
        n0 = -M
        _phase_at(Kc, x, n0 - 1, hi, lo, zc)
        cprev = _val(ac, zc)
        _phase_at(Kc, x, n0, hi, lo, zc)
        _phase_at(Kv, x, n0, hi, lo, zv)
        p = 0j
        q = 1.0 + 0j
        for s in range(total + 1):
            if s >= M:
                _store(pout, qout, s - M, i, p, q)
            if s == total:
                break
            w = cprev.real * cprev.real + cprev.imag * cprev.imag
            vv = _val(av, zv).real
            p, q = q, (vv - E) * q - w * p
            sc = _mag(p, q)
            if sc > BIG or 0.0 < sc < SMALL:
                p = p * (1.0 / sc)
                q = q * (1.0 / sc)
            cprev = _val(ac, zc)
            if (n0 + s + 1) % RESYNC == 0:
                _phase_at(Kc, x, n0 + s + 1, hi, lo, zc)
                _phase_at(Kv, x, n0 + s + 1, hi, lo, zv)
            else:
                for k in range(zc.shape[0]):
                    zc[k] *= wc[k]
                for k in range(zv.shape[0]):
                    zv[k] *= wv[k]
    return pout.T, qout.T


@njit(cache=True)
def plus_sweep(points, E, M, N, Kc, ac, Kv, av, hi, lo):
    """Homogeneous m_+(T^j x) for j = -1..N-1 (row j + 1), M sites at j = N - 1."""
    P = points.shape[0]
    pout = np.empty((P, N + 1), dtype=np.complex128)
    qout = np.empty((P, N + 1), dtype=np.complex128)
    wc = _steps(Kc, hi, lo, -1.0)
    wv = _steps(Kv, hi, lo, -1.0)
    zc = np.empty(Kc.shape[0], dtype=np.complex128)
    zv = np.empty(Kv.shape[0], dtype=np.complex128)
    start = N - 1 + M
    for i in range(P):
        x = points[i]
        _phase_at(Kc, x, start, hi, lo, zc)
        _phase_at(Kv, x, start, hi, lo, zv)
        p = 0j
        q = 1.0 + 0j
        site = start
        while True:
            if site <= N - 1:
                _store(pout, qout, site + 1, i, p, q)
            if site == -1:
                break
            cc = _val(ac, zc)
            w = cc.real * cc.real + cc.imag * cc.imag
            vv = _val(av, zv).real
            p, q = q, (vv - E) * q - w * p
            sc = _mag(p, q)
            if sc > BIG or 0.0 < sc < SMALL:
                p = p * (1.0 / sc)
                q = q * (1.0 / sc)
            site -= 1
            if site % RESYNC == 0:
                _phase_at(Kc, x, site, hi, lo, zc)
                _phase_at(Kv, x, site, hi, lo, zv)
            else:
                for k in range(zc.shape[0]):
                    zc[k] *= wc[k]
                for k in range(zv.shape[0]):
                    zv[k] *= wv[k]
    return pout.T, qout.T


@njit(cache=True)
def products(points, E, n, kind, record, Kc, ac, Kv, av, hi, lo):
    """Renormalised n-step products of a cocycle along each orbit.

    Returns
    -------
    mats : (P, 2, 2) normalised product (operator norm 1, or zero)
    s : (P,) accumulated log-norm (-inf if the product vanishes)
    s_half : (P,) accumulated log-norm after n // 2 steps
    logdet : (P,) sum of log|det| of the factors
    logc : (P,) sum of log|c(T^j x)| for j = 0..n-1
    s_rec, logdet_rec : (record, P) cumulative values after 1..record steps
    bad : (P,) index of the first singular step for B kinds, else -1
    """
    P = points.shape[0]
    mats = np.zeros((P, 2, 2), dtype=np.complex128)
    s_out = np.zeros(P)
    s_half = np.zeros(P)
    ld_out = np.zeros(P)
    lc_out = np.zeros(P)
    s_rec = np.zeros((P, record))
    ld_rec = np.zeros((P, record))
    bad = -np.ones(P, dtype=np.int64)
    wc = _steps(Kc, hi, lo, 1.0)
    wv = _steps(Kv, hi, lo, 1.0)
    zc = np.empty(Kc.shape[0], dtype=np.complex128)
    zv = np.empty(Kv.shape[0], dtype=np.complex128)
    half = n // 2
    for i in range(P):
        x = points[i]
        _phase_at(Kc, x, -1, hi, lo, zc)
        cp = _val(ac, zc)
        _phase_at(Kc, x, 0, hi, lo, zc)
        _phase_at(Kv, x, 0, hi, lo, zv)
        a11 = 1.0 + 0j
        a12 = 0j
        a21 = 0j
        a22 = 1.0 + 0j
        s = 0.0
        ld = 0.0
        lc = 0.0
        dead = False
        for j in range(n):
            cx = _val(ac, zc)
            ev = E - _val(av, zv).real
            if kind == KIND_A or kind == KIND_B:
                m11 = ev
                m12 = -cp.conjugate()
                m21 = cx
                m22 = 0j
                if kind == KIND_B:
                    if cx == 0:
                        if bad[i] < 0:
                            bad[i] = j
                        dead = True
                    else:
                        m11 /= cx
                        m12 /= cx
                        m21 /= cx
            else:
                w = cp.real * cp.real + cp.imag * cp.imag
                m11 = ev
                m12 = -w + 0j
                m21 = 1.0 + 0j
                m22 = 0j
                if kind == KIND_B_TILDE:
                    if cp == 0:
                        if bad[i] < 0:
                            bad[i] = j
                        dead = True
                    else:
                        m11 /= cp
                        m12 /= cp
                        m21 /= cp
            det = abs(m11 * m22 - m12 * m21)
            ld += math.log(det) if det > 0 else -math.inf
            acx = abs(cx)
            lc += math.log(acx) if acx > 0 else -math.inf
            b11 = m11 * a11 + m12 * a21
            b12 = m11 * a12 + m12 * a22
            b21 = m21 * a11 + m22 * a21
            b22 = m21 * a12 + m22 * a22
            t = (abs(b11) ** 2 + abs(b12) ** 2 + abs(b21) ** 2 + abs(b22) ** 2)
            dd = abs(b11 * b22 - b12 * b21)
            disc = t * t - 4.0 * dd * dd
            if disc < 0.0:
                disc = 0.0
            nrm = math.sqrt(0.5 * (t + math.sqrt(disc)))
            if nrm > 0.0 and not dead:
                a11 = b11 / nrm
                a12 = b12 / nrm
                a21 = b21 / nrm
                a22 = b22 / nrm
                s += math.log(nrm)
            else:
                a11 = 0j
                a12 = 0j
                a21 = 0j
                a22 = 0j
                s = -math.inf
            if j + 1 == half:
                s_half[i] = s
            if j < record:
                s_rec[i, j] = s
                ld_rec[i, j] = ld
            cp = cx
            if (j + 1) % RESYNC == 0:
                _phase_at(Kc, x, j + 1, hi, lo, zc)
                _phase_at(Kv, x, j + 1, hi, lo, zv)
            else:
                for k in range(zc.shape[0]):
                    zc[k] *= wc[k]
                for k in range(zv.shape[0]):
                    zv[k] *= wv[k]
        mats[i, 0, 0] = a11
        mats[i, 0, 1] = a12
        mats[i, 1, 0] = a21
        mats[i, 1, 1] = a22
        s_out[i] = s
        ld_out[i] = ld
        lc_out[i] = lc
    return mats, s_out, s_half, ld_out, lc_out, s_rec.T, ld_rec.T, bad


def model_arrays(model):
    """Argument tuple (Kc, ac, Kv, av, hi, lo) for the kernels."""
    hi = np.array([s[0] for s in model._split])
    lo = np.array([s[1] for s in model._split])
    Kv = model.v.freqs
    av = model.v.coefs
    if len(av) == 0:
        Kv = np.zeros((1, model.dim), dtype=np.int64)
        av = np.zeros(1, dtype=np.complex128)
    return (np.ascontiguousarray(model.c.freqs), np.ascontiguousarray(model.c.coefs),
            np.ascontiguousarray(Kv), np.ascontiguousarray(av), hi, lo)
