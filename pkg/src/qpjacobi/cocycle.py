"""Jacobi cocycles: transfer matrices, renormalised products, Lyapunov exponents.

Four cocycles over the translation T are supported::

    A(x)  = [[E - v(x), -conj(c(T^-1 x))], [c(x), 0]]
    At(x) = [[E - v(x), -|c(T^-1 x)|^2],   [1,    0]]
    B(x)  = A(x) / c(x)
    Bt(x) = At(x) / c(T^-1 x)

A and At are continuous but singular wherever c vanishes; B and Bt are the
classical transfer matrices and only exist off the zeros of c. The operator
norm is used for every matrix norm.
"""
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._numerics import opnorm2
from .exceptions import SingularPhaseError, UsageError
from .model import _as_points, eval_poly, mean_log_abs, translate, zeros_on_circle

#: Orbits of B-type cocycles may not pass closer than this to a zero of c.
SINGULAR_RADIUS = 1e-9


class CocycleKind(str, enum.Enum):
    A = "A"
    A_TILDE = "A_tilde"
    B = "B"
    B_TILDE = "B_tilde"

    @property
    def code(self):
        return _CODES[self]

    @property
    def needs_c_nonzero(self):
        return self in (CocycleKind.B, CocycleKind.B_TILDE)


_CODES = {CocycleKind.A: _kernels.KIND_A, CocycleKind.A_TILDE: _kernels.KIND_A_TILDE,
          CocycleKind.B: _kernels.KIND_B, CocycleKind.B_TILDE: _kernels.KIND_B_TILDE}


def as_mat2(a):
    """Validate a 2x2 complex matrix with finite entries."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (2, 2):
        raise UsageError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise UsageError("matrix entries must be finite")
    return a


def site_values(model, x):
    """(c(x), c(T^-1 x), v(x)) at point(s) x."""
    cx = eval_poly(model.c, x)
    cp = eval_poly(model.c, translate(model, x, -1))
    vx = eval_poly(model.v, x)
    return cx, cp, np.real(vx)


def cocycle_entries(model, kind, E, x):
    """Entries (a, b, c, d) of the cocycle matrix, vectorised over points."""
    kind = CocycleKind(kind)
    cx, cp, vx = site_values(model, x)
    ev = E - vx
    if kind in (CocycleKind.A, CocycleKind.B):
        a, b, c, d = ev + 0j, -np.conj(cp), cx + 0j, 0j * ev
        den = cx
    else:
        a, b, c, d = ev + 0j, -np.abs(cp) ** 2 + 0j, 1.0 + 0j * ev, 0j * ev
        den = cp
    if kind.needs_c_nonzero:
        if np.any(np.asarray(den) == 0):
            where = "c(x)" if kind is CocycleKind.B else "c(T^-1 x)"
            raise SingularPhaseError(f"{kind.value} undefined: {where} = 0", site=where,
                                     phase=x)
        a, b, c, d = a / den, b / den, c / den, d / den
    return a, b, c, d


def cocycle_matrix(model, kind, E, x):
    """The 2x2 cocycle matrix of ``kind`` at energy E and phase x."""
    a, b, c, d = cocycle_entries(model, kind, complex(E), x)
    return np.array([[a, b], [c, d]], dtype=complex)


def det_identity_check(model, E, x):
    """Residuals of the determinant identities at one phase.

    det A = c(x) conj(c(T^-1 x)), det At = |c(T^-1 x)|^2, and |det Bt| = 1
    wherever Bt is defined (``None`` otherwise).
    """
    cx, cp, _ = site_values(model, x)
    A = cocycle_matrix(model, "A", E, x)
    At = cocycle_matrix(model, "A_tilde", E, x)
    report = {
        "det_A": abs(np.linalg.det(A) - cx * np.conj(cp)),
        "det_A_tilde": abs(np.linalg.det(At) - abs(cp) ** 2),
        "det_B_tilde": None,
        "singular": bool(cx == 0 or cp == 0),
    }
    if cp != 0:
        Bt = cocycle_matrix(model, "B_tilde", E, x)
        report["det_B_tilde"] = abs(abs(np.linalg.det(Bt)) - 1.0)
    return report


def _check_orbit_clear(model, kind, x, n):
    """Raise if a B-type orbit segment passes within SINGULAR_RADIUS of a zero of c."""
    kind = CocycleKind(kind)
    if not kind.needs_c_nonzero:
        return
    offset = 0 if kind is CocycleKind.B else -1
    x0 = _as_points(x, model.dim).reshape(model.dim)
    pts = translate(model, np.broadcast_to(x0, (n, model.dim)), np.arange(n) + offset)
    if model.dim == 1:
        zeros = zeros_on_circle(model.c)
        if not zeros:
            return
        y = pts.reshape(-1)
        for z in zeros:
            dist = np.abs(y - z)
            dist = np.minimum(dist, 1.0 - dist)
            j = int(np.argmin(dist))
            if dist[j] < SINGULAR_RADIUS:
                raise SingularPhaseError(
                    f"orbit step {j % n} is within {SINGULAR_RADIUS:g} of the zero x = {z:.12g} of c",
                    site=j % n, phase=float(y[j]))
    else:
        vals = np.abs(eval_poly(model.c, pts.reshape(-1, model.dim)))
        j = int(np.argmin(vals))
        if vals[j] < SINGULAR_RADIUS * max(model.c.coef_sum(), 1.0):
            raise SingularPhaseError(f"orbit step {j % n} is numerically on the zero set of c",
                                     site=j % n)


def iterate(model, kind, E, x, n):
    """n-step product D_n(x) = D(T^{n-1} x) ... D(x) as (P, s) with D_n = e^s P.

    ``P`` has operator norm 1. If the product vanishes exactly, ``P`` is the
    zero matrix and ``s = -inf``.
    """
    if n < 1:
        raise UsageError("n must be at least 1")
    kind = CocycleKind(kind)
    _check_orbit_clear(model, kind, x, n)
    pts = np.ascontiguousarray(_as_points(x, model.dim).reshape(1, model.dim))
    mats, s, *_rest, bad = _kernels.products(pts, complex(E), int(n), kind.code, 0,
                                             *_kernels.model_arrays(model))
    if bad[0] >= 0:
        raise SingularPhaseError(f"{kind.value} undefined at orbit step {bad[0]}", site=int(bad[0]))
    return mats[0], float(s[0])


@dataclass(frozen=True)
class LEEstimate:
    """Lyapunov exponent estimate in nats per step."""

    value: float
    n_steps: int
    half_value: float
    phase_count: int
    converged: bool = True

    @property
    def drift(self):
        return abs(self.value - self.half_value)


def lyapunov(model, kind, E, scheme="orbit", n=100_000, phases=8, seed=0, tol=1e-3):
    """Top Lyapunov exponent of the cocycle ``kind`` at energy E.

    ``scheme="orbit"`` averages ``(1/n) log||D_n(x)||`` over ``phases`` random
    starting points (one long orbit each); ``scheme="phase_avg"`` uses
    ``phases`` equispaced starting points per dimension. The value at n/2 is
    kept; a drift above ``tol`` marks the estimate as not converged.
    """
    kind = CocycleKind(kind)
    if n < 2:
        raise UsageError("n must be at least 2")
    if scheme == "orbit":
        rng = np.random.default_rng(seed)
        pts = []
        while len(pts) < phases:
            x = rng.random(model.dim)
            if kind.needs_c_nonzero:
                try:
                    _check_orbit_clear(model, kind, x if model.dim > 1 else x[0], n)
                except SingularPhaseError:
                    continue
            pts.append(x)
        pts = np.array(pts)
    elif scheme == "phase_avg":
        from .model import uniform_grid
        pts = np.array(uniform_grid(model.dim, phases).points)
        if kind.needs_c_nonzero:
            keep = []
            for x in pts:
                try:
                    _check_orbit_clear(model, kind, x if model.dim > 1 else x[0], n)
                    keep.append(x)
                except SingularPhaseError:
                    pass
            pts = np.array(keep)
    else:
        raise UsageError(f"unknown scheme {scheme!r}")
    pts = np.ascontiguousarray(pts, dtype=float)
    _m, s, s_half, *_rest, bad = _kernels.products(pts, complex(E), int(n), kind.code, 0,
                                                   *_kernels.model_arrays(model))
    ok = bad < 0
    value = float(np.mean(s[ok]) / n)
    half = float(np.mean(s_half[ok]) / (n // 2))
    return LEEstimate(value, int(n), half, int(np.count_nonzero(ok)),
                      bool(math.isfinite(value) and abs(value - half) <= tol))


def conjugacy_residual(model, E, x):
    """||M(Tx)^-1 At(x) M(x) - A(x)|| with M(x) = diag(1, 1/c(T^-1 x))."""
    cx, cp, _ = site_values(model, x)
    if cp == 0 or cx == 0:
        raise SingularPhaseError("conjugacy undefined where c(x) or c(T^-1 x) vanishes",
                                 site="c(x)" if cx == 0 else "c(T^-1 x)", phase=x)
    At = cocycle_matrix(model, "A_tilde", E, x)
    A = cocycle_matrix(model, "A", E, x)
    Mx = np.diag([1.0, 1.0 / cp])
    MTx_inv = np.diag([1.0, cx])
    diff = MTx_inv @ At @ Mx - A
    return float(opnorm2(*diff.ravel()))


def le_relation_report(model, E, **lyap_kwargs):
    """L(A), L(At), L(B) and the residuals of L(A) = L(At), L(B) = L(A) - int log|c|."""
    LA = lyapunov(model, "A", E, **lyap_kwargs)
    LAt = lyapunov(model, "A_tilde", E, **lyap_kwargs)
    LB = lyapunov(model, "B", E, **lyap_kwargs)
    method = "roots" if model.dim == 1 else "quadrature"
    mlc = mean_log_abs(model.c, method)
    return {
        "energy": complex(E),
        "L_A": LA,
        "L_A_tilde": LAt,
        "L_B": LB,
        "mean_log_c": mlc,
        "residual_A_A_tilde": abs(LA.value - LAt.value),
        "residual_B": abs(LB.value - (LA.value - mlc)),
    }
