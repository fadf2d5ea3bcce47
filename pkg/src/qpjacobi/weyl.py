"""Weyl m-functions, invariant sections and the Green's function diagonal.

Conventions (H_x as in :mod:`qpjacobi.model`)::

    m_-(x, E) = <d_{-1}, (H_{x,-} - E)^-1 d_{-1}>   half line {..., -2, -1}
    m_+(x, E) = <d_{+1}, (H_{x,+} - E)^-1 d_{+1}>   half line {1, 2, ...}

    s_-(x)  = -c(T^-1 x) m_-(x)          s_+(x)  = -1 / (conj(c(T^-1 x)) m_+(T^-1 x))
    st_-(x) = -m_-(x)                    st_+(x) = -1 / (|c(T^-1 x)|^2 m_+(T^-1 x))

Sections are points of the projective line in the chart z = v2 / v1. Inside the
library they are carried as homogeneous pairs so poles of m (legal for real E
in a gap) never produce a division by zero.
"""
import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import linalg

from . import _kernels
from ._numerics import INF, chart_value, is_inf, proj_dist
from .exceptions import (ConvergenceError, DegenerateError, DomainError,
                         RetryLargerTruncation, UsageError)
from .model import PhaseGrid, _as_points, eval_poly, translate

M_START = 256
M_MAX = 16384
TOL = 1e-8
#: Doubling stops early once M reaches this size and the residual stalls.
STAGNATION_FROM = 1024
STAGNATION_RATIO = 0.25
#: A homogeneous section of norm below this is a 0 * inf combination.
SUSPECT_NORM = 1e-12
#: |D s| below this fraction of |D| counts as s lying in the kernel of D.
KERNEL_EPS = 1e-12

SECTION_KINDS = ("s_minus", "s_plus", "s_tilde_minus", "s_tilde_plus")


class TruncatedValue(NamedTuple):
    value: complex
    residual: float
    M: int


# ---------------------------------------------------------------------------
# scalar truncation solves


def _half_line_sites(model, x, M, side):
    if side == "minus":
        n = np.arange(-M, 0)
    else:
        n = np.arange(1, M + 1)
    x0 = _as_points(x, model.dim).reshape(model.dim)
    pts = translate(model, np.broadcast_to(x0, (M, model.dim)), n)
    return eval_poly(model.c, pts), np.real(eval_poly(model.v, pts))


def _tridiag_solve(diag, upper, rhs_index):
    """Solve a tridiagonal system with super-diagonal ``upper`` (Hermitian)."""
    n = len(diag)
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = np.conj(upper)
    rhs = np.zeros(n, dtype=complex)
    rhs[rhs_index] = 1.0
    return linalg.solve_banded((1, 1), ab, rhs, check_finite=False)


def _raw_truncated(model, E, x, M, side):
    c, v = _half_line_sites(model, x, M, side)
    diag = v - E
    upper = c[:-1]
    idx = M - 1 if side == "minus" else 0
    try:
        with np.errstate(all="ignore"):
            u = _tridiag_solve(diag, upper, idx)
    except (linalg.LinAlgError, ValueError, ZeroDivisionError):
        return INF
    val = complex(u[idx])
    if not np.isfinite(val):
        return INF
    return val


def _truncated(model, E, x, M, side):
    if M < 2:
        raise UsageError("truncation size M must be at least 2")
    E = complex(E)
    val = _raw_truncated(model, E, x, M, side)
    big = is_inf(val) or abs(val) > 1e6
    if big:
        v2 = _raw_truncated(model, E, x, 2 * M, side)
        if is_inf(val):
            if is_inf(v2) or abs(v2) > 1e8:
                return TruncatedValue(INF, 0.0, M)
            raise RetryLargerTruncation(
                f"E = {E} is an eigenvalue of the {M}-site truncation only; retry with larger M")
        v4 = _raw_truncated(model, E, x, 4 * M, side)
        if (is_inf(v2) or abs(v2) >= 10 * abs(val)) and (is_inf(v4) or is_inf(v2)
                                                         or abs(v4) >= 10 * abs(v2)):
            return TruncatedValue(INF, 0.0, M)
    half = _raw_truncated(model, E, x, max(M // 2, 1), side)
    if is_inf(half):
        res = math.inf
    else:
        res = abs(val - half)
    return TruncatedValue(val, float(res), M)


def m_minus_truncated(model, E, x, M=2048):
    """m_-(x, E) from the M-site section of H_{x,-}; residual against M/2."""
    return _truncated(model, E, x, M, "minus")


def m_plus_truncated(model, E, x, M=2048):
    """m_+(x, E) from the M-site section of H_{x,+}; residual against M/2."""
    return _truncated(model, E, x, M, "plus")


def m_minus_riccati(model, E, x, K=1000):
    """m_-(x, E) by K steps of the forward recursion

        m_-(Ty) = -1 / ((E - v(y)) + |c(T^-1 y)|^2 m_-(y)),

    started from 0 at T^-K x. Contracting only for Im E > 0.
    """
    E = complex(E)
    if E.imag <= 0:
        raise DomainError("the Riccati recursion requires Im E > 0; use m_minus_truncated")
    if K < 1:
        raise UsageError("K must be at least 1")
    x0 = _as_points(x, model.dim).reshape(model.dim)
    n = np.arange(-K, 0)
    pts = translate(model, np.broadcast_to(x0, (K, model.dim)), n)
    prev = translate(model, np.broadcast_to(x0, (K, model.dim)), n - 1)
    v = np.real(eval_poly(model.v, pts))
    w = np.abs(eval_poly(model.c, prev)) ** 2
    m = 0j
    for j in range(K):
        den = (E - v[j]) + w[j] * m
        m = INF if den == 0 else -1.0 / den
        if is_inf(m):
            # only possible for a decoupled site with E = v exactly
            m = 0j if w[j + 1 if j + 1 < K else j] == 0 else m
    return m


# ---------------------------------------------------------------------------
# vectorised fields along orbits


@dataclass
class SweepResult:
    """Homogeneous m-values along orbit windows of a set of base points."""

    p: np.ndarray
    q: np.ndarray
    truncation: np.ndarray
    residual: np.ndarray
    converged: bool
    stalled: bool


def sweep(model, E, points, side, N=0, M=M_START):
    """One kernel call: homogeneous m-values (rows j) for every base point."""
    fn = _kernels.minus_sweep if side == "minus" else _kernels.plus_sweep
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, model.dim))
    return fn(pts, complex(E), int(M), int(N), *_kernels.model_arrays(model))


def converged_sweep(model, E, points, side, N=0, M0=M_START, M_max=M_MAX, tol=TOL,
                    stagnation_from=STAGNATION_FROM):
    """Truncation doubling with per-point convergence.

    Row j of the ``minus`` result is m_-(T^j x), j = 0..N; row j of the
    ``plus`` result is m_+(T^{j-1} x). The residual at size M is the chordal
    distance to the values at M/2 and M/2 + 1. Points whose residual exceeds
    ``tol`` are recomputed at 2M, up to ``M_max``.
    Doubling stops early (``stalled``) once M >= ``stagnation_from`` and the
    worst residual fails to shrink by STAGNATION_RATIO.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, model.dim))
    npts = pts.shape[0]
    M = max(4, int(M0))

    def level(sub, M, p_ref, q_ref):
        # references at M/2 and M/2 + 1: coprime offsets, so an exactly
        # periodic (elliptic) recursion cannot pass for a converged one
        p_new, q_new = sweep(model, E, sub, side, N, M)
        p_odd, q_odd = sweep(model, E, sub, side, N, M // 2 + 1)
        r = np.maximum(np.max(proj_dist(p_new, q_new, p_ref, q_ref), axis=0),
                       np.max(proj_dist(p_new, q_new, p_odd, q_odd), axis=0))
        return p_new, q_new, r

    p_half, q_half = sweep(model, E, pts, side, N, M // 2)
    p, q, res = level(pts, M, p_half, q_half)
    trunc = np.full(npts, M, dtype=np.int64)
    stalled = False
    prev_worst = np.inf
    while True:
        todo = np.nonzero(~(res <= tol))[0]
        if todo.size == 0:
            break
        worst = float(np.max(res[todo]))
        if M >= stagnation_from and worst > STAGNATION_RATIO * prev_worst:
            stalled = True
            break
        if 2 * M > M_max:
            break
        prev_worst = worst
        M *= 2
        p2, q2, r2 = level(pts[todo], M, p[:, todo], q[:, todo])
        res[todo] = r2
        p[:, todo] = p2
        q[:, todo] = q2
        trunc[todo] = M
    return SweepResult(p, q, trunc, res, bool(np.all(res <= tol)), stalled)


@dataclass(frozen=True, eq=False)
class MField:
    """A Weyl m-function sampled on a phase grid at one energy."""

    energy: complex
    grid: PhaseGrid
    side: str
    p: np.ndarray
    q: np.ndarray
    truncation: np.ndarray
    residual: np.ndarray

    @property
    def is_infinity(self):
        return self.q == 0

    @property
    def values(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.q == 0, INF, self.p / np.where(self.q == 0, 1, self.q))

    def to_csv(self, path):
        _field_csv(path, self.grid, self.values, self.is_infinity, self.truncation, self.residual)


@dataclass(frozen=True, eq=False)
class SectionField:
    """An invariant section on a phase grid, as unit homogeneous pairs (v1, v2)."""

    energy: complex
    grid: PhaseGrid
    kind: str
    u1: np.ndarray
    u2: np.ndarray
    truncation: np.ndarray
    residual: np.ndarray
    suspect: np.ndarray = field(default=None)

    @property
    def is_infinity(self):
        return self.u1 == 0

    @property
    def values(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.u1 == 0, INF, self.u2 / np.where(self.u1 == 0, 1, self.u1))

    def to_csv(self, path):
        _field_csv(path, self.grid, self.values, self.is_infinity, self.truncation, self.residual)


def _field_csv(path, grid, values, inf_mask, trunc, res):
    d = grid.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(d)] + ["re", "im", "is_infinity", "truncation_M",
                                                  "residual"])
        for i in range(len(grid)):
            z = values[i]
            inf = bool(inf_mask[i])
            w.writerow([repr(float(t)) for t in grid.points[i]] +
                       ["nan" if inf else repr(float(z.real)), "nan" if inf else repr(float(z.imag)),
                        int(inf), int(trunc[i]), repr(float(res[i]))])


def m_field(model, E, grid, side="minus", **kw):
    """m_-(x, E) (``side="minus"``) or m_+(x, E) on every grid point."""
    if side not in ("minus", "plus"):
        raise UsageError("side must be 'minus' or 'plus'")
    pts = grid.points
    if side == "plus":
        # row 0 of the plus sweep with N = 1 is m_+(T^-1 x); row 1 is m_+(x)
        r = converged_sweep(model, E, pts, "plus", N=1, **kw)
        p, q = r.p[1], r.q[1]
    else:
        r = converged_sweep(model, E, pts, "minus", N=0, **kw)
        p, q = r.p[0], r.q[0]
    return MField(complex(E), grid, side, p, q, r.truncation, r.residual)


def site_table(model, points, N):
    """c(T^j x) for j = -1..N (row j + 1) and v(T^j x) for j = 0..N."""
    pts = np.asarray(points, dtype=float).reshape(-1, model.dim)
    n = np.arange(-1, N + 1)
    orbit = translate(model, np.broadcast_to(pts, (N + 2,) + pts.shape),
                      n.reshape(-1, 1))
    orbit = np.asarray(orbit).reshape(N + 2, pts.shape[0], model.dim)
    c = eval_poly(model.c, orbit)
    v = np.real(eval_poly(model.v, orbit[1:]))
    return np.asarray(c).reshape(N + 2, -1), np.asarray(v).reshape(N + 1, -1)


def homogeneous_sections(kind, c_prev, pm, qm, pp, qp):
    """Unit homogeneous pairs of the minus/plus sections from m-values.

    ``c_prev`` is c(T^-1 y); (pm, qm) is m_-(y); (pp, qp) is m_+(T^-1 y).
    Returns (u_minus, u_plus, suspect) with u arrays of shape (2, ...).
    """
    if kind == "A":
        um = np.array([qm, -c_prev * pm])
        up = np.array([np.conj(c_prev) * pp, -qp])
    elif kind == "A_tilde":
        um = np.array([qm, -pm])
        up = np.array([np.abs(c_prev) ** 2 * pp, -qp])
    else:
        raise UsageError(f"sections exist for kinds A and A_tilde, not {kind!r}")
    nm = np.sqrt(np.abs(um[0]) ** 2 + np.abs(um[1]) ** 2)
    npl = np.sqrt(np.abs(up[0]) ** 2 + np.abs(up[1]) ** 2)
    suspect = (nm < SUSPECT_NORM) | (npl < SUSPECT_NORM)
    with np.errstate(invalid="ignore", divide="ignore"):
        um = um / np.where(nm > 0, nm, 1.0)
        up = up / np.where(npl > 0, npl, 1.0)
    return um, up, suspect


def sections(model, E, grid, which="s_minus", **kw):
    """One of s_-, s_+, st_-, st_+ on every grid point."""
    if which not in SECTION_KINDS:
        raise UsageError(f"which must be one of {SECTION_KINDS}")
    both = section_pair(model, E, grid.points, kind="A_tilde" if "tilde" in which else "A", **kw)
    minus = which.endswith("minus")
    u = both["u_minus"] if minus else both["u_plus"]
    trunc = both["trunc_minus"] if minus else both["trunc_plus"]
    res = both["res_minus"] if minus else both["res_plus"]
    return SectionField(complex(E), grid, which, u[0], u[1], trunc, res, both["suspect"])


def section_pair(model, E, points, kind="A", **kw):
    """Both sections of ``kind`` at the given points, with convergence data."""
    pts = np.asarray(points, dtype=float).reshape(-1, model.dim)
    rm = converged_sweep(model, E, pts, "minus", N=0, **kw)
    rp = converged_sweep(model, E, pts, "plus", N=0, **kw)
    c_tab, _ = site_table(model, pts, 0)
    um, up, suspect = homogeneous_sections(kind, c_tab[0], rm.p[0], rm.q[0], rp.p[0], rp.q[0])
    return {"u_minus": um, "u_plus": up, "suspect": suspect,
            "trunc_minus": rm.truncation, "trunc_plus": rp.truncation,
            "res_minus": rm.residual, "res_plus": rp.residual,
            "converged": rm.converged and rp.converged}


def _matrix_entries(model, kind, E, pts):
    from .cocycle import cocycle_entries
    return cocycle_entries(model, kind, complex(E), pts)


def invariance_residual(model, E, grid, kind="A", side="minus", **kw):
    """sup over the grid of chordal(D(x) . s(x), s(Tx)) for D = A or A_tilde.

    Sections at x and at Tx come from independent truncation solves. Points
    where s(x) lies numerically in the kernel of D(x) have no projective image
    and are skipped.
    """
    pts = np.asarray(grid.points)
    img = translate(model, pts, 1)
    here = section_pair(model, E, pts, kind, **kw)
    there = section_pair(model, E, img, kind, **kw)
    key = "u_minus" if side == "minus" else "u_plus"
    u = here[key]
    w = there[key]
    a, b, c, d = _matrix_entries(model, kind, E, pts)
    v1 = a * u[0] + b * u[1]
    v2 = c * u[0] + d * u[1]
    dist = proj_dist(v1, v2, w[0], w[1])
    scale = np.abs(a) + np.abs(b) + np.abs(c) + np.abs(d)
    dist = np.where(np.abs(v1) + np.abs(v2) <= KERNEL_EPS * scale, np.nan, dist)
    return float(np.nanmax(dist))


def green_diag(model, E, x, **kw):
    """G(0, 0; x, E) = 1 / (conj(c(T^-1 x)) (s_-(x) - s_+(x)))."""
    pair = section_pair(model, E, np.asarray(x, dtype=float).reshape(1, -1)
                        if model.dim > 1 else np.array([[float(x)]]), "A", **kw)
    um, up = pair["u_minus"][:, 0], pair["u_plus"][:, 0]
    cp = eval_poly(model.c, translate(model, x, -1))
    # s_- - s_+ = (um2 up1 - up2 um1) / (um1 up1), stable at poles
    num = um[1] * up[0] - up[1] * um[0]
    den = um[0] * up[0]
    scale = max(abs(um[0]) * abs(up[1]), abs(up[0]) * abs(um[1]), 1e-300)
    if abs(num) <= 1e-13 * scale:
        raise DegenerateError("s_+ = s_- to tolerance: E is too close to the spectrum")
    return complex(den / (np.conj(cp) * num))


def inverse_green(model, E, points, return_converged=False, **kw):
    """1 / G(0, 0; x, E) at each point; zero exactly where G has a pole.

    For real E in the resolvent set the values are real, and dist(E, Sigma) is
    at most min |1/G| since |G| never exceeds the resolvent norm. With
    ``return_converged`` the section convergence flag is returned as well.
    """
    pts = _as_points(points, model.dim).reshape(-1, model.dim)
    pair = section_pair(model, E, pts, "A", **kw)
    um, up = pair["u_minus"], pair["u_plus"]
    cp = eval_poly(model.c, translate(model, pts, -1))
    num = um[1] * up[0] - up[1] * um[0]
    den = um[0] * up[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den == 0, INF, np.conj(cp) * num / den)
    return (out, pair["converged"]) if return_converged else out


def green_diag_direct(model, E, x, M=2048):
    """<d_0, (H_x - E)^-1 d_0> from the (2M+1)-site section on -M..M."""
    E = complex(E)
    n = np.arange(-M, M + 1)
    x0 = _as_points(x, model.dim).reshape(model.dim)
    pts = translate(model, np.broadcast_to(x0, (2 * M + 1, model.dim)), n)
    c = eval_poly(model.c, pts)
    v = np.real(eval_poly(model.v, pts))
    u = _tridiag_solve(v - E, c[:-1], M)
    return complex(u[M])


def section_gap(um, up):
    """|s_+ - s_-| from homogeneous pairs: +inf where exactly one is infinite, 0 where both are."""
    im, ip = um[0] == 0, up[0] == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        sm = um[1] / np.where(im, 1, um[0])
        sp = up[1] / np.where(ip, 1, up[0])
        euclid = np.abs(sp - sm)
    return np.where(im & ip, 0.0, np.where(im | ip, np.inf, euclid))


def transversality_gap(model, E, grid, **kw):
    """min over the grid of |s_+(x) - s_-(x)|."""
    pair = section_pair(model, E, grid.points, "A", **kw)
    return float(np.min(section_gap(pair["u_minus"], pair["u_plus"])))


def section_value(u):
    """Chart value of a single homogeneous pair."""
    return chart_value(u[0], u[1])
