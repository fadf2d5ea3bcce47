"""Dominated-splitting detection for Jacobi cocycles.

A cocycle is certified dominated when its action on the projective line
uniformly contracts along the section built from m_-. The N-step derivative
of the action at s_-(x) is evaluated from the section values along the orbit,
so no generic cone search is needed.
"""
import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import _kernels
from ._numerics import INF, is_inf, proj_dist
from .cocycle import CocycleKind, as_mat2, cocycle_matrix
from .exceptions import KernelHitError, PoleError, UsageError
from .model import PhaseGrid, _as_points, eval_poly, translate
from .weyl import (M_MAX, M_START, TOL, converged_sweep, homogeneous_sections, m_minus_truncated,
                   section_gap, site_table)

KERNEL_TOL = 1e-14
#: Above this modulus the chart phi_1 (coordinate v1/v2) is used.
CHART_SWITCH = 10.0
MARGIN = 0.05
N_MAX = 64
SV_FLOOR = 1e-6
SUBSAMPLE = 64
#: Orbit length of the long singular-value diagnostic attached to NO_DS verdicts.
SV_LONG_N = 1024
#: A phase counts as singular when sigma_2 / sigma_1 of A(x) is below this.
SINGULAR_RATIO = 1e-10


class Status(str, enum.Enum):
    DS = "DS"
    NO_DS = "NO_DS"
    UNDETERMINED = "UNDETERMINED"

    @property
    def short(self):
        return "UNDET" if self is Status.UNDETERMINED else self.value


@dataclass(frozen=True)
class ProjPoint:
    """A point of the projective line: chart value v2/v1 plus a unit pair."""

    value: complex
    pair: tuple

    @classmethod
    def from_value(cls, z):
        if is_inf(z) or (isinstance(z, complex) and not np.isfinite(z)):
            return cls(INF, (0j, 1.0 + 0j))
        z = complex(z)
        n = math.hypot(1.0, abs(z))
        return cls(z, (1.0 / n + 0j, z / n))

    @classmethod
    def from_pair(cls, v1, v2):
        v1, v2 = complex(v1), complex(v2)
        n = math.hypot(abs(v1), abs(v2))
        if n == 0:
            raise UsageError("(0, 0) is not a point of the projective line")
        v1, v2 = v1 / n, v2 / n
        if v1 == 0:
            return cls(INF, (0j, v2))
        return cls(v2 / v1, (v1, v2))

    @property
    def is_infinity(self):
        return is_inf(self.value)

    def chordal(self, other):
        return float(proj_dist(self.pair[0], self.pair[1], other.pair[0], other.pair[1]))


def _as_proj(z):
    return z if isinstance(z, ProjPoint) else ProjPoint.from_value(z)


def kernel_direction(D):
    """A unit vector spanning ker D, or None if D is invertible."""
    D = as_mat2(D)
    if np.linalg.det(D) != 0 and np.linalg.svd(D, compute_uv=False)[1] > 0:
        return None
    r = D[0] if np.linalg.norm(D[0]) >= np.linalg.norm(D[1]) else D[1]
    if np.linalg.norm(r) == 0:
        return np.array([1.0 + 0j, 0j])
    k = np.array([-r[1], r[0]])
    return k / np.linalg.norm(k)


def proj_action(D, z):
    """Image of z under the projective action of D."""
    D = as_mat2(D)
    z = _as_proj(z)
    u = np.array(z.pair)
    k = kernel_direction(D)
    if k is not None and proj_dist(u[0], u[1], k[0], k[1]) <= KERNEL_TOL:
        raise KernelHitError("the point spans the kernel of the matrix")
    w = D @ u
    return ProjPoint.from_pair(w[0], w[1])


def mobius(D, z):
    """Chart form (c + d z) / (a + b z) of the action; INF at the pole."""
    (a, b), (c, d) = as_mat2(D)
    if is_inf(z):
        return INF if b == 0 else complex(d / b)
    den = a + b * z
    if den == 0:
        return INF
    return complex((c + d * z) / den)


def mobius_derivative(D, z):
    """Derivative det D / (a + b z)^2 of the chart action at a finite z."""
    (a, b), (c, d) = as_mat2(D)
    if is_inf(z):
        raise PoleError("derivative requested at infinity; use the other chart")
    den = a + b * complex(z)
    if den == 0:
        raise PoleError("z is a pole of the Mobius map; use the other chart")
    return complex((a * d - b * c) / den ** 2)


def proj_derivative(model, E, x, z, kind="A"):
    """Chart derivative of the action of the cocycle matrix at phase x, point z."""
    z = _as_proj(z).value
    return mobius_derivative(cocycle_matrix(model, kind, E, x), z)


def section_derivative(model, E, x, M=2048):
    """c(x) conj(c(T^-1 x)) m_-(Tx)^2, the derivative at s_-(x)."""
    cx = eval_poly(model.c, x)
    cp = eval_poly(model.c, translate(model, x, -1))
    m = m_minus_truncated(model, E, translate(model, x, 1), M).value
    if cx * cp == 0:
        return 0j
    if is_inf(m):
        raise PoleError("s_-(Tx) is infinite; the chart derivative is unbounded")
    return complex(cx * np.conj(cp) * m * m)


# ---------------------------------------------------------------------------
# orbit data


@dataclass
class OrbitSections:
    """Sections and cocycle entries along orbit windows j = 0..N of grid points."""

    kind: str
    N: int
    u_minus: np.ndarray       # (2, N+1, P)
    u_plus: np.ndarray
    entries: tuple            # (a, b, c, d), each (N+1, P)
    log_m_next: np.ndarray    # log|m_-(T^{j+1} x)|, (N, P)
    log_c: np.ndarray         # log|c(T^j x)|, j = -1..N, (N+2, P)
    suspect: np.ndarray       # (P,)
    converged: bool
    stalled: bool
    truncation: int
    residual: float


def orbit_sections(model, E, points, N, kind="A", M0=M_START, M_max=M_MAX, tol=TOL):
    kind = CocycleKind(kind).value
    pts = np.asarray(points, dtype=float).reshape(-1, model.dim)
    rm = converged_sweep(model, E, pts, "minus", N=N, M0=M0, M_max=M_max, tol=tol)
    rp = converged_sweep(model, E, pts, "plus", N=N, M0=M0, M_max=M_max, tol=tol)
    c_tab, v_tab = site_table(model, pts, N)
    um, up, suspect = homogeneous_sections(kind, c_tab[:-1], rm.p, rm.q, rp.p, rp.q)
    ev = complex(E) - v_tab
    cp = c_tab[:-1]
    if kind == "A":
        entries = (ev, -np.conj(cp), c_tab[1:], np.zeros_like(ev))
    else:
        entries = (ev, -np.abs(cp) ** 2 + 0j, np.ones_like(ev), np.zeros_like(ev))
    with np.errstate(divide="ignore"):
        log_m = np.log(np.abs(rm.p)) - np.log(np.abs(rm.q))
        log_c = np.log(np.abs(c_tab))
    return OrbitSections(kind, N, um, up, entries, log_m[1:], log_c, np.any(suspect, axis=0),
                         rm.converged and rp.converged, rm.stalled or rp.stalled,
                         int(max(rm.truncation.max(), rp.truncation.max())),
                         float(max(rm.residual.max(), rp.residual.max())))


def _apply(entries, u):
    a, b, c, d = entries
    return a * u[0] + b * u[1], c * u[0] + d * u[1]


def _norm(w1, w2):
    return np.sqrt(np.abs(w1) ** 2 + np.abs(w2) ** 2)


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def step_log_derivatives(orb, metric="spherical"):
    """Per-step log derivative of the action at the minus section, shape (N, P)."""
    N = orb.N
    if metric == "chart":
        lc = orb.log_c
        if orb.kind == "A":
            f = lc[1:N + 1] + lc[:N] + 2.0 * orb.log_m_next
        else:
            f = 2.0 * lc[:N] + 2.0 * orb.log_m_next
        # 0 * inf combinations at exact kernel hits contribute no contraction info
        return np.where(np.isnan(f), 0.0, f)
    if metric != "spherical":
        raise UsageError("metric must be 'chart' or 'spherical'")
    a, b, c, d = (e[:N] for e in orb.entries)
    u = orb.u_minus[:, :N]
    w1, w2 = _apply((a, b, c, d), u)
    det = np.abs(a * d - b * c)
    return _log(det) - 2.0 * _log(_norm(w1, w2))


def contraction_profile(model, E, grid, N_max=N_MAX, metric="chart", kind="A", **kw):
    """[(N, sup over the grid of |d(A_N . s_-)|)] for N = 1..N_max.

    ``metric="chart"`` evaluates the chain-rule product of c- and m-factors
    in chart coordinates; ``"spherical"`` uses the chart-free spherical
    derivative. Both are accumulated in log space.
    """
    if N_max < 1:
        raise UsageError("N_max must be at least 1")
    orb = orbit_sections(model, E, grid.points, N_max, kind, **kw)
    cum = np.cumsum(step_log_derivatives(orb, metric), axis=0)
    sups = np.exp(np.max(cum, axis=1))
    return [(n + 1, float(sups[n])) for n in range(N_max)]


# ---------------------------------------------------------------------------
# singular values


class SVGap(NamedTuple):
    rate: float
    rank_deficient: int


def sv_gap_profile(model, E, points, N, kind="A"):
    """log(sigma_1 / sigma_2) of A_n(x) for n = 1..N, shape (N, P)."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, model.dim))
    code = CocycleKind(kind).code
    _m, _s, _h, _ld, _lc, s_rec, ld_rec, _bad = _kernels.products(
        pts, complex(E), int(N), code, int(N), *_kernels.model_arrays(model))
    with np.errstate(invalid="ignore"):
        return 2.0 * s_rec - ld_rec


def sv_gap_crosscheck(model, E, grid, N, kind="A"):
    """min over the grid of log(sigma_1 / sigma_2)(A_N(x)) / N where sigma_2 > 0.

    ``rank_deficient`` counts grid points whose N-step product is singular
    (an orbit passed an exact zero of c); those are left out of the minimum.
    """
    if N < 1:
        raise UsageError("N must be at least 1")
    pts = grid.points if isinstance(grid, PhaseGrid) else grid
    g = sv_gap_profile(model, E, pts, N, kind)[N - 1]
    bad = ~np.isfinite(g)
    if np.all(bad):
        return SVGap(math.inf, int(bad.sum()))
    return SVGap(float(np.min(g[~bad]) / N), int(bad.sum()))


# ---------------------------------------------------------------------------
# certificate


@dataclass
class DominationCertificate:
    status: Status
    N: int = None
    contraction_sup: float = math.nan
    transversality_min: float = math.nan
    kernel_clearance: float = math.nan
    lambda_gap: float = math.nan
    sv_gap: float = math.nan
    energy: complex = 0j
    profile: list = field(default_factory=list)
    diagnostics: str = ""

    def to_record(self):
        """Structured-text record, one ``key = value`` per line."""
        lines = [f"energy = {self.energy.real!r}" if self.energy.imag == 0
                 else f"energy = {self.energy!r}",
                 f"status = {self.status.value}",
                 f"N = {self.N if self.N is not None else '-'}"]
        for key in ("contraction_sup", "transversality_min", "kernel_clearance", "lambda_gap",
                    "sv_gap"):
            lines.append(f"{key} = {getattr(self, key)!r}")
        lines.append(f"diagnostics = {self.diagnostics}")
        return "\n".join(lines)


def _subsample(points, k):
    if len(points) <= k:
        return points
    idx = np.linspace(0, len(points) - 1, k).round().astype(int)
    return points[np.unique(idx)]


def kernel_clearance(orb):
    """min chordal distance of s_- to ker A over singular grid phases (1 if none)."""
    a, b, c, d = (e[0] for e in orb.entries)
    s1 = np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2 + np.abs(c) ** 2 + np.abs(d) ** 2)
    det = np.abs(a * d - b * c)
    sing = det <= SINGULAR_RATIO * s1 ** 2
    if not np.any(sing):
        return 1.0, 0
    r1 = np.abs(a) ** 2 + np.abs(b) ** 2 >= np.abs(c) ** 2 + np.abs(d) ** 2
    k1 = np.where(r1, -b, -d)
    k2 = np.where(r1, a, c)
    u = orb.u_minus[:, 0]
    dist = proj_dist(u[0], u[1], k1, k2)
    return float(np.min(dist[sing])), int(sing.sum())


def lambda_gap(orb, N):
    """min over the grid of sum_{j<N} log(|lambda_1| / |lambda_2|) in the diagonal gauge."""
    ent = tuple(e[:N] for e in orb.entries)
    l1 = _log(_norm(*_apply(ent, orb.u_minus[:, :N])))
    l2 = _log(_norm(*_apply(ent, orb.u_plus[:, :N])))
    with np.errstate(invalid="ignore"):
        g = np.sum(l1, axis=0) - np.sum(l2, axis=0)
    g = np.where(np.isnan(g), -np.inf, g)
    return float(np.min(g))


def certify(model, E, kind="A", grid=None, N_max=N_MAX, margin=MARGIN, sv_floor=SV_FLOOR,
            M0=M_START, M_max=M_MAX, tol=TOL):
    """Classify (T, D^E) for D = A or A_tilde as dominated or not.

    Sections are first built on a subsample of the grid; if they fail to
    converge under truncation doubling the energy is NO_DS. Otherwise the
    least N with spherical contraction sup <= 1 - margin is searched and the
    transversality, kernel, diagonal-gauge and singular-value checks must all
    pass for DS. Every other outcome is UNDETERMINED.
    """
    kind = CocycleKind(kind)
    if kind not in (CocycleKind.A, CocycleKind.A_TILDE):
        raise UsageError("certify works with the continuous cocycles A and A_tilde")
    if not 0 < margin < 1:
        raise UsageError("margin must lie in (0, 1)")
    if N_max < 1:
        raise UsageError("N_max must be at least 1")
    grid = grid if grid is not None else _default_grid(model)
    E = complex(E)
    opts = dict(M0=M0, M_max=M_max, tol=tol)
    pts = np.asarray(grid.points)

    sub = _subsample(pts, SUBSAMPLE)
    probe = orbit_sections(model, E, sub, 0, kind.value, **opts)
    if not probe.converged or np.any(probe.suspect):
        return _no_ds(model, E, kind, sub, probe)

    orb = orbit_sections(model, E, pts, N_max, kind.value, **opts)
    if not orb.converged or np.any(orb.suspect):
        return _no_ds(model, E, kind, pts, orb)

    gaps = section_gap(orb.u_minus[:, 0], orb.u_plus[:, 0])
    trans = float(np.min(gaps))
    clear, n_sing = kernel_clearance(orb)
    cum = np.cumsum(step_log_derivatives(orb, "spherical"), axis=0)
    sups = np.exp(np.max(cum, axis=1))
    profile = [(n + 1, float(sups[n])) for n in range(N_max)]
    hits = np.nonzero(sups <= 1.0 - margin)[0]
    diag = [f"sections converged (M <= {orb.truncation}, residual {orb.residual:.1e})"]
    if n_sing:
        diag.append(f"{n_sing} singular grid phases")
    if hits.size == 0:
        diag.append(f"no contraction below {1 - margin:g} up to N = {N_max}")
        return DominationCertificate(Status.UNDETERMINED, None, float(sups.min()), trans, clear,
                                     math.nan, math.nan, E, profile, "; ".join(diag))
    N = int(hits[0]) + 1
    lg = lambda_gap(orb, N)
    sv = sv_gap_crosscheck(model, E, pts, N, kind.value)
    checks = {"transversality": trans > 0, "kernel": clear > 0, "lambda_gap": lg > 0,
              "sv_gap": sv.rate > sv_floor}
    failed = [k for k, ok in checks.items() if not ok]
    if sv.rank_deficient:
        diag.append(f"{sv.rank_deficient} rank-deficient products")
    status = Status.DS
    if failed:
        status = Status.UNDETERMINED
        diag.append("failed: " + ", ".join(failed))
    return DominationCertificate(status, N if status is Status.DS else None, float(sups[N - 1]),
                                 trans, clear, lg, sv.rate, E, profile, "; ".join(diag))


def _default_grid(model):
    from .model import uniform_grid
    return uniform_grid(model.dim, 2048 if model.dim == 1 else 64)


def _no_ds(model, E, kind, pts, orb):
    sv = sv_gap_crosscheck(model, E, _subsample(pts, SUBSAMPLE), SV_LONG_N, kind.value)
    if np.any(orb.suspect):
        why = "degenerate sections (0 * inf) at some phases"
    elif orb.stalled:
        why = f"sections do not converge (residual stalls at {orb.residual:.2e}, M = {orb.truncation})"
    else:
        why = f"sections unconverged at M = {orb.truncation} (residual {orb.residual:.2e})"
    return DominationCertificate(Status.NO_DS, None, math.nan, math.nan, math.nan, math.nan,
                                 sv.rate, E, [], f"{why}; sv gap rate at N = {SV_LONG_N}: "
                                                 f"{sv.rate:.3g}")
