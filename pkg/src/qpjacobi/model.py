"""Trigonometric-polynomial sampling functions and quasi-periodic Jacobi models.

A model is a frequency vector ``alpha`` on the d-torus together with an
off-diagonal sampling function ``c`` (complex) and a real potential ``v``.
The associated operator acts on l^2(Z) by::

    (H_x psi)_n = conj(c(x + (n-1) alpha)) psi_{n-1} + c(x + n alpha) psi_{n+1}
                  + v(x + n alpha) psi_n
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._numerics import expi2pi, frac, split_float
from .exceptions import ConvergenceError, DomainError, ModelValidationError, UsageError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: Coefficients below this magnitude are treated as zero in canonical form.
COEF_EPS = 0.0


class TrigPoly:
    """Finitely supported Fourier series ``sum_k a_k exp(2 pi i k.x)`` on T^d.

    Parameters
    ----------
    terms : mapping
        Frequency vector (tuple of ints, or int when ``dim == 1``) to
        complex coefficient. Zero coefficients are dropped.
    dim : int
        Torus dimension d.
    """

    __slots__ = ("dim", "freqs", "coefs")

    def __init__(self, terms, dim=1):
        dim = int(dim)
        if dim < 1:
            raise UsageError("TrigPoly dimension must be positive")
        acc = {}
        for k, a in dict(terms).items():
            kk = (int(k),) if np.ndim(k) == 0 else tuple(int(t) for t in k)
            if len(kk) != dim:
                raise UsageError(f"frequency {kk} does not have dimension {dim}")
            acc[kk] = acc.get(kk, 0.0) + complex(a)
        items = sorted((k, a) for k, a in acc.items() if abs(a) > COEF_EPS)
        self.dim = dim
        self.freqs = np.array([k for k, _ in items], dtype=np.int64).reshape(len(items), dim)
        self.coefs = np.array([a for _, a in items], dtype=complex)

    @classmethod
    def constant(cls, value, dim=1):
        return cls({(0,) * dim: value}, dim)

    @classmethod
    def cosine(cls, amplitude, dim=1, axis=0):
        """``amplitude * cos(2 pi x_axis)``."""
        k = [0] * dim
        k[axis] = 1
        kn = [-t for t in k]
        return cls({tuple(k): amplitude / 2.0, tuple(kn): amplitude / 2.0}, dim)

    @property
    def terms(self):
        return {tuple(int(t) for t in k): complex(a) for k, a in zip(self.freqs, self.coefs)}

    def __len__(self):
        return len(self.coefs)

    def __repr__(self):
        return f"TrigPoly({self.terms!r}, dim={self.dim})"

    def __eq__(self, other):
        return isinstance(other, TrigPoly) and self.dim == other.dim and self.terms == other.terms

    def __hash__(self):
        return hash((self.dim, tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    def is_zero(self):
        return len(self.coefs) == 0

    def is_hermitian(self, tol=1e-12):
        return not self.hermitian_violations(tol)

    def hermitian_violations(self, tol=1e-12):
        """Frequencies k with a_{-k} != conj(a_k) (i.e. the function is not real)."""
        t = self.terms
        scale = max([abs(a) for a in t.values()] + [1.0])
        bad = []
        for k, a in t.items():
            mk = tuple(-x for x in k)
            if abs(t.get(mk, 0.0) - a.conjugate()) > tol * scale:
                bad.append(k)
        return sorted(bad)

    def coef_sum(self):
        """sum |a_k|, an upper bound for the sup norm."""
        return float(np.sum(np.abs(self.coefs)))

    def __call__(self, x):
        return eval_poly(self, x)


def _as_points(x, dim):
    """Coerce torus points to shape (..., dim)."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x[..., None]
    if x.ndim == 0 or x.shape[-1] != dim:
        raise UsageError(f"point of shape {x.shape} does not match torus dimension {dim}")
    return x


def eval_poly(p, x):
    """Evaluate ``p`` at torus point(s) ``x``.

    For ``dim == 1`` a scalar or any array of scalars is accepted; otherwise
    the trailing axis must have length ``dim``. Returns a complex scalar or an
    array with the leading shape of ``x``.
    """
    pts = _as_points(x, p.dim)
    lead = pts.shape[:-1]
    if p.is_zero():
        out = np.zeros(lead, dtype=complex)
    else:
        phase = pts @ p.freqs.T.astype(float)
        # exact reduction: k.x mod 1 evaluated per term
        out = expi2pi(phase) @ p.coefs
    if out.ndim == 0:
        return complex(out)
    return out


def sup_norm(p, samples=8192):
    """Estimate of max |p| over the torus (dense sampling + local refinement)."""
    if p.is_zero():
        return 0.0
    if len(p) == 1:
        return float(abs(p.coefs[0]))
    if p.dim == 1:
        xs = np.arange(samples) / samples
        vals = np.abs(eval_poly(p, xs))
        i = int(np.argmax(vals))
        best = float(vals[i])
        from scipy.optimize import minimize_scalar
        h = 1.0 / samples
        res = minimize_scalar(lambda t: -abs(eval_poly(p, t)), bounds=(xs[i] - h, xs[i] + h),
                              method="bounded", options={"xatol": 1e-13})
        return max(best, float(-res.fun))
    n = max(8, int(round(samples ** (1.0 / p.dim))))
    axes = [np.arange(n) / n] * p.dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.dim)
    return float(np.max(np.abs(eval_poly(p, pts))))


def laurent_coefficients(p):
    """For d = 1: (kmin, coefficients of z^kmin * p highest degree first)."""
    if p.dim != 1:
        raise DomainError("Laurent form exists only for one-dimensional polynomials")
    ks = p.freqs[:, 0]
    kmin, kmax = int(ks.min()), int(ks.max())
    poly = np.zeros(kmax - kmin + 1, dtype=complex)
    for k, a in zip(ks, p.coefs):
        poly[kmax - k] += a
    return kmin, poly


def zeros_on_circle(p, tol=1e-8):
    """Zeros of a d = 1 polynomial on the torus, as sorted phases in [0, 1)."""
    _, poly = laurent_coefficients(p)
    if len(poly) < 2:
        return []
    roots = np.roots(poly)
    out = []
    for r in roots:
        if abs(abs(r) - 1.0) < tol:
            out.append(float(frac(np.angle(r) / (2 * np.pi))))
    return sorted(out)


def mean_log_abs(p, method="roots", rtol=1e-10):
    """Integral of log|p| over the torus with respect to Haar measure.

    ``method="roots"`` (d = 1 only) uses Jensen's formula: the log Mahler
    measure ``log|a_top| + sum log max(1, |root|)``. ``method="quadrature"``
    integrates numerically with breakpoints placed at near-zeros of p.
    """
    if p.is_zero():
        raise DomainError("log|p| is not integrable for the zero polynomial")
    if method == "roots":
        if p.dim != 1:
            raise DomainError("method='roots' requires a one-dimensional polynomial")
        _, poly = laurent_coefficients(p)
        lead = poly[0]
        roots = np.roots(poly) if len(poly) > 1 else np.array([])
        return float(math.log(abs(lead)) + np.sum(np.log(np.maximum(1.0, np.abs(roots)))))
    if method == "quadrature":
        return _mean_log_abs_quad(p, rtol)
    raise UsageError(f"unknown method {method!r}")


def _breakpoints(f, samples=4096):
    """Local minima of |f| on a dense periodic grid (candidate singularities)."""
    xs = np.arange(samples) / samples
    vals = np.abs(f(xs))
    left = np.roll(vals, 1)
    right = np.roll(vals, -1)
    scale = np.max(vals)
    idx = np.nonzero((vals <= left) & (vals <= right) & (vals < 1e-2 * scale))[0]
    pts = []
    from scipy.optimize import minimize_scalar
    h = 1.0 / samples
    for i in idx:
        res = minimize_scalar(lambda t: abs(f(t)), bounds=(xs[i] - h, xs[i] + h),
                              method="bounded", options={"xatol": 1e-14})
        pts.append(float(frac(res.x)))
    return sorted(set(pts))


def _quad_circle(f, rtol, samples=4096):
    """Integral over [0, 1) of log|f|, split at near-zeros of f."""
    pts = _breakpoints(f, samples)
    if pts:
        edges = pts + [pts[0] + 1.0]
    else:
        edges = [0.0, 1.0]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b - a <= 0:
            continue
        val, _ = integrate.quad(lambda t: math.log(max(abs(f(t)), 1e-300)), a, b,
                                epsabs=1e-13, epsrel=rtol, limit=400)
        total += val
    return total


def _mean_log_abs_quad(p, rtol):
    """Two passes at different resolutions; they must agree."""
    def circle_integral(prefix, tol, samples):
        if p.dim == 1:
            return _quad_circle(lambda t: eval_poly(p, t), tol, samples)

        def g(t):
            t = np.asarray(t, dtype=float)
            pts = np.empty(t.shape + (p.dim,))
            pts[..., :-1] = prefix
            pts[..., -1] = t
            return eval_poly(p, pts)
        return _quad_circle(g, tol, samples)

    def nested(prefix, tol, samples):
        if len(prefix) == p.dim - 1:
            return circle_integral(prefix, tol, samples)
        val, _ = integrate.quad(lambda s: nested(list(prefix) + [s], tol, samples), 0.0, 1.0,
                                epsabs=1e-11, epsrel=tol, limit=200)
        return val

    coarse = nested([], rtol, 1024 if p.dim > 1 else 4096)
    fine = nested([], rtol * 0.1, 2048 if p.dim > 1 else 16384)
    if abs(coarse - fine) > max(1e-8, 10 * rtol) * (1 if p.dim == 1 else 10):
        raise ConvergenceError("quadrature of log|p| did not converge", (coarse, fine))
    return fine


def integer_relation(alpha, max_height=10**6, tol=1e-12):
    """Small integer relation among (alpha_1, ..., alpha_d, 1), or None.

    Generic vectors satisfy relations of height H to within about H^-d, so the
    height is capped well below tol^(-1/(d+1)) to avoid spurious hits.
    """
    import mpmath
    max_height = min(max_height, int(tol ** (-1.0 / (len(alpha) + 1)) / 10))
    vec = [mpmath.mpf(float(a)) for a in alpha] + [mpmath.mpf(1)]
    with mpmath.workdps(30):
        rel = mpmath.pslq(vec, tol=tol, maxcoeff=max_height, maxsteps=10**5)
    if rel is None or all(r == 0 for r in rel[:-1]):
        return None
    return [int(r) for r in rel]


@dataclass(frozen=True, eq=False)
class JacobiModel:
    """Frequency vector plus sampling pair (c, v); see the module docstring."""

    alpha: tuple
    c: TrigPoly
    v: TrigPoly
    label: str = "model"
    check_independence: bool = field(default=True, repr=False)

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        if alpha.ndim != 1 or not np.all(np.isfinite(alpha)):
            raise ModelValidationError("alpha must be a finite real vector")
        alpha = tuple(float(a) for a in frac(alpha))
        object.__setattr__(self, "alpha", alpha)
        d = len(alpha)
        if self.c.dim != d or self.v.dim != d:
            raise ModelValidationError(
                f"dimension mismatch: alpha has {d} components, c has {self.c.dim}, v has {self.v.dim}")
        if self.c.is_zero():
            raise ModelValidationError("c is identically zero")
        bad = self.v.hermitian_violations()
        if bad:
            raise ModelValidationError(
                "v is not real-valued: a_{-k} != conj(a_k) for k = "
                + ", ".join(str(k if d > 1 else k[0]) for k in bad))
        object.__setattr__(self, "_split", tuple(split_float(a) for a in alpha))
        if self.check_independence:
            rel = integer_relation(alpha)
            if rel is not None:
                warnings.warn(f"alpha = {alpha} satisfies the integer relation {rel} "
                              "(with the constant 1); the translation is not minimal",
                              RuntimeWarning, stacklevel=3)

    @property
    def dim(self):
        return len(self.alpha)

    def translate(self, x, n=1):
        return translate(self, x, n)

    def c_norm(self):
        return sup_norm(self.c)

    def v_norm(self):
        return sup_norm(self.v)

    def operator_bound(self):
        """2 ||c||_inf + ||v||_inf, a bound for ||H_x||."""
        return 2.0 * sup_norm(self.c) + sup_norm(self.v)


def translate(model, x, n=1):
    """``x + n * alpha mod 1`` computed from a split of alpha.

    ``n`` may be an integer array broadcasting against the leading shape of x.
    """
    pts = _as_points(x, model.dim)
    n = np.asarray(n, dtype=np.int64)
    hi = np.array([s[0] for s in model._split])
    lo = np.array([s[1] for s in model._split])
    nn = n[..., None].astype(float)
    shift = frac(nn * hi) + nn * lo
    out = frac(pts + frac(shift))
    if model.dim == 1 and np.ndim(x) == out.ndim - 1:
        out = out[..., 0]
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True, eq=False)
class PhaseGrid:
    """Ordered torus points standing in for sup/integrals over X.

    ``kind`` is ``"uniform"`` (P points per dimension) or ``"orbit"``.
    """

    points: np.ndarray
    kind: str
    size: int
    origin: tuple = ()

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise UsageError("grid points must have shape (n, d)")
        if np.any(pts < 0) or np.any(pts >= 1):
            raise UsageError("grid points must lie in [0, 1)^d")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


def uniform_grid(dim=1, P=2048):
    """Equispaced grid with P points per dimension."""
    if P < 1:
        raise UsageError("P must be positive")
    axes = [np.arange(P) / P] * dim
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    return PhaseGrid(pts, "uniform", P)


def orbit_grid(model, x0, n):
    """The first n points of the T-orbit of x0."""
    x0 = _as_points(x0, model.dim).reshape(model.dim)
    pts = translate(model, np.broadcast_to(x0, (n, model.dim)), np.arange(n))
    pts = np.asarray(pts).reshape(n, model.dim)
    return PhaseGrid(pts, "orbit", n, tuple(float(t) for t in x0))


PRESETS = ("free", "almost-mathieu", "singular-harper")
_ALIASES = {"amo": "almost-mathieu", "mathieu": "almost-mathieu", "harper": "singular-harper"}


def preset(name, lam=0.5, alpha=GOLDEN):
    """Built-in models.

    ``free``: c = 1, v = 0. ``almost-mathieu``: c = 1, v = 2 lam cos(2 pi x).
    ``singular-harper``: c = 1 + exp(2 pi i x) (zero at x = 1/2),
    v = 2 lam cos(2 pi x).
    """
    key = _ALIASES.get(name, name)
    if key == "free":
        return JacobiModel((alpha,), TrigPoly.constant(1.0), TrigPoly({}, 1), "free")
    if key == "almost-mathieu":
        return JacobiModel((alpha,), TrigPoly.constant(1.0), TrigPoly.cosine(2.0 * lam),
                           f"almost-mathieu(lambda={lam:g})")
    if key == "singular-harper":
        return JacobiModel((alpha,), TrigPoly({0: 1.0, 1: 1.0}), TrigPoly.cosine(2.0 * lam),
                           f"singular-harper(lambda={lam:g})")
    raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
