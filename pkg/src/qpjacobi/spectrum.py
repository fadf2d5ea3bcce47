"""Energy scans, finite-volume spectra and consistency checks."""
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cocycle import lyapunov
from .domination import MARGIN, N_MAX, Status, certify, contraction_profile
from .exceptions import QPJError, UsageError
from .model import _as_points, eval_poly, translate, uniform_grid
from .weyl import inverse_green

CSV_COLUMNS = ("energy", "status", "N", "contraction_sup", "transversality_min",
               "kernel_clearance", "lambda_gap", "le_A", "le_B", "dist_trunc")
#: Fraction of a truncation kept clear at each end when filtering edge states.
EDGE_LAYER = 8
EDGE_WEIGHT = 0.5
#: Phases used to pick the refinement phase, and the secant budget.
REFINE_PHASES = 256
REFINE_ITER = 60


# ---------------------------------------------------------------------------
# truncation spectrum


@dataclass
class TruncationSpectrum:
    sizes: tuple
    phases: np.ndarray
    eigenvalues: np.ndarray
    coverage_radius: float
    discarded: int = 0
    diagnostics: list = field(default_factory=list)

    def distance(self, E):
        """Distance from E (scalar or array) to the nearest eigenvalue."""
        return nearest_distance(self.eigenvalues, E)


def nearest_distance(points, E):
    pts = np.asarray(points, dtype=float)
    E = np.asarray(E, dtype=float)
    if pts.size == 0:
        return np.full(E.shape, math.inf) if E.ndim else math.inf
    i = np.clip(np.searchsorted(pts, E), 1, len(pts) - 1) if len(pts) > 1 else np.zeros_like(
        E, dtype=int)
    d = np.abs(pts[i] - E)
    if len(pts) > 1:
        d = np.minimum(d, np.abs(pts[i - 1] - E))
    return float(d) if d.ndim == 0 else d


def hausdorff(a, b):
    """Hausdorff distance between two finite subsets of the real line."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    return float(max(np.max(nearest_distance(b, a)), np.max(nearest_distance(a, b))))


def section_matrix(model, x, n):
    """Diagonal and gauged real off-diagonal of the n x n section of H_x.

    The unitary gauge psi_k -> e^{i theta_k} psi_k turns the complex couplings
    into |c(T^k x)| without changing the eigenvalues.
    """
    x0 = _as_points(x, model.dim).reshape(model.dim)
    pts = translate(model, np.broadcast_to(x0, (n, model.dim)), np.arange(n))
    v = np.real(eval_poly(model.v, pts))
    c = np.abs(eval_poly(model.c, pts))
    return np.asarray(v, dtype=float).reshape(n), np.asarray(c, dtype=float).reshape(n)[:-1]


def _block(model, x, n, edge_filter):
    d, e = section_matrix(model, x, n)
    layer = n // EDGE_LAYER if edge_filter else 0
    if layer == 0:
        return eigh_tridiagonal(d, e, eigvals_only=True), 0
    w, vec = eigh_tridiagonal(d, e)
    edge = np.sum(vec[:layer] ** 2, axis=0) + np.sum(vec[-layer:] ** 2, axis=0)
    keep = edge <= EDGE_WEIGHT
    return w[keep], int(np.count_nonzero(~keep))


def truncation_phases(dim, count, seed=0):
    return np.random.default_rng(seed).random((count, dim))


def truncation_spectrum(model, sizes=(512, 1024), phases=8, seed=0, edge_filter=True):
    """Merged eigenvalues of n x n sections of H_x over sizes and phases.

    ``phases`` is a count (drawn from ``seed``) or an explicit array of torus
    points. With ``edge_filter`` eigenvectors carrying more than half their
    weight in the outer eighth at either end are dropped: these are
    boundary states of the cut, not spectrum of H_x.
    """
    sizes = tuple(int(s) for s in sizes)
    if not sizes or min(sizes) < 1:
        raise UsageError("sizes must be positive")
    if isinstance(phases, (int, np.integer)):
        if phases < 1:
            raise UsageError("need at least one phase")
        pts = truncation_phases(model.dim, int(phases), seed)
    else:
        pts = np.asarray(phases, dtype=float).reshape(-1, model.dim)
        if len(pts) == 0:
            raise UsageError("need at least one phase")
    per_size = {}
    dropped = 0
    notes = []
    for n in sizes:
        vals = []
        for x in pts:
            try:
                w, k = _block(model, x, n, edge_filter)
            except (np.linalg.LinAlgError, ValueError) as exc:
                notes.append(f"size {n}, phase {x.tolist()}: {exc}")
                continue
            vals.append(w)
            dropped += k
        per_size[n] = np.sort(np.concatenate(vals)) if vals else np.empty(0)
    merged = np.sort(np.concatenate(list(per_size.values())))
    big = sorted(per_size)
    cov = hausdorff(per_size[big[-1]], per_size[big[-2]]) if len(big) > 1 else math.nan
    return TruncationSpectrum(sizes, pts, merged, cov, dropped, notes)


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanConfig:
    phases: int = 2048
    nmax: int = N_MAX
    margin: float = MARGIN
    trunc_sizes: tuple = (512, 1024)
    trunc_phases: int = 8
    le_steps: int = 20000
    le_phases: int = 8
    seed: int = 0
    refine: float = 0.1
    workers: int = 1

    def __post_init__(self):
        if not self.refine >= 0:
            raise UsageError("refine radius must be non-negative")
        for key in ("phases", "nmax", "trunc_phases", "le_steps", "le_phases", "workers"):
            if getattr(self, key) < 1:
                raise UsageError(f"{key} must be positive")
        if not 0 < self.margin < 1:
            raise UsageError("margin must lie in (0, 1)")
        if not self.trunc_sizes or min(self.trunc_sizes) < 8:
            raise UsageError("truncation sizes must be at least 8")
        object.__setattr__(self, "trunc_sizes", tuple(int(s) for s in self.trunc_sizes))


@dataclass
class ScanRow:
    energy: float
    certificate: object
    le_A: float
    le_B: float
    dist_trunc: float
    refined: bool = False

    @property
    def status(self):
        return self.certificate.status


@dataclass
class ScanResult:
    rows: list
    summary: dict
    truncation: TruncationSpectrum = None


def energy_grid(emin, emax, step):
    if not (math.isfinite(emin) and math.isfinite(emax) and math.isfinite(step)):
        raise UsageError("energy window must be finite")
    if step <= 0:
        raise UsageError("step must be positive")
    if emin >= emax:
        raise UsageError("need emin < emax")
    k = int(math.floor((emax - emin) / step + 1e-9))
    return np.round(emin + step * np.arange(k + 1), 12) + 0.0


def green_pole(model, E, points=None, maxiter=REFINE_ITER):
    """Secant search for a real pole of E -> G(0, 0; x*, E) started at E.

    x* maximises |G(E)| over ``points``. Poles of a diagonal resolvent entry lie
    in Sigma, and so does every endpoint of a gap where 1/G tends to zero, so
    the search only uses the dynamics. It also stops at the first trial energy
    whose sections fail to converge. Returns (r, E*) with r = min |1/G(E)|, an
    upper bound for dist(E, Sigma); E* is None if the search fails.
    """
    if points is None:
        points = uniform_grid(model.dim, REFINE_PHASES).points
    f, ok = inverse_green(model, E, points, return_converged=True)
    f = np.real(f)
    i = int(np.argmin(np.abs(f)))
    r = float(abs(f[i]))
    if not (ok and math.isfinite(r)):
        return r, None
    x = points[i:i + 1]
    # near a simple pole 1/G is about (E - lambda) / w with 0 < w <= 1
    a, fa, b = float(E), f[i], float(E) + f[i]
    try:
        for _ in range(maxiter):
            g, ok = inverse_green(model, b, x, return_converged=True)
            fb = float(np.real(g[0]))
            if not ok or fb == 0 or fb == fa or abs(b - a) <= 1e-14 * max(1.0, abs(b)):
                break
            a, fa, b = b, fb, b - fb * (b - a) / (fb - fa)
    except (QPJError, ArithmeticError, ValueError):
        return r, None
    return r, (b if math.isfinite(b) else None)


def _refine_one(args):
    model, E, cfg = args
    r, pole = green_pole(model, E)
    return pole if r <= cfg.refine else None


def _scan_one(args):
    model, E, cfg = args
    grid = uniform_grid(model.dim, cfg.phases)
    cert = certify(model, E, "A", grid, cfg.nmax, cfg.margin)
    kw = dict(n=cfg.le_steps, phases=cfg.le_phases, seed=cfg.seed)
    le_a = lyapunov(model, "A", E, **kw).value
    le_b = lyapunov(model, "B", E, **kw).value
    return cert, le_a, le_b


def intervals(energies, statuses, step, target=Status.NO_DS):
    """Maximal runs of consecutive grid energies with the given status."""
    out = []
    start = prev = None
    for E, s in zip(energies, statuses):
        if s is target and prev is not None and E - prev <= 1.5 * step:
            prev = E
            continue
        if start is not None:
            out.append((start, prev))
            start = prev = None
        if s is target:
            start = prev = E
    if start is not None:
        out.append((start, prev))
    return out


def scan(model, emin, emax, step, config=None):
    """Classify every grid energy and compare the NO_DS set with Sigma_trunc."""
    cfg = config or ScanConfig()
    energies = energy_grid(emin, emax, step)
    results = _run(_scan_one, [(model, float(E), cfg) for E in energies], cfg.workers)
    extra = []
    if cfg.refine > 0:
        # grid energies near Sigma seed pole searches; each hit is certified like any other energy
        starts = [float(E) for E, (cert, _, _) in zip(energies, results)
                  if cert.status is not Status.NO_DS]
        seen = {round(float(E), 12) for E in energies}
        for pole in _run(_refine_one, [(model, E, cfg) for E in starts], cfg.workers):
            if pole is not None and emin <= pole <= emax and round(pole, 12) not in seen:
                seen.add(round(pole, 12))
                extra.append(pole)
        extra.sort()
        results += _run(_scan_one, [(model, E, cfg) for E in extra], cfg.workers)
    spec = truncation_spectrum(model, cfg.trunc_sizes, cfg.trunc_phases, cfg.seed)
    all_e = np.concatenate([energies, np.asarray(extra, dtype=float)])
    dist = np.atleast_1d(spec.distance(all_e))
    rows = [ScanRow(float(E), cert, float(la), float(lb), float(d), k >= len(energies))
            for k, (E, (cert, la, lb), d) in enumerate(zip(all_e, results, dist))]
    rows.sort(key=lambda r: r.energy)
    return ScanResult(rows, _summary(model, emin, emax, step, cfg, rows, spec), spec)


def _run(fn, tasks, workers):
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


def _summary(model, emin, emax, step, cfg, rows, spec):
    energies = [r.energy for r in rows]
    statuses = [r.status for r in rows]
    no_ds = [r.energy for r in rows if r.status is Status.NO_DS]
    inside = spec.eigenvalues[(spec.eigenvalues >= emin - step) & (spec.eigenvalues <= emax + step)]
    counts = {s.value: sum(1 for t in statuses if t is s) for s in Status}
    ct = combes_thomas_check(rows)
    return {
        "model": model.label,
        "alpha": list(model.alpha),
        "window": [emin, emax, step],
        "config": {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()
                   if k != "workers"},
        "counts": counts,
        "refined_energies": sum(1 for r in rows if r.refined),
        "undetermined_fraction": counts["UNDETERMINED"] / len(rows) if rows else 0.0,
        "sigma_intervals": [list(t) for t in intervals(energies, statuses, step)],
        "ds_intervals": [list(t) for t in intervals(energies, statuses, step, Status.DS)],
        "hausdorff": hausdorff(no_ds, inside),
        "coverage_radius": spec.coverage_radius,
        "truncation_eigenvalues": int(spec.eigenvalues.size),
        "edge_states_discarded": spec.discarded,
        "combes_thomas": ct,
    }


def combes_thomas_check(rows, kappa_floor=0.0):
    """Positivity of L(B) on DS energies and the best kappa with L(B) >= kappa dist."""
    ds = [r for r in rows if r.status is Status.DS]
    bad = [r.energy for r in ds if not r.le_B > 0]
    ratios = [r.le_B / r.dist_trunc for r in ds if r.dist_trunc > 0 and math.isfinite(r.le_B)]
    kappa = min(ratios) if ratios else math.nan
    return {
        "checked": len(ds),
        "violations": len(bad),
        "violating_energies": bad,
        "kappa": kappa,
        "kappa_ok": bool(not ratios or kappa >= kappa_floor),
    }


def decay_rate_check(model, E, n_list=tuple(range(4, 33)), grid=None, le_steps=100000):
    """Fit the slope of log sup|d(A_n . s_-)| over n against -2 L(B)."""
    n_list = sorted(int(n) for n in n_list)
    if len(n_list) < 2 or n_list[0] < 1:
        raise UsageError("need at least two positive n values")
    grid = grid or uniform_grid(model.dim, 512)
    prof = contraction_profile(model, E, grid, n_list[-1])
    y = np.log([prof[n - 1][1] for n in n_list])
    slope = float(np.polyfit(n_list, y, 1)[0])
    le_b = lyapunov(model, "B", E, n=le_steps).value
    expected = -2.0 * le_b
    return {"energy": float(np.real(E)), "slope": slope, "le_B": le_b, "expected": expected,
            "relative_deviation": abs(slope - expected) / abs(expected)}


# ---------------------------------------------------------------------------
# persistence


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def persist(result, path):
    """Write ``path`` (CSV, rows sorted by energy) and ``path`` with .summary.json."""
    rows = sorted(result.rows, key=lambda r: r.energy)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            c = r.certificate
            w.writerow([_fmt(r.energy), c.status.short, _fmt(c.N), _fmt(c.contraction_sup),
                        _fmt(c.transversality_min), _fmt(c.kernel_clearance),
                        _fmt(c.lambda_gap), _fmt(r.le_A), _fmt(r.le_B), _fmt(r.dist_trunc)])
    with open(summary_path(path), "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def summary_path(path):
    root, _ = os.path.splitext(path)
    return root + ".summary.json"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def load(path):
    """Rows of a persisted scan as dicts of floats (status stays a string)."""
    out = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k in CSV_COLUMNS:
                v = rec[k]
                if k == "status":
                    row[k] = v
                elif k == "N":
                    row[k] = int(v) if v else None
                else:
                    row[k] = float(v)
            out.append(row)
    return out
