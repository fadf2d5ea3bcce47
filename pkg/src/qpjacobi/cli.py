"""Command-line front end: ``qpjacobi {validate,scan,certify,le-curve,spectrum}``."""
import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import plotting
from .cocycle import le_relation_report, lyapunov
from .domination import MARGIN, N_MAX, certify
from .exceptions import ModelParseError, ModelValidationError, QPJError, UsageError
from .model import GOLDEN, PRESETS, mean_log_abs, preset, uniform_grid, zeros_on_circle
from .modelfile import load_model
from .spectrum import ScanConfig, energy_grid, persist, scan, truncation_spectrum

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _int_list(text):
    try:
        vals = tuple(int(t) for t in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser():
    p = _Parser(prog="qpjacobi", description="Spectra of quasi-periodic Jacobi operators "
                                             "via dominated splittings.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model_opts(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--model", help="model file")
        g.add_argument("--preset", choices=PRESETS + ("amo",), help="built-in model")
        sp.add_argument("--lambda", dest="lam", type=float, default=0.5,
                        help="coupling of the preset potential (default 0.5)")
        sp.add_argument("--alpha", type=float, default=GOLDEN, help="preset frequency")

    def window_opts(sp):
        sp.add_argument("--emin", type=float, default=None)
        sp.add_argument("--emax", type=float, default=None)
        sp.add_argument("--step", type=float, default=0.01)

    def run_opts(sp):
        sp.add_argument("--phases", type=int, default=2048, help="phase grid size P")
        sp.add_argument("--nmax", type=int, default=N_MAX)
        sp.add_argument("--margin", type=float, default=MARGIN)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".", help="output directory")

    sp = sub.add_parser("validate", help="check a model and print its invariants")
    model_opts(sp)

    sp = sub.add_parser("scan", help="classify an energy window")
    model_opts(sp)
    window_opts(sp)
    run_opts(sp)
    sp.add_argument("--trunc-sizes", type=_int_list, default=(512, 1024))
    sp.add_argument("--trunc-phases", type=int, default=8)
    sp.add_argument("--le-steps", type=int, default=20000)
    sp.add_argument("--refine", type=float, default=0.1,
                    help="run Green's-function pole searches from energies within this "
                         "distance bound of the spectrum (0 disables)")
    sp.add_argument("--workers", type=int, default=1)

    sp = sub.add_parser("certify", help="certificate for one energy")
    model_opts(sp)
    run_opts(sp)
    sp.add_argument("--energy", "-E", type=float, required=True)
    sp.add_argument("--kind", choices=("A", "A_tilde"), default="A")

    sp = sub.add_parser("le-curve", help="Lyapunov exponents over a window")
    model_opts(sp)
    window_opts(sp)
    sp.add_argument("--le-steps", type=int, default=20000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=".")

    sp = sub.add_parser("spectrum", help="finite-volume eigenvalues")
    model_opts(sp)
    sp.add_argument("--trunc-sizes", type=_int_list, default=(512, 1024))
    sp.add_argument("--trunc-phases", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=".")
    return p


def resolve_model(args):
    if args.model:
        return load_model(args.model)
    return preset(args.preset or "free", lam=args.lam, alpha=args.alpha)


def _window(args, model):
    bound = model.operator_bound() + 1.0
    emin = -bound if args.emin is None else args.emin
    emax = bound if args.emax is None else args.emax
    energy_grid(emin, emax, args.step)  # validates
    return emin, emax


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_validate(args, out=None):
    out = out or sys.stdout
    m = resolve_model(args)
    print(f"model: {m.label}", file=out)
    print(f"alpha = {' '.join(repr(a) for a in m.alpha)} (d = {m.dim})", file=out)
    print("v is real-valued", file=out)
    print("c is not identically zero", file=out)
    if m.dim == 1:
        zs = zeros_on_circle(m.c)
        if zs:
            where = ", ".join(f"{z:.12g}" for z in zs)
            print(f"c has {len(zs)} zero{'s' if len(zs) > 1 else ''} at x = {where}", file=out)
        else:
            print("no zeros of c", file=out)
        mlc = mean_log_abs(m.c, "roots")
    else:
        g = uniform_grid(m.dim, 256)
        print(f"min |c| on a 256^{m.dim} grid: {np.min(np.abs(m.c(g.points))):.3g}", file=out)
        mlc = mean_log_abs(m.c, "quadrature")
    print(f"integral of log|c| = {mlc:.10g}", file=out)
    print(f"||c||_inf = {m.c_norm():.10g}", file=out)
    print(f"||v||_inf = {m.v_norm():.10g}", file=out)
    return EXIT_OK


def cmd_scan(args, out=None):
    out = out or sys.stdout
    m = resolve_model(args)
    emin, emax = _window(args, m)
    cfg = ScanConfig(phases=args.phases, nmax=args.nmax, margin=args.margin,
                     trunc_sizes=args.trunc_sizes, trunc_phases=args.trunc_phases,
                     le_steps=args.le_steps, seed=args.seed, refine=args.refine,
                     workers=args.workers)
    res = scan(m, emin, emax, args.step, cfg)
    d = _outdir(args.out)
    csv_path = os.path.join(d, "scan.csv")
    persist(res, csv_path)
    svg = plotting.band_plot([r.energy for r in res.rows], [r.status.value for r in res.rows],
                             [r.le_B for r in res.rows], args.step, f"{m.label}: DS scan")
    with open(os.path.join(d, "scan.svg"), "w") as fh:
        fh.write(svg)
    s = res.summary
    print(f"model: {m.label}", file=out)
    counts = "  ".join(f"{k}: {v}" for k, v in s["counts"].items())
    print(f"energies: {len(res.rows)} ({s['refined_energies']} from refinement)  {counts}",
          file=out)
    print("Sigma estimate: " + ", ".join(f"[{a:g}, {b:g}]" for a, b in s["sigma_intervals"]),
          file=out)
    print(f"Hausdorff(NO_DS, truncation spectrum) = {s['hausdorff']:.4g}", file=out)
    ct = s["combes_thomas"]
    print(f"Combes-Thomas: {ct['violations']} violations, kappa = {ct['kappa']:.4g}", file=out)
    print(f"wrote {csv_path}", file=out)
    return EXIT_OK


def cmd_certify(args, out=None):
    out = out or sys.stdout
    m = resolve_model(args)
    if args.phases < 1:
        raise UsageError("phases must be positive")
    cert = certify(m, args.energy, args.kind, uniform_grid(m.dim, args.phases), args.nmax,
                   args.margin)
    print(f"model: {m.label}", file=out)
    print(cert.to_record(), file=out)
    if cert.profile:
        print("contraction profile:", file=out)
        print("   N  sup", file=out)
        last = cert.N or len(cert.profile)
        for n, sup in cert.profile[:max(last, 1)]:
            print(f"{n:4d}  {sup:.6g}", file=out)
    return EXIT_OK


def cmd_le_curve(args, out=None):
    out = out or sys.stdout
    m = resolve_model(args)
    emin, emax = _window(args, m)
    energies = energy_grid(emin, emax, args.step)
    kw = dict(n=args.le_steps, seed=args.seed)
    d = _outdir(args.out)
    rows = []
    for E in energies:
        rep = le_relation_report(m, float(E), **kw)
        rows.append((float(E), rep["L_A"].value, rep["L_A_tilde"].value, rep["L_B"].value,
                     rep["mean_log_c"], rep["residual_A_A_tilde"], rep["residual_B"]))
    path = os.path.join(d, "le_curve.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["energy", "L_A", "L_A_tilde", "L_B", "mean_log_c", "residual_A_A_tilde",
                    "residual_B"])
        for r in rows:
            w.writerow([repr(float(t)) for t in r])
    xs = [r[0] for r in rows]
    svg = plotting.line_plot(xs, {"L(A)": [r[1] for r in rows], "L(A~)": [r[2] for r in rows],
                                  "L(B)": [r[3] for r in rows]}, f"{m.label}: Lyapunov exponents",
                             ylabel="L")
    with open(os.path.join(d, "le_curve.svg"), "w") as fh:
        fh.write(svg)
    worst = max(r[5] for r in rows)
    print(f"model: {m.label}", file=out)
    print(f"max |L(A) - L(A~)| = {worst:.3g}", file=out)
    print(f"max |L(B) - L(A) + int log|c|| = {max(r[6] for r in rows):.3g}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


def cmd_spectrum(args, out=None):
    out = out or sys.stdout
    m = resolve_model(args)
    ts = truncation_spectrum(m, args.trunc_sizes, args.trunc_phases, args.seed)
    d = _outdir(args.out)
    path = os.path.join(d, "spectrum.csv")
    with open(path, "w", newline="") as fh:
        fh.write("eigenvalue\n")
        for e in ts.eigenvalues:
            fh.write(f"{float(e)!r}\n")
    with open(os.path.join(d, "spectrum.summary.json"), "w") as fh:
        json.dump({"model": m.label, "sizes": list(ts.sizes), "phases": ts.phases.tolist(),
                   "count": int(ts.eigenvalues.size), "coverage_radius": ts.coverage_radius,
                   "edge_states_discarded": ts.discarded}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"model: {m.label}", file=out)
    print(f"{ts.eigenvalues.size} eigenvalues in [{ts.eigenvalues.min():.6g}, "
          f"{ts.eigenvalues.max():.6g}], coverage radius {ts.coverage_radius:.3g}", file=out)
    print(f"wrote {path}", file=out)
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "scan": cmd_scan, "certify": cmd_certify,
            "le-curve": cmd_le_curve, "spectrum": cmd_spectrum}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, ModelParseError, ModelValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QPJError, ArithmeticError, OSError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
