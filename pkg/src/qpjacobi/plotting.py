"""Self-contained SVG output. Numbers are formatted with fixed precision so the
files are byte-identical for identical input."""
import math

W, H = 720, 360
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _f(x):
    return f"{x:.2f}"


def _esc(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


class _Frame:
    def __init__(self, xmin, xmax, ymin, ymax):
        if xmax <= xmin:
            xmax = xmin + 1.0
        if ymax <= ymin:
            ymax = ymin + 1.0
        self.xmin, self.xmax, self.ymin, self.ymax = xmin, xmax, ymin, ymax

    def x(self, v):
        return PAD_L + (v - self.xmin) / (self.xmax - self.xmin) * (W - PAD_L - PAD_R)

    def y(self, v):
        return H - PAD_B - (v - self.ymin) / (self.ymax - self.ymin) * (H - PAD_T - PAD_B)


def _ticks(lo, hi, n=6):
    span = hi - lo
    if span <= 0 or not math.isfinite(span):
        return [lo]
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * span:
        out.append(round(t, 10) + 0.0)
        t += step
    return out


def _axes(fr, xlabel, ylabel, title):
    parts = [
        f'<line x1="{_f(PAD_L)}" y1="{_f(H - PAD_B)}" x2="{_f(W - PAD_R)}" y2="{_f(H - PAD_B)}" '
        'stroke="black"/>',
        f'<line x1="{_f(PAD_L)}" y1="{_f(PAD_T)}" x2="{_f(PAD_L)}" y2="{_f(H - PAD_B)}" '
        'stroke="black"/>',
    ]
    for t in _ticks(fr.xmin, fr.xmax):
        parts.append(f'<text x="{_f(fr.x(t))}" y="{_f(H - PAD_B + 16)}" font-size="11" '
                     f'text-anchor="middle">{t:g}</text>')
    for t in _ticks(fr.ymin, fr.ymax, 4):
        parts.append(f'<text x="{_f(PAD_L - 6)}" y="{_f(fr.y(t) + 4)}" font-size="11" '
                     f'text-anchor="end">{t:g}</text>')
    parts.append(f'<text x="{_f((PAD_L + W - PAD_R) / 2)}" y="{_f(H - 12)}" font-size="12" '
                 f'text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append(f'<text x="14" y="{_f((PAD_T + H - PAD_B) / 2)}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 14 {_f((PAD_T + H - PAD_B) / 2)})">'
                 f'{_esc(ylabel)}</text>')
    parts.append(f'<text x="{_f(W / 2)}" y="18" font-size="13" text-anchor="middle">'
                 f'{_esc(title)}</text>')
    return parts


def _doc(parts):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}">\n<rect width="{W}" height="{H}" fill="white"/>\n')
    return head + "\n".join(parts) + "\n</svg>\n"


def _polyline(fr, xs, ys, color):
    pts = [(x, y) for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        return ""
    coords = " ".join(f"{_f(fr.x(x))},{_f(fr.y(y))}" for x, y in pts)
    return f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def band_plot(energies, statuses, le_b, step, title="scan"):
    """Sigma estimate as bars, DS energies shaded, L(B) overlaid."""
    if not energies:
        return _doc(_axes(_Frame(0, 1, 0, 1), "E", "L(B)", title))
    lo, hi = min(energies), max(energies)
    finite = [v for v in le_b if math.isfinite(v)]
    ymax = max(finite + [1e-3]) * 1.1
    fr = _Frame(lo - step / 2, hi + step / 2, 0.0, ymax)
    parts = []
    half = step / 2
    fills = {"DS": "#d8ecd8", "UNDETERMINED": "#eeeeee"}
    for E, s in zip(energies, statuses):
        if s in fills:
            x0, x1 = fr.x(E - half), fr.x(E + half)
            parts.append(f'<rect x="{_f(x0)}" y="{_f(PAD_T)}" width="{_f(x1 - x0)}" '
                         f'height="{_f(H - PAD_T - PAD_B)}" fill="{fills[s]}"/>')
    parts += _axes(fr, "E", "L(B)", title)
    run = None
    bars = []
    for E, s in zip(energies, statuses):
        if s == "NO_DS":
            run = (run[0], E) if run else (E, E)
        elif run:
            bars.append(run)
            run = None
    if run:
        bars.append(run)
    yb = H - PAD_B - 6
    for a, b in bars:
        parts.append(f'<line x1="{_f(fr.x(a - half))}" y1="{_f(yb)}" x2="{_f(fr.x(b + half))}" '
                     f'y2="{_f(yb)}" stroke="black" stroke-width="6"/>')
    parts.append(_polyline(fr, energies, le_b, COLORS[0]))
    return _doc(parts)


def line_plot(xs, series, title="", xlabel="E", ylabel=""):
    """Several named curves over a common x grid."""
    vals = [v for ys in series.values() for v in ys if math.isfinite(v)]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    pad = 0.05 * (hi - lo or 1.0)
    fr = _Frame(min(xs), max(xs), lo - pad, hi + pad) if xs else _Frame(0, 1, 0, 1)
    parts = _axes(fr, xlabel, ylabel, title)
    for i, (name, ys) in enumerate(series.items()):
        color = COLORS[i % len(COLORS)]
        parts.append(_polyline(fr, xs, ys, color))
        parts.append(f'<text x="{_f(W - PAD_R - 110)}" y="{_f(PAD_T + 14 + 14 * i)}" font-size="11" '
                     f'fill="{color}">{_esc(name)}</text>')
    return _doc(parts)
