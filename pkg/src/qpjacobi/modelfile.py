"""Plain-text model files.

::

    # extended Harper-type example
    label = my model
    alpha = 0.6180339887498949
    c: 0 1.0 0.0
    c: 1 1.0 0.0
    v: 1 0.5 0.0
    v: -1 0.5 0.0

``alpha`` lists one frequency per torus dimension. Each ``c:``/``v:`` line is
a frequency vector of d integers followed by the real and imaginary part of
its coefficient; repeated frequencies add up.
"""
import math

from .exceptions import ModelParseError, ModelValidationError
from .model import JacobiModel, TrigPoly


def _number(tok, lineno, what):
    try:
        val = float(tok)
    except ValueError:
        raise ModelParseError(f"{what} {tok!r} is not a number", lineno) from None
    if not math.isfinite(val):
        raise ModelParseError(f"{what} {tok!r} is not finite", lineno)
    return val


def parse_model(text, label=None):
    alpha = None
    name = None
    coefs = {"c": [], "v": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line and line.split(":", 1)[0].strip() in coefs:
            key, rest = line.split(":", 1)
            coefs[key.strip()].append((lineno, rest.split()))
        elif "=" in line:
            key, rest = (s.strip() for s in line.split("=", 1))
            if key == "alpha":
                toks = rest.split()
                if not toks:
                    raise ModelParseError("alpha needs at least one value", lineno)
                if alpha is not None:
                    raise ModelParseError("alpha given twice", lineno)
                alpha = tuple(_number(t, lineno, "alpha component") for t in toks)
            elif key == "label":
                name = rest
            else:
                raise ModelParseError(f"unknown key {key!r}", lineno)
        else:
            raise ModelParseError(f"cannot parse {line!r}", lineno)
    if alpha is None:
        raise ModelParseError("missing 'alpha = ...' line")
    d = len(alpha)
    polys = {}
    for key, lines in coefs.items():
        terms = {}
        for lineno, toks in lines:
            if len(toks) != d + 2:
                raise ModelParseError(
                    f"{key}: expected {d} frequency integers and 2 numbers, got {len(toks)} fields",
                    lineno)
            try:
                k = tuple(int(t) for t in toks[:d])
            except ValueError:
                raise ModelParseError(f"{key}: frequencies must be integers", lineno) from None
            a = complex(_number(toks[d], lineno, "real part"), _number(toks[d + 1], lineno,
                                                                       "imaginary part"))
            terms[k] = terms.get(k, 0) + a
        polys[key] = TrigPoly(terms, d)
    if not coefs["c"]:
        raise ModelParseError("no 'c:' coefficient lines")
    return JacobiModel(alpha, polys["c"], polys["v"], label or name or "model")


def load_model(path):
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_model(text)
    except ModelValidationError as exc:
        raise ModelValidationError(f"{path}: {exc}") from None


def format_model(model):
    """Inverse of :func:`parse_model` (floats written with repr)."""
    lines = [f"label = {model.label}", "alpha = " + " ".join(repr(a) for a in model.alpha)]
    for key, poly in (("c", model.c), ("v", model.v)):
        for k, a in poly.terms.items():
            lines.append(f"{key}: " + " ".join(str(t) for t in k) + f" {a.real!r} {a.imag!r}")
    return "\n".join(lines) + "\n"
