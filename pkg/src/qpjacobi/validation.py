"""Argument checks shared by the estimator wrappers and the CLI."""
import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import UsageError
from .model import JacobiModel


def check_model(model):
    if not isinstance(model, JacobiModel):
        raise UsageError(f"expected a JacobiModel, got {type(model).__name__}")
    return model


def check_positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 1:
        raise UsageError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def check_energy(E, real=False):
    try:
        z = complex(E)
    except (TypeError, ValueError):
        raise UsageError(f"energy {E!r} is not a number") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise UsageError("energy must be finite")
    if real and z.imag != 0:
        raise UsageError("a real energy is required here")
    return z.real if real else z


def check_energies(X):
    """Energies as a 1-d float array from a column vector or a flat list."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 1:
        raise UsageError(f"expected one energy per row, got {X.shape[1]} columns")
    return X[:, 0]
