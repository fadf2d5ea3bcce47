"""scikit-learn style wrappers: energies in, spectral labels / exponents out."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .cocycle import CocycleKind, lyapunov
from .domination import MARGIN, N_MAX, Status, certify
from .model import uniform_grid
from .validation import check_energies, check_model, check_positive_int


class DominationClassifier(ClassifierMixin, BaseEstimator):
    """Labels each energy DS, NO_DS or UNDETERMINED for a fixed model.

    Nothing is learned from data; ``fit`` validates the configuration and
    freezes the phase grid.
    """

    def __init__(self, model=None, kind="A", phases=512, nmax=N_MAX, margin=MARGIN):
        self.model = model
        self.kind = kind
        self.phases = phases
        self.nmax = nmax
        self.margin = margin

    def fit(self, X, y=None):
        check_model(self.model)
        check_energies(X)
        check_positive_int("phases", self.phases)
        check_positive_int("nmax", self.nmax)
        self.kind_ = CocycleKind(self.kind).value
        self.grid_ = uniform_grid(self.model.dim, self.phases)
        self.classes_ = np.array([s.value for s in Status])
        self.n_features_in_ = 1
        return self

    def certificates(self, X):
        check_is_fitted(self, "grid_")
        return [certify(self.model, E, self.kind_, self.grid_, self.nmax, self.margin)
                for E in check_energies(X)]

    def predict(self, X):
        return np.array([c.status.value for c in self.certificates(X)])


class LyapunovTransformer(TransformerMixin, BaseEstimator):
    """Maps energies to top Lyapunov exponents of the requested cocycles."""

    def __init__(self, model=None, kinds=("A", "A_tilde", "B"), n=20000, phases=8, seed=0):
        self.model = model
        self.kinds = kinds
        self.n = n
        self.phases = phases
        self.seed = seed

    def fit(self, X=None, y=None):
        check_model(self.model)
        if X is not None:
            check_energies(X)
        check_positive_int("n", self.n)
        check_positive_int("phases", self.phases)
        self.kinds_ = tuple(CocycleKind(k).value for k in self.kinds)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "kinds_")
        E = check_energies(X)
        out = np.empty((len(E), len(self.kinds_)))
        for i, e in enumerate(E):
            for j, k in enumerate(self.kinds_):
                out[i, j] = lyapunov(self.model, k, e, n=self.n, phases=self.phases,
                                     seed=self.seed).value
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "kinds_")
        return np.array([f"L_{k}" for k in self.kinds_], dtype=object)
