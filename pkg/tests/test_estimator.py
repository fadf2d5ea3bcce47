import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

import oracles
from qpjacobi import DominationClassifier, LyapunovTransformer
from qpjacobi.exceptions import UsageError
from qpjacobi.model import preset

FREE = preset("free")


def test_classifier_predicts_labels():
    clf = DominationClassifier(FREE, phases=64).fit([[3.0], [0.0]])
    np.testing.assert_array_equal(clf.predict([[3.0], [0.0], [-3.0]]), ["DS", "NO_DS", "DS"])
    assert set(clf.classes_) == {"DS", "NO_DS", "UNDETERMINED"}
    cert = clf.certificates(np.array([3.0]))[0]
    assert cert.N == 1


def test_classifier_params_and_clone():
    clf = DominationClassifier(FREE, phases=32, margin=0.1)
    assert clf.get_params()["margin"] == 0.1
    other = clone(clf).set_params(phases=16)
    assert other.phases == 16 and clf.phases == 32


def test_classifier_requires_fit_and_valid_config():
    with pytest.raises(NotFittedError):
        DominationClassifier(FREE).predict([[3.0]])
    with pytest.raises(UsageError):
        DominationClassifier(None).fit([[3.0]])
    with pytest.raises(UsageError):
        DominationClassifier(FREE, phases=0).fit([[3.0]])
    with pytest.raises((UsageError, ValueError)):
        DominationClassifier(FREE, kind="C").fit([[3.0]])


def test_score_against_known_labels():
    X = np.array([[-3.0], [0.5], [3.0]])
    y = np.array(["DS", "NO_DS", "DS"])
    assert DominationClassifier(FREE, phases=64).fit(X, y).score(X, y) == 1.0


def test_lyapunov_transformer():
    tr = LyapunovTransformer(FREE, n=100000)
    out = tr.fit_transform([[3.0]])
    assert out.shape == (1, 3)
    np.testing.assert_allclose(out[0], oracles.L_FREE_3, atol=1e-5)
    assert list(tr.get_feature_names_out()) == ["L_A", "L_A_tilde", "L_B"]


def test_transformer_in_pipeline():
    pipe = make_pipeline(LyapunovTransformer(FREE, kinds=("B",), n=5000))
    out = pipe.fit_transform(np.array([[0.0], [3.0]]))
    assert out.shape == (2, 1) and abs(out[0, 0]) < 1e-3


def test_energy_validation():
    tr = LyapunovTransformer(FREE).fit()
    with pytest.raises(ValueError):
        tr.transform([[np.nan]])
