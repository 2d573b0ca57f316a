import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from equiaffine.estimators import AffineNormalFlow, LevelSetInvariants


def test_invariant_features_on_helicoid():
    X = np.array([[0.0, 1.0, 1.0], [0.3, 1.0, -0.5]])
    est = LevelSetInvariants(features=("Ucal", "kappa_eq", "H"))
    out = est.fit_transform(X)
    np.testing.assert_allclose(out, [[-1, 0, 0], [-1, 0, 0]], atol=1e-12)
    assert list(est.get_feature_names_out()) == ["Ucal", "kappa_eq", "H"]


def test_degenerate_and_critical_rows_are_nan():
    X = np.array([[1.0, 1, 1, 1, 1], [0.0, 0, 0, 0, 0]])
    out = LevelSetInvariants(builtin=None, expr="x1^2*x3 + x1*x2*x4 + x2^2*x5",
                             features=("Ucal", "kappa_eq")).fit_transform(X)
    assert out[0, 0] == pytest.approx(0.0, abs=1e-14) and math.isnan(out[0, 1])
    assert np.isnan(out[1]).all()


def test_validation():
    with pytest.raises(ValueError):
        LevelSetInvariants(features=("nope",)).fit(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        LevelSetInvariants().fit(np.zeros((1, 4)))
    with pytest.raises(ValueError):
        LevelSetInvariants(builtin="helicoid3", expr="x1").fit(np.zeros((1, 1)))
    with pytest.raises(NotFittedError):
        LevelSetInvariants().transform(np.zeros((1, 3)))
    est = LevelSetInvariants().fit(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        est.transform(np.zeros((1, 2)))


def test_params_round_trip():
    est = LevelSetInvariants(builtin="symdet", params=(2,), features=("kappa_eq",))
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    X = np.array([[1.0, 0.0, 1.0]])
    assert twin.fit_transform(X)[0, 0] == pytest.approx(2 ** -0.75)


def test_flow_then_invariants_pipeline():
    # along the helicoid flow F drops at unit speed, so after t = 0.5 it is F0 - 0.5
    X = np.array([[0.0, 1.0, 0.0], [0.4, -0.5, 1.0]])
    pipe = make_pipeline(AffineNormalFlow(t_end=0.5, steps=20), LevelSetInvariants(features=("F",)))
    out = pipe.fit_transform(X)
    F0 = X[:, 1] * np.sin(X[:, 0]) + X[:, 2] * np.cos(X[:, 0])
    np.testing.assert_allclose(out[:, 0], F0 - 0.5, atol=1e-12)


def test_flow_reports_rejected_starts():
    est = AffineNormalFlow(builtin="gn", t_end=0.1, steps=5)
    out = est.fit_transform(np.ones((1, 5)))
    assert np.isnan(out).all() and est.reasons_ == ["DegenerateError"]
    with pytest.raises(ValueError):
        AffineNormalFlow(steps=0).fit(np.zeros((1, 3)))
