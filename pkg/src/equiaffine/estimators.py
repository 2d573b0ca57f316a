"""scikit-learn wrappers: points in, invariant features or flowed points out.

Both transformers are stateless apart from the compiled field, so ``fit``
only validates the configuration and the input width.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import exprlang, flow, invariants
from .errors import CriticalPointError, EquiaffineError

SCALAR_FEATURES = ("F", "H", "Ucal", "kappa_eq", "gauss_kronecker")


def _make_field(builtin, params, expr, var_names):
    if (builtin is None) == (expr is None):
        raise ValueError("set exactly one of builtin or expr")
    if expr is not None:
        return exprlang.from_expression(expr, tuple(var_names or exprlang.infer_var_names(expr)))
    return exprlang.builtin(builtin, *params)


class LevelSetInvariants(BaseEstimator, TransformerMixin):
    """Scalar equiaffine invariants of the level set through each sample.

    Rows at critical points are NaN; rows at degenerate points keep F, H and
    Ucal and are NaN elsewhere.
    """

    def __init__(self, builtin="helicoid3", params=(), expr=None, var_names=None,
                 features=("Ucal", "kappa_eq"), tol_regular=invariants.TOL_REGULAR,
                 tol_nondegen=invariants.TOL_NONDEGEN):
        self.builtin = builtin
        self.params = params
        self.expr = expr
        self.var_names = var_names
        self.features = features
        self.tol_regular = tol_regular
        self.tol_nondegen = tol_nondegen

    def fit(self, X, y=None):
        bad = [f for f in self.features if f not in SCALAR_FEATURES]
        if bad:
            raise ValueError(f"unknown features {bad}; choose from {SCALAR_FEATURES}")
        self.field_ = _make_field(self.builtin, self.params, self.expr, self.var_names)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.field_.dim:
            raise ValueError(f"X has {X.shape[1]} columns, the field has {self.field_.dim}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "field_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        out = np.full((X.shape[0], len(self.features)), np.nan)
        for i, p in enumerate(X):
            try:
                rec = invariants.analyze(self.field_, p, self.tol_regular, self.tol_nondegen).to_dict()
            except CriticalPointError:
                continue
            out[i] = [np.nan if rec[f] is None else rec[f] for f in self.features]
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.features, dtype=object)


class AffineNormalFlow(BaseEstimator, TransformerMixin):
    """Move each sample along the affine normal flow for time ``t_end``.

    Samples whose trajectory stops early (degenerate level set, critical
    point, domain exit) map to NaN rows; ``reasons_`` keeps the codes of the
    last transform.
    """

    def __init__(self, builtin="helicoid3", params=(), expr=None, var_names=None,
                 t_end=1.0, steps=100, reverse=False):
        self.builtin = builtin
        self.params = params
        self.expr = expr
        self.var_names = var_names
        self.t_end = t_end
        self.steps = steps
        self.reverse = reverse

    def fit(self, X, y=None):
        if self.steps < 1 or self.t_end < 0:
            raise ValueError("steps must be positive and t_end nonnegative")
        self.field_ = _make_field(self.builtin, self.params, self.expr, self.var_names)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.field_.dim:
            raise ValueError(f"X has {X.shape[1]} columns, the field has {self.field_.dim}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "field_")
        X = check_array(X, dtype=float)
        out = np.full_like(X, np.nan)
        reasons = []
        for i, p in enumerate(X):
            try:
                tr = flow.integrate(self.field_, p, self.t_end, self.steps,
                                    reverse=self.reverse, error_estimate=False)
            except EquiaffineError as exc:  # start point rejected
                reasons.append(type(exc).__name__)
                continue
            reasons.append(tr.reason)
            if tr.completed:
                out[i] = tr.end
        self.reasons_ = reasons
        return out
