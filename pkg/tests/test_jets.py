import itertools
import math

import numpy as np
import pytest
import sympy as sp

from equiaffine import exprlang, jets
from equiaffine.errors import ArgumentError, DomainError

X = sp.symbols("x1:4")

# expression text in both the package grammar and sympy syntax
CASES = [
    ("x1*sin(x2) + x2*cos(x1)", [0.3, -0.7, 1.1]),
    ("exp(x1*x2)/(1 + x3^2)", [0.2, 0.5, -0.4]),
    ("log(x1^2 + x2^2 + 1)*tanh(x3)", [0.9, -0.2, 0.6]),
    ("sqrt(x1 + 2)*sinh(x2) - cosh(x3*x1)", [0.4, 0.1, -1.3]),
    ("tan(x1/3)*x2^3 - x3^4 + x1*x2*x3", [0.5, -1.2, 0.8]),
    ("sech(x2)^2*x1 + x3^(-2)", [1.5, 0.3, 0.7]),
    ("(x1 + x2 + x3)^(5/2)", [0.4, 0.6, 0.9]),
]


def _sympy(text):
    return sp.sympify(text.replace("^", "**"), locals={"x1": X[0], "x2": X[1], "x3": X[2], "sech": sp.sech})


@pytest.mark.parametrize("text,point", CASES)
def test_derivatives_match_symbolic_oracle(text, point):
    fld = exprlang.from_expression(text, exprlang.xnames(3))
    J = fld.jet(point, 4)
    expr = _sympy(text)
    subs = dict(zip(X, point))
    for k in range(5):
        T = J.derivative_tensor(k)
        for idx in itertools.product(range(3), repeat=k):
            d = sp.diff(expr, *[X[i] for i in idx]) if k else expr
            want = float(d.evalf(subs=subs, n=30))
            got = float(T[idx]) if k else float(T)
            assert got == pytest.approx(want, rel=1e-11, abs=1e-11), (k, idx)


def test_extract_uses_multi_index_factorials():
    fld = exprlang.from_expression("x1^3*x2^2", ("x1", "x2"))
    J = fld.jet([1.0, 2.0], 4)
    # d^3/dx1^2 dx2 of x1^3 x2^2 = 12 x1 x2
    assert jets.extract(J, (2, 1)) == pytest.approx(24.0)
    assert jets.extract(J, (0, 0)) == pytest.approx(4.0)
    with pytest.raises(ArgumentError):
        jets.extract(J, (3, 2))


def test_partial_lowers_order():
    fld = exprlang.from_expression("sin(x1)*x2^2", ("x1", "x2"))
    J = fld.jet([0.4, 1.5], 3)
    P = J.partial(0)
    assert P.order == 2
    assert P.value == pytest.approx(math.cos(0.4) * 1.5**2)
    assert P.hessian()[1, 1] == pytest.approx(2 * math.cos(0.4))


def test_hessian_is_symmetric():
    fld = exprlang.from_expression("exp(x1*x2 - x3)*x1", exprlang.xnames(3))
    H = fld.jet([0.1, 0.2, 0.3], 2).hessian()
    np.testing.assert_array_equal(H, H.T)


def test_order_zero_jet_is_value():
    fld = exprlang.from_expression("x1 + 2*x2", ("x1", "x2"))
    J = fld.jet([1.0, 3.0], 0)
    assert J.order == 0 and J.value == 7.0
    with pytest.raises(ArgumentError):
        J.partial(0)


def test_gradient_matches_finite_differences():
    fld = exprlang.from_expression("x1*exp(x2) - sin(x1*x3)", exprlang.xnames(3))
    p = np.array([0.3, -0.2, 0.9])
    g = fld.jet(p, 1).gradient()
    h = 1e-6
    fd = [(fld.value(p + h * e) - fld.value(p - h * e)) / (2 * h) for e in np.eye(3)]
    np.testing.assert_allclose(g, fd, rtol=1e-8)


@pytest.mark.parametrize("text,point", [("log(x1)", [-1.0]), ("sqrt(x1)", [-0.5]), ("1/x1", [0.0]),
                                        ("x1^(1/2)", [-2.0])])
def test_domain_errors(text, point):
    fld = exprlang.from_expression(text, ("x1",))
    with pytest.raises(DomainError):
        fld.jet(point, 2)


def test_order_above_max_rejected():
    fld = exprlang.from_expression("x1", ("x1",))
    with pytest.raises(ArgumentError):
        fld.jet([0.0], jets.MAX_ORDER + 1)


def test_lift_and_gradients_round_trip():
    vals = np.array([[1.0, 2.0], [3.0, 4.0]])
    der = np.arange(8.0).reshape(2, 2, 2)
    arr = jets.lift(vals, der)
    np.testing.assert_array_equal(jets.constant_parts(arr), vals)
    np.testing.assert_array_equal(jets.gradients(arr), der)


def test_arithmetic_consistent_with_floats():
    a, b = jets.seed_all([0.7, -0.4], 3)
    expr = (a * b + a / (b - 2.0)) ** 2 - jets.exp(a) * 3.0
    x, y = 0.7, -0.4
    assert expr.value == pytest.approx((x * y + x / (y - 2.0)) ** 2 - math.exp(x) * 3.0)
