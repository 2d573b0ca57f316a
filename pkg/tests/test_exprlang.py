import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equiaffine import exprlang
from equiaffine.errors import ArgumentError, ParseError, UnknownIdentifierError

NAMES = ("x1", "x2", "x3")

CORPUS = [
    "x1", "-x1", "2", "2.5e-3", ".5*x2", "x1 + x2", "x1 - x2 - x3", "x1 - (x2 - x3)",
    "x1*x2/x3", "x1/(x2*x3)", "x1/x2/x3", "-x1^2", "(-x1)^2", "x1^-2", "x1^(-1/2)",
    "2^3^2", "x1^2^-1", "x1^(2+1)", "sin(x1)", "cos(x1 + x2)", "tan(x3)/2",
    "sinh(x1)*cosh(x2)", "tanh(x1 - x2)", "sech(x1)^2", "exp(-x1^2/2)", "log(1 + x1^2)",
    "sqrt(x1^2 + x2^2)", "abs(x1 - x3)", "sign(x2)*x1", "pi*x1", "-(x1 + x2)",
    "--x1", "x1*-x2", "x1 - -x2", "((x1))", "3*(x1 + 2*(x2 - x3))",
    "x1*sin(x2) + x2*cos(x1)", "exp(sin(cos(x1)))", "1/(1 + exp(-x3))", "x1^0.5*x2^1.5",
    "(x1 + x2)^(1/3)", "-x1^-2", "2*pi - x1", "log(exp(x2))",
    "x1*x2*x3 - x1 - x2 - x3 + 1", "sinh(x1)^2 - cosh(x1)^2", "x3/(x1^2 + 1)^2",
    "sqrt(2)*x1*x2", "1e3*x1 + 1E-3*x2", "abs(sin(x1))^3",
]

POINT = [0.37, 1.21, 0.83]


def test_corpus_size():
    assert len(CORPUS) >= 50


@pytest.mark.parametrize("text", CORPUS)
def test_print_parse_round_trip(text):
    node = exprlang.parse(text, 3, NAMES)
    printed = exprlang.to_string(node)
    again = exprlang.parse(printed, 3, NAMES)
    assert again == node
    assert exprlang.to_string(again) == printed
    a = exprlang.evaluate(node, POINT)
    b = exprlang.evaluate(again, POINT)
    assert a == b or (math.isnan(a) and math.isnan(b))


@pytest.mark.parametrize("text,value", [
    ("2^3^2", 512.0), ("-2^2", -4.0), ("(-2)^2", 4.0), ("2*3 + 4", 10.0), ("2 + 3*4", 14.0),
    ("8/4/2", 1.0), ("2^-1", 0.5), ("7 - 2 - 1", 4.0), ("-x1^2", -4.0), ("x1^(1/2)^2", 2.0 ** 0.25),
])
def test_precedence_and_associativity(text, value):
    assert exprlang.evaluate(exprlang.parse(text, 1, ("x1",)), [2.0]) == pytest.approx(value)


@pytest.mark.parametrize("text,offset", [
    ("x1 +", 4), ("x1 * * x2", 5), ("(x1 + x2", 8), ("x1 + foo", 5), ("sin x1", 0),
    ("x1 $ x2", 3), ("x1^x2", 3), ("", 0), ("x1 )", 3), ("ñ + x1", 0), ("x1 + ñ", 5),
])
def test_error_offsets(text, offset):
    with pytest.raises(ParseError) as err:
        exprlang.parse(text, 2, ("x1", "x2"))
    assert err.value.offset == offset
    assert f"offset {offset}" in str(err.value)


def test_offsets_count_utf8_bytes():
    # a no-break space is one character but two bytes
    with pytest.raises(ParseError) as err:
        exprlang.parse("x1 +\u00a0)", 1, ("x1",))
    assert err.value.offset == 6
    with pytest.raises(ParseError) as err:
        exprlang.parse("x1 + é", 1, ("x1",))
    assert err.value.offset == 5


def test_unknown_function_and_variable():
    with pytest.raises(UnknownIdentifierError) as err:
        exprlang.parse("gamma(x1)", 1, ("x1",))
    assert err.value.name == "gamma"
    with pytest.raises(UnknownIdentifierError):
        exprlang.parse("x1 + y", 1, ("x1",))


def test_exponent_must_be_constant():
    with pytest.raises(ParseError):
        exprlang.parse("x1^x1", 1, ("x1",))
    node = exprlang.parse("x1^(2*3 - 4)", 1, ("x1",))
    assert exprlang.to_string(node) == "x1^2"


def test_dimension_mismatch():
    with pytest.raises(ArgumentError):
        exprlang.parse("x1", 2, ("x1",))


@pytest.mark.parametrize("tag,params,point", [
    ("helicoid3", (), [0.4, 1.3, -0.7]),
    ("genhel", ("x1*x2",), [0.2, -0.3, 0.5, 1.0, -2.0]),
    ("gn", (), [0.3, 0.6, 1.0, 2.0, 3.0]),
    ("symdet", (2,), [1.3, 0.2, 0.9]),
    ("symdet", (3,), [1.0, 0.1, 0.2, 0.8, 0.3, 1.1]),
    ("cheng_yau_det", (2,), [1.3, 0.2, 0.9]),
    ("graph", ("x1^4 + x1^2 + x2^2",), [0.3, -0.4, 2.0]),
    ("paraboloid", (2,), [0.3, -0.4, 2.0]),
    ("sphere", (4,), [0.3, -0.4, 2.0, 1.0]),
])
def test_builtin_source_matches_evaluator(tag, params, point):
    fld = exprlang.builtin(tag, *params)
    printed = exprlang.from_expression(fld.source, fld.var_names)
    for order in (0, 2, 4):
        a, b = fld.jet(point, order), printed.jet(point, order)
        np.testing.assert_allclose(a.c, b.c, rtol=1e-12, atol=1e-12)


def test_symdet_idempotents():
    np.testing.assert_array_equal(exprlang.symdet_idempotent(2, 0), [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(exprlang.symdet_idempotent(3, 1), [1.0, 0.0, 0.0, -1.0, 0.0, -1.0])
    with pytest.raises(ArgumentError):
        exprlang.symdet_idempotent(3, 2)
    X = np.array([[1.0, 2.0], [2.0, 5.0]])
    assert exprlang.builtin("symdet", 2).value(exprlang.symdet_coordinates(X)) == pytest.approx(1.0)


def test_unknown_builtin_and_bad_params():
    with pytest.raises(ArgumentError):
        exprlang.builtin("nosuch")
    with pytest.raises(ArgumentError):
        exprlang.builtin("genhel", "x3")  # Q may only depend on the base variables
    with pytest.raises(ArgumentError):
        exprlang.builtin("symdet", 7)


def test_infer_var_names():
    assert exprlang.infer_var_names("x1^2*x3 + sin(x2)*pi") == ("x1", "x2", "x3")
    assert exprlang.infer_var_names("x3") == ("x1", "x2", "x3")
    assert exprlang.infer_var_names("u*sin(t) + v") == ("t", "u", "v")
    assert exprlang.infer_var_names("2") == ("x1",)


# random ASTs for the round trip

_leaf = st.one_of(
    st.sampled_from(NAMES),
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(lambda v: repr(round(v, 4))),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/"), children).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        st.tuples(st.sampled_from(sorted(exprlang.FUNCTIONS)), children).map(lambda t: f"{t[0]}({t[1]})"),
        children.map(lambda c: f"-({c})"),
        st.tuples(children, st.integers(-3, 4)).map(lambda t: f"({t[0]})^({t[1]})"),
    )


@settings(max_examples=200, deadline=None)
@given(st.recursive(_leaf, _combine, max_leaves=12))
def test_random_round_trip(text):
    node = exprlang.parse(text, 3, NAMES)
    printed = exprlang.to_string(node)
    assert exprlang.parse(printed, 3, NAMES) == node
