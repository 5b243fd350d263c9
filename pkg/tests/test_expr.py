import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colombeau.errors import EvaluationError, ExpressionSyntaxError
from colombeau.expr import parse


def test_arithmetic_and_functions():
    assert parse("x*y", 2)(x=2.0, y=3.0) == 6.0
    assert parse("abs(x)+sqrt(4)+log(exp(1))+pi")(x=-1.0) == pytest.approx(4 + np.pi)
    assert parse("2^3^2")() == 512  # right associative


def test_japanese_bracket():
    assert parse("<xi>^2")(xi=3.0) == pytest.approx(10.0)
    assert parse("jb(x)")(x=3.0) == pytest.approx(np.sqrt(10))


def test_imaginary_unit():
    assert parse("i*xi")(xi=2.0) == 2j


def test_cutoff_and_bump():
    c = parse("cutoff(x, 1)")(x=np.array([0.0, 0.5, 1.0, 2.0]))
    assert np.allclose(c, [1, 1, 0, 0])
    b = parse("bump(x)")(x=np.array([0.0, 0.5, 1.0]))
    assert np.allclose(b, [np.exp(-1), np.exp(-1 / 0.75), 0.0])


def test_broadcasting():
    out = parse("x + eps")(x=np.zeros((3, 4)), eps=0.5)
    assert out.shape == (3, 4) and np.all(out == 0.5)


def test_polynomial_detection():
    e = parse("x^2*xi + sin(x)")
    assert e.is_polynomial_in("xi")
    assert not e.is_polynomial_in("x")
    assert e.free == {"x", "xi"}
    assert e.depends_on("x") and not e.depends_on("eps")


def test_diff():
    e = parse("x^2*xi + sin(x)")
    assert e.diff("x", 2)(x=0.3, xi=2.0) == pytest.approx(4 - np.sin(0.3))
    assert e.diff() is e


def test_syntax_error_position():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse("x + * 2")
    assert info.value.position == 4


@pytest.mark.parametrize("text", ["", "x +", "sin(", "foo(x)", "(x", "x ) "])
def test_malformed(text):
    with pytest.raises(ExpressionSyntaxError):
        parse(text)


def test_evaluate_checked_reports_location():
    with pytest.raises(EvaluationError) as info:
        parse("1/x").evaluate_checked(x=np.array([0.0, 1.0]))
    assert info.value.location == {"x": 0.0}


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_matches_python_arithmetic(a, b):
    e = parse("x*x - 3*x*y + y/2 - (x - y)")
    assert e(x=a, y=b) == pytest.approx(a * a - 3 * a * b + b / 2 - (a - b), rel=1e-12, abs=1e-9)
