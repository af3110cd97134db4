import math

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from darcysplit.errors import EvalError, ParseError, UnboundIdentifierError
from darcysplit.expr import CoefficientField, divergence_fd, eval_field, evaluate, free_identifiers, parse, to_string
from darcysplit.verify import annulus_fields, square_exact_min_q, square_manufactured_fields


@pytest.mark.parametrize(
    "text, point, expected",
    [
        ("2+3*x", (1, 0), 5.0),
        ("(r-5)^2/r", (3, 4), 0.0),
        ("-2^2", (0, 0), -4.0),
        ("2^3^2", (0, 0), 512.0),
        ("8/4/2", (0, 0), 1.0),
        ("1-2-3", (0, 0), -4.0),
        ("pow(x, 2) + max(y, -1)", (3, -5), 8.0),
        ("exp(0) + log(1) + sqrt(4) + abs(-1) + cos(0) + sin(0)", (0, 0), 5.0),
        ("1.5e1 + .5", (0, 0), 15.5),
    ],
)
def test_evaluation_examples(text, point, expected):
    assert evaluate(parse(text), *point) == pytest.approx(expected, abs=1e-15)


def test_annulus_forcing_value():
    f, _, _ = annulus_fields(1.0)
    assert eval_field(f, (4.0, 0.0)) == pytest.approx((0.25, 0.0))


def test_exact_minimum_against_mpmath():
    mpmath.mp.dps = 40
    exact = mpmath.e ** mpmath.mpf("-0.3403125")
    assert square_exact_min_q() == pytest.approx(float(exact), rel=1e-15)
    assert abs(square_exact_min_q() - 0.7115479) < 1e-7


def test_parse_errors_carry_offset():
    with pytest.raises(ParseError) as exc:
        parse("1 + $")
    assert exc.value.offset == 4
    for bad in ("(1+2", "1+", "sin(1, 2)", "foo(1)", "2 3", ""):
        with pytest.raises(ParseError):
            parse(bad)


def test_domain_errors():
    for text in ("1/x", "log(x)", "sqrt(x - 1)", "pow(x - 1, 0.5)"):
        with pytest.raises(EvalError):
            evaluate(parse(text), np.array([0.0]), np.array([0.0]))
    with pytest.raises(UnboundIdentifierError):
        evaluate(parse("kappa*x"), 1.0, 1.0)
    with pytest.raises(EvalError):
        evaluate(parse("exp(x)"), 1000.0, 0.0)


def test_free_identifiers_and_unbound():
    assert free_identifiers(parse("kappa*x + g*nx")) == {"kappa", "x", "g", "nx"}
    field = CoefficientField.scalar("kappa*x + nx", kappa=1.0)
    assert field.unbound() == ["nx"]
    assert field.unbound(boundary=True) == []


def test_boundary_normal_variables():
    g = CoefficientField.scalar("2*nx - ny")
    normal = np.array([[0.6], [0.8]])
    assert g(np.array([1.0]), np.array([0.0]), normal=normal)[0] == pytest.approx(0.4)


def test_vectorised_shapes():
    f = CoefficientField.vector("x", "1")
    x = np.zeros((3, 4))
    assert f(x, x).shape == (2, 3, 4)


_leaf = st.one_of(
    st.floats(min_value=0, max_value=1e6, allow_nan=False).map(lambda v: repr(v)),
    st.sampled_from(["x", "y", "r", "k"]),
)


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from("+-*/^"), children).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        children.map(lambda c: f"-({c})"),
        st.tuples(st.sampled_from(["exp", "sin", "abs"]), children).map(lambda t: f"{t[0]}({t[1]})"),
        st.tuples(children, children).map(lambda t: f"max({t[0]}, {t[1]})"),
    )


@settings(max_examples=200, deadline=None)
@given(st.recursive(_leaf, _combine, max_leaves=12))
def test_print_parse_round_trip(text):
    tree = parse(text)
    assert parse(to_string(tree)) == tree


def test_fd_divergence_is_second_order():
    f = CoefficientField.vector("exp(x)*sin(y)", "x*y^3")
    exact = math.exp(0.3) * math.sin(0.7) + 3 * 0.3 * 0.7**2
    steps = np.array([1e-2, 5e-3, 2.5e-3])
    errs = [abs(divergence_fd(f, (0.3, 0.7), h) - exact) for h in steps]
    slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)


def _sympy_field(field, symbols):
    x, y, nx, ny = symbols
    env = {"x": x, "y": y, "r": sympy.sqrt(x**2 + y**2), "nx": nx, "ny": ny}
    env.update({k: sympy.nsimplify(v) for k, v in field.params.items()})
    return [sympy.sympify(src.replace("^", "**"), locals=env) for src in field.sources]


def test_divergences_match_symbolic():
    sym = sympy.symbols("x y nx ny", real=True)
    x, y = sym[:2]
    points = [(2.0, 1.0), (-1.5, 2.2), (0.3, -3.1)]
    f, divf, _ = annulus_fields(0.6)
    fx, fy = _sympy_field(f, sym)
    (d,) = _sympy_field(divf, sym)
    residual = sympy.diff(fx, x) + sympy.diff(fy, y) - d
    for px, py in points:
        assert abs(float(residual.subs({x: px, y: py}))) < 1e-12

    f, divf, _, exact, _ = square_manufactured_fields()
    fx, fy = _sympy_field(f, sym)
    (d,) = _sympy_field(divf, sym)
    ux, uy = _sympy_field(exact.u, sym)
    residual = sympy.diff(fx, x) + sympy.diff(fy, y) - d
    div_u = sympy.simplify(sympy.diff(ux, x) + sympy.diff(uy, y))
    assert div_u == 0
    for px, py in [(0.3, 0.5), (-0.6, 0.2), (0.15, -0.4)]:
        val = float(residual.subs({x: px, y: py}))
        scale = float(d.subs({x: px, y: py}))
        assert abs(val) <= 1e-12 * max(1.0, abs(scale))
