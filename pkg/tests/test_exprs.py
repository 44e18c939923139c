import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apmlab.exprs import EvalError, Jet, ParseError, eval_jet, parse_expr

# Golden corpus: expression, point, expected value (computed with math.*).
POINT = np.array([0.4, -0.7, 1.3, 2.1])
CORPUS = [
    ("x1", POINT[0]),
    ("x2", POINT[1]),
    ("3", 3.0),
    ("2.5", 2.5),
    ("1e-3", 1e-3),
    ("-x1", -POINT[0]),
    ("x1 + x2", POINT[0] + POINT[1]),
    ("x1 - x2 - x3", POINT[0] - POINT[1] - POINT[2]),
    ("x1 - (x2 - x3)", POINT[0] - (POINT[1] - POINT[2])),
    ("x1*x2", POINT[0] * POINT[1]),
    ("x1/x3", POINT[0] / POINT[2]),
    ("x1/x3/x4", POINT[0] / POINT[2] / POINT[3]),
    ("x1^2", POINT[0] ** 2),
    ("x1^3", POINT[0] ** 3),
    ("x2^2", POINT[1] ** 2),
    ("x3^-2", POINT[2] ** -2),
    ("-x1^2", -(POINT[0] ** 2)),
    ("(x1 + x2)^2", (POINT[0] + POINT[1]) ** 2),
    ("2*x1^2 - 3*x1 + 1", 2 * POINT[0] ** 2 - 3 * POINT[0] + 1),
    ("exp(x1)", math.exp(POINT[0])),
    ("exp(2*x1)", math.exp(2 * POINT[0])),
    ("sin(x1)", math.sin(POINT[0])),
    ("cos(x2)", math.cos(POINT[1])),
    ("ln(x3)", math.log(POINT[2])),
    ("ln(x3 + 2)", math.log(POINT[2] + 2)),
    ("sin(x1)*x2", math.sin(POINT[0]) * POINT[1]),
    ("cos(x1)^2 + sin(x1)^2", 1.0),
    ("exp(sin(x1))", math.exp(math.sin(POINT[0]))),
    ("x1*x3 + x2*x4", POINT[0] * POINT[2] + POINT[1] * POINT[3]),
    ("exp(x1)*sin(x2) - ln(x4)/x3", math.exp(POINT[0]) * math.sin(POINT[1]) - math.log(POINT[3]) / POINT[2]),
]


def fd_gradient(expr, pt, h=1e-6):
    out = np.zeros(pt.shape[0])
    for i in range(pt.shape[0]):
        e = np.zeros(pt.shape[0])
        e[i] = h
        out[i] = (expr(pt + e) - expr(pt - e)) / (2 * h)
    return out


def fd_hessian(expr, pt, h=1e-5):
    out = np.zeros((pt.shape[0],) * 2)
    for i in range(pt.shape[0]):
        e = np.zeros(pt.shape[0])
        e[i] = h
        out[:, i] = (
            eval_jet(expr, pt + e, 1).grad - eval_jet(expr, pt - e, 1).grad
        ) / (2 * h)
    return out


def test_corpus_has_thirty_expressions():
    assert len(CORPUS) == 30


@pytest.mark.parametrize("src,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_parses_and_evaluates(src, expected):
    expr = parse_expr(src, dim=4)
    assert abs(expr(POINT) - expected) < 1e-12 * max(1.0, abs(expected))


@pytest.mark.parametrize("src,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_jets_match_finite_differences(src, expected):
    expr = parse_expr(src, dim=4)
    jet = eval_jet(expr, POINT, 3)
    grad_fd = fd_gradient(expr, POINT)
    scale = max(1.0, abs(jet.value))
    assert np.abs(jet.grad - grad_fd).max() < 1e-6 * scale
    hess_fd = fd_hessian(expr, POINT)
    assert np.abs(jet.hess - hess_fd).max() < 1e-6 * max(1.0, np.abs(jet.hess).max())


@pytest.mark.parametrize("src,expected", CORPUS, ids=[c[0] for c in CORPUS])
def test_corpus_round_trips_through_printer(src, expected):
    expr = parse_expr(src, dim=4)
    again = parse_expr(str(expr), dim=4)
    assert again == expr
    assert abs(again(POINT) - expr(POINT)) == 0.0


def test_polynomial_jet_values():
    jet = eval_jet(parse_expr("x1^2"), np.array([3.0, 0, 0, 0]), 3)
    assert jet.value == 9.0
    assert np.allclose(jet.grad, [6, 0, 0, 0])
    assert np.allclose(jet.hess, np.diag([2.0, 0, 0, 0]))
    assert np.allclose(jet.third, 0.0)


def test_exponential_jet_at_origin():
    jet = eval_jet(parse_expr("exp(x1)"), np.zeros(4), 3)
    assert jet.value == jet.grad[0] == jet.hess[0, 0] == jet.third[0, 0, 0] == 1.0


def test_mixed_partial_value():
    jet = eval_jet(parse_expr("sin(x1)*x2"), np.array([0.7, 1.3, 0, 0]), 2)
    assert abs(jet.hess[0, 1] - math.cos(0.7)) < 1e-14


def test_third_derivatives_are_symmetric():
    expr = parse_expr("exp(x1)*sin(x2) + ln(x3 + 2)/x4 - (x1 - x2)^3", dim=4)
    jet = eval_jet(expr, np.array([0.3, -0.4, 0.5, 1.2]), 3)
    third = jet.third
    for perm in [(1, 0, 2), (0, 2, 1), (2, 1, 0)]:
        assert np.abs(third - third.transpose(perm)).max() == 0.0


@pytest.mark.parametrize(
    "src,offset",
    [
        ("x1*(x2", 6),
        ("x5 + 1", 0),
        ("foo(x1)", 0),
        ("x1 $ x2", 3),
        ("x1 + ", 5),
        ("x1^x2", 3),
        ("2 ^ 1.5", 4),
        ("(x1))", 4),
    ],
)
def test_parse_errors_carry_positions(src, offset):
    with pytest.raises(ParseError) as err:
        parse_expr(src, dim=4)
    assert err.value.position == offset


def test_empty_source_rejected():
    with pytest.raises(ParseError):
        parse_expr("")
    with pytest.raises(ParseError):
        parse_expr("   ")


def test_eval_domain_errors():
    with pytest.raises(EvalError, match="ln"):
        eval_jet(parse_expr("ln(x1)"), np.array([-1.0, 0, 0, 0]))
    with pytest.raises(EvalError, match="division"):
        eval_jet(parse_expr("1/x1"), np.zeros(4))
    with pytest.raises(EvalError, match="division"):
        eval_jet(parse_expr("x1^-1"), np.zeros(4))


def test_jet_order_limits():
    expr = parse_expr("x1")
    with pytest.raises(ValueError):
        eval_jet(expr, np.zeros(4), order=4)
    jet = eval_jet(expr, np.zeros(4), order=0)
    assert jet.grad is None and jet.order == 0


def test_jet_constant_and_variable_seeds():
    c = Jet.constant(2.5, 4, 3)
    v = Jet.variable(1.5, 2, 4, 3)
    s = c * v
    assert s.value == 3.75
    assert np.allclose(s.grad, [0, 0, 2.5, 0])


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3),
)
def test_division_matches_multiplication_by_reciprocal(seed, denom):
    rng = np.random.default_rng(seed)
    pt = rng.uniform(0.2, 1.5, size=4)
    expr_div = parse_expr(f"(x1 + 2*x2)/{denom!r}", dim=4)
    expr_mul = parse_expr(f"(x1 + 2*x2)*{1.0 / denom!r}", dim=4)
    ja, jb = eval_jet(expr_div, pt, 3), eval_jet(expr_mul, pt, 3)
    assert abs(ja.value - jb.value) < 1e-12 * max(1, abs(ja.value))
    assert np.abs(ja.grad - jb.grad).max() < 1e-12
