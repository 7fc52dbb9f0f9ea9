import pytest

from polyabs import formula as F
from polyabs.formula import eval_formula, free_vars
from polyabs.parser import ParseError, parse_formula, parse_term


def test_terms():
    t = parse_term("2*x + y - 3")
    assert t == F.var("x").scale(2) + F.var("y") - F.const(3)
    assert parse_term("4").is_const()


def test_precedence_not_and_or():
    f = parse_formula("not x = 0 and y = 0 or z = 0")
    # ((not (x=0)) and (y=0)) or (z=0)
    assert isinstance(f, F.Or)
    left = f.subs[0]
    assert isinstance(left, F.And)
    assert isinstance(left.subs[0], F.Not)


def test_implication_right_associative():
    f = parse_formula("x = 0 => y = 0 => z = 0")
    assert isinstance(f, F.Implies)
    assert isinstance(f.rhs, F.Implies)


def test_iff_binds_loosest():
    f = parse_formula("x = 0 => y = 0 <=> z = 0")
    assert isinstance(f, F.Iff)
    assert isinstance(f.lhs, F.Implies)


def test_quantifier_scope_extends_right():
    f = parse_formula("exists k1 k2. k1 = 1 and k2 = 2")
    assert isinstance(f, F.Exists)
    assert f.names == ("k1", "k2")
    assert isinstance(f.body, F.And)
    assert free_vars(f) == set()


def test_parenthesized_formulas():
    f = parse_formula("(x = 0 or y = 0) and z = 0")
    assert isinstance(f, F.And)
    assert isinstance(f.subs[0], F.Or)


def test_literals_and_comparisons():
    assert parse_formula("true") == F.TRUE
    assert parse_formula("false") == F.FALSE
    for op in ("=", "<=", "<", ">=", ">"):
        f = parse_formula(f"x {op} 1")
        assert isinstance(f, F.Cmp)
        assert f.op == op


def test_comments_and_whitespace():
    f = parse_formula("""
        x = 1   # pinned
        and y = 2
    """)
    assert eval_formula(f, {"x": 1, "y": 2})


def test_error_positions():
    with pytest.raises(ParseError) as err:
        parse_formula("x = ")
    assert "line 1" in str(err.value)
    with pytest.raises(ParseError) as err:
        parse_formula("x = 1 and\ny ==== 2")
    assert err.value.line == 2


def test_trailing_input_rejected():
    with pytest.raises(ParseError):
        parse_formula("x = 1 y = 2")


def test_keywords_not_variables():
    with pytest.raises(ParseError):
        parse_formula("and = 1")
    with pytest.raises(ParseError):
        parse_formula("exists. x = 1")


def test_coefficient_variable_form():
    f = parse_formula("3*x = y")
    assert eval_formula(f, {"x": 2, "y": 6})
    with pytest.raises(ParseError):
        parse_formula("x*3 = y")  # weights are written k*v
