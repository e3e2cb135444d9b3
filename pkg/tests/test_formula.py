import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sokopoints.formula import (
    MAX_LITERAL,
    BinOp,
    FormulaSyntaxError,
    Num,
    Verdict,
    check_formula,
    evaluate,
    leaves,
    parse_formula,
    to_text,
)


def value(text):
    return evaluate(parse_formula(text).expr)


@pytest.mark.parametrize("text,expected", [
    ("1+2*3", 7),
    ("(1+2)*3", 9),
    ("8-3-2", 3),
    ("8/4/2", 1),
    ("2*3+4*5", 26),
    ("8/(3-8/3)", 24),
    (" 10 * ( 2 + 1 ) - 6 ", 24),
    ("1/3+1/3+1/3", 1),
])
def test_precedence_and_associativity(text, expected):
    assert value(text) == expected


def test_exact_rationals():
    assert value("1/3") == Fraction(1, 3)
    assert value("8/(3-8/3)") == 24
    assert isinstance(value("7"), Fraction)


def test_claimed_result_is_separate_from_expression():
    f = parse_formula("(13-1)*2=24")
    assert f.claimed == 24
    assert evaluate(f.expr) == 24
    assert parse_formula("4*6").claimed is None


@pytest.mark.parametrize("text", ["", "1+", "(1+2", "1+2)", "1 2", "-3+27", "3**8", "1=", "1=2=3", "2x3", "=24", "100+1"])
def test_syntax_errors(text):
    with pytest.raises(FormulaSyntaxError):
        parse_formula(text)


def test_error_position_points_at_problem():
    with pytest.raises(FormulaSyntaxError) as e:
        parse_formula("1+2$3")
    assert e.value.position == 3


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        value("1/(2-2)")


def test_literal_cap():
    assert value(str(MAX_LITERAL)) == MAX_LITERAL
    with pytest.raises(FormulaSyntaxError):
        parse_formula(str(MAX_LITERAL + 1))


def test_printer_minimal_parentheses():
    t = parse_formula("((1+2))*(3)").expr
    assert to_text(t) == "(1+2)*3"
    assert to_text(parse_formula("(8-3)-2").expr) == "8-3-2"
    assert to_text(parse_formula("8-(3-2)").expr) == "8-(3-2)"
    assert to_text(parse_formula("8/(3-8/3)").expr) == "8/(3-8/3)"


@pytest.mark.parametrize("text,numbers,target,verdict", [
    ("8/(3-8/3)=24", [3, 3, 8, 8], 24, Verdict.CORRECT),
    ("8/(3-8/3)", [8, 3, 8, 3], 24, Verdict.CORRECT),
    ("3+3+8+8", [3, 3, 8, 8], 24, Verdict.WRONG_TARGET),
    ("3+3+8+8=22", [3, 3, 8, 8], 24, Verdict.WRONG_NUMBERS),
    ("3*8", [3, 3, 8, 8], 24, Verdict.WRONG_NUMBERS),
    ("3*8+3-3+1", [3, 3, 8, 8], 24, Verdict.WRONG_NUMBERS),
    ("8/(3-3)+8", [3, 3, 8, 8], 24, Verdict.WRONG_TARGET),
    ("8/(3-8/3", [3, 3, 8, 8], 24, Verdict.ILLEGAL),
    ("24", [24], 24, Verdict.CORRECT),
])
def test_check_formula(text, numbers, target, verdict):
    assert check_formula(text, numbers, target) is verdict


# --- random trees -------------------------------------------------------------

def random_tree(rng, n):
    if n == 1:
        return Num(rng.randint(1, 13))
    k = rng.randint(1, n - 1)
    return BinOp(rng.choice("+-*/"), random_tree(rng, k), random_tree(rng, n - k))


def reference_value(tree):
    """Same tree, evaluated with Python's Fraction operators directly.
    None stands for a division by zero anywhere below."""
    if isinstance(tree, Num):
        return Fraction(tree.value)
    a, b = reference_value(tree.left), reference_value(tree.right)
    if a is None or b is None or (tree.op == "/" and b == 0):
        return None
    return {"+": a + b, "-": a - b, "*": a * b, "/": a / b if b else None}[tree.op]


def test_random_trees_round_trip_and_stay_exact():
    rng = random.Random(2024)
    for _ in range(100_000):
        tree = random_tree(rng, rng.randint(1, 5))
        text = to_text(tree)
        assert parse_formula(text).expr == tree
        expected = reference_value(tree)
        if expected is None:
            with pytest.raises(ZeroDivisionError):
                evaluate(tree)
        else:
            assert evaluate(tree) == expected


trees = st.recursive(
    st.integers(1, MAX_LITERAL).map(Num),
    lambda sub: st.builds(BinOp, st.sampled_from("+-*/"), sub, sub),
    max_leaves=8,
)


@settings(max_examples=300)
@given(trees)
def test_print_parse_is_identity(tree):
    assert parse_formula(to_text(tree)).expr == tree


@settings(max_examples=300)
@given(trees)
def test_leaves_survive_printing(tree):
    assert leaves(parse_formula(to_text(tree)).expr) == leaves(tree)


@given(st.text(max_size=30))
def test_check_formula_never_raises(text):
    assert check_formula(text, [1, 2, 3, 4], 24) in Verdict
