"""Tokenizer, recursive-descent parser and exact evaluator for card-game
formulas such as ``8/(3-8/3)=24``.

Grammar (whitespace ignored)::

    formula := expr ['=' INT]
    expr    := term (('+' | '-') term)*
    term    := atom (('*' | '/') atom)*
    atom    := INT | '(' expr ')'

Only binary operators exist; ``-3`` is a syntax error. Values are
:class:`fractions.Fraction`, so no rounding ever happens.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

MAX_LITERAL = 99

OPS = ("+", "-", "*", "/")
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, BinOp]


@dataclass(frozen=True)
class Formula:
    expr: Expr
    claimed: Optional[int] = None  # the k of a trailing "=k"


class Verdict(enum.Enum):
    CORRECT = "correct"
    WRONG_TARGET = "wrong_target"
    WRONG_NUMBERS = "wrong_numbers"
    ILLEGAL = "illegal"


def tokenize(text: str) -> list[tuple[str, str, int]]:
    """Split into ``(kind, text, position)`` tokens; kinds are ``int``,
    ``op``, ``(``, ``)``, ``=`` and a final ``end``."""
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "0123456789":
            j = i
            while j < len(text) and text[j] in "0123456789":
                j += 1
            tokens.append(("int", text[i:j], i))
            i = j
        elif ch in OPS:
            tokens.append(("op", ch, i))
            i += 1
        elif ch in "()=":
            tokens.append((ch, ch, i))
            i += 1
        else:
            raise FormulaSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, what: str):
        kind, text, pos = self.peek()
        found = "end of input" if kind == "end" else repr(text)
        raise FormulaSyntaxError(f"expected {what}, found {found}", pos)

    def formula(self) -> Formula:
        expr = self.expr()
        claimed = None
        if self.peek()[0] == "=":
            self.take()
            if self.peek()[0] != "int":
                self.fail("integer after '='")
            claimed = int(self.take()[1])
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return Formula(expr, claimed)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.atom())
        return node

    def atom(self) -> Expr:
        kind, text, pos = self.peek()
        if kind == "int":
            self.take()
            value = int(text)
            if value > MAX_LITERAL:
                raise FormulaSyntaxError(f"literal {value} exceeds {MAX_LITERAL}", pos)
            return Num(value)
        if kind == "(":
            self.take()
            node = self.expr()
            if self.peek()[0] != ")":
                self.fail("')'")
            self.take()
            return node
        self.fail("number or '('")


def parse_formula(text: str) -> Formula:
    return _Parser(text).formula()


def evaluate(expr: Expr) -> Fraction:
    """Exact value; raises ZeroDivisionError on division by zero."""
    if isinstance(expr, Num):
        return Fraction(expr.value)
    a = evaluate(expr.left)
    b = evaluate(expr.right)
    return apply_op(expr.op, a, b)


def apply_op(op: str, a: Fraction, b: Fraction) -> Fraction:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError("division by zero")
    return a / b


def leaves(expr: Expr) -> list[int]:
    if isinstance(expr, Num):
        return [expr.value]
    return leaves(expr.left) + leaves(expr.right)


def to_text(expr: Expr) -> str:
    """Print with the fewest parentheses that still reparse to the same tree."""
    if isinstance(expr, Num):
        return str(expr.value)
    prec = _PREC[expr.op]
    left = to_text(expr.left)
    if isinstance(expr.left, BinOp) and _PREC[expr.left.op] < prec:
        left = f"({left})"
    right = to_text(expr.right)
    # Same-precedence right operands keep their parentheses: the parser is
    # left-associative, so a+(b+c) is a different tree from a+b+c.
    if isinstance(expr.right, BinOp) and _PREC[expr.right.op] <= prec:
        right = f"({right})"
    return f"{left}{expr.op}{right}"


def check_formula(text: str, required_numbers, target: int) -> Verdict:
    try:
        formula = parse_formula(text)
    except FormulaSyntaxError:
        return Verdict.ILLEGAL
    if Counter(leaves(formula.expr)) != Counter(required_numbers):
        return Verdict.WRONG_NUMBERS
    if formula.claimed is not None and formula.claimed != target:
        return Verdict.WRONG_NUMBERS
    try:
        value = evaluate(formula.expr)
    except ZeroDivisionError:
        return Verdict.WRONG_TARGET
    return Verdict.CORRECT if value == target else Verdict.WRONG_TARGET
