"""Infix expression language for immersions, paths and normal fields.

Grammar: numbers, declared parameter names, the constant ``pi``, the binary
operators ``+ - * /``, right-associative integer powers ``^`` (``**`` is
accepted as an alias), unary minus, and calls ``sin cos exp log sqrt``.
"""

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

from services import jets
from services.errors import (
    ArityError,
    DomainError,
    ExpressionSyntaxError,
    UnknownIdentifier,
)

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1}
CONSTANTS = {"pi": math.pi}

_TOKEN_PATTERN = re.compile(
    r"""
    (?P<space>[ \t]+)
  | (?P<newline>\r?\n)
  | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^(),\[\]:])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str, line: int = 1, column: int = 1) -> list[Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = _TOKEN_PATTERN.match(text, position)
        if match is None:
            raise ExpressionSyntaxError(f"unexpected character {text[position]!r}", line, column)
        kind, lexeme = match.lastgroup, match.group()
        if kind == "newline":
            line, column = line + 1, 1
        else:
            if kind != "space":
                tokens.append(Token(kind, "^" if lexeme == "**" else lexeme, line, column))
            column += len(lexeme)
        position = match.end()
    tokens.append(Token("end", "", line, column))
    return tokens


# Expression tree.


@dataclass(frozen=True)
class Const:
    value: Fraction | float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    argument: "Expr"


Expr = Const | Var | Neg | BinOp | Pow | Call

_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BINDING = 25


class Parser:
    """Pratt parser over a token list; ``names`` are the admissible variables."""

    def __init__(self, tokens: Sequence[Token], names: Sequence[str]):
        self.tokens = list(tokens)
        self.names = tuple(names)
        self.index = 0

    @classmethod
    def from_text(cls, text: str, names: Sequence[str], line: int = 1, column: int = 1) -> "Parser":
        return cls(tokenize(text, line, column), names)

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        if token.kind != "end":
            self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.current
        if token.text != text or token.kind == "end":
            found = "end of input" if token.kind == "end" else repr(token.text)
            raise ExpressionSyntaxError(f"expected {text!r}, found {found}", token.line, token.column)
        return self.advance()

    def at_end(self) -> bool:
        return self.current.kind == "end"

    def expression(self, right_binding: int = 0) -> Expr:
        token = self.advance()
        left = self._prefix(token)
        while right_binding < _BINDING.get(self.current.text, 0) and self.current.kind == "op":
            operator = self.advance()
            left = self._infix(operator, left)
        return left

    def _prefix(self, token: Token) -> Expr:
        if token.kind == "number":
            return Const(Fraction(token.text))
        if token.kind == "name":
            return self._name(token)
        if token.text == "-":
            return Neg(self.expression(_UNARY_BINDING))
        if token.text == "+":
            return self.expression(_UNARY_BINDING)
        if token.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        found = "end of input" if token.kind == "end" else f"{token.text!r}"
        raise ExpressionSyntaxError(f"unexpected {found}", token.line, token.column)

    def _name(self, token: Token) -> Expr:
        if token.text in FUNCTIONS:
            self.expect("(")
            arguments = [] if self.current.text == ")" else self._arguments()
            self.expect(")")
            if len(arguments) != FUNCTIONS[token.text]:
                raise ArityError(
                    f"{token.text} takes {FUNCTIONS[token.text]} argument, got {len(arguments)}",
                    token.line,
                    token.column,
                )
            return Call(token.text, arguments[0])
        if self.current.text == "(":
            raise UnknownIdentifier(f"unknown function {token.text!r}", token.line, token.column)
        if token.text in self.names:
            return Var(token.text)
        if token.text in CONSTANTS:
            return Const(CONSTANTS[token.text])
        raise UnknownIdentifier(f"unknown identifier {token.text!r}", token.line, token.column)

    def _arguments(self) -> list[Expr]:
        arguments = [self.expression()]
        while self.current.text == ",":
            self.advance()
            arguments.append(self.expression())
        return arguments

    def _infix(self, operator: Token, left: Expr) -> Expr:
        if operator.text == "^":
            exponent = self.expression(_BINDING["^"] - 1)
            return Pow(left, _integer_exponent(exponent, operator))
        return BinOp(operator.text, left, self.expression(_BINDING[operator.text]))

    def expression_list(self, terminators: Sequence[str] = ()) -> list[Expr]:
        """Comma separated expressions up to end of input or a terminator."""
        items = [self.expression()]
        while self.current.text == ",":
            self.advance()
            items.append(self.expression())
        if not self.at_end() and self.current.text not in terminators:
            token = self.current
            raise ExpressionSyntaxError(f"unexpected {token.text!r}", token.line, token.column)
        return items

    def finish(self) -> None:
        if not self.at_end():
            token = self.current
            raise ExpressionSyntaxError(f"unexpected {token.text!r}", token.line, token.column)


def _integer_exponent(expr: Expr, operator: Token) -> int:
    sign = 1
    while isinstance(expr, Neg):
        sign, expr = -sign, expr.operand
    if isinstance(expr, Const) and isinstance(expr.value, Fraction) and expr.value.denominator == 1:
        return sign * int(expr.value)
    raise ExpressionSyntaxError("exponents must be integer constants", operator.line, operator.column)


def parse_expression(text: str, names: Sequence[str], line: int = 1, column: int = 1) -> Expr:
    parser = Parser.from_text(text, names, line, column)
    expr = parser.expression()
    parser.finish()
    return expr


def parse_expression_list(text: str, names: Sequence[str], line: int = 1, column: int = 1) -> list[Expr]:
    parser = Parser.from_text(text, names, line, column)
    return parser.expression_list()


def evaluate(expr: Expr, env: Mapping[str, Any]) -> Any:
    """Evaluate on floats or ``Jet`` values; guarded operations raise DomainError."""
    if isinstance(expr, Const):
        return float(expr.value)
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, Neg):
        return -evaluate(expr.operand, env)
    if isinstance(expr, Call):
        return jets.apply(expr.name, evaluate(expr.argument, env))
    if isinstance(expr, Pow):
        base = evaluate(expr.base, env)
        if expr.exponent < 0 and jets.value_of(base) == 0.0:
            raise DomainError("negative power of zero")
        try:
            return base**expr.exponent
        except OverflowError:
            raise DomainError(f"{render(expr)} overflows")
    left, right = evaluate(expr.left, env), evaluate(expr.right, env)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if jets.value_of(right) == 0.0:
        raise DomainError("division by zero")
    return left / right


def render(expr: Expr) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(expr, Const):
        if isinstance(expr.value, float):
            return "pi" if expr.value == math.pi else repr(expr.value)
        return str(expr.value) if expr.value.denominator == 1 else f"({expr.value})"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Neg):
        return f"(-{render(expr.operand)})"
    if isinstance(expr, Pow):
        return f"({render(expr.base)}^{expr.exponent})" if expr.exponent >= 0 else (
            f"({render(expr.base)}^(-{-expr.exponent}))"
        )
    if isinstance(expr, Call):
        return f"{expr.name}({render(expr.argument)})"
    return f"({render(expr.left)} {expr.op} {render(expr.right)})"
