import math

import numpy as np
import pytest

from services.errors import ArityError, DomainError, ExpressionSyntaxError, UnknownIdentifier
from services.expressions import (
    BinOp,
    Neg,
    Pow,
    Var,
    evaluate,
    parse_expression,
    parse_expression_list,
    render,
    tokenize,
)
from services.jets import ArrayJet, Jet


class TestParser:
    """Infix expressions over declared parameter names."""

    @pytest.mark.parametrize(
        "text, expected",
        [
            ("1 + 2*x", 7.0),
            ("2*x^2", 18.0),
            ("-x^2", -9.0),
            ("x**2 - 1", 8.0),
            ("(x + 1)/2", 2.0),
            ("x^-1", 1 / 3),
            ("cos(pi) + x", 2.0),
        ],
    )
    def test_evaluate(self, text, expected):
        """
        GIVEN an expression in x
        WHEN evaluating it at x = 3
        THEN precedence, powers and unary minus are honoured
        """
        assert evaluate(parse_expression(text, ["x"]), {"x": 3.0}) == pytest.approx(expected)

    def test_unary_minus_binds_below_power(self):
        """
        GIVEN -x^2
        WHEN parsing
        THEN the tree is the negation of the power
        """
        assert parse_expression("-x^2", ["x"]) == Neg(Pow(Var("x"), 2))

    def test_expression_list(self):
        """
        GIVEN a comma separated list
        WHEN parsing
        THEN one tree per item comes back
        """
        items = parse_expression_list("u, v, u*v", ["u", "v"])

        assert items == [Var("u"), Var("v"), BinOp("*", Var("u"), Var("v"))]

    @pytest.mark.parametrize(
        "text",
        ["-x^2 + 3/4*y - pi", "sin(x)^2 + cos(y)^-2", "exp(-(x - y)/2)", "sqrt(x*x + 1)*log(2 + y)"],
    )
    def test_render_parses_back(self, text):
        """
        GIVEN a parsed expression
        WHEN rendering it and parsing the rendered text
        THEN the same tree comes back
        """
        expr = parse_expression(text, ["x", "y"])

        assert parse_expression(render(expr), ["x", "y"]) == expr


class TestParserErrors:
    """Every parse error carries a 1-based line and column."""

    def test_unexpected_operator(self):
        """
        GIVEN x + * 2
        WHEN parsing
        THEN the error points at the second operator
        """
        with pytest.raises(ExpressionSyntaxError) as error:
            parse_expression("x + * 2", ["x"])

        assert (error.value.line, error.value.column) == (1, 5)
        assert "line 1, column 5" in str(error.value)

    def test_unclosed_parenthesis(self):
        """
        GIVEN (x + 1 without a closing parenthesis
        WHEN parsing
        THEN the error names the end of input
        """
        with pytest.raises(ExpressionSyntaxError, match="end of input"):
            parse_expression("(x + 1", ["x"])

    def test_unknown_variable(self):
        """
        GIVEN sin(y) with only x declared
        WHEN parsing
        THEN UnknownIdentifier points at y
        """
        with pytest.raises(UnknownIdentifier) as error:
            parse_expression("sin(y)", ["x"])

        assert error.value.column == 5

    def test_unknown_function(self):
        """
        GIVEN foo(x)
        WHEN parsing
        THEN UnknownIdentifier points at foo
        """
        with pytest.raises(UnknownIdentifier, match="unknown function") as error:
            parse_expression("foo(x)", ["x"])

        assert error.value.column == 1

    @pytest.mark.parametrize("text", ["sin(x, x)", "cos()"])
    def test_arity(self, text):
        """
        GIVEN a call with the wrong number of arguments
        WHEN parsing
        THEN ArityError is raised
        """
        with pytest.raises(ArityError):
            parse_expression(text, ["x"])

    @pytest.mark.parametrize("text", ["x^0.5", "x^x"])
    def test_non_integer_exponent(self, text):
        """
        GIVEN a power whose exponent is not an integer constant
        WHEN parsing
        THEN ExpressionSyntaxError is raised
        """
        with pytest.raises(ExpressionSyntaxError, match="integer"):
            parse_expression(text, ["x"])

    def test_positions_across_lines(self):
        """
        GIVEN text spanning two lines
        WHEN tokenizing
        THEN the second line restarts the column count
        """
        tokens = tokenize("x\n  + 1")

        assert [(t.text, t.line, t.column) for t in tokens[:3]] == [("x", 1, 1), ("+", 2, 3), ("1", 2, 5)]

    def test_bad_character(self):
        """
        GIVEN a character outside the grammar
        WHEN tokenizing
        THEN ExpressionSyntaxError points at it
        """
        with pytest.raises(ExpressionSyntaxError) as error:
            tokenize("x $ 1")

        assert error.value.column == 3


class TestEvaluation:
    """Guarded operations and forward-mode derivatives."""

    @pytest.mark.parametrize("text", ["1/x", "log(x)", "x^-2", "sqrt(x - 1)"])
    def test_domain_errors(self, text):
        """
        GIVEN an expression undefined at x = 0
        WHEN evaluating at 0
        THEN DomainError is raised
        """
        with pytest.raises(DomainError):
            evaluate(parse_expression(text, ["x"]), {"x": 0.0})

    def test_jet_derivatives(self):
        """
        GIVEN x^2 y + sin(x) on jets at (1/2, 2)
        WHEN evaluating
        THEN the gradient and Hessian match the hand computation
        """
        x, y = 0.5, 2.0
        env = {"x": Jet.variable(x, 0, 2), "y": Jet.variable(y, 1, 2)}

        result = evaluate(parse_expression("x^2*y + sin(x)", ["x", "y"]), env)

        assert result.val == pytest.approx(x * x * y + math.sin(x))
        assert np.allclose(result.grad, [2 * x * y + math.cos(x), x * x])
        assert np.allclose(result.hess, [[2 * y - math.sin(x), 2 * x], [2 * x, 0.0]])

    def test_jet_quotient(self):
        """
        GIVEN 1/x on a jet at x = 2
        WHEN evaluating
        THEN first and second derivatives are -1/4 and 1/4
        """
        result = evaluate(parse_expression("1/x", ["x"]), {"x": Jet.variable(2.0, 0, 1)})

        assert result.grad[0] == pytest.approx(-0.25)
        assert result.hess[0, 0] == pytest.approx(0.25)

    def test_sqrt_jet_at_zero(self):
        """
        GIVEN sqrt on a jet at 0
        WHEN evaluating
        THEN DomainError is raised
        """
        with pytest.raises(DomainError):
            evaluate(parse_expression("sqrt(x)", ["x"]), {"x": Jet.variable(0.0, 0, 1)})

    @pytest.mark.parametrize("text", ["exp(x)", "x^400", "2*exp(x^2)"])
    @pytest.mark.parametrize("as_jet", [False, True])
    def test_overflow(self, text, as_jet):
        """
        GIVEN an expression whose value is beyond the float range at x = 1000
        WHEN evaluating on a float or on a jet
        THEN DomainError is raised instead of OverflowError
        """
        x = Jet.variable(1000.0, 0, 1) if as_jet else 1000.0

        with pytest.raises(DomainError, match="overflows"):
            evaluate(parse_expression(text, ["x"]), {"x": x})

    def test_array_jet_norm(self):
        """
        GIVEN the vector (t, 1) with derivative (1, 0) at t = 3/4
        WHEN taking its norm
        THEN the value is 5/4 and the derivative 3/5
        """
        vector = ArrayJet([0.75, 1.0], [[1.0], [0.0]])

        norm = vector.norm()

        assert float(norm.value) == pytest.approx(1.25)
        assert norm.tangent[0] == pytest.approx(0.6)

    def test_array_jet_inverse(self):
        """
        GIVEN the matrix diag(2 + t, 1) at t = 0
        WHEN inverting
        THEN the derivative of the first entry is -1/4
        """
        matrix = ArrayJet([[2.0, 0.0], [0.0, 1.0]], [[[1.0], [0.0]], [[0.0], [0.0]]])

        inverse = matrix.inv()

        assert inverse.value[0, 0] == pytest.approx(0.5)
        assert inverse.tangent[0, 0, 0] == pytest.approx(-0.25)
