"""Exact multivariate polynomials with rational coefficients.

``MultiPoly`` is a thin view of a ``sympy.Poly`` over QQ in the generators
x0, x1, ... so that every focal polynomial of the same size lives in the same
ring. Determinants of polynomial matrices go through ``DomainMatrix`` over
QQ[x0, ..., xm].
"""

import itertools
from fractions import Fraction
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Sequence

import sympy
from sympy import QQ, Poly
from sympy.combinatorics import Permutation
from sympy.polys.matrices import DomainMatrix

from services.tensors import to_exact

Monomial = tuple[int, ...]


def generators(nvars: int) -> tuple[sympy.Symbol, ...]:
    if nvars < 1:
        raise ValueError("a polynomial ring needs at least one variable")
    return tuple(sympy.symbols(f"x0:{nvars}"))


def _rational(value: Any) -> sympy.Rational:
    if isinstance(value, sympy.Basic):
        return sympy.Rational(value)
    value = to_exact(value)
    return sympy.Rational(value.numerator, value.denominator)


def _fraction(value: Any) -> Fraction:
    value = sympy.Rational(value)
    return Fraction(int(value.p), int(value.q))


class MultiPoly:
    """Sparse polynomial: monomial exponent vector -> nonzero Fraction.

    Terms are listed in descending lexicographic order of exponent vectors,
    which is also the order used for rendering and canonical scaling.
    """

    __slots__ = ("nvars", "poly")

    def __init__(self, nvars: int, terms: Mapping[Monomial, Any] | Iterable = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        collected: dict[Monomial, sympy.Rational] = {}
        for exponents, coefficient in items:
            exponents = tuple(int(e) for e in exponents)
            if len(exponents) != nvars or any(e < 0 for e in exponents):
                raise ValueError(f"bad exponent vector {exponents} for {nvars} variables")
            collected[exponents] = collected.get(exponents, sympy.S.Zero) + _rational(coefficient)
        self.nvars = nvars
        self.poly = Poly.from_dict(collected, *generators(nvars), domain=QQ)

    @classmethod
    def from_poly(cls, poly: Poly | sympy.Expr, nvars: int) -> "MultiPoly":
        """Wrap a sympy polynomial or expression in x0 .. x(nvars-1)."""
        result = cls.__new__(cls)
        result.nvars = nvars
        gens = generators(nvars)
        expr = poly.as_expr() if isinstance(poly, Poly) else poly
        result.poly = Poly(expr, *gens, domain=QQ)
        return result

    @classmethod
    def constant(cls, value: Any, nvars: int) -> "MultiPoly":
        return cls(nvars, {(0,) * nvars: value})

    @classmethod
    def variable(cls, index: int, nvars: int) -> "MultiPoly":
        exponents = [0] * nvars
        exponents[index] = 1
        return cls(nvars, {tuple(exponents): 1})

    @classmethod
    def linear(cls, coefficients: Sequence[Any]) -> "MultiPoly":
        nvars = len(coefficients)
        return cls(
            nvars,
            {tuple(int(i == k) for i in range(nvars)): c for k, c in enumerate(coefficients)},
        )

    def _wrap(self, poly: Poly) -> "MultiPoly":
        result = MultiPoly.__new__(MultiPoly)
        result.nvars = self.nvars
        result.poly = poly
        return result

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(
            {tuple(e): _fraction(c) for e, c in self.poly.terms(order="lex") if c != 0}
        )

    def is_zero(self) -> bool:
        return self.poly.is_zero

    def degree(self) -> int:
        """Total degree, -1 for the zero polynomial."""
        return -1 if self.poly.is_zero else int(self.poly.total_degree())

    def is_homogeneous(self) -> bool:
        return self.poly.is_zero or bool(self.poly.is_homogeneous)

    def coefficient(self, exponents: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exponents), Fraction(0))

    def leading(self) -> tuple[Monomial, Fraction]:
        if self.poly.is_zero:
            raise ValueError("the zero polynomial has no leading term")
        return next(iter(self.terms.items()))

    def _coerce(self, other: Any) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        return MultiPoly.constant(other, self.nvars)

    def __add__(self, other: Any) -> "MultiPoly":
        return self._wrap(self.poly + self._coerce(other).poly)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return self._wrap(-self.poly)

    def __sub__(self, other: Any) -> "MultiPoly":
        return self._wrap(self.poly - self._coerce(other).poly)

    def __rsub__(self, other: Any) -> "MultiPoly":
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> "MultiPoly":
        return self._wrap(self.poly * self._coerce(other).poly)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "MultiPoly":
        if exponent < 0:
            raise ValueError("negative powers are not polynomials")
        return self._wrap(self.poly**exponent)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, MultiPoly):
            return self.nvars == other.nvars and self.poly == other.poly
        if isinstance(other, (int, Fraction)):
            return self == MultiPoly.constant(other, self.nvars)
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.nvars, tuple(self.terms.items())))

    def scaled(self, factor: Any) -> "MultiPoly":
        return self._wrap(self.poly.mul_ground(_rational(factor)))

    def canonical(self) -> "MultiPoly":
        """Scale so that the first coefficient in lexicographic order is 1."""
        if self.poly.is_zero:
            return self
        return self._wrap(self.poly.monic())

    def evaluate(self, point: Sequence[Any]) -> Any:
        """Evaluate at a point; works for Fractions, floats, complex numbers or polynomials."""
        if len(point) != self.nvars:
            raise ValueError(f"expected {self.nvars} coordinates, got {len(point)}")
        total: Any = 0
        for exponents, coefficient in self.terms.items():
            term: Any = coefficient
            for value, power in zip(point, exponents):
                if power:
                    term = term * value**power
            total = total + term
        return total

    def exact_divide(self, divisor: "MultiPoly") -> "MultiPoly":
        """Quotient of an exact division; ValueError when the division leaves a remainder."""
        divisor = self._coerce(divisor)
        if divisor.is_zero():
            raise ValueError("division by the zero polynomial")
        quotient, remainder = self.poly.div(divisor.poly)
        if not remainder.is_zero:
            raise ValueError("division is not exact")
        return self._wrap(quotient)

    def substitute_linear(self, matrix: Sequence[Sequence[Any]]) -> "MultiPoly":
        """Replace variable i by sum_j matrix[i][j] * z_j (z has len(matrix[0]) variables)."""
        if len(matrix) != self.nvars:
            raise ValueError("substitution needs one row per variable")
        target = len(matrix[0])
        z = generators(target)
        images = {
            x: sum((_rational(m) * zj for m, zj in zip(row, z)), sympy.S.Zero)
            for x, row in zip(self.poly.gens, matrix)
        }
        return MultiPoly.from_poly(self.poly.as_expr().xreplace(images), target)

    def restrict(self, index: int, value: Any) -> "MultiPoly":
        """Fix variable ``index`` to ``value`` and drop it from the ring."""
        if self.nvars < 2:
            raise ValueError("cannot drop the only variable")
        reduced = self.poly.eval(index, _rational(value))
        return MultiPoly(self.nvars - 1, reduced.as_dict())

    def factor_list(self) -> tuple[Fraction, list[tuple["MultiPoly", int]]]:
        """Irreducible factors over the rationals with their multiplicities."""
        content, factors = self.poly.factor_list()
        return _fraction(content), [
            (self._wrap(factor.set_domain(QQ)), int(multiplicity)) for factor, multiplicity in factors
        ]

    def render(
        self,
        names: Sequence[str] | None = None,
        coefficient_format: Callable[[Fraction], str] = str,
    ) -> str:
        names = names or [f"x{i}" for i in range(self.nvars)]
        if self.is_zero():
            return "0"
        pieces = []
        for exponents, coefficient in self.terms.items():
            factors = [
                name if power == 1 else f"{name}^{power}"
                for name, power in zip(names, exponents)
                if power
            ]
            magnitude = abs(coefficient)
            if not factors:
                body = coefficient_format(magnitude)
            elif magnitude == 1:
                body = "*".join(factors)
            else:
                body = f"{coefficient_format(magnitude)}*" + "*".join(factors)
            pieces.append(("-" if coefficient < 0 else "+", body))
        head_sign, head = pieces[0]
        text = ("-" if head_sign == "-" else "") + head
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def to_records(self) -> list[tuple[list[int], int, int]]:
        return [
            (list(e), c.numerator, c.denominator) for e, c in sorted(self.terms.items())
        ]

    @classmethod
    def from_records(cls, nvars: int, records: Iterable[Sequence]) -> "MultiPoly":
        return cls(nvars, {tuple(e): Fraction(int(num), int(den)) for e, num, den in records})

    def __str__(self) -> str:
        return self.render()

    def __repr__(self) -> str:
        return f"MultiPoly({self.nvars}, {self.render()!r})"


def product(factors: Iterable[MultiPoly], nvars: int) -> MultiPoly:
    result = MultiPoly.constant(1, nvars)
    for factor in factors:
        result = result * factor
    return result


def _as_poly_matrix(matrix: Sequence[Sequence[Any]], nvars: int) -> list[list[MultiPoly]]:
    return [
        [e if isinstance(e, MultiPoly) else MultiPoly.constant(e, nvars) for e in row]
        for row in matrix
    ]


def determinant(matrix: Sequence[Sequence[Any]], nvars: int) -> MultiPoly:
    """Determinant over QQ[x0, ..., x(nvars-1)], fraction-free."""
    work = _as_poly_matrix(matrix, nvars)
    size = len(work)
    if size == 0:
        return MultiPoly.constant(1, nvars)
    ring = QQ.poly_ring(*generators(nvars))
    rows = [[ring.from_sympy(entry.poly.as_expr()) for entry in row] for row in work]
    value = DomainMatrix(rows, (size, size), ring).det()
    return MultiPoly.from_poly(ring.to_sympy(value), nvars)


def leibniz_determinant(matrix: Sequence[Sequence[Any]], nvars: int) -> MultiPoly:
    """Sum over all permutations; slow, used as an independent check."""
    work = _as_poly_matrix(matrix, nvars)
    size = len(work)
    total = MultiPoly(nvars)
    for permutation in itertools.permutations(range(size)):
        term = MultiPoly.constant(Permutation(list(permutation)).signature(), nvars)
        for row, column in enumerate(permutation):
            term = term * work[row][column]
        total = total + term
    return total
