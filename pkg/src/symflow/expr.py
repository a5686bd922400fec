"""Exact symbolic kernel for differential-polynomial expressions.

An :class:`Expr` is always kept in canonical form: a sum of monomials,
each an exact complex-rational coefficient times a sorted product of
atoms (parameters, independent variables, jet coordinates, exponential
factors) with integer exponents.  Exponential factors are merged
(``Exp(a)*Exp(b) -> Exp(a+b)``, ``Exp(0) -> 1``) so every monomial
carries at most one of them.  All arithmetic is exact; floating point
enters only through :func:`eval_numeric`.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union


class ExprError(Exception):
    """Raised for operations that leave the differential-polynomial ring."""


class ParseError(ExprError):
    def __init__(self, reason: str, offset: int):
        super().__init__(f"{reason} (byte offset {offset})")
        self.reason = reason
        self.offset = offset


class EvaluationError(ExprError):
    """Raised when a numeric evaluation lacks an assignment for an atom."""


# ---------------------------------------------------------------------------
# exact complex-rational coefficients
# ---------------------------------------------------------------------------

_Scalar = Union[int, Fraction, "ComplexRational"]


class ComplexRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: int | Fraction = 0, im: int | Fraction = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other: _Scalar) -> "ComplexRational":
        o = _as_scalar(other)
        return ComplexRational(self.re + o.re, self.im + o.im)

    def __sub__(self, other: _Scalar) -> "ComplexRational":
        o = _as_scalar(other)
        return ComplexRational(self.re - o.re, self.im - o.im)

    def __mul__(self, other: _Scalar) -> "ComplexRational":
        o = _as_scalar(other)
        return ComplexRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    def __neg__(self) -> "ComplexRational":
        return ComplexRational(-self.re, -self.im)

    def inverse(self) -> "ComplexRational":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return ComplexRational(self.re / norm, -self.im / norm)

    def __pow__(self, n: int) -> "ComplexRational":
        if n < 0:
            return self.inverse() ** (-n)
        out = CR_ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_integer(self) -> bool:
        return self.im == 0 and self.re.denominator == 1

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, ComplexRational):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        return hash((self.re, self.im))

    def key(self):
        return (
            self.re.numerator,
            self.re.denominator,
            self.im.numerator,
            self.im.denominator,
        )

    def to_complex(self) -> complex:
        return float(self.re) + 1j * float(self.im)

    def __repr__(self):
        return f"ComplexRational({self.re!r}, {self.im!r})"

    def __str__(self):
        return _const_text(self)


def _as_scalar(value: _Scalar) -> ComplexRational:
    if isinstance(value, ComplexRational):
        return value
    if isinstance(value, (int, Fraction)):
        return ComplexRational(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact scalar")


CR_ZERO = ComplexRational(0)
CR_ONE = ComplexRational(1)
CR_I = ComplexRational(0, 1)


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------


class Atom:
    """Base of all irreducible symbols.

    Subclasses set ``_key`` (a totally ordered tuple whose first entry is a
    class id) in their constructor; identity, hashing and the monomial order
    all derive from it.
    """

    __slots__ = ("_key", "_hash")

    def sort_key(self):
        return self._key

    def __eq__(self, other):
        return self is other or (
            isinstance(other, Atom) and self._key == other._key
        )

    def __hash__(self):
        return self._hash

    def d_total(self, direction: str) -> "Expr":
        raise NotImplementedError

    def __repr__(self):
        return str(self)


class Parameter(Atom):
    """Named constant symbol (alpha, beta, lambda, epsilon, c1..c6, ...)."""

    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = (0, name)
        self._hash = hash(self._key)

    def d_total(self, direction: str) -> "Expr":
        return Expr.ZERO

    def __str__(self):
        return self.name


class IndependentVariable(Atom):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = (1, name)
        self._hash = hash(self._key)

    def d_total(self, direction: str) -> "Expr":
        return Expr.ONE if direction == self.name else Expr.ZERO

    def __str__(self):
        return self.name


class JetCoordinate(Atom):
    """A dependent variable with a sorted derivative multi-index.

    Mixed partials are identified: the index is a sorted multiset over the
    independent-variable names, so ``Diff(u,x,t)`` and ``Diff(u,t,x)`` are
    one and the same atom.
    """

    __slots__ = ("name", "index")

    def __init__(self, name: str, index: Iterable[str] = ()):
        self.name = name
        self.index = tuple(sorted(index))
        self._key = (2, name, len(self.index), self.index)
        self._hash = hash(self._key)

    @property
    def order(self) -> int:
        return len(self.index)

    def extended(self, direction: str) -> "JetCoordinate":
        return JetCoordinate(self.name, self.index + (direction,))

    def d_total(self, direction: str) -> "Expr":
        return Expr.atom(self.extended(direction))

    def __str__(self):
        if not self.index:
            return self.name
        return f"Diff({self.name},{','.join(self.index)})"


class ExpFactor(Atom):
    """Exponential of an expression; the only transcendental atom."""

    __slots__ = ("argument",)

    def __init__(self, argument: "Expr"):
        self.argument = argument
        self._key = (4, argument.sort_key())
        self._hash = hash(self._key)

    def d_total(self, direction: str) -> "Expr":
        return self.argument.total_derivative(direction) * Expr.atom(self)

    def __str__(self):
        return f"Exp({self.argument})"


# ---------------------------------------------------------------------------
# monomial helpers (a monomial is a sorted tuple of (atom, exponent) pairs)
# ---------------------------------------------------------------------------

Monomial = tuple  # tuple[tuple[Atom, int], ...]


def _mono_key(mono: Monomial):
    return tuple((a._key, n) for a, n in mono)


def _assemble_mono(counts: dict, exp_argument: "Expr | None") -> Monomial:
    factors = [(a, n) for a, n in counts.items() if n]
    if exp_argument is not None and not exp_argument.is_zero():
        factors.append((ExpFactor(exp_argument), 1))
    factors.sort(key=lambda item: item[0]._key)
    return tuple(factors)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    counts: dict = {}
    exp_argument = None
    for a, n in itertools.chain(m1, m2):
        if type(a) is ExpFactor:
            contrib = a.argument if n == 1 else a.argument * n
            exp_argument = contrib if exp_argument is None else exp_argument + contrib
        else:
            counts[a] = counts.get(a, 0) + n
    return _assemble_mono(counts, exp_argument)


def _mono_invert(mono: Monomial) -> Monomial:
    counts: dict = {}
    exp_argument = None
    for a, n in mono:
        if type(a) is ExpFactor:
            exp_argument = -a.argument
        else:
            counts[a] = -n
    return _assemble_mono(counts, exp_argument)


def _mono_drop_power(mono: Monomial, position: int) -> Monomial:
    """One fewer power of the atom at ``position`` (atom removed at zero)."""
    a, n = mono[position]
    if n == 1:
        return mono[:position] + mono[position + 1 :]
    return mono[:position] + ((a, n - 1),) + mono[position + 1 :]


# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------

_Coercible = Union["Expr", int, Fraction, ComplexRational, Atom]


class Expr:
    """Immutable differential-polynomial expression in canonical form."""

    __slots__ = ("_terms", "_sort_key", "_hash")

    ZERO: "Expr"
    ONE: "Expr"
    I: "Expr"

    def __init__(self, terms: tuple):
        # Trusted constructor: terms must already be canonical and sorted.
        self._terms = terms
        self._sort_key = None
        self._hash = None

    # -- construction -------------------------------------------------------
    @staticmethod
    def _from_map(acc: dict) -> "Expr":
        items = [(m, c) for m, c in acc.items() if not c.is_zero()]
        items.sort(key=lambda item: _mono_key(item[0]))
        return Expr(tuple(items))

    @classmethod
    def constant(cls, re: int | Fraction = 0, im: int | Fraction = 0) -> "Expr":
        c = ComplexRational(re, im)
        if c.is_zero():
            return cls.ZERO
        return Expr((((), c),))

    @classmethod
    def from_scalar(cls, value: _Scalar) -> "Expr":
        c = _as_scalar(value)
        if c.is_zero():
            return cls.ZERO
        return Expr((((), c),))

    @classmethod
    def atom(cls, a: Atom) -> "Expr":
        return Expr(((((a, 1),), CR_ONE),))

    # -- basic views ---------------------------------------------------------
    @property
    def terms(self) -> tuple:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and not self._terms[0][0])

    def constant_value(self) -> ComplexRational:
        if not self._terms:
            return CR_ZERO
        if len(self._terms) == 1 and not self._terms[0][0]:
            return self._terms[0][1]
        raise ExprError("expression is not constant")

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def sort_key(self):
        if self._sort_key is None:
            self._sort_key = tuple(
                (_mono_key(m), c.key()) for m, c in self._terms
            )
        return self._sort_key

    def atoms(self) -> Iterator[Atom]:
        """All distinct atoms, including those inside Exp arguments."""
        seen = set()
        stack = [self]
        while stack:
            e = stack.pop()
            for m, _ in e._terms:
                for a, _n in m:
                    if a in seen:
                        continue
                    seen.add(a)
                    yield a
                    if type(a) is ExpFactor:
                        stack.append(a.argument)

    def jet_atoms(self, name: str | None = None) -> list[JetCoordinate]:
        out = [a for a in self.atoms() if isinstance(a, JetCoordinate)]
        if name is not None:
            out = [a for a in out if a.name == name]
        return out

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        acc = dict(self._terms)
        for m, c in o._terms:
            prev = acc.get(m)
            acc[m] = c if prev is None else prev + c
        return Expr._from_map(acc)

    __radd__ = __add__

    def __sub__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o + (-self)

    def __neg__(self) -> "Expr":
        return Expr(tuple((m, -c) for m, c in self._terms))

    def __mul__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return Expr.ZERO
        acc: dict = {}
        for m1, c1 in self._terms:
            for m2, c2 in o._terms:
                m = _mono_mul(m1, m2)
                c = c1 * c2
                prev = acc.get(m)
                acc[m] = c if prev is None else prev + c
        return Expr._from_map(acc)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Expr":
        if not isinstance(n, int):
            raise ExprError("exponents must be integers")
        if n == 0:
            return Expr.ONE
        if n < 0:
            return self._inverted() ** (-n)
        out = Expr.ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def _inverted(self) -> "Expr":
        if len(self._terms) != 1:
            raise ExprError(
                "only monomials can be inverted; division by a multi-term "
                "expression leaves the polynomial ring"
            )
        mono, coeff = self._terms[0]
        return Expr(((_mono_invert(mono), coeff.inverse()),))

    def __truediv__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o._inverted()

    def __rtruediv__(self, other: _Coercible) -> "Expr":
        o = _coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o * self._inverted()

    def __eq__(self, other) -> bool:
        if isinstance(other, Expr):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction, ComplexRational)):
            return self._terms == _coerce(other)._terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.sort_key())
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    # -- calculus ------------------------------------------------------------
    def diff(self, wrt: Atom) -> "Expr":
        """Formal partial derivative treating all other atoms as constants."""
        acc: dict = {}
        for mono, coeff in self._terms:
            for i, (a, n) in enumerate(mono):
                if a == wrt:
                    _acc_add(acc, _mono_drop_power(mono, i), coeff * n)
                elif type(a) is ExpFactor:
                    inner = a.argument.diff(wrt)
                    if not inner.is_zero():
                        for mi, ci in inner._terms:
                            _acc_add(acc, _mono_mul(mono, mi), coeff * ci)
        return Expr._from_map(acc)

    def total_derivative(self, direction: str) -> "Expr":
        """Jet-space total derivative: every atom moves by its chain rule."""
        acc: dict = {}
        for mono, coeff in self._terms:
            for i, (a, n) in enumerate(mono):
                da = a.d_total(direction)
                if da.is_zero():
                    continue
                base = _mono_drop_power(mono, i)
                scale = coeff * n
                for mi, ci in da._terms:
                    _acc_add(acc, _mono_mul(base, mi), scale * ci)
        return Expr._from_map(acc)

    def substitute(self, mapping: Mapping[Atom, _Coercible]) -> "Expr":
        """Simultaneous, non-recursive replacement of atoms, then renormalize."""
        if not mapping:
            return self
        result = Expr.ZERO
        for mono, coeff in self._terms:
            term = Expr((((), coeff),))
            for a, n in mono:
                repl = mapping.get(a)
                if repl is None:
                    if type(a) is ExpFactor:
                        new_arg = a.argument.substitute(mapping)
                        base = exp_of(new_arg)
                    else:
                        base = Expr.atom(a)
                else:
                    base = _coerce(repl)
                term = term * base**n
            result = result + term
        return result

    def eval_numeric(self, assignment: Mapping[Atom, complex]) -> complex:
        """Complex floating evaluation; every occurring atom needs a value."""
        total = 0j
        for mono, coeff in self._terms:
            value = coeff.to_complex()
            for a, n in mono:
                v = assignment.get(a)
                if v is None:
                    if type(a) is ExpFactor:
                        v = cmath.exp(a.argument.eval_numeric(assignment))
                    else:
                        raise EvaluationError(f"no value assigned for atom '{a}'")
                value *= complex(v) ** n
            total += value
        return total

    # -- presentation --------------------------------------------------------
    def __str__(self):
        return to_text(self)

    def __repr__(self):
        return f"<Expr {to_text(self)}>"


Expr.ZERO = Expr(())
Expr.ONE = Expr((((), CR_ONE),))
Expr.I = Expr((((), CR_I),))


def _acc_add(acc: dict, mono: Monomial, coeff: ComplexRational) -> None:
    prev = acc.get(mono)
    acc[mono] = coeff if prev is None else prev + coeff


def _coerce(value: _Coercible):
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction, ComplexRational)):
        return Expr.from_scalar(value)
    if isinstance(value, Atom):
        return Expr.atom(value)
    return NotImplemented


# ---------------------------------------------------------------------------
# convenience constructors
# ---------------------------------------------------------------------------


def param(name: str) -> Expr:
    return Expr.atom(Parameter(name))


def indep(name: str) -> Expr:
    return Expr.atom(IndependentVariable(name))


def jet(name: str, *index: str) -> Expr:
    return Expr.atom(JetCoordinate(name, index))


def integer(n: int) -> Expr:
    return Expr.from_scalar(n)


def rational(p: int, q: int) -> Expr:
    return Expr.from_scalar(Fraction(p, q))


def exp_of(argument: Expr) -> Expr:
    """Exponential factor; collapses to 1 on a zero argument."""
    if argument.is_zero():
        return Expr.ONE
    return Expr.atom(ExpFactor(argument))


# ---------------------------------------------------------------------------
# spec-level operation aliases
# ---------------------------------------------------------------------------


def canonicalize(e: Expr) -> Expr:
    """Return the canonical form of ``e``.

    Construction already maintains canonical form, so this is the identity;
    it exists as the explicit normal-form entry point (and the idempotence
    contract is asserted in the test suite).
    """
    return e


def diff(e: Expr, wrt: Atom) -> Expr:
    return e.diff(wrt)


def total_derivative(e: Expr, direction: str) -> Expr:
    return e.total_derivative(direction)


def substitute(e: Expr, rules: Mapping[Atom, _Coercible]) -> Expr:
    return e.substitute(rules)


def eval_numeric(e: Expr, assignment: Mapping[Atom, complex]) -> complex:
    return e.eval_numeric(assignment)


# ---------------------------------------------------------------------------
# vocabulary and parser
# ---------------------------------------------------------------------------

_RESERVED = {"I", "Diff", "Exp"}


@dataclass(frozen=True)
class Vocabulary:
    """Declared symbol sets; the parser rejects anything outside them."""

    independents: tuple[str, ...]
    dependents: tuple[str, ...]
    parameters: tuple[str, ...]

    def __post_init__(self):
        names = list(self.independents) + list(self.dependents) + list(self.parameters)
        if len(set(names)) != len(names):
            raise ValueError("vocabulary names must be distinct")
        bad = _RESERVED.intersection(names)
        if bad:
            raise ValueError(f"reserved names cannot be declared: {sorted(bad)}")

    def classify(self, name: str) -> str | None:
        if name in self.independents:
            return "independent"
        if name in self.dependents:
            return "dependent"
        if name in self.parameters:
            return "parameter"
        return None

    def with_dependents(self, *names: str) -> "Vocabulary":
        return Vocabulary(self.independents, self.dependents + names, self.parameters)

    def with_parameters(self, *names: str) -> "Vocabulary":
        return Vocabulary(self.independents, self.dependents, self.parameters + names)


DEFAULT_VOCABULARY = Vocabulary(
    independents=("t", "x"),
    dependents=("u", "v", "phi", "psi", "f") + tuple(f"m{i}" for i in range(1, 9)),
    parameters=("alpha", "beta", "lambda", "epsilon") + tuple(f"c{i}" for i in range(1, 7)),
)


class _Parser:
    def __init__(self, text: str, vocabulary: Vocabulary):
        self.text = text
        self.pos = 0
        self.vocabulary = vocabulary

    # -- scanning -----------------------------------------------------------
    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expect(self, char: str):
        if self._peek() != char:
            raise ParseError(f"expected '{char}'", self.pos)
        self.pos += 1

    def _ident(self) -> str:
        self._skip_ws()
        start = self.pos
        if self.pos >= len(self.text) or not self.text[self.pos].isalpha():
            raise ParseError("expected an identifier", self.pos)
        while self.pos < len(self.text) and self.text[self.pos].isalnum():
            self.pos += 1
        return self.text[start : self.pos]

    # -- grammar ------------------------------------------------------------
    def parse(self) -> Expr:
        e = self._sum()
        self._skip_ws()
        if self.pos < len(self.text):
            raise ParseError(f"unexpected character '{self.text[self.pos]}'", self.pos)
        return e

    def _sum(self) -> Expr:
        e = self._term()
        while True:
            op = self._peek()
            if op == "+":
                self.pos += 1
                e = e + self._term()
            elif op == "-":
                self.pos += 1
                e = e - self._term()
            else:
                return e

    def _term(self) -> Expr:
        e = self._unary()
        while True:
            op = self._peek()
            if op == "*":
                self.pos += 1
                e = e * self._unary()
            elif op == "/":
                at = self.pos
                self.pos += 1
                try:
                    e = e / self._unary()
                except ZeroDivisionError:
                    raise ParseError("division by zero", at) from None
                except ExprError as err:
                    raise ParseError(str(err), at) from None
            else:
                return e

    def _unary(self) -> Expr:
        op = self._peek()
        if op == "-":
            self.pos += 1
            return -self._unary()
        if op == "+":
            self.pos += 1
            return self._unary()
        return self._power()

    def _power(self) -> Expr:
        base = self._atom()
        if self._peek() == "^":
            at = self.pos
            self.pos += 1
            exponent = self._unary()
            n = self._integer_exponent(exponent, at)
            try:
                return base**n
            except (ExprError, ZeroDivisionError) as err:
                raise ParseError(str(err), at) from None
        return base

    @staticmethod
    def _integer_exponent(e: Expr, offset: int) -> int:
        if not e.is_constant():
            raise ParseError("exponent must be an integer constant", offset)
        c = e.constant_value()
        if c.im != 0:
            raise ParseError("exponent must be an integer constant", offset)
        if c.re.denominator != 1:
            raise ParseError("rational exponents are not supported", offset)
        return int(c.re)

    def _atom(self) -> Expr:
        ch = self._peek()
        if ch == "(":
            self.pos += 1
            e = self._sum()
            self._expect(")")
            return e
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return integer(int(self.text[start : self.pos]))
        if ch.isalpha():
            at = self.pos
            name = self._ident()
            if name == "I":
                return Expr.I
            if name == "Exp":
                self._expect("(")
                e = self._sum()
                self._expect(")")
                return exp_of(e)
            if name == "Diff":
                return self._diff_atom()
            kind = self.vocabulary.classify(name)
            if kind == "independent":
                return indep(name)
            if kind == "dependent":
                return jet(name)
            if kind == "parameter":
                return param(name)
            raise ParseError(f"unknown identifier '{name}'", at)
        raise ParseError("expected an expression", self.pos)

    def _diff_atom(self) -> Expr:
        self._expect("(")
        at = self.pos
        dep = self._ident()
        if self.vocabulary.classify(dep) != "dependent":
            raise ParseError(f"unknown dependent variable {dep}", at)
        index = []
        while self._peek() == ",":
            self.pos += 1
            at = self.pos
            var = self._ident()
            if self.vocabulary.classify(var) != "independent":
                raise ParseError(f"unknown independent variable {var}", at)
            index.append(var)
        self._expect(")")
        if not index:
            raise ParseError("Diff needs at least one direction", at)
        return jet(dep, *index)


def parse(text: str, vocabulary: Vocabulary = DEFAULT_VOCABULARY) -> Expr:
    """Parse the expression grammar into a canonical Expr."""
    return _Parser(text, vocabulary).parse()


# ---------------------------------------------------------------------------
# printer (emits the same grammar the parser accepts)
# ---------------------------------------------------------------------------


def _frac_text(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _const_text(c: ComplexRational) -> str:
    if c.is_zero():
        return "0"
    if c.im == 0:
        return _frac_text(c.re)
    if c.im == 1:
        imag = "I"
    elif c.im == -1:
        imag = "-I"
    else:
        imag = f"{_frac_text(c.im)}*I"
    if c.re == 0:
        return imag
    sign = " - " if c.im < 0 else " + "
    mag = imag.lstrip("-") if c.im < 0 else imag
    return f"{_frac_text(c.re)}{sign}{mag}"


def _term_text(mono: Monomial, coeff: ComplexRational) -> str:
    if not mono:
        return _const_text(coeff)
    parts = []
    negate = False
    if coeff.im == 0:
        if coeff.re == -1:
            negate = True
        elif coeff.re != 1:
            parts.append(_frac_text(coeff.re))
    elif coeff.re == 0:
        if coeff.im == 1:
            parts.append("I")
        elif coeff.im == -1:
            negate = True
            parts.append("I")
        else:
            parts.append(f"{_frac_text(coeff.im)}*I")
    else:
        parts.append(f"({_const_text(coeff)})")
    for a, n in mono:
        s = str(a)
        if n != 1:
            s += f"^{n}"
        parts.append(s)
    body = "*".join(parts)
    return f"-{body}" if negate else body


def to_text(e: Expr) -> str:
    """Deterministic printing; ``parse(to_text(e)) == e`` for every Expr."""
    if e.is_zero():
        return "0"
    pieces = [_term_text(m, c) for m, c in e.terms]
    out = pieces[0]
    for s in pieces[1:]:
        if s.startswith("-"):
            out += " - " + s[1:]
        else:
            out += " + " + s
    return out
