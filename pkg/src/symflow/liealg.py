"""Point vector fields on {x,t,u,v,phi,psi,f}: brackets, structure
constants, the adjoint representation, and the one-dimensional
subalgebra classification of the non-central part.

The six standard generators close into an algebra whose only nonzero
brackets live on the first three: [g1,g2] = g2, [g1,g3] = -g3,
[g2,g3] = -2 g1 (a real sl(2)); g4, g5, g6 are central.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .expr import (
    ComplexRational,
    Expr,
    ExprError,
    IndependentVariable,
    JetCoordinate,
    Parameter,
    parse,
)

COORDINATES = ("x", "t", "u", "v", "phi", "psi", "f")


def _coordinate_atom(name: str):
    return IndependentVariable(name) if name in ("x", "t") else JetCoordinate(name)


@dataclass(frozen=True)
class VectorField:
    """Point vector field: one coefficient expression per coordinate."""

    coeffs: Mapping[str, Expr]

    def __post_init__(self):
        for name, coefficient in self.coeffs.items():
            if name not in COORDINATES:
                raise ExprError(f"unknown coordinate '{name}'")
            for a in coefficient.jet_atoms():
                if a.index:
                    raise ExprError(
                        f"coefficient of d/d{name} contains the derivative "
                        f"coordinate {a}; point fields only"
                    )

    def coefficient(self, name: str) -> Expr:
        return self.coeffs.get(name, Expr.ZERO)

    def apply(self, g: Expr) -> Expr:
        """Directional derivative of a coordinate function."""
        total = Expr.ZERO
        for name, coefficient in self.coeffs.items():
            total = total + coefficient * g.diff(_coordinate_atom(name))
        return total

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs.values())

    def __add__(self, other: "VectorField") -> "VectorField":
        names = set(self.coeffs) | set(other.coeffs)
        return VectorField(
            {n: self.coefficient(n) + other.coefficient(n) for n in names}
        )

    def scaled(self, factor) -> "VectorField":
        return VectorField({n: c * factor for n, c in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return all(
            self.coefficient(n) == other.coefficient(n) for n in COORDINATES
        )

    def __str__(self):
        parts = [f"({c})*d/d{n}" for n, c in sorted(self.coeffs.items()) if not c.is_zero()]
        return " + ".join(parts) if parts else "0"


def vector_field(**coeffs: str | Expr) -> VectorField:
    return VectorField(
        {n: (parse(c) if isinstance(c, str) else c) for n, c in coeffs.items()}
    )


def commutator(a: VectorField, b: VectorField) -> VectorField:
    """[a,b]^k = a(b^k) - b(a^k), coefficients canonicalized."""
    names = set(a.coeffs) | set(b.coeffs)
    return VectorField(
        {n: a.apply(b.coefficient(n)) - b.apply(a.coefficient(n)) for n in names}
    )


def standard_generators() -> tuple[VectorField, ...]:
    """The six-generator basis of the prolonged system's point symmetries."""
    return (
        vector_field(phi="phi/2", psi="psi/2", f="f"),
        vector_field(u="phi^2", v="psi^2", phi="phi*f", psi="psi*f", f="f^2"),
        vector_field(f="1"),
        vector_field(u="u", v="-v", phi="phi/2", psi="-psi/2"),
        vector_field(t="1"),
        vector_field(x="1"),
    )


def family_vector_field() -> VectorField:
    """General element of the six-constant symmetry family, constants symbolic."""
    return vector_field(
        x="c4",
        t="c3",
        u="c2*phi^2 + c1*u",
        v="c2*psi^2 - c1*v",
        phi="(2*c2*f + c1 + c5)*phi/2",
        psi="(2*c2*f - c1 + c5)*psi/2",
        f="c2*f^2 + c5*f + c6",
    )


# ---------------------------------------------------------------------------
# structure constants
# ---------------------------------------------------------------------------


def _solve_linear(rows: list[list[ComplexRational]], rhs: list[ComplexRational]):
    """Exact Gaussian elimination; returns None when inconsistent."""
    n_unknowns = len(rows[0]) if rows else 0
    matrix = [row[:] + [value] for row, value in zip(rows, rhs)]
    pivot_cols = []
    r = 0
    for col in range(n_unknowns):
        pivot = next(
            (i for i in range(r, len(matrix)) if not matrix[i][col].is_zero()), None
        )
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        inv = matrix[r][col].inverse()
        matrix[r] = [value * inv for value in matrix[r]]
        for i in range(len(matrix)):
            if i != r and not matrix[i][col].is_zero():
                factor = matrix[i][col]
                matrix[i] = [
                    a - factor * b for a, b in zip(matrix[i], matrix[r])
                ]
        pivot_cols.append(col)
        r += 1
        if r == len(matrix):
            break
    for i in range(r, len(matrix)):
        if not matrix[i][-1].is_zero():
            return None
    solution = [ComplexRational(0)] * n_unknowns
    for row_index, col in enumerate(pivot_cols):
        solution[col] = matrix[row_index][-1]
    return solution


def express_in_basis(
    vf: VectorField, basis: Sequence[VectorField]
) -> list[ComplexRational] | None:
    """Exact coordinates of ``vf`` in the basis span, or None if outside."""
    monomials = set()
    for field in list(basis) + [vf]:
        for name in COORDINATES:
            for mono, _c in field.coefficient(name).terms:
                monomials.add((name, mono))
    rows = []
    rhs = []
    for name, mono in sorted(monomials, key=lambda item: (item[0], _mono_sort(item[1]))):
        rows.append(
            [_coeff_of(b.coefficient(name), mono) for b in basis]
        )
        rhs.append(_coeff_of(vf.coefficient(name), mono))
    return _solve_linear(rows, rhs)


def _mono_sort(mono):
    return tuple((a.sort_key(), n) for a, n in mono)


def _coeff_of(e: Expr, mono) -> ComplexRational:
    for m, c in e.terms:
        if m == mono:
            return c
    return ComplexRational(0)


@dataclass
class StructureTable:
    basis: tuple[VectorField, ...]
    labels: tuple[str, ...]
    table: dict  # (i, j) -> tuple[ComplexRational, ...] for i < j
    closed: bool

    def bracket_coords(self, i: int, j: int) -> tuple[ComplexRational, ...]:
        if i == j:
            return tuple(ComplexRational(0) for _ in self.basis)
        if i < j:
            return self.table[(i, j)]
        return tuple(-c for c in self.table[(j, i)])

    def adjoint_matrix(self, i: int) -> list[list[ComplexRational]]:
        """Matrix of ad(basis_i): column j holds [basis_i, basis_j]."""
        n = len(self.basis)
        matrix = [[ComplexRational(0)] * n for _ in range(n)]
        for j in range(n):
            coords = self.bracket_coords(i, j)
            for k in range(n):
                matrix[k][j] = coords[k]
        return matrix

    def killing(self, a: Sequence, b: Sequence) -> ComplexRational:
        """Trace form tr(ad_a ad_b) on coordinate vectors."""
        n = len(self.basis)
        ads = [self.adjoint_matrix(i) for i in range(n)]
        mat_a = _mat_comb(ads, a)
        mat_b = _mat_comb(ads, b)
        total = ComplexRational(0)
        for r in range(n):
            for s in range(n):
                total = total + mat_a[r][s] * mat_b[s][r]
        return total


def _mat_comb(mats, weights):
    n = len(mats[0])
    out = [[ComplexRational(0)] * n for _ in range(n)]
    for mat, w in zip(mats, weights):
        cw = w if isinstance(w, ComplexRational) else ComplexRational(w)
        if cw.is_zero():
            continue
        for r in range(n):
            for s in range(n):
                out[r][s] = out[r][s] + cw * mat[r][s]
    return out


def structure_table(basis: Sequence[VectorField], labels=None) -> StructureTable:
    """All pairwise brackets in basis coordinates; checks closure and Jacobi."""
    basis = tuple(basis)
    labels = tuple(labels or (f"g{i+1}" for i in range(len(basis))))
    table = {}
    closed = True
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            coords = express_in_basis(commutator(basis[i], basis[j]), basis)
            if coords is None:
                raise ExprError(
                    f"[{labels[i]},{labels[j]}] lies outside the span of the basis"
                )
            table[(i, j)] = tuple(coords)
    result = StructureTable(basis=basis, labels=labels, table=table, closed=closed)
    _check_jacobi(result)
    return result


def _check_jacobi(table: StructureTable):
    n = len(table.basis)

    def bracket(vec_a, vec_b):
        out = [ComplexRational(0)] * n
        for i in range(n):
            if vec_a[i].is_zero():
                continue
            for j in range(n):
                if vec_b[j].is_zero():
                    continue
                coords = table.bracket_coords(i, j)
                for k in range(n):
                    out[k] = out[k] + vec_a[i] * vec_b[j] * coords[k]
        return out

    unit = lambda i: [
        ComplexRational(1) if k == i else ComplexRational(0) for k in range(n)
    ]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = bracket(bracket(unit(i), unit(j)), unit(k))
                total = [
                    a + b
                    for a, b in zip(total, bracket(bracket(unit(j), unit(k)), unit(i)))
                ]
                total = [
                    a + b
                    for a, b in zip(total, bracket(bracket(unit(k), unit(i)), unit(j)))
                ]
                if any(not c.is_zero() for c in total):
                    raise ExprError(f"Jacobi identity fails on triple ({i},{j},{k})")


# ---------------------------------------------------------------------------
# adjoint representation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BasisSeries:
    """Element of the algebra with coefficients that may depend on epsilon."""

    coords: tuple[Expr, ...]

    def as_vector_field(self, basis: Sequence[VectorField]) -> VectorField:
        total = VectorField({})
        for coefficient, field in zip(self.coords, basis):
            total = total + field.scaled(coefficient)
        return total

    def substitute(self, mapping) -> "BasisSeries":
        return BasisSeries(tuple(c.substitute(mapping) for c in self.coords))


def adjoint(
    table: StructureTable,
    v_index: int,
    w_coords: Sequence,
    epsilon: Parameter,
    max_terms: int = 12,
) -> BasisSeries:
    """Ad(exp(eps*v)) w as the series w - eps [v,w] + eps^2/2 [v,[v,w]] - ...

    Computed by linearity over basis components: for each one the Krylov
    sequence either terminates (nilpotent action, polynomial in eps) or is
    an eigenvector ([v,w] = c w, summing to Exp(-c*eps) w); anything else
    within ``max_terms`` is an error.
    """
    n = len(table.basis)
    eps = Expr.atom(epsilon)
    ad = table.adjoint_matrix(v_index)
    totals = [Expr.ZERO] * n

    for j in range(n):
        weight = w_coords[j]
        w_expr = weight if isinstance(weight, Expr) else Expr.from_scalar(weight)
        if w_expr.is_zero():
            continue
        current = [
            ComplexRational(1) if k == j else ComplexRational(0) for k in range(n)
        ]
        # eigenvector case: [v, e_j] = c e_j
        image = _mat_vec(ad, current)
        eigen = None
        if all(image[k].is_zero() for k in range(n) if k != j):
            eigen = image[j]
        if eigen is not None and not eigen.is_zero():
            from .expr import exp_of

            factor = exp_of(-Expr.from_scalar(eigen) * eps)
            totals[j] = totals[j] + w_expr * factor
            continue
        # terminating series
        sign = ComplexRational(1)
        factorial = 1
        power = Expr.ONE
        for order in range(max_terms + 1):
            scale = Expr.from_scalar(sign * Fraction(1, factorial)) * power
            for k in range(n):
                if not current[k].is_zero():
                    totals[k] = totals[k] + w_expr * scale * Expr.from_scalar(current[k])
            current = _mat_vec(ad, current)
            if all(c.is_zero() for c in current):
                break
            sign = -sign
            factorial *= order + 1
            power = power * eps
        else:
            raise ExprError(
                f"adjoint series of basis element {j} neither terminates nor "
                f"is eigen-diagonal within {max_terms} terms"
            )
    return BasisSeries(tuple(totals))


def _mat_vec(matrix, vector):
    n = len(vector)
    return [
        sum(
            (matrix[k][j] * vector[j] for j in range(n)),
            ComplexRational(0),
        )
        for k in range(n)
    ]


def series_bracket(table: StructureTable, a: BasisSeries, b: BasisSeries) -> BasisSeries:
    n = len(table.basis)
    out = [Expr.ZERO] * n
    for i in range(n):
        if a.coords[i].is_zero():
            continue
        for j in range(n):
            if b.coords[j].is_zero():
                continue
            coords = table.bracket_coords(i, j)
            for k in range(n):
                if not coords[k].is_zero():
                    out[k] = out[k] + a.coords[i] * b.coords[j] * Expr.from_scalar(
                        coords[k]
                    )
    return BasisSeries(tuple(out))


# ---------------------------------------------------------------------------
# one-dimensional subalgebra classification
# ---------------------------------------------------------------------------


@dataclass
class NormalizationRecord:
    triple: tuple[Fraction, Fraction, Fraction]
    maps: list  # [(generator index in 1-based labels, Fraction eps)]
    scale: Fraction
    representative: str
    alpha: Fraction | None
    killing_sign: int
    verified: bool
    case: str


@dataclass
class OptimalSystemReport:
    table: StructureTable
    central: tuple[str, ...]
    representative_killing: dict
    separation_notes: list[str]
    records: list[NormalizationRecord]

    @property
    def all_verified(self) -> bool:
        return all(r.verified for r in self.records)


def _killing_on_span(table: StructureTable, triple: Sequence[Fraction]) -> Fraction:
    coords = [ComplexRational(a) for a in triple] + [ComplexRational(0)] * (
        len(table.basis) - 3
    )
    value = table.killing(coords, coords)
    if value.im != 0:
        raise ExprError("Killing value of a real triple must be real")
    return value.re


def _apply_adjoint_rational(
    table: StructureTable, generator: int, eps: Fraction, triple
) -> tuple[Fraction, Fraction, Fraction]:
    """Exact action of Ad(exp(eps*g)) on span{g1,g2,g3}, via the series."""
    epsilon = Parameter("epsilon")
    coords = [Expr.from_scalar(Fraction(a)) for a in triple] + [Expr.ZERO] * (
        len(table.basis) - 3
    )
    series = adjoint(table, generator, coords, epsilon)
    out = []
    mapping = {epsilon: Expr.from_scalar(eps)}
    for k in range(3):
        value = series.coords[k].substitute(mapping)
        c = value.constant_value()
        if c.im != 0:
            raise ExprError("rational normalization produced a complex coordinate")
        out.append(c.re)
    if any(not series.coords[k].substitute(mapping).is_zero() for k in range(3, len(series.coords))):
        raise ExprError("normalization left the g1,g2,g3 span")
    return tuple(out)


def normalize_triple(
    table: StructureTable, triple: Sequence[Fraction]
) -> NormalizationRecord:
    """Map a1 g1 + a2 g2 + a3 g3 to an optimal-system representative.

    Uses at most one adjoint map with an exactly solved rational parameter,
    plus an overall scaling (multiples of a generator are equivalent):

    * a2 != 0: Ad(exp(eps g3)) with eps = a1/(2 a2) kills the g1 slot,
      landing in the g2 + alpha g3 family;
    * a2 == 0, a1 != 0: Ad(exp(eps g3)) with eps = a3/a1 kills the g3 slot,
      landing on g1;
    * otherwise the element already is a multiple of g3.
    """
    a1, a2, a3 = (Fraction(a) for a in triple)
    if a1 == 0 and a2 == 0 and a3 == 0:
        raise ExprError("cannot normalize the zero element")
    killing = _killing_on_span(table, (a1, a2, a3))
    maps = []
    current = (a1, a2, a3)
    if a2 != 0:
        eps = a1 / (2 * a2)
        if eps != 0:
            current = _apply_adjoint_rational(table, 2, eps, current)
            maps.append((3, eps))
        scale = 1 / current[1]
        final = tuple(scale * c for c in current)
        alpha = final[2]
        representative = "g2 + alpha*g3"
        case = "a2 nonzero" + ("" if alpha != 0 else " (alpha = 0 boundary)")
        expected = (Fraction(0), Fraction(1), alpha)
    elif a1 != 0:
        eps = a3 / a1
        if eps != 0:
            current = _apply_adjoint_rational(table, 2, eps, current)
            maps.append((3, eps))
        scale = 1 / current[0]
        final = tuple(scale * c for c in current)
        alpha = None
        representative = "g1"
        case = "a1 nonzero"
        expected = (Fraction(1), Fraction(0), Fraction(0))
    else:
        scale = 1 / a3
        final = tuple(scale * c for c in (a1, a2, a3))
        alpha = None
        representative = "g3"
        case = "a3 nonzero"
        expected = (Fraction(0), Fraction(0), Fraction(1))

    killing_final = _killing_on_span(table, final)
    verified = (
        final == expected
        and killing_final == killing * scale**2
        and len(maps) <= 3
    )
    sign = 0 if killing == 0 else (1 if killing > 0 else -1)
    return NormalizationRecord(
        triple=(a1, a2, a3),
        maps=maps,
        scale=scale,
        representative=representative,
        alpha=alpha,
        killing_sign=sign,
        verified=verified,
        case=case,
    )


def verify_optimal_system(samples: int = 100, seed: int = 7) -> OptimalSystemReport:
    """Structure table plus normalization of seeded random rational triples."""
    basis = standard_generators()
    table = structure_table(basis)

    central = []
    n = len(basis)
    for i in range(3, n):
        if all(
            all(c.is_zero() for c in table.bracket_coords(i, j)) for j in range(n)
        ):
            central.append(table.labels[i])

    alpha = Parameter("alpha")
    rep_family = [Expr.ZERO, Expr.ONE, Expr.atom(alpha)]
    killing_family = _symbolic_killing(table, rep_family)
    representative_killing = {
        "g1": _killing_on_span(table, (1, 0, 0)),
        "g3": _killing_on_span(table, (0, 0, 1)),
        "g2 + alpha*g3": killing_family,
    }
    separation_notes = [
        "sign of the trace form separates g1 (positive) from g3 (zero) and "
        "from g2 + alpha*g3 with alpha > 0 (negative)",
        "alpha = 0 reproduces the nilpotent class of g3; alpha < 0 falls in "
        "the class of g1: the family labels overlap there and coverage, not "
        "minimality, is what is certified",
    ]

    rng = random.Random(seed)
    records = []
    while len(records) < samples:
        triple = tuple(
            Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(3)
        )
        if all(a == 0 for a in triple):
            continue
        records.append(normalize_triple(table, triple))
    return OptimalSystemReport(
        table=table,
        central=tuple(central),
        representative_killing=representative_killing,
        separation_notes=separation_notes,
        records=records,
    )


def _symbolic_killing(table: StructureTable, coords3) -> Expr:
    n = len(table.basis)
    ads = [table.adjoint_matrix(i) for i in range(n)]
    coords = list(coords3) + [Expr.ZERO] * (n - 3)
    mat = [[Expr.ZERO] * n for _ in range(n)]
    for i, weight in enumerate(coords):
        if weight.is_zero():
            continue
        for r in range(n):
            for s in range(n):
                if not ads[i][r][s].is_zero():
                    mat[r][s] = mat[r][s] + weight * Expr.from_scalar(ads[i][r][s])
    total = Expr.ZERO
    for r in range(n):
        for s in range(n):
            total = total + mat[r][s] * mat[s][r]
    return total
