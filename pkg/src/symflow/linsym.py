"""Linearization, determining equations, and symmetry verification.

Symmetries are handled internally in evolutionary (characteristic) form.
The sign convention throughout is

    sigma_w = X*w_x + T*w_t - eta_w

so the characteristic obtained from a point generator carries a minus
sign on the eta part; both orientations of a characteristic verify, by
linearity of the determining operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .expr import (
    Atom,
    DEFAULT_VOCABULARY,
    Expr,
    ExprError,
    IndependentVariable,
    JetCoordinate,
    parse,
)
from .jetsys import PdeSystem, builtin_prolonged


class UnknownFunction(Atom):
    """Formal derivative of an undetermined coefficient function.

    ``UnknownFunction("X", deps, ("u", "x"))`` stands for the mixed partial
    of X by u and x, where ``deps`` lists the coordinates X may depend on.
    Under a total derivative it expands by the chain rule over ``deps``;
    under everything else it behaves as an opaque symbol.
    """

    __slots__ = ("name", "deps", "index")

    def __init__(self, name: str, deps: tuple[str, ...], index: Iterable[str] = ()):
        self.name = name
        self.deps = deps
        self.index = tuple(sorted(index, key=deps.index))
        self._key = (3, name, len(self.index), self.index)
        self._hash = hash(self._key)

    def d_total(self, direction: str) -> Expr:
        total = Expr.ZERO
        for dep in self.deps:
            extended = Expr.atom(UnknownFunction(self.name, self.deps, self.index + (dep,)))
            if dep == direction:
                total = total + extended
            elif dep in ("x", "t"):
                continue
            else:
                total = total + Expr.atom(JetCoordinate(dep, (direction,))) * extended
        return total

    def __str__(self):
        if not self.index:
            return self.name
        return f"{self.name}[{','.join(self.index)}]"


# ---------------------------------------------------------------------------
# characteristics and linearization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymmetryCandidate:
    """Evolutionary characteristic: one component per deformed dependent."""

    components: Mapping[str, Expr]

    def component(self, name: str) -> Expr:
        return self.components[name]


@dataclass(frozen=True)
class SymmetryCheck:
    holds: bool
    residuals: tuple[Expr, ...]


def _apply_index(e: Expr, index: Sequence[str]) -> Expr:
    for direction in index:
        e = e.total_derivative(direction)
    return e


def _selected_equations(sys: PdeSystem, equations) -> list[tuple[int, Expr]]:
    if equations is None:
        return list(enumerate(sys.equations))
    return [(i, sys.equations[i]) for i in equations]


def frechet(
    sys: PdeSystem,
    sigma: SymmetryCandidate | Mapping[str, Expr],
    equations: Sequence[int] | None = None,
) -> list[Expr]:
    """Directional derivative of each selected equation along sigma.

    Every jet coordinate w_J occurring in an equation contributes
    dF/dw_J * D_J(sigma_w); sigma must cover every dependent that occurs
    in the selected equations.
    """
    components = sigma.components if isinstance(sigma, SymmetryCandidate) else sigma
    dependent_names = set(sys.dependent_names)
    out = []
    for _i, equation in _selected_equations(sys, equations):
        total = Expr.ZERO
        for a in equation.jet_atoms():
            if a.name not in dependent_names:
                continue
            direction = components.get(a.name)
            if direction is None:
                raise ExprError(
                    f"characteristic lacks a component for dependent '{a.name}'"
                )
            total = total + equation.diff(a) * _apply_index(direction, a.index)
        out.append(total)
    return out


def verify_symmetry(
    sys: PdeSystem,
    sigma: SymmetryCandidate | Mapping[str, Expr],
    equations: Sequence[int] | None = None,
) -> SymmetryCheck:
    """On-shell reduce the linearized equations along sigma; zero means symmetry."""
    residuals = tuple(sys.reduce(r) for r in frechet(sys, sigma, equations))
    return SymmetryCheck(all(r.is_zero() for r in residuals), residuals)


def evolutionary_from_point(vf, sys: PdeSystem) -> SymmetryCandidate:
    """Characteristic of a point generator: sigma_w = X*w_x + T*w_t - eta_w."""
    coeffs = getattr(vf, "coeffs", vf)
    xi_x = coeffs.get("x", Expr.ZERO)
    xi_t = coeffs.get("t", Expr.ZERO)
    components = {}
    for name, _order in sys.dependents:
        eta = coeffs.get(name, Expr.ZERO)
        components[name] = (
            xi_x * Expr.atom(JetCoordinate(name, ("x",)))
            + xi_t * Expr.atom(JetCoordinate(name, ("t",)))
            - eta
        )
    return SymmetryCandidate(components)


# ---------------------------------------------------------------------------
# point-symmetry families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointFamily:
    """Parameterized point-symmetry ansatz solution (constants stay symbolic)."""

    name: str
    xi_x: Expr
    xi_t: Expr
    etas: Mapping[str, Expr]
    equations: tuple[int, ...] | None = None
    constants: tuple[str, ...] = ()

    def characteristic(self) -> SymmetryCandidate:
        components = {}
        for dep, eta in self.etas.items():
            components[dep] = (
                self.xi_x * Expr.atom(JetCoordinate(dep, ("x",)))
                + self.xi_t * Expr.atom(JetCoordinate(dep, ("t",)))
                - eta
            )
        return SymmetryCandidate(components)

    def verify(self, sys: PdeSystem) -> SymmetryCheck:
        return verify_symmetry(sys, self.characteristic(), self.equations)

    def with_eta(self, dep: str, eta: Expr) -> "PointFamily":
        etas = dict(self.etas)
        etas[dep] = eta
        return PointFamily(
            f"{self.name}-mutated", self.xi_x, self.xi_t, etas, self.equations, self.constants
        )


def verify_family(sys: PdeSystem, family: PointFamily) -> bool:
    """True iff the family is a symmetry identically in its constants."""
    return family.verify(sys).holds


def coupled_family() -> PointFamily:
    """Five-constant point/nonlocal family of the two evolution equations.

    The characteristic lives on u, v but may involve the eigenfunctions,
    so verification runs against the prolonged closure.
    """
    return PointFamily(
        name="coupled-5",
        xi_x=parse("c1*x/3 + 2*alpha^2*c1*t/(9*beta) + c3"),
        xi_t=parse("c1*t + c2"),
        etas={
            "u": parse("I*alpha*c1*u*x/(9*beta) + c5*u + c4*phi^2"),
            "v": parse("((-6*c1 - 9*c5)*v + 9*c4*psi^2)/9 - I*alpha*v*c1*x/(9*beta)"),
        },
        equations=(0, 1),
        constants=("c1", "c2", "c3", "c4", "c5"),
    )


def prolonged_family(flip_psi_eta: bool = False) -> PointFamily:
    """Six-constant point-symmetry family of the full prolonged system.

    With ``flip_psi_eta`` the psi-coefficient is negated; that variant fails
    verification and is retained as a negative control for a sign ambiguity
    that the checker resolves.
    """
    q = parse("(2*c2*f - c1 + c5)*psi/2")
    if flip_psi_eta:
        q = -q
    return PointFamily(
        name="prolonged-6-flipped" if flip_psi_eta else "prolonged-6",
        xi_x=parse("c4"),
        xi_t=parse("c3"),
        etas={
            "u": parse("c2*phi^2 + c1*u"),
            "v": parse("c2*psi^2 - c1*v"),
            "phi": parse("(2*c2*f + c1 + c5)*phi/2"),
            "psi": q,
            "f": parse("c2*f^2 + c5*f + c6"),
        },
        equations=None,
        constants=("c1", "c2", "c3", "c4", "c5", "c6"),
    )


def seed_pair() -> SymmetryCandidate:
    """The eigenfunction-squared characteristic of the evolution equations."""
    return SymmetryCandidate({"u": parse("phi^2"), "v": parse("psi^2")})


def localized_characteristic() -> SymmetryCandidate:
    """Five-component characteristic carried by the prolonged system."""
    return SymmetryCandidate(
        {
            "u": parse("phi^2"),
            "v": parse("psi^2"),
            "phi": parse("phi*f"),
            "psi": parse("psi*f"),
            "f": parse("f^2"),
        }
    )


# ---------------------------------------------------------------------------
# determining systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointAnsatz:
    """Shape of the unknown coefficient functions for one determining run."""

    args: tuple[str, ...]
    eta_names: Mapping[str, str]
    equations: tuple[int, ...] | None = None
    xi_names: tuple[str, str] = ("X", "T")

    def unknowns(self) -> tuple[str, ...]:
        return self.xi_names + tuple(self.eta_names[d] for d in self.eta_names)


def coupled_ansatz() -> PointAnsatz:
    return PointAnsatz(
        args=("x", "t", "u", "v", "phi", "psi"),
        eta_names={"u": "U", "v": "V"},
        equations=(0, 1),
    )


def prolonged_ansatz() -> PointAnsatz:
    return PointAnsatz(
        args=("x", "t", "u", "v", "phi", "psi", "f"),
        eta_names={"u": "U", "v": "V", "phi": "P", "psi": "Q", "f": "F"},
        equations=None,
    )


@dataclass
class DeterminingSystem:
    """Coefficient-split linear constraints on the unknown functions."""

    ansatz: PointAnsatz
    constraints: list[tuple[int, tuple, Expr]]  # (equation, split monomial, constraint)
    residuals: list[Expr] = field(default_factory=list)

    @property
    def constraint_exprs(self) -> list[Expr]:
        return [c for _, _, c in self.constraints]

    def is_linear_homogeneous(self) -> bool:
        for _, _, constraint in self.constraints:
            for mono, _coeff in constraint.terms:
                degree = sum(n for a, n in mono if isinstance(a, UnknownFunction))
                if degree != 1:
                    return False
        return True

    def reassembled_residuals(self) -> list[Expr]:
        """Sum of split-monomial times constraint per equation (soundness check)."""
        out = {}
        for eq_index, key, constraint in self.constraints:
            mono_expr = Expr.ONE
            for a, n in key:
                mono_expr = mono_expr * Expr.atom(a) ** n
            out[eq_index] = out.get(eq_index, Expr.ZERO) + mono_expr * constraint
        return [out.get(i, Expr.ZERO) for i in range(len(self.residuals))]

    def substitution_for(self, sys: PdeSystem, solution: Mapping[str, Expr]) -> dict:
        """Map every unknown-function atom to the matching derivative of a
        concrete solution expression."""
        coordinate_atoms = {
            name: IndependentVariable(name)
            if name in sys.independents
            else JetCoordinate(name)
            for name in self.ansatz.args
        }
        mapping = {}
        atoms = set()
        for constraint in self.constraint_exprs:
            atoms.update(a for a in constraint.atoms() if isinstance(a, UnknownFunction))
        for a in atoms:
            concrete = solution[a.name]
            for coord in a.index:
                concrete = concrete.diff(coordinate_atoms[coord])
            mapping[a] = concrete
        return mapping

    def verify_solution(self, sys: PdeSystem, solution: Mapping[str, Expr]) -> bool:
        mapping = self.substitution_for(sys, solution)
        return all(c.substitute(mapping).is_zero() for c in self.constraint_exprs)

    def failing_constraints(self, sys: PdeSystem, solution: Mapping[str, Expr]):
        mapping = self.substitution_for(sys, solution)
        return [
            (eq, key, c)
            for eq, key, c in self.constraints
            if not c.substitute(mapping).is_zero()
        ]


def _split_by_derivative_monomials(residual: Expr) -> dict[tuple, Expr]:
    groups: dict[tuple, dict] = {}
    for mono, coeff in residual.terms:
        key = tuple(
            (a, n)
            for a, n in mono
            if isinstance(a, JetCoordinate) and a.index
        )
        rest = tuple(item for item in mono if item not in key)
        bucket = groups.setdefault(key, {})
        prev = bucket.get(rest)
        bucket[rest] = coeff if prev is None else prev + coeff
    return {key: Expr._from_map(bucket) for key, bucket in groups.items()}


def generate_determining(sys: PdeSystem, ansatz: PointAnsatz) -> DeterminingSystem:
    """Insert the ansatz characteristic, reduce on-shell, and split.

    Splitting is by exact monomials in the proper-derivative jets that
    survive reduction (the unknowns depend only on order-zero coordinates,
    so those monomials are functionally independent of the coefficients).
    """
    for name in ansatz.args:
        if name not in sys.independents and name not in sys.dependent_names:
            raise ExprError(f"ansatz argument '{name}' is not a system variable")
    args = ansatz.args
    xi_x = Expr.atom(UnknownFunction(ansatz.xi_names[0], args))
    xi_t = Expr.atom(UnknownFunction(ansatz.xi_names[1], args))
    components = {}
    for dep, eta_name in ansatz.eta_names.items():
        eta = Expr.atom(UnknownFunction(eta_name, args))
        components[dep] = (
            xi_x * Expr.atom(JetCoordinate(dep, ("x",)))
            + xi_t * Expr.atom(JetCoordinate(dep, ("t",)))
            - eta
        )
    residuals = [
        sys.reduce(r)
        for r in frechet(sys, SymmetryCandidate(components), ansatz.equations)
    ]
    constraints = []
    for eq_index, residual in enumerate(residuals):
        split = _split_by_derivative_monomials(residual)
        for key in sorted(split, key=lambda k: tuple((a.sort_key(), n) for a, n in k)):
            constraints.append((eq_index, key, split[key]))
    system = DeterminingSystem(ansatz=ansatz, constraints=constraints, residuals=residuals)
    if not system.is_linear_homogeneous():
        raise ExprError("determining constraints are not linear in the unknowns")
    return system


def family_as_solution(family: PointFamily, ansatz: PointAnsatz) -> dict[str, Expr]:
    """Rename a family's data to the ansatz's unknown-function names."""
    solution = {ansatz.xi_names[0]: family.xi_x, ansatz.xi_names[1]: family.xi_t}
    for dep, eta_name in ansatz.eta_names.items():
        solution[eta_name] = family.etas[dep]
    return solution
