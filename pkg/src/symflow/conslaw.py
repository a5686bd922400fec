"""Conservation laws via a formal Lagrangian and adjoint variables.

The prolonged system's eight equations F_1..F_8 are contracted with
multipliers m1..m8 into L = sum m^b F_b.  Euler-Lagrange derivatives of
L by the original dependents give five adjoint equations; isolating one
leading multiplier derivative from each extends the reduction closure,
and the conserved vector assembled from any point symmetry then has an
on-shell divergence that reduces to the zero expression.
"""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .expr import (
    Atom,
    Expr,
    ExprError,
    JetCoordinate,
    parse,
)
from .jetsys import (
    PdeSystem,
    SolvedFormClosure,
    builtin_prolonged,
    consistent_assignment,
)

MULTIPLIERS = tuple(f"m{i}" for i in range(1, 9))
FIELD_DEPENDENTS = ("u", "v", "phi", "psi", "f")


# ---------------------------------------------------------------------------
# Euler-Lagrange operator
# ---------------------------------------------------------------------------


def euler_lagrange(e: Expr, wrt: str) -> Expr:
    """Alternating-sign total-derivative sum over all jets of ``wrt``.

    Each sorted multi-index is counted once (mixed partials are identified
    in the jet representation).
    """
    total = Expr.ZERO
    for a in e.jet_atoms(wrt):
        term = e.diff(a)
        for direction in a.index:
            term = term.total_derivative(direction)
        if len(a.index) % 2:
            term = -term
        total = total + term
    return total


# ---------------------------------------------------------------------------
# formal Lagrangian and adjoint system
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FormalLagrangian:
    expr: Expr
    multipliers: tuple[str, ...]
    system: PdeSystem

    def multiplier_degree_is_one(self) -> bool:
        names = set(self.multipliers)
        for mono, _coeff in self.expr.terms:
            degree = sum(
                n for a, n in mono if isinstance(a, JetCoordinate) and a.name in names
            )
            if degree != 1:
                return False
        return True


_lock = threading.Lock()
_cache: dict[str, object] = {}


def formal_lagrangian() -> FormalLagrangian:
    """L = sum of multiplier times equation over the prolonged corpus.

    Every equation is written leading-derivative-minus-rhs, so L vanishes
    on-shell and contains no mixed (x,t)-derivative of the field variables;
    the conserved-vector instantiation below relies on both facts.
    """
    with _lock:
        cached = _cache.get("lagrangian")
        if cached is not None:
            return cached
    system = builtin_prolonged()
    total = Expr.ZERO
    for name, equation in zip(MULTIPLIERS, system.equations):
        total = total + Expr.atom(JetCoordinate(name)) * equation
    lagrangian = FormalLagrangian(expr=total, multipliers=MULTIPLIERS, system=system)
    if not lagrangian.multiplier_degree_is_one():
        raise ExprError("formal Lagrangian is not multiplier-degree one")
    for a in lagrangian.expr.jet_atoms():
        if a.name in FIELD_DEPENDENTS and "x" in a.index and "t" in a.index:
            raise ExprError(f"formal Lagrangian contains mixed derivative {a}")
    with _lock:
        _cache["lagrangian"] = lagrangian
    return lagrangian


@dataclass(frozen=True)
class AdjointSystem:
    """The five adjoint equations and the solved multiplier derivatives."""

    equations: tuple[Expr, ...]
    solved_forms: Mapping[JetCoordinate, Expr]
    leading: tuple[JetCoordinate, ...]


# One leading multiplier derivative is isolated per adjoint equation; any
# single-derivative choice works for reduction, this one keeps the t-rules
# on m1, m2 and the x-rules on m3, m4, m7.
_ADJOINT_TARGETS = (
    ("u", JetCoordinate("m1", ("t",))),
    ("v", JetCoordinate("m2", ("t",))),
    ("phi", JetCoordinate("m3", ("x",))),
    ("psi", JetCoordinate("m4", ("x",))),
    ("f", JetCoordinate("m7", ("x",))),
)


def adjoint_system(lagrangian: FormalLagrangian | None = None) -> AdjointSystem:
    with _lock:
        cached = _cache.get("adjoint")
        if cached is not None and lagrangian is None:
            return cached
    L = (lagrangian or formal_lagrangian()).expr
    equations = []
    solved: dict[JetCoordinate, Expr] = {}
    leading = []
    for dependent, target in _ADJOINT_TARGETS:
        equation = euler_lagrange(L, dependent)
        coefficient = equation.diff(target)
        if not coefficient.is_constant() or coefficient.is_zero():
            raise ExprError(
                f"cannot isolate {target}: coefficient {coefficient} is not a "
                "nonzero constant"
            )
        c = coefficient.constant_value()
        rest = equation - Expr.from_scalar(c) * Expr.atom(target)
        solved[target] = -rest / Expr.from_scalar(c)
        equations.append(equation)
        leading.append(target)
    result = AdjointSystem(tuple(equations), solved, tuple(leading))
    if lagrangian is None:
        with _lock:
            _cache["adjoint"] = result
    return result


def combined_closure() -> SolvedFormClosure:
    """System solved forms merged with the adjoint multiplier rules."""
    with _lock:
        cached = _cache.get("closure")
        if cached is not None:
            return cached
    system = builtin_prolonged()
    adjoint = adjoint_system()
    merged = dict(system.solved_forms)
    merged.update(adjoint.solved_forms)
    closure = SolvedFormClosure(merged)
    with _lock:
        _cache["closure"] = closure
    return closure


# ---------------------------------------------------------------------------
# conserved vectors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConservedVector:
    Tt: Expr
    Tx: Expr
    generator: object = None
    notes: str = ""


def _characteristic_w(coeffs: Mapping[str, Expr], name: str) -> Expr:
    xi_x = coeffs.get("x", Expr.ZERO)
    xi_t = coeffs.get("t", Expr.ZERO)
    eta = coeffs.get(name, Expr.ZERO)
    return (
        eta
        - xi_t * Expr.atom(JetCoordinate(name, ("t",)))
        - xi_x * Expr.atom(JetCoordinate(name, ("x",)))
    )


def conserved_vector(vf, lagrangian: FormalLagrangian | None = None) -> ConservedVector:
    """Instantiate the conserved-vector formula for a point generator.

    Specialized to two independent variables, first-order time derivatives,
    third-order space derivatives, and no mixed derivatives in L:

        T^t = xi^t L + sum_w W^w dL/dw_t
        T^x = xi^x L
              + sum_w W^w  [dL/dw_x - D_x(dL/dw_xx) + D_x^2(dL/dw_xxx)]
              + sum_w D_x(W^w) [dL/dw_xx - D_x(dL/dw_xxx)]
              + sum_w D_x^2(W^w) dL/dw_xxx

    with W^w = eta^w - xi^t w_t - xi^x w_x ranging over the field
    dependents only (multipliers carry no characteristic).
    """
    lagrangian = lagrangian or formal_lagrangian()
    L = lagrangian.expr
    coeffs = getattr(vf, "coeffs", vf)
    for name, coefficient in coeffs.items():
        for a in coefficient.jet_atoms():
            if a.index:
                raise ExprError(f"generator coefficient for {name} contains {a}")
    xi_x = coeffs.get("x", Expr.ZERO)
    xi_t = coeffs.get("t", Expr.ZERO)

    Tt = xi_t * L
    Tx = xi_x * L
    for name in FIELD_DEPENDENTS:
        W = _characteristic_w(coeffs, name)
        dW = W.total_derivative("x")
        ddW = dW.total_derivative("x")
        d_t = L.diff(JetCoordinate(name, ("t",)))
        d_x = L.diff(JetCoordinate(name, ("x",)))
        d_xx = L.diff(JetCoordinate(name, ("x", "x")))
        d_xxx = L.diff(JetCoordinate(name, ("x", "x", "x")))
        d_xxx_x = d_xxx.total_derivative("x")
        Tt = Tt + W * d_t
        Tx = (
            Tx
            + W * (d_x - d_xx.total_derivative("x") + d_xxx_x.total_derivative("x"))
            + dW * (d_xx - d_xxx_x)
            + ddW * d_xxx
        )
    return ConservedVector(Tt=Tt, Tx=Tx, generator=vf)


def flux_pair() -> ConservedVector:
    """The potential conservation law: density f_x and flux -f_t, recorded
    through their on-shell local expressions."""
    system = builtin_prolonged()
    density = system.solved_forms[JetCoordinate("f", ("x",))]
    flux = -system.solved_forms[JetCoordinate("f", ("t",))]
    return ConservedVector(Tt=density, Tx=flux, notes="potential density/flux pair")


# ---------------------------------------------------------------------------
# divergence verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceCheck:
    holds: bool
    residual: Expr
    numeric_max: float
    nontrivial: str = "not assessed"


def verify_divergence(
    cv: ConservedVector,
    closure: SolvedFormClosure | None = None,
    numeric_points: int = 10,
    seed: int = 2024,
) -> DivergenceCheck:
    """Reduce D_t(Tt) + D_x(Tx) modulo the combined closure, then sample.

    The numeric stage evaluates the *unreduced* divergence at consistent
    points whose multiplier values satisfy the adjoint solved forms, and
    reports the maximum magnitude seen.
    """
    closure = closure or combined_closure()
    divergence = cv.Tt.total_derivative("t") + cv.Tx.total_derivative("x")
    residual = closure.reduce(divergence)
    numeric_max = 0.0
    for k in range(numeric_points):
        rng = random.Random(seed * 10007 + k)
        point = consistent_assignment(closure, [divergence], rng)
        numeric_max = max(numeric_max, abs(divergence.eval_numeric(point)))
    nontrivial = "not assessed"
    if not closure.reduce(cv.Tt).is_zero() or not closure.reduce(cv.Tx).is_zero():
        nontrivial = "components nonzero on-shell"
    return DivergenceCheck(
        holds=residual.is_zero(),
        residual=residual,
        numeric_max=numeric_max,
        nontrivial=nontrivial,
    )


def transcription_residual(text: str) -> dict[str, Expr]:
    """Diagnostic: compare a user-supplied conserved-vector transcription
    with the engine's own family vector, on-shell.

    The file holds ``T1 = expr`` and ``T2 = expr`` lines in the expression
    grammar (constants c1..c6 allowed).  Mismatches are reported, never
    fatal: transcriptions of long printed expressions are best-effort.
    """
    from .liealg import family_vector_field  # local import to avoid a cycle

    entries: dict[str, Expr] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, rhs = line.partition("=")
        key = key.strip()
        if not sep or key not in ("T1", "T2"):
            raise ExprError(f"transcription line must be 'T1 = ...' or 'T2 = ...': {line}")
        entries[key] = parse(rhs.strip())
    if set(entries) != {"T1", "T2"}:
        raise ExprError("transcription needs both T1 and T2")
    ours = conserved_vector(family_vector_field())
    closure = combined_closure()
    return {
        "T1": closure.reduce(entries["T1"] - ours.Tt),
        "T2": closure.reduce(entries["T2"] - ours.Tx),
    }
