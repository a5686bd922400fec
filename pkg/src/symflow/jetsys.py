"""Evolution PDE systems with solved forms and on-shell reduction.

Ships the built-in corpus: the coupled Hirota system, its linear
spectral problem (x- and t-equations for the eigenfunction pair), and
the potential variable f with f_x = phi*psi.  Reduction rewrites an
expression modulo the solved forms and their prolongations until no
eliminable jet coordinate remains.
"""

from __future__ import annotations

import random
import threading
from collections import Counter
from functools import cached_property
from typing import Iterable, Mapping

from .expr import (
    Atom,
    DEFAULT_VOCABULARY,
    Expr,
    ExprError,
    IndependentVariable,
    JetCoordinate,
    Parameter,
    Vocabulary,
    parse,
    to_text,
)


class ReductionError(ExprError):
    """Reduction failed to reach a fixed point within the pass cap."""


class ManifestError(ExprError):
    pass


# ---------------------------------------------------------------------------
# solved-form closure
# ---------------------------------------------------------------------------


DEFAULT_MAX_PASSES = 200


def set_default_pass_cap(n: int) -> None:
    """Override the reduction pass cap used by closures built afterwards."""
    global DEFAULT_MAX_PASSES
    if n < 1:
        raise ValueError("pass cap must be positive")
    DEFAULT_MAX_PASSES = n


class SolvedFormClosure:
    """Base solved forms plus lazily generated, fully reduced prolongations.

    A jet is *reducible* when some solved key has the same dependent name
    and an index that is a sub-multiset of the jet's index; the rule for it
    is the corresponding prolongation of the base rule, itself reduced to a
    fixed point before use.  When several base keys apply, the one with the
    fewest t-entries wins (then the most specific), which makes reduction
    deterministic for overdetermined pairs like the x- and t-rules of the
    eigenfunctions.
    """

    def __init__(self, solved: Mapping[JetCoordinate, Expr], max_passes: int | None = None):
        self._solved = dict(solved)
        self._max_passes = DEFAULT_MAX_PASSES if max_passes is None else max_passes
        self._rules: dict[JetCoordinate, Expr] = {}
        self._in_progress: set[JetCoordinate] = set()
        self._lock = threading.RLock()
        self._by_name: dict[str, list[JetCoordinate]] = {}
        for key in self._solved:
            self._by_name.setdefault(key.name, []).append(key)

    @property
    def solved_forms(self) -> dict[JetCoordinate, Expr]:
        return dict(self._solved)

    def base_key(self, coordinate: JetCoordinate) -> JetCoordinate | None:
        candidates = []
        index = Counter(coordinate.index)
        for key in self._by_name.get(coordinate.name, ()):
            key_index = Counter(key.index)
            if all(index[d] >= k for d, k in key_index.items()):
                candidates.append(key)
        if not candidates:
            return None
        candidates.sort(
            key=lambda k: (sum(1 for d in k.index if d == "t"), -len(k.index), k.index)
        )
        return candidates[0]

    def is_reducible(self, coordinate: JetCoordinate) -> bool:
        return self.base_key(coordinate) is not None

    def rule(self, coordinate: JetCoordinate) -> Expr | None:
        with self._lock:
            cached = self._rules.get(coordinate)
            if cached is not None:
                return cached
            base = self.base_key(coordinate)
            if base is None:
                return None
            if coordinate in self._in_progress:
                raise ReductionError(
                    f"cyclic solved-form dependency at {coordinate}"
                )
            self._in_progress.add(coordinate)
            try:
                expr = self.reduce(self._solved[base])
                extra = Counter(coordinate.index) - Counter(base.index)
                directions = sorted(extra.elements(), key=lambda d: d != "x")
                for direction in directions:
                    expr = self.reduce(expr.total_derivative(direction))
            finally:
                self._in_progress.discard(coordinate)
            self._rules[coordinate] = expr
            return expr

    def reduce(self, e: Expr) -> Expr:
        for _ in range(self._max_passes):
            mapping = {}
            for a in e.atoms():
                if isinstance(a, JetCoordinate) and self.is_reducible(a):
                    mapping[a] = self.rule(a)
            if not mapping:
                return e
            e = e.substitute(mapping)
        raise ReductionError(
            f"no fixed point after {self._max_passes} passes; "
            "the solved-form set does not terminate"
        )


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------


class PdeSystem:
    """Immutable evolution system: equations plus isolated leading derivatives."""

    def __init__(
        self,
        name: str,
        independents: Iterable[str],
        dependents: Iterable[tuple[str, int]],
        parameters: Iterable[str],
        equations: Iterable[Expr],
        solved_forms: Mapping[JetCoordinate, Expr],
        check: bool = True,
    ):
        self.name = name
        self.independents = tuple(independents)
        self.dependents = tuple(dependents)
        self.parameters = tuple(parameters)
        self.equations = tuple(equations)
        self.solved_forms = dict(solved_forms)
        if check:
            self._check_well_formed()

    @property
    def dependent_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.dependents)

    @cached_property
    def closure(self) -> SolvedFormClosure:
        return SolvedFormClosure(self.solved_forms)

    @cached_property
    def vocabulary(self) -> Vocabulary:
        return Vocabulary(self.independents, self.dependent_names, self.parameters)

    def _check_well_formed(self):
        closure = SolvedFormClosure(self.solved_forms)
        for key, rhs in self.solved_forms.items():
            for a in rhs.jet_atoms():
                if closure.is_reducible(a):
                    raise ExprError(
                        f"solved form for {key} is not resolved: rhs contains {a}"
                    )
        for i, equation in enumerate(self.equations):
            if not closure.reduce(equation).is_zero():
                raise ExprError(f"equation {i} does not vanish on its solved forms")

    def reduce(self, e: Expr) -> Expr:
        return self.closure.reduce(e)

    def __repr__(self):
        return f"<PdeSystem {self.name}: {len(self.equations)} equations>"


def on_shell_reduce(e: Expr, sys: PdeSystem) -> Expr:
    """Fixed point of substitution against the system's solved-form closure."""
    return sys.closure.reduce(e)


# ---------------------------------------------------------------------------
# built-in corpus
# ---------------------------------------------------------------------------

LAX_ENTRY_A = (
    "-4*beta*I*lambda^3 - 2*alpha*I*lambda^2 - 2*beta*I*u*v*lambda"
    " - alpha*I*u*v + beta*(v*Diff(u,x) - u*Diff(v,x))"
)
LAX_ENTRY_B = (
    "4*beta*u*lambda^2 + (2*beta*I*Diff(u,x) + 2*alpha*u)*lambda"
    " + alpha*I*Diff(u,x) - beta*(Diff(u,x,x) - 2*u^2*v)"
)
LAX_ENTRY_C = (
    "4*beta*v*lambda^2 - (2*beta*I*Diff(v,x) - 2*alpha*v)*lambda"
    " - alpha*I*Diff(v,x) - beta*(Diff(v,x,x) - 2*v^2*u)"
)

_EVOLUTION_EQUATIONS = (
    "I*Diff(u,t) + alpha*(Diff(u,x,x) - 2*u^2*v) + I*beta*(Diff(u,x,x,x) - 6*u*v*Diff(u,x))",
    "I*Diff(v,t) - alpha*(Diff(v,x,x) - 2*v^2*u) + I*beta*(Diff(v,x,x,x) - 6*u*v*Diff(v,x))",
)

_EVOLUTION_SOLVED = {
    "Diff(u,t)": "I*alpha*(Diff(u,x,x) - 2*u^2*v) - beta*(Diff(u,x,x,x) - 6*u*v*Diff(u,x))",
    "Diff(v,t)": "-I*alpha*(Diff(v,x,x) - 2*v^2*u) - beta*(Diff(v,x,x,x) - 6*u*v*Diff(v,x))",
}

POTENTIAL_T_RHS = (
    "-beta*phi^2*Diff(v,x) + 12*beta*lambda^2*phi*psi + 4*lambda*alpha*phi*psi"
    " - beta*psi^2*Diff(u,x) + 2*beta*phi*psi*u*v + 4*I*lambda*beta*psi^2*u"
    " - 4*I*lambda*beta*phi^2*v + I*alpha*psi^2*u - I*alpha*phi^2*v"
)

_LINEAR_SOLVED = {
    "Diff(phi,x)": "-I*lambda*phi + u*psi",
    "Diff(psi,x)": "v*phi + I*lambda*psi",
    "Diff(phi,t)": f"({LAX_ENTRY_A})*phi + ({LAX_ENTRY_B})*psi",
    "Diff(psi,t)": f"({LAX_ENTRY_C})*phi - ({LAX_ENTRY_A})*psi",
    "Diff(f,x)": "phi*psi",
    "Diff(f,t)": POTENTIAL_T_RHS,
}

_cache_lock = threading.Lock()
_builtin_cache: dict[str, PdeSystem] = {}


def _solved_key(text: str) -> JetCoordinate:
    e = parse(text)
    atoms = list(e.atoms())
    if len(e.terms) != 1 or len(atoms) != 1 or e.terms[0][1] != 1:
        raise ManifestError(f"'{text}' is not a bare jet coordinate")
    a = atoms[0]
    if not isinstance(a, JetCoordinate):
        raise ManifestError(f"'{text}' is not a jet coordinate")
    return a


def builtin_hirota() -> PdeSystem:
    """The coupled third-order evolution system with dependents u, v."""
    with _cache_lock:
        cached = _builtin_cache.get("hirota")
        if cached is None:
            cached = PdeSystem(
                name="hirota",
                independents=("t", "x"),
                dependents=(("u", 3), ("v", 3)),
                parameters=("alpha", "beta"),
                equations=[parse(s) for s in _EVOLUTION_EQUATIONS],
                solved_forms={
                    _solved_key(k): parse(v) for k, v in _EVOLUTION_SOLVED.items()
                },
            )
            _builtin_cache["hirota"] = cached
        return cached


def builtin_prolonged() -> PdeSystem:
    """hirota extended with the eigenfunction pair and the potential f.

    The eight equations are the two evolution equations followed by each
    auxiliary solved form in leading-derivative-minus-rhs orientation.
    """
    with _cache_lock:
        cached = _builtin_cache.get("prolonged")
        if cached is not None:
            return cached
    base = builtin_hirota()
    solved = dict(base.solved_forms)
    equations = list(base.equations)
    for key_text, rhs_text in _LINEAR_SOLVED.items():
        key = _solved_key(key_text)
        rhs = parse(rhs_text)
        solved[key] = rhs
        equations.append(Expr.atom(key) - rhs)
    system = PdeSystem(
        name="prolonged",
        independents=("t", "x"),
        dependents=(("u", 3), ("v", 3), ("phi", 1), ("psi", 1), ("f", 1)),
        parameters=("alpha", "beta", "lambda"),
        equations=equations,
        solved_forms=solved,
    )
    with _cache_lock:
        _builtin_cache["prolonged"] = system
    return system


def lax_entries() -> dict[str, Expr]:
    return {
        "a": parse(LAX_ENTRY_A),
        "b": parse(LAX_ENTRY_B),
        "c": parse(LAX_ENTRY_C),
    }


def cross_derivative_residuals(sys: PdeSystem) -> dict[str, Expr]:
    """Compatibility residual reduce(D_t(x-rule) - D_x(t-rule)) per dependent.

    Mixed partials are identified in the jet representation, so the
    meaningful flatness certificate is the cross-derivative of the two
    solved forms; a zero residual for the eigenfunctions is exactly the
    statement that the linear problem is compatible on solutions.
    """
    out = {}
    for name, _order in sys.dependents:
        x_key = JetCoordinate(name, ("x",))
        t_key = JetCoordinate(name, ("t",))
        if x_key in sys.solved_forms and t_key in sys.solved_forms:
            mixed = sys.solved_forms[x_key].total_derivative("t") - sys.solved_forms[
                t_key
            ].total_derivative("x")
            out[name] = sys.reduce(mixed)
    return out


# ---------------------------------------------------------------------------
# consistent numeric sampling
# ---------------------------------------------------------------------------


def _random_complex(rng: random.Random) -> complex:
    # Annulus keeps magnitudes O(1) and away from 0 (some atoms get inverted).
    magnitude = 0.3 + 0.9 * rng.random()
    angle = 2.0 * 3.141592653589793 * rng.random()
    return magnitude * complex(
        __import__("math").cos(angle), __import__("math").sin(angle)
    )


def consistent_assignment(
    closure: SolvedFormClosure,
    exprs: Iterable[Expr],
    rng: random.Random,
) -> dict[Atom, complex]:
    """Random values for free atoms, computed values for solved ones.

    Every atom occurring in ``exprs`` (and in the rules needed to resolve
    them) receives a value, and the assignment satisfies every solved form
    to machine precision.
    """
    reducible: dict[JetCoordinate, Expr] = {}
    free: set[Atom] = set()
    pending = []
    for e in exprs:
        pending.extend(e.atoms())
    while pending:
        a = pending.pop()
        if isinstance(a, JetCoordinate) and closure.is_reducible(a):
            if a not in reducible:
                rule = closure.rule(a)
                reducible[a] = rule
                pending.extend(rule.atoms())
        else:
            free.add(a)
    assignment: dict[Atom, complex] = {a: _random_complex(rng) for a in free}
    for a, rule in sorted(reducible.items(), key=lambda item: item[0].sort_key()):
        assignment[a] = rule.eval_numeric(assignment)
    return assignment


def consistent_point(
    sys: PdeSystem, seed: int, max_order: int = 2
) -> dict[Atom, complex]:
    """On-shell numeric sample covering all jets up to ``max_order``."""
    rng = random.Random(seed)
    exprs = list(sys.equations)
    for name, _order in sys.dependents:
        for nx in range(max_order + 1):
            for nt in range(max_order + 1 - nx):
                exprs.append(Expr.atom(JetCoordinate(name, ("x",) * nx + ("t",) * nt)))
    return consistent_assignment(sys.closure, exprs, rng)


# ---------------------------------------------------------------------------
# manifest format
# ---------------------------------------------------------------------------

_SECTIONS = ("[independents]", "[dependents]", "[parameters]", "[equations]", "[solved]")


def write_manifest(sys: PdeSystem) -> str:
    lines = ["[independents]"]
    lines.extend(sys.independents)
    lines.append("[dependents]")
    lines.extend(f"{name} {order}" for name, order in sys.dependents)
    lines.append("[parameters]")
    lines.extend(sys.parameters)
    lines.append("[equations]")
    lines.extend(to_text(e) for e in sys.equations)
    lines.append("[solved]")
    for key in sorted(sys.solved_forms, key=lambda k: k.sort_key()):
        lines.append(f"{key} = {to_text(sys.solved_forms[key])}")
    return "\n".join(lines) + "\n"


def parse_manifest(text: str, name: str = "manifest") -> PdeSystem:
    sections: dict[str, list[str]] = {s: [] for s in _SECTIONS}
    current: str | None = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line in sections:
            current = line
            continue
        if current is None:
            raise ManifestError(f"content before any section header: '{line}'")
        sections[current].append(line)

    independents = tuple(sections["[independents]"])
    dependents = []
    for line in sections["[dependents]"]:
        fields = line.split()
        if len(fields) != 2 or not fields[1].isdigit():
            raise ManifestError(f"bad dependent line '{line}' (want 'name order')")
        dependents.append((fields[0], int(fields[1])))
    parameters = tuple(sections["[parameters]"])
    vocabulary = Vocabulary(independents, tuple(n for n, _ in dependents), parameters)

    equations = [parse(line, vocabulary) for line in sections["[equations]"]]
    solved = {}
    for line in sections["[solved]"]:
        lhs, sep, rhs = line.partition("=")
        if not sep:
            raise ManifestError(f"bad solved line '{line}' (want 'JetCoord = expr')")
        key_expr = parse(lhs.strip(), vocabulary)
        key_atoms = list(key_expr.atoms())
        if (
            len(key_expr.terms) != 1
            or len(key_atoms) != 1
            or key_expr.terms[0][1] != 1
            or not isinstance(key_atoms[0], JetCoordinate)
        ):
            raise ManifestError(f"solved-form key must be a bare jet: '{lhs.strip()}'")
        solved[key_atoms[0]] = parse(rhs.strip(), vocabulary)
    return PdeSystem(
        name=name,
        independents=independents,
        dependents=dependents,
        parameters=parameters,
        equations=equations,
        solved_forms=solved,
    )
