import random
from fractions import Fraction

import pytest

from symflow.expr import (
    DEFAULT_VOCABULARY,
    Expr,
    ExprError,
    JetCoordinate,
    jet,
    parse,
)
from symflow.linsym import (
    PointFamily,
    SymmetryCandidate,
    coupled_ansatz,
    coupled_family,
    evolutionary_from_point,
    family_as_solution,
    frechet,
    generate_determining,
    localized_characteristic,
    prolonged_ansatz,
    prolonged_family,
    seed_pair,
    verify_family,
    verify_symmetry,
)
from conftest import random_expr


# ---------------------------------------------------------------------------
# Frechet derivative
# ---------------------------------------------------------------------------


def test_translation_characteristic_gives_total_derivative(hirota):
    sigma = {"u": jet("u", "x"), "v": jet("v", "x")}
    lin = frechet(hirota, sigma)
    for derivative, equation in zip(lin, hirota.equations):
        assert derivative == equation.total_derivative("x")


def test_zero_characteristic(hirota):
    lin = frechet(hirota, {"u": Expr.ZERO, "v": Expr.ZERO})
    assert all(e.is_zero() for e in lin)


def test_linearized_first_equation_term_for_term(hirota):
    # generic direction fields s1, s2 standing for the two components
    vocab = DEFAULT_VOCABULARY.with_dependents("s1", "s2")
    sigma = {"u": parse("s1", vocab), "v": parse("s2", vocab)}
    lin = frechet(hirota, sigma, equations=(0,))[0]
    written = parse(
        "Diff(s1,t) - alpha*Diff(s1,x,x)*I + 4*I*alpha*s1*u*v + 2*I*alpha*u^2*s2"
        " + beta*Diff(s1,x,x,x) - 6*beta*s1*v*Diff(u,x) - 6*beta*u*s2*Diff(u,x)"
        " - 6*beta*u*v*Diff(s1,x)",
        vocab,
    )
    assert lin == Expr.I * written


def test_frechet_requires_all_occurring_components(hirota):
    with pytest.raises(ExprError, match="lacks a component"):
        frechet(hirota, {"u": jet("u", "x")})


def test_frechet_linearity(prolonged):
    rng = random.Random(31)
    a = Expr.from_scalar(Fraction(3, 7)) * Expr.I
    names = prolonged.dependent_names
    for _ in range(10):
        s1 = {n: random_expr(rng, terms=2) for n in names}
        s2 = {n: random_expr(rng, terms=2) for n in names}
        combo = {n: a * s1[n] + s2[n] for n in names}
        lhs = frechet(prolonged, combo)
        rhs = [
            a * e1 + e2
            for e1, e2 in zip(frechet(prolonged, s1), frechet(prolonged, s2))
        ]
        assert all((x - y).is_zero() for x, y in zip(lhs, rhs))


# ---------------------------------------------------------------------------
# symmetry verification
# ---------------------------------------------------------------------------


def test_seed_pair_solves_linearized_evolution_equations(prolonged):
    check = verify_symmetry(prolonged, seed_pair(), equations=(0, 1))
    assert check.holds


def test_localized_characteristic_solves_all_equations(prolonged):
    check = verify_symmetry(prolonged, localized_characteristic())
    assert check.holds
    assert len(check.residuals) == len(prolonged.equations)


def test_same_sign_scaling_is_not_a_symmetry(prolonged):
    check = verify_symmetry(prolonged, {"u": jet("u"), "v": jet("v")}, equations=(0, 1))
    assert not check.holds
    assert any(not r.is_zero() for r in check.residuals)


def test_translations_verify_on_all_builtins(hirota, prolonged):
    for system in (hirota, prolonged):
        for direction in ("x", "t"):
            sigma = {
                n: Expr.atom(JetCoordinate(n, (direction,)))
                for n in system.dependent_names
            }
            assert verify_symmetry(system, sigma).holds


def test_invariance_under_on_shell_equivalent_rewriting(prolonged):
    sigma = localized_characteristic()
    ut = JetCoordinate("u", ("t",))
    shift = Expr.atom(ut) - prolonged.solved_forms[ut]
    assert prolonged.reduce(shift).is_zero()
    modified = dict(sigma.components)
    modified["u"] = modified["u"] + parse("phi*psi") * shift
    assert verify_symmetry(prolonged, modified).holds


# ---------------------------------------------------------------------------
# point-to-evolutionary conversion
# ---------------------------------------------------------------------------


def test_space_translation_characteristic(prolonged):
    sigma = evolutionary_from_point({"x": Expr.ONE}, prolonged)
    for name in prolonged.dependent_names:
        assert sigma.component(name) == Expr.atom(JetCoordinate(name, ("x",)))


def test_localized_generator_characteristic_carries_the_sign(prolonged):
    coeffs = {
        "u": parse("phi^2"),
        "v": parse("psi^2"),
        "phi": parse("phi*f"),
        "psi": parse("psi*f"),
        "f": parse("f^2"),
    }
    sigma = evolutionary_from_point(coeffs, prolonged)
    for name, eta in coeffs.items():
        assert sigma.component(name) == -eta
    # both orientations verify, by linearity
    assert verify_symmetry(prolonged, sigma).holds


def test_opposite_scaling_characteristic(hirota):
    sigma = evolutionary_from_point({"u": jet("u"), "v": -jet("v")}, hirota)
    assert sigma.component("u") == -jet("u")
    assert sigma.component("v") == jet("v")


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


def test_five_constant_family_verifies(prolonged):
    assert verify_family(prolonged, coupled_family())


def test_six_constant_family_verifies(prolonged):
    assert verify_family(prolonged, prolonged_family())


def test_flipped_variant_fails(prolonged):
    assert not verify_family(prolonged, prolonged_family(flip_psi_eta=True))


def test_five_constant_family_mutation_detected(prolonged):
    family = coupled_family()
    mutated = family.with_eta(
        "u", parse("2*I*alpha*c1*u*x/(9*beta) + c5*u + c4*phi^2")
    )
    assert not verify_family(prolonged, mutated)


def test_six_constant_family_mutation_detected(prolonged):
    family = prolonged_family()
    mutated = family.with_eta("f", parse("c2*f^2 + 2*c5*f + c6"))
    assert not verify_family(prolonged, mutated)


def test_family_basis_matches_standard_generators(prolonged):
    # setting one constant to 1 and the rest to 0 recovers each generator
    from symflow.liealg import standard_generators

    family = prolonged_family()
    constants = {"g1": "c5", "g2": "c2", "g3": "c6", "g4": "c1", "g5": "c3", "g6": "c4"}
    generators = dict(zip(("g1", "g2", "g3", "g4", "g5", "g6"), standard_generators()))
    for label, constant in constants.items():
        mapping = {}
        from symflow.expr import Parameter

        for c in ("c1", "c2", "c3", "c4", "c5", "c6"):
            mapping[Parameter(c)] = Expr.ONE if c == constant else Expr.ZERO
        coeffs = {"x": family.xi_x.substitute(mapping), "t": family.xi_t.substitute(mapping)}
        coeffs.update({n: e.substitute(mapping) for n, e in family.etas.items()})
        field = generators[label]
        for name in ("x", "t", "u", "v", "phi", "psi", "f"):
            assert coeffs.get(name, Expr.ZERO) == field.coefficient(name), (label, name)


# ---------------------------------------------------------------------------
# determining systems
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def coupled_determining(prolonged):
    return generate_determining(prolonged, coupled_ansatz())


@pytest.fixture(scope="module")
def prolonged_determining(prolonged):
    return generate_determining(prolonged, prolonged_ansatz())


def test_determining_constraints_are_linear_homogeneous(coupled_determining):
    assert coupled_determining.is_linear_homogeneous()
    assert len(coupled_determining.constraints) > 10


def test_determining_reassembly_soundness(coupled_determining):
    rebuilt = coupled_determining.reassembled_residuals()
    assert all(
        (a - b).is_zero()
        for a, b in zip(rebuilt, coupled_determining.residuals)
    )


def test_five_constant_family_satisfies_determining(prolonged, coupled_determining):
    solution = family_as_solution(coupled_family(), coupled_ansatz())
    assert coupled_determining.verify_solution(prolonged, solution)


def test_zero_solution_satisfies_determining(prolonged, coupled_determining):
    zero = {name: Expr.ZERO for name in ("X", "T", "U", "V")}
    assert coupled_determining.verify_solution(prolonged, zero)


def test_six_constant_family_satisfies_prolonged_determining(
    prolonged, prolonged_determining
):
    solution = family_as_solution(prolonged_family(), prolonged_ansatz())
    assert prolonged_determining.verify_solution(prolonged, solution)


def test_flipped_family_fails_prolonged_determining(prolonged, prolonged_determining):
    solution = family_as_solution(
        prolonged_family(flip_psi_eta=True), prolonged_ansatz()
    )
    assert not prolonged_determining.verify_solution(prolonged, solution)
    assert prolonged_determining.failing_constraints(prolonged, solution)
