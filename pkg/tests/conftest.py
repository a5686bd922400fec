import random
from fractions import Fraction

import pytest

from symflow.expr import Expr, IndependentVariable, JetCoordinate, Parameter, exp_of


ATOM_POOL = (
    Parameter("alpha"),
    Parameter("beta"),
    IndependentVariable("x"),
    IndependentVariable("t"),
    JetCoordinate("u"),
    JetCoordinate("v"),
    JetCoordinate("u", ("x",)),
    JetCoordinate("v", ("x",)),
    JetCoordinate("phi"),
    JetCoordinate("psi", ("t",)),
    JetCoordinate("u", ("x", "x")),
)


def random_expr(rng: random.Random, terms: int = 4, max_power: int = 2,
                atoms=ATOM_POOL, allow_exp: bool = False) -> Expr:
    """Random differential polynomial with small rational coefficients."""
    total = Expr.ZERO
    for _ in range(rng.randint(1, terms)):
        coeff = Fraction(rng.randint(-6, 6), rng.randint(1, 4))
        term = Expr.from_scalar(coeff)
        if rng.random() < 0.3:
            term = term * Expr.I
        for _ in range(rng.randint(0, 3)):
            atom = rng.choice(atoms)
            term = term * Expr.atom(atom) ** rng.randint(1, max_power)
        if allow_exp and rng.random() < 0.25:
            arg = Expr.atom(rng.choice(atoms[:4]))
            term = term * exp_of(arg)
        total = total + term
    return total


@pytest.fixture(scope="session")
def hirota():
    from symflow.jetsys import builtin_hirota

    return builtin_hirota()


@pytest.fixture(scope="session")
def prolonged():
    from symflow.jetsys import builtin_prolonged

    return builtin_prolonged()
