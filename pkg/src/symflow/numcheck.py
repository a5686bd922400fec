"""Numeric verification layer: exact seed solutions on grids, finite
difference residuals, and conserved-quantity drift.

The seed family lives on the zero background: with u = v = 0 the linear
problem integrates to plane-wave eigenfunctions and a potential f that
is linear in x and t.  Its closed form is re-derived symbolically at
construction (substituted into all eight equations of the prolonged
system, identically in the parameters), so every numeric expectation in
this module traces back to an exact statement.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .expr import (
    Atom,
    Expr,
    ExpFactor,
    IndependentVariable,
    JetCoordinate,
    Parameter,
    parse,
)
from .jetsys import PdeSystem, builtin_prolonged

DEFAULT_GRID = dict(nx=201, nt=101, x0=-5.0, x1=5.0, t0=0.0, t1=0.5)
DEFAULT_PARAMS = dict(lam=0.3, alpha=1.0, beta=0.5, f0=0.0)
DEFAULT_EPSILON = 0.1


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass
class Grid:
    """Uniform space-time grid with named complex fields of shape (nt, nx)."""

    x0: float
    dx: float
    nx: int
    t0: float
    dt: float
    nt: int
    fields: dict[str, np.ndarray] = field(default_factory=dict)
    params: dict[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("grid spacings must be positive")
        for name, array in self.fields.items():
            if array.shape != (self.nt, self.nx):
                raise ValueError(
                    f"field '{name}' has shape {array.shape}, want {(self.nt, self.nx)}"
                )

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nt)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        t, x = np.meshgrid(self.t, self.x, indexing="ij")
        return t, x


def eval_on_grid(e: Expr, env: Mapping[Atom, np.ndarray | complex]) -> np.ndarray:
    """Vectorized evaluation of an expression over numpy arrays."""
    total: np.ndarray | complex = 0j
    for mono, coeff in e.terms:
        value = coeff.to_complex()
        for a, n in mono:
            if a in env:
                base = env[a]
            elif type(a) is ExpFactor:
                base = np.exp(eval_on_grid(a.argument, env))
            else:
                raise KeyError(f"no grid value for atom '{a}'")
            value = value * np.asarray(base, dtype=complex) ** n
        total = total + value
    return np.asarray(total, dtype=complex)


# ---------------------------------------------------------------------------
# the zero-background seed
# ---------------------------------------------------------------------------


class VacuumSeed:
    """Exact solution family on the u = v = 0 background.

    phi = Exp(-i lam x - (4 i beta lam^3 + 2 i alpha lam^2) t)
    psi = Exp(+i lam x + (4 i beta lam^3 + 2 i alpha lam^2) t)
    f   = x + (12 beta lam^2 + 4 alpha lam) t + f0

    so that phi*psi = 1 and f_x = 1, f_t = 12 beta lam^2 + 4 alpha lam.
    """

    _verified = False

    def __init__(self, lam=0.3, alpha=1.0, beta=0.5, f0=0.0):
        self.lam = complex(lam)
        self.alpha = complex(alpha)
        self.beta = complex(beta)
        self.f0 = complex(f0)
        self._closed_forms = self.symbolic_forms()
        if not VacuumSeed._verified:
            self.check_symbolic()
            VacuumSeed._verified = True

    @staticmethod
    def symbolic_forms(f0_name: str = "c1") -> dict[str, Expr]:
        phase = parse("4*I*beta*lambda^3 + 2*I*alpha*lambda^2")
        x = parse("x")
        t = parse("t")
        lam = parse("lambda")
        from .expr import exp_of

        return {
            "u": Expr.ZERO,
            "v": Expr.ZERO,
            "phi": exp_of(-Expr.I * lam * x - phase * t),
            "psi": exp_of(Expr.I * lam * x + phase * t),
            "f": x + parse("12*beta*lambda^2 + 4*alpha*lambda") * t + parse(f0_name),
        }

    @classmethod
    def check_symbolic(cls) -> None:
        """Substitute the closed forms into all eight equations; parameters
        stay symbolic, so the check is an identity in lam, alpha, beta."""
        system = builtin_prolonged()
        forms = cls.symbolic_forms()
        for i, equation in enumerate(system.equations):
            value = substitute_solution(equation, forms)
            if not value.is_zero():
                raise AssertionError(
                    f"seed family violates equation {i}: residual {value}"
                )

    def env(self, t: np.ndarray, x: np.ndarray) -> dict[Atom, np.ndarray | complex]:
        return {
            IndependentVariable("x"): x,
            IndependentVariable("t"): t,
            Parameter("lambda"): self.lam,
            Parameter("alpha"): self.alpha,
            Parameter("beta"): self.beta,
            Parameter("c1"): self.f0,
        }

    def evaluate(self, t: np.ndarray, x: np.ndarray) -> dict[str, np.ndarray]:
        env = self.env(t, x)
        shape = np.broadcast(t, x).shape
        out = {}
        for name, form in self._closed_forms.items():
            value = eval_on_grid(form, env)
            out[name] = np.broadcast_to(value, shape).astype(complex)
        return out


def substitute_solution(e: Expr, closed_forms: Mapping[str, Expr]) -> Expr:
    """Replace every jet of a named dependent by the matching derivative of
    its closed form (an expression in x, t, and parameters)."""
    mapping = {}
    for a in e.jet_atoms():
        if a.name in closed_forms:
            value = closed_forms[a.name]
            for direction in a.index:
                value = value.total_derivative(direction)
            mapping[a] = value
    return e.substitute(mapping)


def make_vacuum_grid(
    params: Mapping[str, float] | None = None,
    grid_spec: Mapping[str, float] | None = None,
) -> Grid:
    p = dict(DEFAULT_PARAMS)
    p.update(params or {})
    g = dict(DEFAULT_GRID)
    g.update(grid_spec or {})
    nx, nt = int(g["nx"]), int(g["nt"])
    dx = (g["x1"] - g["x0"]) / (nx - 1)
    dt = (g["t1"] - g["t0"]) / (nt - 1)
    grid = Grid(x0=g["x0"], dx=dx, nx=nx, t0=g["t0"], dt=dt, nt=nt)
    seed = VacuumSeed(**p)
    t, x = grid.mesh()
    grid.fields = seed.evaluate(t, x)
    grid.params = {
        "lambda": complex(p["lam"]),
        "alpha": complex(p["alpha"]),
        "beta": complex(p["beta"]),
    }
    return grid


# ---------------------------------------------------------------------------
# finite-difference residuals
# ---------------------------------------------------------------------------


def _dx(a: np.ndarray, h: float) -> np.ndarray:
    return (a[:, 2:] - a[:, :-2])[1:-1, :] / (2 * h)


def _interior(a: np.ndarray) -> np.ndarray:
    return a[1:-1, 2:-2]


def pde_residual(grid: Grid, which: str = "u") -> float:
    """Max interior residual of one evolution equation under second-order
    central differences (third x-derivative uses the width-5 stencil)."""
    if grid.nx < 7 or grid.nt < 7:
        raise ValueError("grid too small for the residual stencils (need >= 7)")
    if which not in ("u", "v"):
        raise ValueError("which must be 'u' or 'v'")
    u = grid.fields["u"]
    v = grid.fields["v"]
    w = u if which == "u" else v
    dx, dt = grid.dx, grid.dt

    # interior points: t-rows 1..nt-2, x-columns 2..nx-3 (width-5 stencil)
    w_t = ((w[2:, :] - w[:-2, :]) / (2 * dt))[:, 2:-2]
    w_x = ((w[:, 2:] - w[:, :-2]) / (2 * dx))[1:-1, 1:-1]
    w_xx = ((w[:, 2:] - 2 * w[:, 1:-1] + w[:, :-2]) / dx**2)[1:-1, 1:-1]
    w_xxx = (
        (w[:, 4:] - 2 * w[:, 3:-1] + 2 * w[:, 1:-3] - w[:, :-4]) / (2 * dx**3)
    )[1:-1, :]

    core = np.s_[1:-1, 2:-2]
    u_c = u[core]
    v_c = v[core]
    w_c = w[core]

    alpha = grid.params.get("alpha", 1.0)
    beta = grid.params.get("beta", 0.5)
    if which == "u":
        residual = (
            1j * w_t
            + alpha * (w_xx - 2 * w_c**2 * v_c)
            + 1j * beta * (w_xxx - 6 * u_c * v_c * w_x)
        )
    else:
        residual = (
            1j * w_t
            - alpha * (w_xx - 2 * w_c**2 * u_c)
            + 1j * beta * (w_xxx - 6 * u_c * v_c * w_x)
        )
    return float(np.max(np.abs(residual)))


def transformed_residual_orders(
    epsilon: float = DEFAULT_EPSILON,
    levels: tuple[tuple[int, int], ...] = ((51, 26), (101, 51), (201, 101)),
    params: Mapping[str, float] | None = None,
    which: str = "u",
) -> tuple[list[float], list[float]]:
    """Residual of the flow-transformed seed under grid refinement.

    Returns the per-level residuals and the observed convergence orders
    log2(r_k / r_{k+1}); the transformed fields solve the system exactly,
    so the residual is pure truncation error and the orders sit near 2.
    """
    from .grpflow import map_solution

    residuals = []
    for nx, nt in levels:
        grid = make_vacuum_grid(params, {"nx": nx, "nt": nt})
        barred = map_solution(grid.fields, epsilon)
        transformed = Grid(
            x0=grid.x0, dx=grid.dx, nx=grid.nx, t0=grid.t0, dt=grid.dt, nt=grid.nt,
            fields=barred, params=grid.params,
        )
        residuals.append(pde_residual(transformed, which))
    orders = [
        math.log2(residuals[k] / residuals[k + 1]) for k in range(len(residuals) - 1)
    ]
    return residuals, orders


# ---------------------------------------------------------------------------
# conserved-quantity drift
# ---------------------------------------------------------------------------


def conserved_drift(grid: Grid) -> float:
    """Violation of I(t) = I(t0) + time-integrated boundary flux.

    I(t) is the trapezoid x-integral of the density f_x over the interior
    stencil range; the flux at the two x-boundaries of that range is f_t.
    Everything is second-order central, interior points only.
    """
    f = grid.fields["f"]
    dx, dt = grid.dx, grid.dt
    f_x = (f[:, 2:] - f[:, :-2]) / (2 * dx)  # shape (nt, nx-2)
    f_t = (f[2:, :] - f[:-2, :]) / (2 * dt)  # shape (nt-2, nx)

    # time slices where f_t exists: rows 1..nt-2
    density = f_x[1:-1, :]
    integral = _trapezoid(density, dx)
    # density columns span x-indices 1..nx-2; flux is f_t at those endpoints
    flux_right = f_t[:, -2]
    flux_left = f_t[:, 1]
    net_flux = flux_right - flux_left

    drift = 0.0
    accumulated = 0j
    for k in range(1, len(integral)):
        accumulated += 0.5 * (net_flux[k - 1] + net_flux[k]) * dt
        drift = max(drift, abs(integral[k] - integral[0] - accumulated))
    return float(drift)


def drift_orders(
    epsilon: float = DEFAULT_EPSILON,
    levels: tuple[tuple[int, int], ...] = ((51, 26), (101, 51), (201, 101)),
    params: Mapping[str, float] | None = None,
) -> tuple[list[float], list[float]]:
    """Drift of the transformed potential under grid refinement."""
    from .grpflow import map_solution

    drifts = []
    for nx, nt in levels:
        grid = make_vacuum_grid(params, {"nx": nx, "nt": nt})
        barred = map_solution(grid.fields, epsilon)
        moved = Grid(
            x0=grid.x0, dx=grid.dx, nx=grid.nx, t0=grid.t0, dt=grid.dt, nt=grid.nt,
            fields=barred, params=grid.params,
        )
        drifts.append(conserved_drift(moved))
    orders = [math.log2(drifts[k] / drifts[k + 1]) for k in range(len(drifts) - 1)]
    return drifts, orders


def _trapezoid(rows: np.ndarray, dx: float) -> np.ndarray:
    return (rows[:, 1:] + rows[:, :-1]).sum(axis=1) * (dx / 2)


# ---------------------------------------------------------------------------
# grid file format
# ---------------------------------------------------------------------------


def _format_complex(z: complex) -> str:
    re_s = repr(float(z.real))
    im = float(z.imag)
    im_s = repr(abs(im))
    sign = "-" if (im < 0 or (im == 0 and math.copysign(1.0, im) < 0)) else "+"
    return f"{re_s}{sign}{im_s}i"


def _parse_complex(text: str) -> complex:
    body = text.strip()
    if not body.endswith("i"):
        raise ValueError(f"bad complex literal '{text}' (want a+bi)")
    body = body[:-1]
    # split before the sign of the imaginary part (not an exponent sign)
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "eE":
            return complex(float(body[:k]), float(body[k:]))
    raise ValueError(f"bad complex literal '{text}' (want a+bi)")


def write_grid(grid: Grid) -> str:
    lines = [
        f"grid {grid.nx} {grid.nt} {grid.x0!r} {grid.dx!r} {grid.t0!r} {grid.dt!r}"
    ]
    for name in sorted(grid.fields):
        lines.append(f"field {name}")
        array = grid.fields[name]
        for row in range(grid.nt):
            lines.append(",".join(_format_complex(z) for z in array[row]))
    return "\n".join(lines) + "\n"


def read_grid(text: str) -> Grid:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or not lines[0].startswith("grid "):
        raise ValueError("grid file must start with a 'grid' header")
    header = lines[0].split()
    nx, nt = int(header[1]), int(header[2])
    x0, dx, t0, dt = (float(h) for h in header[3:7])
    grid = Grid(x0=x0, dx=dx, nx=nx, t0=t0, dt=dt, nt=nt)
    k = 1
    fields = {}
    while k < len(lines):
        if not lines[k].startswith("field "):
            raise ValueError(f"expected 'field <name>' at line {k + 1}")
        name = lines[k].split()[1]
        rows = []
        for r in range(nt):
            rows.append([_parse_complex(v) for v in lines[k + 1 + r].split(",")])
        fields[name] = np.array(rows, dtype=complex)
        k += 1 + nt
    grid.fields = fields
    grid.__post_init__()
    return grid
