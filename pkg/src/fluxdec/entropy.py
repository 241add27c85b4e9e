"""Scalar building blocks for cosh-type jump costs.

Everything here is per edge: a pair of nonnegative intensities (a, b) for the
forward and backward jumps, a net flux j, and a conjugate variable zeta.  The
cost of a net flux is the Legendre dual of the edge Hamiltonian

    h(zeta) = a (e^zeta - 1) + b (e^-zeta - 1),

which has the closed form (for a, b > 0)

    l(j) = j asinh(j / (2 sqrt(ab))) + (j/2) log(b/a) - sqrt(j^2 + 4ab) + a + b,

the unique convex function vanishing at the drift j = a - b.  Degenerate
intensities (a = 0 or b = 0) are handled as one-sided limits, which reproduce
the relative Boltzmann function on the feasible side and +inf elsewhere.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainViolation, GridTooSmall, RangeError

# exp overflows just above 709; reject conjugate variables beyond this
EXP_ARG_MAX = 700.0


def rel_boltzmann(a: float, b: float) -> float:
    """Relative Boltzmann function s(a|b) = a log(a/b) - a + b, piecewise extended.

    s(0|b) = b for b >= 0; s(a|b) = +inf for a < 0, or for a > 0 with b <= 0.
    Nonnegative whenever finite and a, b >= 0.
    """
    if a < 0.0:
        return math.inf
    if a == 0.0:
        return b
    if b <= 0.0:
        return math.inf
    return a * math.log(a / b) - a + b


def edge_hamiltonian(a: float, b: float, zeta: float) -> float:
    """a (e^zeta - 1) + b (e^-zeta - 1); zero at zeta = 0, convex in zeta."""
    if abs(zeta) > EXP_ARG_MAX:
        raise RangeError(f"conjugate variable {zeta} exceeds the exp range")
    return a * math.expm1(zeta) + b * math.expm1(-zeta)


def edge_force(a: float, b: float) -> float:
    """Stationary point of the edge Hamiltonian: f = (1/2) log(a/b).

    The minimiser of h is zeta = -f.  Undefined on the boundary a*b = 0.
    """
    if a <= 0.0 or b <= 0.0:
        raise DomainViolation("edge force needs strictly positive intensities")
    return 0.5 * math.log(a / b)


def cosh_dual(x: float) -> float:
    """Convex conjugate of cosh - 1: x asinh(x) - sqrt(1 + x^2) + 1.

    Even, nonnegative, vanishes at 0.
    """
    x = float(x)
    return x * math.asinh(x) - math.hypot(1.0, x) + 1.0


def edge_lagrangian(a: float, b: float, j: float) -> float:
    """Cost of a net flux j against intensities (a, b).

    Closed-form Legendre dual of ``edge_hamiltonian``; equals the infimum of
    s(j+|a) + s(j+ - j|b) over one-way splits j+ >= max(j, 0).  Nonnegative,
    zero exactly at j = a - b.
    """
    if a < 0.0 or b < 0.0:
        raise DomainViolation("intensities must be nonnegative")
    if a == 0.0 and b == 0.0:
        return 0.0 if j == 0.0 else math.inf
    if b == 0.0:
        # forward jumps only: backward flux is infeasible
        return rel_boltzmann(j, a) if j >= 0.0 else math.inf
    if a == 0.0:
        return rel_boltzmann(-j, b) if j <= 0.0 else math.inf
    s = 2.0 * math.sqrt(a * b)
    return (
        j * math.asinh(j / s)
        + 0.5 * j * math.log(b / a)
        - math.hypot(j, s)
        + a
        + b
    )


def edge_lagrangian_oneway(a: float, b: float, j: float) -> float:
    """Oracle form of ``edge_lagrangian``: minimise the one-way split numerically.

    inf over j+ >= max(j, 0) of s(j+|a) + s(j+ - j|b).  Slow; used to validate
    the closed form.
    """
    lo = max(j, 0.0)

    def cost(jp):
        return rel_boltzmann(jp, a) + rel_boltzmann(jp - j, b)

    if a == 0.0 or b == 0.0:
        # infimum sits at the boundary of the feasible set
        vals = [cost(lo)]
        if a > 0.0:
            vals.append(cost(max(lo, a)))
        return min(vals)
    # generous bracket around both the unconstrained optimum and the boundary
    hi = max(lo + 1.0, 4.0 * (a + b + abs(j)))
    res = minimize_scalar(cost, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return min(res.fun, cost(lo))


def numerical_legendre(f, y: float, lo: float, hi: float, num: int = 2001) -> float:
    """Brute-force Legendre transform sup_zeta (zeta * y - f(zeta)) on [lo, hi].

    The coarse grid maximum must be interior (otherwise the grid does not
    bracket the supremum and ``GridTooSmall`` is raised); a golden-section
    refinement around the grid argmax gives roughly 1e-6 relative accuracy
    for smooth convex f.
    """
    grid = np.linspace(lo, hi, num)
    vals = np.array([z * y - f(z) for z in grid])
    k = int(np.argmax(vals))
    if k == 0 or k == num - 1:
        raise GridTooSmall("conjugation grid does not bracket the supremum")
    res = minimize_scalar(
        lambda z: -(z * y - f(z)),
        bracket=(grid[k - 1], grid[k], grid[k + 1]),
        method="golden",
        options={"xtol": 1e-12},
    )
    return max(-res.fun, vals[k])
