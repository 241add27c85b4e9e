"""Dissipation potentials, tilted costs, generalised Fisher informations,
the three cost decompositions, generalised orthogonality, contraction and the
Fisher-information inequality.

All operations are generic over the model protocol (``hamiltonian``,
``lagrangian``, ``forces``, pairings, continuity operator).  Where a closed
form exists it is used for the left-hand side and the generic H-difference
chain for the right-hand side, so residual checks exercise two genuinely
independent code paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import entropy
from .errors import InfeasibleVelocity, OptimizationFailure

__all__ = [
    "resolve_tilt",
    "dissipation",
    "dissipation_dual",
    "tilted_hamiltonian",
    "tilted_lagrangian",
    "fisher",
    "DecompositionReport",
    "decomposition_residuals",
    "ortho_pairing",
    "modified_dissipation",
    "contracted_lagrangian",
    "fir_gap",
    "CheckRow",
    "verification_suite",
]


def resolve_tilt(model, rho, G) -> np.ndarray:
    """Materialise a tilt field at a state.

    Accepts one of the names ``"F" | "sym" | "asym" | "zero"``, a
    ``(name, scale)`` pair, a plain array, or a callable of rho.
    """
    if isinstance(G, str):
        if G == "zero":
            return np.zeros(model.n_edges)
        f = model.forces(rho)
        return {"F": f.total, "sym": f.sym, "asym": f.asym}[G]
    if isinstance(G, tuple) and len(G) == 2 and isinstance(G[0], str):
        return float(G[1]) * resolve_tilt(model, rho, G[0])
    if callable(G):
        return np.asarray(G(rho), dtype=float)
    return np.asarray(G, dtype=float)


def dissipation_dual(model, rho, zeta) -> float:
    """Dissipation potential in conjugate variables:
    Phi*(rho, zeta) = H(rho, zeta - F) - H(rho, -F)."""
    F = model.forces(rho).total
    zeta = np.asarray(zeta, dtype=float)
    return model.hamiltonian(rho, zeta - F) - model.hamiltonian(rho, -F)


def dissipation(model, rho, j) -> float:
    """Dissipation potential Phi(rho, j), by the per-family closed form.

    cosh models: 2 sum_e w_e sqrt(a_e b_e) cosh_dual(j_e / (2 sqrt(a_e b_e)));
    quadratic models: (1/4) sum_e w_e j_e^2 / chi_e.
    """
    j = np.asarray(j, dtype=float)
    if model.cost_form == "quadratic":
        chi = model.edge_mobility(rho)
        return float(0.25 * np.sum(model.edge_weight * j**2 / chi))
    a, b = model.edge_rates(rho)
    root = np.sqrt(a * b)
    out = 0.0
    for e in range(len(root)):
        if root[e] == 0.0:
            if j[e] != 0.0:
                return float(np.inf)
            continue
        out += model.edge_weight[e] * 2.0 * root[e] * entropy.cosh_dual(j[e] / (2.0 * root[e]))
    return float(out)


def tilted_hamiltonian(model, rho, G, zeta) -> float:
    """H_G(rho, zeta) = H(rho, zeta + G - F) - H(rho, G - F)."""
    F = model.forces(rho).total
    G = resolve_tilt(model, rho, G)
    zeta = np.asarray(zeta, dtype=float)
    return model.hamiltonian(rho, zeta + G - F) - model.hamiltonian(rho, G - F)


def tilted_lagrangian(model, rho, G, j, via: str = "phi") -> float:
    """Cost with the driving force replaced by G.

    Two equivalent forms, selectable for cross-checking:
    ``via="phi"``  L_G = Phi(rho, j) + Phi*(rho, G) - <G, j>;
    ``via="L"``    L_G = L(rho, j) + H(rho, G - F) + <F - G, j>.
    """
    G = resolve_tilt(model, rho, G)
    j = np.asarray(j, dtype=float)
    if via == "phi":
        return dissipation(model, rho, j) + dissipation_dual(model, rho, G) - model.pairing_flux(G, j)
    F = model.forces(rho).total
    return (
        model.lagrangian(rho, j)
        + model.hamiltonian(rho, G - F)
        + model.pairing_flux(F - G, j)
    )


def fisher(model, rho, G, lam: float) -> float:
    """Generalised Fisher information R^lam_G(rho) = -H(rho, -2 lam G(rho))."""
    G = resolve_tilt(model, rho, G)
    return -model.hamiltonian(rho, -2.0 * lam * G)


@dataclass(frozen=True)
class DecompositionReport:
    which: str
    lam: float
    tilted_cost: float
    fisher: float
    power: float
    residual: float


def decomposition_residuals(model, rho, j, lam: float):
    """Evaluate the three decompositions of the cost at (rho, j, lam).

    Each right-hand side is
        L_{G_tilt}(rho, j) + R^lam_G(rho) - 2 lam <G, j>
    with (G_tilt, G) = ((1-2lam)F, F), (F - 2lam Fsym, Fsym),
    (F - 2lam Fasym, Fasym).  The residual is the left-hand side L(rho, j)
    minus that; the tilted cost is evaluated through the dissipation
    potentials, independent of the closed-form L.
    """
    j = np.asarray(j, dtype=float)
    f = model.forces(rho)
    L = model.lagrangian(rho, j)
    reports = []
    for which, G in (("F", f.total), ("Fsym", f.sym), ("Fasym", f.asym)):
        Gt = f.total - 2.0 * lam * G
        tilted = tilted_lagrangian(model, rho, Gt, j, via="phi")
        R = fisher(model, rho, G, lam)
        power = 2.0 * lam * model.pairing_flux(G, j)
        reports.append(
            DecompositionReport(
                which=which,
                lam=lam,
                tilted_cost=tilted,
                fisher=R,
                power=power,
                residual=L - (tilted + R - power),
            )
        )
    return reports


def ortho_pairing(model, rho, zeta1, zeta2) -> float:
    """Generalised orthogonality pairing
    theta_rho(z1, z2) = (1/2)[Phi*(z1 + z2) - Phi*(-z1 + z2)]."""
    zeta1 = np.asarray(zeta1, dtype=float)
    zeta2 = np.asarray(zeta2, dtype=float)
    return 0.5 * (
        dissipation_dual(model, rho, zeta1 + zeta2)
        - dissipation_dual(model, rho, -zeta1 + zeta2)
    )


def modified_dissipation(model, rho, zeta1, zeta2) -> float:
    """Modified dissipation potential
    Phi*_{z2}(z1) = (1/2)[Phi*(z1 + z2) + Phi*(-z1 + z2)] - Phi*(z2)."""
    zeta1 = np.asarray(zeta1, dtype=float)
    zeta2 = np.asarray(zeta2, dtype=float)
    return (
        0.5
        * (
            dissipation_dual(model, rho, zeta1 + zeta2)
            + dissipation_dual(model, rho, -zeta1 + zeta2)
        )
        - dissipation_dual(model, rho, zeta2)
    )


# ---------------------------------------------------------------------------
# contraction to the state space
# ---------------------------------------------------------------------------


def _range_basis(model) -> np.ndarray:
    """Orthonormal basis of the range of the continuity operator."""
    D = model.dphi_matrix
    u, s, _ = np.linalg.svd(D, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * s[0]))
    return u[:, :rank]


def contracted_lagrangian(model, rho, u, tol: float = 1e-10, max_iter: int = 200):
    """State-space cost Lhat(rho, u) = sup_xi <xi, u> - H(rho, dphi^T xi).

    Concave maximisation over node potentials xi, gauge-fixed by restricting
    to the range of the continuity operator (for probability models this pins
    the constant mode).  Returns ``(value, xi_star)``.

    Raises ``InfeasibleVelocity`` when u is not attainable as dphi(j), and
    ``OptimizationFailure`` if damped Newton stalls.
    """
    u = np.asarray(u, dtype=float)
    Y = _range_basis(model)
    proj = Y @ (Y.T @ u)
    if np.max(np.abs(u - proj)) > 1e-9 * max(1.0, np.max(np.abs(u))):
        raise InfeasibleVelocity("velocity is outside the range of the continuity operator")

    wn = model.node_weight
    we = model.edge_weight
    P = model.dphi_matrix.T  # edge x node
    PY = P @ Y

    if model.cost_form == "quadratic":
        chi = model.edge_mobility(rho)
        j0 = model.zero_cost_flux(rho)

        def h_parts(zeta):
            val = float(np.sum(we * (chi * zeta**2 + zeta * j0)))
            return val, 2.0 * chi * zeta + j0, 2.0 * chi
    else:
        a, b = model.edge_rates(rho)

        def h_parts(zeta):
            ez, emz = np.exp(zeta), np.exp(-zeta)
            val = float(np.sum(we * (a * (ez - 1.0) + b * (emz - 1.0))))
            return val, a * ez - b * emz, a * ez + b * emz

    wu = wn * u

    def objective(theta):
        zeta = PY @ theta
        hval, hp, hpp = h_parts(zeta)
        obj = float(np.dot(Y.T @ wu, theta)) - hval
        grad = Y.T @ wu - PY.T @ (we * hp)
        hess = -(PY.T * (we * hpp)) @ PY
        return obj, grad, hess

    theta = np.zeros(Y.shape[1])
    obj, grad, hess = objective(theta)
    scale = max(1.0, float(np.max(np.abs(wu))))
    for _ in range(max_iter):
        if np.max(np.abs(grad)) <= tol * scale:
            break
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = grad
        # Newton decrement bounds the remaining ascent for a concave objective
        decrement = 0.5 * float(np.dot(grad, step))
        if decrement <= 1e-13 * (1.0 + abs(obj)):
            break
        # damped: backtrack until the objective improves
        t = 1.0
        for _ in range(60):
            cand = theta + t * step
            cobj, cgrad, chess = objective(cand)
            if cobj > obj - 1e-15 * abs(obj):
                theta, obj, grad, hess = cand, cobj, cgrad, chess
                break
            t *= 0.5
        else:
            raise OptimizationFailure("line search failed in the contraction solve")
    else:
        raise OptimizationFailure("Newton did not converge in the contraction solve")

    xi_star = Y @ theta
    return obj, xi_star


def fir_gap(model, rho, u, lam: float) -> float:
    """Lhat(rho, u) - R^lam_{Fsym}(rho) - lam <dV(rho), u>; nonnegative up to
    solver tolerance."""
    value, _ = contracted_lagrangian(model, rho, u)
    R = fisher(model, rho, "sym", lam)
    dV = model.quasipotential_gradient(rho)
    return value - R - lam * model.pairing_state(dV, np.asarray(u, dtype=float))


# ---------------------------------------------------------------------------
# verification battery used by the CLI and by the acceptance tests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckRow:
    model: str
    check: str
    lam: float
    residual: float
    tolerance: float
    passed: bool


def random_interior_state(model, rng) -> np.ndarray:
    """Random state safely away from the boundary of the model's domain."""
    k = model.n_states
    if model.name == "lattice-gas":
        phase = rng.uniform(0.0, 2.0 * np.pi)
        x = (np.arange(k) + 0.5) / k
        wave = np.sin(2.0 * np.pi * x + phase) + 0.4 * np.sin(4.0 * np.pi * x + 2.0 * phase)
        if model.mobility == "exclusion":
            prof = model.mass + 0.25 * min(model.mass, 1.0 - model.mass) * wave
        else:
            prof = model.mass * (1.0 + 0.3 * wave)
        return prof
    if not model.probability:
        return model.pi * np.exp(rng.uniform(-0.7, 0.7, size=k))
    d = rng.dirichlet(np.ones(k))
    return 0.7 * d + 0.3 / k


def random_flux(model, rho, rng) -> np.ndarray:
    j0 = model.zero_cost_flux(rho)
    scale = max(1.0, float(np.max(np.abs(j0))))
    return j0 + scale * rng.normal(size=model.n_edges)


def verification_suite(model, seed: int = 0, lambdas=None, n_states_samples: int = 100):
    """Run the full invariant battery on one model; returns a list of CheckRow.

    ``lambdas`` defaults to the grid {0, 1/4, 1/2, 3/4, 1} plus three uniform
    random values; rows of lambda-dependent checks are reported per lambda.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xFD)))
    if lambdas is None:
        lambdas = (0.0, 0.25, 0.5, 0.75, 1.0) + tuple(rng.uniform(0.0, 1.0, size=3))
    rows = []

    def add(check, lam, residual, tol):
        rows.append(CheckRow(model.name, check, lam, float(residual), tol, abs(residual) <= tol))

    has_qp = True
    try:
        model.quasipotential_gradient(random_interior_state(model, rng))
    except Exception:
        has_qp = False

    # quasipotential identity H(rho, grad dV) = 0; for a driven lattice gas
    # (A != 0) only a discretisation-order statement holds, tested elsewhere
    driven = model.cost_form == "quadratic" and not np.allclose(model.A, 0.0)
    if has_qp and not driven:
        worst = 0.0
        for _ in range(n_states_samples):
            rho = random_interior_state(model, rng)
            g = model.dphi_T(model.quasipotential_gradient(rho))
            a_scale = 1.0 + sum(np.sum(np.abs(r)) for r in (
                model.edge_rates(rho) if model.cost_form == "cosh" else (model.edge_mobility(rho),)
            ))
            worst = max(worst, abs(model.hamiltonian(rho, g)) / a_scale)
        add("quasipotential-identity", np.nan, worst, 1e-9 if model.cost_form == "cosh" else 1e-12)

    # three decompositions of the cost, reported per lambda
    samples = [
        (rho := random_interior_state(model, rng), random_flux(model, rho, rng))
        for _ in range(n_states_samples)
    ]
    for lam in lambdas:
        worst = 0.0
        for rho, j in samples:
            L = model.lagrangian(rho, j)
            for rep in decomposition_residuals(model, rho, j, lam):
                worst = max(worst, abs(rep.residual) / (1.0 + abs(L)))
        add("cost-decompositions", lam, worst, 1e-9)

    # Fisher nonnegativity on a lambda grid, and the vanishing tilts at lam = 1/2
    most_negative = 0.0
    for _ in range(20):
        rho = random_interior_state(model, rng)
        for G in ("F", "sym", "asym"):
            for lam in np.linspace(0.0, 1.0, 11):
                most_negative = min(most_negative, fisher(model, rho, G, lam))
    add("fisher-nonnegative", np.nan, most_negative, 1e-12)
    if model.cost_form == "cosh":
        worst = 0.0
        for _ in range(20):
            rho = random_interior_state(model, rng)
            for G in ("F", "sym", "asym"):
                worst = max(worst, abs(fisher(model, rho, (G, 2.0), 0.5)))
        add("fisher-zero-at-double-force", 0.5, worst, 1e-9)

    # generalised orthogonality and the two dissipation splits
    worst_theta, worst_split = 0.0, 0.0
    for _ in range(n_states_samples):
        rho = random_interior_state(model, rng)
        f = model.forces(rho)
        worst_theta = max(
            worst_theta,
            abs(ortho_pairing(model, rho, f.sym, f.asym)),
            abs(ortho_pairing(model, rho, f.asym, f.sym)),
        )
        full = dissipation_dual(model, rho, f.total)
        split1 = dissipation_dual(model, rho, f.asym) + modified_dissipation(model, rho, f.sym, f.asym)
        split2 = dissipation_dual(model, rho, f.sym) + modified_dissipation(model, rho, f.asym, f.sym)
        worst_split = max(worst_split, abs(full - split1), abs(full - split2))
    add("orthogonality", np.nan, worst_theta, 1e-9)
    add("dissipation-splits", np.nan, worst_split, 1e-9)

    # FIR inequality (record the most negative gap per lambda)
    if has_qp:
        fir_samples = [
            (rho := random_interior_state(model, rng),
             model.dphi(random_flux(model, rho, rng)))
            for _ in range(20)
        ]
        for lam in lambdas:
            most_negative = 0.0
            for rho, u in fir_samples:
                most_negative = min(most_negative, fir_gap(model, rho, u, lam))
            add("fir-gap", lam, most_negative, 1e-9)

    # reversal identity Lrev(rho, j) = L(rho, -j) + <grad dV, j>
    if has_qp:
        worst = 0.0
        for _ in range(50):
            rho = random_interior_state(model, rng)
            j = random_flux(model, rho, rng)
            g = model.dphi_T(model.quasipotential_gradient(rho))
            lhs = model.reversed_lagrangian(rho, j)
            rhs = model.lagrangian(rho, -j) + model.pairing_flux(g, j)
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
        add("reversal-identity", np.nan, worst, 1e-8)

    return rows
