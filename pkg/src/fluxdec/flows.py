"""Deterministic dynamics: adaptive integration of the full, symmetric
(dissipative), antisymmetric (conservative) and general tilted zero-cost
flows, the sqrt-density linearisation of the antisymmetric flow, skew
structure and Jacobi-identity checks, energy/threshold formulas and the
energy-dissipation monitors.

Integration uses an embedded Dormand-Prince 4(5) pair (scipy's RK45) behind
the flow contracts here; conservation laws are *tested*, not enforced, so no
structure-preserving integrator is needed.  A trajectory stops with a
``boundary_hit`` flag as soon as any coordinate falls below ``BOUNDARY_EPS``;
past that point solutions are not unique and are deliberately not continued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import brentq, minimize_scalar

from .decomposition import dissipation, dissipation_dual, resolve_tilt
from .errors import StiffnessError, UnsupportedModel
from .models import IpfgModel, LatticeGasModel, ZeroRangeModel, skew_rotation_matrix

BOUNDARY_EPS = 1e-12

__all__ = [
    "Trajectory",
    "flux_field",
    "integrate_flow",
    "omega_flow",
    "energy",
    "energy_gradient",
    "threshold_sigma",
    "poisson_matrix",
    "check_jacobi",
    "find_jacobi_violation",
    "detect_period",
    "edi_residual",
]


@dataclass
class Trajectory:
    t: np.ndarray
    rho: np.ndarray       # [nt, k]
    flux: np.ndarray      # [nt, m], the flow's flux field along the path
    V: np.ndarray
    E: np.ndarray
    min_rho: np.ndarray
    boundary_hit: bool
    t_boundary: float | None
    dense: object = None  # scipy dense output, when available

    @property
    def rho_final(self) -> np.ndarray:
        return self.rho[-1]


def flux_field(model, kind):
    """The flux map rho -> j of a named flow.

    ``"full"`` is the zero-cost flux, ``"symmetric"`` / ``"antisymmetric"``
    the zero-cost fluxes of the sym/asym-tilted costs (evaluated through the
    boundary-stable per-family rate forms), and ``("tilted", G, lam)`` the
    zero-cost flux of the cost tilted by F - 2 lam G.
    """
    if kind == "full":
        return model.zero_cost_flux
    if kind == "symmetric":
        return model.symmetric_flux
    if kind == "antisymmetric":
        return model.antisymmetric_flux
    if isinstance(kind, tuple) and kind[0] == "tilted":
        _, G, lam = kind

        def tilted_flux(rho):
            # step-size control probes slightly past the boundary before the
            # terminating event localises it; keep the field finite there
            rho = np.maximum(rho, 1e-15)
            if getattr(model, "mobility", None) == "exclusion":
                rho = np.minimum(rho, 1.0 - 1e-15)
            zeta = -2.0 * float(lam) * resolve_tilt(model, rho, G)
            return model.hamiltonian_gradient(rho, zeta)

        return tilted_flux
    raise ValueError(f"unknown flow kind {kind!r}")


def _monitors(model, rho):
    try:
        V = model.quasipotential(rho)
    except Exception:
        V = math.nan
    try:
        E = energy(model, rho)
    except UnsupportedModel:
        E = math.nan
    return V, E


def integrate_flow(model, kind, rho0, t_final, rtol=1e-8, atol=1e-10,
                   n_samples=400, boundary_eps=BOUNDARY_EPS) -> Trajectory:
    """Integrate d rho/dt = dphi(j_kind(rho)) from rho0 over [0, t_final]."""
    rho0 = np.asarray(rho0, dtype=float)
    field = flux_field(model, kind)

    def rhs(t, rho):
        return model.dphi(field(rho))

    def hit_boundary(t, rho):
        return float(np.min(rho) - boundary_eps)

    hit_boundary.terminal = True
    hit_boundary.direction = -1.0

    sol = solve_ivp(
        rhs, (0.0, float(t_final)), rho0, method="RK45",
        rtol=rtol, atol=atol, dense_output=True,
        t_eval=np.linspace(0.0, float(t_final), n_samples),
        events=hit_boundary,
    )
    if sol.status == -1:
        raise StiffnessError(sol.message)
    boundary_hit = sol.status == 1
    ts = sol.t
    ys = sol.y.T
    if boundary_hit:
        ts = np.append(ts, sol.t_events[0][0])
        ys = np.vstack([ys, sol.y_events[0][0]])
    flux = np.array([field(r) for r in ys])
    VE = [_monitors(model, r) for r in ys]
    return Trajectory(
        t=ts,
        rho=ys,
        flux=flux,
        V=np.array([v for v, _ in VE]),
        E=np.array([e for _, e in VE]),
        min_rho=ys.min(axis=1),
        boundary_hit=boundary_hit,
        t_boundary=float(sol.t_events[0][0]) if boundary_hit else None,
        dense=sol.sol,
    )


# ---------------------------------------------------------------------------
# sqrt-density linear flow
# ---------------------------------------------------------------------------


def omega_flow(model: IpfgModel, rho0, t_final, n_samples=400) -> Trajectory:
    """Antisymmetric flow through the linear system on omega = sqrt(rho).

    omega(t) = expm(t A / 2) omega0 with the skew matrix
    A_xy = Q_yx sqrt(pi_y/pi_x) - Q_xy sqrt(pi_x/pi_y); valid while omega
    stays in the positive octant, after which the trajectory is flagged.
    """
    if not isinstance(model, IpfgModel):
        raise UnsupportedModel("the sqrt-density flow is linear only for independent particles")
    A = skew_rotation_matrix(model.Q, model.pi)
    omega0 = np.sqrt(np.asarray(rho0, dtype=float))
    ts = np.linspace(0.0, float(t_final), n_samples)

    def omega_at(t):
        return expm(0.5 * t * A) @ omega0

    omegas = np.empty((n_samples, model.n_states))
    omegas[0] = omega0
    prop = expm(0.5 * (ts[1] - ts[0]) * A)
    for i in range(1, n_samples):
        omegas[i] = prop @ omegas[i - 1]

    boundary_hit = False
    t_boundary = None
    cut = n_samples
    for i in range(n_samples):
        if np.min(omegas[i]) < 0.0:
            boundary_hit = True
            t_lo = ts[i - 1] if i > 0 else 0.0
            if float(np.min(omega_at(t_lo))) <= 0.0:
                t_boundary = t_lo
            else:
                t_boundary = brentq(
                    lambda t: float(np.min(omega_at(t))), t_lo, ts[i], xtol=1e-13
                )
            cut = i
            break
    ts = ts[:cut]
    omegas = omegas[:cut]
    if boundary_hit:
        ts = np.append(ts, t_boundary)
        omegas = np.vstack([omegas, omega_at(t_boundary)])
    rho = omegas**2
    field = flux_field(model, "antisymmetric")
    flux = np.array([field(r) for r in rho])
    VE = [_monitors(model, r) for r in rho]
    return Trajectory(
        t=ts, rho=rho, flux=flux,
        V=np.array([v for v, _ in VE]),
        E=np.array([e for _, e in VE]),
        min_rho=rho.min(axis=1),
        boundary_hit=boundary_hit,
        t_boundary=t_boundary,
    )


# ---------------------------------------------------------------------------
# conserved energy and critical threshold
# ---------------------------------------------------------------------------


def energy(model, rho) -> float:
    """Energy conserved by the antisymmetric flow.

    Independent particles: 1 - sum_x sqrt(pi_x rho_x); zero-range:
    1 - sum_x integral_0^rho_x eta_x(z/pi_x)^(-1/2) dz; lattice gas: the
    potential energy sum dx U rho.
    """
    rho = np.asarray(rho, dtype=float)
    if isinstance(model, IpfgModel):
        return float(1.0 - np.sum(np.sqrt(model.pi * np.maximum(rho, 0.0))))
    if isinstance(model, ZeroRangeModel):
        return 1.0 - model.energy_integral(np.maximum(rho, 0.0))
    if isinstance(model, LatticeGasModel):
        return model.energy(rho)
    raise UnsupportedModel(f"no conserved energy for model {model.name!r}")


def energy_gradient(model, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if isinstance(model, IpfgModel):
        return -0.5 * np.sqrt(model.pi / rho)
    if isinstance(model, ZeroRangeModel):
        return -1.0 / np.sqrt(model.node_intensity(rho))
    raise UnsupportedModel(f"no conserved energy for model {model.name!r}")


def threshold_sigma(model) -> float:
    """Critical energy below which the antisymmetric orbit stays interior.

    The minimum of the conserved energy over the boundary faces {rho_x = 0}
    of the simplex; degenerate orbits and non-uniqueness start at this level.
    """
    if isinstance(model, IpfgModel):
        return float(np.min(1.0 - np.sqrt(1.0 - model.pi)))
    if not isinstance(model, ZeroRangeModel):
        raise UnsupportedModel("threshold defined for the jump models only")
    k = model.n_states
    best = math.inf
    for x in range(k):
        others = [z for z in range(k) if z != x]

        def mass(c):
            return sum(model.pi[z] * model.eta_inverse(z, c) for z in others) - 1.0

        hi = 1.0
        while mass(hi) < 0.0:
            hi *= 2.0
            if hi > 1e12:
                raise UnsupportedModel("threshold root not bracketed")
        c = brentq(mass, 0.0, hi, xtol=1e-14)
        rho_face = np.zeros(k)
        for z in others:
            rho_face[z] = model.pi[z] * model.eta_inverse(z, c)
        best = min(best, energy(model, rho_face))
    return best


# ---------------------------------------------------------------------------
# skew structure and Jacobi identity
# ---------------------------------------------------------------------------


def poisson_matrix(model, point, coords="state") -> np.ndarray:
    """Skew matrix J generating the antisymmetric flow, rho_dot = J(rho) DE.

    ``coords="omega"`` (independent particles only) gives the linear
    structure in sqrt-density coordinates,
    J(omega) = (1/2)(sqrt(pi) x (A omega) - (A omega) x sqrt(pi)).
    """
    point = np.asarray(point, dtype=float)
    A = skew_rotation_matrix(model.Q, model.pi)
    s = np.sqrt(model.pi)
    if coords == "omega":
        if not isinstance(model, IpfgModel):
            raise UnsupportedModel("omega coordinates need the independent-particle model")
        Aw = A @ point
        return 0.5 * (np.outer(s, Aw) - np.outer(Aw, s))
    if coords != "state":
        raise ValueError(f"unknown coordinates {coords!r}")
    k = model.n_states
    if isinstance(model, IpfgModel):
        r = np.sqrt(np.maximum(point, 0.0))
        core = np.einsum("x,yz,z->xy", s, A, r) - np.einsum("y,xz,z->xy", s, A, r)
        return 2.0 * core * np.outer(r, r)
    if isinstance(model, ZeroRangeModel):
        lam = np.sqrt(model.pi * model.node_intensity(np.maximum(point, 0.0)))
        core = np.einsum("x,yz,z->xy", s, A, lam) - np.einsum("y,xz,z->xy", s, A, lam)
        return core * np.outer(lam, lam)
    raise UnsupportedModel(f"no skew structure for model {model.name!r}")


def check_jacobi(model, point, G1, G2, G3, coords="state", fd_step=1e-5) -> float:
    """Cyclic-sum residual of the Jacobi identity for constant covectors G_i.

    Uses the exact linearity of the omega-coordinate structure for the
    independent-particle model and central finite differences otherwise.
    """
    point = np.asarray(point, dtype=float)
    Gs = [np.asarray(g, dtype=float) for g in (G1, G2, G3)]

    def J(p):
        return poisson_matrix(model, p, coords=coords)

    if coords == "omega":
        def dJ(p, v):
            return J(v)  # linear in the point
    else:
        def dJ(p, v):
            h = fd_step / max(1.0, float(np.max(np.abs(v))))
            return (J(p + h * v) - J(p - h * v)) / (2.0 * h)

    Jp = J(point)
    total = 0.0
    for i in range(3):
        g1, g2, g3 = Gs[i % 3], Gs[(i + 1) % 3], Gs[(i + 2) % 3]
        total += float(g1 @ (dJ(point, Jp @ g2) @ g3))
    return total


def find_jacobi_violation(model, rng, tries=200, threshold=1e-6):
    """Search for a state and covector triple violating the Jacobi identity.

    Returns (point, (G1, G2, G3), residual) or None.  The zero-range skew
    structure conserves the energy but in general fails this identity.
    """
    from .decomposition import random_interior_state

    for _ in range(tries):
        rho = random_interior_state(model, rng)
        Gs = rng.normal(size=(3, model.n_states))
        res = check_jacobi(model, rho, *Gs)
        if abs(res) > threshold:
            return rho, tuple(Gs), res
    return None


# ---------------------------------------------------------------------------
# period detection and energy-dissipation monitors
# ---------------------------------------------------------------------------


def detect_period(model, rho0, t_max=None, n_probe=2000):
    """Locate the first return time of the antisymmetric flow to rho0.

    A ray section through the orbit centre would need model-specific
    geometry; the return map ||rho(t) - rho0|| is model-free and its first
    interior minimum after leaving the neighbourhood of rho0 is refined with
    a bounded scalar minimisation on the dense output.  Returns
    (period, distance at return).
    """
    rho0 = np.asarray(rho0, dtype=float)
    if t_max is None:
        if isinstance(model, IpfgModel):
            A = skew_rotation_matrix(model.Q, model.pi)
            freq = np.max(np.abs(np.imag(np.linalg.eigvals(A))))
            t_max = 2.5 * (4.0 * math.pi / freq)
        else:
            t_max = 80.0
    traj = integrate_flow(model, "antisymmetric", rho0, t_max, rtol=1e-10, atol=1e-12,
                          n_samples=n_probe)
    if traj.boundary_hit:
        raise UnsupportedModel("orbit reaches the boundary; no period")
    dist = np.linalg.norm(traj.rho - rho0[None, :], axis=1)
    away = np.max(dist) * 0.2
    left = np.argmax(dist > away)
    if left == 0:
        raise UnsupportedModel("orbit never leaves the neighbourhood of the start")
    cand = None
    for i in range(left + 1, len(dist) - 1):
        if dist[i] <= dist[i - 1] and dist[i] <= dist[i + 1] and dist[i] < away:
            cand = i
            break
    if cand is None:
        raise UnsupportedModel("no return detected within the horizon")
    f = lambda t: float(np.linalg.norm(traj.dense(t) - rho0))
    res = minimize_scalar(f, bounds=(traj.t[cand - 1], traj.t[cand + 1]), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(res.fun)


def edi_residual(model, traj: Trajectory):
    """Energy-dissipation monitors along a symmetric-flow trajectory.

    Returns (pointwise, chain): pointwise_i is
    Phi(rho, j) + Phi*(rho, Fsym) - <Fsym, j>, zero along the dissipative
    flow; chain_i compares the central-difference time derivative of V with
    the exact power -2 <Fsym, j> (one-sided at the ends, so skip those).
    """
    nt = len(traj.t)
    pointwise = np.empty(nt)
    power = np.empty(nt)
    for i in range(nt):
        rho, j = traj.rho[i], traj.flux[i]
        fsym = model.forces(rho).sym
        pointwise[i] = (
            dissipation(model, rho, j)
            + dissipation_dual(model, rho, fsym)
            - model.pairing_flux(fsym, j)
        )
        power[i] = -2.0 * model.pairing_flux(fsym, j)
    chain = np.full(nt, np.nan)
    chain[1:-1] = (traj.V[2:] - traj.V[:-2]) / (traj.t[2:] - traj.t[:-2]) - power[1:-1]
    return pointwise, chain
