"""The four model families: independent jump particles on a graph (IPFG),
zero-range interaction, mass-action reaction networks, and a 1-D periodic
lattice gas with quadratic cost.

Every model exposes the same surface:

    hamiltonian(rho, zeta)        convex generating function H, H(rho, 0) = 0
    lagrangian(rho, j)            its Legendre dual, >= 0, zero at j0(rho)
    zero_cost_flux(rho)           the drift j0
    quasipotential(rho)           V >= 0 solving H(rho, grad dV) = 0
    quasipotential_gradient(rho)  dV at interior rho
    forces(rho)                   driving force and its symmetric/antisymmetric split

The three jump families share the cosh structure: per edge (or reaction pair)
there is a forward intensity a_e(rho) and backward intensity b_e(rho), and
H(rho, zeta) = sum_e [a_e (e^zeta - 1) + b_e (e^-zeta - 1)].  The lattice gas
is quadratic; both shapes are distinguished by ``cost_form``.

Pairings carry explicit quadrature weights so the lattice model (cell width
dx) and the jump models (unit weights) run through identical generic code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components
from scipy.special import xlogy

from . import entropy
from .errors import (
    DomainViolation,
    ModelSpecError,
    NonUniqueMeasure,
    NormalizationFailure,
    UnsupportedModel,
)
from .graphs import graph_from_rate_matrix

__all__ = [
    "ForceTriple",
    "IpfgModel",
    "ZeroRangeModel",
    "CrnModel",
    "LatticeGasModel",
    "PowerEta",
    "AffineCappedEta",
    "TabulatedEta",
    "ScaledEta",
    "stationary_measure",
    "normalize_zero_range",
    "check_complex_balance",
    "skew_rotation_matrix",
]

LOG_SPACE_ALPHA = 8.0  # monomial rates switch to log space beyond this exponent


@dataclass(frozen=True)
class ForceTriple:
    total: np.ndarray
    sym: np.ndarray
    asym: np.ndarray


def stationary_measure(Q: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Unique positive probability vector with Q^T pi = 0.

    Raises ``NonUniqueMeasure`` if Q is reducible.
    """
    Q = np.asarray(Q, dtype=float)
    k = Q.shape[0]
    if k == 1:
        return np.ones(1)
    support = (Q > 0).astype(int)
    n_comp, _ = connected_components(support, directed=True, connection="strong")
    if n_comp != 1:
        raise NonUniqueMeasure("rate matrix is reducible")
    # smallest singular vector of Q^T, then sign-fix and normalise
    _, _, vt = np.linalg.svd(Q.T)
    pi = vt[-1]
    pi = pi * np.sign(pi.sum())
    pi = pi / pi.sum()
    if np.any(pi <= 0):
        raise NonUniqueMeasure("stationary vector has non-positive entries")
    res = np.max(np.abs(Q.T @ pi))
    if res > tol * max(1.0, np.max(np.abs(Q))):
        raise NonUniqueMeasure(f"stationary residual {res} exceeds {tol}")
    return pi


def _mass_action(c: np.ndarray, alpha: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Monomial rates c_r prod_x rho_x^{alpha_rx}, stable for large exponents."""
    rho = np.asarray(rho, dtype=float)
    out = np.empty(len(c))
    for r in range(len(c)):
        a = alpha[r]
        active = a > 0
        if np.any(rho[active] == 0.0):
            out[r] = 0.0
        elif np.max(a, initial=0.0) > LOG_SPACE_ALPHA:
            out[r] = c[r] * math.exp(float(np.dot(a[active], np.log(rho[active]))))
        else:
            out[r] = c[r] * float(np.prod(rho[active] ** a[active]))
    return out


# ---------------------------------------------------------------------------
# zero-range rate functions eta
# ---------------------------------------------------------------------------


class PowerEta:
    """eta(z) = z^p for p > 0."""

    def __init__(self, p: float):
        if p <= 0:
            raise ModelSpecError("power exponent must be positive")
        self.p = float(p)

    power = property(lambda self: self.p)

    def __call__(self, z):
        return np.asarray(z, dtype=float) ** self.p

    def inverse(self, y: float) -> float:
        return float(y) ** (1.0 / self.p)

    def intlog(self, u: float) -> float:
        """integral of log eta over (0, u]."""
        if u == 0.0:
            return 0.0
        return self.p * (u * math.log(u) - u)

    def gsqrt(self, u: float) -> float:
        """integral of eta^(-1/2) over (0, u]; diverges for p >= 2."""
        if self.p >= 2.0:
            raise UnsupportedModel("eta too steep at 0: energy integral diverges")
        q = 1.0 - 0.5 * self.p
        return u ** q / q


class AffineCappedEta:
    """Linear up to zstar >= 1, then affine with a capped slope in (0, 1]."""

    def __init__(self, zstar: float = 2.0, slope: float = 0.5):
        if zstar < 1.0 or slope <= 0.0:
            raise ModelSpecError("need zstar >= 1 and slope > 0")
        self.zstar = float(zstar)
        self.slope = float(slope)

    power = None

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= self.zstar, z, self.zstar + self.slope * (z - self.zstar))

    def inverse(self, y: float) -> float:
        y = float(y)
        if y <= self.zstar:
            return y
        return self.zstar + (y - self.zstar) / self.slope

    def intlog(self, u: float) -> float:
        zs, s = self.zstar, self.slope
        if u <= zs:
            return u * math.log(u) - u if u > 0 else 0.0
        head = zs * math.log(zs) - zs
        # integral of log(c + s t) with c = zs (1 - s)
        c = zs * (1.0 - s)

        def anti(t):
            v = c + s * t
            return v * (math.log(v) - 1.0) / s

        return head + anti(u) - anti(zs)

    def gsqrt(self, u: float) -> float:
        zs, s = self.zstar, self.slope
        if u <= zs:
            return 2.0 * math.sqrt(u)
        c = zs * (1.0 - s)
        return 2.0 * math.sqrt(zs) + (2.0 / s) * (
            math.sqrt(c + s * u) - math.sqrt(zs)
        )


class TabulatedEta:
    """Monotone interpolation of user-supplied (z, eta) samples."""

    def __init__(self, z, values):
        z = np.asarray(z, dtype=float)
        values = np.asarray(values, dtype=float)
        if z[0] != 0.0 or values[0] != 0.0:
            raise ModelSpecError("table must start at eta(0) = 0")
        if np.any(np.diff(values) <= 0):
            raise ModelSpecError("table values must be strictly increasing")
        self._z = z
        self._f = PchipInterpolator(z, values, extrapolate=True)

    power = None

    def __call__(self, z):
        return np.maximum(self._f(np.asarray(z, dtype=float)), 0.0)

    def inverse(self, y: float) -> float:
        y = float(y)
        hi = self._z[-1]
        while float(self._f(hi)) < y:
            hi *= 2.0
        return brentq(lambda t: float(self._f(t)) - y, 0.0, hi, xtol=1e-14)

    def intlog(self, u: float) -> float:
        if u == 0.0:
            return 0.0
        val, _ = quad(lambda t: math.log(float(self._f(t))), 0.0, u, limit=200)
        if not math.isfinite(val):
            raise ModelSpecError("log eta not integrable at 0 for this table")
        return val

    def gsqrt(self, u: float) -> float:
        if u == 0.0:
            return 0.0
        val, _ = quad(lambda t: float(self._f(t)) ** -0.5, 0.0, u, limit=200)
        if not math.isfinite(val):
            raise UnsupportedModel("eta too steep at 0: energy integral diverges")
        return val


class ScaledEta:
    """eta(z) = base(z * zscale) * yscale; used by the renormalisation."""

    def __init__(self, base, zscale: float, yscale: float):
        self.base = base
        self.zscale = float(zscale)
        self.yscale = float(yscale)

    @property
    def power(self):
        return self.base.power

    def __call__(self, z):
        return self.base(np.asarray(z, dtype=float) * self.zscale) * self.yscale

    def inverse(self, y: float) -> float:
        return self.base.inverse(float(y) / self.yscale) / self.zscale

    def intlog(self, u: float) -> float:
        return u * math.log(self.yscale) + self.base.intlog(u * self.zscale) / self.zscale

    def gsqrt(self, u: float) -> float:
        return self.base.gsqrt(u * self.zscale) / (self.zscale * math.sqrt(self.yscale))


# ---------------------------------------------------------------------------
# shared cosh-model machinery
# ---------------------------------------------------------------------------


class _CoshModel:
    """Common code for the three jump families (cosh-type H)."""

    cost_form = "cosh"
    probability = True  # mass-constrained states; CrnModel overrides

    # subclasses set: n_states, n_edges, edge_weight, node_weight, _dphi (k x m)

    def pairing_flux(self, zeta, j) -> float:
        return float(np.dot(self.edge_weight * np.asarray(zeta), np.asarray(j)))

    def pairing_state(self, xi, u) -> float:
        return float(np.dot(self.node_weight * np.asarray(xi), np.asarray(u)))

    def dphi(self, j) -> np.ndarray:
        """Continuity operator: rho_dot = dphi(j)."""
        return self._dphi @ np.asarray(j, dtype=float)

    def dphi_T(self, xi) -> np.ndarray:
        return self._dphi.T @ np.asarray(xi, dtype=float)

    @property
    def dphi_matrix(self) -> np.ndarray:
        return self._dphi

    def interior(self, rho, eps: float = 0.0) -> bool:
        return bool(np.min(rho) > eps)

    def require_interior(self, rho):
        rho = np.asarray(rho, dtype=float)
        if not self.interior(rho):
            raise DomainViolation("state touches the boundary")
        return rho

    # --- cost surface -----------------------------------------------------

    def hamiltonian(self, rho, zeta) -> float:
        a, b = self.edge_rates(rho)
        zeta = np.asarray(zeta, dtype=float)
        if np.max(np.abs(zeta), initial=0.0) > entropy.EXP_ARG_MAX:
            raise entropy.RangeError("conjugate variable exceeds the exp range")
        return float(np.sum(a * np.expm1(zeta) + b * np.expm1(-zeta)))

    def hamiltonian_gradient(self, rho, zeta) -> np.ndarray:
        a, b = self.edge_rates(rho)
        zeta = np.asarray(zeta, dtype=float)
        return a * np.exp(zeta) - b * np.exp(-zeta)

    def lagrangian(self, rho, j) -> float:
        a, b = self.edge_rates(rho)
        j = np.asarray(j, dtype=float)
        return float(
            sum(entropy.edge_lagrangian(a[e], b[e], j[e]) for e in range(len(a)))
        )

    def zero_cost_flux(self, rho) -> np.ndarray:
        a, b = self.edge_rates(rho)
        return a - b

    def forces(self, rho) -> ForceTriple:
        rho = self.require_interior(rho)
        a, b = self.edge_rates(rho)
        total = 0.5 * np.log(a / b)
        sym = -0.5 * self.dphi_T(self.quasipotential_gradient(rho))
        return ForceTriple(total=total, sym=sym, asym=total - sym)

    # --- time reversal ----------------------------------------------------

    def reversed_hamiltonian(self, rho, zeta) -> float:
        g = self.dphi_T(self.quasipotential_gradient(rho))
        return self.hamiltonian(rho, g - np.asarray(zeta, dtype=float))

    def reversed_edge_rates(self, rho):
        """Intensities of the reversed cost: (b e^-g, a e^g) with g = grad dV."""
        a, b = self.edge_rates(rho)
        g = self.dphi_T(self.quasipotential_gradient(rho))
        return b * np.exp(-g), a * np.exp(g)

    def reversed_lagrangian(self, rho, j) -> float:
        ar, br = self.reversed_edge_rates(rho)
        j = np.asarray(j, dtype=float)
        offset = self.hamiltonian(rho, self.dphi_T(self.quasipotential_gradient(rho)))
        return float(
            sum(entropy.edge_lagrangian(ar[e], br[e], j[e]) for e in range(len(ar)))
            - offset
        )

    # --- stable named tilts (well defined up to the boundary) --------------

    def symmetric_flux(self, rho) -> np.ndarray:
        a, b = self.symmetric_edge_rates(rho)
        return a - b

    def antisymmetric_flux(self, rho) -> np.ndarray:
        a, b = self.antisymmetric_edge_rates(rho)
        return a - b

    def antisymmetric_edge_rates(self, rho):
        a, b = self.edge_rates(np.maximum(rho, 0.0))
        root = np.sqrt(a * b)
        fasym = self.asym_force_const()
        return root * np.exp(fasym), root * np.exp(-fasym)

    # subclasses provide: edge_rates, symmetric_edge_rates, asym_force_const,
    # quasipotential, quasipotential_gradient


def _validate_rate_matrix(Q: np.ndarray) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ModelSpecError("rate matrix must be square")
    off = Q - np.diag(np.diag(Q))
    if np.any(off < 0):
        raise ModelSpecError("off-diagonal rates must be nonnegative")
    if np.max(np.abs(Q.sum(axis=1))) > 1e-12 * max(1.0, np.max(np.abs(Q))):
        raise ModelSpecError("row-sum: rate matrix rows must sum to zero")
    if np.any((off > 0) != (off.T > 0)):
        raise ModelSpecError("edges must carry positive rates in both directions")
    return Q


class IpfgModel(_CoshModel):
    """Independent Markov jump particles on a finite graph.

    Intensities a_e = rho_x Q_xy and b_e = rho_y Q_yx on each half-edge
    (x, y), x < y.  Quasipotential: relative entropy with respect to the
    stationary law of Q.
    """

    name = "ipfg"

    def __init__(self, Q, pi=None, nodes=None):
        self.Q = _validate_rate_matrix(Q)
        k = self.Q.shape[0]
        self.pi = stationary_measure(self.Q) if pi is None else np.asarray(pi, float)
        if np.any(self.pi <= 0) or abs(self.pi.sum() - 1.0) > 1e-12:
            raise ModelSpecError("stationary vector must be positive with unit mass")
        if np.max(np.abs(self.Q.T @ self.pi)) > 1e-12 * max(1.0, np.max(np.abs(self.Q))):
            raise ModelSpecError("supplied pi is not stationary for Q")
        self.graph = graph_from_rate_matrix(nodes or tuple(range(k)), self.Q)
        self._lo = np.array([e[0] for e in self.graph.edges], dtype=int)
        self._hi = np.array([e[1] for e in self.graph.edges], dtype=int)
        self.n_states = k
        self.n_edges = self.graph.n_edges
        self.edge_weight = np.ones(self.n_edges)
        self.node_weight = np.ones(k)
        self._dphi = -self.graph.incidence  # rho_dot = -div j

    def edge_rates(self, rho):
        rho = np.asarray(rho, dtype=float)
        return rho[self._lo] * self.Q[self._lo, self._hi], rho[self._hi] * self.Q[self._hi, self._lo]

    def quasipotential(self, rho) -> float:
        rho = np.asarray(rho, dtype=float)
        return float(sum(entropy.rel_boltzmann(r, p) for r, p in zip(rho, self.pi)))

    def quasipotential_gradient(self, rho) -> np.ndarray:
        rho = self.require_interior(rho)
        return np.log(rho / self.pi)

    def symmetric_edge_rates(self, rho):
        rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
        qgeo = np.sqrt(self.Q[self._lo, self._hi] * self.Q[self._hi, self._lo])
        fwd = rho[self._lo] * qgeo * np.sqrt(self.pi[self._hi] / self.pi[self._lo])
        bwd = rho[self._hi] * qgeo * np.sqrt(self.pi[self._lo] / self.pi[self._hi])
        return fwd, bwd

    def asym_force_const(self) -> np.ndarray:
        return 0.5 * np.log(
            (self.pi[self._lo] * self.Q[self._lo, self._hi])
            / (self.pi[self._hi] * self.Q[self._hi, self._lo])
        )

    def reversed_model(self) -> "IpfgModel":
        """Jump model of the time-reversed chain: Qbar_xy = pi_y Q_yx / pi_x."""
        Qbar = (self.Q.T * self.pi[None, :]) / self.pi[:, None]
        np.fill_diagonal(Qbar, 0.0)
        np.fill_diagonal(Qbar, -Qbar.sum(axis=1))
        return IpfgModel(Qbar, pi=self.pi, nodes=self.graph.nodes)

    def is_detailed_balanced(self, tol: float = 1e-12) -> bool:
        lhs = self.pi[:, None] * self.Q
        return bool(np.max(np.abs(lhs - lhs.T)) <= tol * max(1.0, np.max(np.abs(lhs))))

    def tilted(self, zeta) -> "IpfgModel":
        """Rates a -> a e^zeta, b -> b e^-zeta; the result is again a jump model."""
        zeta = np.asarray(zeta, dtype=float)
        Qt = self.Q.copy()
        Qt[self._lo, self._hi] *= np.exp(zeta)
        Qt[self._hi, self._lo] *= np.exp(-zeta)
        np.fill_diagonal(Qt, 0.0)
        np.fill_diagonal(Qt, -Qt.sum(axis=1))
        return IpfgModel(Qt, nodes=self.graph.nodes)

    # Hamiltonian-flow objects (energy, skew matrix) live in flows.py


class ZeroRangeModel(_CoshModel):
    """Zero-range process: jump intensity off node x is Q_xy pi_x eta_x(rho_x / pi_x)."""

    name = "zero-range"

    def __init__(self, Q, pi, etas, nodes=None, validate=True):
        self.Q = _validate_rate_matrix(Q)
        k = self.Q.shape[0]
        self.pi = np.asarray(pi, dtype=float)
        if np.any(self.pi <= 0):
            raise ModelSpecError("pi must be strictly positive")
        if hasattr(etas, "inverse"):  # one rate function shared by all nodes
            self.etas = [etas] * k
        else:
            self.etas = list(etas)
        if len(self.etas) != k:
            raise ModelSpecError("need one rate function per node")
        self.normalized = validate
        if validate:
            if abs(self.pi.sum() - 1.0) > 1e-12:
                raise ModelSpecError("pi must have unit mass")
            if np.max(np.abs(self.Q.T @ self.pi)) > 1e-12 * max(1.0, np.max(np.abs(self.Q))):
                raise ModelSpecError("supplied pi is not stationary for Q")
            for eta in self.etas:
                if abs(float(eta(1.0)) - 1.0) > 1e-12 or abs(float(eta(0.0))) > 1e-12:
                    raise ModelSpecError(
                        "rate function must satisfy eta(0)=0, eta(1)=1; renormalise first"
                    )
        self.graph = graph_from_rate_matrix(nodes or tuple(range(k)), self.Q)
        self._lo = np.array([e[0] for e in self.graph.edges], dtype=int)
        self._hi = np.array([e[1] for e in self.graph.edges], dtype=int)
        self.n_states = k
        self.n_edges = self.graph.n_edges
        self.edge_weight = np.ones(self.n_edges)
        self.node_weight = np.ones(k)
        self._dphi = -self.graph.incidence

    def node_intensity(self, rho) -> np.ndarray:
        """eta_x(rho_x / pi_x) per node."""
        rho = np.asarray(rho, dtype=float)
        return np.array([float(self.etas[x](rho[x] / self.pi[x])) for x in range(self.n_states)])

    def edge_rates(self, rho):
        lam = self.node_intensity(np.maximum(rho, 0.0)) * self.pi
        return lam[self._lo] * self.Q[self._lo, self._hi], lam[self._hi] * self.Q[self._hi, self._lo]

    def quasipotential(self, rho) -> float:
        if not self.normalized:
            raise UnsupportedModel("quasipotential needs a renormalised model")
        rho = np.asarray(rho, dtype=float)
        if np.any(rho < 0):
            return math.inf
        val = sum(
            self.pi[x] * self.etas[x].intlog(rho[x] / self.pi[x])
            for x in range(self.n_states)
        )
        ref = sum(self.pi[x] * self.etas[x].intlog(1.0) for x in range(self.n_states))
        return float(val - ref)

    def quasipotential_gradient(self, rho) -> np.ndarray:
        if not self.normalized:
            raise UnsupportedModel("quasipotential needs a renormalised model")
        rho = self.require_interior(rho)
        return np.log(self.node_intensity(rho))

    def symmetric_edge_rates(self, rho):
        lam = self.node_intensity(np.maximum(rho, 0.0))
        qgeo = np.sqrt(
            self.Q[self._lo, self._hi] * self.Q[self._hi, self._lo]
            * self.pi[self._lo] * self.pi[self._hi]
        )
        return qgeo * lam[self._lo], qgeo * lam[self._hi]

    def asym_force_const(self) -> np.ndarray:
        return 0.5 * np.log(
            (self.pi[self._lo] * self.Q[self._lo, self._hi])
            / (self.pi[self._hi] * self.Q[self._hi, self._lo])
        )

    def energy_integral(self, rho) -> float:
        """sum_x of the integrals of eta_x(z/pi_x)^(-1/2) from 0 to rho_x."""
        rho = np.asarray(rho, dtype=float)
        return float(
            sum(
                self.pi[x] * self.etas[x].gsqrt(rho[x] / self.pi[x])
                for x in range(self.n_states)
            )
        )

    def eta_inverse(self, x: int, y: float) -> float:
        return self.etas[x].inverse(y)

    def tilted(self, zeta) -> "ZeroRangeModel":
        zeta = np.asarray(zeta, dtype=float)
        Qt = self.Q.copy()
        Qt[self._lo, self._hi] *= np.exp(zeta)
        Qt[self._hi, self._lo] *= np.exp(-zeta)
        np.fill_diagonal(Qt, 0.0)
        np.fill_diagonal(Qt, -Qt.sum(axis=1))
        return ZeroRangeModel(Qt, self.pi, self.etas, nodes=self.graph.nodes, validate=False)


def normalize_zero_range(model: ZeroRangeModel) -> ZeroRangeModel:
    """Renormalise (Q, pi, eta) so that eta(1) = 1 and Q^T pi = 0, keeping the
    physical jump intensities unchanged.

    pi_bar_x = pi_x eta_x^{-1}(e^-lam) with lam solving sum_x pi_bar_x = 1.
    """
    pi, etas = model.pi, model.etas

    def mass(lam):
        return sum(p * eta.inverse(math.exp(-lam)) for p, eta in zip(pi, etas)) - 1.0

    lo, hi = -1.0, 1.0
    for _ in range(200):
        if mass(lo) > 0 > mass(hi):
            break
        lo *= 2.0
        hi *= 2.0
        if hi > 1e8:
            raise NormalizationFailure("renormalisation root not bracketed")
    else:
        raise NormalizationFailure("renormalisation root not bracketed")
    lam = brentq(mass, lo, hi, xtol=1e-15)
    scale = math.exp(-lam)
    pib = np.array([p * eta.inverse(scale) for p, eta in zip(pi, etas)])
    etab = [
        ScaledEta(eta, zscale=eta.inverse(scale), yscale=math.exp(lam)) for eta in etas
    ]
    Qb = model.Q.copy()
    for x in range(model.n_states):
        Qb[x, :] *= scale / etas[x].inverse(scale)
    np.fill_diagonal(Qb, 0.0)
    np.fill_diagonal(Qb, -Qb.sum(axis=1))
    return ZeroRangeModel(Qb, pib, etab, nodes=model.graph.nodes, validate=True)


class CrnModel(_CoshModel):
    """Mass-action reaction network, complex balanced at a supplied pi.

    Reactions come in forward/backward pairs; the forward set plays the role
    of the half-edge list, with intensities kappa_r = c_r rho^alpha_r.
    States are free nonnegative concentration vectors.
    """

    name = "crn"
    probability = False

    def __init__(self, species, alpha_fw, alpha_bw, c_fw, c_bw, pi, validate=True):
        self.species = tuple(species)
        self.alpha_fw = np.asarray(alpha_fw, dtype=float)
        self.alpha_bw = np.asarray(alpha_bw, dtype=float)
        self.c_fw = np.asarray(c_fw, dtype=float)
        self.c_bw = np.asarray(c_bw, dtype=float)
        self.pi = np.asarray(pi, dtype=float)
        k = len(self.species)
        nr = self.alpha_fw.shape[0]
        if self.alpha_fw.shape != (nr, k) or self.alpha_bw.shape != (nr, k):
            raise ModelSpecError("stoichiometric arrays must be (reactions x species)")
        if np.any(self.alpha_fw < 0) or np.any(self.alpha_bw < 0):
            raise ModelSpecError("complexes must have nonnegative entries")
        if np.any(self.c_fw <= 0) or np.any(self.c_bw <= 0):
            raise ModelSpecError("reaction constants must be positive")
        if np.any(self.pi <= 0):
            raise ModelSpecError("pi must be strictly positive")
        self.gamma = self.alpha_bw - self.alpha_fw  # net change per forward firing
        self.balanced = True
        if validate:
            ok, res = check_complex_balance(self)
            if not ok:
                raise ModelSpecError(f"complex balance fails at pi, residual {res:.3e}")
        else:
            self.balanced = False
        self.n_states = k
        self.n_edges = nr
        self.edge_weight = np.ones(nr)
        self.node_weight = np.ones(k)
        self._dphi = self.gamma.T  # rho_dot = Gamma j

    def edge_rates(self, rho):
        rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
        return (
            _mass_action(self.c_fw, self.alpha_fw, rho),
            _mass_action(self.c_bw, self.alpha_bw, rho),
        )

    def quasipotential(self, rho) -> float:
        if not self.balanced:
            raise UnsupportedModel("quasipotential needs a complex-balanced model")
        rho = np.asarray(rho, dtype=float)
        return float(sum(entropy.rel_boltzmann(r, p) for r, p in zip(rho, self.pi)))

    def quasipotential_gradient(self, rho) -> np.ndarray:
        if not self.balanced:
            raise UnsupportedModel("quasipotential needs a complex-balanced model")
        rho = self.require_interior(rho)
        return np.log(rho / self.pi)

    def symmetric_edge_rates(self, rho):
        rho = np.maximum(np.asarray(rho, dtype=float), 0.0)
        cgeo = np.sqrt(self.c_fw * self.c_bw)
        pig = np.array(
            [float(np.prod(self.pi ** (0.5 * self.gamma[r]))) for r in range(self.n_edges)]
        )
        fwd = _mass_action(cgeo * pig, self.alpha_fw, rho)
        bwd = _mass_action(cgeo / pig, self.alpha_bw, rho)
        return fwd, bwd

    def asym_force_const(self) -> np.ndarray:
        pig = np.array(
            [float(np.dot(self.gamma[r], np.log(self.pi))) for r in range(self.n_edges)]
        )
        return 0.5 * (np.log(self.c_fw / self.c_bw) - pig)

    def is_detailed_balanced(self, tol: float = 1e-12) -> bool:
        fw = _mass_action(self.c_fw, self.alpha_fw, self.pi)
        bw = _mass_action(self.c_bw, self.alpha_bw, self.pi)
        return bool(np.max(np.abs(fw - bw)) <= tol * max(1.0, np.max(fw)))

    def in_compatibility_class(self, rho, rho0, tol: float = 1e-9) -> bool:
        """Membership of rho in rho0 + range(Gamma)."""
        diff = np.asarray(rho, float) - np.asarray(rho0, float)
        sol, *_ = np.linalg.lstsq(self._dphi, diff, rcond=None)
        return bool(np.max(np.abs(self._dphi @ sol - diff)) <= tol * max(1.0, np.max(np.abs(diff))))

    def tilted(self, zeta) -> "CrnModel":
        zeta = np.asarray(zeta, dtype=float)
        return CrnModel(
            self.species,
            self.alpha_fw,
            self.alpha_bw,
            self.c_fw * np.exp(zeta),
            self.c_bw * np.exp(-zeta),
            self.pi,
            validate=False,
        )


def check_complex_balance(model: CrnModel, tol: float = 1e-10):
    """Evaluate the per-complex balance residuals at pi.

    For every complex c (row of the stacked stoichiometric table), sums the
    net flows of reactions entering and leaving c; all must vanish.  Returns
    (ok, max abs residual).
    """
    net = _mass_action(model.c_fw, model.alpha_fw, model.pi) - _mass_action(
        model.c_bw, model.alpha_bw, model.pi
    )
    complexes = np.unique(np.vstack([model.alpha_fw, model.alpha_bw]), axis=0)
    residuals = []
    for c in complexes:
        fw_hit = np.all(model.alpha_fw == c, axis=1).astype(float)
        bw_hit = np.all(model.alpha_bw == c, axis=1).astype(float)
        residuals.append(float(np.dot(net, fw_hit - bw_hit)))
    res = max(abs(r) for r in residuals)
    return res <= tol, res


# ---------------------------------------------------------------------------
# lattice gas (quadratic cost on a periodic 1-D grid)
# ---------------------------------------------------------------------------


class LatticeGasModel:
    """Finite-difference drift-diffusion cost on a ring of m cells.

    Cell width dx = 1/m; edge e connects cell e and cell e+1 (mod m).  The
    zero-cost flux is j0 = -chi_e grad(h'(rho) + U) - chi_e A with the edge
    mobility chi_e = chi((rho_x + rho_y)/2), and

        H(rho, zeta) = sum_e dx [chi_e zeta_e^2 + zeta_e j0_e],
        L(rho, j)    = (1/4) sum_e dx (j_e - j0_e)^2 / chi_e.

    A is a drift covector with discrete div A = 0, which on a ring forces A
    to be constant.
    """

    name = "lattice-gas"
    cost_form = "quadratic"
    probability = False

    MOBILITIES = ("independent", "exclusion")

    def __init__(self, m, mobility="independent", U=None, A=0.0, mass=None):
        if m < 3:
            raise ModelSpecError("need at least three cells")
        if mobility not in self.MOBILITIES:
            raise ModelSpecError(f"unknown mobility {mobility!r}")
        self.m = int(m)
        self.dx = 1.0 / self.m
        self.mobility = mobility
        self.U = np.zeros(self.m) if U is None else np.asarray(U, dtype=float)
        if self.U.shape != (self.m,):
            raise ModelSpecError("potential must have one value per cell")
        A = np.asarray(A, dtype=float)
        if A.ndim == 0:
            A = np.full(self.m, float(A))
        if A.shape != (self.m,):
            raise ModelSpecError("drift must have one value per edge")
        if np.max(np.abs(np.diff(A, append=A[0]))) > 1e-12 * max(1.0, np.max(np.abs(A))):
            raise ModelSpecError("discrete div A = 0 forces a constant drift on a ring")
        self.A = A
        if mass is None:
            mass = 0.5 if mobility == "exclusion" else 1.0
        self.mass = float(mass)
        if mobility == "exclusion" and not (0.0 < self.mass < 1.0):
            raise ModelSpecError("exclusion mean density must lie in (0, 1)")
        self.n_states = self.m
        self.n_edges = self.m
        self.edge_weight = np.full(self.m, self.dx)
        self.node_weight = np.full(self.m, self.dx)
        self._nxt = np.roll(np.arange(self.m), -1)
        D = np.zeros((self.m, self.m))
        for e in range(self.m):
            D[e, e] -= 1.0 / self.dx  # (grad xi)_e = (xi_{e+1} - xi_e)/dx
            D[self._nxt[e], e] += 1.0 / self.dx
        self._dphi = D  # rho_dot = -div j;  (-div j)_x = -(j_x - j_{x-1})/dx
        self.pi = self._stationary_profile()
        self._vref = self._free_energy_raw(self.pi)

    # --- mobility and free-energy scalars ----------------------------------

    def chi(self, a):
        a = np.asarray(a, dtype=float)
        return a * (1.0 - a) if self.mobility == "exclusion" else a

    def _hprime(self, a):
        a = np.asarray(a, dtype=float)
        if self.mobility == "exclusion":
            return np.log(a / (1.0 - a))
        return np.log(a)

    def _h(self, a):
        a = np.asarray(a, dtype=float)
        if self.mobility == "exclusion":
            return xlogy(a, a) + xlogy(1.0 - a, 1.0 - a)
        return xlogy(a, a) - a

    def _hprime_inv(self, y):
        if self.mobility == "exclusion":
            return 1.0 / (1.0 + np.exp(-(y)))
        return np.exp(y)

    def _stationary_profile(self) -> np.ndarray:
        def total(mu):
            return float(np.sum(self._hprime_inv(mu - self.U)) * self.dx) - self.mass

        lo, hi = -1.0, 1.0
        while total(lo) > 0:
            lo -= 5.0
        while total(hi) < 0:
            hi += 5.0
        mu = brentq(total, lo, hi, xtol=1e-15)
        return self._hprime_inv(mu - self.U)

    def _free_energy_raw(self, rho) -> float:
        rho = np.asarray(rho, dtype=float)
        return float(np.sum((self._h(rho) + self.U * rho)) * self.dx)

    # --- shared protocol ----------------------------------------------------

    def pairing_flux(self, zeta, j) -> float:
        return float(np.dot(self.edge_weight * np.asarray(zeta), np.asarray(j)))

    def pairing_state(self, xi, u) -> float:
        return float(np.dot(self.node_weight * np.asarray(xi), np.asarray(u)))

    def dphi(self, j) -> np.ndarray:
        return self._dphi @ np.asarray(j, dtype=float)

    def dphi_T(self, xi) -> np.ndarray:
        return self._dphi.T @ np.asarray(xi, dtype=float)

    @property
    def dphi_matrix(self) -> np.ndarray:
        return self._dphi

    def interior(self, rho, eps: float = 0.0) -> bool:
        rho = np.asarray(rho, dtype=float)
        if self.mobility == "exclusion":
            return bool(np.min(rho) > eps and np.max(rho) < 1.0 - eps)
        return bool(np.min(rho) > eps)

    def require_interior(self, rho):
        rho = np.asarray(rho, dtype=float)
        if not self.interior(rho):
            raise DomainViolation("mobility vanishes at this state")
        return rho

    def _clip(self, rho) -> np.ndarray:
        # adaptive steppers probe slightly outside the domain; keep the
        # fields finite there so the error estimator can reject cleanly
        rho = np.maximum(np.asarray(rho, dtype=float), 1e-15)
        if self.mobility == "exclusion":
            rho = np.minimum(rho, 1.0 - 1e-15)
        return rho

    def edge_mobility(self, rho) -> np.ndarray:
        rho = self._clip(rho)
        return self.chi(0.5 * (rho + rho[self._nxt]))

    def grad(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        return (xi[self._nxt] - xi) / self.dx

    def zero_cost_flux(self, rho) -> np.ndarray:
        rho = self._clip(rho)
        chi_e = self.edge_mobility(rho)
        return -chi_e * (self.grad(self._hprime(rho) + self.U) + self.A)

    def hamiltonian(self, rho, zeta) -> float:
        zeta = np.asarray(zeta, dtype=float)
        chi_e = self.edge_mobility(rho)
        return float(
            np.sum(self.edge_weight * (chi_e * zeta**2 + zeta * self.zero_cost_flux(rho)))
        )

    def hamiltonian_gradient(self, rho, zeta) -> np.ndarray:
        return 2.0 * self.edge_mobility(rho) * np.asarray(zeta, float) + self.zero_cost_flux(rho)

    def lagrangian(self, rho, j) -> float:
        j = np.asarray(j, dtype=float)
        chi_e = self.edge_mobility(rho)
        if np.any(chi_e <= 0):
            raise DomainViolation("mobility vanishes at this state")
        d = j - self.zero_cost_flux(rho)
        return float(0.25 * np.sum(self.edge_weight * d**2 / chi_e))

    def quasipotential(self, rho) -> float:
        return self._free_energy_raw(rho) - self._vref

    def quasipotential_gradient(self, rho) -> np.ndarray:
        rho = self.require_interior(rho)
        return self._hprime(rho) + self.U

    def forces(self, rho) -> ForceTriple:
        rho = self.require_interior(rho)
        total = 0.5 * self.zero_cost_flux(rho) / self.edge_mobility(rho)
        sym = -0.5 * self.grad(self.quasipotential_gradient(rho))
        return ForceTriple(total=total, sym=sym, asym=total - sym)

    def symmetric_flux(self, rho) -> np.ndarray:
        rho = self._clip(rho)
        return -self.edge_mobility(rho) * self.grad(self._hprime(rho) + self.U)

    def antisymmetric_flux(self, rho) -> np.ndarray:
        return -self.edge_mobility(rho) * self.A

    def reversed_hamiltonian(self, rho, zeta) -> float:
        g = self.grad(self.quasipotential_gradient(rho))
        return self.hamiltonian(rho, g - np.asarray(zeta, dtype=float))

    def reversed_lagrangian(self, rho, j) -> float:
        j = np.asarray(j, dtype=float)
        chi_e = self.edge_mobility(rho)
        g = self.grad(self.quasipotential_gradient(rho))
        jrev = -(self.zero_cost_flux(rho) + 2.0 * chi_e * g)
        d = j - jrev
        return float(0.25 * np.sum(self.edge_weight * d**2 / chi_e) - self.hamiltonian(rho, g))

    def energy(self, rho) -> float:
        """Potential energy of the drift-conserved part: sum dx U rho."""
        return float(np.sum(self.edge_weight * self.U * np.asarray(rho, float)))

    def tilted(self, zeta) -> "LatticeGasModel":
        zeta = np.asarray(zeta, dtype=float)
        if zeta.ndim == 0:
            zeta = np.full(self.m, float(zeta))
        out = LatticeGasModel.__new__(LatticeGasModel)
        out.__dict__.update(self.__dict__)
        out.A = self.A - 2.0 * zeta
        return out


def skew_rotation_matrix(Q: np.ndarray, pi: np.ndarray) -> np.ndarray:
    """A_xy = Q_yx sqrt(pi_y/pi_x) - Q_xy sqrt(pi_x/pi_y); skew, kills sqrt(pi)."""
    Q = np.asarray(Q, dtype=float)
    pi = np.asarray(pi, dtype=float)
    s = np.sqrt(pi)
    A = Q.T * (s[None, :] / s[:, None]) - Q * (s[:, None] / s[None, :])
    np.fill_diagonal(A, 0.0)
    return A
