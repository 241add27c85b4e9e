import math

import numpy as np
import pytest

from fluxdec import entropy
from fluxdec.decomposition import (
    contracted_lagrangian,
    decomposition_residuals,
    dissipation,
    dissipation_dual,
    fir_gap,
    fisher,
    modified_dissipation,
    ortho_pairing,
    random_flux,
    random_interior_state,
    tilted_hamiltonian,
    tilted_lagrangian,
    verification_suite,
)
from fluxdec.errors import InfeasibleVelocity
from fluxdec.models import IpfgModel

LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def states(model, n, seed=0):
    rng = np.random.default_rng(seed)
    return [random_interior_state(model, rng) for _ in range(n)]


# ---------------------------------------------------------------------------
# dissipation potentials
# ---------------------------------------------------------------------------


def test_dissipation_dual_zero(all_models):
    for m in all_models:
        for rho in states(m, 3):
            assert dissipation_dual(m, rho, np.zeros(m.n_edges)) == pytest.approx(0.0, abs=1e-13)


def test_dissipation_dual_even(ipfg3, zr3, crn3):
    rng = np.random.default_rng(1)
    for m in (ipfg3, zr3, crn3):
        for rho in states(m, 5):
            zeta = rng.normal(size=m.n_edges)
            assert dissipation_dual(m, rho, zeta) == pytest.approx(
                dissipation_dual(m, rho, -zeta), rel=1e-10, abs=1e-12
            )


def test_dissipation_dual_cosh_closed_form(ipfg3, zr3, crn3):
    rng = np.random.default_rng(2)
    for m in (ipfg3, zr3, crn3):
        for rho in states(m, 10):
            zeta = rng.normal(size=m.n_edges)
            a, b = m.edge_rates(rho)
            closed = float(np.sum(2.0 * np.sqrt(a * b) * (np.cosh(zeta) - 1.0)))
            assert dissipation_dual(m, rho, zeta) == pytest.approx(closed, rel=1e-11, abs=1e-12)


def test_dissipation_dual_two_state_value():
    m = IpfgModel(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    val = dissipation_dual(m, [0.5, 0.5], [1.0])
    assert val == pytest.approx(2 * 0.5 * (math.cosh(1.0) - 1.0), rel=1e-12)


def test_dissipation_values(all_models, lattice):
    rng = np.random.default_rng(3)
    for m in all_models:
        for rho in states(m, 3):
            assert dissipation(m, rho, np.zeros(m.n_edges)) == 0.0
    rho = states(lattice, 1)[0]
    j = rng.normal(size=lattice.n_edges)
    chi = lattice.edge_mobility(rho)
    assert dissipation(lattice, rho, j) == pytest.approx(
        0.25 * np.sum(lattice.edge_weight * j**2 / chi), rel=1e-12
    )


def test_dissipation_conjugate_of_dual(ipfg3):
    # Phi agrees with the numerical conjugation of Phi* on random rays
    rng = np.random.default_rng(4)
    for rho in states(ipfg3, 3):
        j = random_flux(ipfg3, rho, rng)
        for e in range(ipfg3.n_edges):
            a, b = ipfg3.edge_rates(rho)
            per_edge = entropy.numerical_legendre(
                lambda z: 2 * math.sqrt(a[e] * b[e]) * (math.cosh(z) - 1.0),
                j[e], -20.0, 20.0,
            )
            root = 2 * math.sqrt(a[e] * b[e])
            assert per_edge == pytest.approx(
                root * entropy.cosh_dual(j[e] / root), rel=1e-6, abs=1e-8
            )
        total = dissipation(ipfg3, rho, j)
        direct = sum(
            2 * math.sqrt(ae * be) * entropy.cosh_dual(je / (2 * math.sqrt(ae * be)))
            for ae, be, je in zip(*ipfg3.edge_rates(rho), j)
        )
        assert total == pytest.approx(direct, rel=1e-12)


# ---------------------------------------------------------------------------
# tilted costs
# ---------------------------------------------------------------------------


def test_tilt_with_F_recovers_cost(all_models):
    rng = np.random.default_rng(5)
    for m in all_models:
        for rho in states(m, 5):
            j = random_flux(m, rho, rng)
            L = m.lagrangian(rho, j)
            assert tilted_lagrangian(m, rho, "F", j) == pytest.approx(L, rel=1e-10, abs=1e-10)


def test_tilt_with_zero_is_dissipation(all_models):
    rng = np.random.default_rng(6)
    for m in all_models:
        for rho in states(m, 5):
            j = random_flux(m, rho, rng)
            assert tilted_lagrangian(m, rho, "zero", j) == pytest.approx(
                dissipation(m, rho, j), rel=1e-10, abs=1e-10
            )


def test_tilted_paths_agree(all_models):
    rng = np.random.default_rng(7)
    for m in all_models:
        for rho in states(m, 5):
            j = random_flux(m, rho, rng)
            G = rng.normal(size=m.n_edges)
            a = tilted_lagrangian(m, rho, G, j, via="phi")
            b = tilted_lagrangian(m, rho, G, j, via="L")
            assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


def test_tilted_hamiltonian_zero_cost_flux(ipfg3):
    # derivative of the tilted H at 0 is the tilted drift
    rho = states(ipfg3, 1)[0]
    f = ipfg3.forces(rho)
    h = 1e-6
    for e in range(3):
        step = np.zeros(3)
        step[e] = h
        slope = (
            tilted_hamiltonian(ipfg3, rho, "sym", step)
            - tilted_hamiltonian(ipfg3, rho, "sym", -step)
        ) / (2 * h)
        drift = ipfg3.hamiltonian_gradient(rho, f.sym - f.total)
        assert slope == pytest.approx(drift[e], rel=1e-6, abs=1e-8)


def test_antisym_tilt_minimiser_rates(ipfg3):
    # zero-cost flux of the asym-tilted cost comes from the geometric-mean
    # rates Q_xy sqrt(rho_x rho_y pi_x / pi_y)
    lo, hi = ipfg3._lo, ipfg3._hi
    for rho in states(ipfg3, 10):
        fwd, bwd = ipfg3.antisymmetric_edge_rates(rho)
        expect_fwd = ipfg3.Q[lo, hi] * np.sqrt(
            rho[lo] * rho[hi] * ipfg3.pi[lo] / ipfg3.pi[hi]
        )
        expect_bwd = ipfg3.Q[hi, lo] * np.sqrt(
            rho[lo] * rho[hi] * ipfg3.pi[hi] / ipfg3.pi[lo]
        )
        assert np.allclose(fwd, expect_fwd, rtol=1e-12)
        assert np.allclose(bwd, expect_bwd, rtol=1e-12)
        jmin = fwd - bwd
        assert tilted_lagrangian(ipfg3, rho, "asym", jmin) <= 1e-10


# ---------------------------------------------------------------------------
# Fisher information
# ---------------------------------------------------------------------------


def test_fisher_zero_lambda(all_models):
    for m in all_models:
        for rho in states(m, 3):
            assert fisher(m, rho, "F", 0.0) == 0.0


def test_fisher_two_state_value():
    m = IpfgModel(np.array([[-1.0, 1.0], [2.0, -2.0]]))
    val = fisher(m, [0.5, 0.5], "F", 0.5)
    assert val == pytest.approx(1.5 - 2.0 * math.sqrt(0.5), rel=1e-12)


def test_fisher_vanishes_at_doubled_forces(ipfg3, zr3, crn3):
    for m in (ipfg3, zr3, crn3):
        for rho in states(m, 10):
            for G in ("F", "sym", "asym"):
                assert abs(fisher(m, rho, (G, 2.0), 0.5)) <= 1e-9


def test_fisher_nonnegative_grid(all_models):
    for m in all_models:
        for rho in states(m, 10):
            for G in ("F", "sym", "asym"):
                for lam in np.linspace(0.0, 1.0, 11):
                    assert fisher(m, rho, G, lam) >= -1e-12


def test_fisher_small_lambda_limit(all_models):
    # (1/lam) R^lam_G -> 2 <G, j0>, first order in lam; Richardson check
    for m in all_models:
        for rho in states(m, 3):
            f = m.forces(rho)
            j0 = m.zero_cost_flux(rho)
            for G in (f.total, f.sym, f.asym):
                target = 2.0 * m.pairing_flux(G, j0)
                vals = {lam: fisher(m, rho, G, lam) / lam for lam in (1e-2, 1e-3, 1e-4)}
                errs = {lam: abs(v - target) for lam, v in vals.items()}
                assert errs[1e-3] <= 0.2 * errs[1e-2] + 1e-10
                assert errs[1e-4] <= 0.2 * errs[1e-3] + 1e-9


# ---------------------------------------------------------------------------
# the three decompositions
# ---------------------------------------------------------------------------


def test_residuals_zero_lambda(all_models):
    rng = np.random.default_rng(8)
    for m in all_models:
        rho = states(m, 1)[0]
        j = random_flux(m, rho, rng)
        for rep in decomposition_residuals(m, rho, j, 0.0):
            assert abs(rep.residual) <= 1e-10 * (1.0 + abs(m.lagrangian(rho, j)))


def test_residuals_random_sweep(all_models):
    rng = np.random.default_rng(9)
    for m in all_models:
        for _ in range(100):
            rho = random_interior_state(m, rng)
            j = random_flux(m, rho, rng)
            L = m.lagrangian(rho, j)
            for lam in LAMBDAS:
                for rep in decomposition_residuals(m, rho, j, lam):
                    assert abs(rep.residual) <= 1e-9 * (1.0 + abs(L))
                    assert rep.fisher >= -1e-12


def test_half_lambda_fisher_is_modified_dissipation(all_models):
    # R^(1/2)_sym = Phi*_asym(Fsym) and R^(1/2)_asym = Phi*_sym(Fasym)
    for m in all_models:
        for rho in states(m, 5):
            f = m.forces(rho)
            assert fisher(m, rho, "sym", 0.5) == pytest.approx(
                modified_dissipation(m, rho, f.sym, f.asym), rel=1e-9, abs=1e-11
            )
            assert fisher(m, rho, "asym", 0.5) == pytest.approx(
                modified_dissipation(m, rho, f.asym, f.sym), rel=1e-9, abs=1e-11
            )


def test_lambda_one_reversal_form(all_models):
    # L = L_{-Frev}(j) - 2 <Fsym, j> with -Frev = Fasym - Fsym
    rng = np.random.default_rng(10)
    for m in all_models:
        for rho in states(m, 10):
            j = random_flux(m, rho, rng)
            f = m.forces(rho)
            lhs = tilted_lagrangian(m, rho, f.asym - f.sym, j) - 2.0 * m.pairing_flux(f.sym, j)
            assert lhs == pytest.approx(m.lagrangian(rho, j), rel=1e-9, abs=1e-9)


def test_convexity_probes(ipfg3, lattice):
    rng = np.random.default_rng(11)
    for m in (ipfg3, lattice):
        rho = states(m, 1)[0]
        for _ in range(500):
            z1 = rng.normal(size=m.n_edges)
            z2 = rng.normal(size=m.n_edges)
            mid = 0.5 * (m.hamiltonian(rho, z1) + m.hamiltonian(rho, z2))
            assert m.hamiltonian(rho, 0.5 * (z1 + z2)) <= mid + 1e-10 * (1 + abs(mid))
            j1 = random_flux(m, rho, rng)
            j2 = random_flux(m, rho, rng)
            mid = 0.5 * (m.lagrangian(rho, j1) + m.lagrangian(rho, j2))
            assert m.lagrangian(rho, 0.5 * (j1 + j2)) <= mid + 1e-10 * (1 + abs(mid))


# ---------------------------------------------------------------------------
# generalised orthogonality
# ---------------------------------------------------------------------------


def test_force_orthogonality(all_models):
    for m in all_models:
        for rho in states(m, 100):
            f = m.forces(rho)
            assert abs(ortho_pairing(m, rho, f.sym, f.asym)) <= 1e-9
            assert abs(ortho_pairing(m, rho, f.asym, f.sym)) <= 1e-9


def test_ortho_split_identity(all_models):
    rng = np.random.default_rng(12)
    for m in all_models:
        for rho in states(m, 10):
            z1 = rng.normal(size=m.n_edges)
            z2 = rng.normal(size=m.n_edges)
            lhs = dissipation_dual(m, rho, z1 + z2)
            rhs = (
                dissipation_dual(m, rho, z2)
                + ortho_pairing(m, rho, z1, z2)
                + modified_dissipation(m, rho, z1, z2)
            )
            assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_ortho_dissipation_splits(all_models):
    for m in all_models:
        for rho in states(m, 20):
            f = m.forces(rho)
            full = dissipation_dual(m, rho, f.total)
            s1 = dissipation_dual(m, rho, f.asym) + modified_dissipation(m, rho, f.sym, f.asym)
            s2 = dissipation_dual(m, rho, f.sym) + modified_dissipation(m, rho, f.asym, f.sym)
            assert abs(full - s1) <= 1e-9 * (1 + abs(full))
            assert abs(full - s2) <= 1e-9 * (1 + abs(full))


def test_ortho_cosh_closed_form(ipfg3, zr3, crn3):
    rng = np.random.default_rng(13)
    for m in (ipfg3, zr3, crn3):
        for rho in states(m, 5):
            z1 = rng.normal(size=m.n_edges)
            z2 = rng.normal(size=m.n_edges)
            a, b = m.edge_rates(rho)
            closed = float(np.sum(2.0 * np.sqrt(a * b) * np.sinh(z1) * np.sinh(z2)))
            assert ortho_pairing(m, rho, z1, z2) == pytest.approx(closed, rel=1e-10, abs=1e-10)


def test_ortho_quadratic_bilinear(lattice):
    rng = np.random.default_rng(14)
    rho = states(lattice, 1)[0]
    chi = lattice.edge_mobility(rho)
    z1, z2, z3 = rng.normal(size=(3, lattice.n_edges))
    inner = lambda u, v: 2.0 * float(np.sum(lattice.edge_weight * chi * u * v))
    assert ortho_pairing(lattice, rho, z1, z2) == pytest.approx(inner(z1, z2), rel=1e-10)
    lhs = ortho_pairing(lattice, rho, 2.0 * z1 + z3, z2)
    rhs = 2.0 * ortho_pairing(lattice, rho, z1, z2) + ortho_pairing(lattice, rho, z3, z2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-10)


# ---------------------------------------------------------------------------
# contraction and the Fisher-information inequality
# ---------------------------------------------------------------------------


def test_contraction_zero_at_drift_velocity(all_models):
    for m in all_models:
        for rho in states(m, 3):
            u = m.dphi(m.zero_cost_flux(rho))
            val, _ = contracted_lagrangian(m, rho, u)
            assert abs(val) <= 1e-10


def test_contraction_zero_velocity_at_equilibrium(ipfg2):
    val, _ = contracted_lagrangian(ipfg2, ipfg2.pi, np.zeros(2))
    assert abs(val) <= 1e-12


def test_contraction_single_edge_closed_form():
    m = IpfgModel(np.array([[-1.0, 1.0], [1.0, -1.0]]))
    delta = 0.5
    val, xi = contracted_lagrangian(m, [0.5, 0.5], np.array([-delta, delta]))
    expect = entropy.edge_lagrangian(0.5, 0.5, delta)
    assert val == pytest.approx(expect, abs=1e-8)


def test_contraction_below_flux_cost(all_models):
    rng = np.random.default_rng(15)
    for m in all_models:
        for rho in states(m, 5):
            j = random_flux(m, rho, rng)
            val, _ = contracted_lagrangian(m, rho, m.dphi(j))
            assert val <= m.lagrangian(rho, j) + 1e-9


def test_contraction_infeasible_velocity(ipfg3, crn_pair):
    with pytest.raises(InfeasibleVelocity):
        contracted_lagrangian(ipfg3, ipfg3.pi, np.array([1.0, 1.0, 1.0]))
    with pytest.raises(InfeasibleVelocity):
        contracted_lagrangian(crn_pair, crn_pair.pi, np.array([1.0, 0.0]))


def test_fir_gap_nonnegative(all_models):
    rng = np.random.default_rng(16)
    for m in all_models:
        for _ in range(50):
            rho = random_interior_state(m, rng)
            u = m.dphi(random_flux(m, rho, rng))
            for lam in LAMBDAS:
                assert fir_gap(m, rho, u, lam) >= -1e-9


def test_fir_gap_zero_lambda_is_contraction(ipfg3):
    rng = np.random.default_rng(17)
    rho = states(ipfg3, 1)[0]
    u = ipfg3.dphi(random_flux(ipfg3, rho, rng))
    val, _ = contracted_lagrangian(ipfg3, rho, u)
    assert fir_gap(ipfg3, rho, u, 0.0) == pytest.approx(val, abs=1e-12)
    assert val >= 0.0


def test_fir_gap_small_lambda_second_order(ipfg3):
    # at the drift velocity the gap vanishes to second order in lambda
    for rho in states(ipfg3, 3):
        u0 = ipfg3.dphi(ipfg3.zero_cost_flux(rho))
        g2 = fir_gap(ipfg3, rho, u0, 1e-2)
        g4 = fir_gap(ipfg3, rho, u0, 1e-4)
        assert abs(g4) <= 1e-3 * abs(g2) + 1e-10


# ---------------------------------------------------------------------------
# the packaged battery
# ---------------------------------------------------------------------------


def test_verification_suite_passes(all_models):
    for m in all_models:
        rows = verification_suite(m, seed=123, n_states_samples=30)
        failed = [r for r in rows if not r.passed]
        assert not failed, failed
