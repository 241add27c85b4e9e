"""Acceptance battery: one test per release criterion, each printing a
pass/fail line and enforcing the stated tolerance.  Run with ``pytest -s``
to see the lines during the run."""

import math
import time

import numpy as np
import pytest

from fluxdec import entropy, flows, sampler
from fluxdec.decomposition import (
    contracted_lagrangian,
    decomposition_residuals,
    dissipation_dual,
    fir_gap,
    fisher,
    modified_dissipation,
    ortho_pairing,
    random_flux,
    random_interior_state,
)
from fluxdec.models import IpfgModel, LatticeGasModel, skew_rotation_matrix
from fluxdec.modelio import bundled_fixtures

LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)
PERIOD3 = 4.0 * math.pi / math.sqrt(3.0)


@pytest.fixture(scope="module")
def fixtures():
    return bundled_fixtures()


def report(criterion, ok, elapsed, budget, detail=""):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {criterion:28s} {elapsed:6.2f}s  {detail}"
    print(line)
    assert ok, line
    if sampler.active_backend() == "compiled":
        assert elapsed < budget, f"criterion {criterion} exceeded {budget}s ({elapsed:.2f}s)"


def four_families(fixtures):
    return [fixtures["ipfg3"], fixtures["zero_range3"], fixtures["crn3"],
            fixtures["lattice32"]]


def test_01_decomposition_identities(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for m in four_families(fixtures):
        for _ in range(100):
            rho = random_interior_state(m, rng)
            j = random_flux(m, rho, rng)
            L = m.lagrangian(rho, j)
            for lam in LAMBDAS:
                for rep in decomposition_residuals(m, rho, j, lam):
                    worst = max(worst, abs(rep.residual) / (1.0 + abs(L)))
    report("decomposition-identities", worst <= 1e-9, time.perf_counter() - t0, 5.0,
           f"max residual {worst:.2e}")


def test_02_fisher_information(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    most_negative, worst_zero = 0.0, 0.0
    for m in four_families(fixtures):
        for _ in range(20):
            rho = random_interior_state(m, rng)
            for G in ("F", "sym", "asym"):
                for lam in np.linspace(0.0, 1.0, 11):
                    most_negative = min(most_negative, fisher(m, rho, G, lam))
                if m.cost_form == "cosh":
                    worst_zero = max(worst_zero, abs(fisher(m, rho, (G, 2.0), 0.5)))
    ok = most_negative >= -1e-12 and worst_zero <= 1e-9
    report("fisher-information", ok, time.perf_counter() - t0, 2.0,
           f"min R {most_negative:.2e}, max |R_half| {worst_zero:.2e}")


def test_03_quasipotential_identity(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(103)
    worst = 0.0
    for name in ("ipfg3", "zero_range3", "crn3"):
        m = fixtures[name]
        for _ in range(100):
            rho = random_interior_state(m, rng)
            g = m.dphi_T(m.quasipotential_gradient(rho))
            a, b = m.edge_rates(rho)
            worst = max(worst, abs(m.hamiltonian(rho, g)) / (1.0 + a.sum() + b.sum()))
    lat = fixtures["lattice32"]
    worst_lat = 0.0
    for _ in range(100):
        rho = random_interior_state(lat, rng)
        g = lat.dphi_T(lat.quasipotential_gradient(rho))
        worst_lat = max(worst_lat, abs(lat.hamiltonian(rho, g)))
    res = []
    for m_cells in (16, 32, 64):
        driven = LatticeGasModel(m_cells, mobility="independent", A=0.7)
        x = (np.arange(m_cells) + 0.5) / m_cells
        rho = 1.0 + 0.4 * np.sin(2 * np.pi * x) + 0.25 * np.sin(4 * np.pi * x)
        g = driven.dphi_T(driven.quasipotential_gradient(rho))
        res.append(abs(driven.hamiltonian(rho, g)))
    orders = [math.log2(res[i] / res[i + 1]) for i in range(2)]
    ok = worst <= 1e-9 and worst_lat <= 1e-12 and all(o >= 1.0 for o in orders)
    report("quasipotential-identity", ok, time.perf_counter() - t0, 5.0,
           f"jump {worst:.2e}, lattice {worst_lat:.2e}, orders {orders[0]:.2f}/{orders[1]:.2f}")


def test_04_generalised_orthogonality(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    worst_theta, worst_split = 0.0, 0.0
    for m in four_families(fixtures):
        for _ in range(50):
            rho = random_interior_state(m, rng)
            f = m.forces(rho)
            worst_theta = max(
                worst_theta,
                abs(ortho_pairing(m, rho, f.sym, f.asym)),
                abs(ortho_pairing(m, rho, f.asym, f.sym)),
            )
            full = dissipation_dual(m, rho, f.total)
            s1 = dissipation_dual(m, rho, f.asym) + modified_dissipation(m, rho, f.sym, f.asym)
            s2 = dissipation_dual(m, rho, f.sym) + modified_dissipation(m, rho, f.asym, f.sym)
            worst_split = max(worst_split, abs(full - s1), abs(full - s2))
    ok = worst_theta <= 1e-9 and worst_split <= 1e-9
    report("generalised-orthogonality", ok, time.perf_counter() - t0, 2.0,
           f"theta {worst_theta:.2e}, splits {worst_split:.2e}")


def test_05_fir_inequality(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(105)
    most_negative = 0.0
    for m in four_families(fixtures):
        for _ in range(50):
            rho = random_interior_state(m, rng)
            u = m.dphi(random_flux(m, rho, rng))
            for lam in LAMBDAS:
                most_negative = min(most_negative, fir_gap(m, rho, u, lam))
    # Newton contraction against the single-edge closed form
    m2 = fixtures["ipfg2"]
    rho = np.array([0.5, 0.5])
    a, b = m2.edge_rates(rho)
    worst_newton = 0.0
    for delta in (0.5, -0.3, 1.2):
        val, _ = contracted_lagrangian(m2, rho, np.array([-delta, delta]))
        worst_newton = max(worst_newton, abs(val - entropy.edge_lagrangian(a[0], b[0], delta)))
    ok = most_negative >= -1e-9 and worst_newton <= 1e-8
    report("fir-inequality", ok, time.perf_counter() - t0, 10.0,
           f"min gap {most_negative:.2e}, newton {worst_newton:.2e}")


def test_06_phase_portrait(fixtures):
    t0 = time.perf_counter()
    m = fixtures["ipfg3"]
    sigma = flows.threshold_sigma(m)
    assert sigma == pytest.approx(1.0 - math.sqrt(2.0 / 3.0), abs=1e-12)
    center = m.pi
    grid = []
    n = 8
    for i in range(1, n):
        for j in range(1, n - i):
            grid.append(np.array([i, j, n - i - j], dtype=float) / n)
    worst_dist = 0.0
    for p in grid:
        traj = flows.integrate_flow(m, "full", 0.98 * p + 0.02 * center, 20.0)
        worst_dist = max(worst_dist, float(np.linalg.norm(traj.rho[-1] - center)))
    sym_monotone = True
    for p in grid[:: max(1, len(grid) // 8)]:
        traj = flows.integrate_flow(m, "symmetric", 0.9 * p + 0.1 * center, 20.0)
        sym_monotone &= bool(np.max(np.diff(traj.V)) <= 1e-9)
    worst_return, worst_drift = 0.0, 0.0
    corner = np.array([1.0, 0.0, 0.0])
    for s in (0.3, 0.5, 0.7):
        rho0 = (1 - s) * center + s * corner
        assert flows.energy(m, rho0) < sigma
        period, dist = flows.detect_period(m, rho0)
        worst_return = max(worst_return, dist)
        traj = flows.integrate_flow(m, "antisymmetric", rho0, period,
                                    rtol=1e-10, atol=1e-12)
        worst_drift = max(worst_drift, float(np.max(np.abs(traj.E - traj.E[0]))))
    rho_super = 0.08 * center + 0.92 * corner
    assert flows.energy(m, rho_super) >= sigma
    traj = flows.integrate_flow(m, "antisymmetric", rho_super, 10.0 * PERIOD3)
    ok = (worst_dist <= 1e-3 and sym_monotone and worst_return <= 1e-4
          and worst_drift <= 1e-6 and traj.boundary_hit)
    report("phase-portrait", ok, time.perf_counter() - t0, 30.0,
           f"full {worst_dist:.1e}, return {worst_return:.1e}, drift {worst_drift:.1e}, "
           f"boundary={traj.boundary_hit}")


def test_07_hamiltonian_structure(fixtures):
    t0 = time.perf_counter()
    m = fixtures["ipfg3"]
    zr = fixtures["zero_range3"]
    rng = np.random.default_rng(107)
    A = skew_rotation_matrix(m.Q, m.pi)
    skew = float(np.max(np.abs(A + A.T)))
    s = np.sqrt(m.pi)
    kernel = max(float(np.max(np.abs(A @ s))), float(np.max(np.abs(A.T @ s))))
    worst_jacobi = 0.0
    for _ in range(20):
        omega = rng.uniform(0.2, 1.0, size=3)
        omega /= np.linalg.norm(omega)
        Gs = rng.normal(size=(3, 3))
        worst_jacobi = max(worst_jacobi, abs(flows.check_jacobi(m, omega, *Gs, coords="omega")))
    rho0 = np.array([0.5, 0.3, 0.2])
    lin = flows.omega_flow(m, rho0, PERIOD3, n_samples=257)
    non = flows.integrate_flow(m, "antisymmetric", rho0, PERIOD3,
                               rtol=1e-10, atol=1e-12, n_samples=257)
    flow_gap = float(np.max(np.abs(lin.rho - non.rho)))
    worst_skew_zr = 0.0
    for _ in range(20):
        rho = random_interior_state(zr, rng)
        J = flows.poisson_matrix(zr, rho)
        worst_skew_zr = max(worst_skew_zr, float(np.max(np.abs(J + J.T))))
    witness = flows.find_jacobi_violation(zr, rng)
    ok = (skew <= 1e-14 and kernel <= 1e-13 and worst_jacobi <= 1e-8
          and flow_gap <= 1e-6 and worst_skew_zr <= 1e-12 and witness is not None)
    report("hamiltonian-structure", ok, time.perf_counter() - t0, 10.0,
           f"skew {skew:.1e}, kernel {kernel:.1e}, jacobi {worst_jacobi:.1e}, "
           f"flow {flow_gap:.1e}, witness {witness[2]:.2e}" if witness else "no witness")


def test_08_energy_dissipation_identity(fixtures):
    t0 = time.perf_counter()
    m = fixtures["ipfg3"]
    rho0 = np.array([0.5, 0.3, 0.2])
    worst = 0.0
    errs = []
    for n in (101, 201):
        traj = flows.integrate_flow(m, "symmetric", rho0, 2.0,
                                    rtol=1e-12, atol=1e-13, n_samples=n)
        pointwise, chain = flows.edi_residual(m, traj)
        worst = max(worst, float(np.max(np.abs(pointwise))))
        errs.append(float(np.nanmax(np.abs(chain))))
    ok = worst <= 1e-8 and errs[1] <= 0.35 * errs[0]
    report("energy-dissipation", ok, time.perf_counter() - t0, 5.0,
           f"pointwise {worst:.2e}, halving ratio {errs[1] / errs[0]:.2f}")


def test_09_law_of_large_numbers(fixtures):
    t0 = time.perf_counter()
    m = fixtures["ipfg2"]
    hits = 0
    for r in range(100):
        path = sampler.gillespie(m, 10_000, [1.0, 0.0], 2.0, sampler.replica_seed(109, r))
        if abs(path.rho_final[0] - 0.669132) <= 0.02:
            hits += 1
    stats = sampler.lln_error(m, [100, 1000, 10_000], [1.0, 0.0], 2.0,
                              replicas=64, seed=209)
    zeta = np.array([0.4])
    tilted = sampler.tilt_rates(m, zeta)
    ode = flows.integrate_flow(tilted, "full", [1.0, 0.0], 2.0).rho_final
    terminal = np.zeros(2)
    for r in range(50):
        path = sampler.gillespie(tilted, 10_000, [1.0, 0.0], 2.0, sampler.replica_seed(309, r))
        terminal += path.rho_final
    tilted_err = float(np.abs(terminal / 50 - ode).sum())
    ok = hits >= 95 and -0.7 <= stats.slope <= -0.3 and tilted_err <= 0.02
    report("law-of-large-numbers", ok, time.perf_counter() - t0, 60.0,
           f"hits {hits}/100, slope {stats.slope:.3f}, tilted L1 {tilted_err:.4f} "
           f"[{sampler.active_backend()} backend]")


def test_10_reversal_identity(fixtures):
    t0 = time.perf_counter()
    rng = np.random.default_rng(110)
    worst = 0.0
    m3 = fixtures["ipfg3"]
    rev = m3.reversed_model()
    for _ in range(50):
        rho = random_interior_state(m3, rng)
        j = random_flux(m3, rho, rng)
        g = m3.dphi_T(m3.quasipotential_gradient(rho))
        rhs = m3.lagrangian(rho, -j) + m3.pairing_flux(g, j)
        worst = max(worst, abs(rev.lagrangian(rho, j) - rhs) / (1.0 + abs(rhs)))
    for m in four_families(fixtures):
        for _ in range(50):
            rho = random_interior_state(m, rng)
            j = random_flux(m, rho, rng)
            g = m.dphi_T(m.quasipotential_gradient(rho))
            rhs = m.lagrangian(rho, -j) + m.pairing_flux(g, j)
            worst = max(worst, abs(m.reversed_lagrangian(rho, j) - rhs) / (1.0 + abs(rhs)))
    worst_db = 0.0
    db = fixtures["ipfg2"]
    for _ in range(50):
        rho = random_interior_state(db, rng)
        j = random_flux(db, rho, rng)
        worst_db = max(
            worst_db,
            abs(db.reversed_lagrangian(rho, j) - db.lagrangian(rho, j))
            / (1.0 + abs(db.lagrangian(rho, j))),
        )
    ok = worst <= 1e-8 and worst_db <= 1e-8
    report("reversal-identity", ok, time.perf_counter() - t0, 10.0,
           f"identity {worst:.2e}, detailed-balance {worst_db:.2e}")
