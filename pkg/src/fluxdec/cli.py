"""Command-line front end.

Subcommands: ``fixtures`` (emit the bundled reference models), ``verify``
(identity battery, CSV report, exit 1 on failure), ``flow`` (integrate one
zero-cost flow to CSV), ``phase`` (direction fields and sample orbits on the
two-simplex for three-state models) and ``sample`` (stochastic campaigns).

All outputs are deterministic given the inputs and the seed; files are
written to a temporary name and atomically renamed.  Exit codes: 0 success,
1 verification failure, 2 usage or model-file errors.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import flows, sampler
from .decomposition import verification_suite
from .errors import FluxDecError
from .modelio import bundled_fixtures, parse_model_spec, write_model_spec

KINDS = {"full": "full", "sym": "symmetric", "asym": "antisymmetric"}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v]


def _default_rho0(model):
    if model.probability:
        rho0 = np.zeros(model.n_states)
        rho0[0] = 1.0
        return rho0
    return np.array(model.pi, dtype=float)


def _resolve_rho0(args, model):
    if args.rho0:
        rho0 = np.asarray(_parse_floats(args.rho0), dtype=float)
        if rho0.shape != (model.n_states,):
            raise FluxDecError(
                f"--rho0 needs {model.n_states} entries, got {rho0.size}"
            )
        return rho0
    return _default_rho0(model)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_fixtures(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    for name, model in bundled_fixtures().items():
        write_model_spec(model, os.path.join(args.out, f"{name}.json"))
        print(f"wrote {name}.json")
    return 0


def cmd_verify(args) -> int:
    model = parse_model_spec(args.model)
    lambdas = tuple(_parse_floats(args.lam)) if args.lam else None
    rows = verification_suite(model, seed=args.seed, lambdas=lambdas)
    write_csv(
        args.out,
        ["model", "check", "lambda", "residual", "tolerance", "pass"],
        [(r.model, r.check, r.lam, r.residual, r.tolerance, int(r.passed)) for r in rows],
    )
    failed = [r for r in rows if not r.passed]
    for r in rows:
        status = "pass" if r.passed else "FAIL"
        print(f"{status:4s} {r.check:28s} lambda={_fmt(r.lam):>8s} residual={r.residual:.3e}")
    return 1 if failed else 0


def _edi_pointwise(model, rho, j):
    from .decomposition import dissipation, dissipation_dual

    try:
        fsym = model.forces(rho).sym
    except FluxDecError:
        return math.nan
    return (
        dissipation(model, rho, j)
        + dissipation_dual(model, rho, fsym)
        - model.pairing_flux(fsym, j)
    )


def _trajectory_rows(model, traj):
    for i in range(len(traj.t)):
        yield (
            [traj.t[i]]
            + list(traj.rho[i])
            + list(traj.flux[i])
            + [traj.V[i], traj.E[i], traj.min_rho[i],
               _edi_pointwise(model, traj.rho[i], traj.flux[i])]
        )


def _trajectory_header(model):
    return (
        ["t"]
        + [f"rho_{i + 1}" for i in range(model.n_states)]
        + [f"j_{e + 1}" for e in range(model.n_edges)]
        + ["V", "E", "min_rho", "edi_residual"]
    )


def cmd_flow(args) -> int:
    model = parse_model_spec(args.model)
    if args.kind == "tilted":
        lam = _parse_floats(args.lam)[0] if args.lam else 0.5
        kind = ("tilted", args.tilt, lam)
    else:
        kind = KINDS[args.kind]
    rho0 = _resolve_rho0(args, model)
    traj = flows.integrate_flow(model, kind, rho0, args.t_final, rtol=args.tol)
    write_csv(args.out, _trajectory_header(model), _trajectory_rows(model, traj))
    if traj.boundary_hit:
        print(f"boundary hit at t = {_fmt(traj.t_boundary)}")
    print(f"wrote {len(traj.t)} samples to {args.out}")
    return 0


def _simplex_grid(n):
    pts = []
    for i in range(1, n):
        for j in range(1, n - i):
            pts.append(np.array([i, j, n - i - j], dtype=float) / n)
    return pts


def cmd_phase(args) -> int:
    model = parse_model_spec(args.model)
    if model.n_states != 3 or not model.probability:
        raise FluxDecError("phase diagrams need a three-state probability model")
    sigma = flows.threshold_sigma(model)

    field_rows = []
    for kind_name, kind in KINDS.items():
        field = flows.flux_field(model, kind)
        for p in _simplex_grid(args.grid):
            u = model.dphi(field(p))
            field_rows.append([kind_name, *p, *u])
    write_csv(
        args.out + "_field.csv",
        ["kind", "rho_1", "rho_2", "rho_3", "u_1", "u_2", "u_3"],
        field_rows,
    )

    center = np.asarray(model.pi, dtype=float)
    corner = np.array([1.0, 0.0, 0.0])
    starts = {
        "full": [0.96 * p + 0.04 * center for p in _simplex_grid(max(4, args.grid // 2))],
        "sym": [0.96 * p + 0.04 * center for p in _simplex_grid(max(4, args.grid // 2))],
        "asym": [(1 - s) * center + s * corner for s in (0.3, 0.5, 0.7, 0.92)],
    }
    orbit_rows, summary_rows = [], []
    for kind_name, rho0s in starts.items():
        kind = KINDS[kind_name]
        for idx, rho0 in enumerate(rho0s):
            E0 = flows.energy(model, rho0)
            period = return_dist = math.nan
            if kind_name == "asym" and E0 < sigma:
                try:
                    period, return_dist = flows.detect_period(model, rho0)
                except FluxDecError:
                    pass
            horizon = 1.05 * period if not math.isnan(period) else args.t_final
            traj = flows.integrate_flow(model, kind, rho0, horizon)
            for i in range(len(traj.t)):
                orbit_rows.append([kind_name, idx, traj.t[i], *traj.rho[i]])
            summary_rows.append([
                kind_name, idx, *rho0, E0,
                float(np.linalg.norm(traj.rho[-1] - center)),
                int(bool(np.max(np.diff(traj.V)) <= 1e-9)) if len(traj.V) > 1 else 1,
                period, return_dist,
                int(traj.boundary_hit),
                float(np.nanmax(np.abs(traj.E - E0))),
            ])
    write_csv(
        args.out + "_orbits.csv",
        ["kind", "orbit", "t", "rho_1", "rho_2", "rho_3"],
        orbit_rows,
    )
    write_csv(
        args.out + "_summary.csv",
        ["kind", "orbit", "rho0_1", "rho0_2", "rho0_3", "E0", "final_dist_pi",
         "V_monotone", "period", "return_dist", "boundary_hit", "energy_drift"],
        summary_rows,
    )
    print(f"sigma = {_fmt(sigma)}; wrote field/orbits/summary under prefix {args.out}")
    return 0


def cmd_sample(args) -> int:
    model = parse_model_spec(args.model)
    if args.tilt_value is not None:
        zeta = np.zeros(model.n_edges)
        zeta[args.tilt_edge] = args.tilt_value
        model = sampler.tilt_rates(model, zeta)
    rho0 = _resolve_rho0(args, model)
    n_values = [int(v) for v in _parse_floats(args.n)]
    stats = sampler.lln_error(model, n_values, rho0, args.t_final,
                              replicas=args.replicas, seed=args.seed)
    write_csv(
        args.out,
        ["n", "mean_err", "var", "slope"],
        [
            (n, e, v, stats.slope)
            for n, e, v in zip(stats.n_values, stats.mean_errors, stats.variances)
        ],
    )
    if args.paths_out:
        path = sampler.gillespie(model, n_values[-1], rho0, args.t_final,
                                 sampler.replica_seed(args.seed, 0))
        rows = [
            [0, t, *(c / path.n), *(w / path.n)]
            for t, c, w in zip(path.times, path.counts, path.flux_counts)
        ]
        write_csv(
            args.paths_out,
            ["replica", "t"]
            + [f"rho_{i + 1}" for i in range(model.n_states)]
            + [f"w_{e + 1}" for e in range(model.n_edges)],
            rows,
        )
    print(f"slope = {_fmt(stats.slope)}; wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fluxdec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    fx = sub.add_parser("fixtures", help="write the bundled reference models")
    fx.add_argument("--out", default="fixtures")
    fx.set_defaults(fn=cmd_fixtures)

    vf = sub.add_parser("verify", help="run the identity battery on a model")
    vf.add_argument("--model", required=True)
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--lambda", dest="lam", default=None,
                    help="comma-separated lambda grid override")
    vf.add_argument("--out", default="verify.csv")
    vf.set_defaults(fn=cmd_verify)

    fl = sub.add_parser("flow", help="integrate one zero-cost flow")
    fl.add_argument("--model", required=True)
    fl.add_argument("--kind", choices=["full", "sym", "asym", "tilted"], default="full")
    fl.add_argument("--tilt", choices=["F", "sym", "asym"], default="sym",
                    help="tilt direction for --kind tilted")
    fl.add_argument("--lambda", dest="lam", default=None,
                    help="tilt strength for --kind tilted")
    fl.add_argument("--rho0", default=None, help="comma-separated start state")
    fl.add_argument("--t-final", type=float, default=10.0)
    fl.add_argument("--tol", type=float, default=1e-8)
    fl.add_argument("--out", default="flow.csv")
    fl.set_defaults(fn=cmd_flow)

    ph = sub.add_parser("phase", help="direction fields and orbits on the 2-simplex")
    ph.add_argument("--model", required=True)
    ph.add_argument("--grid", type=int, default=12)
    ph.add_argument("--t-final", type=float, default=20.0)
    ph.add_argument("--out", default="phase")
    ph.set_defaults(fn=cmd_phase)

    sm = sub.add_parser("sample", help="stochastic law-of-large-numbers campaigns")
    sm.add_argument("--model", required=True)
    sm.add_argument("--seed", type=int, required=True)
    sm.add_argument("--n", default="100,1000,10000", help="comma-separated system sizes")
    sm.add_argument("--replicas", type=int, default=64)
    sm.add_argument("--rho0", default=None)
    sm.add_argument("--t-final", type=float, default=2.0)
    sm.add_argument("--tilt-edge", type=int, default=0)
    sm.add_argument("--tilt-value", type=float, default=None)
    sm.add_argument("--out", default="sample.csv")
    sm.add_argument("--paths-out", default=None)
    sm.set_defaults(fn=cmd_sample)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FluxDecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
