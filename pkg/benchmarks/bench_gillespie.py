"""Benchmark the compiled event loop against the pure-Python twin.

The two backends consume the identical random stream, so besides timing the
script also asserts that the terminal states agree bit for bit.

    python3 benchmarks/bench_gillespie.py [--n 10000] [--t-final 2.0] [--replicas 20]
"""

import argparse
import os
import time

import numpy as np

from fluxdec import sampler
from fluxdec.modelio import bundled_fixtures


def campaign(model, n, t_final, replicas, seed=1234):
    finals = []
    events = 0
    t0 = time.perf_counter()
    for r in range(replicas):
        path = sampler.gillespie(model, n, [1.0, 0.0], t_final, sampler.replica_seed(seed, r))
        finals.append(path.counts_final.copy())
        events += path.n_events
    return time.perf_counter() - t0, events, finals


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--t-final", type=float, default=2.0)
    ap.add_argument("--replicas", type=int, default=20)
    args = ap.parse_args()

    model = bundled_fixtures()["ipfg2"]
    results = {}
    for backend in ("compiled", "python"):
        if backend == "python":
            os.environ["FLUXDEC_PURE_PYTHON"] = "1"
        else:
            os.environ.pop("FLUXDEC_PURE_PYTHON", None)
        if sampler.active_backend() != backend:
            print(f"{backend:>8s}: unavailable (extension not built)")
            continue
        elapsed, events, finals = campaign(model, args.n, args.t_final, args.replicas)
        results[backend] = (elapsed, events, finals)
        print(f"{backend:>8s}: {events:>9d} events in {elapsed:7.3f}s "
              f"({events / elapsed / 1e6:6.2f} M events/s)")

    if len(results) == 2:
        (tc, _, fc), (tp, _, fp) = results["compiled"], results["python"]
        identical = all(np.array_equal(a, b) for a, b in zip(fc, fp))
        print(f"terminal states bit-identical: {identical}")
        print(f"speedup: {tp / tc:.1f}x")
        if not identical:
            raise SystemExit(1)


if __name__ == "__main__":
    main()
