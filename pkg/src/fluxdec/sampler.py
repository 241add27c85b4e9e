"""Exact stochastic simulation of the n-particle jump systems with net-flux
bookkeeping, exponential tilting of rates, and law-of-large-numbers checks
against the deterministic flows.

The event loop lives in the compiled extension ``_gillespie`` when available;
otherwise the pure-Python twin is used.  Both consume the same random stream,
so results do not depend on the backend.  Set ``FLUXDEC_PURE_PYTHON=1`` to
force the fallback (the benchmark uses this to compare the two).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _gillespie_py
from .errors import UnsupportedModel
from .models import CrnModel, IpfgModel, ZeroRangeModel

try:
    from . import _gillespie
except ImportError:  # extension not built; fall back to the Python twin
    _gillespie = None


def active_backend() -> str:
    if _gillespie is None or os.environ.get("FLUXDEC_PURE_PYTHON"):
        return "python"
    return "compiled"


def _kernel():
    return _gillespie_py if active_backend() == "python" else _gillespie


@dataclass(frozen=True)
class TransitionTable:
    """Generalised mass-action encoding of every microscopic transition."""

    coef: np.ndarray       # [nt]
    expo: np.ndarray       # [nt, k] real exponents
    delta: np.ndarray      # [nt, k] integer count changes
    flux_idx: np.ndarray   # [nt] which net-flux counter moves
    flux_sign: np.ndarray  # [nt] by +1 or -1


def transition_table(model) -> TransitionTable:
    """Build the transition table; raises ``UnsupportedModel`` for families
    whose rates are not monomial in the counts (tabulated zero-range etc.)."""
    if isinstance(model, IpfgModel) or isinstance(model, ZeroRangeModel):
        k, m = model.n_states, model.n_edges
        lo, hi = model._lo, model._hi
        if isinstance(model, IpfgModel):
            powers = np.ones(k)
            prefactor = np.ones(k)
        else:
            powers = np.empty(k)
            prefactor = np.empty(k)
            for x, eta in enumerate(model.etas):
                if eta.power is None:
                    raise UnsupportedModel(
                        "non-power rate function has no mass-action representation"
                    )
                powers[x] = eta.power
                prefactor[x] = model.pi[x] ** (1.0 - eta.power)
        coef, expo, delta, fidx, fsgn = [], [], [], [], []
        for e in range(m):
            x, y = lo[e], hi[e]
            for src, dst, q, sign in ((x, y, model.Q[x, y], 1), (y, x, model.Q[y, x], -1)):
                if q <= 0.0:
                    continue
                coef.append(q * prefactor[src])
                row = np.zeros(k)
                row[src] = powers[src]
                expo.append(row)
                d = np.zeros(k, dtype=np.int64)
                d[src] -= 1
                d[dst] += 1
                delta.append(d)
                fidx.append(e)
                fsgn.append(sign)
    elif isinstance(model, CrnModel):
        k, m = model.n_states, model.n_edges
        coef, expo, delta, fidx, fsgn = [], [], [], [], []
        for r in range(m):
            gam = np.rint(model.gamma[r]).astype(np.int64)
            coef.append(model.c_fw[r])
            expo.append(model.alpha_fw[r].astype(float))
            delta.append(gam)
            fidx.append(r)
            fsgn.append(1)
            coef.append(model.c_bw[r])
            expo.append(model.alpha_bw[r].astype(float))
            delta.append(-gam)
            fidx.append(r)
            fsgn.append(-1)
    else:
        raise UnsupportedModel(f"no particle system for model {model.name!r}")
    return TransitionTable(
        coef=np.asarray(coef, dtype=float),
        expo=np.ascontiguousarray(expo, dtype=float),
        delta=np.ascontiguousarray(delta, dtype=np.int64),
        flux_idx=np.asarray(fidx, dtype=np.int64),
        flux_sign=np.asarray(fsgn, dtype=np.int64),
    )


def apportion_counts(n: int, rho0: np.ndarray) -> np.ndarray:
    """Round n * rho0 to integers by largest remainder, preserving the total."""
    target = np.asarray(rho0, dtype=float) * n
    base = np.floor(target).astype(np.int64)
    short = int(round(target.sum())) - int(base.sum())
    if short > 0:
        order = np.argsort(-(target - base), kind="stable")
        base[order[:short]] += 1
    return base


@dataclass
class GillespiePath:
    """One realisation: thinned checkpoints plus the exact terminal state."""

    n: int
    times: np.ndarray
    counts: np.ndarray       # [nc, k]
    flux_counts: np.ndarray  # [nc, m]
    counts_final: np.ndarray
    flux_final: np.ndarray
    n_events: int
    absorbed: bool
    t_absorbed: float

    @property
    def rho_final(self) -> np.ndarray:
        return self.counts_final / self.n

    @property
    def flux_final_scaled(self) -> np.ndarray:
        return self.flux_final / self.n


def _bit_generator(seed) -> np.random.Philox:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Philox(seed)
    return np.random.Philox(np.random.SeedSequence(seed))


def gillespie(model, n: int, rho0, t_final: float, seed,
              max_checkpoints: int = 10_000) -> GillespiePath:
    """Simulate the n-particle system (volume-V system for reaction networks)
    up to ``t_final``.  Identical (model, n, rho0, t_final, seed) give the
    identical event sequence."""
    if n < 1:
        raise ValueError("need at least one particle")
    table = transition_table(model)
    counts0 = apportion_counts(n, np.asarray(rho0, dtype=float))
    bg = _bit_generator(seed)
    times, chist, fhist, counts, flux, n_events, absorbed, t_abs = _kernel().run(
        table.coef, table.expo, table.delta, table.flux_idx, table.flux_sign,
        float(n), counts0, model.n_edges, float(t_final), bg, max_checkpoints,
    )
    return GillespiePath(
        n=n, times=times, counts=chist, flux_counts=fhist,
        counts_final=counts, flux_final=flux,
        n_events=n_events, absorbed=absorbed, t_absorbed=t_abs,
    )


def tilt_rates(model, zeta):
    """Exponential tilting: forward intensity a -> a e^zeta, backward
    b -> b e^-zeta on every edge or reaction pair."""
    return model.tilted(zeta)


def replica_seed(seed: int, replica: int) -> np.random.SeedSequence:
    """Counter-based stream for one replica; independent of scheduling."""
    return np.random.SeedSequence((seed, replica))


@dataclass(frozen=True)
class SampleStats:
    n_values: tuple
    mean_errors: tuple      # terminal L1 error vs the deterministic flow
    variances: tuple
    replicas: int
    seed: int
    slope: float


def lln_error(model, n_values, rho0, t_final: float, replicas: int, seed: int,
              rho_ode=None) -> SampleStats:
    """Terminal L1 error of the empirical density against the deterministic
    evolution, for each system size, with the fitted log-log slope."""
    from .flows import integrate_flow  # local import to avoid a cycle

    if rho_ode is None:
        rho_ode = integrate_flow(model, "full", rho0, t_final).rho[-1]
    means, variances = [], []
    for n in n_values:
        errs = np.empty(replicas)
        for r in range(replicas):
            path = gillespie(model, n, rho0, t_final, replica_seed(seed, r))
            errs[r] = np.abs(path.rho_final - rho_ode).sum()
        means.append(float(errs.mean()))
        variances.append(float(errs.var(ddof=1)) if replicas > 1 else 0.0)
    if len(n_values) >= 2:
        slope = float(np.polyfit(np.log(np.asarray(n_values, float)), np.log(means), 1)[0])
    else:
        slope = math.nan
    return SampleStats(
        n_values=tuple(int(n) for n in n_values),
        mean_errors=tuple(means),
        variances=tuple(variances),
        replicas=replicas,
        seed=seed,
        slope=slope,
    )


def sample_invariant(model, n: int, count: int, seed: int) -> np.ndarray:
    """i.i.d. draws of the stationary empirical density: multinomial(n, pi)/n.

    Only the independent-particle family has this product form.
    """
    if not isinstance(model, IpfgModel):
        raise UnsupportedModel("closed-form stationary sampling needs the independent-particle model")
    gen = np.random.Generator(_bit_generator(seed))
    return gen.multinomial(n, model.pi, size=count) / n


def multinomial_rate(model, n: int, counts) -> float:
    """-(1/n) log of the multinomial(n, pi) mass at the given occupation."""
    counts = np.asarray(counts, dtype=np.int64)
    logp = math.lgamma(n + 1)
    for c, p in zip(counts, model.pi):
        logp += c * math.log(p) - math.lgamma(c + 1)
    return -logp / n
