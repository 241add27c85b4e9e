"""Model description files: a single JSON document with a ``model``
discriminator and per-family fields.  Numeric leaves may be plain numbers or
decimal strings (strings avoid double rounding when fixtures are generated
by other tools)."""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ModelSpecError
from .models import (
    AffineCappedEta,
    CrnModel,
    IpfgModel,
    LatticeGasModel,
    PowerEta,
    ScaledEta,
    TabulatedEta,
    ZeroRangeModel,
    normalize_zero_range,
)

__all__ = ["parse_model_spec", "load_model", "serialize_model", "write_model_spec",
           "bundled_fixtures"]


def _num(x):
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError as exc:
            raise ModelSpecError(f"not a number: {x!r}") from exc
    if isinstance(x, (int, float)):
        return float(x)
    raise ModelSpecError(f"expected a number, got {type(x).__name__}")


def _vec(x):
    return np.array([_num(v) for v in x], dtype=float)


def _mat(x, shape=None):
    M = np.array([[_num(v) for v in row] for row in x], dtype=float)
    if shape is not None and M.shape != shape:
        raise ModelSpecError(f"matrix has shape {M.shape}, expected {shape}")
    return M


def _eta_from_dict(d):
    family = d.get("family")
    if family == "power":
        return PowerEta(_num(d["p"]))
    if family == "affine-capped":
        return AffineCappedEta(_num(d.get("zstar", 2.0)), _num(d.get("slope", 0.5)))
    if family == "table":
        return TabulatedEta(_vec(d["z"]), _vec(d["values"]))
    if family == "scaled":
        return ScaledEta(_eta_from_dict(d["base"]), _num(d["zscale"]), _num(d["yscale"]))
    raise ModelSpecError(f"unknown rate-function family {family!r}")


def _eta_to_dict(eta):
    if isinstance(eta, PowerEta):
        return {"family": "power", "p": eta.p}
    if isinstance(eta, AffineCappedEta):
        return {"family": "affine-capped", "zstar": eta.zstar, "slope": eta.slope}
    if isinstance(eta, TabulatedEta):
        return {"family": "table", "z": eta._z.tolist(), "values": eta._f(eta._z).tolist()}
    if isinstance(eta, ScaledEta):
        return {"family": "scaled", "base": _eta_to_dict(eta.base),
                "zscale": eta.zscale, "yscale": eta.yscale}
    raise ModelSpecError(f"cannot serialise rate function {type(eta).__name__}")


def load_model(doc: dict):
    """Build and validate a model from a parsed JSON document."""
    kind = doc.get("model")
    if kind == "ipfg":
        nodes = tuple(doc.get("nodes", range(len(doc["Q"]))))
        Q = _mat(doc["Q"], (len(nodes), len(nodes)))
        pi = _vec(doc["pi"]) if "pi" in doc else None
        return IpfgModel(Q, pi=pi, nodes=nodes)
    if kind == "zero-range":
        nodes = tuple(doc.get("nodes", range(len(doc["Q"]))))
        Q = _mat(doc["Q"], (len(nodes), len(nodes)))
        pi = _vec(doc["pi"])
        eta_doc = doc["eta"]
        if isinstance(eta_doc, dict):
            etas = _eta_from_dict(eta_doc)
        else:
            etas = [_eta_from_dict(d) for d in eta_doc]
        etas_list = [etas] * len(nodes) if hasattr(etas, "inverse") else etas
        if all(abs(float(e(1.0)) - 1.0) <= 1e-12 for e in etas_list):
            return ZeroRangeModel(Q, pi, etas, nodes=nodes)
        raw = ZeroRangeModel(Q, pi, etas, nodes=nodes, validate=False)
        return normalize_zero_range(raw)
    if kind == "crn":
        species = tuple(doc["species"])
        reactions = doc["reactions"]
        alpha_fw = _mat([r["alpha_fw"] for r in reactions])
        alpha_bw = _mat([r["alpha_bw"] for r in reactions])
        c_fw = np.array([_num(r["c_fw"]) for r in reactions])
        c_bw = np.array([_num(r["c_bw"]) for r in reactions])
        return CrnModel(species, alpha_fw, alpha_bw, c_fw, c_bw, _vec(doc["pi"]))
    if kind == "lattice-gas":
        grid = doc["grid"]
        m = int(grid["m"])
        U = grid.get("U", 0.0)
        U = np.full(m, _num(U)) if not isinstance(U, list) else _vec(U)
        A = grid.get("A", 0.0)
        A = _num(A) if not isinstance(A, list) else _vec(A)
        mass = _num(doc["mass"]) if "mass" in doc else None
        return LatticeGasModel(m, mobility=grid.get("mobility", "independent"),
                               U=U, A=A, mass=mass)
    raise ModelSpecError(f"unknown model family {kind!r}")


def parse_model_spec(path: str):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelSpecError(f"cannot read model file {path}: {exc}") from exc
    return load_model(doc)


def serialize_model(model) -> dict:
    if isinstance(model, IpfgModel):
        return {
            "model": "ipfg",
            "nodes": list(model.graph.nodes),
            "Q": model.Q.tolist(),
            "pi": model.pi.tolist(),
        }
    if isinstance(model, ZeroRangeModel):
        first = model.etas[0]
        shared = all(e is first for e in model.etas)
        return {
            "model": "zero-range",
            "nodes": list(model.graph.nodes),
            "Q": model.Q.tolist(),
            "pi": model.pi.tolist(),
            "eta": _eta_to_dict(first) if shared else [_eta_to_dict(e) for e in model.etas],
        }
    if isinstance(model, CrnModel):
        return {
            "model": "crn",
            "species": list(model.species),
            "pi": model.pi.tolist(),
            "reactions": [
                {
                    "alpha_fw": model.alpha_fw[r].tolist(),
                    "alpha_bw": model.alpha_bw[r].tolist(),
                    "c_fw": float(model.c_fw[r]),
                    "c_bw": float(model.c_bw[r]),
                }
                for r in range(model.n_edges)
            ],
        }
    if isinstance(model, LatticeGasModel):
        return {
            "model": "lattice-gas",
            "grid": {
                "m": model.m,
                "mobility": model.mobility,
                "U": model.U.tolist(),
                "A": model.A.tolist(),
            },
            "mass": model.mass,
        }
    raise ModelSpecError(f"cannot serialise model {type(model).__name__}")


def write_model_spec(model, path: str):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(serialize_model(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def bundled_fixtures() -> dict:
    """The reference models: two-state and three-cycle jump models, a
    three-node zero-range system with a square-root rate, the unary cycle
    reaction network, and a 32-cell lattice gas."""
    Q2 = np.array([[-1.0, 1.0], [2.0, -2.0]])
    Q3 = np.array([[-3.0, 2.0, 1.0], [1.0, -3.0, 2.0], [2.0, 1.0, -3.0]])
    x = (np.arange(32) + 0.5) / 32.0
    return {
        "ipfg2": IpfgModel(Q2),
        "ipfg3": IpfgModel(Q3),
        "zero_range3": ZeroRangeModel(Q3, np.full(3, 1.0 / 3.0), PowerEta(0.5)),
        "crn3": CrnModel(
            ("A", "B", "C"),
            np.array([[1, 0, 0], [1, 0, 0], [0, 1, 0]]),
            np.array([[0, 1, 0], [0, 0, 1], [0, 0, 1]]),
            np.array([2.0, 1.0, 2.0]),
            np.array([1.0, 2.0, 1.0]),
            np.full(3, 1.0 / 3.0),
        ),
        "lattice32": LatticeGasModel(
            32, mobility="exclusion", U=0.5 * np.cos(2.0 * np.pi * x), A=0.0
        ),
    }
