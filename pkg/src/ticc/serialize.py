"""Versioned JSON formats for ansatz circuits, Hamiltonians, and lattices.

Complex matrix entries are stored as [re, im] pairs. The ansatz format is
the artifact exchanged between optimization and evaluation/QPE runs.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ansatz import AnsatzLayer, BrickwallAnsatz, TiccAnsatz
from .hamiltonian import Hamiltonian, build_heisenberg_field, build_tfim
from .lattice import Geometry, Lattice, build_lattice

ANSATZ_FORMAT = "ticc-ansatz"
ANSATZ_VERSION = 1


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(np.real(v)), float(np.imag(v))] for v in row] for row in np.asarray(m)]


def matrix_from_json(rows: list) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def lattice_to_dict(lattice: Lattice) -> dict:
    return {"geometry": lattice.geometry.value, "extents": list(lattice.extents)}


def lattice_from_dict(d: dict) -> Lattice:
    return build_lattice(Geometry(d["geometry"]), d["extents"])


def hamiltonian_to_dict(h: Hamiltonian) -> dict:
    return h.to_dict()


def hamiltonian_from_dict(d: dict) -> Hamiltonian:
    lattice = lattice_from_dict(d["lattice"] if "geometry" not in d else d)
    kind = d["kind"]
    params = d.get("params", [])
    if kind == "tfim":
        return build_tfim(lattice, *params)
    if kind == "heisenberg":
        return build_heisenberg_field(lattice, *params)
    raise ValueError(f"cannot rebuild Hamiltonian of kind '{kind}'")


def model_spec_to_hamiltonian(model: str, lattice: Lattice, params) -> Hamiltonian:
    if model == "tfim":
        (g,) = params
        return build_tfim(lattice, g)
    if model in ("heisenberg", "hm"):
        hx, hy, hz = params
        return build_heisenberg_field(lattice, hx, hy, hz)
    raise ValueError(f"unknown model '{model}' (expected tfim or heisenberg)")


def ansatz_to_dict(ansatz: BrickwallAnsatz | TiccAnsatz, meta: dict | None = None) -> dict:
    base = ansatz.base if isinstance(ansatz, TiccAnsatz) else ansatz
    payload = {
        "format": ANSATZ_FORMAT,
        "version": ANSATZ_VERSION,
        "lattice": lattice_to_dict(base.lattice),
        "layers": [
            {
                "gate_id": l.gate_id,
                "class_index": l.class_index,
                "pairing_index": l.pairing_index,
                "is_control": l.is_control,
                "tau": l.tau,
            }
            for l in base.layers
        ],
        "gates": {gid: matrix_to_json(g) for gid, g in base.gates.items()},
        "meta": meta or {},
    }
    if isinstance(ansatz, TiccAnsatz):
        payload["ticc"] = {
            "control_layer_ids": list(ansatz.control_layer_ids),
            "d": ansatz.d,
            "eta": ansatz.eta,
            "gamma": ansatz.gamma,
            "t": ansatz.t,
            "k_words": {str(k): v for k, v in ansatz.k_words.items()},
        }
    return payload


def ansatz_from_dict(payload: dict) -> BrickwallAnsatz | TiccAnsatz:
    if payload.get("format") != ANSATZ_FORMAT:
        raise ValueError("not an ansatz payload")
    if payload.get("version") != ANSATZ_VERSION:
        raise ValueError(f"unsupported ansatz version {payload.get('version')}")
    lattice = lattice_from_dict(payload["lattice"])
    layers = [
        AnsatzLayer(l["gate_id"], l["class_index"], l["pairing_index"],
                    l.get("is_control", False), l.get("tau", 0.0))
        for l in payload["layers"]
    ]
    gates = {gid: matrix_from_json(rows) for gid, rows in payload["gates"].items()}
    base = BrickwallAnsatz(lattice, layers, gates)
    base.validate()
    if "ticc" in payload:
        info = payload["ticc"]
        return TiccAnsatz(
            base, tuple(info["control_layer_ids"]), info["d"], info["eta"],
            info["gamma"], info["t"],
            {int(k): v for k, v in info.get("k_words", {}).items()},
        )
    return base


def save_ansatz(ansatz, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(json.dumps(ansatz_to_dict(ansatz, meta), indent=1))


def load_ansatz(path: str | Path):
    return ansatz_from_dict(json.loads(Path(path).read_text()))
