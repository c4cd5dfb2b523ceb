"""Flat circuit IR shared by the ansatz, Trotter, synthesis and QPE layers.

A circuit is an ordered list of gate operations on one or two sites, each
optionally promoted to an ancilla-controlled operation. Gate metadata
(ZZPhase angle, decomposition overhead) rides along for noise accounting.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .statevector import (
    apply_controlled_two_qubit,
    apply_single_qubit,
    apply_two_qubit,
    embed_two_site,
    apply_operator_to_sites,
)


@dataclass(frozen=True, eq=False)
class GateOp:
    matrix: np.ndarray
    sites: tuple[int, ...]
    control: int | None = None
    label: str = ""
    angle: float | None = None      # ZZPhase geometric angle, when applicable
    gamma_d: int | None = None      # two-qubit gates per controlled gate, for accounting

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def controlled_by(self, control: int) -> "GateOp":
        return replace(self, control=control)


@dataclass
class Circuit:
    n: int
    ops: list[GateOp] = field(default_factory=list)

    def append(self, op: GateOp) -> None:
        self.ops.append(op)

    def extend(self, ops) -> None:
        self.ops.extend(ops)

    def __len__(self) -> int:
        return len(self.ops)

    def apply(self, state: np.ndarray, check_unitary: bool = False) -> np.ndarray:
        if state.shape[0] != 2 ** self.n:
            raise ValueError(f"state has {state.shape[0]} amplitudes, circuit expects {2 ** self.n}")
        for op in self.ops:
            if op.control is not None:
                state = apply_controlled_two_qubit(state, op.matrix, op.control, op.sites, self.n)
            elif op.n_sites == 2:
                state = apply_two_qubit(state, op.matrix, op.sites, self.n, check_unitary=check_unitary)
            else:
                state = apply_single_qubit(state, op.matrix, op.sites[0], self.n)
        return state

    def unitary(self) -> np.ndarray:
        """Dense circuit unitary (dense-regime sizes only)."""
        dim = 2 ** self.n
        u = np.eye(dim, dtype=complex)
        for op in self.ops:
            if op.control is not None:
                cu = controlled_matrix(op.matrix)
                u = apply_operator_to_sites(u, cu, (op.control, *op.sites), self.n, side="left")
            elif op.n_sites == 2:
                u = apply_operator_to_sites(u, op.matrix, op.sites, self.n, side="left")
            else:
                u = apply_operator_to_sites(u, op.matrix, op.sites, self.n, side="left")
        return u

    def two_qubit_count(self) -> int:
        return sum(1 for op in self.ops if op.n_sites == 2 and op.control is None)

    def controlled_count(self) -> int:
        return sum(1 for op in self.ops if op.control is not None)


def controlled_matrix(gate: np.ndarray) -> np.ndarray:
    """|0><0| (x) I + |1><1| (x) gate, control as the leading qubit."""
    d = gate.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = gate
    return out
