"""Product-formula circuits and the controlled Pauli-string insertion.

Bond terms are grouped per (class, pairing) so every factor is one parallel
layer of two-qubit gates; on-site fields are folded symmetrically (half
weight per adjacent pairing layer) so no single-qubit layers are needed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .circuits import Circuit, GateOp
from .hamiltonian import AnticommutingDecomposition, Hamiltonian
from .pauli import PAULI_MATRICES

_SUZUKI_A = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
_ZZ_DIAG = np.array([1.0, -1.0, -1.0, 1.0])


@dataclass(frozen=True)
class TrotterPlan:
    order: int = 2
    steps: int = 1
    dt: float | None = None  # optional basis step; must tile t exactly

    def __post_init__(self):
        if self.order not in (1, 2, 4):
            raise ValueError("supported splitting orders: 1, 2, 4")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")

    def resolve_steps(self, t: float) -> int:
        if self.dt is None:
            return self.steps
        steps = int(round(abs(t) / self.dt)) if t != 0 else self.steps
        if abs(steps * self.dt - abs(t)) > 1e-12:
            raise ValueError(f"dt={self.dt} does not tile t={t}")
        return max(1, steps)


@dataclass(frozen=True)
class _Group:
    """One exponentiable layer: parallel pairs sharing a Hermitian block."""

    pairs: tuple[tuple[int, int], ...]
    blocks: tuple[np.ndarray, ...]
    label: str
    part_key: tuple[int, int] | None = None  # (class, part) for insertion bookkeeping


def _groups_from_hamiltonian(h: Hamiltonian) -> list[_Group]:
    keys = [(c.class_index, p) for c in h.lattice.classes for p in range(len(c.pairings))]
    return [
        _Group(tuple(pairs), tuple(blocks), f"c{key[0]}p{key[1]}")
        for (pairs, blocks), key in zip(h.two_site_groups(), keys)
    ]


def _groups_from_decomposition(dec: AnticommutingDecomposition) -> list[_Group]:
    groups = []
    lattice = dec.hamiltonian.lattice
    for part in dec.parts:
        cls = lattice.classes[part.class_index]
        for p_idx, pairing in enumerate(cls.pairings):
            per_pair = {tuple(p): np.zeros((4, 4), complex) for p in pairing}
            for t in part.bond_terms.get(p_idx, ()):
                a, b = t.support
                key = (a, b) if (a, b) in per_pair else (b, a)
                per_pair[key] = per_pair[key] + t.coeff * np.kron(
                    PAULI_MATRICES[t.ops[key[0]]], PAULI_MATRICES[t.ops[key[1]]]
                )
            for t in part.field_terms:
                (site,) = t.support
                letter = t.ops[site]
                for key in per_pair:
                    if site in key:
                        op = np.kron(PAULI_MATRICES[letter], np.eye(2)) if key[0] == site \
                            else np.kron(np.eye(2), PAULI_MATRICES[letter])
                        per_pair[key] = per_pair[key] + 0.5 * t.coeff * op
            groups.append(_Group(
                tuple(per_pair), tuple(per_pair.values()),
                f"c{part.class_index}i{part.part_index}p{p_idx}",
                part_key=(part.class_index, part.part_index),
            ))
    return groups


def _exp_ops(group: _Group, tau: float, sign: float) -> list[GateOp]:
    """Gate layer for exp(-i * sign * tau * block) on every pair of the group."""
    ops = []
    for pair, block in zip(group.pairs, group.blocks):
        gate = scipy.linalg.expm(-1j * sign * tau * block)
        angle = None
        diag = np.real(np.diagonal(block))
        if np.allclose(block, np.diag(diag * (1 + 0j))) and np.allclose(diag, diag[0] * _ZZ_DIAG):
            # pure ZZ rotation: exp(-i pi Theta/2 ZZ) with Theta = 2 tau c / pi
            angle = 2.0 * sign * tau * float(diag[0]) / np.pi
        ops.append(GateOp(gate, pair, label=f"trotter:{group.label}", angle=angle))
    return ops


def _composition(groups: list[_Group], tau: float, order: int) -> list[tuple[_Group, float]]:
    """Sequence of (group, weight) factors for one step of the formula."""
    if order == 1:
        return [(g, tau) for g in groups]
    if order == 2:
        if len(groups) == 1:
            return [(groups[0], tau)]
        head = [(g, tau / 2) for g in groups[:-1]]
        return head + [(groups[-1], tau)] + head[::-1]
    # order 4: Suzuki's recursive symmetric construction
    a = _SUZUKI_A
    inner = []
    for w in (a, a, 1 - 4 * a, a, a):
        inner.extend(_composition(groups, w * tau, 2))
    return inner


def trotter_circuit(source: Hamiltonian | AnticommutingDecomposition, t: float,
                    plan: TrotterPlan, sign: float = 1.0) -> Circuit:
    """Product-formula circuit approximating e^{-iHt} (sign=+1).

    ``sign=-1`` builds the backward approximant e^{+iHt}. Grouping follows
    the (class, pairing) structure of the source; an anticommuting
    decomposition additionally splits layers per sub-Hamiltonian so the
    controlled insertion can wrap each one.
    """
    if isinstance(source, AnticommutingDecomposition):
        groups = _groups_from_decomposition(source)
        n = source.hamiltonian.n
    else:
        groups = _groups_from_hamiltonian(source)
        n = source.n
    steps = plan.resolve_steps(t)
    circuit = Circuit(n)
    if t == 0:
        return circuit
    tau = t / steps
    factors = _composition(groups, tau, plan.order)
    for _ in range(steps):
        for group, weight in factors:
            circuit.extend(_exp_ops(group, weight, sign))
    return circuit


def controlled_trotter_insertion(decomposition: AnticommutingDecomposition, t: float,
                                 plan: TrotterPlan) -> Circuit:
    """Controlled-evolution circuit on n+1 qubits via Pauli-string insertion.

    The uncontrolled layers implement the backward half-evolution e^{+iHt/2};
    controlled K_i layers before and after each sub-Hamiltonian block flip the
    ancilla-1 branch to the forward half-evolution, realizing
    |0><0| (x) e^{+iHt/2} + |1><1| (x) e^{-iHt/2} up to Trotter error.
    """
    n = decomposition.hamiltonian.n
    lattice = decomposition.hamiltonian.lattice
    groups = _groups_from_decomposition(decomposition)
    steps = plan.resolve_steps(t)
    circuit = Circuit(n + 1)
    if t == 0:
        return circuit
    tau = (t / 2) / steps

    k_layers = {}
    for part in decomposition.parts:
        pairing = lattice.classes[part.class_index].pairings[0]
        shifted = tuple((a + 1, b + 1) for a, b in pairing)
        factors = part.k_string.two_site_factors(pairing)
        k_layers[(part.class_index, part.part_index)] = (shifted, factors)

    def insertion(part_key) -> list[GateOp]:
        shifted, factors = k_layers[part_key]
        return [
            GateOp(f, pair, control=0, label=f"k:{part_key[0]}.{part_key[1]}")
            for pair, f in zip(shifted, factors)
        ]

    factors = _composition(groups, tau, plan.order)
    # wrap each contiguous run of one sub-Hamiltonian's layers in C[K] insertions
    runs: list[tuple[tuple[int, int], list[tuple[_Group, float]]]] = []
    for group, weight in factors:
        if runs and runs[-1][0] == group.part_key:
            runs[-1][1].append((group, weight))
        else:
            runs.append((group.part_key, [(group, weight)]))
    for _ in range(steps):
        for part_key, run in runs:
            circuit.extend(insertion(part_key))
            for group, weight in run:
                for op in _exp_ops(group, weight, -1.0):
                    circuit.append(GateOp(op.matrix, tuple(s + 1 for s in op.sites),
                                          label=op.label, angle=op.angle))
            circuit.extend(insertion(part_key))
    return circuit
