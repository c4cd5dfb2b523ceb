"""Translationally invariant brickwall and compressed-control ansatz circuits.

A brickwall ansatz is an ordered list of layers; each layer owns one shared
4x4 gate applied across one pairing of one permutation class. The
compressed-control (TICC) variant partitions layers into bulk layers and
control layers: deploying the circuit promotes only control-layer gates to
ancilla-controlled operations, which switches the whole circuit between
forward and backward half-time evolution.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .circuits import Circuit, GateOp
from .hamiltonian import AnticommutingDecomposition, DecompositionPart, Hamiltonian
from .lattice import Lattice
from .pauli import PAULI_MATRICES, PauliString
from .statevector import is_unitary

# warn when transferring gates beyond t_max ~ TMAX_COEFF * N^(1/D)
# (coefficient calibrated on the 1D TFIM g=3 transfer scan)
TMAX_COEFF = 0.28


@dataclass(frozen=True)
class AnsatzLayer:
    gate_id: str
    class_index: int
    pairing_index: int
    is_control: bool = False
    tau: float = 0.0  # initialization time step, kept for provenance


@dataclass
class BrickwallAnsatz:
    lattice: Lattice
    layers: list[AnsatzLayer]
    gates: dict[str, np.ndarray]

    @property
    def n(self) -> int:
        return self.lattice.n_sites

    def pairs(self, layer: AnsatzLayer) -> tuple[tuple[int, int], ...]:
        return self.lattice.classes[layer.class_index].pairings[layer.pairing_index]

    def validate(self, tol: float = 1e-10) -> None:
        for gid, gate in self.gates.items():
            if not is_unitary(gate, tol):
                raise ValueError(f"gate {gid} is not unitary within {tol}")
        for layer in self.layers:
            if layer.gate_id not in self.gates:
                raise ValueError(f"layer references unknown gate {layer.gate_id}")

    def circuit(self, include=None) -> Circuit:
        """Flat uncontrolled circuit; ``include`` filters layer indices."""
        circ = Circuit(self.n)
        for idx, layer in enumerate(self.layers):
            if include is not None and idx not in include:
                continue
            gate = self.gates[layer.gate_id]
            for pair in self.pairs(layer):
                circ.append(GateOp(gate, pair, label=layer.gate_id))
        return circ

    def unitary(self, include=None) -> np.ndarray:
        return self.circuit(include).unitary()

    def with_gates(self, gates: dict[str, np.ndarray]) -> "BrickwallAnsatz":
        return BrickwallAnsatz(self.lattice, list(self.layers), dict(gates))


@dataclass
class TiccAnsatz:
    base: BrickwallAnsatz
    control_layer_ids: tuple[int, ...]
    d: int
    eta: int
    gamma: int
    t: float
    k_words: dict[int, str] = field(default_factory=dict)  # layer idx -> control string word

    @property
    def lattice(self) -> Lattice:
        return self.base.lattice

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def bulk_layer_ids(self) -> tuple[int, ...]:
        controls = set(self.control_layer_ids)
        return tuple(i for i in range(len(self.base.layers)) if i not in controls)

    def full_unitary(self) -> np.ndarray:
        return self.base.unitary()

    def bulk_unitary(self) -> np.ndarray:
        return self.base.unitary(include=set(self.bulk_layer_ids))

    def with_gates(self, gates: dict[str, np.ndarray]) -> "TiccAnsatz":
        return replace(self, base=self.base.with_gates(gates))


def circuit_unitary(ansatz: BrickwallAnsatz | TiccAnsatz) -> np.ndarray:
    """Dense unitary of the full ansatz circuit (dense-regime sizes)."""
    base = ansatz.base if isinstance(ansatz, TiccAnsatz) else ansatz
    return base.unitary()


def _strang_weights(n_layers: int) -> list[float]:
    """Layer time weights (fractions of the block time) for one block.

    Odd layer counts give a merged second-order pattern (1/2r, 1/r, ...,
    1/2r over alternating pairings); even counts give first-order sweeps.
    A single layer carries the whole block time.
    """
    if n_layers == 1:
        return [1.0]
    if n_layers % 2 == 1:
        r = (n_layers - 1) // 2
        return [0.5 / r] + [1.0 / r] * (n_layers - 2) + [0.5 / r]
    r = n_layers // 2
    return [1.0 / r] * n_layers


def _block_gate(part_terms_pairs, field_terms, pair, tau: float, field_weight: float,
                sign: float) -> np.ndarray:
    """exp(-i sign tau (bond block + field_weight * site fields)) on one pair."""
    block = np.zeros((4, 4), dtype=complex)
    for t in part_terms_pairs:
        a, b = t.support
        if set((a, b)) != set(pair):
            continue
        key = pair if pair[0] == a else (pair[1], pair[0])
        op_a, op_b = t.ops[pair[0]], t.ops[pair[1]]
        block += t.coeff * np.kron(PAULI_MATRICES[op_a], PAULI_MATRICES[op_b])
    for t in field_terms:
        (site,) = t.support
        if site not in pair:
            continue
        letter = t.ops[site]
        op = np.kron(PAULI_MATRICES[letter], np.eye(2)) if pair[0] == site \
            else np.kron(np.eye(2), PAULI_MATRICES[letter])
        block += field_weight * t.coeff * op
    return scipy.linalg.expm(-1j * sign * tau * block)


def _shared_block_gate(part: DecompositionPart, lattice: Lattice, pairing_index: int,
                       tau: float, field_weight: float, sign: float) -> np.ndarray:
    """The translationally shared gate of one bulk layer; verified identical across pairs."""
    pairing = lattice.classes[part.class_index].pairings[pairing_index]
    terms = part.bond_terms.get(pairing_index, ())
    gates = [
        _block_gate(terms, part.field_terms, pair, tau, field_weight, sign)
        for pair in pairing
    ]
    for g in gates[1:]:
        if not np.allclose(g, gates[0], atol=1e-12):
            raise ValueError("bulk layer gates are not translationally shared")
    return gates[0]


def _control_gate(word: PauliString, pairing) -> np.ndarray:
    factors = word.two_site_factors(pairing)
    for f in factors[1:]:
        if not np.allclose(f, factors[0], atol=1e-12):
            raise ValueError(f"control string {word.ops} does not factor into one shared gate")
    return factors[0]


def build_ticc_ansatz(decomposition: AnticommutingDecomposition, gamma: int, t: float) -> TiccAnsatz:
    """Compressed-control ansatz with its documented initialization.

    Per permutation class: eta+1 control layers on pairing 0, initialized to
    two-site factors of the flip strings (telescoped products between
    neighboring blocks), interleaved with eta bulk blocks of gamma layers
    each. Bulk layers start from a product-formula splitting of the backward
    half evolution e^{+i(t/2)H_i}, so before optimization the circuit with
    (without) control layers approximates U(t/2) (U(-t/2)) to O(t^2).
    """
    if gamma < 1:
        raise ValueError("gamma must be >= 1")
    lattice = decomposition.hamiltonian.lattice
    big_t = t / 2.0
    layers: list[AnsatzLayer] = []
    gates: dict[str, np.ndarray] = {}
    control_ids: list[int] = []
    k_words: dict[int, str] = {}

    weights = _strang_weights(gamma)
    field_weight = 1.0 if gamma == 1 else 0.5

    for cls in lattice.classes:
        c = cls.class_index
        parts = decomposition.parts_for_class(c)
        eta = len(parts)
        k_strings = [p.k_string for p in parts]
        # control words: K_1, K_2 K_1, ..., K_eta K_{eta-1}, K_eta
        words = [k_strings[0]]
        words += [k_strings[j] * k_strings[j - 1] for j in range(1, eta)]
        words += [k_strings[-1]]

        def add_control(j: int):
            gid = f"c{c}_k{j}"
            gates[gid] = _control_gate(words[j], cls.pairings[0])
            control_ids.append(len(layers))
            k_words[len(layers)] = words[j].ops
            layers.append(AnsatzLayer(gid, c, 0, is_control=True))

        add_control(0)
        for i, part in enumerate(parts):
            for l, w in enumerate(weights):
                pairing_index = 1 if l % 2 == 0 else 0
                tau = w * big_t
                gid = f"c{c}_b{i}_{l}"
                gates[gid] = _shared_block_gate(part, lattice, pairing_index, tau,
                                                field_weight, sign=-1.0)
                layers.append(AnsatzLayer(gid, c, pairing_index, tau=tau))
            add_control(i + 1)

    base = BrickwallAnsatz(lattice, layers, gates)
    base.validate()
    return TiccAnsatz(base, tuple(control_ids), lattice.d,
                      len(decomposition.parts) // lattice.d, gamma, t, k_words)


def build_rqc_brickwall(hamiltonian: Hamiltonian, layers_per_class: int, t: float) -> BrickwallAnsatz:
    """Brickwall ansatz initialized from a product formula for e^{-iHt}.

    Per class, layers alternate the two pairings with merged second-order time
    weights (first-order for even layer counts), fields folded at half weight.
    """
    if layers_per_class < 1:
        raise ValueError("need at least one layer per class")
    lattice = hamiltonian.lattice
    weights = _strang_weights(layers_per_class)
    field_weight = 1.0 if layers_per_class == 1 else 0.5
    field_by_class = {0: list(hamiltonian.field_terms)}
    layers: list[AnsatzLayer] = []
    gates: dict[str, np.ndarray] = {}
    for cls in lattice.classes:
        c = cls.class_index
        fields = field_by_class.get(c, [])
        for l, w in enumerate(weights):
            pairing_index = l % 2
            tau = w * t
            terms = hamiltonian.bond_terms[(c, pairing_index)]
            pairing = cls.pairings[pairing_index]
            shared = [
                _block_gate(terms, fields, pair, tau, field_weight, sign=1.0)
                for pair in pairing
            ]
            for g in shared[1:]:
                if not np.allclose(g, shared[0], atol=1e-12):
                    raise ValueError("layer gates are not translationally shared")
            gid = f"c{c}_l{l}"
            gates[gid] = shared[0]
            layers.append(AnsatzLayer(gid, c, pairing_index, tau=tau))
    ansatz = BrickwallAnsatz(lattice, layers, gates)
    ansatz.validate()
    return ansatz


def deploy_controlled(ticc: TiccAnsatz) -> Circuit:
    """(n+1)-qubit circuit: control-layer gates become ancilla-controlled.

    The ancilla is qubit 0; structurally the dense circuit equals
    |0><0| (x) W(bulk) + |1><1| (x) W(full) to machine precision.
    """
    circ = Circuit(ticc.n + 1)
    controls = set(ticc.control_layer_ids)
    for idx, layer in enumerate(ticc.base.layers):
        gate = ticc.base.gates[layer.gate_id]
        for pair in ticc.base.pairs(layer):
            shifted = (pair[0] + 1, pair[1] + 1)
            circ.append(GateOp(gate, shifted,
                               control=0 if idx in controls else None,
                               label=layer.gate_id))
    return circ


def transfer(ansatz: BrickwallAnsatz | TiccAnsatz, target_lattice: Lattice):
    """Reuse optimized gates layer-by-layer on a larger lattice.

    The target must share the geometry family with source extents not
    exceeding the target's. Warns when the evolution time is beyond the
    calibrated transferability window t_max ~ N^(1/D).
    """
    base = ansatz.base if isinstance(ansatz, TiccAnsatz) else ansatz
    src = base.lattice
    if target_lattice.geometry is not src.geometry:
        raise ValueError(f"geometry mismatch: {src.geometry} -> {target_lattice.geometry}")
    if len(target_lattice.extents) != len(src.extents) or any(
        te < se for te, se in zip(target_lattice.extents, src.extents)
    ):
        raise ValueError("target extents must dominate source extents")
    new_base = BrickwallAnsatz(target_lattice, list(base.layers), dict(base.gates))
    if isinstance(ansatz, TiccAnsatz):
        t = ansatz.t
        dim = len(src.extents)
        t_max = TMAX_COEFF * src.n_sites ** (1.0 / dim)
        if abs(t) > t_max:
            warnings.warn(
                f"t={t} exceeds the calibrated transfer window t_max~{t_max:.3g} "
                f"for a {src.n_sites}-site source ansatz; consider block repetition",
                stacklevel=2,
            )
        return replace(ansatz, base=new_base)
    return new_base


def repeat_blocks(ansatz: TiccAnsatz, repetitions: int) -> TiccAnsatz:
    """Tile the compressed block to reach t' = repetitions * t.

    Approximation error accumulates linearly with the repetition count.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    base = ansatz.base
    layers = []
    control_ids = []
    k_words = {}
    for rep in range(repetitions):
        offset = len(layers)
        for idx, layer in enumerate(base.layers):
            if idx in set(ansatz.control_layer_ids):
                control_ids.append(offset + idx)
                if idx in ansatz.k_words:
                    k_words[offset + idx] = ansatz.k_words[idx]
            layers.append(layer)
    new_base = BrickwallAnsatz(base.lattice, layers, dict(base.gates))
    return TiccAnsatz(new_base, tuple(control_ids), ansatz.d, ansatz.eta,
                      ansatz.gamma, ansatz.t * repetitions, k_words)
