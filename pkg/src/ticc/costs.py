"""Trace-overlap costs and their Euclidean gradients by environment contraction.

A cost is a sum of terms -Re Tr[U_i^dag W_i] where each W_i is the circuit
restricted to a subset of layers. Gradients come from removing one gate
occurrence from the trace network and contracting the rest down to its 4x4
environment; for translationally invariant targets on chains, all
occurrences in a layer share one environment, which collapses the per-layer
work to a single contraction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ansatz import BrickwallAnsatz, TiccAnsatz
from .lattice import Geometry
from .statevector import apply_operator_to_sites


@dataclass(frozen=True)
class LayerSpec:
    pairs: tuple[tuple[int, int], ...]
    slot: int  # index into the gate parameter list


@dataclass(frozen=True)
class CircuitStructure:
    n: int
    layers: tuple[LayerSpec, ...]
    n_slots: int

    def unitary(self, gates: list[np.ndarray], mask=None) -> np.ndarray:
        w = np.eye(2 ** self.n, dtype=complex)
        for idx, layer in enumerate(self.layers):
            if mask is not None and idx not in mask:
                continue
            for pair in layer.pairs:
                w = apply_operator_to_sites(w, gates[layer.slot], pair, self.n, side="left")
        return w


def structure_from_ansatz(ansatz: BrickwallAnsatz | TiccAnsatz):
    """(structure, slot order, initial gates, bulk mask or None)."""
    base = ansatz.base if isinstance(ansatz, TiccAnsatz) else ansatz
    slot_of: dict[str, int] = {}
    layers = []
    for layer in base.layers:
        if layer.gate_id not in slot_of:
            slot_of[layer.gate_id] = len(slot_of)
        layers.append(LayerSpec(base.pairs(layer), slot_of[layer.gate_id]))
    order = [gid for gid, _ in sorted(slot_of.items(), key=lambda kv: kv[1])]
    gates = [np.array(base.gates[gid]) for gid in order]
    structure = CircuitStructure(base.n, tuple(layers), len(slot_of))
    mask = None
    if isinstance(ansatz, TiccAnsatz):
        mask = frozenset(ansatz.bulk_layer_ids)
    return structure, order, gates, mask


@dataclass(frozen=True)
class CostTerm:
    target: np.ndarray            # the U being matched (not daggered)
    mask: frozenset | None = None  # layer indices included; None = all


class TraceCost:
    """f(gates) = sum_terms -Re Tr[target^dag W(included layers)]."""

    def __init__(self, structure: CircuitStructure, terms: list[CostTerm], ti: bool = False):
        self.structure = structure
        self.terms = terms
        self.ti = ti
        self._dim = 2 ** structure.n

    @property
    def minimum(self) -> float:
        return -float(len(self.terms) * self._dim)

    def _term_layers(self, term: CostTerm):
        return [
            (idx, layer) for idx, layer in enumerate(self.structure.layers)
            if term.mask is None or idx in term.mask
        ]

    def value(self, gates: list[np.ndarray]) -> float:
        # W = L_{m-1} ... L_0, so right-multiplying U^dag walks layers last-to-first
        total = 0.0
        for term in self.terms:
            acc = term.target.conj().T
            for _, layer in reversed(self._term_layers(term)):
                acc = self._apply_layer_right(acc, gates[layer.slot], layer.pairs)
            total -= float(np.real(np.trace(acc)))
        return total

    def _apply_layer_right(self, mat, gate, pairs):
        for pair in pairs:
            mat = apply_operator_to_sites(mat, gate, pair, self.structure.n, side="right")
        return mat

    def _apply_layer_left(self, mat, gate, pairs):
        for pair in pairs:
            mat = apply_operator_to_sites(mat, gate, pair, self.structure.n, side="left")
        return mat

    def _env(self, suffix: np.ndarray, prefix: np.ndarray, pair) -> np.ndarray:
        """4x4 environment of one gate occurrence.

        C = Tr[suffix * emb(V) * prefix]; returns E with dC = sum E[r,c] dV[r,c].
        """
        n = self.structure.n
        rest_axes = [ax for ax in range(n) if ax not in pair]
        # prefix rows (z_pair, rest); suffix columns (y_pair, rest)
        p = prefix.reshape([2] * n + [self._dim])
        p = np.moveaxis(p, [pair[0], pair[1]], [0, 1]).reshape(4, self._dim // 4, self._dim)
        s = suffix.reshape([self._dim] + [2] * n)
        s = np.moveaxis(s, [1 + pair[0], 1 + pair[1]], [1, 2]).reshape(self._dim, 4, self._dim // 4)
        return np.einsum("zrx,xyr->yz", p, s, optimize=True)

    def euclidean_gradients(self, gates: list[np.ndarray]) -> list[np.ndarray]:
        """Per-slot G with df = Re Tr[G^dag dV] summed over all occurrences."""
        n = self.structure.n
        grads = [np.zeros((4, 4), dtype=complex) for _ in range(self.structure.n_slots)]
        use_ti = self.ti
        for term in self.terms:
            term_layers = self._term_layers(term)
            m = len(term_layers)
            # suffix sweep: A_k = U^dag L_{m-1} ... L_{k+1}
            suffixes = [None] * m
            acc = term.target.conj().T
            for pos in range(m - 1, -1, -1):
                suffixes[pos] = acc
                _, layer = term_layers[pos]
                acc = self._apply_layer_right(acc, gates[layer.slot], layer.pairs)
            prefix = np.eye(self._dim, dtype=complex)
            for pos in range(m):
                _, layer = term_layers[pos]
                gate = gates[layer.slot]
                if use_ti:
                    others = suffixes[pos]
                    for p in layer.pairs[1:]:
                        others = apply_operator_to_sites(others, gate, p, n, side="right")
                    env = self._env(others, prefix, layer.pairs[0])
                    grads[layer.slot] += -np.conj(env) * len(layer.pairs)
                else:
                    for q, pair in enumerate(layer.pairs):
                        others = suffixes[pos]
                        for p_idx, p in enumerate(layer.pairs):
                            if p_idx != q:
                                others = apply_operator_to_sites(others, gate, p, n, side="right")
                        env = self._env(others, prefix, pair)
                        grads[layer.slot] += -np.conj(env)
                prefix = self._apply_layer_left(prefix, gate, layer.pairs)
        return grads


def _two_site_translation_perm(n: int) -> np.ndarray:
    idx = np.arange(2 ** n)
    # roll bit string by two positions (site 0 most significant)
    rolled = ((idx << 2) & (2 ** n - 1)) | (idx >> (n - 2))
    return rolled


def _target_is_chain_ti(target: np.ndarray, n: int) -> bool:
    perm = _two_site_translation_perm(n)
    conjugated = target[np.ix_(perm, perm)]
    return bool(np.allclose(conjugated, target, atol=1e-10))


def _auto_ti(ansatz, targets) -> bool:
    """The per-layer shared-environment shortcut is exact only on chains with
    translation-invariant targets; verify both before enabling it."""
    lattice = ansatz.lattice
    if lattice.geometry is not Geometry.CHAIN:
        return False
    n = lattice.n_sites
    return all(_target_is_chain_ti(t, n) for t in targets)


def rqc_cost(ansatz: BrickwallAnsatz, u_target: np.ndarray, ti: bool | None = None) -> tuple[TraceCost, list, list]:
    """-Re Tr[U^dag W(V)] over the full brickwall.

    On chains every two-site translation preserves each pairing, so the
    per-layer environments are shared and the shortcut is exact; it is
    enabled automatically when the target commutes with that translation.
    """
    structure, order, gates, _ = structure_from_ansatz(ansatz)
    if ti is None:
        ti = _auto_ti(ansatz, [u_target])
    cost = TraceCost(structure, [CostTerm(u_target)], ti=ti)
    return cost, order, gates


def ticc_cost(ticc: TiccAnsatz, u_forward: np.ndarray, u_backward: np.ndarray,
              ti: bool | None = None) -> tuple[TraceCost, list, list]:
    """-Re Tr[U(t/2)^dag W(V)] - Re Tr[U(-t/2)^dag W(bulk)]."""
    structure, order, gates, bulk_mask = structure_from_ansatz(ticc)
    if ti is None:
        ti = _auto_ti(ticc, [u_forward, u_backward])
    cost = TraceCost(structure, [CostTerm(u_forward), CostTerm(u_backward, bulk_mask)], ti=ti)
    return cost, order, gates
