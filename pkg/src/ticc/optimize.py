"""High-level optimization drivers for brickwall and compressed-control circuits."""
from __future__ import annotations

import numpy as np

from .ansatz import BrickwallAnsatz, TiccAnsatz, build_rqc_brickwall, build_ticc_ansatz
from .costs import rqc_cost, structure_from_ansatz, ticc_cost
from .evolution import exact_unitary
from .hamiltonian import AnticommutingDecomposition, Hamiltonian
from .rtr import CostReport, RtrConfig, riemannian_gradient, rtr_minimize


def _spectral(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2))


def optimize_rqc(hamiltonian: Hamiltonian, t: float, layers_per_class: int,
                 config: RtrConfig | None = None,
                 ansatz: BrickwallAnsatz | None = None) -> tuple[BrickwallAnsatz, CostReport]:
    """Minimize -Re Tr[U(t)^dag W(V)] from the product-formula initialization."""
    if ansatz is None:
        ansatz = build_rqc_brickwall(hamiltonian, layers_per_class, t)
    u_target = exact_unitary(hamiltonian, t)
    cost, order, gates = rqc_cost(ansatz, u_target)
    structure = cost.structure

    def eps_fn(gs):
        return _spectral(u_target - structure.unitary(gs))

    best, report = rtr_minimize(
        cost.value, lambda g: riemannian_gradient(cost, g), None, gates,
        config, epsilon_fn=eps_fn,
    )
    return ansatz.with_gates(dict(zip(order, best))), report


def optimize_ticc(decomposition: AnticommutingDecomposition, gamma: float, t: float,
                  config: RtrConfig | None = None,
                  ticc: TiccAnsatz | None = None) -> tuple[TiccAnsatz, CostReport]:
    """Minimize the two-branch compressed-control cost from its Trotter start."""
    if ticc is None:
        ticc = build_ticc_ansatz(decomposition, int(gamma), t)
    h = decomposition.hamiltonian
    u_forward = exact_unitary(h, t / 2)
    u_backward = exact_unitary(h, -t / 2)
    cost, order, gates = ticc_cost(ticc, u_forward, u_backward)
    structure = cost.structure
    bulk_mask = cost.terms[1].mask

    def eps_fn(gs):
        return {
            "full": _spectral(u_forward - structure.unitary(gs)),
            "bulk": _spectral(u_backward - structure.unitary(gs, mask=bulk_mask)),
        }

    best, report = rtr_minimize(
        cost.value, lambda g: riemannian_gradient(cost, g), None, gates,
        config, epsilon_fn=eps_fn,
    )
    return ticc.with_gates(dict(zip(order, best))), report
