"""Statevector kernels: gate application, embeddings, random states.

Site 0 is the most significant bit throughout, matching Kronecker order:
state index = sum_k bit_k * 2^(n-1-k).
"""
from __future__ import annotations

import numpy as np

UNITARITY_TOL = 1e-10
NORM_TOL = 1e-10


def basis_state(n: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[index] = 1.0
    return psi


def haar_random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return psi / np.linalg.norm(psi)


def is_unitary(gate: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    d = gate.shape[0]
    return bool(np.linalg.norm(gate.conj().T @ gate - np.eye(d)) <= tol * max(1.0, d))


def _apply_axes(psi: np.ndarray, gate: np.ndarray, axes: tuple[int, ...], n_axes_total: int) -> np.ndarray:
    """Apply a 2^k x 2^k operator to the given tensor axes of a [2]*m array."""
    k = len(axes)
    g = gate.reshape([2] * (2 * k))
    out = np.tensordot(g, psi, axes=[list(range(k, 2 * k)), list(axes)])
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_two_qubit(state: np.ndarray, gate: np.ndarray, sites: tuple[int, int], n: int,
                    check_unitary: bool = True) -> np.ndarray:
    """Apply a 4x4 unitary on qubits (i, j) of an n-qubit statevector."""
    i, j = sites
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid sites {sites} for n={n}")
    if check_unitary and not is_unitary(gate):
        raise ValueError("gate is not unitary within tolerance")
    psi = state.reshape([2] * n)
    return _apply_axes(psi, gate, (i, j), n).reshape(-1)


def apply_single_qubit(state: np.ndarray, gate: np.ndarray, site: int, n: int) -> np.ndarray:
    psi = state.reshape([2] * n)
    return _apply_axes(psi, gate, (site,), n).reshape(-1)


def apply_controlled_two_qubit(state: np.ndarray, gate: np.ndarray, control: int,
                               sites: tuple[int, int], n: int) -> np.ndarray:
    """Apply |0><0| (x) I + |1><1| (x) gate with the given control qubit."""
    i, j = sites
    if control in (i, j):
        raise ValueError("control overlaps target sites")
    psi = state.reshape([2] * n).copy()
    sel = [slice(None)] * n
    sel[control] = 1
    sel = tuple(sel)
    branch = psi[sel]
    # target axes shift down by one when they sit above the removed control axis
    ti = i - (1 if i > control else 0)
    tj = j - (1 if j > control else 0)
    psi[sel] = _apply_axes(branch, gate, (ti, tj), n - 1)
    return psi.reshape(-1)


def apply_operator_to_sites(matrix: np.ndarray, op: np.ndarray, sites: tuple[int, ...], n: int,
                            side: str = "left") -> np.ndarray:
    """Multiply a 2^n x 2^n matrix by an embedded k-site operator.

    side="left" computes embed(op) @ matrix, side="right" computes
    matrix @ embed(op).
    """
    k = len(sites)
    if side == "left":
        m = matrix.reshape([2] * n + [2 ** n])
        out = _apply_axes(m, op, sites, n + 1)
    else:
        m = matrix.reshape([2 ** n] + [2] * n)
        axes = tuple(1 + s for s in sites)
        out = _apply_axes(m, op.T, axes, n + 1)
    return out.reshape(2 ** n, 2 ** n)


def apply_two_site_operator(state: np.ndarray, op: np.ndarray, sites: tuple[int, int], n: int) -> np.ndarray:
    """Apply a (not necessarily unitary) two-site operator; used for H @ psi."""
    psi = state.reshape([2] * n)
    return _apply_axes(psi, op, sites, n).reshape(-1)


def embed_two_site(op: np.ndarray, sites: tuple[int, int], n: int) -> np.ndarray:
    """Dense 2^n x 2^n embedding of a 4x4 operator on the given sites."""
    return apply_operator_to_sites(np.eye(2 ** n, dtype=complex), op, sites, n, side="left")


def renormalize(state: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state norm drifted to {norm}")
    return state / norm


# common gates
H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S_GATE = np.diag([1, 1j]).astype(complex)
SDG_GATE = np.diag([1, -1j]).astype(complex)
SWAP_GATE = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def zzphase(theta: float) -> np.ndarray:
    """Hardware-native two-qubit rotation exp(-i pi theta / 2 * Z(x)Z)."""
    phase = np.exp(-1j * np.pi * theta / 2 * np.array([1, -1, -1, 1]))
    return np.diag(phase).astype(complex)
