"""Reference time evolution and fidelity metrics.

Dense exponentials (eigendecomposition) below the dense limit; a Lanczos
Krylov propagator with adaptive subspace size and residual control above it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .hamiltonian import Hamiltonian
from .statevector import haar_random_state

DENSE_QUBIT_LIMIT = 12
VECTOR_QUBIT_LIMIT = 22
KRYLOV_TOL = 1e-10
_KRYLOV_MAX_DIM = 48


def exact_unitary(hamiltonian: Hamiltonian, t: float) -> np.ndarray:
    """e^{-iHt} via Hermitian eigendecomposition; dense regime only."""
    if hamiltonian.n > DENSE_QUBIT_LIMIT:
        raise ValueError(
            f"dense exponentiation limited to {DENSE_QUBIT_LIMIT} qubits; use exact_evolve"
        )
    energies, vectors = np.linalg.eigh(hamiltonian.dense())
    return (vectors * np.exp(-1j * energies * t)) @ vectors.conj().T


def _lanczos_step(hamiltonian: Hamiltonian, state: np.ndarray, t: float, tol: float) -> np.ndarray:
    """Single Krylov propagation e^{-iHt} @ state with a posteriori residual check."""
    norm0 = np.linalg.norm(state)
    if norm0 == 0:
        return state
    dim = state.shape[0]
    v = state / norm0
    basis = [v]
    alphas: list[float] = []
    betas: list[float] = []
    w = hamiltonian.matvec(v)
    for m in range(1, _KRYLOV_MAX_DIM + 1):
        alpha = float(np.real(np.vdot(basis[-1], w)))
        alphas.append(alpha)
        w = w - alpha * basis[-1]
        if len(basis) > 1:
            w = w - betas[-1] * basis[-2]
        # full reorthogonalization keeps the residual estimate honest
        for b in basis:
            w = w - np.vdot(b, w) * b
        beta = float(np.linalg.norm(w))
        tri = np.diag(alphas).astype(complex)
        if betas:
            off = np.array(betas)
            tri += np.diag(off, 1) + np.diag(off, -1)
        small = scipy.linalg.expm(-1j * t * tri)[:, 0]
        residual = abs(beta * t * small[-1])
        if residual <= tol or beta < 1e-14 or m == min(_KRYLOV_MAX_DIM, dim):
            out = np.zeros_like(state)
            for coeff, b in zip(small, basis):
                out += coeff * b
            return norm0 * out
        betas.append(beta)
        basis.append(w / beta)
        w = hamiltonian.matvec(basis[-1])
    raise RuntimeError("Krylov propagation failed to converge")  # pragma: no cover


def exact_evolve(hamiltonian: Hamiltonian, t: float, state: np.ndarray, tol: float = KRYLOV_TOL) -> np.ndarray:
    """e^{-iHt} @ state, matrix-free; valid up to the vector qubit limit."""
    if hamiltonian.n > VECTOR_QUBIT_LIMIT:
        raise ValueError(f"statevector evolution limited to {VECTOR_QUBIT_LIMIT} qubits")
    if t == 0:
        return state.copy()
    # keep ||H|| * dt small enough that the Krylov dimension cap suffices
    steps = max(1, int(np.ceil(hamiltonian.norm_bound * abs(t) / 6.0)))
    dt = t / steps
    out = state
    for _ in range(steps):
        out = _lanczos_step(hamiltonian, out, dt, tol / steps)
    return out


def evolve_two_branch(hamiltonian: Hamiltonian, t_anc0: float, t_anc1: float, state: np.ndarray) -> np.ndarray:
    """Apply |0><0| (x) e^{-iH t_anc0} + |1><1| (x) e^{-iH t_anc1}.

    The ancilla is the leading qubit of the (n+1)-qubit state.
    """
    half = state.shape[0] // 2
    out = np.empty_like(state)
    out[:half] = exact_evolve(hamiltonian, t_anc0, state[:half])
    out[half:] = exact_evolve(hamiltonian, t_anc1, state[half:])
    return out


@dataclass(frozen=True)
class InfidelityResult:
    mean: float
    std_of_mean: float
    samples: tuple[float, ...]
    n_samples: int
    seed: int
    state_distribution: str = "haar"

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_of_mean": self.std_of_mean,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "state_distribution": self.state_distribution,
        }


def evolution_infidelity(circuit, hamiltonian: Hamiltonian, t: float,
                         n_samples: int = 20, seed: int = 0) -> InfidelityResult:
    """Mean 1 - |<psi_exact|psi_circuit>|^2 over Haar-random initial states.

    ``circuit`` is anything with ``n`` and ``apply`` (or a dense unitary).
    If the circuit acts on one qubit more than the Hamiltonian, it is treated
    as a controlled-evolution encoding and compared against the two-branch
    target e^{+iHt/2} / e^{-iHt/2} selected by the leading ancilla qubit.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if isinstance(circuit, np.ndarray):
        n_circ = int(np.round(np.log2(circuit.shape[0])))
        apply_fn = lambda psi: circuit @ psi
    else:
        n_circ = circuit.n
        apply_fn = circuit.apply

    if n_circ == hamiltonian.n:
        exact_fn = lambda psi: exact_evolve(hamiltonian, t, psi)
    elif n_circ == hamiltonian.n + 1:
        exact_fn = lambda psi: evolve_two_branch(hamiltonian, -t / 2, t / 2, psi)
    else:
        raise ValueError(
            f"circuit on {n_circ} qubits does not match Hamiltonian on {hamiltonian.n} sites"
        )

    seeds = np.random.SeedSequence(seed).spawn(n_samples)
    values = []
    for s in seeds:
        rng = np.random.default_rng(s)
        psi0 = haar_random_state(n_circ, rng)
        overlap = np.vdot(exact_fn(psi0), apply_fn(psi0))
        values.append(float(1.0 - abs(overlap) ** 2))
    values_arr = np.array(values)
    std_of_mean = float(values_arr.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return InfidelityResult(float(values_arr.mean()), std_of_mean, tuple(values), n_samples, seed)


def ground_state(hamiltonian: Hamiltonian) -> tuple[float, np.ndarray]:
    """Lowest eigenpair: dense below the dense limit, Lanczos (ARPACK) above."""
    n = hamiltonian.n
    if n <= 10:
        energies, vectors = np.linalg.eigh(hamiltonian.dense())
        return float(energies[0]), vectors[:, 0]
    op = scipy.sparse.linalg.LinearOperator(
        (2 ** n, 2 ** n), matvec=hamiltonian.matvec, dtype=complex
    )
    energies, vectors = scipy.sparse.linalg.eigsh(op, k=1, which="SA")
    vec = vectors[:, 0]
    return float(energies[0]), vec / np.linalg.norm(vec)
