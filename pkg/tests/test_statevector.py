import numpy as np
import pytest

from ticc.statevector import (
    SWAP_GATE,
    apply_controlled_two_qubit,
    apply_single_qubit,
    apply_two_qubit,
    basis_state,
    embed_two_site,
    haar_random_state,
    zzphase,
)


def random_unitary(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_identity_leaves_state():
    rng = np.random.default_rng(0)
    psi = haar_random_state(3, rng)
    out = apply_two_qubit(psi, np.eye(4, dtype=complex), (0, 2), 3)
    assert np.allclose(out, psi)


def test_swap_on_01():
    # |01> -> |10> on two qubits (site 0 most significant)
    psi = basis_state(2, 0b01)
    out = apply_two_qubit(psi, SWAP_GATE, (0, 1), 2)
    assert np.allclose(out, basis_state(2, 0b10))


def test_random_gate_matches_dense_embedding():
    rng = np.random.default_rng(1)
    gate = random_unitary(4, rng)
    psi = haar_random_state(3, rng)
    for sites in [(0, 1), (1, 2), (0, 2), (2, 0), (2, 1)]:
        out = apply_two_qubit(psi, gate, sites, 3)
        dense = embed_two_site(gate, sites, 3)
        assert np.allclose(out, dense @ psi, atol=1e-12)
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)


def test_rejects_bad_inputs():
    psi = basis_state(2)
    with pytest.raises(ValueError):
        apply_two_qubit(psi, np.eye(4) * 1.5, (0, 1), 2)  # not unitary
    with pytest.raises(ValueError):
        apply_two_qubit(psi, np.eye(4, dtype=complex), (0, 3), 2)  # out of range
    with pytest.raises(ValueError):
        apply_two_qubit(psi, np.eye(4, dtype=complex), (1, 1), 2)


def test_controlled_application_matches_block_structure():
    rng = np.random.default_rng(2)
    gate = random_unitary(4, rng)
    psi = haar_random_state(3, rng)
    out = apply_controlled_two_qubit(psi, gate, 0, (1, 2), 3)
    dense = np.block([
        [np.eye(4), np.zeros((4, 4))],
        [np.zeros((4, 4)), gate],
    ])
    assert np.allclose(out, dense @ psi, atol=1e-12)
    # control elsewhere
    out2 = apply_controlled_two_qubit(psi, gate, 2, (0, 1), 3)
    full = embed_two_site(gate, (0, 1), 3)
    proj0 = np.kron(np.eye(4), np.diag([1.0, 0.0]))
    proj1 = np.kron(np.eye(4), np.diag([0.0, 1.0]))
    assert np.allclose(out2, (proj0 + full @ proj1) @ psi, atol=1e-12)


def test_norm_preservation_many_gates():
    rng = np.random.default_rng(3)
    psi = haar_random_state(6, rng)
    for _ in range(2000):
        gate = random_unitary(4, rng)
        i, j = rng.choice(6, size=2, replace=False)
        psi = apply_two_qubit(psi, gate, (int(i), int(j)), 6, check_unitary=False)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-10


def test_single_qubit_application():
    rng = np.random.default_rng(4)
    gate = random_unitary(2, rng)
    psi = haar_random_state(3, rng)
    out = apply_single_qubit(psi, gate, 1, 3)
    dense = np.kron(np.kron(np.eye(2), gate), np.eye(2))
    assert np.allclose(out, dense @ psi)


def test_zzphase_definition():
    theta = 0.37
    zz = np.kron(np.diag([1, -1]), np.diag([1, -1])).astype(complex)
    import scipy.linalg

    expected = scipy.linalg.expm(-1j * np.pi * theta / 2 * zz)
    assert np.allclose(zzphase(theta), expected)
