import numpy as np
import pytest

from ticc.circuits import Circuit, GateOp
from ticc.noise import NoiseMode, NoiseModel, damping_factor, readout_probability
from ticc.pauli import PauliString
from ticc.statevector import haar_random_state, zzphase


def test_noise_off_lambda_one():
    circ = Circuit(2)
    circ.append(GateOp(zzphase(0.5), (0, 1), angle=0.5))
    assert damping_factor(circ, NoiseModel()) == 1.0


def test_zzphase_fault_formula():
    noise = NoiseModel(p2=1e-3, mode=NoiseMode.GLOBAL_DEPOLARIZING)
    assert noise.zzphase_fault(np.pi) == pytest.approx((1.52 + 0.24) * 1e-3)
    circ = Circuit(2)
    circ.append(GateOp(zzphase(np.pi), (0, 1), angle=np.pi))
    assert damping_factor(circ, noise) == pytest.approx(1 - 1.76e-3)


def test_generic_gate_fault_default():
    # default: 3 KAK layers at the effective quarter-pi angle (0.62 p2 each)
    noise = NoiseModel(p2=1e-3, mode=NoiseMode.GLOBAL_DEPOLARIZING)
    assert noise.generic_fault() == pytest.approx(3 * 0.62e-3)


def test_probability_validation():
    with pytest.raises(ValueError):
        NoiseModel(p1=1.5)
    with pytest.raises(ValueError):
        NoiseModel(meas_flip0=-0.1)


def test_readout_flips():
    noise = NoiseModel(meas_flip0=0.01, meas_flip1=0.02, mode=NoiseMode.GLOBAL_DEPOLARIZING)
    assert readout_probability(1.0, noise) == pytest.approx(0.99)
    assert readout_probability(0.0, noise) == pytest.approx(0.02)


def test_damping_matches_monte_carlo_pauli_channel():
    """(1-p)^m damping vs trajectory simulation of the twirled channel.

    Each noisy gate applies a uniformly random non-identity two-qubit Pauli
    with probability p; the surviving coefficient of a support-covering
    observable matches the analytic product within 2%.
    """
    rng = np.random.default_rng(42)
    n, m, p = 2, 100, 1e-3
    noise = NoiseModel(p2=p / (3 * 0.62), mode=NoiseMode.GLOBAL_DEPOLARIZING)
    circ = Circuit(n)
    for _ in range(m):
        circ.append(GateOp(np.eye(4, dtype=complex), (0, 1)))
    lam = damping_factor(circ, noise)
    assert lam == pytest.approx((1 - p) ** m, rel=1e-9)

    observable = PauliString("ZZ").dense()
    paulis = [
        (PauliString(a + b)).dense()
        for a in "IXYZ" for b in "IXYZ" if a + b != "II"
    ]
    psi0 = haar_random_state(n, rng)
    exact = np.real(np.vdot(psi0, observable @ psi0))
    trajectories = 60000
    acc = 0.0
    hits = rng.random((trajectories, m)) < p
    choices = rng.integers(0, 15, size=(trajectories, m))
    for traj in range(trajectories):
        sign = 1.0
        for gate_idx in np.nonzero(hits[traj])[0]:
            q = paulis[choices[traj, gate_idx]]
            # inserting Pauli Q flips the sign of <ZZ> iff they anticommute
            sign *= 1.0 if np.allclose(q @ observable, observable @ q) else -1.0
        acc += sign * exact
    mc = acc / trajectories
    assert mc == pytest.approx(lam * exact, rel=0.02)


def test_controlled_gate_counts_gamma_d():
    noise = NoiseModel(p2=1e-3, mode=NoiseMode.GLOBAL_DEPOLARIZING)
    circ = Circuit(3)
    circ.append(GateOp(np.eye(4, dtype=complex), (1, 2), control=0, gamma_d=5))
    expected = (1 - noise.generic_fault()) ** 5
    assert damping_factor(circ, noise) == pytest.approx(expected)
    circ2 = Circuit(3)
    circ2.append(GateOp(np.eye(4, dtype=complex), (1, 2), control=0))
    assert damping_factor(circ2, noise) == pytest.approx((1 - noise.generic_fault()) ** 4)
