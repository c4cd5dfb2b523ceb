import numpy as np
import pytest

from ticc.ansatz import build_ticc_ansatz, deploy_controlled
from ticc.evolution import evolve_two_branch, exact_unitary, ground_state
from ticc.hamiltonian import build_tfim, decompose_anticommuting
from ticc.lattice import build_lattice
from ticc.noise import NoiseMode, NoiseModel
from ticc.qpe import (
    CircuitPhaseProvider,
    ExactPhaseOracle,
    PhaseSample,
    hadamard_test,
    iterative_qpe,
    measure_phase,
    phase_curve_fit,
    prepare_initial_state,
    select_candidate,
    stage_time_grid,
)
from ticc.trotter import TrotterPlan, controlled_trotter_insertion


class ExactControlledCircuit:
    """Two-branch evolution wrapped in the Circuit interface (no gates)."""

    def __init__(self, hamiltonian, t):
        self.hamiltonian = hamiltonian
        self.t = t
        self.n = hamiltonian.n + 1
        self.ops = []

    def apply(self, state):
        return evolve_two_branch(self.hamiltonian, -self.t / 2, self.t / 2, state)


@pytest.fixture(scope="module")
def chain6():
    lat = build_lattice("chain", [6])
    h = build_tfim(lat, 1.5)
    e0, gs = ground_state(h)
    return h, e0, gs


def test_hadamard_test_eigenstate_phases(chain6):
    h, e0, gs = chain6
    t = 0.125
    circ = ExactControlledCircuit(h, t)
    re, _ = hadamard_test(circ, gs, "re", shots=None)
    im, _ = hadamard_test(circ, gs, "im", shots=None)
    assert re == pytest.approx(np.cos(e0 * t), abs=1e-9)
    assert im == pytest.approx(-np.sin(e0 * t), abs=1e-9)


def test_hadamard_test_t0_unit(chain6):
    h, _, gs = chain6
    circ = ExactControlledCircuit(h, 0.0)
    re, _ = hadamard_test(circ, gs, "re", shots=None)
    assert re == pytest.approx(1.0, abs=1e-10)


def test_hadamard_test_matches_two_branch_overlap(chain6):
    # infinite-shot expectation equals <psi| W_bulk^dag W_full |psi> exactly
    h, _, _ = chain6
    lat4 = build_lattice("chain", [4])
    h4 = build_tfim(lat4, 1.5)
    dec = decompose_anticommuting(h4)
    ticc = build_ticc_ansatz(dec, gamma=2, t=0.125)
    circ = deploy_controlled(ticc)
    rng = np.random.default_rng(0)
    from ticc.statevector import haar_random_state

    psi = haar_random_state(4, rng)
    re, _ = hadamard_test(circ, psi, "re", shots=None)
    im, _ = hadamard_test(circ, psi, "im", shots=None)
    overlap = np.vdot(ticc.bulk_unitary() @ psi, ticc.full_unitary() @ psi)
    assert re == pytest.approx(np.real(overlap), abs=1e-10)
    assert im == pytest.approx(np.imag(overlap), abs=1e-10)


def test_hadamard_test_shot_statistics(chain6):
    h, e0, gs = chain6
    t = 0.125
    circ = ExactControlledCircuit(h, t)
    hits = 0
    trials = 120
    for s in range(trials):
        est, sigma = hadamard_test(circ, gs, "re", shots=200, seed=s)
        if abs(est - np.cos(e0 * t)) <= 3 * max(sigma, 1e-6):
            hits += 1
    assert hits / trials >= 0.95


def test_trotter_circuit_hadamard_test(chain6):
    h, e0, gs = chain6
    dec = decompose_anticommuting(h)
    t = 0.125
    circ = controlled_trotter_insertion(dec, t, TrotterPlan(order=2, steps=4))
    re, _ = hadamard_test(circ, gs, "re", shots=None)
    assert re == pytest.approx(np.cos(e0 * t), abs=5e-4)


def test_damping_shrinks_expectation(chain6):
    h, e0, gs = chain6
    dec = decompose_anticommuting(h)
    t = 0.125
    circ = controlled_trotter_insertion(dec, t, TrotterPlan(order=2, steps=2))
    noise = NoiseModel(p2=2e-3, mode=NoiseMode.GLOBAL_DEPOLARIZING)
    from ticc.noise import damping_factor

    lam = damping_factor(circ, noise)
    assert 0 < lam < 1
    re_noisy, _ = hadamard_test(circ, gs, "re", shots=None, noise=noise)
    re_clean, _ = hadamard_test(circ, gs, "re", shots=None)
    assert re_noisy == pytest.approx(lam * re_clean, abs=1e-12)


def test_phase_sample_invariants():
    s = PhaseSample(0.125, 0.6, -0.3, 200, 0.05, 0.05)
    assert s.amplitude == pytest.approx(np.hypot(0.6, 0.3))
    assert s.amplified_sigma_re >= s.sigma_re
    nre, nim = s.normalized()
    assert np.hypot(nre, nim) == pytest.approx(1.0)


def test_phase_curve_fit_recovers_reference_energy():
    e_true = -45.0
    ts = stage_time_grid(-3)
    samples = [
        PhaseSample(t, np.cos(e_true * t), -np.sin(e_true * t), None, 0.0, 0.0)
        for t in ts
    ]
    e_fit, sigma = phase_curve_fit(samples, e0=-44.5)
    assert e_fit == pytest.approx(e_true, abs=1e-8)


def test_phase_fit_sign_convention_negative_energy():
    # noiseless fits must recover E < 0 with the e^{-itE} convention
    e_true = -3.7
    ts = (0.3, 0.35, 0.4, 0.45)
    samples = [
        PhaseSample(t, np.cos(e_true * t), -np.sin(e_true * t), None, 0.0, 0.0)
        for t in ts
    ]
    e_fit, _ = phase_curve_fit(samples, e0=-3.0)
    assert e_fit == pytest.approx(e_true, abs=1e-8)


def test_phase_fit_amplitude_invariance():
    # radial damping leaves E unchanged and scales sigma_E by 1/lambda
    e_true = 2.2
    ts = (0.5, 0.6, 0.7, 0.8)
    sig = 0.05

    def build(lam):
        return [
            PhaseSample(t, lam * np.cos(e_true * t), -lam * np.sin(e_true * t), 200, sig, sig)
            for t in ts
        ]

    e1, s1 = phase_curve_fit(build(1.0), e0=2.0)
    e2, s2 = phase_curve_fit(build(0.5), e0=2.0)
    assert e2 == pytest.approx(e1, abs=1e-10)
    assert s2 == pytest.approx(2 * s1, rel=1e-9)


def test_phase_fit_coverage_under_binomial_noise():
    e_true = -14.3
    oracle = ExactPhaseOracle(e_true)
    ts = stage_time_grid(-3)
    hits = 0
    trials = 100
    for s in range(trials):
        seq = np.random.SeedSequence((s, 1))
        samples = [oracle.sample(t, 200, None, child) for t, child in zip(ts, seq.spawn(len(ts)))]
        e_fit, sigma = phase_curve_fit(samples, e0=e_true + 0.4)
        if abs(e_fit - e_true) <= 3 * sigma:
            hits += 1
    assert hits / trials >= 0.95


def test_candidate_selection_invariant():
    rng = np.random.default_rng(3)
    for _ in range(200):
        k = int(rng.integers(-3, 4))
        e_prev = float(rng.normal(scale=30))
        e_fit = float(rng.normal(scale=30))
        selected, window = select_candidate(e_fit, e_prev, k)
        spacing = 2 * np.pi * 2.0 ** (-k)
        assert abs(selected - e_prev) <= spacing / 2 + 1e-9
        assert selected in window
        assert all(abs(selected - e_prev) <= abs(c - e_prev) + 1e-12 for c in window)


def test_iterative_qpe_exact_oracle_converges():
    e_gs = -20.3
    estimate = iterative_qpe(ExactPhaseOracle(e_gs), e0=-20.0,
                             k_schedule=range(-3, 4), shots=None)
    assert not estimate.terminated
    for record in estimate.history:
        assert abs(record.e_selected - e_gs) <= 2.0 ** (-record.k - 1)
    assert estimate.energy == pytest.approx(e_gs, abs=2.0 ** (-3 - 1))


def test_iterative_qpe_paper_grids():
    est = iterative_qpe(ExactPhaseOracle(-45.0), e0=-45.3,
                        k_schedule=[-3, -2], shots=None)
    assert est.history[0].times == (0.122, 0.124, 0.126, 0.128)
    assert est.history[1].times == (0.22, 0.24, 0.26, 0.28)
    assert est.energy == pytest.approx(-45.0, abs=0.125)


def test_iterative_qpe_termination_rule():
    # depth-dependent damping shrinks the phase amplitude with t, so the
    # amplified error bars eventually exceed 2^{-k-1} and the run stops
    oracle = ExactPhaseOracle(-20.0, amplitude_fn=lambda t: np.exp(-4.0 * abs(t)))
    est = iterative_qpe(oracle, e0=-20.0,
                        k_schedule=[-3, -2, -1, 0, 1, 2, 3, 4], shots=200, seed=5)
    assert est.terminated
    failed = est.history[-1]
    assert failed.sigma_e > failed.threshold
    for record in est.history[:-1]:
        assert record.sigma_e <= record.threshold
    # estimate retained from the last successful stage
    assert est.stage == failed.k


def test_iterative_qpe_with_trotter_circuits(chain6):
    h, e0, gs = chain6
    dec = decompose_anticommuting(h)
    provider = CircuitPhaseProvider(
        lambda t: controlled_trotter_insertion(dec, t, TrotterPlan(order=2, steps=4)), gs
    )
    est = iterative_qpe(provider, e0=round(e0), k_schedule=[-3, -2], shots=None)
    assert not est.terminated
    assert est.energy == pytest.approx(e0, abs=2.0 ** (2 - 1) * 0.05)


def test_prepare_initial_state_product_minus():
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 2.0)
    psi = prepare_initial_state(h)
    minus = np.array([1, -1]) / np.sqrt(2)
    expected = np.kron(np.kron(minus, minus), np.kron(minus, minus))
    assert np.allclose(psi, expected)
    # X_i eigenvalue -1 per site: field term expectation = -g N
    from ticc.pauli import from_sites

    for i in range(4):
        x_i = from_sites(4, {i: "X"}).apply(psi)
        assert np.allclose(x_i, -psi)


def test_prepare_initial_state_validation():
    lat = build_lattice("chain", [4])
    from ticc.hamiltonian import build_heisenberg_field

    with pytest.raises(ValueError):
        prepare_initial_state(build_heisenberg_field(lat, 1, 1, 1))
    with pytest.raises(ValueError):
        prepare_initial_state(build_tfim(lat, -1.0))


def test_initial_state_overlap_grows_with_field():
    lat = build_lattice("chain", [8])
    overlaps = []
    for g in (1.5, 3.0, 8.0):
        h = build_tfim(lat, g)
        _, gs = ground_state(h)
        psi = prepare_initial_state(h)
        overlaps.append(abs(np.vdot(psi, gs)) ** 2)
    assert overlaps[0] < overlaps[1] < overlaps[2]
    assert overlaps[2] > 0.9
