import numpy as np
import pytest

from ticc.evolution import exact_unitary
from ticc.hamiltonian import build_heisenberg_field, build_tfim, decompose_anticommuting
from ticc.lattice import build_lattice
from ticc.trotter import TrotterPlan, controlled_trotter_insertion, trotter_circuit


def spectral(a):
    return np.linalg.norm(a, 2)


def test_plan_validation():
    with pytest.raises(ValueError):
        TrotterPlan(order=3)
    with pytest.raises(ValueError):
        TrotterPlan(order=2, steps=0)
    plan = TrotterPlan(order=2, dt=0.0625)
    assert plan.resolve_steps(0.125) == 2
    with pytest.raises(ValueError):
        plan.resolve_steps(0.1)


def test_t0_identity():
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 2.0)
    circ = trotter_circuit(h, 0.0, TrotterPlan(order=2, steps=1))
    assert len(circ) == 0
    assert np.allclose(circ.unitary(), np.eye(16))


def test_commuting_parts_first_order_exact():
    # pure ZZ chain: bond groups commute, so p=1 with one step is exact
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 0.0)
    t = 0.7
    w = trotter_circuit(h, t, TrotterPlan(order=1, steps=1)).unitary()
    assert spectral(exact_unitary(h, t) - w) < 1e-12


def test_second_order_error_halving_ratio():
    lat = build_lattice("chain", [6])
    h = build_tfim(lat, 3.0)
    t = 0.25
    u = exact_unitary(h, t)
    errs = {}
    for steps in (2, 4):
        w = trotter_circuit(h, t, TrotterPlan(order=2, steps=steps)).unitary()
        errs[steps] = spectral(u - w)
    ratio = errs[2] / errs[4]
    assert 3.0 <= ratio <= 5.0  # ~2^p for p=2


@pytest.mark.parametrize("order,lo,hi", [(1, 0.5, 1.5), (2, 1.5, 2.5), (4, 3.5, 4.5)])
def test_empirical_convergence_rate(order, lo, hi):
    lat = build_lattice("chain", [6])
    h = build_heisenberg_field(lat, 3.0, -1.0, 1.0)
    t = 0.4
    u = exact_unitary(h, t)
    errs = []
    steps_list = (2, 4, 8)
    for steps in steps_list:
        w = trotter_circuit(h, t, TrotterPlan(order=order, steps=steps)).unitary()
        errs.append(spectral(u - w))
    rates = np.diff(np.log(errs)) / np.diff(np.log([t / s for s in steps_list]))
    assert lo <= np.mean(rates) <= hi


def test_decomposition_grouping_matches_hamiltonian():
    lat = build_lattice("chain", [6])
    h = build_heisenberg_field(lat, 3.0, -1.0, 1.0)
    dec = decompose_anticommuting(h)
    t = 0.125
    u = exact_unitary(h, t)
    err2 = spectral(u - trotter_circuit(dec, t, TrotterPlan(order=2, steps=2)).unitary())
    err8 = spectral(u - trotter_circuit(dec, t, TrotterPlan(order=2, steps=8)).unitary())
    assert err2 < 0.1
    assert err2 / err8 > 10  # second order: 4x steps -> ~16x error drop


def test_single_part_insertion_flips_branch():
    # C[K] (I x e^{+iH1 tau}) C[K]: ancilla-1 branch becomes e^{-iH1 tau}
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 1.5)
    dec = decompose_anticommuting(h)
    t = 0.3
    circ = controlled_trotter_insertion(dec, t, TrotterPlan(order=2, steps=1))
    dense = circ.unitary()
    dim = 16
    branch0 = dense[:dim, :dim]
    branch1 = dense[dim:, dim:]
    assert spectral(dense[:dim, dim:]) < 1e-12  # block diagonal
    assert spectral(dense[dim:, :dim]) < 1e-12
    # branch structure: backward on |0>, forward on |1>, same Trotter error
    base = trotter_circuit(dec, t / 2, TrotterPlan(order=2, steps=1), sign=-1.0).unitary()
    assert spectral(branch0 - base) < 1e-12
    err_fwd = spectral(branch1 - exact_unitary(h, t / 2))
    err_bwd = spectral(branch0 - exact_unitary(h, -t / 2))
    assert err_fwd == pytest.approx(err_bwd, rel=1e-6)


def test_insertion_dense_equality_two_branch_target():
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 1.5)
    dec = decompose_anticommuting(h)
    t, dt = 0.125, 0.125
    circ = controlled_trotter_insertion(dec, t, TrotterPlan(order=2, dt=dt))
    dense = circ.unitary()
    target = (
        np.kron(np.diag([1.0, 0.0]), exact_unitary(h, -t / 2))
        + np.kron(np.diag([0.0, 1.0]), exact_unitary(h, t / 2))
    )
    uncontrolled_err = spectral(
        trotter_circuit(dec, t / 2, TrotterPlan(order=2, steps=1)).unitary() - exact_unitary(h, t / 2)
    )
    assert spectral(dense - target) <= 2 * uncontrolled_err + 1e-12


def test_controlled_gate_count_formula_first_order():
    # 2 insertions per sub-Hamiltonian block occurrence, N/2 gates each
    lat = build_lattice("chain", [6])
    h = build_heisenberg_field(lat, 3.0, -1.0, 1.0)
    dec = decompose_anticommuting(h)
    for steps in (1, 2, 3):
        circ = controlled_trotter_insertion(dec, 0.12, TrotterPlan(order=1, steps=steps))
        expected = 2 * dec.eta * dec.d * steps * (lat.n_sites // 2)
        assert circ.controlled_count() == expected
        # bulk depth doesn't change the controlled count
        finer = controlled_trotter_insertion(dec, 0.12, TrotterPlan(order=1, steps=steps))
        assert finer.controlled_count() == expected


def test_insertion_heisenberg_multi_part():
    lat = build_lattice("chain", [4])
    h = build_heisenberg_field(lat, 3.0, -1.0, 1.0)
    dec = decompose_anticommuting(h)
    t = 0.125
    circ = controlled_trotter_insertion(dec, t, TrotterPlan(order=2, steps=2))
    dense = circ.unitary()
    target = (
        np.kron(np.diag([1.0, 0.0]), exact_unitary(h, -t / 2))
        + np.kron(np.diag([0.0, 1.0]), exact_unitary(h, t / 2))
    )
    assert spectral(dense - target) < 5e-3


def test_zzphase_angle_tags():
    lat = build_lattice("chain", [4])
    h = build_tfim(lat, 0.0)  # pure ZZ bonds -> every gate a ZZPhase
    circ = trotter_circuit(h, 0.3, TrotterPlan(order=1, steps=1))
    from ticc.statevector import zzphase

    assert all(op.angle is not None for op in circ.ops)
    for op in circ.ops:
        assert np.allclose(op.matrix, zzphase(op.angle))
