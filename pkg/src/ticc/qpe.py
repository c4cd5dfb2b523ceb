"""Phase estimation: Hadamard tests, iterative digit refinement, QFT variant.

Conventions: the ancilla is qubit 0 (leading); controlled-evolution circuits
implement |0><0| (x) e^{+iHt/2} + |1><1| (x) e^{-iHt/2}, so an eigenstate of
energy E produces the phase e^{-itE}: the real part estimates cos(Et), the
imaginary part (sampled with S^dag on the ancilla) estimates -sin(Et).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, GateOp
from .evolution import exact_evolve
from .hamiltonian import Hamiltonian
from .lsq import nonlinear_least_squares
from .noise import NoiseModel, damping_factor, readout_probability
from .statevector import H_GATE, SDG_GATE, _apply_axes, apply_single_qubit

_MIN_AMPLITUDE = 1e-9

# stage time grids: k=-3 and k=-2 follow the documented protocol; other
# stages reuse the k=-2 relative pattern around 2^k
_FIXED_GRIDS = {
    -3: (0.122, 0.124, 0.126, 0.128),
    -2: (0.22, 0.24, 0.26, 0.28),
}
_RELATIVE_GRID = (0.88, 0.96, 1.04, 1.12)


def stage_time_grid(k: int) -> tuple[float, ...]:
    if k in _FIXED_GRIDS:
        return _FIXED_GRIDS[k]
    return tuple(2.0 ** k * r for r in _RELATIVE_GRID)


@dataclass(frozen=True)
class PhaseSample:
    t: float
    re: float
    im: float
    shots: int | None
    sigma_re: float
    sigma_im: float

    @property
    def amplitude(self) -> float:
        return float(np.hypot(self.re, self.im))

    @property
    def amplified_sigma_re(self) -> float:
        return self.sigma_re / max(self.amplitude, _MIN_AMPLITUDE)

    @property
    def amplified_sigma_im(self) -> float:
        return self.sigma_im / max(self.amplitude, _MIN_AMPLITUDE)

    def normalized(self) -> tuple[float, float]:
        amp = max(self.amplitude, _MIN_AMPLITUDE)
        return self.re / amp, self.im / amp

    def to_dict(self) -> dict:
        return {
            "t": self.t, "re": self.re, "im": self.im, "shots": self.shots,
            "sigma_re": self.sigma_re, "sigma_im": self.sigma_im,
            "amplitude": self.amplitude,
            "amplified_sigma_re": self.amplified_sigma_re,
            "amplified_sigma_im": self.amplified_sigma_im,
        }


def _binomial_estimate(p_read: float, shots: int | None, rng: np.random.Generator | None):
    """Sampled expectation estimate (2 p - 1) with its binomial standard error.

    The error uses the adjusted (Agresti-Coull) success fraction so that
    near-boundary outcomes do not underreport their uncertainty.
    """
    if shots is None:
        return 2.0 * p_read - 1.0, 0.0
    if shots < 1:
        raise ValueError("shots must be >= 1")
    k = int(rng.binomial(shots, min(max(p_read, 0.0), 1.0)))
    p_hat = k / shots
    p_adj = (k + 2.0) / (shots + 4.0)
    sigma = 2.0 * np.sqrt(p_adj * (1.0 - p_adj) / shots)
    return 2.0 * p_hat - 1.0, float(sigma)


def hadamard_test(controlled_circuit: Circuit, system_state: np.ndarray, part: str,
                  shots: int | None, noise: NoiseModel | None = None,
                  seed: int | np.random.SeedSequence = 0) -> tuple[float, float]:
    """One Hadamard-test component (estimate, binomial sigma).

    The ancilla starts in |+>, the controlled circuit is applied, S^dag
    precedes the final Hadamard for the imaginary part, and the ancilla is
    read in the Z basis. Depolarizing noise damps the expectation before
    binomial sampling; readout flips act on the outcome probability.
    """
    if part not in ("re", "im"):
        raise ValueError("part must be 're' or 'im'")
    noise = noise or NoiseModel()
    n_total = controlled_circuit.n
    dim_sys = 2 ** (n_total - 1)
    if system_state.shape[0] != dim_sys:
        raise ValueError("system state size does not match circuit")
    state = np.concatenate([system_state, system_state]) / np.sqrt(2.0)
    state = controlled_circuit.apply(state)
    if part == "im":
        state = apply_single_qubit(state, SDG_GATE, 0, n_total)
    state = apply_single_qubit(state, H_GATE, 0, n_total)
    p0 = float(np.sum(np.abs(state[:dim_sys]) ** 2))
    x_true = 2.0 * p0 - 1.0
    lam = damping_factor(controlled_circuit, noise)
    p_damped = (1.0 + lam * x_true) / 2.0
    p_read = readout_probability(p_damped, noise)
    rng = None if shots is None else np.random.default_rng(seed)
    return _binomial_estimate(p_read, shots, rng)


def measure_phase(controlled_circuit: Circuit, system_state: np.ndarray, t: float,
                  shots: int | None, noise: NoiseModel | None = None,
                  seed: int | np.random.SeedSequence = 0) -> PhaseSample:
    """Both Hadamard-test components bundled into a PhaseSample."""
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    s_re, s_im = seq.spawn(2)
    re, sigma_re = hadamard_test(controlled_circuit, system_state, "re", shots, noise, s_re)
    im, sigma_im = hadamard_test(controlled_circuit, system_state, "im", shots, noise, s_im)
    return PhaseSample(t, re, im, shots, sigma_re, sigma_im)


def phase_curve_fit(samples: list[PhaseSample], e0: float | None = None) -> tuple[float, float]:
    """Joint weighted fit re ~ cos(E t), im ~ -sin(E t) on unit-circle-projected samples.

    Amplified sigmas act as absolute weights, so uniform amplitude damping
    leaves E_fit unchanged and scales sigma_E by the inverse amplitude.
    """
    if len(samples) < 2 or len({s.t for s in samples}) < 2:
        raise ValueError("need samples at >= 2 distinct times")
    ts = np.array([s.t for s in samples])
    normalized = np.array([s.normalized() for s in samples])
    ys = np.concatenate([normalized[:, 0], normalized[:, 1]])
    flags = np.concatenate([np.zeros(len(samples)), np.ones(len(samples))])
    xs = np.vstack([np.concatenate([ts, ts]), flags])
    sigmas = np.array(
        [s.amplified_sigma_re for s in samples] + [s.amplified_sigma_im for s in samples]
    )
    weighted = bool(np.all(sigmas > 0))

    def model(x, energy):
        t, flag = x
        return np.where(flag > 0.5, -np.sin(energy * t), np.cos(energy * t))

    if e0 is None:
        # phase angle of the first sample: re + i im = e^{-i E t}
        s = samples[0]
        e0 = -np.arctan2(s.im, s.re) / s.t
    fit = nonlinear_least_squares(model, [float(e0)], xs, ys, sigmas if weighted else None)
    if fit.singular:
        raise RuntimeError("degenerate phase fit: singular information matrix")
    return float(fit.params[0]), float(fit.param_sigmas[0])


@dataclass(frozen=True)
class StageRecord:
    k: int
    times: tuple[float, ...]
    e_fit: float
    sigma_e: float
    e_selected: float
    threshold: float
    ok: bool
    candidates: tuple[float, ...]
    samples: tuple[PhaseSample, ...]

    def to_dict(self) -> dict:
        return {
            "k": self.k, "times": list(self.times), "e_fit": self.e_fit,
            "sigma_e": self.sigma_e, "e_selected": self.e_selected,
            "threshold": self.threshold, "ok": self.ok,
            "candidates": list(self.candidates),
            "samples": [s.to_dict() for s in self.samples],
        }


@dataclass
class EnergyEstimate:
    energy: float
    sigma: float
    stage: int
    terminated: bool
    history: list[StageRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "energy": self.energy, "sigma": self.sigma, "stage": self.stage,
            "terminated": self.terminated,
            "history": [h.to_dict() for h in self.history],
        }


def select_candidate(e_fit: float, e_prev: float, k: int) -> tuple[float, tuple[float, ...]]:
    """Among the 2 pi 2^{-k}-periodic translations of e_fit, pick the one
    nearest the previous estimate; also return a window of candidates."""
    period = 2.0 * np.pi * 2.0 ** (-k)
    j_star = int(np.round((e_prev - e_fit) / period))
    selected = e_fit + period * j_star
    window = tuple(e_fit + period * (j_star + off) for off in (-2, -1, 0, 1, 2))
    return selected, window


class ExactPhaseOracle:
    """Deterministic phase source e^{-i t E}; the arithmetic-only provider.

    ``amplitude_fn(t)`` models depth-dependent depolarizing damping of the
    phase amplitude (1.0 when omitted).
    """

    def __init__(self, energy: float, amplitude_fn=None):
        self.energy = energy
        self.amplitude_fn = amplitude_fn

    def sample(self, t: float, shots, noise, seed) -> PhaseSample:
        phase = np.exp(-1j * t * self.energy)
        lam = 1.0 if self.amplitude_fn is None else float(self.amplitude_fn(t))
        rng_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        r_re, r_im = rng_seq.spawn(2)
        re, s_re = _binomial_estimate((1 + lam * phase.real) / 2, shots,
                                      None if shots is None else np.random.default_rng(r_re))
        im, s_im = _binomial_estimate((1 + lam * phase.imag) / 2, shots,
                                      None if shots is None else np.random.default_rng(r_im))
        return PhaseSample(t, re, im, shots, s_re, s_im)


class StateOverlapOracle:
    """Noiseless expectation <psi0| e^{-itH} |psi0> with optional shot noise."""

    def __init__(self, hamiltonian: Hamiltonian, psi0: np.ndarray):
        self.hamiltonian = hamiltonian
        self.psi0 = psi0

    def sample(self, t: float, shots, noise, seed) -> PhaseSample:
        overlap = np.vdot(self.psi0, exact_evolve(self.hamiltonian, t, self.psi0))
        rng_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        r_re, r_im = rng_seq.spawn(2)
        re, s_re = _binomial_estimate((1 + overlap.real) / 2, shots,
                                      None if shots is None else np.random.default_rng(r_re))
        im, s_im = _binomial_estimate((1 + overlap.imag) / 2, shots,
                                      None if shots is None else np.random.default_rng(r_im))
        return PhaseSample(t, re, im, shots, s_re, s_im)


class CircuitPhaseProvider:
    """Hadamard tests on controlled circuits built per evolution time."""

    def __init__(self, circuit_factory, psi0: np.ndarray):
        self.circuit_factory = circuit_factory
        self.psi0 = psi0

    def sample(self, t: float, shots, noise, seed) -> PhaseSample:
        circuit = self.circuit_factory(t)
        return measure_phase(circuit, self.psi0, t, shots, noise, seed)


def iterative_qpe(provider, e0: float, k_schedule, shots: int | None,
                  noise: NoiseModel | None = None, seed: int = 0,
                  grids: dict[int, tuple[float, ...]] | None = None) -> EnergyEstimate:
    """Digit-by-digit energy estimation with phase-curve fits per stage.

    Per stage k: measure phases on the stage's time grid, fit E, select the
    2 pi 2^{-k}-periodic candidate nearest the previous estimate, and stop
    (terminated=True) as soon as the fit uncertainty exceeds 2^{-k-1}.
    Assumes |E_true - e0| <= 2^{-k0} for the first stage k0.
    """
    noise = noise or NoiseModel()
    seq = np.random.SeedSequence(seed)
    history: list[StageRecord] = []
    e_prev = float(e0)
    sigma_prev = float("nan")
    terminated = False
    last_k = None
    for stage_idx, k in enumerate(k_schedule):
        ts = tuple((grids or {}).get(k) or stage_time_grid(k))
        stage_seed = np.random.SeedSequence(entropy=seq.entropy, spawn_key=(stage_idx,))
        sample_seeds = stage_seed.spawn(len(ts))
        samples = tuple(
            provider.sample(t, shots, noise, s) for t, s in zip(ts, sample_seeds)
        )
        e_fit, sigma_e = phase_curve_fit(list(samples), e0=e_prev)
        e_sel, candidates = select_candidate(e_fit, e_prev, k)
        threshold = 2.0 ** (-k - 1)
        ok = sigma_e <= threshold
        history.append(StageRecord(k, ts, e_fit, sigma_e, e_sel, threshold, ok, candidates, samples))
        last_k = k
        if not ok:
            terminated = True
            break
        e_prev = e_sel
        sigma_prev = sigma_e
    return EnergyEstimate(e_prev, sigma_prev, last_k if last_k is not None else 0,
                          terminated, history)


def prepare_initial_state(hamiltonian: Hamiltonian) -> np.ndarray:
    """Product state (|0>-|1>)/sqrt(2) per site: the strong-field TFIM ground state.

    Single-qubit preparation only; requires a transverse-field Ising model
    with positive field strength.
    """
    if hamiltonian.kind != "tfim":
        raise ValueError("initial-state shortcut is defined for the TFIM only")
    (g,) = hamiltonian.params
    if g <= 0:
        raise ValueError("field strength must be positive")
    n = hamiltonian.n
    idx = np.arange(2 ** n)
    parity = np.zeros(2 ** n)
    for bit in range(n):
        parity += (idx >> bit) & 1
    return ((-1.0) ** parity) / np.sqrt(2.0 ** n)


def _apply_ancilla_register_op(state: np.ndarray, op: np.ndarray, n_anc: int) -> np.ndarray:
    psi = state.reshape(2 ** n_anc, -1)
    return (op @ psi).reshape(-1)


def _inverse_qft(m: int) -> np.ndarray:
    x = np.arange(2 ** m)
    qft = np.exp(2j * np.pi * np.outer(x, x) / 2 ** m) / np.sqrt(2 ** m)
    return qft.conj().T


@dataclass
class QftQpeResult:
    ancilla_probabilities: np.ndarray
    ancilla_counts: dict[int, int]
    selected_outcome: int
    post_selected_fraction: float
    x_expectation: float | None
    x_sigma: float | None
    zz_correlations: dict[int, float]
    damping: float

    def to_dict(self) -> dict:
        return {
            "ancilla_probabilities": [float(p) for p in self.ancilla_probabilities],
            "ancilla_counts": {str(k): v for k, v in self.ancilla_counts.items()},
            "selected_outcome": self.selected_outcome,
            "post_selected_fraction": self.post_selected_fraction,
            "x_expectation": self.x_expectation,
            "x_sigma": self.x_sigma,
            "zz_correlations": {str(k): v for k, v in self.zz_correlations.items()},
            "damping": self.damping,
        }


def qft_qpe_state(hamiltonian: Hamiltonian, psi0: np.ndarray, n_anc: int, t0: float,
                  construction: str = "direction_switch",
                  circuit_factory=None) -> tuple[np.ndarray, Circuit]:
    """State after ancilla Hadamards, controlled blocks, and inverse QFT.

    ``direction_switch`` applies |0><0| e^{+iH tau} + |1><1| e^{-iH tau} with
    tau = t0 2^{k-1} per ancilla; ``controlled_u`` applies the textbook
    |0><0| I + |1><1| e^{-iH t0 2^k}. A circuit_factory(t) overrides the
    exact branches with concrete controlled circuits (ancilla qubit 0).
    Returns the final state and a bookkeeping circuit for noise accounting.
    """
    if n_anc < 1:
        raise ValueError("need at least one ancilla")
    n_sys = hamiltonian.n
    n_total = n_anc + n_sys
    dim_anc = 2 ** n_anc
    # Hadamards on all ancillae: uniform ancilla superposition over psi0
    state = np.tile(psi0.astype(complex) / np.sqrt(dim_anc), (dim_anc, 1))
    bookkeeping = Circuit(n_total)
    for a in range(n_anc):
        power = n_anc - 1 - a  # ancilla a carries phase bit 2^power
        if construction == "direction_switch":
            tau = t0 * 2.0 ** (power - 1)
            times = (-tau, tau)
        elif construction == "controlled_u":
            times = (0.0, t0 * 2.0 ** power)
        else:
            raise ValueError(f"unknown construction {construction}")
        if circuit_factory is None:
            evolved = np.empty_like(state)
            for anc_idx in range(dim_anc):
                branch = (anc_idx >> (n_anc - 1 - a)) & 1
                evolved[anc_idx] = exact_evolve(hamiltonian, times[branch], state[anc_idx]) \
                    if times[branch] != 0 else state[anc_idx]
            state = evolved
        else:
            circ = circuit_factory(t0 * 2.0 ** power)
            flat = state.reshape(-1)
            remapped = Circuit(n_total)
            for op in circ.ops:
                sites = tuple(s - 1 + n_anc for s in op.sites)
                control = a if op.control is not None else None
                remapped.append(GateOp(op.matrix, sites, control=control,
                                       label=op.label, angle=op.angle, gamma_d=op.gamma_d))
            flat = remapped.apply(flat)
            bookkeeping.extend(remapped.ops)
            state = flat.reshape(dim_anc, -1)
    flat = state.reshape(-1)
    flat = _apply_ancilla_register_op(flat, _inverse_qft(n_anc), n_anc)
    # inverse QFT accounting: m(m-1)/2 controlled-phase gates + m Hadamards
    for a in range(n_anc):
        bookkeeping.append(GateOp(H_GATE, (a,), label="qft:h"))
        for b in range(a + 1, n_anc):
            bookkeeping.append(GateOp(np.eye(4, dtype=complex), (a, b), label="qft:cp"))
    return flat, bookkeeping


def ancilla_distribution(state: np.ndarray, n_anc: int) -> np.ndarray:
    probs = np.abs(state.reshape(2 ** n_anc, -1)) ** 2
    return probs.sum(axis=1)


def qft_qpe(hamiltonian: Hamiltonian, psi0: np.ndarray, n_anc: int, t0: float,
            shots: int = 2000, noise: NoiseModel | None = None, seed: int = 0,
            circuit_factory=None) -> QftQpeResult:
    """QFT-based phase estimation with projected system-observable sampling.

    Samples the joint (ancilla, system) distribution per basis, post-selects
    on the most probable ancilla outcome, and estimates the site-averaged X
    expectation (X basis) and translation-averaged ZZ correlations (Z basis).
    """
    noise = noise or NoiseModel()
    state, bookkeeping = qft_qpe_state(hamiltonian, psi0, n_anc, t0,
                                       circuit_factory=circuit_factory)
    n_sys = hamiltonian.n
    n_total = n_anc + n_sys
    lam = damping_factor(bookkeeping, noise)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    anc_probs = ancilla_distribution(state, n_anc)

    def joint_distribution(basis: str) -> np.ndarray:
        psi = state
        if basis == "X":
            psi = psi.reshape([2] * n_total)
            for q in range(n_anc, n_total):
                psi = _apply_axes(psi, H_GATE, (q,), n_total)
            psi = psi.reshape(-1)
        else:
            psi = psi.reshape(-1)
        probs = np.abs(psi) ** 2
        probs = probs / probs.sum()
        if not noise.off:
            probs = lam * probs + (1.0 - lam) / probs.size
        return probs

    def sample_bits(probs: np.ndarray, n_shots: int) -> np.ndarray:
        outcomes = rng.choice(probs.size, size=n_shots, p=probs)
        bits = ((outcomes[:, None] >> np.arange(n_total - 1, -1, -1)) & 1).astype(np.int8)
        if not noise.off and (noise.meas_flip0 > 0 or noise.meas_flip1 > 0):
            flips0 = rng.random(bits.shape) < noise.meas_flip0
            flips1 = rng.random(bits.shape) < noise.meas_flip1
            bits = np.where(bits == 0, np.where(flips0, 1, 0), np.where(flips1, 0, 1)).astype(np.int8)
        return bits

    x_bits = sample_bits(joint_distribution("X"), shots)
    z_bits = sample_bits(joint_distribution("Z"), shots)

    anc_counts: dict[int, int] = {}
    anc_values = (x_bits[:, :n_anc] * (1 << np.arange(n_anc - 1, -1, -1))).sum(axis=1)
    for v in anc_values:
        anc_counts[int(v)] = anc_counts.get(int(v), 0) + 1
    selected = int(np.argmax(anc_probs))

    keep_x = x_bits[anc_values == selected]
    if keep_x.shape[0] > 0:
        per_shot = 1.0 - 2.0 * keep_x[:, n_anc:].mean(axis=1)
        x_expectation = float(per_shot.mean())
        x_sigma = float(per_shot.std(ddof=1) / np.sqrt(keep_x.shape[0])) if keep_x.shape[0] > 1 else None
    else:
        x_expectation = None
        x_sigma = None

    z_anc_values = (z_bits[:, :n_anc] * (1 << np.arange(n_anc - 1, -1, -1))).sum(axis=1)
    keep_z = z_bits[z_anc_values == selected]
    zz: dict[int, float] = {}
    if keep_z.shape[0] > 0:
        spins = 1.0 - 2.0 * keep_z[:, n_anc:]
        for r in range(1, n_sys // 2 + 1):
            corr = np.mean([
                np.mean(spins[:, i] * spins[:, (i + r) % n_sys]) for i in range(n_sys)
            ])
            zz[r] = float(corr)
    return QftQpeResult(
        anc_probs, anc_counts, selected,
        float(keep_x.shape[0]) / shots if shots else 0.0,
        x_expectation, x_sigma, zz, lam,
    )
